import os
import shutil
import tempfile
import unittest

from spectralhmm.config import (
    parse_int_list, resolve_run_config, load_config_file, DEFAULT_SWEEP_NS, AUTO_RANK_THRESHOLD,
)
from spectralhmm.errors import ConfigError


class TestParseIntList(unittest.TestCase):

    def test_forms(self):
        self.assertEqual(parse_int_list("100,1000", "ns"), (100, 1000))
        self.assertEqual(parse_int_list("0-3", "seeds"), (0, 1, 2, 3))
        self.assertEqual(parse_int_list([5, 6], "seeds"), (5, 6))
        self.assertEqual(parse_int_list(7, "seeds"), (7,))

    def test_errors(self):
        for raw in ("", "a,b", "5-2", "1-x"):
            with self.assertRaises(ConfigError, msg=raw):
                parse_int_list(raw, "seeds")


class TestResolveRunConfig(unittest.TestCase):

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()
        self.config_path = os.path.join(self.tmpdir, "run.yaml")

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def _write(self, text):
        with open(self.config_path, "w") as f:
            f.write(text)

    def test_defaults(self):
        config = resolve_run_config("sweep", {"hmm": "hmm.json", "count": None})
        self.assertEqual(config.sweep_ns, DEFAULT_SWEEP_NS)
        self.assertEqual(config.auto_rank_threshold, AUTO_RANK_THRESHOLD)
        self.assertEqual(config.count, 100)
        self.assertEqual(config.mode, "heads")

    def test_flags_override_file(self):
        self._write("count: 5\nlength: 4\nsweep_seeds: 0-2\nmode: sliding\n")
        config = resolve_run_config("gen", {"count": 7, "length": None}, self.config_path)
        self.assertEqual(config.count, 7)
        self.assertEqual(config.length, 4)
        self.assertEqual(config.sweep_seeds, (0, 1, 2))
        self.assertEqual(config.mode, "sliding")

    def test_unknown_key(self):
        self._write("count: 5\nout: somewhere.txt\n")
        with self.assertRaises(ConfigError):
            load_config_file(self.config_path)

    def test_bad_yaml(self):
        self._write("count: [1, 2\n")
        with self.assertRaises(ConfigError):
            load_config_file(self.config_path)

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            load_config_file(os.path.join(self.tmpdir, "missing.yaml"))

    def test_validation(self):
        with self.assertRaises(ConfigError):
            resolve_run_config("learn", {"mode": "everything"})
        with self.assertRaises(ConfigError):
            resolve_run_config("learn", {"m": 0})
        with self.assertRaises(ConfigError):
            resolve_run_config("sweep", {"sweep_ns": "0,10"})
        with self.assertRaises(ConfigError):
            resolve_run_config("learn", {"pinv_cutoff": -1.0})


if __name__ == "__main__":
    unittest.main()

import io
import json
import os
import shutil
import tempfile
import unittest

import numpy as np

from spectralhmm import storage
from spectralhmm.errors import FormatError, FileUnreadable, AlphabetMismatch, SymbolOutOfRange, ZeroPriorEntry
from spectralhmm.hmm import exact_moments, sample_sequences
from spectralhmm.moments import estimate_moments
from spectralhmm.spectral import learn_psr
from tests.helpers import sticky_hmm, hmm_dict


class TestCorpusFormat(unittest.TestCase):

    def test_read_with_header(self):
        corpus = storage.read_corpus(["#n=3\n", "1 2 3\n", "\n", "3 3\n"])
        self.assertEqual(corpus.n, 3)
        self.assertEqual([list(s) for s in corpus.sequences], [[0, 1, 2], [2, 2]])

    def test_read_without_header_needs_n(self):
        with self.assertRaises(FormatError):
            storage.read_corpus(["1 2 1\n"])
        corpus = storage.read_corpus(["1 2 1\n"], n=2)
        self.assertEqual(corpus.n, 2)

    def test_header_conflict(self):
        with self.assertRaises(AlphabetMismatch):
            storage.read_corpus(["#n=3\n", "1 2 1\n"], n=2)

    def test_bad_tokens(self):
        with self.assertRaises(SymbolOutOfRange):
            storage.read_corpus(["#n=2\n", "1 3\n"])
        with self.assertRaises(SymbolOutOfRange):
            storage.read_corpus(["#n=2\n", "0 1\n"])
        with self.assertRaises(FormatError):
            storage.read_corpus(["#n=2\n", "1 a\n"])

    def test_write_then_read(self):
        corpus = sample_sequences(sticky_hmm(), 20, 5, seed=1)
        buffer = io.StringIO()
        storage.write_corpus(corpus, buffer)
        text = buffer.getvalue()
        self.assertTrue(text.startswith("#n=4\n"))
        self.assertNotIn(" 0", " " + text.split("\n", 1)[1])
        again = storage.read_corpus(io.StringIO(text))
        np.testing.assert_array_equal(np.stack(again.sequences), np.stack(corpus.sequences))


class TestJsonFiles(unittest.TestCase):

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def _path(self, name):
        return os.path.join(self.tmpdir, name)

    def test_hmm_file(self):
        path = self._path("hmm.json")
        storage.save_hmm(sticky_hmm(), path)
        loaded = storage.load_hmm(path)
        np.testing.assert_array_equal(loaded.O, sticky_hmm().O)

    def test_invalid_hmm_file(self):
        path = self._path("bad.json")
        data = hmm_dict(sticky_hmm())
        data["pi"] = [1.0, 0.0]
        with open(path, "w") as f:
            json.dump(data, f)
        with self.assertRaises(ZeroPriorEntry):
            storage.load_hmm(path)

    def test_declared_size_mismatch(self):
        path = self._path("bad.json")
        data = hmm_dict(sticky_hmm())
        data["n"] = 5
        with open(path, "w") as f:
            json.dump(data, f)
        with self.assertRaises(FormatError):
            storage.load_hmm(path)

    def test_not_json(self):
        path = self._path("bad.json")
        with open(path, "w") as f:
            f.write("{not json")
        with self.assertRaises(FormatError):
            storage.load_hmm(path)

    def test_moments_file_keeps_values_and_provenance(self):
        moments = estimate_moments(sample_sequences(sticky_hmm(), 500, 3, seed=2))
        path = self._path("moments.json")
        storage.save_moments(moments, path)
        loaded = storage.load_moments(path)
        np.testing.assert_array_equal(loaded.P3, moments.P3)
        self.assertEqual(loaded.provenance, moments.provenance)

    def test_model_file_is_value_exact(self):
        model = learn_psr(exact_moments(sticky_hmm()), 2)
        path = self._path("model.json")
        storage.save_model(model, path)
        loaded = storage.load_model(path)
        np.testing.assert_array_equal(loaded.B, model.B)
        np.testing.assert_array_equal(loaded.U, model.U)
        np.testing.assert_array_equal(loaded.singular_values, model.singular_values)
        self.assertEqual(loaded.provenance.kind, "from_exact_moments")

    def test_missing_file(self):
        with self.assertRaises(FileUnreadable):
            storage.load_hmm(self._path("nope.json"))
        with self.assertRaises(FileUnreadable):
            storage.load_corpus(self._path("nope.txt"))

    def test_corpus_not_utf8(self):
        path = self._path("binary.txt")
        with open(path, "wb") as f:
            f.write(b"#n=2\n1 \xff 2\n")
        with self.assertRaises(FormatError):
            storage.load_corpus(path)

    def test_non_integer_declared_size(self):
        path = self._path("bad.json")
        for value in ("two", 2.5, True):
            data = hmm_dict(sticky_hmm())
            data["m"] = value
            with open(path, "w") as f:
                json.dump(data, f)
            with self.assertRaises(FormatError):
                storage.load_hmm(path)

    def test_moments_are_checked_on_load(self):
        good = storage.moments_to_dict(exact_moments(sticky_hmm()))
        path = self._path("moments.json")
        cases = {
            "n": "four",
            "P1": [float("nan"), 0.5, 0.25, 0.25],
            "P21": (np.ones((4, 4)) / 8).tolist(),
            "P3": (-np.ones((4, 4, 4)) / 64).tolist(),
            "provenance": "empirical",
        }
        for key, value in cases.items():
            data = dict(good, **{key: value})
            with open(path, "w") as f:
                json.dump(data, f)
            with self.assertRaises(FormatError, msg=key):
                storage.load_moments(path)

    def test_check_moments_accepts_exact_moments(self):
        storage.check_moments(exact_moments(sticky_hmm()))

    def test_model_with_nan(self):
        data = storage.model_to_dict(learn_psr(exact_moments(sticky_hmm()), 2))
        data["b1"] = [float("nan"), 0.0]
        with self.assertRaises(FormatError):
            storage.model_from_dict(data)

    def test_model_shape_mismatch(self):
        model = learn_psr(exact_moments(sticky_hmm()), 2)
        data = storage.model_to_dict(model)
        data["m"] = 3
        with self.assertRaises(FormatError):
            storage.model_from_dict(data)


class TestFormatFloat(unittest.TestCase):

    def test_seventeen_digits(self):
        self.assertEqual(storage.format_float(0.1), "0.10000000000000001")
        self.assertEqual(float(storage.format_float(1 / 3)), 1 / 3)


if __name__ == "__main__":
    unittest.main()

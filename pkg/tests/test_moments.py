import unittest

import numpy as np

from spectralhmm.errors import EmptyCorpus, NoTriples, AlphabetMismatch, ConfigError, DivisionByZeroGuard
from spectralhmm.hmm import SequenceCorpus, exact_moments, sample_sequences
from spectralhmm.moments import (
    TripleCounts, count_triples, merge_counts, normalize_counts, estimate_moments, unseen_symbols,
)
from tests.helpers import sticky_hmm


class TestCountTriples(unittest.TestCase):

    def setUp(self):
        self.corpus = SequenceCorpus.from_lists(2, [[0, 1, 1], [1, 0, 1, 0]])

    def test_heads_counts(self):
        counts = count_triples(self.corpus, "heads")
        np.testing.assert_array_equal(counts.c1, [1, 1])
        # c21[x2, x1]
        np.testing.assert_array_equal(counts.c21, [[0, 1], [1, 0]])
        self.assertEqual(counts.c3[1, 1, 0], 1)   # (x1, x2, x3) = (0, 1, 1)
        self.assertEqual(counts.c3[0, 1, 1], 1)   # (1, 0, 1)
        self.assertEqual(counts.c3.sum(), 2)
        self.assertEqual((counts.total_firsts, counts.total_pairs, counts.total_triples), (2, 2, 2))

    def test_sliding_counts(self):
        counts = count_triples(self.corpus, "sliding")
        self.assertEqual((counts.total_firsts, counts.total_pairs, counts.total_triples), (7, 5, 3))
        np.testing.assert_array_equal(counts.c1, [3, 4])
        self.assertEqual(counts.c21.sum(), 5)
        self.assertEqual(counts.c3[0, 1, 1], 1)   # (1, 0, 1)
        self.assertEqual(counts.c3[1, 0, 0], 1)   # (0, 1, 0)

    def test_short_sequences_contribute_prefixes(self):
        corpus = SequenceCorpus.from_lists(2, [[0], [1, 1], [0, 0, 1]])
        counts = count_triples(corpus, "heads")
        self.assertEqual((counts.total_firsts, counts.total_pairs, counts.total_triples), (3, 2, 1))

    def test_empty_corpus(self):
        with self.assertRaises(EmptyCorpus):
            count_triples(SequenceCorpus(2, ()), "heads")

    def test_no_triples(self):
        with self.assertRaises(NoTriples):
            count_triples(SequenceCorpus.from_lists(2, [[0, 1], [1]]), "heads")

    def test_unknown_mode(self):
        with self.assertRaises(ConfigError):
            count_triples(self.corpus, "everything")


class TestMergeAndNormalize(unittest.TestCase):

    def test_merge_is_concatenation(self):
        params = sticky_hmm()
        a = sample_sequences(params, 300, 3, seed=1)
        b = sample_sequences(params, 200, 3, seed=2)
        merged = count_triples(a) + count_triples(b)
        whole = count_triples(SequenceCorpus(params.n, a.sequences + b.sequences))
        np.testing.assert_array_equal(merged.c3, whole.c3)
        np.testing.assert_array_equal(merged.c21, whole.c21)
        self.assertEqual(merged.total_triples, 500)

    def test_merge_rejects_mismatch(self):
        small = count_triples(SequenceCorpus.from_lists(2, [[0, 1, 0]]))
        large = count_triples(SequenceCorpus.from_lists(3, [[0, 1, 2]]))
        with self.assertRaises(AlphabetMismatch):
            merge_counts(small, large)
        sliding = count_triples(SequenceCorpus.from_lists(2, [[0, 1, 0]]), "sliding")
        with self.assertRaises(ConfigError):
            merge_counts(small, sliding)

    def test_normalize_zero_totals(self):
        n = 2
        zero = TripleCounts(n, "heads", np.zeros(n, int), np.zeros((n, n), int), np.zeros((n, n, n), int), 0, 0, 0)
        with self.assertRaises(DivisionByZeroGuard):
            normalize_counts(zero)

    def test_estimates_sum_to_one(self):
        moments = estimate_moments(sample_sequences(sticky_hmm(), 1000, 5, seed=4), "sliding")
        self.assertAlmostEqual(moments.P1.sum(), 1.0, places=12)
        self.assertAlmostEqual(moments.P21.sum(), 1.0, places=12)
        self.assertAlmostEqual(moments.P3.sum(), 1.0, places=12)
        self.assertEqual(moments.provenance.kind, "empirical")
        self.assertEqual(moments.provenance.mode, "sliding")

    def test_estimates_approach_exact_moments(self):
        params = sticky_hmm()
        moments = estimate_moments(sample_sequences(params, 100000, 3, seed=0))
        exact = exact_moments(params)
        np.testing.assert_allclose(moments.P21, exact.P21, atol=0.01)
        np.testing.assert_allclose(moments.P3, exact.P3, atol=0.01)

    def test_unseen_symbols(self):
        moments = estimate_moments(SequenceCorpus.from_lists(3, [[0, 1, 0], [1, 0, 1]]))
        self.assertEqual(unseen_symbols(moments), [2])


if __name__ == "__main__":
    unittest.main()

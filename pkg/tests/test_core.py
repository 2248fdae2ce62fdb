import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from imbkit.core import (
    Dataset,
    class_weights,
    class_weights_from_counts,
    compute_fdr,
    confusion_and_metrics,
    derive_seed,
    pca_2d,
    stratified_indices,
    stratified_split,
    vmr,
)
from imbkit.errors import (
    AllDegenerate,
    DegenerateVariance,
    FractionOutOfRange,
    InvalidDataset,
    LengthMismatch,
    MissingClass,
    RankDeficient,
    ZeroMean,
)


def _counts_ds(counts):
    y = np.concatenate([np.full(n, c) for c, n in enumerate(counts)])
    X = np.arange(y.size, dtype=float).reshape(-1, 1)
    return Dataset(X, y, len(counts))


class TestDataset:
    def test_arrays_are_read_only(self):
        ds = Dataset(np.zeros((3, 2)), [0, 1, 1])
        with pytest.raises(ValueError):
            ds.features[0, 0] = 1.0

    def test_rejects_nan_and_out_of_range_labels(self):
        with pytest.raises(InvalidDataset):
            Dataset(np.array([[np.nan]]), [0])
        with pytest.raises(InvalidDataset):
            Dataset(np.zeros((2, 1)), [0, 3], n_classes=2)

    def test_counts_include_empty_classes(self):
        ds = Dataset(np.zeros((3, 1)), [0, 0, 2], n_classes=4)
        assert ds.class_counts == {0: 2, 1: 0, 2: 1, 3: 0}


class TestFdr:
    def test_hand_example(self):
        ds = Dataset(np.array([[0.0], [2.0], [4.0], [6.0]]), [0, 0, 1, 1])
        score = compute_fdr(ds)
        assert score.per_feature[0] == pytest.approx(4.0, rel=1e-12)
        assert score.mean == pytest.approx(4.0, rel=1e-12)

    def test_equal_means_give_zero(self):
        ds = Dataset(np.array([[-1.0], [1.0], [-2.0], [2.0]]), [0, 0, 1, 1])
        assert compute_fdr(ds).mean == 0.0

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(60, 3))
        y = rng.integers(0, 3, 60)
        ds = Dataset(X, y, 3)
        np.testing.assert_allclose(compute_fdr(ds).per_feature, oracles.fdr(X, y), rtol=1e-9)

    @given(st.floats(0.01, 100.0), st.sampled_from([1.0, -1.0]))
    def test_feature_scaling_leaves_ratio_unchanged(self, c, sign):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(40, 2))
        y = np.repeat([0, 1], 20)
        X[y == 1] += 0.5
        before = compute_fdr(Dataset(X, y)).per_feature
        X2 = X.copy()
        X2[:, 0] *= c * sign
        after = compute_fdr(Dataset(X2, y)).per_feature
        np.testing.assert_allclose(after, before, rtol=1e-9)

    def test_degenerate_feature_is_excluded(self):
        X = np.array([[0.0, 1.0], [0.0, 2.0], [5.0, 3.0], [5.0, 5.0]])
        with pytest.warns(DegenerateVariance):
            score = compute_fdr(Dataset(X, [0, 0, 1, 1]))
        assert np.isinf(score.per_feature[0])
        assert score.mean == pytest.approx(score.per_feature[1])

    def test_all_degenerate(self):
        X = np.array([[0.0], [0.0], [1.0], [1.0]])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(AllDegenerate):
                compute_fdr(Dataset(X, [0, 0, 1, 1]))

    def test_one_class_is_missing_class(self):
        with pytest.raises(MissingClass):
            compute_fdr(Dataset(np.zeros((3, 1)), [0, 0, 0], n_classes=2))


class TestClassWeights:
    def test_ninety_ten(self):
        cw = class_weights(_counts_ds([90, 10]))
        assert cw[0] == pytest.approx(100 / 180, rel=1e-12)
        assert cw[1] == pytest.approx(5.0, rel=1e-12)

    def test_balanced(self):
        assert class_weights(_counts_ds([50, 50])).as_dict() == {0: 1.0, 1: 1.0}

    def test_six_class_counts(self):
        cw = class_weights_from_counts([2184, 224, 152, 991, 254, 325])
        assert cw[2] == pytest.approx(4130 / (6 * 152), rel=1e-12)

    def test_missing_class(self):
        with pytest.raises(MissingClass):
            class_weights_from_counts([5, 0, 3])

    @given(st.lists(st.integers(1, 10_000), min_size=2, max_size=8))
    def test_mass_conservation(self, counts):
        cw = class_weights_from_counts(counts)
        assert float(np.dot(cw.weights, counts)) == pytest.approx(sum(counts), rel=1e-9)
        np.testing.assert_allclose(cw.weights, oracles.class_weights(counts), rtol=1e-12)


class TestSplit:
    def test_ninety_ten_holds_out_eighteen_and_two(self):
        train, test = stratified_split(_counts_ds([90, 10]), 0.2, seed=0)
        assert test.class_counts == {0: 18, 1: 2}
        assert train.class_counts == {0: 72, 1: 8}

    def test_half_split_of_two_each(self):
        train, test = stratified_split(_counts_ds([2, 2]), 0.5, seed=1)
        assert train.class_counts == test.class_counts == {0: 1, 1: 1}

    def test_same_seed_same_partition(self):
        y = np.repeat([0, 1, 2], [30, 20, 5])
        a = stratified_indices(y, 0.3, seed=9)
        b = stratified_indices(y, 0.3, seed=9)
        for u, v in zip(a, b):
            np.testing.assert_array_equal(u, v)

    def test_fraction_bounds(self):
        with pytest.raises(FractionOutOfRange):
            stratified_indices([0, 1, 0, 1], 1.0, 0)

    @given(st.lists(st.integers(2, 200), min_size=2, max_size=6), st.floats(0.05, 0.95), st.integers(0, 2**32))
    def test_proportions_within_one_sample(self, counts, f, seed):
        y = np.concatenate([np.full(n, c) for c, n in enumerate(counts)])
        rest, held = stratified_indices(y, f, seed)
        assert np.intersect1d(rest, held).size == 0
        assert rest.size + held.size == y.size
        held_counts = np.bincount(y[held], minlength=len(counts))
        assert np.all(np.abs(held_counts - np.asarray(counts) * f) <= 1.0)


class TestMetrics:
    def test_binary_example(self):
        y_true = [1, 1, 1, 0, 0, 0, 0, 0, 0, 0]
        y_pred = [1, 1, 0, 1, 0, 0, 0, 0, 0, 0]
        _, rep = confusion_and_metrics(y_true, y_pred)
        assert rep.f1[1] == pytest.approx(2 / 3, rel=1e-12)

    def test_perfect(self):
        y = [0, 1, 2, 2, 1]
        _, rep = confusion_and_metrics(y, y)
        np.testing.assert_array_equal(rep.f1, 1.0)

    def test_cyclic_all_wrong(self):
        y = np.array([0, 1, 2, 0, 1, 2])
        _, rep = confusion_and_metrics(y, (y + 1) % 3)
        assert rep.macro_f1 == 0.0

    def test_absent_class_scores_zero(self):
        _, rep = confusion_and_metrics([0, 0], [0, 0], n_classes=2)
        assert rep.f1[1] == 0.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            confusion_and_metrics([0, 1], [0])

    @given(st.integers(2, 5).flatmap(lambda C: st.tuples(
        st.just(C),
        st.lists(st.tuples(st.integers(0, C - 1), st.integers(0, C - 1)), min_size=1, max_size=40))))
    def test_macro_matches_per_class_oracle(self, case):
        C, pairs = case
        y_true = [a for a, _ in pairs]
        y_pred = [b for _, b in pairs]
        _, rep = confusion_and_metrics(y_true, y_pred, C)
        expected = oracles.f1_per_class(y_true, y_pred, C)
        np.testing.assert_allclose(rep.f1, expected, rtol=1e-12)
        assert rep.macro_f1 == pytest.approx(sum(expected) / C, rel=1e-12, abs=1e-15)


class TestVmr:
    def test_constant(self):
        assert vmr([0.5, 0.5, 0.5]) == 0.0

    def test_two_values(self):
        assert vmr([0.2, 0.4]) == pytest.approx(0.01 / 0.3, rel=1e-12)

    def test_zero_mean(self):
        with pytest.raises(ZeroMean):
            vmr([0.0, 0.0])


class TestPca:
    def test_dominant_axis(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(2000, 2)) * [2.0, 1.0]
        X[:, 1] += 0.9 * X[:, 0]  # correlated, so standardization still leaves a leading axis
        Z = pca_2d(Dataset(X, np.zeros(2000, dtype=int)))
        assert Z.shape == (2000, 2)
        Xs = (X - X.mean(0)) / X.std(0)
        evals, evecs = np.linalg.eigh(Xs.T @ Xs / len(X))
        lead = Xs @ evecs[:, -1]
        cos = abs(np.dot(lead, Z[:, 0]) / (np.linalg.norm(lead) * np.linalg.norm(Z[:, 0])))
        assert cos > 0.99

    def test_variance_preserved(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(500, 3)) @ rng.normal(size=(3, 3))
        Z = pca_2d(Dataset(X, np.zeros(500, dtype=int)))
        Xs = (X - X.mean(0)) / X.std(0)
        top2 = np.sort(np.linalg.eigvalsh(Xs.T @ Xs / len(X)))[-2:].sum()
        assert Z.var(axis=0).sum() == pytest.approx(top2, abs=1e-6)

    def test_duplicate_rows_project_identically(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(10, 2))
        X = np.vstack([X, X[:3]])
        Z = pca_2d(Dataset(X, np.zeros(13, dtype=int)))
        np.testing.assert_array_equal(Z[:3], Z[10:])

    def test_rank_deficient_pads_zero(self):
        x = np.linspace(0, 1, 10)
        with pytest.warns(RankDeficient):
            Z = pca_2d(Dataset(np.column_stack([x, 2 * x]), np.zeros(10, dtype=int)))
        assert np.all(Z[:, 1] == 0.0)


def test_derive_seed_is_stable_and_order_sensitive():
    assert derive_seed(1, "a", 2) == derive_seed(1, "a", 2)
    assert derive_seed(1, "a", 2) != derive_seed(2, "a", 1)
    assert derive_seed("x") != derive_seed("y")

import itertools
import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from augscope.dataset import DatasetError, make_gaussian_imbalanced
from augscope.resampling import (NATURAL, SYNTHETIC, AugmentedDataset, Provenance, _interpolate,
                                 _remix_rows, adasyn, adasyn_hardness, apportion, augment,
                                 class_weights, knn_same_set, remix, replay_synthetic, ros,
                                 smote)
from conftest import make_dataset


def brute_knn(P, k):
    n = len(P)
    out = []
    for i in range(n):
        d = [(sum((P[i][f] - P[j][f]) ** 2 for f in range(len(P[i]))), j) for j in range(n) if j != i]
        d.sort()
        out.append([j for _, j in d[:k]])
    return np.array(out)


class TestKnn:
    def test_collinear(self):
        assert knn_same_set([[0.0], [1.0], [3.0]], 1).ravel().tolist() == [1, 0, 1]

    def test_duplicates_point_at_each_other(self):
        nn = knn_same_set([[2.0, 2.0], [2.0, 2.0], [9.0, 9.0]], 1).ravel()
        assert nn[0] == 1 and nn[1] == 0

    def test_brute_force_oracle(self):
        P = np.random.default_rng(0).normal(size=(50, 3))
        np.testing.assert_array_equal(knn_same_set(P, 5), brute_knn(P.tolist(), 5))

    def test_ties_to_lower_index(self):
        # 0 is equidistant from 1 and 2
        nn = knn_same_set([[0.0], [1.0], [-1.0], [5.0]], 1)
        assert nn[0, 0] == 1

    def test_k_too_large(self):
        with pytest.raises(ValueError):
            knn_same_set(np.zeros((3, 1)), 3)


def balanced(aug):
    c = aug.data.class_counts()
    return np.all(c == c.max())


def check_original_rows(aug, src):
    n = src.n
    if aug.metadata.get("method") == "remix":
        return
    np.testing.assert_array_equal(aug.data.features[:n], src.features)
    np.testing.assert_array_equal(aug.data.instance_ids[:n], src.instance_ids)
    assert not aug.provenance.synthetic[:n].any()


def check_provenance_rules(aug):
    p = aug.provenance
    for i in range(aug.data.n):
        r = p.row(i)
        if r.origin == NATURAL:
            assert r.parent_b is None and r.lam is None
        else:
            assert r.origin == SYNTHETIC and r.lam is not None and 0.0 <= r.lam <= 1.0
    orig = aug.is_original
    np.testing.assert_array_equal(p.parent_a[orig], aug.data.instance_ids[orig])


class TestRos:
    def test_counts(self):
        d = make_gaussian_imbalanced(900, 100, 2, 1.0, seed=0)
        out = ros(d, seed=1)
        assert out.data.class_counts().tolist() == [900, 900]
        assert out.data.n - d.n == 800

    def test_balanced_input_is_noop(self):
        d = make_dataset(np.arange(8.0).reshape(4, 2), [0, 1, 0, 1])
        out = ros(d)
        np.testing.assert_array_equal(out.data.features, d.features)
        assert out.data.n == d.n

    def test_copies_are_exact_and_traceable(self, small_imbalanced):
        d = small_imbalanced
        out = ros(d, seed=2)
        pos = {int(i): r for r, i in enumerate(d.instance_ids)}
        added = np.arange(d.n, out.data.n)
        assert not out.provenance.synthetic.any()
        for r in added:
            src = pos[int(out.provenance.parent_a[r])]
            np.testing.assert_array_equal(out.data.features[r], d.features[src])
            assert out.data.labels[r] == d.labels[src]
            assert out.data.instance_ids[r] not in pos
        check_provenance_rules(out)


class TestSmote:
    def test_endpoints(self):
        X = np.array([[0.0, 0.0], [2.0, 4.0]])
        np.testing.assert_array_equal(_interpolate(X, np.array([0]), np.array([1]), np.array([0.0]))[0], X[0])
        np.testing.assert_array_equal(_interpolate(X, np.array([0]), np.array([1]), np.array([1.0]))[0], X[1])

    def test_rows_between_parents(self, small_imbalanced):
        d = small_imbalanced
        out = smote(d, 5, seed=0)
        assert balanced(out)
        pos = {int(i): r for r, i in enumerate(d.instance_ids)}
        for r in np.flatnonzero(out.provenance.synthetic):
            a = d.features[pos[int(out.provenance.parent_a[r])]]
            b = d.features[pos[int(out.provenance.parent_b[r])]]
            x = out.data.features[r]
            assert np.all(x >= np.minimum(a, b)) and np.all(x <= np.maximum(a, b))

    def test_neighbour_is_same_class_knn(self, small_imbalanced):
        d = small_imbalanced
        out = smote(d, 3, seed=5)
        idx = np.flatnonzero(d.labels == 1)
        nn = knn_same_set(d.features[idx], 3)
        id_to_local = {int(d.instance_ids[j]): t for t, j in enumerate(idx)}
        for r in np.flatnonzero(out.provenance.synthetic):
            a = id_to_local[int(out.provenance.parent_a[r])]
            b = id_to_local[int(out.provenance.parent_b[r])]
            assert b in nn[a]

    def test_single_minority_instance(self):
        d = make_dataset(np.arange(8.0).reshape(4, 2), [0, 0, 0, 1])
        with pytest.raises(DatasetError):
            smote(d)


class TestAdasyn:
    def test_hardness_definition(self):
        # minority 0,1 sit in a minority pocket; minority 2 is surrounded by majority
        X = np.array([[0.0], [0.1], [10.0], [10.1], [9.9], [10.2], [50.0], [50.1]])
        y = np.array([1, 1, 1, 0, 0, 0, 0, 0])
        d = make_dataset(X, y)
        r = adasyn_hardness(d, 1, k=1)
        assert r.tolist() == [0.0, 0.0, 1.0]

    def test_whole_deficit_to_single_hard_instance(self):
        X = np.array([[0.0], [0.1], [10.0], [10.1], [9.9], [10.2], [50.0], [50.1]])
        y = np.array([1, 1, 1, 0, 0, 0, 0, 0])
        out = adasyn(make_dataset(X, y), k=1, seed=0)
        syn = out.provenance.synthetic
        assert syn.sum() == 2
        assert set(out.provenance.parent_a[syn].tolist()) == {2}

    def test_allocation_by_hand(self):
        d = make_gaussian_imbalanced(80, 15, 2, 1.5, seed=7)
        k = 5
        out = adasyn(d, k, seed=3)
        G = 80 - 15
        minority = np.flatnonzero(d.labels == 1)
        # recompute hardness from an exhaustive neighbour list
        nn = brute_knn(d.features.tolist(), k)
        r = np.array([(d.labels[nn[i]] == 0).sum() / k for i in minority])
        g = np.round(r / r.sum() * G)
        got = np.array([(out.provenance.parent_a[out.provenance.synthetic] == d.instance_ids[i]).sum()
                        for i in minority])
        assert abs(got.sum() - G) <= minority.size
        assert got.sum() == G
        assert np.all(np.abs(got - g) <= 1)
        assert np.all(got[r == 0] == 0)

    def test_uniform_fallback_warns(self, caplog):
        X = np.array([[0.0], [0.1], [0.2], [10.0], [10.1], [10.2], [10.3], [10.4]])
        y = np.array([1, 1, 1, 0, 0, 0, 0, 0])
        with caplog.at_level(logging.WARNING):
            out = adasyn(make_dataset(X, y), k=2, seed=0)
        assert "uniform" in caplog.text
        assert out.metadata["uniform_fallback"] == [1]
        assert balanced(out)

    def test_apportion_exact(self):
        assert apportion([1, 1, 1], 10).tolist() == [4, 3, 3]
        assert apportion([0, 1, 0], 7).tolist() == [0, 7, 0]


class TestRemix:
    def test_endpoint_lambda_one(self):
        xa, xb = np.array([[1.0, 2.0]]), np.array([[5.0, -3.0]])
        np.testing.assert_array_equal(_remix_rows(xa, xb, np.array([1.0])), xa)
        np.testing.assert_array_equal(_remix_rows(xa, xb, np.array([0.0])), xb)

    def test_soft_labels_and_mass(self):
        d = make_gaussian_imbalanced(400, 40, 3, 1.0, seed=0)
        out = remix(d, 0.2, seed=1)
        np.testing.assert_allclose(out.soft_labels.sum(axis=1), 1.0, atol=1e-12)
        # recompute the class mass from the stored draws
        p = out.provenance
        mass = np.zeros(2)
        lab = out.data.labels
        for r in range(out.data.n):
            if p.synthetic[r]:
                la = d.labels[d.instance_ids == p.parent_a[r]][0]
                lb = d.labels[d.instance_ids == p.parent_b[r]][0]
                mass[la] += p.lam[r]
                mass[lb] += 1 - p.lam[r]
            else:
                mass[lab[r]] += 1
        np.testing.assert_allclose(out.soft_labels.sum(axis=0), mass, rtol=1e-12)
        assert abs(mass[0] - mass[1]) / mass.max() < 0.01

    def test_hard_label_is_argmax_tie_to_minority(self):
        d = make_gaussian_imbalanced(100, 10, 2, 1.0, seed=0)
        out = remix(d, 0.5, seed=3)
        s = out.soft_labels
        expect = np.where(s[:, 0] > s[:, 1], 0, 1)
        np.testing.assert_array_equal(out.data.labels, expect)

    def test_soft_label_matches_lambda(self):
        d = make_gaussian_imbalanced(100, 10, 2, 1.0, seed=0)
        out = remix(d, 0.2, seed=4)
        syn = out.provenance.synthetic
        np.testing.assert_array_equal(out.soft_labels[syn, 0], out.provenance.lam[syn])

    def test_undersampling_target_recorded(self):
        d = make_gaussian_imbalanced(900, 100, 2, 1.0, seed=0)
        out = remix(d, seed=0)
        assert out.metadata["undersample_target"] == 300
        nat = ~out.provenance.synthetic
        assert np.bincount(out.data.labels[nat]).tolist() == [300, 300]

    def test_bad_alpha(self, small_imbalanced):
        with pytest.raises(ValueError):
            remix(small_imbalanced, 0.0)


SAMPLERS = ["ros", "smote", "adasyn", "remix"]


@pytest.mark.parametrize("method", SAMPLERS)
def test_multiclass_balance(method, three_class):
    out = augment(three_class, method, seed=0)
    if method == "remix":
        m = out.soft_labels.sum(axis=0)
        assert (m.max() - m.min()) / m.max() < 0.01
    else:
        assert balanced(out)
        check_original_rows(out, three_class)
    check_provenance_rules(out)


@settings(max_examples=25, deadline=None)
@given(n_major=st.integers(6, 60), n_minor=st.integers(2, 20), seed=st.integers(0, 2**31),
       method=st.sampled_from(SAMPLERS))
def test_balance_replay_determinism(n_major, n_minor, seed, method):
    d = make_gaussian_imbalanced(max(n_major, n_minor), n_minor, 3, 1.0, seed=seed % 1000)
    a = augment(d, method, seed=seed)
    b = augment(d, method, seed=seed)
    np.testing.assert_array_equal(a.data.features, b.data.features)
    np.testing.assert_array_equal(a.data.instance_ids, b.data.instance_ids)
    if method == "remix":
        m = a.soft_labels.sum(axis=0)
        assert (m.max() - m.min()) / m.max() < 0.01
    else:
        assert balanced(a)
        check_original_rows(a, d)
    syn = a.provenance.synthetic
    # bit-identical replay from provenance
    np.testing.assert_array_equal(replay_synthetic(a, d), a.data.features[syn])
    assert np.unique(a.data.instance_ids).size == a.data.n


class TestClassWeights:
    def test_balanced(self):
        assert class_weights(make_dataset(np.zeros((4, 1)), [0, 1, 0, 1])).weights == (1.0, 1.0)

    def test_formula(self):
        d = make_dataset(np.zeros((1000, 1)), [0] * 900 + [1] * 100)
        w = class_weights(d).weights
        assert w[0] == pytest.approx(0.556, abs=1e-3) and w[1] == pytest.approx(5.0, abs=1e-3)

    @given(st.lists(st.integers(1, 50), min_size=2, max_size=5))
    def test_identity(self, counts):
        y = np.repeat(np.arange(len(counts)), counts)
        d = make_dataset(np.zeros((y.size, 1)), y)
        w = class_weights(d)
        assert sum(wc * nc for wc, nc in zip(w.weights, counts)) == pytest.approx(y.size)
        assert all(wc > 0 for wc in w.weights)


def test_base_and_cs_unchanged(small_imbalanced):
    for m in ("base", "cs"):
        out = augment(small_imbalanced, m)
        assert out.data is small_imbalanced and not out.provenance.synthetic.any()
    with pytest.raises(ValueError):
        augment(small_imbalanced, "gan")


def test_augmented_dataset_validation(small_imbalanced):
    d = small_imbalanced
    with pytest.raises(DatasetError):
        AugmentedDataset(d, Provenance.natural(d.instance_ids[:-1]))
    with pytest.raises(DatasetError):
        AugmentedDataset(d, Provenance.natural(d.instance_ids), np.full((d.n, 2), 0.4))

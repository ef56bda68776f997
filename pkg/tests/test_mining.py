import numpy as np
import pytest

from embedviz import DataError, EmbeddingSet
from embedviz.mining import (
    MinerConfig,
    NTuple,
    Triplet,
    mine_batch_all,
    mine_epshn,
    mine_npairs,
    mine_semihard,
    sample_batch,
    select_semihard_negative,
)

from oracles import anchored_embedding, brute_batch_all, epshn_expected, semihard_expected


def four_class_set(per_class=3):
    n = 4 * per_class
    rng = np.random.default_rng(0)
    X = rng.normal(size=(n, 5))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    return EmbeddingSet([f"r{i}" for i in range(n)], np.repeat(np.arange(4), per_class), ["train"] * n, X)


def test_sample_batch_shape():
    b = sample_batch(four_class_set(), 2, 2, np.random.default_rng(1))
    assert b.size == 4
    uniq, counts = np.unique(b.labels, return_counts=True)
    assert len(uniq) == 2 and counts.tolist() == [2, 2]
    data = four_class_set()
    np.testing.assert_array_equal(data.labels[b.indices], b.labels)
    assert len(set(b.indices.tolist())) == 4


def test_sample_batch_insufficient_classes():
    with pytest.raises(DataError, match="5 classes"):
        sample_batch(four_class_set(), 5, 2, np.random.default_rng(0))


def test_sample_batch_deterministic():
    a = sample_batch(four_class_set(), 3, 2, np.random.default_rng(9))
    b = sample_batch(four_class_set(), 3, 2, np.random.default_rng(9))
    np.testing.assert_array_equal(a.indices, b.indices)


def test_sample_batch_with_replacement_small_class():
    b = sample_batch(four_class_set(per_class=2), 4, 5, np.random.default_rng(0))
    assert b.size == 20


def test_sample_batch_ignores_test_rows():
    data = four_class_set()
    data = EmbeddingSet(data.ids, data.labels, ["train" if c < 2 else "test" for c in data.labels], data.vectors)
    with pytest.raises(DataError):
        sample_batch(data, 3, 2, np.random.default_rng(0))
    b = sample_batch(data, 2, 2, np.random.default_rng(0))
    assert set(b.labels.tolist()) == {0, 1}


def test_batch_all_count_p2_k2():
    labels = np.array([0, 0, 1, 1])
    out = mine_batch_all(None, labels)
    assert len(out) == 4 * 1 * 2
    assert out == sorted(out)


def test_batch_all_single_class():
    assert mine_batch_all(None, np.array([3, 3, 3])) == []


def test_batch_all_uneven():
    out = mine_batch_all(None, np.array([0, 0, 1]))
    assert out == [Triplet(0, 1, 2), Triplet(1, 0, 2)]


@pytest.mark.parametrize("seed", range(10))
def test_batch_all_count_formula(seed):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 4, size=rng.integers(2, 12))
    out = mine_batch_all(None, labels)
    n = len(labels)
    counts = np.bincount(labels)
    assert len(out) == sum(int(k) * (int(k) - 1) * (n - int(k)) for k in counts)
    assert set(out) == brute_batch_all(labels.tolist())


def test_npairs_p3():
    labels = np.array([0, 0, 1, 1, 2, 2])
    out = mine_npairs(None, labels)
    assert len(out) == 6
    # brute-force construction: anchor role r of class c; negatives are role 1-r of the others
    pairs = {0: (0, 1), 1: (2, 3), 2: (4, 5)}
    expected = []
    for c in (0, 1, 2):
        for r in (0, 1):
            negs = tuple(pairs[o][1 - r] for o in (0, 1, 2) if o != c)
            expected.append(NTuple(pairs[c][r], pairs[c][1 - r], negs))
    assert out == expected
    for t in out:
        assert len(t.negatives) == 2
        assert labels[t.anchor] == labels[t.positive]
        neg_labels = [labels[n] for n in t.negatives]
        assert labels[t.anchor] not in neg_labels and len(set(neg_labels)) == len(neg_labels)


def test_npairs_p2_degenerates_to_triplets():
    out = mine_npairs(None, np.array([5, 7, 5, 7]))
    assert len(out) == 4 and all(len(t.negatives) == 1 for t in out)


def test_npairs_requires_k2():
    with pytest.raises(DataError, match="exactly 2"):
        mine_npairs(None, np.array([0, 0, 0, 1, 1, 1]))


def test_semihard_window_example():
    assert select_semihard_negative(0.8, [0.9, 0.75, 0.5], 0.3) == 1


def test_semihard_fallback_example():
    assert select_semihard_negative(0.8, [0.9, 0.95], 0.3) == 0


def test_semihard_below_fallback():
    assert select_semihard_negative(0.8, [0.9, 0.1, 0.4], 0.3) == 2


def test_semihard_on_vectors():
    # anchor 0, positive 1 (s=0.8), negatives 2..4 with s = 0.9, 0.75, 0.5
    Z = anchored_embedding([0.8, 0.9, 0.75, 0.5])
    labels = np.array([0, 0, 1, 2, 3])
    out = mine_semihard(Z, labels, 0.3, np.random.default_rng(0))
    assert out[0] == Triplet(0, 1, 3)


def test_semihard_single_class():
    Z = anchored_embedding([0.5, 0.2])
    assert mine_semihard(Z, np.zeros(3, dtype=int), 0.1, np.random.default_rng(0)) == []


def test_epshn_example():
    # positives at 0.6 and 0.9, negatives at 0.95, 0.85, 0.2
    Z = anchored_embedding([0.6, 0.9, 0.95, 0.85, 0.2])
    labels = np.array([0, 0, 0, 1, 2, 3])
    out = mine_epshn(Z, labels, 0.3)
    assert out[0] == Triplet(0, 2, 4)


def test_epshn_single_positive():
    Z = anchored_embedding([0.1, 0.5])
    out = mine_epshn(Z, np.array([0, 0, 1]), 0.1)
    assert out[0].positive == 1


def test_epshn_tie_smallest_index():
    Z = anchored_embedding([0.7, 0.7, 0.3])
    out = mine_epshn(Z, np.array([0, 0, 0, 1]), 0.1)
    assert out[0].positive == 1


def random_unit_batch(rng, p, k, dim=6):
    labels = np.repeat(rng.choice(20, size=p, replace=False), k)
    Z = rng.normal(size=(labels.size, dim))
    return Z / np.linalg.norm(Z, axis=1, keepdims=True), labels


@pytest.mark.parametrize("seed", range(5))
def test_single_triplet_miners_properties(seed):
    rng = np.random.default_rng(seed)
    Z, labels = random_unit_batch(rng, 4, 3)
    S = Z @ Z.T
    for out in (mine_semihard(Z, labels, 0.1, np.random.default_rng(seed)), mine_epshn(Z, labels, 0.1)):
        anchors = [t.anchor for t in out]
        assert anchors == sorted(set(anchors)) == list(range(len(labels)))
        for a, p, n in out:
            assert a != p and labels[a] == labels[p] != labels[n]
    for a, p, n in mine_epshn(Z, labels, 0.1):
        others = [j for j in range(len(labels)) if j != a and labels[j] == labels[a]]
        assert all(S[a, p] >= S[a, j] for j in others)
        assert n == epshn_expected(Z, labels.tolist(), 0.1)[a][2]
    for a, p, n in mine_semihard(Z, labels, 0.1, np.random.default_rng(seed)):
        assert n == semihard_expected(Z, labels.tolist(), 0.1, a, p)


def test_semihard_deterministic():
    rng = np.random.default_rng(3)
    Z, labels = random_unit_batch(rng, 4, 4)
    a = mine_semihard(Z, labels, 0.1, np.random.default_rng(1))
    b = mine_semihard(Z, labels, 0.1, np.random.default_rng(1))
    assert a == b


def test_miner_config_validation():
    assert MinerConfig("semihard").strategy.value == "semihard"
    with pytest.raises(DataError):
        MinerConfig(margin=-0.1)
    with pytest.raises(ValueError):
        MinerConfig("hardest")

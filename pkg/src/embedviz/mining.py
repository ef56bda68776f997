"""Class-balanced batch sampling and triplet / N-tuple construction.

All miners work on the rows of one batch and return indices into that
batch. Embeddings are assumed unit-norm, so "closer" means larger cosine
similarity: ``||a - b||^2 = 2 - 2 a.b``.
"""

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._validation import DataError


class Strategy(str, enum.Enum):
    BATCH_ALL = "batch_all"
    NPAIRS = "npairs"
    SEMIHARD = "semihard"
    EPSHN = "epshn"


class Batch(NamedTuple):
    indices: np.ndarray
    labels: np.ndarray

    @property
    def size(self):
        return len(self.indices)


class Triplet(NamedTuple):
    anchor: int
    positive: int
    negative: int


class NTuple(NamedTuple):
    anchor: int
    positive: int
    negatives: tuple


@dataclass(frozen=True)
class MinerConfig:
    strategy: Strategy = Strategy.EPSHN
    margin: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if not self.margin >= 0:
            raise DataError("margin must be non-negative")


def sample_batch(data, p, k, rng):
    """Draw ``p`` train-split classes and ``k`` rows from each.

    Rows are drawn without replacement when a class has at least ``k`` train
    rows and with replacement otherwise.
    """
    train_idx = np.flatnonzero(data.split_mask("train"))
    train_labels = data.labels[train_idx]
    classes = np.unique(train_labels)
    if classes.size < p:
        raise DataError(f"batch needs {p} classes but only {classes.size} train classes exist")
    chosen = rng.choice(classes, size=p, replace=False)
    indices, labels = [], []
    for c in chosen:
        members = train_idx[train_labels == c]
        picks = rng.choice(members, size=k, replace=members.size < k)
        indices.append(picks)
        labels.append(np.full(k, c, dtype=np.int64))
    return Batch(np.concatenate(indices), np.concatenate(labels))


def mine_batch_all(embeddings, labels):
    """Every valid ``(a, p, n)`` in lexicographic index order."""
    labels = np.asarray(labels)
    n = labels.size
    out = []
    for a in range(n):
        same = labels == labels[a]
        positives = np.flatnonzero(same)
        negatives = np.flatnonzero(~same)
        if negatives.size == 0:
            continue
        for p in positives:
            if p == a:
                continue
            out.extend(Triplet(a, int(p), int(neg)) for neg in negatives)
    return out


def mine_npairs(embeddings, labels):
    """N-pair tuples for a batch holding exactly two rows per class.

    For each class (in order of first appearance) and each ordering of its
    pair, the negatives are the same-role members of every other class.
    """
    labels = np.asarray(labels)
    classes = list(dict.fromkeys(labels.tolist()))
    pairs = []
    for c in classes:
        members = np.flatnonzero(labels == c)
        if members.size != 2:
            raise DataError(f"npairs needs exactly 2 rows per class; class {c} has {members.size}")
        pairs.append((int(members[0]), int(members[1])))
    out = []
    for ci, pair in enumerate(pairs):
        for role in (0, 1):
            others = tuple(pairs[cj][1 - role] for cj in range(len(pairs)) if cj != ci)
            if not others:
                continue
            out.append(NTuple(pair[role], pair[1 - role], others))
    return out


def select_semihard_negative(s_ap, neg_sims, margin):
    """Position in ``neg_sims`` of the negative chosen for one anchor.

    Preference order: the most similar negative inside the open window
    ``(s_ap - margin, s_ap)``; else the most similar one strictly below
    ``s_ap``; else the least similar one. Ties go to the lowest position.
    """
    neg_sims = np.asarray(neg_sims, dtype=np.float64)
    window = (neg_sims < s_ap) & (neg_sims > s_ap - margin)
    if window.any():
        cand = np.where(window, neg_sims, -np.inf)
        return int(np.argmax(cand))
    below = neg_sims < s_ap
    if below.any():
        cand = np.where(below, neg_sims, -np.inf)
        return int(np.argmax(cand))
    return int(np.argmin(neg_sims))


def _anchor_candidates(labels, a):
    same = labels == labels[a]
    same[a] = False
    return np.flatnonzero(same), np.flatnonzero(labels != labels[a])


def mine_semihard(embeddings, labels, margin, rng):
    """One triplet per anchor: random positive, semi-hard negative."""
    Z = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels)
    S = Z @ Z.T
    out = []
    for a in range(labels.size):
        positives, negatives = _anchor_candidates(labels, a)
        if positives.size == 0 or negatives.size == 0:
            continue
        p = int(positives[rng.integers(positives.size)])
        n = negatives[select_semihard_negative(S[a, p], S[a, negatives], margin)]
        out.append(Triplet(a, p, int(n)))
    return out


def mine_epshn(embeddings, labels, margin):
    """One triplet per anchor: most similar positive, semi-hard negative."""
    Z = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels)
    S = Z @ Z.T
    out = []
    for a in range(labels.size):
        positives, negatives = _anchor_candidates(labels, a)
        if positives.size == 0 or negatives.size == 0:
            continue
        p = int(positives[np.argmax(S[a, positives])])
        n = negatives[select_semihard_negative(S[a, p], S[a, negatives], margin)]
        out.append(Triplet(a, p, int(n)))
    return out


def mine(embeddings, labels, cfg, rng):
    """Dispatch to the miner named by ``cfg.strategy``."""
    if cfg.strategy is Strategy.BATCH_ALL:
        return mine_batch_all(embeddings, labels)
    if cfg.strategy is Strategy.NPAIRS:
        return mine_npairs(embeddings, labels)
    if cfg.strategy is Strategy.SEMIHARD:
        return mine_semihard(embeddings, labels, cfg.margin, rng)
    return mine_epshn(embeddings, labels, cfg.margin)

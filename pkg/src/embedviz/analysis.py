"""Nearest-neighbor diagnostics on unit-norm embeddings.

Similarity is cosine, i.e. the dot product of unit rows. Neighbor ranking
breaks similarity ties toward the smaller row index.
"""

from typing import NamedTuple

import numpy as np

from ._validation import DataError, check_unit_rows


class ScatterPoint(NamedTuple):
    id: str
    label: int
    split: str
    s_same: float
    s_diff: float

    @property
    def correct(self):
        return self.s_same > self.s_diff


def recall_at_k(data, k=1, scope="all"):
    """Fraction of scoped rows with a same-label row among their ``k`` nearest.

    Parameters
    ----------
    data : EmbeddingSet
        Unit-norm rows.
    k : int
    scope : {"all", "train", "test"}
        Neighbors are searched within the scoped subset only.
    """
    sub = data.subset(data.split_mask(scope))
    n = len(sub)
    if n < 2:
        raise DataError(f"recall needs at least 2 scoped points, got {n}")
    if not 1 <= k < n:
        raise DataError(f"k={k} must satisfy 1 <= k < {n}")
    check_unit_rows(sub.vectors)
    S = sub.vectors @ sub.vectors.T
    np.fill_diagonal(S, -np.inf)
    # stable sort on -S keeps the smaller index first among equal similarities
    order = np.argsort(-S, axis=1, kind="stable")[:, :k]
    hits = (sub.labels[order] == sub.labels[:, None]).any(axis=1)
    return float(hits.mean())


def similarity_scatter(data, cross_split=False):
    """Closest same-class vs closest different-class similarity per row.

    By default each row is compared only with rows of its own split; with
    ``cross_split`` it is compared with every other row.

    Returns
    -------
    points : list of ScatterPoint
        In row order.
    omitted : list of str
        Ids of rows lacking a same-class (singleton) or a different-class
        comparison point.
    """
    check_unit_rows(data.vectors)
    S = data.vectors @ data.vectors.T
    splits = np.array(data.splits)
    labels = data.labels
    points, omitted = [], []
    for i in range(len(data)):
        pool = np.ones(len(data), dtype=bool) if cross_split else splits == splits[i]
        pool[i] = False
        same = pool & (labels == labels[i])
        diff = pool & (labels != labels[i])
        if not same.any() or not diff.any():
            omitted.append(data.ids[i])
            continue
        points.append(
            ScatterPoint(
                data.ids[i],
                int(labels[i]),
                data.splits[i],
                float(S[i, same].max()),
                float(S[i, diff].max()),
            )
        )
    return points, omitted


def below_diagonal_fraction(points):
    """Share of points with ``s_same > s_diff``; ties count as incorrect."""
    if len(points) == 0:
        raise DataError("below_diagonal_fraction needs at least one point")
    return sum(p.s_same > p.s_diff for p in points) / len(points)

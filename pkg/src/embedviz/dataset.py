"""Labeled, split-tagged embedding sets and their CSV interchange format.

The on-disk layout is a UTF-8 CSV with LF line endings and the header
``id,split,label,d0,...,d{D-1}``. Floats are written with ``repr``, which is
the shortest decimal string that round-trips to the same double, so
``load_csv(save_csv(s))`` reproduces ``s`` exactly.
"""

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from ._validation import DataError

SPLITS = ("train", "test")


@dataclass(eq=False)
class EmbeddingSet:
    """N labeled vectors of dimension D, each tagged ``train`` or ``test``.

    Attributes
    ----------
    ids : list of str
        Unique row identifiers.
    labels : ndarray of shape (N,), int64
    splits : list of str
        Each entry is ``"train"`` or ``"test"``.
    vectors : ndarray of shape (N, D), float64
    """

    ids: list
    labels: np.ndarray
    splits: list
    vectors: np.ndarray
    dim: int = field(default=None)

    def __post_init__(self):
        self.ids = [str(i) for i in self.ids]
        self.splits = list(self.splits)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        vectors = np.asarray(self.vectors, dtype=np.float64)
        if vectors.ndim == 1 and vectors.size == 0:
            vectors = vectors.reshape(0, self.dim or 0)
        if vectors.ndim != 2:
            raise DataError(f"vectors must be 2-D, got shape {vectors.shape}")
        self.vectors = vectors
        if self.dim is None:
            self.dim = vectors.shape[1]
        n = len(self.ids)
        bad = next((i for i in self.ids if "\x00" in i), None)
        if bad is not None:
            raise DataError(f"id {bad!r} contains a NUL character")
        if not (len(self.labels) == len(self.splits) == vectors.shape[0] == n):
            raise DataError(
                f"length mismatch: ids={n}, labels={len(self.labels)}, "
                f"splits={len(self.splits)}, vectors={vectors.shape[0]}"
            )
        if vectors.shape[1] != self.dim:
            raise DataError(f"vectors have {vectors.shape[1]} columns, dim={self.dim}")
        if not np.all(np.isfinite(vectors)):
            row = int(np.flatnonzero(~np.isfinite(vectors).all(axis=1))[0])
            raise DataError(f"non-finite coordinate in row {self.ids[row]!r}")
        unknown = [s for s in self.splits if s not in SPLITS]
        if unknown:
            raise DataError(f"unknown split tag {unknown[0]!r}")
        if len(set(self.ids)) != n:
            seen = set()
            for i in self.ids:
                if i in seen:
                    raise DataError(f"duplicate id {i!r}")
                seen.add(i)

    def __len__(self):
        return len(self.ids)

    def __eq__(self, other):
        if not isinstance(other, EmbeddingSet):
            return NotImplemented
        return (
            self.ids == other.ids
            and self.splits == other.splits
            and self.dim == other.dim
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.vectors, other.vectors)
        )

    def subset(self, mask):
        """Rows where boolean ``mask`` is true, in original order."""
        idx = np.flatnonzero(np.asarray(mask, dtype=bool))
        return EmbeddingSet(
            ids=[self.ids[i] for i in idx],
            labels=self.labels[idx],
            splits=[self.splits[i] for i in idx],
            vectors=self.vectors[idx],
            dim=self.dim,
        )

    def split_mask(self, split):
        """Boolean mask for ``split`` (``None`` or ``"all"`` selects every row)."""
        if split in (None, "all"):
            return np.ones(len(self), dtype=bool)
        if split not in SPLITS:
            raise DataError(f"unknown split tag {split!r}")
        return np.array([s == split for s in self.splits], dtype=bool)

    def with_vectors(self, vectors):
        return EmbeddingSet(list(self.ids), self.labels.copy(), list(self.splits), vectors)


@dataclass(frozen=True)
class SyntheticConfig:
    num_classes: int = 8
    points_per_class: int = 20
    ambient_dim: int = 64
    noise_sigma: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.num_classes < 1:
            raise DataError("num_classes must be >= 1")
        if self.points_per_class < 1:
            raise DataError("points_per_class must be >= 1")
        if self.ambient_dim < 2:
            raise DataError("ambient_dim must be >= 2")
        if not self.noise_sigma >= 0:
            raise DataError("noise_sigma must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise DataError("seed must be an unsigned 64-bit integer")


def load_csv(path):
    """Read an :class:`EmbeddingSet` from ``path``.

    Errors carry the 1-based line number of the offending record.
    """
    if not os.path.isfile(path):
        raise DataError(f"{path}: no such file")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: line 1: empty file, expected header") from None
        if header[:3] != ["id", "split", "label"]:
            raise DataError(f"{path}: line 1: header must start with id,split,label")
        coord_cols = header[3:]
        if coord_cols != [f"d{j}" for j in range(len(coord_cols))]:
            raise DataError(f"{path}: line 1: coordinate columns must be d0..d{{D-1}}")
        dim = len(coord_cols)
        ids, splits, labels, rows = [], [], [], []
        seen = set()
        for record in reader:
            line = reader.line_num
            if len(record) != dim + 3:
                raise DataError(
                    f"{path}: line {line}: expected {dim + 3} columns, got {len(record)}"
                )
            rid, split, label = record[:3]
            if rid in seen:
                raise DataError(f"{path}: line {line}: duplicate id {rid!r}")
            if split not in SPLITS:
                raise DataError(f"{path}: line {line}: unknown split tag {split!r}")
            try:
                lab = int(label)
            except ValueError:
                raise DataError(f"{path}: line {line}: non-integer label {label!r}") from None
            try:
                coords = [float(v) for v in record[3:]]
            except ValueError as exc:
                raise DataError(f"{path}: line {line}: non-numeric coordinate ({exc})") from None
            if not all(np.isfinite(coords)):
                raise DataError(f"{path}: line {line}: non-finite coordinate")
            seen.add(rid)
            ids.append(rid)
            splits.append(split)
            labels.append(lab)
            rows.append(coords)
    vectors = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    return EmbeddingSet(ids, np.array(labels, dtype=np.int64), splits, vectors, dim=dim)


def save_csv(data, path):
    """Write ``data`` in the canonical CSV layout."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "split", "label"] + [f"d{j}" for j in range(data.dim)])
        for i in range(len(data)):
            writer.writerow(
                [data.ids[i], data.splits[i], int(data.labels[i])]
                + [repr(float(v)) for v in data.vectors[i]]
            )


def _unit_rows(vectors, ids=None):
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    zero = np.flatnonzero(norms[:, 0] == 0)
    if zero.size:
        name = ids[zero[0]] if ids is not None else int(zero[0])
        raise DataError(f"zero-norm row {name!r} cannot be normalized")
    return vectors / norms


def normalize_rows(data):
    """Project every row onto the unit sphere."""
    return data.with_vectors(_unit_rows(data.vectors, data.ids))


def gen_synthetic(cfg):
    """Gaussian clusters around random unit class means, renormalized.

    Class means are normalized standard-normal draws (uniform on the sphere).
    Each point is ``normalize(mean + noise_sigma * N(0, I))``. All rows are
    tagged ``train``; use :func:`split_by_class` to hold out classes.
    """
    rng = np.random.default_rng(cfg.seed)
    means = _unit_rows(rng.standard_normal((cfg.num_classes, cfg.ambient_dim)))
    labels = np.repeat(np.arange(cfg.num_classes), cfg.points_per_class)
    noise = rng.standard_normal((labels.size, cfg.ambient_dim))
    points = means[labels] + cfg.noise_sigma * noise
    if cfg.noise_sigma == 0:
        points = means[labels].copy()
    else:
        points = _unit_rows(points)
    width = len(str(labels.size - 1))
    ids = [f"p{i:0{width}d}" for i in range(labels.size)]
    return EmbeddingSet(ids, labels, ["train"] * labels.size, points)


def split_by_class(data, train_classes, test_classes):
    """Retag rows as train/test according to their label."""
    train_classes = {int(c) for c in train_classes}
    test_classes = {int(c) for c in test_classes}
    overlap = train_classes & test_classes
    if overlap:
        raise DataError(f"labels assigned to both train and test: {sorted(overlap)}")
    present = sorted({int(c) for c in data.labels})
    for c in present:
        if c not in train_classes and c not in test_classes:
            raise DataError(f"label {c} is not assigned to train or test")
    splits = ["train" if int(c) in train_classes else "test" for c in data.labels]
    return EmbeddingSet(list(data.ids), data.labels.copy(), splits, data.vectors.copy())

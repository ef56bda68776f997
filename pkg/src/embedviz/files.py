"""CSV formats exchanged between CLI subcommands, and metadata sidecars."""

import csv
import json
import os

import numpy as np

from ._validation import DataError
from .analysis import ScatterPoint


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _read_rows(path, header):
    if not os.path.isfile(path):
        raise DataError(f"{path}: no such file")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first != header:
            raise DataError(f"{path}: line 1: expected header {','.join(header)}")
        for row in reader:
            if len(row) != len(header):
                raise DataError(
                    f"{path}: line {reader.line_num}: expected {len(header)} columns, got {len(row)}"
                )
            yield reader.line_num, row


def _float(path, line, v):
    try:
        out = float(v)
    except ValueError:
        raise DataError(f"{path}: line {line}: non-numeric value {v!r}") from None
    if not np.isfinite(out):
        raise DataError(f"{path}: line {line}: non-finite value {v!r}")
    return out


COORD_HEADER = ["id", "split", "label", "y0", "y1"]
SCATTER_HEADER = ["id", "split", "label", "s_same", "s_diff", "correct"]


def save_coords(path, ids, splits, labels, coords):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(COORD_HEADER)
        for i in range(len(ids)):
            w.writerow([ids[i], splits[i], int(labels[i]), repr(float(coords[i, 0])), repr(float(coords[i, 1]))])


def load_coords(path):
    """Returns ``(ids, splits, labels, coords)``."""
    ids, splits, labels, coords = [], [], [], []
    for line, row in _read_rows(path, COORD_HEADER):
        try:
            labels.append(int(row[2]))
        except ValueError:
            raise DataError(f"{path}: line {line}: non-integer label {row[2]!r}") from None
        ids.append(row[0])
        splits.append(row[1])
        coords.append((_float(path, line, row[3]), _float(path, line, row[4])))
    return ids, splits, np.array(labels, dtype=np.int64), np.array(coords, dtype=np.float64).reshape(-1, 2)


def save_scatter(path, points):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(SCATTER_HEADER)
        for p in points:
            w.writerow([p.id, p.split, p.label, repr(p.s_same), repr(p.s_diff), int(p.correct)])


def load_scatter(path):
    points = []
    for line, row in _read_rows(path, SCATTER_HEADER):
        try:
            label = int(row[2])
        except ValueError:
            raise DataError(f"{path}: line {line}: non-integer label {row[2]!r}") from None
        points.append(ScatterPoint(row[0], label, row[1], _float(path, line, row[3]), _float(path, line, row[4])))
    return points


def save_trace(path, values, column):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["iteration", column])
        for i, v in enumerate(values):
            w.writerow([i, repr(float(v))])


def save_displacement(path, ids, dists):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["id", "displacement"])
        for i, d in zip(ids, dists):
            w.writerow([i, repr(float(d))])


def write_meta(path, meta):
    """Write ``<path>.meta.json`` next to an output file."""
    with open(path + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")

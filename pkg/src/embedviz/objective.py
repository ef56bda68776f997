"""NCA-style softmax loss over anchor similarities.

For one unit with anchor-positive similarity ``s_ap`` and anchor-negative
similarities ``s_an``::

    L = -log( exp(s_ap / t) / (exp(s_ap / t) + sum_i exp(s_an_i / t)) )

where ``t`` is a temperature. The same formula is applied to triplets (one
negative) and N-tuples (several).
"""

import numpy as np

from ._validation import DataError
from .mining import NTuple


def _logits(s_ap, s_an, temperature):
    if not temperature > 0:
        raise DataError("temperature must be positive")
    s_an = np.atleast_1d(np.asarray(s_an, dtype=np.float64))
    if s_an.size == 0:
        raise DataError("NCA loss needs at least one negative")
    return np.concatenate(([float(s_ap)], s_an)) / temperature


def _log_softmax0(logits):
    m = logits.max()
    lse = m + np.log(np.exp(logits - m).sum())
    return logits[0] - lse, np.exp(logits - lse)


def nca_loss(s_ap, s_an, temperature=1.0):
    """Negative log softmax probability of the positive. Always >= 0."""
    log_p0, _ = _log_softmax0(_logits(s_ap, s_an, temperature))
    return max(0.0, -float(log_p0))


def nca_grad(s_ap, s_an, temperature=1.0):
    """Return ``(dL/ds_ap, dL/ds_an)``."""
    _, probs = _log_softmax0(_logits(s_ap, s_an, temperature))
    return -(1.0 - probs[0]) / temperature, probs[1:] / temperature


def _group_units(units):
    """Bucket units by negative count into index arrays (a, p, negatives)."""
    groups = {}
    for unit in units:
        if isinstance(unit, NTuple):
            negs = tuple(unit.negatives)
        else:
            negs = (unit.negative,)
        groups.setdefault(len(negs), []).append((unit.anchor, unit.positive) + negs)
    for m in sorted(groups):
        arr = np.asarray(groups[m], dtype=np.intp)
        yield arr[:, 0], arr[:, 1], arr[:, 2:]


def batch_loss(embeddings, units, temperature=1.0):
    """Mean NCA loss over ``units`` and its gradient w.r.t. ``embeddings``.

    The gradient is taken with respect to the (already normalized) rows as
    free variables; the normalization Jacobian is applied by the trainer.

    Returns
    -------
    loss : float
    grad : ndarray of shape (N, D)
    """
    Z = np.asarray(embeddings, dtype=np.float64)
    if len(units) == 0:
        raise DataError("batch_loss needs at least one mined unit")
    if not temperature > 0:
        raise DataError("temperature must be positive")
    n_rows = Z.shape[0]
    # grad = C @ Z, with C[i, j] collecting dL/ds for every pair (i, j) used
    coeff = np.zeros(n_rows * n_rows)
    total = 0.0
    for a, p, negs in _group_units(units):
        s_ap = np.einsum("ij,ij->i", Z[a], Z[p])
        s_an = np.einsum("ij,ikj->ik", Z[a], Z[negs])
        logits = np.column_stack((s_ap, s_an)) / temperature
        m = logits.max(axis=1, keepdims=True)
        lse = m[:, 0] + np.log(np.exp(logits - m).sum(axis=1))
        total += np.maximum(lse - logits[:, 0], 0.0).sum()
        probs = np.exp(logits - lse[:, None])
        g_ap = -(1.0 - probs[:, 0]) / temperature
        g_an = (probs[:, 1:] / temperature).ravel()
        a_rep = np.repeat(a, negs.shape[1])
        flat_n = negs.ravel()
        idx = np.concatenate((a * n_rows + p, p * n_rows + a, a_rep * n_rows + flat_n, flat_n * n_rows + a_rep))
        vals = np.concatenate((g_ap, g_ap, g_an, g_an))
        coeff += np.bincount(idx, weights=vals, minlength=n_rows * n_rows)
    grad = coeff.reshape(n_rows, n_rows) @ Z
    n = len(units)
    return float(total) / n, grad / n

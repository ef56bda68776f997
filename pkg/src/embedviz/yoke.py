"""Yoked t-SNE: two maps of the same points optimized together.

The joint cost is ``KL_A + KL_B + lam / (2N) * sum_i |y_i^A - y_i^B|^2``.
Each outer iteration takes one momentum step on each map, with the
penalty gradient ``(lam / N)(y^A - y^B)`` added to map A and subtracted
from map B.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import DataError, as_matrix
from .tsne import MapOptimizer, TsneConfig, TsneResult, joint_p, kl_divergence, q_matrix


@dataclass(frozen=True)
class YokeConfig:
    lam: float = 0.01
    base: TsneConfig = field(default_factory=TsneConfig)

    def __post_init__(self):
        if not self.lam >= 0:
            raise DataError("alignment weight lam must be non-negative")


@dataclass
class YokedResult:
    map_a: TsneResult
    map_b: TsneResult
    mean_displacement: float


def alignment_penalty(Y_a, Y_b, lam):
    """Penalty value and its gradient w.r.t. ``Y_a`` (map B gets the negation)."""
    n = Y_a.shape[0]
    delta = Y_a - Y_b
    return lam / (2.0 * n) * float(np.sum(delta * delta)), (lam / n) * delta


def yoked_cost(P_a, P_b, Y_a, Y_b, lam):
    """Total coupled cost at the given maps."""
    penalty, _ = alignment_penalty(Y_a, Y_b, lam)
    return kl_divergence(P_a, q_matrix(Y_a)[0]) + kl_divergence(P_b, q_matrix(Y_b)[0]) + penalty


def displacement(map_a, map_b):
    """Per-point Euclidean distance between two maps, and its mean."""
    A = np.asarray(map_a, dtype=np.float64)
    B = np.asarray(map_b, dtype=np.float64)
    if A.shape != B.shape:
        raise DataError(f"map shapes differ: {A.shape} vs {B.shape}")
    d = np.sqrt(np.sum((A - B) ** 2, axis=1))
    return d, float(d.mean()) if d.size else 0.0


def yoked_optimize(P_a, P_b, cfg, seed_a, seed_b):
    base = cfg.base
    opt_a = MapOptimizer(P_a, base, seed_a)
    opt_b = MapOptimizer(P_b, base, seed_b)
    trace_a, trace_b = [], []
    for t in range(base.iterations):
        kl_a, grad_a = opt_a.gradient()
        kl_b, grad_b = opt_b.gradient()
        if t > 0:
            trace_a.append(kl_a)
            trace_b.append(kl_b)
        if cfg.lam > 0:
            _, g = alignment_penalty(opt_a.Y, opt_b.Y, cfg.lam)
            grad_a = grad_a + g
            grad_b = grad_b - g
        opt_a.step(grad_a)
        opt_b.step(grad_b)
    trace_a.append(opt_a.current_kl())
    trace_b.append(opt_b.current_kl())
    return opt_a.Y, trace_a, opt_b.Y, trace_b


def yoked_run(vectors_a, vectors_b, cfg=None, seed_b=None):
    """Yoke maps of two embeddings of the same N points (rows aligned).

    Map A is seeded with ``cfg.base.seed`` and map B with ``seed_b``
    (default ``cfg.base.seed + 1``).
    """
    cfg = cfg or YokeConfig()
    A = as_matrix(vectors_a, "vectors_a", min_rows=3)
    B = as_matrix(vectors_b, "vectors_b", min_rows=3)
    if A.shape[0] != B.shape[0]:
        raise DataError(f"row-count mismatch: {A.shape[0]} vs {B.shape[0]}")
    if seed_b is None:
        seed_b = cfg.base.seed + 1
    P_a, sig_a, res_a = joint_p(A, cfg.base)
    P_b, sig_b, res_b = joint_p(B, cfg.base)
    Y_a, tr_a, Y_b, tr_b = yoked_optimize(P_a, P_b, cfg, cfg.base.seed, seed_b)
    _, mean = displacement(Y_a, Y_b)
    return YokedResult(
        TsneResult(Y_a, tr_a, sig_a, res_a),
        TsneResult(Y_b, tr_b, sig_b, res_b),
        mean,
    )


class YokedTSNE(BaseEstimator):
    """Two aligned t-SNE maps; ``fit(X, X_other)`` takes row-aligned inputs.

    Attributes
    ----------
    embedding_, embedding_other_ : ndarray of shape (n_samples, 2)
    mean_displacement_ : float
    """

    def __init__(self, lam=0.01, perplexity=30.0, n_iter=1000, learning_rate=100.0,
                 exaggeration_factor=4.0, exaggeration_iters=100, n_jobs=1, random_state=0):
        self.lam = lam
        self.perplexity = perplexity
        self.n_iter = n_iter
        self.learning_rate = learning_rate
        self.exaggeration_factor = exaggeration_factor
        self.exaggeration_iters = exaggeration_iters
        self.n_jobs = n_jobs
        self.random_state = random_state

    def fit(self, X, X_other):
        base = TsneConfig(
            perplexity=self.perplexity,
            iterations=self.n_iter,
            learning_rate=self.learning_rate,
            exaggeration_factor=self.exaggeration_factor,
            exaggeration_iters=self.exaggeration_iters,
            seed=self.random_state,
            threads=self.n_jobs,
        )
        res = yoked_run(X, X_other, YokeConfig(self.lam, base))
        self.embedding_ = res.map_a.coords
        self.embedding_other_ = res.map_b.coords
        self.mean_displacement_ = res.mean_displacement
        self.result_ = res
        return self

    def fit_transform(self, X, X_other):
        self.fit(X, X_other)
        return self.embedding_, self.embedding_other_

"""Exact O(N^2) t-SNE, including joint train+test maps.

Every quantity is dense. Work that may run on several threads (per-row
bandwidth calibration, per-row gradient assembly) writes into fixed slots
and reduces each row in index order, so the result is bitwise identical for
any thread count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import DataError, as_matrix

Q_FLOOR = 1e-12


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    iterations: int = 1000
    learning_rate: float = 100.0
    momentum_early: float = 0.5
    momentum_late: float = 0.8
    momentum_switch_iter: int = 250
    exaggeration_factor: float = 4.0
    exaggeration_iters: int = 100
    seed: int = 0
    calibration_tolerance: float = 1e-5
    calibration_max_iters: int = 50
    threads: int = 1

    def __post_init__(self):
        if not self.perplexity > 1:
            raise DataError("perplexity must be > 1")
        if self.iterations < 1:
            raise DataError("iterations must be positive")
        if not self.learning_rate > 0:
            raise DataError("learning_rate must be positive")
        for m in (self.momentum_early, self.momentum_late):
            if not 0 <= m < 1:
                raise DataError("momentum must lie in [0, 1)")
        if not self.exaggeration_factor >= 1:
            raise DataError("exaggeration_factor must be >= 1")
        if not 0 <= self.exaggeration_iters <= self.iterations:
            raise DataError("exaggeration_iters must lie in [0, iterations]")
        if not self.calibration_tolerance > 0 or self.calibration_max_iters < 1:
            raise DataError("calibration tolerance and max_iters must be positive")
        if self.threads < 1:
            raise DataError("threads must be >= 1")

    def to_dict(self):
        return asdict(self)


@dataclass
class TsneResult:
    coords: np.ndarray
    kl_trace: list = field(default_factory=list)
    sigmas: np.ndarray = None
    calibration_residuals: np.ndarray = None


def pairwise_sq_dists(vectors):
    """Squared Euclidean distances, computed per pair so the result is exactly symmetric."""
    X = np.asarray(vectors, dtype=np.float64)
    diff = X[:, None, :] - X[None, :, :]
    D = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(D, 0.0)
    return D


def _row_distribution(d, sigma):
    # shift by the nearest distance so at least one kernel value is exp(0)
    logits = -(d - d.min()) / (2.0 * sigma * sigma)
    w = np.exp(logits)
    total = w.sum()
    p = w / total
    # entropy in bits: H = -sum p log2 p, with log p = logits - log(total)
    log_p = logits - np.log(total)
    H = -np.dot(p, log_p) / np.log(2.0)
    return p, 2.0**H


def calibrate_row(sq_dists_row, i, perplexity, tol=1e-5, max_iters=50):
    """Find sigma_i whose conditional distribution has the target perplexity.

    Bisection runs on ``log(sigma)`` over ``[1e-20, 1e20]``.

    Returns
    -------
    sigma : float
    p_cond : ndarray of shape (N,)
        Sums to 1 with a zero at position ``i``.
    residual : float
        ``|2^H - perplexity|`` at the returned sigma.
    """
    row = np.asarray(sq_dists_row, dtype=np.float64)
    n = row.size
    if n < 3:
        raise DataError("perplexity calibration needs N >= 3")
    if not 1 < perplexity <= n - 1:
        raise DataError(f"perplexity {perplexity} outside (1, N-1] for N={n}")
    others = np.delete(row, i)
    lo, hi = np.log(1e-20), np.log(1e20)
    sigma = 1.0
    p, perp = _row_distribution(others, sigma)
    for _ in range(max_iters):
        if abs(perp - perplexity) < tol:
            break
        mid = 0.5 * (lo + hi)
        sigma = float(np.exp(mid))
        p, perp = _row_distribution(others, sigma)
        if perp > perplexity:
            hi = mid
        else:
            lo = mid
    out = np.insert(p, i, 0.0)
    return sigma, out, abs(perp - perplexity)


def _parallel_rows(fn, n, threads):
    if threads <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))


def conditional_p(sq_dists, perplexity, tol=1e-5, max_iters=50, threads=1):
    """Row-wise ``p_{j|i}`` matrix plus per-row sigma and residual."""
    D = np.asarray(sq_dists, dtype=np.float64)
    rows = _parallel_rows(lambda i: calibrate_row(D[i], i, perplexity, tol, max_iters), D.shape[0], threads)
    P = np.vstack([r[1] for r in rows])
    sigmas = np.array([r[0] for r in rows])
    residuals = np.array([r[2] for r in rows])
    return P, sigmas, residuals


def symmetrize(p_cond):
    """``p_ij = (p_{j|i} + p_{i|j}) / (2N)``."""
    P = np.asarray(p_cond, dtype=np.float64)
    S = (P + P.T) / (2.0 * P.shape[0])
    np.fill_diagonal(S, 0.0)
    return S


def _student_kernel(Y):
    num = 1.0 / (1.0 + pairwise_sq_dists(Y))
    np.fill_diagonal(num, 0.0)
    return num


def q_matrix(coords):
    """Student-t similarities of the map; returns ``(Q, Z)``."""
    Y = np.asarray(coords, dtype=np.float64)
    if Y.shape[0] < 2:
        raise DataError("q_matrix needs at least 2 points")
    num = _student_kernel(Y)
    Z = num.sum()
    Q = np.maximum(num / Z, Q_FLOOR)
    np.fill_diagonal(Q, 0.0)
    return Q, Z


def kl_divergence(P, Q):
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    if P.shape != Q.shape:
        raise DataError(f"shape mismatch {P.shape} vs {Q.shape}")
    mask = P > 0
    np.fill_diagonal(mask, False)
    return max(0.0, float(np.sum(P[mask] * np.log(P[mask] / Q[mask]))))


def _q_and_gradient(P, Y, threads=1):
    num = _student_kernel(Y)
    Q = np.maximum(num / num.sum(), Q_FLOOR)
    np.fill_diagonal(Q, 0.0)
    W = (P - Q) * num
    n = Y.shape[0]
    grad = np.empty_like(Y)

    def rows(chunk):
        lo, hi = chunk
        diff = Y[lo:hi, None, :] - Y[None, :, :]
        grad[lo:hi] = 4.0 * (W[lo:hi, :, None] * diff).sum(axis=1)

    if threads <= 1:
        rows((0, n))
    else:
        bounds = np.linspace(0, n, threads + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(rows, zip(bounds[:-1], bounds[1:])))
    return Q, grad


def kl_gradient(P, Y, threads=1):
    """KL value and ``dC/dy_i = 4 sum_j (p_ij - q_ij)(1+|y_i-y_j|^2)^-1 (y_i - y_j)``."""
    Q, grad = _q_and_gradient(P, np.asarray(Y, dtype=np.float64), threads)
    return kl_divergence(P, Q), grad


def joint_p(vectors, cfg):
    """Symmetrized input affinities plus calibration diagnostics."""
    X = as_matrix(vectors, min_rows=3)
    n = X.shape[0]
    if not cfg.perplexity < n - 1:
        raise DataError(f"perplexity {cfg.perplexity} must be < N-1 = {n - 1}")
    P_cond, sigmas, residuals = conditional_p(
        pairwise_sq_dists(X),
        cfg.perplexity,
        cfg.calibration_tolerance,
        cfg.calibration_max_iters,
        cfg.threads,
    )
    return symmetrize(P_cond), sigmas, residuals


class MapOptimizer:
    """Momentum gradient descent state for one 2-D map.

    Split into ``gradient`` and ``step`` so coupled objectives
    (:mod:`embedviz.yoke`) can add terms between the two.
    """

    def __init__(self, P, cfg, seed):
        self.P = P
        self.cfg = cfg
        rng = np.random.default_rng(seed)
        self.Y = 1e-4 * rng.standard_normal((P.shape[0], 2))
        self.update = np.zeros_like(self.Y)
        self.iteration = 0

    def gradient(self):
        """Returns (unexaggerated KL at current Y, gradient of the current objective)."""
        cfg = self.cfg
        exaggerate = self.iteration < cfg.exaggeration_iters
        P = self.P * cfg.exaggeration_factor if exaggerate else self.P
        Q, grad = _q_and_gradient(P, self.Y, cfg.threads)
        return kl_divergence(self.P, Q), grad

    def step(self, grad):
        cfg = self.cfg
        if self.iteration < cfg.momentum_switch_iter:
            momentum = cfg.momentum_early
        else:
            momentum = cfg.momentum_late
        self.update = momentum * self.update - cfg.learning_rate * grad
        self.Y = self.Y + self.update
        self.Y = self.Y - self.Y.mean(axis=0)
        self.iteration += 1

    def current_kl(self):
        return kl_divergence(self.P, q_matrix(self.Y)[0])


def optimize(P, cfg, seed):
    """Run ``cfg.iterations`` steps; ``kl_trace[t]`` is the KL after step ``t``."""
    opt = MapOptimizer(P, cfg, seed)
    trace = []
    for t in range(cfg.iterations):
        kl, grad = opt.gradient()
        if t > 0:
            trace.append(kl)
        opt.step(grad)
    trace.append(opt.current_kl())
    return opt.Y, trace


def run(vectors, cfg=None):
    """t-SNE map of ``vectors`` (N x D) under ``cfg``."""
    cfg = cfg or TsneConfig()
    P, sigmas, residuals = joint_p(vectors, cfg)
    Y, trace = optimize(P, cfg, cfg.seed)
    return TsneResult(Y, trace, sigmas, residuals)


def joint_embed(train, test, cfg=None):
    """One map over train rows followed by test rows.

    Returns the :class:`TsneResult` and the split tag of each output row.
    """
    if len(test) and train.dim != test.dim:
        raise DataError(f"dimension mismatch: train {train.dim} vs test {test.dim}")
    vectors = np.vstack([train.vectors, test.vectors]) if len(test) else train.vectors
    tags = ["train"] * len(train) + ["test"] * len(test)
    return run(vectors, cfg), tags


class TSNE(BaseEstimator):
    """Exact t-SNE with a scikit-learn style interface.

    Parameters mirror :class:`TsneConfig`; ``random_state`` is the seed.

    Attributes
    ----------
    embedding_ : ndarray of shape (n_samples, 2)
    kl_trace_ : list of float
    kl_divergence_ : float
    sigmas_ : ndarray of shape (n_samples,)
    """

    def __init__(
        self,
        perplexity=30.0,
        n_iter=1000,
        learning_rate=100.0,
        momentum_early=0.5,
        momentum_late=0.8,
        momentum_switch_iter=250,
        exaggeration_factor=4.0,
        exaggeration_iters=100,
        calibration_tolerance=1e-5,
        calibration_max_iters=50,
        n_jobs=1,
        random_state=0,
    ):
        self.perplexity = perplexity
        self.n_iter = n_iter
        self.learning_rate = learning_rate
        self.momentum_early = momentum_early
        self.momentum_late = momentum_late
        self.momentum_switch_iter = momentum_switch_iter
        self.exaggeration_factor = exaggeration_factor
        self.exaggeration_iters = exaggeration_iters
        self.calibration_tolerance = calibration_tolerance
        self.calibration_max_iters = calibration_max_iters
        self.n_jobs = n_jobs
        self.random_state = random_state

    def config(self):
        return TsneConfig(
            perplexity=self.perplexity,
            iterations=self.n_iter,
            learning_rate=self.learning_rate,
            momentum_early=self.momentum_early,
            momentum_late=self.momentum_late,
            momentum_switch_iter=self.momentum_switch_iter,
            exaggeration_factor=self.exaggeration_factor,
            exaggeration_iters=self.exaggeration_iters,
            seed=self.random_state,
            calibration_tolerance=self.calibration_tolerance,
            calibration_max_iters=self.calibration_max_iters,
            threads=self.n_jobs,
        )

    def fit(self, X, y=None):
        result = run(X, self.config())
        self.embedding_ = result.coords
        self.kl_trace_ = result.kl_trace
        self.kl_divergence_ = result.kl_trace[-1]
        self.sigmas_ = result.sigmas
        self.n_features_in_ = np.asarray(X).shape[1]
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_

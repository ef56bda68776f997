"""Linear embedder ``z = normalize(x W)`` trained by plain SGD on mined units."""

import csv
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import DataError, as_labels, as_matrix
from .dataset import EmbeddingSet
from .mining import MinerConfig, mine, sample_batch
from .objective import batch_loss


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batches_per_epoch: int = 10
    p: int = 8
    k: int = 4
    learning_rate: float = 0.1
    miner: MinerConfig = field(default_factory=MinerConfig)
    temperature: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batches_per_epoch < 1:
            raise DataError("epochs must be >= 0 and batches_per_epoch >= 1")
        if self.p < 1 or self.k < 1:
            raise DataError("batch shape p, k must be positive")
        if not self.learning_rate > 0 or not self.temperature > 0:
            raise DataError("learning_rate and temperature must be positive")


def init_weights(d_in, d_out, seed=0):
    """Fan-in scaled Gaussian init, std ``1/sqrt(d_in)``."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal((d_in, d_out)) / np.sqrt(d_in)


def project(weights, X):
    """Map rows through ``weights`` and normalize; returns ``(Z, norms)``."""
    V = X @ weights
    norms = np.linalg.norm(V, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise DataError(f"row {int(np.flatnonzero(norms[:, 0] == 0)[0])} maps to the zero vector")
    return V / norms, norms


def normalization_backward(Z, norms, grad_z):
    """Apply the Jacobian of ``v -> v/|v|``: ``(I - z z^T) g / |v|``."""
    radial = np.einsum("ij,ij->i", Z, grad_z)[:, None]
    return (grad_z - radial * Z) / norms


def loss_and_weight_grad(weights, X, units, temperature):
    """Mean unit loss at ``weights`` and its gradient w.r.t. ``weights``."""
    Z, norms = project(weights, X)
    loss, grad_z = batch_loss(Z, units, temperature)
    grad_v = normalization_backward(Z, norms, grad_z)
    return loss, X.T @ grad_v


def embed(weights, data):
    """Embed an :class:`EmbeddingSet`; ids, labels and splits are kept."""
    weights = np.asarray(weights, dtype=np.float64)
    if data.dim != weights.shape[0]:
        raise DataError(f"model expects dim {weights.shape[0]}, data has dim {data.dim}")
    Z, _ = project(weights, data.vectors)
    return data.with_vectors(Z)


def train(weights, data, cfg):
    """Run ``cfg.epochs`` x ``cfg.batches_per_epoch`` SGD steps.

    Batches are drawn from train-split rows only. Units are mined on the
    current embedding of each batch, then ``W <- W - lr * dL/dW``.

    Returns
    -------
    weights : ndarray
        Trained copy; the input is not modified.
    trace : list of float
        Mean batch loss per epoch.
    """
    W = np.array(weights, dtype=np.float64, copy=True)
    if data.dim != W.shape[0]:
        raise DataError(f"model expects dim {W.shape[0]}, data has dim {data.dim}")
    rng = np.random.default_rng(cfg.seed)
    trace = []
    for _ in range(cfg.epochs):
        losses = []
        for _ in range(cfg.batches_per_epoch):
            batch = sample_batch(data, cfg.p, cfg.k, rng)
            X = data.vectors[batch.indices]
            Z, _ = project(W, X)
            units = mine(Z, batch.labels, cfg.miner, rng)
            if not units:
                continue
            loss, grad = loss_and_weight_grad(W, X, units, cfg.temperature)
            W -= cfg.learning_rate * grad
            losses.append(loss)
        trace.append(float(np.mean(losses)) if losses else float("nan"))
    return W, trace


def save_model(weights, path):
    """One CSV row per input dimension, header ``w0..w{D_out-1}``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"w{j}" for j in range(weights.shape[1])])
        for row in weights:
            writer.writerow([repr(float(v)) for v in row])


def load_model(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from None
    if not rows:
        raise DataError(f"{path}: empty model file")
    width = len(rows[0])
    out = []
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise DataError(f"{path}: line {line}: expected {width} columns, got {len(row)}")
        try:
            out.append([float(v) for v in row])
        except ValueError as exc:
            raise DataError(f"{path}: line {line}: {exc}") from None
    return np.array(out, dtype=np.float64).reshape(len(out), width)


class LinearEmbedder(TransformerMixin, BaseEstimator):
    """Metric-learning linear embedder onto the unit sphere.

    Parameters
    ----------
    n_components : int, default=64
        Output dimension.
    strategy : {"batch_all", "npairs", "semihard", "epshn"}, default="epshn"
        Triplet / tuple mining strategy.
    margin : float, default=0.1
        Semi-hard window width in cosine-similarity units.
    temperature : float, default=1.0
        Softmax temperature of the NCA loss.
    epochs, batches_per_epoch, p, k, learning_rate
        SGD schedule and ``p`` classes x ``k`` items batch shape.
    random_state : int, default=0
        Seeds both weight init and batch sampling.

    Attributes
    ----------
    weights_ : ndarray of shape (n_features_in_, n_components)
    loss_trace_ : list of float
    """

    def __init__(
        self,
        n_components=64,
        strategy="epshn",
        margin=0.1,
        temperature=1.0,
        epochs=50,
        batches_per_epoch=10,
        p=8,
        k=4,
        learning_rate=0.1,
        random_state=0,
    ):
        self.n_components = n_components
        self.strategy = strategy
        self.margin = margin
        self.temperature = temperature
        self.epochs = epochs
        self.batches_per_epoch = batches_per_epoch
        self.p = p
        self.k = k
        self.learning_rate = learning_rate
        self.random_state = random_state

    def train_config(self):
        return TrainConfig(
            epochs=self.epochs,
            batches_per_epoch=self.batches_per_epoch,
            p=self.p,
            k=self.k,
            learning_rate=self.learning_rate,
            miner=MinerConfig(strategy=self.strategy, margin=self.margin),
            temperature=self.temperature,
            seed=self.random_state,
        )

    def fit(self, X, y):
        X = as_matrix(X, min_rows=1)
        y = as_labels(y, X.shape[0])
        data = EmbeddingSet([str(i) for i in range(X.shape[0])], y, ["train"] * X.shape[0], X)
        W0 = init_weights(X.shape[1], self.n_components, self.random_state)
        self.weights_, self.loss_trace_ = train(W0, data, self.train_config())
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "weights_")
        X = as_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise DataError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return project(self.weights_, X)[0]

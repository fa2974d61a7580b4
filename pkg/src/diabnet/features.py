"""Overcomplete sparse autoencoder: 8 features -> 400 sparse features.

The latent layer is wider than the input and relu-activated; an L1
penalty on the latent activations (mean over the batch) pushes most
units to zero per row. Encoded rows can be reshaped row-major to 20x20
grids for the convolutional classifier.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from ._training import minibatch_indices, require_finite_loss
from ._validation import as_float_matrix, check_feature_count
from .dataset import Dataset
from .errors import ConfigError, DataError
from .layers import Dense
from .optim import Adam
from .rng import Rng
from .tensor import Tape, Tensor, add, backward, l1_penalty, mse_loss, scale

GRID_SIDE = 20
LATENT_WIDTH = GRID_SIDE * GRID_SIDE

PENALTY_TARGETS = ("latent", "weights")


@dataclass(frozen=True)
class SaeConfig:
    lambda_: float = 1e-3
    hidden: tuple = (64,)
    latent_dim: int = LATENT_WIDTH
    epochs: int = 400
    batch_size: int = 32
    lr: float = 1e-3
    seed: int = 0
    penalty_target: str = "latent"

    def __post_init__(self):
        if self.lambda_ < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lambda_}")
        if self.latent_dim < 1:
            raise ConfigError(f"latent_dim must be >= 1, got {self.latent_dim}")
        if self.penalty_target not in PENALTY_TARGETS:
            raise ConfigError(
                f"penalty_target must be one of {PENALTY_TARGETS}, "
                f"got {self.penalty_target!r}"
            )


class SaeModel:
    """Dense encoder to a wide relu latent, mirrored sigmoid decoder."""

    def __init__(self, cfg, rng, n_features=8):
        self.cfg = cfg
        self.n_features = n_features
        widths = (n_features,) + tuple(cfg.hidden) + (cfg.latent_dim,)
        self.encoder = [
            Dense(widths[i], widths[i + 1], rng, "relu", name=f"sae/encoder{i}")
            for i in range(len(widths) - 1)
        ]
        mirrored = (cfg.latent_dim,) + tuple(reversed(cfg.hidden))
        self.decoder = [
            Dense(mirrored[i], mirrored[i + 1], rng, "relu", name=f"sae/decoder{i}")
            for i in range(len(mirrored) - 1)
        ]
        self.decoder.append(
            Dense(mirrored[-1], n_features, rng, "sigmoid", name="sae/output")
        )
        self.history = {"loss": [], "mse": [], "l1": []}

    def encode(self, x):
        h = x
        for layer in self.encoder:
            h = layer(h)
        return h

    def decode(self, latent):
        h = latent
        for layer in self.decoder:
            h = layer(h)
        return h

    def forward(self, x):
        latent = self.encode(x)
        return self.decode(latent), latent

    @property
    def params(self):
        return [p for layer in self.encoder + self.decoder for p in layer.params]

    def named_params(self):
        return {p.name: p for p in self.params}


def sae_loss(x, x_hat, latent, lambda_):
    """MSE plus lambda times the batch-mean L1 of the latent activations."""
    if lambda_ < 0:
        raise ConfigError(f"lambda must be >= 0, got {lambda_}")
    recon = mse_loss(x_hat, x)
    sparsity = scale(l1_penalty([latent]), 1.0 / x.data.shape[0])
    if lambda_ == 0.0:
        # keep the reported component but never let 0 * inf poison the
        # total if activations ever explode
        return recon, recon, sparsity
    return add(recon, scale(sparsity, lambda_)), recon, sparsity


def train_sae(X, cfg):
    """Fit the autoencoder on rows normalized to [0, 1]."""
    X = as_float_matrix(X.X if isinstance(X, Dataset) else X)
    if X.min() < 0.0 or X.max() > 1.0:
        raise DataError("SAE training rows must be normalized to [0, 1]")

    rng = Rng(cfg.seed)
    model = SaeModel(cfg, rng, n_features=X.shape[1])
    adam = Adam(model.params, lr=cfg.lr)
    weight_tensors = [layer.w for layer in model.encoder + model.decoder]
    for epoch in range(cfg.epochs):
        totals = np.zeros(3)
        batches = minibatch_indices(X.shape[0], cfg.batch_size, rng)
        for batch_number, batch in enumerate(batches):
            xb = Tensor(X[batch])
            with Tape() as tape:
                x_hat, latent = model.forward(xb)
                if cfg.penalty_target == "latent":
                    loss, recon, sparsity = sae_loss(xb, x_hat, latent, cfg.lambda_)
                else:
                    recon = mse_loss(x_hat, xb)
                    sparsity = l1_penalty(weight_tensors)
                    loss = add(recon, scale(sparsity, cfg.lambda_))
                require_finite_loss(loss.data, epoch, batch_number, "SAE training")
                backward(tape, loss, model.params)
            adam.step()
            totals += (float(loss.data), float(recon.data), float(sparsity.data))
        count = len(batches)
        model.history["loss"].append(totals[0] / count)
        model.history["mse"].append(totals[1] / count)
        model.history["l1"].append(totals[2] / count)
    return model


def encode_features(model, X):
    """Deterministic latent activations for each row (no tape, no dropout)."""
    X = as_float_matrix(X)
    check_feature_count(X, model.n_features)
    return model.encode(Tensor(X)).data


def reshape_to_grid(features):
    """Row-major reshape N x 400 -> N x 20 x 20 (lossless)."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != LATENT_WIDTH:
        raise DataError(
            f"grid reshape expects N x {LATENT_WIDTH} features, "
            f"got shape {features.shape}"
        )
    return features.reshape(-1, GRID_SIDE, GRID_SIDE)


def grid_to_conv_input(grids):
    """Append the singleton channel axis expected by the conv layer."""
    grids = np.asarray(grids, dtype=np.float64)
    if grids.ndim != 3 or grids.shape[1:] != (GRID_SIDE, GRID_SIDE):
        raise DataError(
            f"conv input expects N x {GRID_SIDE} x {GRID_SIDE} grids, "
            f"got shape {grids.shape}"
        )
    return grids[..., np.newaxis]


class SparseAutoencoder(BaseEstimator, TransformerMixin):
    """scikit-learn-style wrapper: fit on rows, transform to 400 features."""

    def __init__(
        self,
        lambda_=1e-3,
        hidden=(64,),
        latent_dim=LATENT_WIDTH,
        epochs=400,
        batch_size=32,
        lr=1e-3,
        penalty_target="latent",
        random_state=0,
    ):
        self.lambda_ = lambda_
        self.hidden = hidden
        self.latent_dim = latent_dim
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.penalty_target = penalty_target
        self.random_state = random_state

    def _config(self):
        return SaeConfig(
            lambda_=self.lambda_,
            hidden=tuple(self.hidden),
            latent_dim=self.latent_dim,
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            seed=self.random_state,
            penalty_target=self.penalty_target,
        )

    def fit(self, X, y=None):
        self.model_ = train_sae(as_float_matrix(X), self._config())
        return self

    def transform(self, X):
        if not hasattr(self, "model_"):
            raise NotFittedError("SparseAutoencoder must be fitted before transform")
        return encode_features(self.model_, X)

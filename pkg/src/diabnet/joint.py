"""Joint training of the sparse autoencoder with a classifier head.

One encoder feeds two heads: the decoder reconstructs the 8 input
features while the classifier reads the same 400-unit latent (directly
for the MLP head, reshaped to a 20x20 grid for the CNN head). Both
losses backpropagate into the shared encoder, so class structure shapes
the learned features.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from ._training import minibatch_indices, require_finite_loss
from ._validation import as_float_matrix, as_label_vector
from .classifiers import ClassifierConfig, CnnModel, MlpModel
from .errors import ConfigError, DataError
from .features import GRID_SIDE, LATENT_WIDTH
from .layers import Dense
from .optim import Adam
from .rng import Rng
from .tensor import (
    Tape,
    Tensor,
    add,
    backward,
    bce_loss,
    l1_penalty,
    mse_loss,
    reshape,
    scale,
)

HEAD_KINDS = ("mlp", "cnn")


@dataclass(frozen=True)
class JointConfig:
    head: str = "cnn"
    alpha: float = 1.0  # classification-loss weight
    beta: float = 1.0  # reconstruction-loss weight
    lambda_: float = 1e-3  # latent L1 weight
    hidden: tuple = (64,)
    latent_dim: int = LATENT_WIDTH
    head_hidden: tuple = None  # None -> head defaults
    head_dropout: float = None
    epochs: int = None  # None -> 650 for cnn head, 450 for mlp head
    batch_size: int = 50
    lr: float = 1e-3
    threshold: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.head not in HEAD_KINDS:
            raise ConfigError(
                f"joint head must be one of {HEAD_KINDS}, got {self.head!r}"
            )
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("loss weights alpha and beta must be >= 0")
        if self.alpha == 0 and self.beta == 0:
            raise ConfigError("alpha and beta cannot both be zero")
        if self.lambda_ < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lambda_}")


class JointModel:
    """Shared encoder, reconstruction decoder, and classifier head."""

    def __init__(self, cfg, rng, n_features=8):
        if cfg.head == "cnn" and cfg.latent_dim != GRID_SIDE * GRID_SIDE:
            raise ConfigError(
                f"the cnn head needs a {GRID_SIDE * GRID_SIDE}-unit latent "
                f"for the {GRID_SIDE}x{GRID_SIDE} reshape, got {cfg.latent_dim}"
            )
        self.cfg = cfg
        self.n_features = n_features
        self.kind = f"joint_{cfg.head}"

        widths = (n_features,) + tuple(cfg.hidden) + (cfg.latent_dim,)
        self.encoder = [
            Dense(widths[i], widths[i + 1], rng, "relu", name=f"joint/encoder{i}")
            for i in range(len(widths) - 1)
        ]
        mirrored = (cfg.latent_dim,) + tuple(reversed(cfg.hidden))
        self.decoder = [
            Dense(mirrored[i], mirrored[i + 1], rng, "relu", name=f"joint/decoder{i}")
            for i in range(len(mirrored) - 1)
        ]
        self.decoder.append(
            Dense(mirrored[-1], n_features, rng, "sigmoid", name="joint/output")
        )

        head_cfg = ClassifierConfig(
            dropout=cfg.head_dropout,
            hidden=cfg.head_hidden,
            input_dim=cfg.latent_dim,
            threshold=cfg.threshold,
            seed=cfg.seed,
        )
        self.head = (
            CnnModel(head_cfg, rng) if cfg.head == "cnn" else MlpModel(head_cfg, rng)
        )
        self.default_epochs = self.head.default_epochs
        self.history = {"loss": [], "mse": [], "bce": [], "l1": []}

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

    def classify(self, latent, training=False, rng=None):
        if self.cfg.head == "cnn":
            grids = reshape(
                latent, (latent.data.shape[0], GRID_SIDE, GRID_SIDE, 1)
            )
            return self.head.forward(grids, training, rng)
        return self.head.forward(latent, training, rng)

    def forward(self, x, training=False, rng=None):
        """One shared-latent pass -> (reconstruction, probability, latent)."""
        latent = self.encode(x)
        return self.decode(latent), self.classify(latent, training, rng), latent

    @property
    def encoder_params(self):
        return [p for layer in self.encoder for p in layer.params]

    @property
    def params(self):
        decoder = [p for layer in self.decoder for p in layer.params]
        return self.encoder_params + decoder + self.head.params

    def named_params(self):
        return {p.name: p for p in self.params}

    def check_input(self, X):
        X = as_float_matrix(X)
        if X.shape[1] != self.n_features:
            raise DataError(
                f"joint model expects {self.n_features} features, "
                f"got {X.shape[1]}"
            )
        return X


def build_joint(cfg):
    return JointModel(cfg, Rng(cfg.seed))


def joint_loss(x, x_hat, latent, y, y_prob, cfg):
    """beta * MSE + alpha * BCE + lambda * batch-mean latent L1."""
    recon = mse_loss(x_hat, x)
    classification = bce_loss(y_prob, y)
    sparsity = scale(l1_penalty([latent]), 1.0 / x.data.shape[0])
    total = add(
        add(scale(recon, cfg.beta), scale(classification, cfg.alpha)),
        scale(sparsity, cfg.lambda_),
    )
    return total, recon, classification, sparsity


def train_joint(model, X, y, cfg=None):
    """Minimize the joint loss; history records every component."""
    cfg = cfg or model.cfg
    X = model.check_input(X)
    y = as_label_vector(y, X.shape[0]).reshape(-1, 1)
    epochs = cfg.epochs if cfg.epochs is not None else model.default_epochs

    rng = Rng(cfg.seed + 1)
    adam = Adam(model.params, lr=cfg.lr)
    for epoch in range(epochs):
        totals = np.zeros(4)
        batches = minibatch_indices(X.shape[0], cfg.batch_size, rng)
        for batch_number, batch in enumerate(batches):
            xb = Tensor(X[batch])
            yb = Tensor(y[batch])
            with Tape() as tape:
                x_hat, y_prob, latent = model.forward(xb, training=True, rng=rng)
                total, recon, classification, sparsity = joint_loss(
                    xb, x_hat, latent, yb, y_prob, cfg
                )
                require_finite_loss(
                    total.data, epoch, batch_number, "joint training"
                )
                backward(tape, total, model.params)
            adam.step()
            totals += (
                float(total.data),
                float(recon.data),
                float(classification.data),
                float(sparsity.data),
            )
        count = len(batches)
        model.history["loss"].append(totals[0] / count)
        model.history["mse"].append(totals[1] / count)
        model.history["bce"].append(totals[2] / count)
        model.history["l1"].append(totals[3] / count)
    return model, model.history


def joint_predict(model, X, threshold=None):
    """(probabilities, labels) from the classifier head, dropout off."""
    threshold = threshold if threshold is not None else model.cfg.threshold
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"threshold must be in (0, 1), got {threshold}")
    X = model.check_input(X)
    _, probabilities, _ = model.forward(Tensor(X), training=False)
    probabilities = probabilities.data.ravel()
    return probabilities, (probabilities >= threshold).astype(np.float64)


class JointAutoencoderClassifier(BaseEstimator, ClassifierMixin):
    """scikit-learn-style wrapper around the jointly trained model."""

    def __init__(
        self,
        head="cnn",
        alpha=1.0,
        beta=1.0,
        lambda_=1e-3,
        hidden=(64,),
        epochs=None,
        batch_size=50,
        lr=1e-3,
        threshold=0.5,
        random_state=0,
    ):
        self.head = head
        self.alpha = alpha
        self.beta = beta
        self.lambda_ = lambda_
        self.hidden = hidden
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.threshold = threshold
        self.random_state = random_state

    def _config(self):
        return JointConfig(
            head=self.head,
            alpha=self.alpha,
            beta=self.beta,
            lambda_=self.lambda_,
            hidden=tuple(self.hidden),
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            threshold=self.threshold,
            seed=self.random_state,
        )

    def fit(self, X, y):
        cfg = self._config()
        model = build_joint(cfg)
        train_joint(model, X, y, cfg)
        self.model_ = model
        self.classes_ = np.array([0.0, 1.0])
        return self

    def _fitted_model(self):
        if not hasattr(self, "model_"):
            raise NotFittedError(
                "JointAutoencoderClassifier must be fitted before prediction"
            )
        return self.model_

    def predict(self, X):
        _, labels = joint_predict(self._fitted_model(), X)
        return labels

    def predict_proba(self, X):
        probabilities, _ = joint_predict(self._fitted_model(), X)
        return np.column_stack([1.0 - probabilities, probabilities])

    def transform(self, X):
        model = self._fitted_model()
        return model.encode(Tensor(model.check_input(X))).data

"""Variational-autoencoder oversampling of the minority class.

A small VAE is trained on minority-class training rows only; new rows
are synthesized by encoding real minority rows, sampling the latent via
the reparameterization trick, and decoding. Balancing appends whole
generation passes (one synthetic per real minority row) until the
minority reaches the majority count, so a 449/242 split becomes 449/484.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ._training import minibatch_indices, require_finite_loss
from ._validation import as_float_matrix, as_label_vector
from .dataset import Dataset
from .errors import ConfigError, DataError, NumericsError
from .layers import Dense
from .optim import Adam
from .rng import Rng
from .tensor import Tape, Tensor, add, backward, exp, kl_standard_normal, mse_loss, mul, scale


@dataclass(frozen=True)
class VaeConfig:
    d_z: int = 2
    hidden: tuple = (16, 8)
    epochs: int = 200
    batch_size: int = 32
    lr: float = 1e-3
    kl_weight: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.d_z < 1:
            raise ConfigError(f"d_z must be >= 1, got {self.d_z}")
        if self.kl_weight < 0:
            raise ConfigError(f"kl_weight must be >= 0, got {self.kl_weight}")
        if not self.hidden:
            raise ConfigError("VAE needs at least one hidden layer size")


class VaeModel:
    """Encoder stack -> (mu, log-variance) heads -> mirrored decoder."""

    def __init__(self, cfg, rng, n_features=8):
        self.cfg = cfg
        self.n_features = n_features
        widths = (n_features,) + tuple(cfg.hidden)
        self.encoder = [
            Dense(widths[i], widths[i + 1], rng, "relu", name=f"vae/encoder{i}")
            for i in range(len(widths) - 1)
        ]
        self.mu_head = Dense(widths[-1], cfg.d_z, rng, None, name="vae/mu")
        self.logvar_head = Dense(widths[-1], cfg.d_z, rng, None, name="vae/logvar")
        mirrored = (cfg.d_z,) + tuple(reversed(cfg.hidden))
        self.decoder = [
            Dense(mirrored[i], mirrored[i + 1], rng, "relu", name=f"vae/decoder{i}")
            for i in range(len(mirrored) - 1)
        ]
        self.decoder.append(
            Dense(mirrored[-1], n_features, rng, "sigmoid", name="vae/output")
        )
        self.history = {"loss": [], "mse": [], "kl": []}

    def encode(self, x):
        h = x
        for layer in self.encoder:
            h = layer(h)
        return self.mu_head(h), self.logvar_head(h)

    def decode(self, z):
        h = z
        for layer in self.decoder:
            h = layer(h)
        return h

    @property
    def params(self):
        layers = self.encoder + [self.mu_head, self.logvar_head] + self.decoder
        return [p for layer in layers for p in layer.params]

    def named_params(self):
        return {p.name: p for p in self.params}


def reparameterize(mu, log_var, rng):
    """z = mu + exp(log_var / 2) * eps with eps ~ N(0, I)."""
    sigma = exp(scale(log_var, 0.5))
    eps = Tensor(rng.normal(mu.data.shape))
    return add(mu, mul(sigma, eps))


def vae_loss(x, x_hat, mu, log_var, kl_weight=1.0):
    """Reconstruction MSE plus weighted KL to the standard normal.

    The KL term is the closed form summed over latent dimensions and
    averaged over the batch rows.
    """
    recon = mse_loss(x_hat, x)
    if kl_weight == 0.0:
        # Do not touch the KL graph at weight zero: unregularized training
        # drives sigma toward 0 without bound, and the term's infinities
        # must not poison a loss it cannot contribute to.
        return recon, recon, Tensor(0.0)
    sigma = exp(scale(log_var, 0.5))
    kl_mean = scale(kl_standard_normal(mu, sigma), 1.0 / x.data.shape[0])
    return add(recon, scale(kl_mean, kl_weight)), recon, kl_mean


def train_vae(minority, cfg):
    """Fit a VAE on minority rows (normalized to [0, 1])."""
    X = as_float_matrix(minority.X if isinstance(minority, Dataset) else minority)
    if X.shape[0] < 2 * cfg.batch_size:
        raise DataError(
            f"VAE training needs at least {2 * cfg.batch_size} rows "
            f"(2x batch size), got {X.shape[0]}"
        )
    if X.min() < 0.0 or X.max() > 1.0:
        raise DataError("VAE training rows must be normalized to [0, 1]")

    rng = Rng(cfg.seed)
    model = VaeModel(cfg, rng, n_features=X.shape[1])
    adam = Adam(model.params, lr=cfg.lr)
    for epoch in range(cfg.epochs):
        totals = np.zeros(3)
        batches = minibatch_indices(X.shape[0], cfg.batch_size, rng)
        for batch_number, batch in enumerate(batches):
            xb = Tensor(X[batch])
            with Tape() as tape:
                mu, log_var = model.encode(xb)
                z = reparameterize(mu, log_var, rng)
                x_hat = model.decode(z)
                try:
                    loss, recon, kl = vae_loss(
                        xb, x_hat, mu, log_var, cfg.kl_weight
                    )
                except ValueError as exc:
                    # exploded weights can underflow sigma to exactly 0,
                    # which the KL primitive refuses before inf can appear
                    raise NumericsError(
                        f"VAE training: {exc} "
                        f"at epoch {epoch}, batch {batch_number}"
                    ) from None
                require_finite_loss(
                    loss.data, epoch, batch_number, "VAE training"
                )
                backward(tape, loss, model.params)
            adam.step()
            totals += (float(loss.data), float(recon.data), float(kl.data))
        count = len(batches)
        model.history["loss"].append(totals[0] / count)
        model.history["mse"].append(totals[1] / count)
        model.history["kl"].append(totals[2] / count)
    return model


def generate_synthetic(model, seeds, count, rng):
    """Encode seed rows, sample latents, decode; outputs clamped to [0, 1].

    Seed rows are cycled in order when ``count`` exceeds their number.
    Every output row is flagged synthetic and carries the seeds' label.
    """
    if count < 0:
        raise DataError(f"synthetic row count must be >= 0, got {count}")
    n_features = seeds.X.shape[1]
    if count == 0:
        return Dataset(
            np.empty((0, n_features)),
            np.empty((0,)),
            np.empty((0,), dtype=bool),
        )
    if seeds.n_rows == 0:
        raise DataError("cannot generate synthetics from zero seed rows")
    labels = np.unique(seeds.y)
    if labels.size != 1:
        raise DataError("seed rows must all carry the same (minority) label")

    cycled = np.arange(count) % seeds.n_rows
    x = Tensor(seeds.X[cycled])
    mu, log_var = model.encode(x)
    z = reparameterize(mu, log_var, rng)
    decoded = model.decode(z).data
    return Dataset(
        np.clip(decoded, 0.0, 1.0),
        np.full(count, labels[0]),
        np.ones(count, dtype=bool),
    )


BALANCE_POLICIES = ("one_pass", "exact")


def balance_dataset(train, model, rng, policy="one_pass"):
    """Append synthetic minority rows until counts balance.

    ``one_pass`` (default) appends whole passes of one synthetic per real
    minority row until the minority reaches the majority, keeping any
    overshoot. ``exact`` appends precisely the deficit.
    """
    if policy not in BALANCE_POLICIES:
        raise ConfigError(
            f"unknown balancing policy {policy!r}; choose from {BALANCE_POLICIES}"
        )
    zeros, ones = train.class_counts()
    if zeros == ones:
        return train
    minority_label = 1.0 if ones < zeros else 0.0
    deficit = abs(zeros - ones)

    real_minority = (train.y == minority_label) & ~train.synthetic_mask
    seeds = train.subset(np.flatnonzero(real_minority))
    if seeds.n_rows == 0:
        raise DataError("no real minority rows available as generation seeds")

    if policy == "one_pass":
        passes = math.ceil(deficit / seeds.n_rows)
        count = passes * seeds.n_rows
    else:
        count = deficit
    synthetic = generate_synthetic(model, seeds, count, rng)
    return Dataset(
        np.concatenate([train.X, synthetic.X]),
        np.concatenate([train.y, synthetic.y]),
        np.concatenate([train.synthetic_mask, synthetic.synthetic_mask]),
    )


class VAEOversampler(BaseEstimator):
    """scikit-learn-style wrapper: fit on (X, y), then resample to balance.

    After ``fit_resample``, ``synthetic_mask_`` flags the appended rows.
    """

    def __init__(
        self,
        d_z=2,
        hidden=(16, 8),
        epochs=200,
        batch_size=32,
        lr=1e-3,
        kl_weight=1.0,
        policy="one_pass",
        random_state=0,
    ):
        self.d_z = d_z
        self.hidden = hidden
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.kl_weight = kl_weight
        self.policy = policy
        self.random_state = random_state

    def _config(self):
        return VaeConfig(
            d_z=self.d_z,
            hidden=tuple(self.hidden),
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            kl_weight=self.kl_weight,
            seed=self.random_state,
        )

    def fit(self, X, y):
        X = as_float_matrix(X)
        y = as_label_vector(y, X.shape[0])
        zeros = int(np.sum(y == 0.0))
        minority_label = 1.0 if X.shape[0] - zeros < zeros else 0.0
        minority = Dataset(
            X[y == minority_label],
            y[y == minority_label],
            np.zeros(int(np.sum(y == minority_label)), dtype=bool),
        )
        self.model_ = train_vae(minority, self._config())
        self.minority_label_ = minority_label
        return self

    def fit_resample(self, X, y):
        X = as_float_matrix(X)
        y = as_label_vector(y, X.shape[0])
        self.fit(X, y)
        balanced = balance_dataset(
            Dataset(X, y, np.zeros(X.shape[0], dtype=bool)),
            self.model_,
            Rng(self.random_state + 1),
            policy=self.policy,
        )
        self.synthetic_mask_ = balanced.synthetic_mask
        return balanced.X, balanced.y

    def sample(self, seeds, count, seed=None):
        if not hasattr(self, "model_"):
            raise NotFittedError("VAEOversampler must be fitted before sampling")
        rng = Rng(self.random_state + 1 if seed is None else seed)
        return generate_synthetic(self.model_, seeds, count, rng)

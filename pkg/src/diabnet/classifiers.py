"""Standalone MLP and CNN classifiers over autoencoder features.

The CNN consumes 20x20 single-channel grids (reshaped 400-feature rows)
through a fixed geometry whose shape chain is asserted at construction:
20x20x1 -> conv(100 filters, 2x6) -> 19x15x100 -> maxpool(2x6) ->
9x2x100 -> flatten 1800 -> dense head -> 1 sigmoid unit.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from ._training import minibatch_indices, require_finite_loss
from ._validation import as_float_matrix, as_label_vector
from .errors import ConfigError, DataError
from .features import GRID_SIDE, grid_to_conv_input, reshape_to_grid
from .layers import Conv2D, Dense, Dropout, MaxPool2D
from .optim import Adam
from .rng import Rng
from .tensor import Tape, Tensor, backward, bce_loss, relu, reshape

CONV_FILTERS = 100
CONV_KERNEL = (2, 6)
POOL_SIZE = (2, 6)
CNN_INPUT_SHAPE = (GRID_SIDE, GRID_SIDE, 1)

#: The required stage-by-stage geometry; construction re-derives it from
#: the layer parameters and refuses to build anything that deviates.
EXPECTED_CNN_CHAIN = ((20, 20, 1), (19, 15, 100), (9, 2, 100), 1800)


@dataclass(frozen=True)
class ClassifierConfig:
    epochs: int = None  # None -> the model kind's default (MLP 450, CNN 650)
    batch_size: int = 50
    lr: float = 1e-3
    dropout: float = None  # None -> the model kind's default (MLP .3, CNN .2)
    hidden: tuple = None  # None -> (128, 32) for MLP, (64,) for the CNN head
    input_dim: int = 400  # MLP input width (8 for the raw-feature config)
    threshold: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError(
                f"decision threshold must be in (0, 1), got {self.threshold}"
            )
        if self.epochs is not None and self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.dropout is not None and not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")


def cnn_shape_chain(input_shape, kernel, pool, n_filters):
    """Derive (input, conv out, pool out, flat width) for valid conv+pool."""
    height, width, _ = input_shape
    conv_h = height - kernel[0] + 1
    conv_w = width - kernel[1] + 1
    if conv_h < 1 or conv_w < 1:
        raise ConfigError(f"kernel {kernel} larger than input {input_shape}")
    pool_h = conv_h // pool[0]
    pool_w = conv_w // pool[1]
    if pool_h < 1 or pool_w < 1:
        raise ConfigError(f"pool {pool} larger than conv output {conv_h}x{conv_w}")
    return (
        tuple(input_shape),
        (conv_h, conv_w, n_filters),
        (pool_h, pool_w, n_filters),
        pool_h * pool_w * n_filters,
    )


class MlpModel:
    """Dense stack with dropout after each hidden layer; sigmoid output."""

    kind = "mlp"
    default_epochs = 450

    def __init__(self, cfg, rng):
        hidden = tuple(cfg.hidden) if cfg.hidden is not None else (128, 32)
        if not hidden:
            raise ConfigError("MLP needs at least one hidden layer")
        rate = cfg.dropout if cfg.dropout is not None else 0.3
        self.cfg = cfg
        self.input_dim = cfg.input_dim
        widths = (cfg.input_dim,) + hidden
        self.hidden_layers = [
            Dense(widths[i], widths[i + 1], rng, "relu", name=f"mlp/dense{i}")
            for i in range(len(widths) - 1)
        ]
        self.dropouts = [Dropout(rate) for _ in self.hidden_layers]
        self.output = Dense(widths[-1], 1, rng, "sigmoid", name="mlp/output")

    def forward(self, x, training=False, rng=None):
        h = x
        for layer, drop in zip(self.hidden_layers, self.dropouts):
            h = drop(layer(h), training, rng)
        return self.output(h)

    @property
    def params(self):
        layers = self.hidden_layers + [self.output]
        return [p for layer in layers for p in layer.params]

    def named_params(self):
        return {p.name: p for p in self.params}

    def check_input(self, X):
        X = as_float_matrix(X)
        if X.shape[1] != self.input_dim:
            raise DataError(
                f"MLP expects {self.input_dim} features, got {X.shape[1]}"
            )
        return X


class CnnModel:
    """Fixed-geometry convolutional classifier on 20x20x1 grids."""

    kind = "cnn"
    default_epochs = 650

    def __init__(self, cfg, rng):
        head = tuple(cfg.hidden) if cfg.hidden is not None else (64,)
        if len(head) != 1:
            raise ConfigError("the CNN head takes exactly one hidden width")
        rate = cfg.dropout if cfg.dropout is not None else 0.2
        self.cfg = cfg

        chain = cnn_shape_chain(
            CNN_INPUT_SHAPE, CONV_KERNEL, POOL_SIZE, CONV_FILTERS
        )
        if chain != EXPECTED_CNN_CHAIN:
            raise ConfigError(
                f"CNN shape chain deviates from the required geometry: "
                f"derived {chain}, required {EXPECTED_CNN_CHAIN}"
            )
        self.shape_chain = chain
        self.flat_width = chain[-1]

        self.conv = Conv2D(CONV_FILTERS, CONV_KERNEL, 1, rng, name="cnn/conv")
        self.pool = MaxPool2D(POOL_SIZE)
        self.dropout_a = Dropout(rate)
        self.dense = Dense(self.flat_width, head[0], rng, "relu", name="cnn/dense")
        self.dropout_b = Dropout(rate)
        self.output = Dense(head[0], 1, rng, "sigmoid", name="cnn/output")

    def forward(self, x, training=False, rng=None):
        # relu commutes with max pooling (elementwise max(.,0) of a window
        # max equals the window max of elementwise max(.,0), ties and
        # gradient routing included), so pool first and apply relu to the
        # 9x2 map instead of the 19x15 one.
        h = relu(self.pool(self.conv(x)))
        h = self.dropout_a(h, training, rng)
        h = reshape(h, (x.data.shape[0], self.flat_width))
        h = self.dropout_b(self.dense(h), training, rng)
        return self.output(h)

    @property
    def params(self):
        layers = [self.conv, self.dense, self.output]
        return [p for layer in layers for p in layer.params]

    def named_params(self):
        return {p.name: p for p in self.params}

    def check_input(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 2:  # accept flat 400-feature rows
            X = grid_to_conv_input(reshape_to_grid(X))
        elif X.ndim == 3:
            X = grid_to_conv_input(X)
        if X.ndim != 4 or X.shape[1:] != CNN_INPUT_SHAPE:
            raise DataError(
                f"CNN expects N x {CNN_INPUT_SHAPE} grids, got shape {X.shape}"
            )
        if not np.all(np.isfinite(X)):
            raise DataError("CNN input contains non-finite values")
        return X


def build_mlp(cfg):
    return MlpModel(cfg, Rng(cfg.seed))


def build_cnn(cfg):
    return CnnModel(cfg, Rng(cfg.seed))


def train_classifier(model, X, y, cfg=None):
    """Minimize binary cross-entropy with Adam; returns the loss history."""
    cfg = cfg or model.cfg
    X = model.check_input(X)
    y = as_label_vector(y, X.shape[0]).reshape(-1, 1)
    epochs = cfg.epochs if cfg.epochs is not None else model.default_epochs

    # Continue the init generator so stacked builds+training stay seeded
    # from one value; a fresh stream keeps runs independent of build order.
    rng = Rng(cfg.seed + 1)
    adam = Adam(model.params, lr=cfg.lr)
    history = []
    for epoch in range(epochs):
        total = 0.0
        batches = minibatch_indices(X.shape[0], cfg.batch_size, rng)
        for batch_number, batch in enumerate(batches):
            xb = Tensor(X[batch])
            yb = Tensor(y[batch])
            with Tape() as tape:
                probabilities = model.forward(xb, training=True, rng=rng)
                loss = bce_loss(probabilities, yb)
                require_finite_loss(
                    loss.data, epoch, batch_number, f"{model.kind} training"
                )
                backward(tape, loss, model.params)
            adam.step()
            total += float(loss.data)
        history.append(total / len(batches))
    model.history = history
    return model, history


def predict(model, X, threshold=None):
    """(probabilities, hard labels); label 1 iff probability >= threshold."""
    threshold = threshold if threshold is not None else model.cfg.threshold
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"threshold must be in (0, 1), got {threshold}")
    X = model.check_input(X)
    probabilities = model.forward(Tensor(X), training=False).data.ravel()
    labels = (probabilities >= threshold).astype(np.float64)
    return probabilities, labels


class _EstimatorBase(BaseEstimator, ClassifierMixin):
    """Shared scikit-learn plumbing for the two classifier wrappers."""

    def _fitted_model(self):
        if not hasattr(self, "model_"):
            raise NotFittedError(
                f"{type(self).__name__} must be fitted before prediction"
            )
        return self.model_

    def fit(self, X, y):
        cfg = self._config(X)
        model = self._build(cfg)
        _, self.history_ = train_classifier(model, X, y, cfg)
        self.model_ = model
        self.classes_ = np.array([0.0, 1.0])
        return self

    def predict(self, X):
        _, labels = predict(self._fitted_model(), X)
        return labels

    def predict_proba(self, X):
        probabilities, _ = predict(self._fitted_model(), X)
        return np.column_stack([1.0 - probabilities, probabilities])


class MLPClassifier(_EstimatorBase):
    def __init__(
        self,
        hidden=(128, 32),
        dropout=0.3,
        epochs=450,
        batch_size=50,
        lr=1e-3,
        threshold=0.5,
        random_state=0,
    ):
        self.hidden = hidden
        self.dropout = dropout
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.threshold = threshold
        self.random_state = random_state

    def _config(self, X):
        return ClassifierConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            dropout=self.dropout,
            hidden=tuple(self.hidden),
            input_dim=as_float_matrix(X).shape[1],
            threshold=self.threshold,
            seed=self.random_state,
        )

    _build = staticmethod(build_mlp)


class CNNClassifier(_EstimatorBase):
    def __init__(
        self,
        head_width=64,
        dropout=0.2,
        epochs=650,
        batch_size=50,
        lr=1e-3,
        threshold=0.5,
        random_state=0,
    ):
        self.head_width = head_width
        self.dropout = dropout
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.threshold = threshold
        self.random_state = random_state

    def _config(self, X):
        return ClassifierConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            dropout=self.dropout,
            hidden=(self.head_width,),
            threshold=self.threshold,
            seed=self.random_state,
        )

    _build = staticmethod(build_cnn)

"""Layer building blocks over the autodiff primitives.

Dense and convolution weights are initialized Glorot-uniform
(limit = sqrt(6 / (fan_in + fan_out))), biases zero.
"""

import math

import numpy as np

from .tensor import Tensor, conv2d, dense, dropout, maxpool2d, relu, sigmoid

_ACTIVATIONS = {"relu": relu, "sigmoid": sigmoid, None: None}


def glorot_uniform(rng, shape, fan_in, fan_out):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, shape)


class Dense:
    def __init__(self, n_in, n_out, rng, activation=None, name="dense"):
        if n_in < 1 or n_out < 1:
            raise ValueError(f"dense layer sizes must be positive, got {n_in}->{n_out}")
        if activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.w = Tensor(
            glorot_uniform(rng, (n_in, n_out), n_in, n_out),
            requires_grad=True,
            name=f"{name}.w",
        )
        self.b = Tensor(np.zeros(n_out), requires_grad=True, name=f"{name}.b")
        self.activation = activation

    def __call__(self, x):
        out = dense(x, self.w, self.b)
        fn = _ACTIVATIONS[self.activation]
        return fn(out) if fn else out

    @property
    def params(self):
        return [self.w, self.b]


class Conv2D:
    def __init__(self, n_filters, kernel, in_channels, rng, stride=1, name="conv"):
        kh, kw = kernel
        fan_in = kh * kw * in_channels
        fan_out = n_filters * kh * kw
        self.w = Tensor(
            glorot_uniform(rng, (n_filters, kh, kw, in_channels), fan_in, fan_out),
            requires_grad=True,
            name=f"{name}.w",
        )
        self.b = Tensor(np.zeros(n_filters), requires_grad=True, name=f"{name}.b")
        self.stride = stride

    def __call__(self, x):
        return conv2d(x, self.w, self.b, self.stride)

    @property
    def params(self):
        return [self.w, self.b]


class MaxPool2D:
    def __init__(self, pool):
        self.pool = tuple(pool)

    def __call__(self, x):
        return maxpool2d(x, self.pool)


class Dropout:
    def __init__(self, rate):
        self.rate = rate

    def __call__(self, x, training, rng):
        return dropout(x, self.rate, training, rng)

"""Central finite-difference gradient checking against the autodiff engine."""

import numpy as np

from diabnet.tensor import Tape, backward


def numeric_grads(build_loss, params, h=1e-5):
    """Central differences of the scalar loss w.r.t. each param's elements.

    ``build_loss`` must rebuild the loss from the params' current data every
    time it is called (and must be deterministic).
    """
    grads = []
    for p in params:
        g = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = build_loss().item()
            flat[i] = orig - h
            fm = build_loss().item()
            flat[i] = orig
            gflat[i] = (fp - fm) / (2.0 * h)
        grads.append(g)
    return grads


def max_relative_error(build_loss, params, h=1e-5):
    """Worst relative error between analytic and numeric gradients, with
    relative defined against max(1, |analytic|, |numeric|)."""
    with Tape() as tape:
        loss = build_loss()
    backward(tape, loss, params=params)
    analytic = [p.grad.copy() for p in params]
    for p in params:
        p.grad = None
    numeric = numeric_grads(build_loss, params, h=h)
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1.0)
        worst = max(worst, float((np.abs(a - n) / denom).max()))
    return worst


def assert_gradients_match(build_loss, params, h=1e-5, tol=1e-4):
    err = max_relative_error(build_loss, params, h=h)
    assert err < tol, f"gradient mismatch: max relative error {err:.3e} >= {tol}"

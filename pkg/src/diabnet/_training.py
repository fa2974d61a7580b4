"""Shared mini-batch machinery for the training loops."""

import numpy as np

from .errors import NumericsError


def minibatch_indices(n_rows, batch_size, rng):
    """Seeded shuffle of ``range(n_rows)`` cut into batches.

    The trailing partial batch is kept (dropping it would starve tiny
    datasets). ``rng`` is the owning loop's generator, so epoch order is
    reproducible for a fixed seed.
    """
    order = rng.permutation(n_rows)
    return [
        order[start : start + batch_size]
        for start in range(0, n_rows, batch_size)
    ]


def require_finite_loss(loss_value, epoch, batch, context):
    """Abort training with location diagnostics on NaN/Inf loss."""
    if not np.isfinite(loss_value):
        raise NumericsError(
            f"{context}: non-finite loss {loss_value!r} "
            f"at epoch {epoch}, batch {batch}"
        )
    return float(loss_value)

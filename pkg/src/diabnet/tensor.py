"""Minimal reverse-mode autodiff on dense float64 arrays.

Primitives record themselves on the active :class:`Tape` during a forward
pass; :func:`backward` replays the tape in reverse and assigns each
reachable tensor's gradient (summing fan-out contributions within the
pass). Only the operations the pipeline needs exist: dense
affine maps, valid 2-D cross-correlation, non-overlapping max pooling,
inverted dropout, sigmoid/relu/exp elementwise maps, and the loss terms
(MSE, binary cross-entropy, Gaussian KL, L1).
"""

import numpy as np

_active_tape = None

BCE_EPS = 1e-7


class Tensor:
    """Dense n-dimensional float64 array with an optional gradient slot."""

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.name = name
        self._needs_grad = self.requires_grad

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}{tag})"


class Tape:
    """Ordered record of executed primitives for one forward pass.

    Use as a context manager around the forward computation; at most one
    tape may be active at a time (training loops are single-owner).
    """

    def __init__(self):
        self._records = []

    def __enter__(self):
        global _active_tape
        if _active_tape is not None:
            raise RuntimeError("another tape is already active")
        _active_tape = self
        return self

    def __exit__(self, *exc):
        global _active_tape
        _active_tape = None
        return False

    def __len__(self):
        return len(self._records)

    def clear(self):
        self._records.clear()


def _record(output, inputs, rule):
    tape = _active_tape
    if tape is not None and any(t._needs_grad for t in inputs):
        output._needs_grad = True
        tape._records.append((output, inputs, rule))
    return output


def backward(tape, loss, params=()):
    """Populate ``grad`` on every tensor the scalar ``loss`` depends on.

    Each call assigns fresh gradients (fan-out within the pass is summed;
    nothing carries over from previous calls). Tensors in ``params`` that
    the loss never touched get an explicit zero gradient. The tape is
    cleared afterwards.
    """
    if loss.data.size != 1:
        raise ValueError(f"loss must be scalar, got shape {loss.data.shape}")
    if not any(out is loss for out, _, _ in tape._records):
        raise ValueError("loss was not produced by an operation on this tape")

    flows = {id(loss): [loss, np.ones_like(loss.data)]}
    for out, inputs, rule in reversed(tape._records):
        entry = flows.pop(id(out), None)
        if entry is None:
            continue
        for t, g in zip(inputs, rule(entry[1])):
            if g is None or not t._needs_grad:
                continue
            held = flows.get(id(t))
            if held is None:
                flows[id(t)] = [t, g]
            else:
                # rules may return aliased arrays; never accumulate in place
                held[1] = held[1] + g

    reached = set()
    for t, g in flows.values():
        if t.requires_grad:
            t.grad = g
            reached.add(id(t))
    for p in params:
        if id(p) not in reached:
            p.grad = np.zeros_like(p.data)
    tape.clear()


# ---------------------------------------------------------------------------
# primitives

def dense(x, w, b):
    """Affine map: out[n, j] = sum_i x[n, i] * w[i, j] + b[j]."""
    if x.data.ndim != 2 or w.data.ndim != 2 or x.data.shape[1] != w.data.shape[0]:
        raise ValueError(
            f"dense: input {x.data.shape} does not chain with weights {w.data.shape}"
        )
    if b.data.shape != (w.data.shape[1],):
        raise ValueError(
            f"dense: bias {b.data.shape} does not match weights {w.data.shape}"
        )
    out = Tensor(x.data @ w.data + b.data)

    def rule(g):
        return g @ w.data.T, x.data.T @ g, g.sum(axis=0)

    return _record(out, (x, w, b), rule)


def conv2d(x, filters, bias, stride=1):
    """Valid (unpadded) 2-D cross-correlation over NHWC input.

    ``filters`` has shape (K, kh, kw, C); output spatial size is
    floor((H - kh) / stride) + 1 by floor((W - kw) / stride) + 1.
    """
    if x.data.ndim != 4:
        raise ValueError(f"conv2d: expected NHWC input, got shape {x.data.shape}")
    if filters.data.ndim != 4:
        raise ValueError(f"conv2d: expected KhwC filters, got shape {filters.data.shape}")
    n, h, w_in, c = x.data.shape
    k, kh, kw, fc = filters.data.shape
    if fc != c:
        raise ValueError(f"conv2d: input channels {c} != filter channels {fc}")
    if kh > h or kw > w_in:
        raise ValueError(
            f"conv2d: kernel ({kh}, {kw}) larger than input ({h}, {w_in})"
        )
    if bias.data.shape != (k,):
        raise ValueError(f"conv2d: bias {bias.data.shape} does not match {k} filters")
    if stride < 1:
        raise ValueError(f"conv2d: stride must be positive, got {stride}")

    oh = (h - kh) // stride + 1
    ow = (w_in - kw) // stride + 1
    # im2col with a trailing ones column so the bias rides inside the single
    # matmul (and its gradient falls out of the same backward matmul).
    width = kh * kw * c
    cols = np.empty((n, oh, ow, width + 1))
    cols[..., width] = 1.0
    cols6 = cols[..., :width].reshape(n, oh, ow, kh, kw, c)
    for i in range(kh):
        for j in range(kw):
            cols6[:, :, :, i, j, :] = x.data[
                :, i : i + stride * oh : stride, j : j + stride * ow : stride, :
            ]
    cols2 = cols.reshape(n * oh * ow, width + 1)
    wmat = np.empty((k, width + 1))
    wmat[:, :width] = filters.data.reshape(k, width)
    wmat[:, width] = bias.data
    out = Tensor((cols2 @ wmat.T).reshape(n, oh, ow, k))

    def rule(g):
        gm = g.reshape(n * oh * ow, k)
        dwb = gm.T @ cols2
        dw = dwb[:, :width].reshape(filters.data.shape)
        db = dwb[:, width]
        if not x._needs_grad:
            return None, dw, db
        dcols = (gm @ wmat)[:, :width].reshape(n, oh, ow, kh, kw, c)
        dx = np.zeros_like(x.data)
        for i in range(kh):
            for j in range(kw):
                dx[:, i : i + stride * oh : stride, j : j + stride * ow : stride, :] += (
                    dcols[:, :, :, i, j, :]
                )
        return dx, dw, db

    return _record(out, (x, filters, bias), rule)


def maxpool2d(x, pool):
    """Non-overlapping max pooling; trailing rows/columns that do not fill
    a window are dropped. Gradient routes to the first (row-major) maximum
    of each window."""
    if x.data.ndim != 4:
        raise ValueError(f"maxpool2d: expected NHWC input, got shape {x.data.shape}")
    ph, pw = pool
    n, h, w_in, c = x.data.shape
    if ph < 1 or pw < 1:
        raise ValueError(f"maxpool2d: pool dimensions must be positive, got {pool}")
    if ph > h or pw > w_in:
        raise ValueError(f"maxpool2d: pool ({ph}, {pw}) larger than input ({h}, {w_in})")
    oh, ow = h // ph, w_in // pw
    k = ph * pw

    # Window cells as the leading axis, ordered (p, q) row-major; cell j of
    # window lane (b, i, jw, ch) is x[b, i*ph + j//pw, jw*pw + j%pw, ch].
    v6 = x.data[:, : oh * ph, : ow * pw, :].reshape(n, oh, ph, ow, pw, c)
    win = np.ascontiguousarray(v6.transpose(2, 4, 0, 1, 3, 5)).reshape(k, -1)
    m = win.max(axis=0)
    out = Tensor(m.reshape(n, oh, ow, c))

    def rule(g):
        # First (row-major) maximum per window: mark every maximal cell,
        # weight cell j by 2^(k-1-j), and read the highest set bit back off
        # the weighted sum with frexp. Exact while the distinct powers of
        # two fit float64's integer range (k <= 53).
        if k <= 53:
            bits = np.zeros(m.shape)
            for j in range(k):
                bits += (win[j] == m) * (2.0 ** (k - 1 - j))
            idx = k - np.frexp(bits)[1]
        else:
            idx = win.argmax(axis=0)
        idx = idx.reshape(n, oh, ow, c)
        # Scatter through flat indices: windows are disjoint, so every
        # selected cell is distinct and plain fancy assignment is safe.
        bb = np.arange(n).reshape(n, 1, 1, 1)
        ii = np.arange(oh).reshape(1, oh, 1, 1)
        jj = np.arange(ow).reshape(1, 1, ow, 1)
        cc = np.arange(c).reshape(1, 1, 1, c)
        rows = ii * ph + idx // pw
        cols = jj * pw + idx % pw
        dx = np.zeros(x.data.shape)
        dx.reshape(-1)[((bb * h + rows) * w_in + cols) * c + cc] = g
        return (dx,)

    return _record(out, (x,), rule)


def dropout(x, rate, training, rng=None):
    """Inverted dropout: zero with probability ``rate``, scale survivors by
    1/(1-rate). Identity when not training or rate is 0."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout: rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    keep = rng.uniform(shape=x.data.shape) >= rate
    factor = keep / (1.0 - rate)
    out = Tensor(x.data * factor)

    def rule(g):
        return (g * factor,)

    return _record(out, (x,), rule)


def sigmoid(x):
    """Numerically stable logistic function (sign-split form)."""
    v = x.data
    s = np.empty_like(v)
    pos = v >= 0
    s[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    s[~pos] = ev / (1.0 + ev)
    out = Tensor(s)

    def rule(g):
        return (g * s * (1.0 - s),)

    return _record(out, (x,), rule)


def relu(x):
    out = Tensor(np.maximum(x.data, 0.0))

    def rule(g):
        return (g * (x.data > 0.0),)

    return _record(out, (x,), rule)


def exp(x):
    e = np.exp(x.data)
    out = Tensor(e)

    def rule(g):
        return (g * e,)

    return _record(out, (x,), rule)


def add(a, b):
    if a.data.shape != b.data.shape:
        raise ValueError(f"add: shapes {a.data.shape} and {b.data.shape} differ")
    out = Tensor(a.data + b.data)

    def rule(g):
        return g, g

    return _record(out, (a, b), rule)


def mul(a, b):
    if a.data.shape != b.data.shape:
        raise ValueError(f"mul: shapes {a.data.shape} and {b.data.shape} differ")
    out = Tensor(a.data * b.data)

    def rule(g):
        return g * b.data, g * a.data

    return _record(out, (a, b), rule)


def scale(x, c):
    """Multiply by a python float (constant, no gradient of its own)."""
    c = float(c)
    out = Tensor(x.data * c)

    def rule(g):
        return (g * c,)

    return _record(out, (x,), rule)


def reshape(x, shape):
    out = Tensor(x.data.reshape(shape))

    def rule(g):
        return (g.reshape(x.data.shape),)

    return _record(out, (x,), rule)


def mse_loss(x, y):
    """Mean of squared differences over all elements."""
    if x.data.shape != y.data.shape:
        raise ValueError(f"mse_loss: shapes {x.data.shape} and {y.data.shape} differ")
    diff = x.data - y.data
    out = Tensor(np.mean(diff * diff))
    n = x.data.size

    def rule(g):
        d = g * 2.0 * diff / n
        return d, -d

    return _record(out, (x, y), rule)


def bce_loss(p, y):
    """Binary cross-entropy of probabilities ``p`` against {0,1} targets,
    with p clamped to [BCE_EPS, 1 - BCE_EPS]. Targets get no gradient."""
    if p.data.shape != y.data.shape:
        raise ValueError(f"bce_loss: shapes {p.data.shape} and {y.data.shape} differ")
    t = y.data
    if not np.all((t == 0.0) | (t == 1.0)):
        raise ValueError("bce_loss: targets must be 0 or 1")
    pc = np.clip(p.data, BCE_EPS, 1.0 - BCE_EPS)
    out = Tensor(-np.mean(t * np.log(pc) + (1.0 - t) * np.log(1.0 - pc)))
    n = p.data.size
    inside = (p.data > BCE_EPS) & (p.data < 1.0 - BCE_EPS)

    def rule(g):
        dp = g * (pc - t) / (pc * (1.0 - pc) * n)
        return dp * inside, None

    return _record(out, (p, y), rule)


def kl_standard_normal(mu, sigma):
    """Closed-form KL divergence of elementwise N(mu, sigma) from N(0, 1):
    sum of 0.5 * (mu^2 + sigma^2 - 1 - ln sigma^2)."""
    if mu.data.shape != sigma.data.shape:
        raise ValueError(
            f"kl_standard_normal: shapes {mu.data.shape} and {sigma.data.shape} differ"
        )
    s = sigma.data
    if not np.all(s > 0.0):
        raise ValueError("kl_standard_normal: sigma must be strictly positive")
    # 2*log(s) rather than log(s**2): s**2 underflows to 0 (and the log
    # to -inf) for s below ~1e-154, which tiny learned variances do reach.
    out = Tensor(0.5 * np.sum(mu.data**2 + s**2 - 1.0 - 2.0 * np.log(s)))

    def rule(g):
        return g * mu.data, g * (s - 1.0 / s)

    return _record(out, (mu, sigma), rule)


def l1_penalty(tensors):
    """Sum of absolute values over every listed tensor; subgradient at an
    exact zero is 0."""
    tensors = list(tensors)
    out = Tensor(sum(np.abs(t.data).sum() for t in tensors))

    def rule(g):
        return tuple(g * np.sign(t.data) for t in tensors)

    return _record(out, tuple(tensors), rule)

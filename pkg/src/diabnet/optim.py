"""Adam optimizer over an explicit parameter list."""

import numpy as np


class Adam:
    """Adam with bias correction. A missing gradient counts as zero, so the
    timestep still advances and momentum keeps decaying."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        # work buffers so a step allocates nothing
        self._a = [np.empty_like(p.data) for p in self.params]
        self._b = [np.empty_like(p.data) for p in self.params]

    def step(self):
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for i, p in enumerate(self.params):
            g = p.grad
            if g is None:
                g = 0.0
            elif g.shape != self.m[i].shape:
                raise ValueError(
                    f"adam: gradient shape {g.shape} does not match state {self.m[i].shape}"
                )
            m, v, a, b = self.m[i], self.v[i], self._a[i], self._b[i]
            m *= self.beta1
            np.multiply(g, 1.0 - self.beta1, out=a)
            m += a
            v *= self.beta2
            np.multiply(g, 1.0 - self.beta2, out=a)
            a *= g
            v += a
            np.divide(m, c1, out=a)
            a *= self.lr
            np.divide(v, c2, out=b)
            np.sqrt(b, out=b)
            b += self.epsilon
            a /= b
            p.data -= a

    def zero_grad(self):
        for p in self.params:
            p.grad = None

"""Adam optimizer with lazy per-parameter state and plateau-based decay.

Parameters are updated only on the steps where they receive a gradient
(round-robin batching touches one (language, task) pair at a time), so
moment estimates and bias-correction counters are kept per parameter.
"""

from __future__ import annotations

import numpy as np


class Adam:
    def __init__(self, lr=0.02, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.epsilon = float(epsilon)
        self.m = {}
        self.v = {}
        self.t = {}

    def step(self, params, grads):
        """Apply one update in place; ``params`` maps name -> ndarray."""
        for name, g in grads.items():
            p = params[name]
            if name not in self.m:
                self.m[name] = np.zeros_like(p)
                self.v[name] = np.zeros_like(p)
                self.t[name] = 0
            self.t[name] += 1
            t = self.t[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            m_hat = m / (1.0 - self.beta1 ** t)
            v_hat = v / (1.0 - self.beta2 ** t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.epsilon)


class PlateauScheduler:
    """Halve the learning rate when the monitored loss stops improving."""

    def __init__(self, optimizer, factor=0.5, patience=2, min_delta=0.0):
        self.optimizer = optimizer
        self.factor = float(factor)
        self.patience = int(patience)
        self.min_delta = float(min_delta)
        self.best = np.inf
        self.stale = 0

    def step(self, loss):
        """Record an epoch loss; returns True if the rate was decayed."""
        if loss < self.best - self.min_delta:
            self.best = loss
            self.stale = 0
            return False
        self.stale += 1
        if self.stale >= self.patience:
            self.optimizer.lr *= self.factor
            self.stale = 0
            return True
        return False

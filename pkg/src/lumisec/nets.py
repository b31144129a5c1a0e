"""Small numpy MLPs with hand-written backprop, plus Adam."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class MLP:
    """input -> tanh(hidden) -> tanh(hidden) -> linear head.

    Parameters live in ``self.params`` (``W1, b1, W2, b2, W3, b3``); weights
    are stored ``(fan_in, fan_out)`` so batches are row vectors.
    """

    names = ("W1", "b1", "W2", "b2", "W3", "b3")

    def __init__(self, n_in: int, n_hidden: int, n_out: int, rng: np.random.Generator):
        self.params = {
            "W1": glorot(rng, n_in, n_hidden), "b1": np.zeros(n_hidden),
            "W2": glorot(rng, n_hidden, n_hidden), "b2": np.zeros(n_hidden),
            "W3": glorot(rng, n_hidden, n_out), "b3": np.zeros(n_out),
        }

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.params["W1"].shape[0], self.params["W1"].shape[1], self.params["W3"].shape[1]

    def forward(self, x: np.ndarray):
        p = self.params
        h1 = np.tanh(x @ p["W1"] + p["b1"])
        h2 = np.tanh(h1 @ p["W2"] + p["b2"])
        out = h2 @ p["W3"] + p["b3"]
        return out, (x, h1, h2)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache, d_out: np.ndarray) -> dict[str, np.ndarray]:
        x, h1, h2 = cache
        p = self.params
        grads = {"W3": h2.T @ d_out, "b3": d_out.sum(axis=0)}
        d_z2 = (d_out @ p["W3"].T) * (1.0 - h2 * h2)
        grads["W2"] = h1.T @ d_z2
        grads["b2"] = d_z2.sum(axis=0)
        d_z1 = (d_z2 @ p["W2"].T) * (1.0 - h1 * h1)
        grads["W1"] = x.T @ d_z1
        grads["b1"] = d_z1.sum(axis=0)
        return grads

    def copy(self) -> "MLP":
        new = object.__new__(MLP)
        new.params = {k: v.copy() for k, v in self.params.items()}
        return new

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.params.values())


@dataclass
class Adam:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k, g in grads.items():
            m = self.m.setdefault(k, np.zeros_like(g))
            v = self.v.setdefault(k, np.zeros_like(g))
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            params[k] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))

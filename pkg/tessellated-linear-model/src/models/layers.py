"""
Dense layers, activations and dropout with hand-written backward passes

Rows are samples: a layer maps an n x d_in batch to n x d_out.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class Dense:
    """x @ weight + bias"""
    weight: np.ndarray
    bias: np.ndarray

    @classmethod
    def initialise(cls, d_in: int, d_out: int, scale: float, rng: np.random.Generator) -> "Dense":
        """Weights ~ Normal(0, scale^2), biases zero"""
        return cls(weight=rng.normal(0.0, scale, size=(d_in, d_out)), bias=np.zeros(d_out))

    @property
    def shape(self):
        return self.weight.shape

    def forward(self, x: np.ndarray) -> np.ndarray:
        return x @ self.weight + self.bias

    def backward(self, x: np.ndarray, grad_out: np.ndarray):
        """Return (grad wrt input, grad wrt weight, grad wrt bias)"""
        return grad_out @ self.weight.T, x.T @ grad_out, grad_out.sum(axis=0)

    def copy(self) -> "Dense":
        return Dense(self.weight.copy(), self.bias.copy())


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def relu_backward(z: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    return grad_out * (z > 0)


def leaky_relu(z: np.ndarray, slope: float) -> np.ndarray:
    return np.where(z > 0, z, slope * z)


def leaky_relu_backward(z: np.ndarray, grad_out: np.ndarray, slope: float) -> np.ndarray:
    return grad_out * np.where(z > 0, 1.0, slope)


def dropout_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted dropout: kept units are scaled by 1 / (1 - rate)"""
    if rate <= 0:
        return np.ones(shape)
    keep = 1.0 - rate
    return (rng.random(shape) < keep) / keep

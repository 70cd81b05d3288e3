"""Hidden-layer activations and their derivatives.

Derivatives are expressed in terms of the pre-activation ``z`` so the backward
pass only needs the cached affine outputs.
"""

from collections.abc import Callable

import numpy as np
from scipy.special import expit

from ..models import Activation

ArrayFn = Callable[[np.ndarray], np.ndarray]


def _elu(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, z, np.expm1(np.minimum(z, 0.0)))


def _elu_grad(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, 1.0, np.exp(np.minimum(z, 0.0)))


def _sigmoid_grad(z: np.ndarray) -> np.ndarray:
    s = expit(z)
    return s * (1.0 - s)


ACTIVATIONS: dict[Activation, tuple[ArrayFn, ArrayFn]] = {
    Activation.TANH: (np.tanh, lambda z: 1.0 - np.tanh(z) ** 2),
    Activation.SIGMOID: (expit, _sigmoid_grad),
    Activation.ELU: (_elu, _elu_grad),
    Activation.SOFTPLUS: (lambda z: np.logaddexp(0.0, z), expit),
    Activation.SOFTSIGN: (lambda z: z / (1.0 + np.abs(z)), lambda z: 1.0 / (1.0 + np.abs(z)) ** 2),
    Activation.RELU: (lambda z: np.maximum(z, 0.0), lambda z: (z > 0).astype(np.float64)),
}


def activate(kind: Activation, z: np.ndarray) -> np.ndarray:
    """Apply the activation ``kind`` elementwise."""
    return ACTIVATIONS[kind][0](z)


def activate_grad(kind: Activation, z: np.ndarray) -> np.ndarray:
    """Derivative of the activation ``kind`` at ``z``."""
    return ACTIVATIONS[kind][1](z)

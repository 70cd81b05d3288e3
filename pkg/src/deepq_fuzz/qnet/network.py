"""Feedforward Q-network written directly against numpy.

Four layers (input, two hidden, output) with a linear output layer, so one
forward pass yields Q(x', a) for every action at once. Training is online:
one (state, action, target) triple per step, with the error flowing only
through the output of the chosen action.
"""

import json
import logging
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import NonFiniteError, ShapeError, WeightFormatError
from ..models import HIDDEN_MAX, HIDDEN_MIN, Activation, NetworkConfig
from .activations import activate, activate_grad

logger = logging.getLogger(__name__)

LAYER_COUNT = 3  # weight layers between the four unit layers


def hidden_size_for(input_dim: int) -> int:
    """Hidden layer width for a given state width: clamp(2 * input_dim, 64, 180)."""
    return max(HIDDEN_MIN, min(2 * input_dim, HIDDEN_MAX))


@dataclass
class Network:
    """Weights, biases and activation of a Q-network.

    ``weights[i]`` has shape (fan_in, fan_out) and ``biases[i]`` shape
    (fan_out,), so a layer computes ``z = x @ W + b``.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: Activation = Activation.TANH
    learning_rate: float = 0.02
    weight_init_max: float = 0.1
    steps: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        if len(self.weights) != LAYER_COUNT or len(self.biases) != LAYER_COUNT:
            raise WeightFormatError(
                f"expected {LAYER_COUNT} weight layers, got {len(self.weights)} weights "
                f"and {len(self.biases)} biases"
            )
        self.weights = [np.asarray(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in self.biases]
        _check_chain(self.weights, self.biases)
        if not all(np.all(np.isfinite(a)) for a in (*self.weights, *self.biases)):
            raise NonFiniteError("network initialised with non-finite parameters")

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def hidden_dims(self) -> tuple[int, int]:
        return self.weights[0].shape[1], self.weights[1].shape[1]

    def copy(self) -> "Network":
        """Deep copy of all parameters."""
        return Network(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            activation=self.activation,
            learning_rate=self.learning_rate,
            weight_init_max=self.weight_init_max,
            steps=self.steps,
        )

    def equals(self, other: "Network") -> bool:
        """Bit-exact parameter and metadata equality."""
        return (
            self.activation == other.activation
            and self.learning_rate == other.learning_rate
            and self.weight_init_max == other.weight_init_max
            and all(np.array_equal(a, b) for a, b in zip(self.weights, other.weights))
            and all(np.array_equal(a, b) for a, b in zip(self.biases, other.biases))
        )


def _check_chain(weights: list[np.ndarray], biases: list[np.ndarray]) -> None:
    for index, (w, b) in enumerate(zip(weights, biases)):
        if w.ndim != 2:
            raise WeightFormatError(f"layer {index}: weight matrix has {w.ndim} dimensions")
        if b.shape != (w.shape[1],):
            raise WeightFormatError(
                f"layer {index}: bias shape {b.shape} does not match fan_out {w.shape[1]}"
            )
        if index and w.shape[0] != weights[index - 1].shape[1]:
            raise WeightFormatError(
                f"layer {index}: fan_in {w.shape[0]} does not match previous fan_out "
                f"{weights[index - 1].shape[1]}"
            )


def init_network(config: NetworkConfig, rng: np.random.Generator) -> Network:
    """Draw every weight and bias i.i.d. uniform on [0, weight_init_max]."""
    dims = [config.input_dim, *config.hidden_dims, config.output_dim]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.uniform(0.0, config.weight_init_max, size=(fan_in, fan_out)))
        biases.append(rng.uniform(0.0, config.weight_init_max, size=fan_out))
    return Network(
        weights=weights,
        biases=biases,
        activation=config.activation,
        learning_rate=config.learning_rate,
        weight_init_max=config.weight_init_max,
    )


def _check_state(net: Network, state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=np.float64)
    if state.shape != (net.input_dim,):
        raise ShapeError(f"state has shape {state.shape}, network expects ({net.input_dim},)")
    return state


def _forward_pass(net: Network, state: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Return the layer inputs and pre-activations of one forward pass."""
    inputs, pre = [], []
    x = state
    for index, (w, b) in enumerate(zip(net.weights, net.biases)):
        inputs.append(x)
        z = x @ w + b
        pre.append(z)
        x = z if index == LAYER_COUNT - 1 else activate(net.activation, z)
    return inputs, pre


def forward(net: Network, state: np.ndarray) -> np.ndarray:
    """Q-values of every action for one encoded state.

    Raises:
        ShapeError: If the state length differs from the network input width.
    """
    _, pre = _forward_pass(net, _check_state(net, state))
    return pre[-1]


def _backward(
    net: Network,
    inputs: list[np.ndarray],
    pre: list[np.ndarray],
    action_index: int,
    upstream: float,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Gradients of ``upstream * Q(x, a)`` with respect to every parameter."""
    delta = np.zeros(net.output_dim)
    delta[action_index] = upstream
    grad_w: list[np.ndarray] = [np.empty(0)] * LAYER_COUNT
    grad_b: list[np.ndarray] = [np.empty(0)] * LAYER_COUNT
    for index in reversed(range(LAYER_COUNT)):
        grad_w[index] = np.outer(inputs[index], delta)
        grad_b[index] = delta
        if index:
            delta = (net.weights[index] @ delta) * activate_grad(net.activation, pre[index - 1])
    return grad_w, grad_b


def _check_action(net: Network, action_index: int) -> None:
    if not 0 <= action_index < net.output_dim:
        raise ShapeError(f"action index {action_index} outside [0, {net.output_dim})")


def loss_gradients(
    net: Network, state: np.ndarray, action_index: int, target: float
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Loss L = (target - Q(x, a))^2 and its exact gradient for every parameter.

    Output-layer columns of actions other than ``action_index`` always get a
    zero gradient.
    """
    state = _check_state(net, state)
    _check_action(net, action_index)
    inputs, pre = _forward_pass(net, state)
    error = float(pre[-1][action_index]) - target
    grad_w, grad_b = _backward(net, inputs, pre, action_index, 2.0 * error)
    return error**2, grad_w, grad_b


def _snapshot(net: Network, action_index: int, target: float, q: float | None) -> dict:
    return {
        "action_index": action_index,
        "target": target,
        "q": q,
        "steps": net.steps,
        "max_abs_weight": max(float(np.max(np.abs(w))) for w in net.weights),
    }


def train_step(
    net: Network,
    state: np.ndarray,
    action_index: int,
    target: float,
    learning_rate: float | None = None,
) -> float:
    """Move Q(x, a) toward ``target`` and return the loss before the step.

    The parameter step is ``theta += lr * (target - Q) * dQ/dtheta``, which is
    gradient descent on the squared loss with step lr/2. The network is only
    modified when every updated parameter stays finite.

    Raises:
        NonFiniteError: If the target is not finite or the update diverges.
    """
    state = _check_state(net, state)
    _check_action(net, action_index)
    if not np.isfinite(target):
        raise NonFiniteError(
            f"non-finite Q target {target}", _snapshot(net, action_index, target, None)
        )
    lr = net.learning_rate if learning_rate is None else learning_rate
    inputs, pre = _forward_pass(net, state)
    q = float(pre[-1][action_index])
    error = q - target
    grad_w, grad_b = _backward(net, inputs, pre, action_index, error)

    new_weights = [w - lr * g for w, g in zip(net.weights, grad_w)]
    new_biases = [b - lr * g for b, g in zip(net.biases, grad_b)]
    if not all(np.all(np.isfinite(a)) for a in (*new_weights, *new_biases)):
        raise NonFiniteError(
            f"update diverged after {net.steps} steps", _snapshot(net, action_index, target, q)
        )
    net.weights, net.biases = new_weights, new_biases
    net.steps += 1
    return error**2


def save_weights(net: Network, path: Path) -> None:
    """Write the network to an ``.npz`` archive at exactly ``path``."""
    arrays = {f"W{i}": w for i, w in enumerate(net.weights)}
    arrays |= {f"b{i}": b for i, b in enumerate(net.biases)}
    meta = {
        "activation": net.activation.value,
        "learning_rate": net.learning_rate,
        "weight_init_max": net.weight_init_max,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as handle:
        np.savez(handle, meta=np.array(json.dumps(meta)), **arrays)
    logger.debug("Saved weights to %s", path)


def load_weights(path: Path) -> Network:
    """Read a network written by save_weights.

    Raises:
        FileNotFoundError: If ``path`` does not exist.
        WeightFormatError: If the archive is corrupt, a layer is missing or
            layer dimensions do not chain.
    """
    try:
        with np.load(Path(path), allow_pickle=False) as archive:
            files = set(archive.files)
            for index in range(LAYER_COUNT):
                for name in (f"W{index}", f"b{index}"):
                    if name not in files:
                        raise WeightFormatError(f"layer {index}: array {name} missing")
            weights = [archive[f"W{i}"] for i in range(LAYER_COUNT)]
            biases = [archive[f"b{i}"] for i in range(LAYER_COUNT)]
            meta = json.loads(str(archive["meta"])) if "meta" in files else {}
    except (zipfile.BadZipFile, EOFError, OSError, ValueError) as exc:
        if isinstance(exc, FileNotFoundError):
            raise
        raise WeightFormatError(f"cannot read weights file {path}: {exc}") from exc
    return Network(
        weights=weights,
        biases=biases,
        activation=Activation(meta.get("activation", Activation.TANH)),
        learning_rate=float(meta.get("learning_rate", 0.02)),
        weight_init_max=float(meta.get("weight_init_max", 0.1)),
    )

"""Q-function approximator: numpy feedforward network, training and persistence."""

from .network import (
    Network,
    forward,
    hidden_size_for,
    init_network,
    load_weights,
    loss_gradients,
    save_weights,
    train_step,
)

__all__ = [
    "Network",
    "forward",
    "hidden_size_for",
    "init_network",
    "load_weights",
    "loss_gradients",
    "save_weights",
    "train_step",
]

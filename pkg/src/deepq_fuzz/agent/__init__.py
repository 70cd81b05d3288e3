"""Agent: ε-greedy policy, baseline policy, Q targets and replay memory."""

from .memory import Experience, ReplayMemory
from .policy import baseline_select, epsilon_at, greedy_action, q_target, select_action

__all__ = [
    "Experience",
    "ReplayMemory",
    "baseline_select",
    "epsilon_at",
    "greedy_action",
    "q_target",
    "select_action",
]

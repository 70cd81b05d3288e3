"""Action selection and Q-learning targets."""

import numpy as np

from ..models import EpsilonSchedule


def epsilon_at(schedule: EpsilonSchedule, step: int) -> float:
    """Linear decay from eps_start to eps_final over decay_steps, constant after."""
    if step >= schedule.decay_steps:
        return schedule.eps_final
    fraction = max(step, 0) / schedule.decay_steps
    return schedule.eps_start + fraction * (schedule.eps_final - schedule.eps_start)


def greedy_action(q_values: np.ndarray) -> int:
    """Index of the largest Q-value; the lowest index wins ties."""
    q_values = np.asarray(q_values, dtype=np.float64)
    if q_values.size == 0:
        raise ValueError("q_values is empty")
    # np.argmax returns the first maximum
    return int(np.argmax(q_values))


def select_action(
    q_values: np.ndarray,
    epsilon: float,
    rng: np.random.Generator,
    exclude_greedy: bool = True,
) -> int:
    """ε-greedy choice over ``q_values``.

    With probability 1 - ε the greedy action is returned. Otherwise the agent
    explores uniformly over the other actions, or over all actions when
    ``exclude_greedy`` is off. With a single action the greedy one is returned.
    """
    q_values = np.asarray(q_values, dtype=np.float64)
    greedy = greedy_action(q_values)
    if not np.all(np.isfinite(q_values)):
        raise ValueError(f"q_values must be finite, got {q_values}")
    if rng.random() >= epsilon:
        return greedy
    count = q_values.size
    if not exclude_greedy:
        return int(rng.integers(count))
    if count == 1:
        return greedy
    pick = int(rng.integers(count - 1))
    return pick if pick < greedy else pick + 1


def q_target(reward: float, gamma: float, next_q: np.ndarray) -> float:
    """Bootstrapped target: reward plus γ times the best next Q-value."""
    return float(reward + gamma * np.max(next_q))


def baseline_select(action_count: int, rng: np.random.Generator) -> int:
    """Uniform random action, independent of the state."""
    if action_count < 1:
        raise ValueError("action_count must be at least 1")
    return int(rng.integers(action_count))

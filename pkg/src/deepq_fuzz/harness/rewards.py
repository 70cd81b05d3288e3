"""Reward functions: a runtime property of the mutant plus a per-action bonus."""

from ..models import BlockHistory, ExecutionTrace, RewardConfig, RewardMode

_EMPTY = BlockHistory()


def reward_coverage(trace: ExecutionTrace, history: BlockHistory) -> float:
    """Number of blocks in the trace not already in ``history``.

    The history is read, never updated; the loop decides when to merge it.
    """
    return float(len(trace.blocks - history.seen))


def reward_time(trace: ExecutionTrace) -> float:
    """Execution time in seconds (a timed-out run reports its timeout)."""
    return trace.wall_time


def reward_combined(trace: ExecutionTrace, history: BlockHistory, cfg: RewardConfig) -> float:
    """Memoryless coverage plus execution time rescaled by ``time_scale``.

    ``history`` is accepted for a uniform signature; the coverage term always
    compares against an empty history.
    """
    return reward_coverage(trace, _EMPTY) + cfg.time_scale * trace.wall_time


def reward_path_length(trace: ExecutionTrace) -> float:
    """Number of probe hits along the executed path, repeats included."""
    return float(trace.path_length)


def evaluate_reward(
    trace: ExecutionTrace, history: BlockHistory, cfg: RewardConfig, action_name: str
) -> float:
    """Reward of the configured mode plus the bonus for ``action_name``."""
    match cfg.mode:
        case RewardMode.COVERAGE:
            value = reward_coverage(trace, history)
        case RewardMode.TIME:
            value = reward_time(trace)
        case RewardMode.COMBINED:
            value = reward_combined(trace, history, cfg)
        case RewardMode.PATH_LENGTH:
            value = reward_path_length(trace)
        case _:
            raise ValueError(f"unknown reward mode {cfg.mode}")
    return value + cfg.action_bonus.get(action_name, 0.0)

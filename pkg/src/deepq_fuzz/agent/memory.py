"""Experience replay memory."""

from collections import deque

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..errors import EmptyMemoryError


class Experience(BaseModel):
    """One transition: state, action, reward and the state that followed."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    state: np.ndarray
    action: int = Field(ge=0)
    reward: float
    next_state: np.ndarray

    @field_validator("reward")
    @classmethod
    def _finite_reward(cls, reward: float) -> float:
        if not np.isfinite(reward):
            raise ValueError(f"reward must be finite, got {reward}")
        return reward


class ReplayMemory:
    """Fixed-capacity FIFO buffer of experiences with uniform sampling."""

    def __init__(self, capacity: int = 10_000):
        if capacity < 1:
            raise ValueError("capacity must be at least 1")
        self.capacity = capacity
        self._buffer: deque[Experience] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._buffer)

    def __iter__(self):
        return iter(self._buffer)

    def store(self, experience: Experience) -> None:
        """Append an experience, evicting the oldest one when full."""
        self._buffer.append(experience)

    def sample(self, rng: np.random.Generator) -> Experience:
        """Return one stored experience chosen uniformly at random.

        Raises:
            EmptyMemoryError: If nothing has been stored yet.
        """
        if not self._buffer:
            raise EmptyMemoryError("cannot sample from an empty replay memory")
        return self._buffer[int(rng.integers(len(self._buffer)))]

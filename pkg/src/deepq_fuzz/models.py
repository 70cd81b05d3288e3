"""Core data models for the reinforcement fuzzer."""

from enum import StrEnum
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, model_validator

# An input is an immutable byte string; mutations always build a new value.
Input = bytes


class ActionKind(StrEnum):
    """Mutation and observation-control actions."""

    BIT_FLIP = "bit_flip"
    INSERT_TOKEN = "insert_token"
    SHUFFLE_WINDOW = "shuffle_window"
    SHUFFLE_OBJECT_SEGMENTS = "shuffle_object_segments"
    COPY_WINDOW_INSERT = "copy_window_insert"
    COPY_WINDOW_OVERWRITE = "copy_window_overwrite"
    DELETE_WINDOW = "delete_window"
    SHIFT_OFFSET_LEFT = "shift_offset_left"
    SHIFT_OFFSET_RIGHT = "shift_offset_right"
    GROW_WIDTH = "grow_width"
    SHRINK_WIDTH = "shrink_width"
    RAISE_FLIP_RATIO = "raise_flip_ratio"
    LOWER_FLIP_RATIO = "lower_flip_ratio"


# Actions that leave the input untouched and only steer the next observation.
WINDOW_ACTIONS = frozenset(
    {
        ActionKind.SHIFT_OFFSET_LEFT,
        ActionKind.SHIFT_OFFSET_RIGHT,
        ActionKind.GROW_WIDTH,
        ActionKind.SHRINK_WIDTH,
    }
)
RATIO_ACTIONS = frozenset({ActionKind.RAISE_FLIP_RATIO, ActionKind.LOWER_FLIP_RATIO})


class ActionSpec(BaseModel):
    """One entry of the action set A."""

    model_config = ConfigDict(frozen=True)

    kind: ActionKind
    ratio: float | None = Field(default=None, description="Per-bit flip probability (bit_flip)")
    step: int = Field(default=1, ge=1, description="Byte step for grow/shrink width")
    enabled: bool = True

    @model_validator(mode="after")
    def _check_ratio(self) -> "ActionSpec":
        if self.kind is ActionKind.BIT_FLIP:
            if self.ratio is None or not 0 < self.ratio <= 1:
                raise ValueError(f"bit_flip ratio must be in (0, 1], got {self.ratio}")
        return self

    @property
    def name(self) -> str:
        """Stable display name, also the key for action bonuses."""
        if self.kind is ActionKind.BIT_FLIP:
            return f"bit_flip@{self.ratio:g}"
        return self.kind.value


def default_actions() -> list[ActionSpec]:
    """Return the default action set: eight mutating actions enabled, the rest off."""
    return [
        ActionSpec(kind=ActionKind.BIT_FLIP, ratio=0.01),
        ActionSpec(kind=ActionKind.BIT_FLIP, ratio=0.05),
        ActionSpec(kind=ActionKind.INSERT_TOKEN),
        ActionSpec(kind=ActionKind.SHUFFLE_WINDOW),
        ActionSpec(kind=ActionKind.SHUFFLE_OBJECT_SEGMENTS),
        ActionSpec(kind=ActionKind.COPY_WINDOW_INSERT),
        ActionSpec(kind=ActionKind.COPY_WINDOW_OVERWRITE),
        ActionSpec(kind=ActionKind.DELETE_WINDOW),
        ActionSpec(kind=ActionKind.SHIFT_OFFSET_LEFT, enabled=False),
        ActionSpec(kind=ActionKind.SHIFT_OFFSET_RIGHT, enabled=False),
        ActionSpec(kind=ActionKind.GROW_WIDTH, enabled=False),
        ActionSpec(kind=ActionKind.SHRINK_WIDTH, enabled=False),
        ActionSpec(kind=ActionKind.RAISE_FLIP_RATIO, enabled=False),
        ActionSpec(kind=ActionKind.LOWER_FLIP_RATIO, enabled=False),
    ]


class StateWindow(BaseModel):
    """The observed substring x' of an input: offset, width and the bytes themselves."""

    model_config = ConfigDict(frozen=True)

    offset: int = Field(ge=0)
    width: int = Field(ge=1)
    data: bytes

    @model_validator(mode="after")
    def _check_length(self) -> "StateWindow":
        if len(self.data) != self.width:
            raise ValueError(f"window holds {len(self.data)} bytes, width is {self.width}")
        return self


class ObjectBounds(BaseModel):
    """Byte span [start, end) of one structural object inside an input."""

    model_config = ConfigDict(frozen=True)

    start: int = Field(ge=0)
    end: int

    @model_validator(mode="after")
    def _check_order(self) -> "ObjectBounds":
        if self.start >= self.end:
            raise ValueError(f"empty object bounds [{self.start}, {self.end})")
        return self


class RewardMode(StrEnum):
    """Which runtime property of the mutant is rewarded."""

    COVERAGE = "coverage_r1"
    TIME = "time_r2"
    COMBINED = "combined_r3"
    PATH_LENGTH = "path_length"


class RewardConfig(BaseModel):
    """Reward of a mutant: the mode's runtime property plus an optional per-action bonus."""

    mode: RewardMode = RewardMode.COVERAGE
    time_scale: float = Field(default=1e6, gt=0)
    action_bonus: dict[str, float] = Field(
        default_factory=dict, description="Bonus keyed by action name; missing actions get 0"
    )


class EpsilonSchedule(BaseModel):
    """Linear ε decay from eps_start to eps_final over decay_steps generations."""

    eps_start: float = Field(default=1.0, ge=0, le=1)
    eps_final: float = Field(default=0.1, ge=0, le=1)
    decay_steps: int = Field(default=500, ge=1)

    @model_validator(mode="after")
    def _check_order(self) -> "EpsilonSchedule":
        if self.eps_final > self.eps_start:
            raise ValueError("eps_final must not exceed eps_start")
        return self


class Activation(StrEnum):
    """Hidden-layer activation functions."""

    TANH = "tanh"
    SIGMOID = "sigmoid"
    ELU = "elu"
    SOFTPLUS = "softplus"
    SOFTSIGN = "softsign"
    RELU = "relu"


HIDDEN_MIN = 64
HIDDEN_MAX = 180


class NetworkConfig(BaseModel):
    """Shape and training hyperparameters of the Q-network."""

    input_dim: int = Field(ge=1)
    hidden_dims: tuple[int, int]
    output_dim: int = Field(ge=1)
    activation: Activation = Activation.TANH
    learning_rate: float = Field(default=0.02, gt=0)
    weight_init_max: float = Field(default=0.1, gt=0)

    @model_validator(mode="after")
    def _check_hidden(self) -> "NetworkConfig":
        for size in self.hidden_dims:
            if not HIDDEN_MIN <= size <= HIDDEN_MAX:
                raise ValueError(f"hidden layer size {size} outside [{HIDDEN_MIN}, {HIDDEN_MAX}]")
        return self


class QNetOptions(BaseModel):
    """User-facing Q-network options; dimensions are derived from the loop config."""

    activation: Activation = Activation.TANH
    learning_rate: float = Field(default=0.02, gt=0)
    weight_init_max: float = Field(default=0.1, gt=0)
    hidden_units: int | None = Field(default=None, ge=HIDDEN_MIN, le=HIDDEN_MAX)


class ReplayOptions(BaseModel):
    """Experience replay (off by default)."""

    enabled: bool = False
    capacity: int = Field(default=10_000, ge=1)
    batch: int = Field(default=1, ge=1)


class Outcome(StrEnum):
    """How one target execution ended."""

    COMPLETED = "completed"
    REJECTED_EARLY = "rejected_early"
    CRASHED = "crashed"
    TIMED_OUT = "timed_out"


class ExecutionTrace(BaseModel):
    """Result of one target execution."""

    model_config = ConfigDict(frozen=True)

    blocks: frozenset[int] = frozenset()
    wall_time: float = Field(default=0.0, ge=0)
    outcome: Outcome = Outcome.COMPLETED
    path_length: int = Field(default=0, ge=0, description="Probe hits including repeats")


class BlockHistory(BaseModel):
    """Union of basic blocks seen by earlier executions since the last reset."""

    seen: set[int] = Field(default_factory=set)

    def merge(self, blocks: frozenset[int] | set[int]) -> None:
        """Add an execution's blocks to the history."""
        self.seen |= blocks

    def reset(self) -> None:
        """Forget every block (memoryless mode)."""
        self.seen.clear()


class PolicyKind(StrEnum):
    """How actions are chosen during a run."""

    LEARNED = "learned"
    BASELINE = "baseline_random"
    FROZEN = "frozen"


class HistoryPolicy(StrEnum):
    """Whether the block history survives between generations."""

    RESET_EACH_STEP = "reset_each_step"
    MERGE = "merge"


class OffsetRegion(StrEnum):
    """Part of the seed random offsets are drawn from."""

    FULL = "full"
    FIRST_HALF = "first_half"
    SECOND_HALF = "second_half"


class OffsetMode(StrEnum):
    """Who chooses the next observed window."""

    RANDOM = "random"
    ACTION = "action"


class TargetKind(StrEnum):
    """Available target implementations."""

    BUILTIN = "builtin"
    RIGGED = "rigged"
    COMMAND = "command"


class TargetSpec(BaseModel):
    """Picklable description of a target, rebuilt inside worker processes."""

    kind: TargetKind = TargetKind.BUILTIN
    command: list[str] = Field(
        default_factory=list, description="Command template; '{input}' is the input file path"
    )
    coverage_map: bool = Field(
        default=False, description="Target writes block ids to the coverage-map file"
    )
    length_delta: int | None = Field(
        default=None, description="Rigged target pays when len(mutant) - len(seed) equals this"
    )


class LoopConfig(BaseModel):
    """Everything that determines a fuzz run."""

    generations: int = Field(default=1000, ge=1)
    state_width: int = Field(default=32, ge=1)
    reward: RewardConfig = Field(default_factory=RewardConfig)
    epsilon: EpsilonSchedule | None = None
    gamma: float = Field(default=0.95, gt=0, lt=1)
    policy: PolicyKind = PolicyKind.LEARNED
    weights_path: Path | None = None
    frozen_epsilon: float = Field(default=0.0, ge=0, le=1)
    seed_paths: list[Path] = Field(default_factory=list)
    rng_seed: int = 0
    history_policy: HistoryPolicy = HistoryPolicy.RESET_EACH_STEP
    offset_region: OffsetRegion = OffsetRegion.FULL
    offset_mode: OffsetMode = OffsetMode.RANDOM
    network: QNetOptions = Field(default_factory=QNetOptions)
    actions: list[ActionSpec] = Field(default_factory=default_actions)
    explore_excludes_greedy: bool = True
    replay: ReplayOptions = Field(default_factory=ReplayOptions)
    raw_byte_encoding: bool = False
    normalize_rewards: bool = True
    timeout: float = Field(default=1.0, gt=0)
    dictionary_min_len: int = Field(default=4, ge=1)
    dictionary_max_tokens: int = Field(default=512, ge=1)
    open_marker: bytes = b"obj"
    close_marker: bytes = b"endobj"
    findings_dir: Path | None = None
    weights_out: Path | None = None
    target: TargetSpec = Field(default_factory=TargetSpec)

    @model_validator(mode="after")
    def _resolve(self) -> "LoopConfig":
        if self.epsilon is None:
            self.epsilon = EpsilonSchedule(decay_steps=max(1, self.generations // 2))
        if not self.enabled_actions:
            raise ValueError("the enabled action set is empty")
        return self

    @property
    def enabled_actions(self) -> list[ActionSpec]:
        """Actions the agent chooses from, in index order."""
        return [action for action in self.actions if action.enabled]


class GenerationRecord(BaseModel):
    """One line of a run report."""

    generation: int
    offset: int
    action: int
    reward: float
    epsilon: float
    loss: float | None = None
    outcome: Outcome
    wall_time: float = 0.0
    blocks: int = 0


class Finding(BaseModel):
    """A persisted crashing or hanging input."""

    generation: int
    outcome: Outcome
    path: Path


class RunReport(BaseModel):
    """Result of one fuzz run."""

    config: LoopConfig
    records: list[GenerationRecord] = Field(default_factory=list)
    accumulated: list[float] = Field(default_factory=list)
    findings: list[Finding] = Field(default_factory=list)
    weights_path: Path | None = None
    reward_scale: float = 1.0
    aborted: bool = False
    abort_reason: str | None = None

    def append(self, record: GenerationRecord) -> None:
        """Add a record and extend the accumulated-reward series."""
        previous = self.accumulated[-1] if self.accumulated else 0.0
        self.records.append(record)
        self.accumulated.append(previous + record.reward)


class ScoreMetric(StrEnum):
    """Which per-generation value an improvement quotient sums."""

    REWARD = "reward"
    TIME = "time"
    BLOCKS = "blocks"


class TrialResult(BaseModel):
    """One matched-seed trial of RL policy against the baseline."""

    trial: int
    rng_seed: int
    rl_sum: float | None = None
    baseline_sum: float | None = None
    quotient: float | None = None
    valid: bool = True
    error: str | None = None


class ImprovementReport(BaseModel):
    """RL-versus-baseline comparison over the most recent half of the generations."""

    rl_last500_sum: float
    baseline_last500_sum: float
    quotient: float
    quotient_min: float
    quotient_max: float
    metric: ScoreMetric = ScoreMetric.REWARD
    trials: list[TrialResult] = Field(default_factory=list)
    details: dict[str, float] = Field(default_factory=dict)


class SweepRow(BaseModel):
    """One cell of a parameter sweep."""

    dimension: str
    value: str
    quotient: float | None = None
    quotient_min: float | None = None
    quotient_max: float | None = None
    valid_trials: int = 0
    error: str | None = None

"""Node functions for the fuzzing graph.

Each factory closes over the run's FuzzContext, the way the graph's
components are wired once and then invoked per generation. Nodes return
partial state updates.
"""

import logging
from dataclasses import dataclass, field
from typing import TypedDict

import numpy as np

from ..agent import (
    Experience,
    ReplayMemory,
    baseline_select,
    epsilon_at,
    q_target,
    select_action,
)
from ..errors import DegenerateInputError
from ..harness import Target, evaluate_reward
from ..mdp import encode_state, extract_state, random_offset
from ..models import (
    ActionSpec,
    BlockHistory,
    Finding,
    GenerationRecord,
    HistoryPolicy,
    Input,
    LoopConfig,
    OffsetMode,
    Outcome,
    PolicyKind,
    RunReport,
    StateWindow,
)
from ..mutation import TokenDictionary, apply_action
from ..qnet import Network, forward, train_step

logger = logging.getLogger(__name__)


class FuzzState(TypedDict, total=False):
    """Per-generation values flowing through the graph."""

    generation: int
    window: StateWindow
    next_window: StateWindow | None
    action_index: int
    epsilon: float
    mutant: Input
    outcome: Outcome
    wall_time: float
    blocks: int
    reward: float
    loss: float | None
    flip_scale: float
    requested_window: tuple[int, int] | None


@dataclass
class RunStreams:
    """Independent random streams of one run."""

    offsets: np.random.Generator
    policy: np.random.Generator
    mutation: np.random.Generator
    init: np.random.Generator

    @classmethod
    def from_seed(cls, rng_seed: int) -> "RunStreams":
        offsets, policy, mutation, init = np.random.SeedSequence(rng_seed).spawn(4)
        return cls(
            offsets=np.random.default_rng(offsets),
            policy=np.random.default_rng(policy),
            mutation=np.random.default_rng(mutation),
            init=np.random.default_rng(init),
        )


@dataclass
class FuzzContext:
    """Everything a run's nodes share."""

    config: LoopConfig
    seeds: list[Input]
    target: Target
    dictionary: TokenDictionary
    streams: RunStreams
    report: RunReport
    network: Network | None = None
    history: BlockHistory = field(default_factory=BlockHistory)
    memory: ReplayMemory | None = None
    reward_scale: float = 1.0

    @property
    def actions(self) -> list[ActionSpec]:
        return self.config.enabled_actions

    def seed_for(self, generation: int) -> Input:
        """Seeds are used round-robin, one per generation."""
        return self.seeds[generation % len(self.seeds)]

    def encode(self, window: StateWindow) -> np.ndarray:
        return encode_state(
            window, size=self.config.state_width, raw=self.config.raw_byte_encoding
        )

    def random_window(self, generation: int) -> StateWindow:
        seed = self.seed_for(generation)
        width = self.config.state_width
        offset = random_offset(self.streams.offsets, len(seed), width, self.config.offset_region)
        return extract_state(seed, offset, width)


def create_observe_node(ctx: FuzzContext):
    """Observe the window for this generation."""

    def observe_node(state: FuzzState) -> dict:
        window = state.get("next_window")
        if window is None:
            window = ctx.random_window(state["generation"])
        return {"window": window, "next_window": None}

    return observe_node


def create_act_node(ctx: FuzzContext):
    """Choose an action with the configured policy."""
    config = ctx.config

    def act_node(state: FuzzState) -> dict:
        generation = state["generation"]
        rng = ctx.streams.policy
        if config.policy is PolicyKind.BASELINE:
            return {"action_index": baseline_select(len(ctx.actions), rng), "epsilon": 1.0}

        q_values = forward(ctx.network, ctx.encode(state["window"]))
        if config.policy is PolicyKind.FROZEN:
            epsilon = config.frozen_epsilon
        else:
            epsilon = epsilon_at(config.epsilon, generation)
        action_index = select_action(
            q_values, epsilon, rng, exclude_greedy=config.explore_excludes_greedy
        )
        return {"action_index": action_index, "epsilon": epsilon}

    return act_node


def create_mutate_node(ctx: FuzzContext):
    """Apply the chosen action to a fresh copy of the seed."""
    config = ctx.config

    def mutate_node(state: FuzzState) -> dict:
        seed = ctx.seed_for(state["generation"])
        action = ctx.actions[state["action_index"]]
        flip_scale = state.get("flip_scale", 1.0)
        try:
            result = apply_action(
                seed,
                state["window"],
                action,
                ctx.dictionary,
                ctx.streams.mutation,
                flip_scale=flip_scale,
                open_marker=config.open_marker,
                close_marker=config.close_marker,
            )
        except DegenerateInputError as exc:
            logger.debug("Generation %d: %s; seed used unchanged", state["generation"], exc)
            return {"mutant": seed, "requested_window": None}

        update: dict = {"mutant": result.data, "requested_window": None}
        if result.flip_scale is not None:
            update["flip_scale"] = result.flip_scale
        if result.next_offset is not None and config.offset_mode is OffsetMode.ACTION:
            update["requested_window"] = (result.next_offset, result.next_width)
        return update

    return mutate_node


def create_execute_node(ctx: FuzzContext):
    """Run the target on the mutant and evaluate the reward."""
    config = ctx.config

    def execute_node(state: FuzzState) -> dict:
        generation = state["generation"]
        trace = ctx.target.execute(state["mutant"], config.timeout)
        action = ctx.actions[state["action_index"]]
        reward = evaluate_reward(trace, ctx.history, config.reward, action.name)
        if config.history_policy is HistoryPolicy.MERGE:
            ctx.history.merge(trace.blocks)

        if trace.outcome in (Outcome.CRASHED, Outcome.TIMED_OUT):
            _persist_finding(ctx, generation, trace.outcome, state["mutant"])

        return {
            "outcome": trace.outcome,
            "wall_time": trace.wall_time,
            "blocks": len(trace.blocks),
            "reward": reward,
        }

    return execute_node


def _persist_finding(ctx: FuzzContext, generation: int, outcome: Outcome, data: Input) -> None:
    findings_dir = ctx.config.findings_dir
    if findings_dir is None:
        logger.warning("Generation %d: %s (findings directory not set)", generation, outcome)
        return
    findings_dir.mkdir(parents=True, exist_ok=True)
    path = findings_dir / f"{generation}_{outcome.value}.bin"
    path.write_bytes(data)
    ctx.report.findings.append(Finding(generation=generation, outcome=outcome, path=path))
    logger.warning("Generation %d: %s, input saved to %s", generation, outcome, path)


def _next_window(ctx: FuzzContext, state: FuzzState) -> StateWindow:
    """The window the agent observes next generation."""
    generation = state["generation"] + 1
    requested = state.get("requested_window")
    if requested is not None:
        seed = ctx.seed_for(generation)
        offset, width = requested
        width = min(width, len(seed))
        return extract_state(seed, min(offset, len(seed) - width), width)
    return ctx.random_window(generation)


def create_learn_node(ctx: FuzzContext):
    """TD update toward the next window's best Q-value, learned policy only."""
    config = ctx.config

    def learn_node(state: FuzzState) -> dict:
        next_window = _next_window(ctx, state)
        if config.policy is not PolicyKind.LEARNED:
            return {"next_window": next_window, "loss": None}

        net = ctx.network
        state_vector = ctx.encode(state["window"])
        next_vector = ctx.encode(next_window)
        reward = state["reward"] / ctx.reward_scale
        target = q_target(reward, config.gamma, forward(net, next_vector))
        loss = train_step(net, state_vector, state["action_index"], target)

        if ctx.memory is not None:
            ctx.memory.store(
                Experience(
                    state=state_vector,
                    action=state["action_index"],
                    reward=reward,
                    next_state=next_vector,
                )
            )
            for _ in range(config.replay.batch):
                replayed = ctx.memory.sample(ctx.streams.policy)
                replay_target = q_target(
                    replayed.reward, config.gamma, forward(net, replayed.next_state)
                )
                train_step(net, replayed.state, replayed.action, replay_target)

        return {"next_window": next_window, "loss": loss}

    return learn_node


def reset(
    seed: Input, history: BlockHistory, policy: HistoryPolicy
) -> tuple[Input, BlockHistory]:
    """Restore the valid seed and clear the block history under reset_each_step.

    Mutants are never written back, so the seed returned is the pristine one.
    """
    if policy is HistoryPolicy.RESET_EACH_STEP:
        history.reset()
    return seed, history


def create_reset_node(ctx: FuzzContext):
    """Record the generation, restore the seed and clear the history."""
    config = ctx.config

    def reset_node(state: FuzzState) -> dict:
        generation = state["generation"]
        record = GenerationRecord(
            generation=generation,
            offset=state["window"].offset,
            action=state["action_index"],
            reward=state["reward"],
            epsilon=state["epsilon"],
            loss=state.get("loss"),
            outcome=state["outcome"],
            wall_time=state["wall_time"],
            blocks=state["blocks"],
        )
        ctx.report.append(record)
        logger.debug("Generation %d: %s", generation, record.model_dump_json())
        reset(ctx.seed_for(generation), ctx.history, config.history_policy)
        return {"generation": generation + 1, "mutant": b""}

    return reset_node

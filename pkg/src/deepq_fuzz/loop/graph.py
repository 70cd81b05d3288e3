"""LangGraph definition of the fuzzing loop.

observe -> act -> mutate -> execute -> learn -> reset, then back to observe
until the configured number of generations has run.
"""

import logging
from pathlib import Path

from langgraph.graph import END, StateGraph

from ..agent import ReplayMemory
from ..errors import NonFiniteError, SeedError, ShapeError, TargetEnvironmentError
from ..harness import Target, evaluate_reward, make_target, sample_document
from ..models import BlockHistory, Input, LoopConfig, NetworkConfig, PolicyKind, RunReport
from ..mutation import build_dictionary
from ..qnet import Network, hidden_size_for, init_network, load_weights, save_weights
from .nodes import (
    FuzzContext,
    FuzzState,
    RunStreams,
    create_act_node,
    create_execute_node,
    create_learn_node,
    create_mutate_node,
    create_observe_node,
    create_reset_node,
)

logger = logging.getLogger(__name__)

NODES_PER_GENERATION = 6
HEALTH_PROBE_RUNS = 3


def create_fuzz_graph(ctx: FuzzContext):
    """Create the compiled fuzzing graph for one run.

    Args:
        ctx: Shared run context the node factories close over.

    Returns:
        Compiled LangGraph graph.
    """
    workflow = StateGraph(FuzzState)

    workflow.add_node("observe", create_observe_node(ctx))
    workflow.add_node("act", create_act_node(ctx))
    workflow.add_node("mutate", create_mutate_node(ctx))
    workflow.add_node("execute", create_execute_node(ctx))
    workflow.add_node("learn", create_learn_node(ctx))
    workflow.add_node("reset", create_reset_node(ctx))

    workflow.set_entry_point("observe")
    workflow.add_edge("observe", "act")
    workflow.add_edge("act", "mutate")
    workflow.add_edge("mutate", "execute")
    workflow.add_edge("execute", "learn")
    workflow.add_edge("learn", "reset")

    def should_continue(state: FuzzState) -> str:
        """Loop until every generation has run."""
        return "observe" if state["generation"] < ctx.config.generations else "end"

    workflow.add_conditional_edges("reset", should_continue, {"observe": "observe", "end": END})

    return workflow.compile()


def load_seeds(paths: list[Path], state_width: int) -> list[Input]:
    """Read seed files, falling back to the bundled sample document.

    Raises:
        SeedError: If a seed is unreadable or shorter than the state width.
    """
    if not paths:
        seeds = [sample_document()]
    else:
        seeds = []
        for path in paths:
            try:
                seeds.append(Path(path).read_bytes())
            except OSError as exc:
                raise SeedError(f"cannot read seed {path}: {exc}") from exc
    for index, seed in enumerate(seeds):
        if len(seed) < state_width:
            name = paths[index] if paths else "sample document"
            raise SeedError(f"seed {name} has {len(seed)} bytes, state width is {state_width}")
    return seeds


def build_network(config: LoopConfig, network: Network | None = None) -> Network | None:
    """The Q-network a run uses: injected, loaded from weights_path or freshly initialised.

    Fresh networks draw from the run's init stream, so building the network
    up front and passing it to ``run`` gives the same weights as letting
    ``run`` build it.

    Raises:
        ShapeError: If the network does not match the state width and action count.
        ValueError: If a frozen policy has no weights to use.
    """
    actions = config.enabled_actions
    if config.policy is PolicyKind.BASELINE:
        return None
    if network is None and config.weights_path is not None:
        network = load_weights(config.weights_path)
    if network is None:
        if config.policy is PolicyKind.FROZEN:
            raise ValueError("frozen policy needs weights_path or an injected network")
        options = config.network
        hidden = options.hidden_units or hidden_size_for(config.state_width)
        network = init_network(
            NetworkConfig(
                input_dim=config.state_width,
                hidden_dims=(hidden, hidden),
                output_dim=len(actions),
                activation=options.activation,
                learning_rate=options.learning_rate,
                weight_init_max=options.weight_init_max,
            ),
            RunStreams.from_seed(config.rng_seed).init,
        )
    if network.input_dim != config.state_width or network.output_dim != len(actions):
        raise ShapeError(
            f"network maps {network.input_dim} -> {network.output_dim}, run needs "
            f"{config.state_width} -> {len(actions)}"
        )
    return network


def _health_probe(ctx: FuzzContext) -> float:
    """Run the pristine seed and return its median reward as the learning scale."""
    config = ctx.config
    values = []
    for _ in range(HEALTH_PROBE_RUNS):
        trace = ctx.target.execute(ctx.seeds[0], config.timeout)
        values.append(evaluate_reward(trace, BlockHistory(), config.reward, ""))
    scale = sorted(values)[len(values) // 2]
    if not config.normalize_rewards or scale <= 0:
        return 1.0
    return scale


def run(
    config: LoopConfig, target: Target | None = None, network: Network | None = None
) -> RunReport:
    """Execute one fuzz run of ``config.generations`` generations.

    Args:
        config: Fully resolved loop configuration.
        target: Target to execute; built from ``config.target`` when omitted.
        network: Q-network to use instead of initialising or loading one.
            It is trained in place under the learned policy.

    Returns:
        The run report. Target environment failures and diverging updates
        after the health probe end the run early with ``aborted`` set.

    Raises:
        SeedError: If seeds cannot be loaded.
        TargetEnvironmentError: If the health probe on the pristine seed fails.
    """
    seeds = load_seeds(config.seed_paths, config.state_width)
    owns_target = target is None
    if target is None:
        target = make_target(config.target, seeds[0], config.state_width)

    report = RunReport(config=config)
    ctx = FuzzContext(
        config=config,
        seeds=seeds,
        target=target,
        dictionary=build_dictionary(
            seeds, config.dictionary_min_len, config.dictionary_max_tokens
        ),
        streams=RunStreams.from_seed(config.rng_seed),
        report=report,
    )
    try:
        ctx.network = build_network(config, network)
        if config.replay.enabled and config.policy is PolicyKind.LEARNED:
            ctx.memory = ReplayMemory(config.replay.capacity)
        ctx.reward_scale = _health_probe(ctx)
        report.reward_scale = ctx.reward_scale

        logger.info(
            "Starting %s run: %d generations, %s reward, %d actions, rng_seed=%d",
            config.policy,
            config.generations,
            config.reward.mode,
            len(ctx.actions),
            config.rng_seed,
        )
        graph = create_fuzz_graph(ctx)
        try:
            graph.invoke(
                {"generation": 0, "next_window": None, "flip_scale": 1.0},
                {"recursion_limit": NODES_PER_GENERATION * config.generations + 10},
            )
        except (TargetEnvironmentError, NonFiniteError) as exc:
            report.aborted = True
            report.abort_reason = f"{type(exc).__name__}: {exc}"
            if isinstance(exc, NonFiniteError):
                report.abort_reason += f" {exc.snapshot}"
            logger.warning(
                "Run aborted after %d generations: %s", len(report.records), report.abort_reason
            )
    finally:
        if owns_target:
            target.close()

    if ctx.network is not None and config.weights_out is not None:
        save_weights(ctx.network, config.weights_out)
        report.weights_path = config.weights_out

    logger.info(
        "Finished run: %d generations, accumulated reward %.6g",
        len(report.records),
        report.accumulated[-1] if report.accumulated else 0.0,
    )
    return report

"""Experiment suite: RL against the random baseline, correlation, generalization, sweeps."""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Any

import numpy as np
from scipy import stats

from ..config import settings
from ..errors import (
    DegenerateInputError,
    FuzzError,
    RunAborted,
    SeedError,
    UndefinedCorrelationError,
    ZeroBaselineError,
)
from ..harness import Target, make_target
from ..loop import build_network, load_seeds, run
from ..mdp import extract_state, random_offset
from ..models import (
    Activation,
    EpsilonSchedule,
    ImprovementReport,
    LoopConfig,
    OffsetRegion,
    PolicyKind,
    RewardMode,
    RunReport,
    ScoreMetric,
    SweepRow,
    TrialResult,
)
from ..mutation import apply_action, build_dictionary
from ..qnet import Network

logger = logging.getLogger(__name__)

SWEEP_DIMENSIONS = ("state_width", "activation")


def with_changes(config: LoopConfig, **changes: Any) -> LoopConfig:
    """Re-validated copy of ``config`` with top-level fields replaced.

    An epsilon schedule derived from the old generation count is derived again
    when ``generations`` changes; an explicitly configured one is kept.
    """
    data = config.model_dump()
    if "generations" in changes and "epsilon" not in changes:
        derived = EpsilonSchedule(decay_steps=max(1, config.generations // 2))
        if config.epsilon == derived:
            data["epsilon"] = None
    return LoopConfig.model_validate(data | changes)


def default_metric(config: LoopConfig) -> ScoreMetric:
    """Combined-reward runs are scored on execution time, the rest on reward."""
    return ScoreMetric.TIME if config.reward.mode is RewardMode.COMBINED else ScoreMetric.REWARD


def last_half_sum(report: RunReport, metric: ScoreMetric = ScoreMetric.REWARD) -> float:
    """Sum ``metric`` over the most recent half of the configured generations.

    At the default 1000 generations this covers generations 501 to 1000.
    """
    start = report.config.generations // 2
    values = {
        ScoreMetric.REWARD: lambda r: r.reward,
        ScoreMetric.TIME: lambda r: r.wall_time,
        ScoreMetric.BLOCKS: lambda r: float(r.blocks),
    }[metric]
    return float(sum(values(record) for record in report.records[start:]))


def improvement_quotient(rl_sum: float, baseline_sum: float) -> float:
    """RL sum over baseline sum.

    Raises:
        ZeroBaselineError: If the baseline accumulated nothing.
    """
    if baseline_sum <= 0:
        raise ZeroBaselineError(f"baseline accumulated {baseline_sum}")
    return rl_sum / baseline_sum


def _score(rl: RunReport, baseline: RunReport, trial: int, metric: ScoreMetric) -> TrialResult:
    rng_seed = rl.config.rng_seed
    for arm, report in (("rl", rl), ("baseline", baseline)):
        if report.aborted:
            return TrialResult(
                trial=trial, rng_seed=rng_seed, valid=False, error=f"{arm}: {report.abort_reason}"
            )
    rl_sum = last_half_sum(rl, metric)
    baseline_sum = last_half_sum(baseline, metric)
    try:
        quotient = improvement_quotient(rl_sum, baseline_sum)
    except ZeroBaselineError as exc:
        return TrialResult(
            trial=trial,
            rng_seed=rng_seed,
            rl_sum=rl_sum,
            baseline_sum=baseline_sum,
            valid=False,
            error=f"{exc} ({metric})",
        )
    return TrialResult(
        trial=trial,
        rng_seed=rng_seed,
        rl_sum=rl_sum,
        baseline_sum=baseline_sum,
        quotient=quotient,
    )


def _comparison_trial(
    config: LoopConfig, trial: int, metric: ScoreMetric, target: Target | None = None
) -> TrialResult:
    """One matched-seed trial: the configured policy against the baseline."""
    trial_config = with_changes(config, rng_seed=config.rng_seed + trial)
    try:
        rl = run(trial_config, target)
        baseline = run(with_changes(trial_config, policy=PolicyKind.BASELINE), target)
    except FuzzError as exc:
        return TrialResult(
            trial=trial, rng_seed=trial_config.rng_seed, valid=False, error=str(exc)
        )
    return _score(rl, baseline, trial, metric)


def _generalization_trial(
    config: LoopConfig,
    trial: int,
    metric: ScoreMetric,
    target: Target | None = None,
    network: Network | None = None,
) -> TrialResult:
    """Train on first-half offsets, then score the frozen policy on second-half offsets."""
    trial_config = with_changes(config, rng_seed=config.rng_seed + trial)
    try:
        if network is None:
            network = _train_first_half(trial_config, target)
        evaluation = with_changes(
            trial_config,
            offset_region=OffsetRegion.SECOND_HALF,
            weights_path=None,
            weights_out=None,
        )
        frozen = run(with_changes(evaluation, policy=PolicyKind.FROZEN), target, network)
        baseline = run(with_changes(evaluation, policy=PolicyKind.BASELINE), target)
    except FuzzError as exc:
        return TrialResult(
            trial=trial, rng_seed=trial_config.rng_seed, valid=False, error=str(exc)
        )
    return _score(frozen, baseline, trial, metric)


def _train_first_half(config: LoopConfig, target: Target | None) -> Network:
    training = with_changes(
        config, policy=PolicyKind.LEARNED, offset_region=OffsetRegion.FIRST_HALF, weights_out=None
    )
    network = build_network(training)
    report = run(training, target, network)
    if report.aborted:
        raise RunAborted(f"training: {report.abort_reason}")
    return network


def _run_trials(trial_fn, config: LoopConfig, trials: int, metric: ScoreMetric, target, **extra):
    if trials < 1:
        raise ValueError("trials must be at least 1")
    indices = range(trials)
    if target is None and settings.max_workers > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=settings.max_workers) as pool:
            futures = [
                pool.submit(trial_fn, config, index, metric, None, **extra) for index in indices
            ]
            return [future.result() for future in futures]
    return [trial_fn(config, index, metric, target, **extra) for index in indices]


def aggregate_trials(results: list[TrialResult], metric: ScoreMetric) -> ImprovementReport:
    """Mean per-trial quotient over the valid trials, with the ratio of mean sums in details.

    Raises:
        RunAborted: If no trial is valid.
    """
    for result in results:
        if result.valid:
            logger.info(
                "Trial %d (rng_seed=%d): quotient %.4f",
                result.trial,
                result.rng_seed,
                result.quotient,
            )
        else:
            logger.warning("Trial %d invalid: %s", result.trial, result.error)
    valid = [result for result in results if result.valid]
    if not valid:
        raise RunAborted(f"all {len(results)} trials were invalid: {results[0].error}")
    rl_mean = float(np.mean([result.rl_sum for result in valid]))
    baseline_mean = float(np.mean([result.baseline_sum for result in valid]))
    quotients = [result.quotient for result in valid]
    return ImprovementReport(
        rl_last500_sum=rl_mean,
        baseline_last500_sum=baseline_mean,
        quotient=float(np.mean(quotients)),
        quotient_min=min(quotients),
        quotient_max=max(quotients),
        metric=metric,
        trials=results,
        details={
            "ratio_of_means": rl_mean / baseline_mean,
            "valid_trials": float(len(valid)),
        },
    )


def compare_baseline(
    config: LoopConfig,
    trials: int = 5,
    target: Target | None = None,
    metric: ScoreMetric | None = None,
) -> ImprovementReport:
    """Run the configured policy and the random baseline with matched seeds.

    Trial ``i`` uses ``rng_seed + i`` for both arms, so both observe the same
    offset sequence and differ only in the actions they choose.

    Raises:
        RunAborted: If every trial was invalid.
    """
    metric = metric or default_metric(config)
    results = _run_trials(_comparison_trial, config, trials, metric, target)
    return aggregate_trials(results, metric)


def generalization_run(
    config: LoopConfig,
    trials: int = 5,
    target: Target | None = None,
    network: Network | None = None,
    metric: ScoreMetric | None = None,
) -> ImprovementReport:
    """Train on first-half offsets and evaluate the frozen policy on the second half.

    When ``network`` is given, training is skipped and that network is
    evaluated as is.

    Raises:
        SeedError: If a seed is shorter than twice the state width.
        RunAborted: If every trial was invalid.
    """
    for seed in load_seeds(config.seed_paths, config.state_width):
        if len(seed) < 2 * config.state_width:
            raise SeedError(
                f"generalization needs seeds of at least {2 * config.state_width} bytes"
            )
    metric = metric or default_metric(config)
    results = _run_trials(
        _generalization_trial, config, trials, metric, target, network=network
    )
    return aggregate_trials(results, metric)


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation coefficient of two equally long series.

    Raises:
        UndefinedCorrelationError: If either series is constant.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("series must have the same length of at least 2")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise UndefinedCorrelationError("correlation of a constant series is undefined")
    return float(stats.pearsonr(x, y).statistic)


def reward_correlation(
    config: LoopConfig, samples: int = 500, target: Target | None = None
) -> float:
    """Correlation between memoryless coverage and execution time of random mutants.

    Each sample mutates the first seed at a uniform offset with a uniformly
    chosen enabled action and executes the result once.
    """
    if samples < 30:
        raise ValueError("reward_correlation needs at least 30 samples")
    seed = load_seeds(config.seed_paths, config.state_width)[0]
    owns_target = target is None
    if target is None:
        target = make_target(config.target, seed, config.state_width)
    rng = np.random.default_rng(config.rng_seed)
    dictionary = build_dictionary([seed], config.dictionary_min_len, config.dictionary_max_tokens)
    actions = config.enabled_actions
    coverage, times = np.empty(samples), np.empty(samples)
    try:
        for index in range(samples):
            offset = random_offset(rng, len(seed), config.state_width, config.offset_region)
            window = extract_state(seed, offset, config.state_width)
            action = actions[int(rng.integers(len(actions)))]
            try:
                mutant = apply_action(
                    seed,
                    window,
                    action,
                    dictionary,
                    rng,
                    open_marker=config.open_marker,
                    close_marker=config.close_marker,
                ).data
            except DegenerateInputError:
                mutant = seed
            trace = target.execute(mutant, config.timeout)
            coverage[index] = len(trace.blocks)
            times[index] = trace.wall_time
    finally:
        if owns_target:
            target.close()
    coefficient = pearson(coverage, times)
    logger.info("Coverage/time correlation over %d samples: %.4f", samples, coefficient)
    return coefficient


def sweep(
    dimension: str,
    values: list[str],
    config: LoopConfig,
    trials: int = 5,
    target: Target | None = None,
    metric: ScoreMetric | None = None,
) -> list[SweepRow]:
    """One compare_baseline per value of ``dimension``, sharing trial seeds.

    Cells that fail are reported with their error and the sweep continues.
    """
    if dimension not in SWEEP_DIMENSIONS:
        raise ValueError(f"cannot sweep {dimension!r}; choose from {SWEEP_DIMENSIONS}")
    if not values:
        raise ValueError("sweep needs at least one value")
    rows = []
    for value in values:
        try:
            if dimension == "state_width":
                cell = with_changes(config, state_width=int(value))
            else:
                network = config.network.model_copy(update={"activation": Activation(value)})
                cell = with_changes(config, network=network.model_dump())
            report = compare_baseline(cell, trials, target, metric)
        except (FuzzError, ValueError) as exc:
            logger.warning("Sweep %s=%s failed: %s", dimension, value, exc)
            rows.append(SweepRow(dimension=dimension, value=str(value), error=str(exc)))
            continue
        row = SweepRow(
            dimension=dimension,
            value=str(value),
            quotient=report.quotient,
            quotient_min=report.quotient_min,
            quotient_max=report.quotient_max,
            valid_trials=int(report.details["valid_trials"]),
        )
        logger.info("Sweep %s=%s: quotient %.4f", dimension, value, row.quotient)
        rows.append(row)
    ranked = sorted((r for r in rows if r.quotient is not None), key=lambda r: -r.quotient)
    if ranked:
        logger.info("Sweep %s ordering: %s", dimension, " > ".join(r.value for r in ranked))
    return rows

"""Execution targets: the built-in parser, a rigged bandit target and external commands."""

import gc
import logging
import os
import subprocess
import tempfile
import time
from abc import ABC, abstractmethod
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from ..config import settings
from ..errors import TargetEnvironmentError
from ..models import ExecutionTrace, Input, Outcome, TargetKind, TargetSpec
from .miniparser import builtin_miniparser

logger = logging.getLogger(__name__)


class Target(ABC):
    """Something that runs one input and reports an ExecutionTrace."""

    name: str = "target"

    @abstractmethod
    def execute(self, data: Input, timeout: float) -> ExecutionTrace:
        """Run ``data`` once.

        Crashes and timeouts are reported through ``ExecutionTrace.outcome``.

        Raises:
            TargetEnvironmentError: If the target cannot be run at all.
        """

    def close(self) -> None:
        """Release resources held by the target."""


class BuiltinTarget(Target):
    """The instrumented mini-parser, timed in-process."""

    name = "builtin"

    def execute(self, data: Input, timeout: float) -> ExecutionTrace:
        if timeout <= 0:
            raise ValueError("timeout must be positive")
        gc_was_enabled = gc.isenabled()
        gc.disable()
        try:
            start = time.perf_counter()
            trace = builtin_miniparser(data, deadline=start + timeout)
            elapsed = time.perf_counter() - start
        finally:
            if gc_was_enabled:
                gc.enable()
        if trace.outcome is Outcome.TIMED_OUT:
            elapsed = timeout
        return trace.model_copy(update={"wall_time": elapsed})


class RiggedTarget(Target):
    """Pays one block exactly when the mutant's length differs from the seed by ``length_delta``.

    With ``length_delta = -state_width`` only the delete-window action pays,
    which makes the optimal policy known in closed form.
    """

    name = "rigged"
    PAYING_BLOCK = 1

    def __init__(self, seed: Input, length_delta: int):
        self.seed_length = len(seed)
        self.length_delta = length_delta

    def execute(self, data: Input, timeout: float) -> ExecutionTrace:
        start = time.perf_counter()
        paid = len(data) - self.seed_length == self.length_delta
        elapsed = time.perf_counter() - start
        return ExecutionTrace(
            blocks=frozenset({self.PAYING_BLOCK}) if paid else frozenset(),
            wall_time=elapsed,
            outcome=Outcome.COMPLETED,
            path_length=int(paid),
        )


class ExternalTarget(Target):
    """A command-line program run once per input.

    ``command`` is an argument list in which ``{input}`` is replaced by the
    path of a temporary file holding the input. Exit code 0 maps to
    completed, a positive code to rejected_early and death by signal to
    crashed. When ``coverage_map`` is set the program is expected to write
    newline-delimited decimal block ids to the file named by the coverage
    environment variable.
    """

    name = "command"

    def __init__(self, command: list[str], coverage_map: bool = False):
        if not command:
            raise TargetEnvironmentError("external target needs a command")
        self.command = command
        self.coverage_map = coverage_map
        self._workdir = tempfile.TemporaryDirectory(prefix="deepq-fuzz-")
        self._input_path = Path(self._workdir.name) / "input.bin"
        self._coverage_path = Path(self._workdir.name) / "coverage.txt"

    def _argv(self) -> list[str]:
        argv = [part.replace("{input}", str(self._input_path)) for part in self.command]
        if argv == self.command:
            argv.append(str(self._input_path))
        return argv

    def _read_coverage(self) -> frozenset[int]:
        if not self.coverage_map:
            return frozenset()
        try:
            text = self._coverage_path.read_text()
        except FileNotFoundError:
            return frozenset()
        finally:
            self._coverage_path.unlink(missing_ok=True)
        try:
            return frozenset(int(line) for line in text.split())
        except ValueError as exc:
            raise TargetEnvironmentError(f"unreadable coverage map: {exc}") from exc

    def execute(self, data: Input, timeout: float) -> ExecutionTrace:
        self._input_path.write_bytes(data)
        env = dict(os.environ)
        if self.coverage_map:
            env[settings.coverage_env_var] = str(self._coverage_path)
        start = time.perf_counter()
        try:
            completed = subprocess.run(
                self._argv(),
                env=env,
                stdout=subprocess.DEVNULL,
                stderr=subprocess.DEVNULL,
                timeout=timeout,
                check=False,
            )
        except subprocess.TimeoutExpired:
            return ExecutionTrace(
                blocks=self._read_coverage(), wall_time=timeout, outcome=Outcome.TIMED_OUT
            )
        except OSError as exc:
            raise TargetEnvironmentError(f"cannot run {self.command[0]}: {exc}") from exc
        elapsed = time.perf_counter() - start

        if completed.returncode == 0:
            outcome = Outcome.COMPLETED
        elif completed.returncode < 0:
            outcome = Outcome.CRASHED
        else:
            outcome = Outcome.REJECTED_EARLY
        blocks = self._read_coverage()
        return ExecutionTrace(
            blocks=blocks, wall_time=elapsed, outcome=outcome, path_length=len(blocks)
        )

    def close(self) -> None:
        self._workdir.cleanup()


def make_target(spec: TargetSpec, seed: Input, state_width: int) -> Target:
    """Build a target from its picklable description."""
    match spec.kind:
        case TargetKind.BUILTIN:
            return BuiltinTarget()
        case TargetKind.RIGGED:
            delta = spec.length_delta if spec.length_delta is not None else -state_width
            return RiggedTarget(seed, delta)
        case TargetKind.COMMAND:
            return ExternalTarget(spec.command, coverage_map=spec.coverage_map)
    raise ValueError(f"unknown target kind {spec.kind}")


class CalibrationResult(BaseModel):
    """Timing stability of repeated executions of one input."""

    runs: int
    mean: float
    variance: float
    ratio: float
    stable: bool


def calibrate_timing(
    target: Target,
    data: Input,
    runs: int | None = None,
    timeout: float | None = None,
    threshold: float | None = None,
) -> CalibrationResult:
    """Execute ``data`` repeatedly and compare the timing variance to the mean.

    The timing is considered stable when var / mean^2 stays at or below
    ``threshold``; otherwise a warning is logged and time-based rewards on
    this machine should be treated with suspicion.
    """
    runs = runs or settings.calibration_runs
    timeout = timeout or settings.target_timeout
    threshold = settings.calibration_threshold if threshold is None else threshold
    if runs < 2:
        raise ValueError("calibration needs at least two runs")
    times = np.array([target.execute(data, timeout).wall_time for _ in range(runs)])
    mean = float(times.mean())
    variance = float(times.var(ddof=1))
    ratio = variance / mean**2 if mean > 0 else float("inf")
    stable = ratio <= threshold
    if stable:
        logger.info(
            "Timing calibration: mean=%.6fs var=%.3g var/mean^2=%.3g", mean, variance, ratio
        )
    else:
        logger.warning(
            "Timing unstable: var/mean^2=%.3g exceeds %.3g over %d runs; "
            "time rewards are unreliable on this machine",
            ratio,
            threshold,
            runs,
        )
    return CalibrationResult(runs=runs, mean=mean, variance=variance, ratio=ratio, stable=stable)

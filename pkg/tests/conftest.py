"""Pytest fixtures for testing."""

import numpy as np
import pytest

from src.deepq_fuzz.harness import Target, sample_document
from src.deepq_fuzz.models import (
    ExecutionTrace,
    LoopConfig,
    PolicyKind,
    TargetKind,
    TargetSpec,
)

# Index of delete_window in the default enabled action set.
DELETE_WINDOW = 7


def make_document(*objects: bytes) -> bytes:
    """Wrap complete ``N G obj ... endobj`` texts into a minimal parseable document."""
    out = b"%PDF-1.4\n" + b"".join(objects)
    xref_offset = len(out)
    out += b"xref\n0 1\n0000000000 65535 f \ntrailer\n<< /Size 1 >>\n"
    out += b"startxref\n" + str(xref_offset).encode() + b"\n%%EOF\n"
    return out


class ScriptedTarget(Target):
    """Replays a list of traces, one per execution, repeating the last one."""

    def __init__(self, traces: list[ExecutionTrace]):
        self.traces = traces
        self.calls = 0

    def execute(self, data: bytes, timeout: float) -> ExecutionTrace:
        trace = self.traces[min(self.calls, len(self.traces) - 1)]
        self.calls += 1
        return trace


@pytest.fixture
def rng():
    """Return a seeded generator."""
    return np.random.default_rng(1234)


@pytest.fixture
def sample_seed():
    """Return the bundled sample document."""
    return sample_document()


@pytest.fixture
def small_doc():
    """Return a two-object document with known byte layout."""
    return b"1 0 obj\n<< /A 1 >>\nendobj\n2 0 obj\n(abc)\nendobj\n"


@pytest.fixture
def rigged_config():
    """Return a small learned-policy config against the rigged target."""
    return LoopConfig(
        generations=30,
        state_width=8,
        rng_seed=11,
        target=TargetSpec(kind=TargetKind.RIGGED),
    )


@pytest.fixture
def baseline_config(rigged_config):
    """Return the rigged config under the random baseline policy."""
    return rigged_config.model_copy(update={"policy": PolicyKind.BASELINE})

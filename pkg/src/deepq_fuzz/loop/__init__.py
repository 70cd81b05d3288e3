"""Fuzzing loop: graph, run entry point, reset and report serialization."""

from .graph import build_network, create_fuzz_graph, load_seeds, run
from .nodes import FuzzContext, FuzzState, RunStreams, reset
from .report import read_report, read_table, write_report, write_table

__all__ = [
    "FuzzContext",
    "FuzzState",
    "RunStreams",
    "build_network",
    "create_fuzz_graph",
    "load_seeds",
    "read_report",
    "read_table",
    "reset",
    "run",
    "write_report",
    "write_table",
]

"""Python interface to the wadebench learning-efficiency workbench."""

import json

from ._core import (
    Error,
    EvalService,
    ca_step,
    count_oracle,
    generate,
    match_hidden_size,
    match_lstm_hidden_size,
    rule_table,
    vocabulary,
    wade,
    wade_from_file,
)
from . import _core

__all__ = [
    "Error",
    "EvalService",
    "ca_step",
    "count_oracle",
    "format_table",
    "generate",
    "match_hidden_size",
    "match_lstm_hidden_size",
    "rule_table",
    "run_experiment",
    "vocabulary",
    "wade",
    "wade_from_file",
]


def run_experiment(plan=""):
    """Run a plan given as key = value text or a dict; returns record dicts."""
    if isinstance(plan, dict):
        plan = "".join(f"{k} = {v}\n" for k, v in plan.items())
    return [json.loads(line) for line in _core.run_experiment(plan)]


def format_table(records):
    """Aggregate table (mean±std per task and model) for record dicts."""
    return _core.format_table([json.dumps(r) for r in records])

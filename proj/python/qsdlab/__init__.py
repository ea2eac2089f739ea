"""Quasi-stationary analysis of absorbed periodic Markov chains."""

import json

from ._core import SCHEMA, Analysis, QsdError, pure_cycle3, run, two_cycle

__all__ = ["SCHEMA", "Analysis", "QsdError", "pure_cycle3", "report", "run", "two_cycle"]


def report(command, chain_text, **kwargs):
    """Runs a subcommand and returns (exit_code, parsed report)."""
    code, text = run(command, chain_text, **kwargs)
    return code, json.loads(text)

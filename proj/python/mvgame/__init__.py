"""Finite-state mean-field stochastic differential games."""

from ._core import *  # noqa: F401,F403
from ._core import __version__, run_config

import json as _json


def run(config: dict):
    """Run a config given as a dict; returns (passed, report dict)."""
    passed, text = run_config(_json.dumps(config))
    return passed, _json.loads(text)

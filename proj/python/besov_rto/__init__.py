"""Besov-prior inverse problems sampled with randomize-then-optimize MH."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import diagnose as _diagnose
from ._core import run_experiment as _run_experiment


def run(config):
    """Run an experiment from a config dict; returns the run manifest."""
    return _json.loads(_run_experiment(_json.dumps(config)))


def diagnose(run_dir):
    """Chain statistics recomputed from a run directory."""
    return _json.loads(_diagnose(str(run_dir)))

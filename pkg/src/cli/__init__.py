"""
Submodule for the job runner: config parsing, the command registry and
SVG plotting.
"""
from .config import Option, JobConfig, parse_config, load_config, make_family
from .svg import PHASE, PARAM_PLANE, CURVE, render, plot
from .commands import COMMANDS, SCHEMAS, Command, Result, make_pool, run

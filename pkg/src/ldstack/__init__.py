"""Low-discrepancy symbol sequences by earliest-deadline selection."""

from .numeric import Mode
from .schedule import Schedule, StepDist, load_schedule, parse_schedule
from .stacker import UNRESOLVED, Stacker, Tiebreak, generate, step_online

__all__ = [
    "Mode",
    "Schedule",
    "StepDist",
    "Stacker",
    "Tiebreak",
    "UNRESOLVED",
    "generate",
    "load_schedule",
    "parse_schedule",
    "step_online",
]

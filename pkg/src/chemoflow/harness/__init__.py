from .config import ConstraintError, ParseError, SimConfig, parse_config
from .runner import MonitorRecord, advance_coupled, monitor, run_simulation

__all__ = [
    "ConstraintError",
    "MonitorRecord",
    "ParseError",
    "SimConfig",
    "advance_coupled",
    "monitor",
    "parse_config",
    "run_simulation",
]

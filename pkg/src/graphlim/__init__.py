"""Finite computations for probability graphons and P-variables."""
from __future__ import annotations

from .errors import BudgetExceeded, GraphLimError
from .graphon_ops import *  # noqa: F401,F403
from .measures import *  # noqa: F401,F403
from .partition import FunctionPartition, all_assignments
from .profiles import *  # noqa: F401,F403
from .pvariable import *  # noqa: F401,F403
from .realgraphon import *  # noqa: F401,F403

__version__ = "0.1.0"

"""popverif: decide whether population protocols are well-specified strongly
silent, and whether they compute a given threshold/remainder predicate,
by reduction to linear integer constraints with trap/siphon refinement."""

from .multiset import Multiset  # noqa: F401
from .protocol import (  # noqa: F401
    Configuration,
    InputAssignment,
    Protocol,
    Transition,
    consensus_output,
    enabled_transitions,
    initialize,
    is_terminal,
    normalize,
    step,
)

__version__ = "0.1.0"

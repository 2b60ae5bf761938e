"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class PopverifError(Exception):
    """Base class for all toolkit errors."""


# --- protocol model -------------------------------------------------------

class ProtocolError(PopverifError):
    """Invalid protocol or misuse of protocol operations."""


class DuplicateState(ProtocolError):
    pass


class UnknownStateInTransition(ProtocolError):
    pass


class NonBinaryTransition(ProtocolError):
    pass


class EmptyAlphabet(ProtocolError):
    pass


class NotEnabled(ProtocolError):
    """A transition was fired at a configuration lacking the required agents."""


class InputTooSmall(ProtocolError):
    """Inputs and configurations must describe at least two agents."""


class AlphabetMismatch(ProtocolError):
    """Product construction requires both protocols to share one alphabet."""


# --- file format ----------------------------------------------------------

class FormatError(PopverifError):
    """Base class for document parsing errors."""


class DocumentSyntaxError(FormatError):
    """The byte stream is not syntactically valid."""


class SchemaError(FormatError):
    """The document structure violates the schema (missing field, wrong arity)."""


class SemanticError(FormatError):
    """The document is well-formed but not a valid protocol."""


# --- solver link ----------------------------------------------------------

class SolverError(PopverifError):
    """Base class for external-solver failures."""


class SolverNotFound(SolverError):
    pass


class SolverCrashed(SolverError):
    """The solver process died or answered gibberish; carries captured stderr."""

    def __init__(self, message: str, stderr: str = "") -> None:
        super().__init__(message if not stderr else f"{message}\n--- solver stderr ---\n{stderr}")
        self.stderr = stderr


class MalformedModel(SolverError):
    """The solver claimed sat but its model failed extraction or re-evaluation."""


# --- oracle ---------------------------------------------------------------

class CapExceeded(PopverifError):
    """Explicit-state exploration hit the node cap."""

    def __init__(self, node_count: int, cap: int) -> None:
        super().__init__(f"reachability graph exceeded cap: {node_count} nodes > cap {cap}")
        self.node_count = node_count
        self.cap = cap

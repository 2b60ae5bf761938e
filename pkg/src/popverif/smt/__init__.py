"""Linear-constraint AST, SMT-LIB2 emission, and external solver sessions."""

from .ast import (  # noqa: F401
    And,
    Atom,
    BoolConst,
    FALSE,
    Formula,
    Implies,
    LinTerm,
    NameMap,
    Not,
    Or,
    TRUE,
    atom_eq,
    atom_ge,
    atom_gt,
    atom_le,
    atom_lt,
    conj,
    const,
    disj,
    evaluate,
    formula_variables,
    implies,
    lin,
    neg,
    var,
)
from .driver import (  # noqa: F401
    ENV_SOLVER,
    SolveResult,
    SolverConfig,
    SolverSession,
    SolverStats,
    solve,
)
from .emit import VarDecl, emit_script, formula_sexp  # noqa: F401

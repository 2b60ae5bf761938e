"""Deterministic SMT-LIB2 text emission.

Scripts are byte-reproducible: declarations are sorted by name, every
top-level conjunct becomes its own assert, and strict comparisons over
integer variables are normalized away (t < 0 becomes t <= -1) so no solver
has to interpret integer strictness itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .ast import And, Atom, BoolConst, Formula, Implies, LinTerm, Not, Or


@dataclass(frozen=True)
class VarDecl:
    name: str
    sort: str  # "Int" | "Real"
    nonneg: bool = False

    def __post_init__(self) -> None:
        if self.sort not in ("Int", "Real"):
            raise ValueError(f"unsupported sort {self.sort!r}")


def _int_literal(n: int) -> str:
    return str(n) if n >= 0 else f"(- {-n})"


def _term_sexp(term: LinTerm) -> str:
    parts: list[str] = []
    for v, c in term.coeffs:
        if c == 1:
            parts.append(v)
        else:
            parts.append(f"(* {_int_literal(c)} {v})")
    if term.const != 0 or not parts:
        parts.append(_int_literal(term.const))
    if len(parts) == 1:
        return parts[0]
    return f"(+ {' '.join(parts)})"


def _atom_sexp(a: Atom, integer_strict_rewrite: bool) -> str:
    op, term = a.op, a.term
    if integer_strict_rewrite:
        if op == "<":
            return _atom_sexp(Atom("<=", LinTerm(term.coeffs, term.const + 1)), False)
        if op == ">":
            return _atom_sexp(Atom(">=", LinTerm(term.coeffs, term.const - 1)), False)
    return f"({op} {_term_sexp(term)} 0)"


def formula_sexp(f: Formula, integer_strict_rewrite: bool = True) -> str:
    if isinstance(f, BoolConst):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        return _atom_sexp(f, integer_strict_rewrite)
    if isinstance(f, And):
        return f"(and {' '.join(formula_sexp(g, integer_strict_rewrite) for g in f.items)})"
    if isinstance(f, Or):
        return f"(or {' '.join(formula_sexp(g, integer_strict_rewrite) for g in f.items)})"
    if isinstance(f, Not):
        return f"(not {formula_sexp(f.item, integer_strict_rewrite)})"
    if isinstance(f, Implies):
        return (f"(=> {formula_sexp(f.left, integer_strict_rewrite)} "
                f"{formula_sexp(f.right, integer_strict_rewrite)})")
    raise TypeError(f"not a formula: {f!r}")


def conjuncts(f: Formula) -> tuple[Formula, ...]:
    return f.items if isinstance(f, And) else (f,)


def declaration_lines(decls: Iterable[VarDecl]) -> list[str]:
    lines: list[str] = []
    ordered = sorted(decls, key=lambda d: d.name)
    for d in ordered:
        lines.append(f"(declare-fun {d.name} () {d.sort})")
    for d in ordered:
        if d.nonneg:
            lines.append(f"(assert (>= {d.name} 0))")
    return lines


def assertion_lines(formulas: Iterable[Formula], integer_strict_rewrite: bool = True) -> list[str]:
    lines: list[str] = []
    for f in formulas:
        for g in conjuncts(f):
            lines.append(f"(assert {formula_sexp(g, integer_strict_rewrite)})")
    return lines


def emit_script(decls: Sequence[VarDecl], formulas: Iterable[Formula],
                logic: str = "QF_LIA", check_sat: bool = True,
                get_model: bool = False) -> bytes:
    """A complete standalone script for the given problem, as bytes."""
    rewrite = all(d.sort == "Int" for d in decls)
    lines = [f"(set-logic {logic})"]
    lines += declaration_lines(decls)
    lines += assertion_lines(formulas, rewrite)
    if check_sat:
        lines.append("(check-sat)")
    if get_model:
        lines.append("(get-model)")
    return ("\n".join(lines) + "\n").encode("utf-8")

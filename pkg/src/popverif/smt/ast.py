"""Linear-arithmetic formula AST with exact rational evaluation.

Atoms compare a canonical linear term against zero. Formulas are plain
boolean trees; no quantifiers. Models map variable names to exact values and
every satisfying model handed back by a solver is re-checked here.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Union

Value = Union[int, Fraction]


@dataclass(frozen=True)
class LinTerm:
    """sum(coeff * var) + const, with merged duplicates and no zero coeffs."""

    coeffs: tuple[tuple[str, int], ...]
    const: int = 0

    def variables(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.coeffs)

    def evaluate(self, model: Mapping[str, Value]) -> Value:
        total: Value = self.const
        for var, c in self.coeffs:
            total += c * model.get(var, 0)
        return total

    def __add__(self, other: "LinTerm") -> "LinTerm":
        merged = dict(self.coeffs)
        for v, c in other.coeffs:
            merged[v] = merged.get(v, 0) + c
        return lin(merged, self.const + other.const)

    def scaled(self, k: int) -> "LinTerm":
        return lin({v: k * c for v, c in self.coeffs}, k * self.const)


def lin(coeffs: Mapping[str, int], const: int = 0) -> LinTerm:
    items = tuple(sorted((v, int(c)) for v, c in coeffs.items() if int(c) != 0))
    return LinTerm(items, int(const))


def var(name: str) -> LinTerm:
    return lin({name: 1})


def const(n: int) -> LinTerm:
    return lin({}, n)


@dataclass(frozen=True)
class Atom:
    """term `op` 0 with op one of <=, <, =, >=, >."""

    op: str
    term: LinTerm

    def __post_init__(self) -> None:
        if self.op not in ("<=", "<", "=", ">=", ">"):
            raise ValueError(f"bad comparison {self.op!r}")


@dataclass(frozen=True)
class And:
    items: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    items: tuple["Formula", ...]


@dataclass(frozen=True)
class Not:
    item: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class BoolConst:
    value: bool


Formula = Union[Atom, And, Or, Not, Implies, BoolConst]

TRUE = BoolConst(True)
FALSE = BoolConst(False)


def atom_le(term: LinTerm) -> Atom:
    return Atom("<=", term)


def atom_lt(term: LinTerm) -> Atom:
    return Atom("<", term)


def atom_eq(term: LinTerm) -> Atom:
    return Atom("=", term)


def atom_ge(term: LinTerm) -> Atom:
    return Atom(">=", term)


def atom_gt(term: LinTerm) -> Atom:
    return Atom(">", term)


def conj(*items: Formula) -> Formula:
    flat: list[Formula] = []
    for f in items:
        if isinstance(f, BoolConst):
            if not f.value:
                return FALSE
            continue
        if isinstance(f, And):
            flat.extend(f.items)
        else:
            flat.append(f)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(*items: Formula) -> Formula:
    flat: list[Formula] = []
    for f in items:
        if isinstance(f, BoolConst):
            if f.value:
                return TRUE
            continue
        if isinstance(f, Or):
            flat.extend(f.items)
        else:
            flat.append(f)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def implies(left: Formula, right: Formula) -> Formula:
    if isinstance(left, BoolConst):
        return right if left.value else TRUE
    if isinstance(right, BoolConst) and right.value:
        return TRUE
    return Implies(left, right)


def neg(f: Formula) -> Formula:
    if isinstance(f, BoolConst):
        return BoolConst(not f.value)
    if isinstance(f, Not):
        return f.item
    return Not(f)


def formula_variables(f: Formula) -> set[str]:
    out: set[str] = set()
    stack: list[Formula] = [f]
    while stack:
        node = stack.pop()
        if isinstance(node, Atom):
            out.update(node.term.variables())
        elif isinstance(node, (And, Or)):
            stack.extend(node.items)
        elif isinstance(node, Not):
            stack.append(node.item)
        elif isinstance(node, Implies):
            stack.append(node.left)
            stack.append(node.right)
    return out


def evaluate(f: Formula, model: Mapping[str, Value]) -> bool:
    if isinstance(f, BoolConst):
        return f.value
    if isinstance(f, Atom):
        v = f.term.evaluate(model)
        if f.op == "<=":
            return v <= 0
        if f.op == "<":
            return v < 0
        if f.op == "=":
            return v == 0
        if f.op == ">=":
            return v >= 0
        return v > 0
    if isinstance(f, And):
        return all(evaluate(g, model) for g in f.items)
    if isinstance(f, Or):
        return any(evaluate(g, model) for g in f.items)
    if isinstance(f, Not):
        return not evaluate(f.item, model)
    if isinstance(f, Implies):
        return (not evaluate(f.left, model)) or evaluate(f.right, model)
    raise TypeError(f"not a formula: {f!r}")


_SAFE_CHARS = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.+-")


class NameMap:
    """Assigns unique solver-safe names to arbitrary keys, deterministically."""

    def __init__(self) -> None:
        self._forward: dict[object, str] = {}
        self._taken: set[str] = set()

    @staticmethod
    def sanitize(text: str) -> str:
        cleaned = "".join(ch if ch in _SAFE_CHARS else "_" for ch in text)
        if not cleaned:
            cleaned = "v"
        if cleaned[0].isdigit():
            cleaned = "n" + cleaned
        return cleaned

    def assign(self, key: object, text: str) -> str:
        existing = self._forward.get(key)
        if existing is not None:
            return existing
        base = self.sanitize(text)
        name = base
        suffix = 2
        while name in self._taken:
            name = f"{base}__{suffix}"
            suffix += 1
        self._forward[key] = name
        self._taken.add(name)
        return name

    def __getitem__(self, key: object) -> str:
        return self._forward[key]

"""Does a protocol compute a given predicate?

Predicates are trees of threshold and remainder atoms closed under not, and,
or. The check extends the consensus system: it asks for an input whose image
configuration flows to a terminal configuration populating a state whose
output contradicts the predicate value of that input, refined by the same
trap/siphon loop. Unsatisfiability of the stable system proves the protocol
computes the predicate; a stable model is a concrete counterexample.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .consensus import (
    ReachTriple,
    RefinementState,
    config_from_model,
    declare_config,
    declare_flow,
    flow_equations,
    flow_from_model,
    output_support_constraint,
    refine_until_stable,
    terminal_constraint,
)
from .errors import ProtocolError
from .multiset import Multiset
from .protocol import Configuration, InputAssignment, Protocol, Transition
from .smt.ast import (
    Formula,
    NameMap,
    atom_eq,
    atom_ge,
    atom_gt,
    atom_le,
    atom_lt,
    conj,
    disj,
    lin,
    neg,
)
from .smt.driver import SolverConfig, SolverSession, SolverStats
from .smt.emit import VarDecl

Predicate = Mapping


def eval_predicate(predicate: Predicate, x: Mapping[str, int]) -> int:
    """Direct arithmetic evaluation of a predicate tree at an input."""
    if "threshold" in predicate:
        body = predicate["threshold"]
        total = sum(int(a) * int(x.get(sym, 0)) for sym, a in body["coeffs"].items())
        return int(total < int(body["c"]))
    if "remainder" in predicate:
        body = predicate["remainder"]
        total = sum(int(a) * int(x.get(sym, 0)) for sym, a in body["coeffs"].items())
        return int(total % int(body["m"]) == int(body["c"]) % int(body["m"]))
    if "not" in predicate:
        return 1 - eval_predicate(predicate["not"], x)
    if "and" in predicate:
        left, right = predicate["and"]
        return eval_predicate(left, x) & eval_predicate(right, x)
    if "or" in predicate:
        left, right = predicate["or"]
        return eval_predicate(left, x) | eval_predicate(right, x)
    raise ProtocolError(f"unrecognized predicate node: {sorted(predicate)}")


@dataclass
class _Encoder:
    """Compiles a predicate tree to a formula over input-count variables.

    Each remainder atom introduces a quotient and a bounded residue variable,
    defined unconditionally (they are functions of the input), so the atom
    and its negation are both just comparisons on the residue.
    """

    xvars: Mapping[str, str]
    names: NameMap
    aux_decls: list[VarDecl] = field(default_factory=list)
    aux_defs: list[Formula] = field(default_factory=list)
    counter: int = 0

    def compile(self, predicate: Predicate) -> Formula:
        if "threshold" in predicate:
            body = predicate["threshold"]
            coeffs = {self.xvars[sym]: int(a) for sym, a in body["coeffs"].items()
                      if int(a) != 0}
            return atom_lt(lin(coeffs, -int(body["c"])))
        if "remainder" in predicate:
            body = predicate["remainder"]
            m = int(body["m"])
            self.counter += 1
            quot = self.names.assign(("rem_q", self.counter), f"remq{self.counter}")
            res = self.names.assign(("rem_r", self.counter), f"remr{self.counter}")
            self.aux_decls.append(VarDecl(quot, "Int"))
            self.aux_decls.append(VarDecl(res, "Int", nonneg=True))
            coeffs = {self.xvars[sym]: int(a) for sym, a in body["coeffs"].items()
                      if int(a) != 0}
            coeffs[quot] = coeffs.get(quot, 0) - m
            coeffs[res] = coeffs.get(res, 0) - 1
            self.aux_defs.append(atom_eq(lin(coeffs)))
            self.aux_defs.append(atom_le(lin({res: 1}, -(m - 1))))
            return atom_eq(lin({res: 1}, -(int(body["c"]) % m)))
        if "not" in predicate:
            return neg(self.compile(predicate["not"]))
        if "and" in predicate:
            left, right = predicate["and"]
            return conj(self.compile(left), self.compile(right))
        if "or" in predicate:
            left, right = predicate["or"]
            return disj(self.compile(left), self.compile(right))
        raise ProtocolError(f"unrecognized predicate node: {sorted(predicate)}")


@dataclass(frozen=True)
class CorrectnessVerdict:
    kind: str  # "holds" | "fails" | "unknown"
    x: Optional[InputAssignment] = None
    config: Optional[Configuration] = None
    flow: Optional[dict[Transition, int]] = None
    expected: Optional[int] = None  # predicate value at the counterexample input
    traps: tuple[frozenset[str], ...] = ()
    siphons: tuple[frozenset[str], ...] = ()
    iterations: int = 0
    stats: Optional[SolverStats] = field(default=None, compare=False)
    elapsed: float = field(default=0.0, compare=False)

    @property
    def holds(self) -> bool:
        return self.kind == "holds"

    @property
    def refinement_count(self) -> int:
        return len(self.traps) + len(self.siphons)


def check_correctness(
    protocol: Protocol,
    predicate: Predicate,
    solver: Optional[SolverConfig] = None,
    timeout: Optional[float] = None,
    max_refinements: Optional[int] = None,
) -> CorrectnessVerdict:
    """Search for an input on which the protocol could stabilize wrongly.

    Intended for protocols already certified well-specified strongly silent:
    there, terminal configurations reachable from initial ones are consensus,
    so one wrongly-valued populated state already refutes correctness, and
    the encoding below ("some state of the wrong output is populated") is
    exact rather than heuristic.
    """
    for sym in _predicate_symbols(predicate):
        if sym not in protocol.alphabet:
            raise ProtocolError(f"predicate mentions unknown input symbol {sym!r}")
    started = time.monotonic()
    deadline = None if timeout is None else started + timeout
    cfg = solver or SolverConfig.resolve()
    names = NameMap()
    with SolverSession(cfg, logic="QF_LIA", name="correctness") as session:
        xvars = {sym: names.assign(("X", sym), f"X_{sym}") for sym in protocol.alphabet}
        session.declare_all([VarDecl(xvars[s], "Int", nonneg=True)
                             for s in protocol.alphabet])
        c0 = declare_config(session, names, protocol, "c0")
        c1 = declare_config(session, names, protocol, "c1")
        x1 = declare_flow(session, names, protocol, "x")
        triple = ReachTriple(c0, c1, x1)

        session.add(atom_ge(lin({v: 1 for v in xvars.values()}, -2)))
        for q in protocol.states:
            syms = [s for s in protocol.alphabet if protocol.input_map[s] == q]
            coeffs = {c0[q]: 1}
            for s in syms:
                coeffs[xvars[s]] = coeffs.get(xvars[s], 0) - 1
            session.add(atom_eq(lin(coeffs)))
        for f in flow_equations(protocol, c0, c1, x1):
            session.add(f)
        session.add(terminal_constraint(protocol, c1))

        encoder = _Encoder(xvars, names)
        phi = encoder.compile(predicate)
        session.declare_all(encoder.aux_decls)
        for f in encoder.aux_defs:
            session.add(f)
        session.add(disj(
            conj(phi, output_support_constraint(protocol, c1, 0)),
            conj(neg(phi), output_support_constraint(protocol, c1, 1)),
        ))

        state = RefinementState()
        outcome = refine_until_stable(session, protocol, (triple,), state,
                                      deadline, max_refinements)
        elapsed = time.monotonic() - started
        if outcome.kind == "unsat":
            return CorrectnessVerdict("holds", traps=tuple(state.traps),
                                      siphons=tuple(state.siphons),
                                      iterations=state.iterations,
                                      stats=session.stats, elapsed=elapsed)
        if outcome.kind == "unknown":
            return CorrectnessVerdict("unknown", traps=tuple(state.traps),
                                      siphons=tuple(state.siphons),
                                      iterations=state.iterations,
                                      stats=session.stats, elapsed=elapsed)
        model = outcome.model
        witness = Multiset({sym: int(model[xvars[sym]]) for sym in protocol.alphabet
                            if int(model[xvars[sym]])})
        return CorrectnessVerdict(
            "fails",
            x=witness,
            config=config_from_model(model, c1),
            flow=flow_from_model(model, x1),
            expected=eval_predicate(predicate, witness.to_dict()),
            traps=tuple(state.traps),
            siphons=tuple(state.siphons),
            iterations=state.iterations,
            stats=session.stats,
            elapsed=elapsed,
        )


def _predicate_symbols(predicate: Predicate) -> set[str]:
    if "threshold" in predicate:
        return set(predicate["threshold"]["coeffs"])
    if "remainder" in predicate:
        return set(predicate["remainder"]["coeffs"])
    if "not" in predicate:
        return _predicate_symbols(predicate["not"])
    if "and" in predicate:
        left, right = predicate["and"]
        return _predicate_symbols(left) | _predicate_symbols(right)
    if "or" in predicate:
        left, right = predicate["or"]
        return _predicate_symbols(left) | _predicate_symbols(right)
    raise ProtocolError(f"unrecognized predicate node: {sorted(predicate)}")

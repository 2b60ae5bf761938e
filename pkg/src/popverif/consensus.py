"""Strong consensus via constraint solving with trap/siphon refinement.

The base system asks for an initial configuration with flows to two terminal
configurations whose populated outputs disagree. Unsatisfiability proves the
protocol cannot split or get stuck under the flow-plus-trap/siphon
over-approximation of reachability. Each satisfying model is inspected: a
maximal trap empty in a target configuration that still receives agents, or
a maximal siphon empty in the source that still feeds transitions, yields a
new guarded constraint; when no such set exists the model is a genuine
counterexample for the over-approximated relation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .multiset import Multiset
from .protocol import Configuration, Protocol, Transition, is_terminal
from .smt.ast import (
    FALSE,
    Formula,
    NameMap,
    atom_eq,
    atom_gt,
    atom_lt,
    conj,
    disj,
    evaluate,
    implies,
    lin,
)
from .smt.driver import SolverConfig, SolverSession, SolverStats
from .smt.emit import VarDecl
from .structural import (
    check_potential_reachability,
    consumers_from,
    maximal_siphon_in_zero,
    maximal_trap_in_zero,
    producers_into,
)

VarMap = dict[str, str]  # state -> solver variable
FlowVarMap = dict[Transition, str]


@dataclass(frozen=True)
class ReachTriple:
    """Solver variables of one potential-reachability fact source ~~x~> target."""

    source: VarMap
    target: VarMap
    flow: FlowVarMap


@dataclass
class RefinementState:
    traps: list[frozenset[str]] = field(default_factory=list)
    siphons: list[frozenset[str]] = field(default_factory=list)
    iterations: int = 0

    @property
    def count(self) -> int:
        return len(self.traps) + len(self.siphons)


@dataclass(frozen=True)
class ConsensusVerdict:
    kind: str  # "holds" | "fails" | "unknown"
    c0: Optional[Configuration] = None
    c1: Optional[Configuration] = None
    c2: Optional[Configuration] = None
    x1: Optional[dict[Transition, int]] = None
    x2: Optional[dict[Transition, int]] = None
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


# -- constraint builders (shared with the correctness check) -------------------


def declare_config(session: SolverSession, names: NameMap, protocol: Protocol,
                   prefix: str) -> VarMap:
    vm = {q: names.assign((prefix, q), f"{prefix}_{q}") for q in protocol.states}
    session.declare_all([VarDecl(vm[q], "Int", nonneg=True) for q in protocol.states])
    return vm


def declare_flow(session: SolverSession, names: NameMap, protocol: Protocol,
                 prefix: str) -> FlowVarMap:
    ts = protocol.transitions
    fm = {t: names.assign((prefix, t), f"{prefix}_{t.canonical_name}") for t in ts}
    session.declare_all([VarDecl(fm[t], "Int", nonneg=True) for t in ts])
    return fm


def flow_equations(protocol: Protocol, source: VarMap, target: VarMap,
                   flow: FlowVarMap) -> list[Formula]:
    """target(q) = source(q) + sum_t x(t) * delta_t(q), one equation per state."""
    out: list[Formula] = []
    for q in protocol.states:
        coeffs: dict[str, int] = {target[q]: 1, source[q]: -1}
        for t in protocol.transitions:
            d = t.delta().get(q, 0)
            if d:
                coeffs[flow[t]] = coeffs.get(flow[t], 0) - d
        out.append(atom_eq(lin(coeffs)))
    return out


def initial_constraint(protocol: Protocol, config: VarMap) -> Formula:
    """At least two agents, all of them on states reachable via the input map."""
    initial = set(protocol.initial_states())
    at_least_two = atom_gt(lin({config[q]: 1 for q in initial}, -1))
    outside = [q for q in protocol.states if q not in initial]
    if not outside:
        return at_least_two
    return conj(at_least_two, atom_eq(lin({config[q]: 1 for q in outside})))


def terminal_constraint(protocol: Protocol, config: VarMap) -> Formula:
    """Every non-silent transition is short of at least one agent."""
    parts: list[Formula] = []
    for t in protocol.non_silent_transitions:
        p, q = t.pre
        if p == q:
            parts.append(atom_lt(lin({config[p]: 1}, -2)))
        else:
            parts.append(disj(atom_lt(lin({config[p]: 1}, -1)),
                              atom_lt(lin({config[q]: 1}, -1))))
    return conj(*parts)


def output_support_constraint(protocol: Protocol, config: VarMap, value: int) -> Formula:
    """Some state with the given output is populated."""
    states = [q for q in protocol.states if protocol.output_map[q] == value]
    if not states:
        return FALSE
    return atom_gt(lin({config[q]: 1 for q in states}))


def trap_constraint(states: frozenset[str], protocol: Protocol,
                    triple: ReachTriple) -> Formula:
    """If the flow feeds the trap and never drains it past refills, the
    target keeps it populated."""
    ts = protocol.transitions
    into = sorted(producers_into(states, ts), key=lambda t: (t.pre, t.post))
    out_only = sorted(consumers_from(states, ts) - set(into),
                      key=lambda t: (t.pre, t.post))
    guard = conj(
        atom_gt(lin({triple.flow[t]: 1 for t in into})),
        atom_eq(lin({triple.flow[t]: 1 for t in out_only})),
    )
    return implies(guard, atom_gt(lin({triple.target[q]: 1 for q in sorted(states)})))


def siphon_constraint(states: frozenset[str], protocol: Protocol,
                      triple: ReachTriple) -> Formula:
    """If the flow drains the siphon and never feeds it from outside, the
    source must have populated it."""
    ts = protocol.transitions
    outof = sorted(consumers_from(states, ts), key=lambda t: (t.pre, t.post))
    in_only = sorted(producers_into(states, ts) - set(outof),
                     key=lambda t: (t.pre, t.post))
    guard = conj(
        atom_gt(lin({triple.flow[t]: 1 for t in outof})),
        atom_eq(lin({triple.flow[t]: 1 for t in in_only})),
    )
    return implies(guard, atom_gt(lin({triple.source[q]: 1 for q in sorted(states)})))


def config_from_model(model: Mapping[str, object], vm: VarMap) -> Configuration:
    return Multiset({q: int(model[name]) for q, name in vm.items() if int(model[name])})


def flow_from_model(model: Mapping[str, object], fm: FlowVarMap) -> dict[Transition, int]:
    return {t: int(model[name]) for t, name in fm.items() if int(model[name])}


@dataclass
class LoopOutcome:
    kind: str  # "unsat" | "model" | "unknown"
    model: Optional[dict] = None


def refine_until_stable(
    session: SolverSession,
    protocol: Protocol,
    triples: Sequence[ReachTriple],
    state: RefinementState,
    deadline: Optional[float],
    max_refinements: Optional[int] = None,
) -> LoopOutcome:
    """The shared refinement loop over a list of reachability triples.

    Every satisfying model is audited against the trap/siphon conditions of
    each triple; all violated maximal sets found in one round are added (as
    guarded constraints instantiated for every triple) before re-solving.
    """
    known = set(state.traps) | set(state.siphons)
    while True:
        remaining = None if deadline is None else deadline - time.monotonic()
        if remaining is not None and remaining <= 0:
            return LoopOutcome("unknown")
        answer = session.check_sat(remaining)
        state.iterations += 1
        if answer == "unsat":
            return LoopOutcome("unsat")
        if answer == "unknown":
            return LoopOutcome("unknown")
        model = session.get_model()
        additions: list[tuple[str, frozenset[str], Formula]] = []
        for triple in triples:
            flow = flow_from_model(model, triple.flow)
            support = sorted(flow, key=lambda t: (t.pre, t.post))
            target = config_from_model(model, triple.target)
            zero_target = [q for q in protocol.states if target[q] == 0]
            trap = maximal_trap_in_zero(support, zero_target)
            if trap and producers_into(trap, support) and trap not in known:
                constraint = trap_constraint(trap, protocol, triple)
                assert not evaluate(constraint, model), "refinement must cut the model"
                known.add(trap)
                state.traps.append(trap)
                additions.append(("trap", trap, constraint))
            source = config_from_model(model, triple.source)
            zero_source = [q for q in protocol.states if source[q] == 0]
            siphon = maximal_siphon_in_zero(support, zero_source)
            if siphon and consumers_from(siphon, support) and siphon not in known:
                constraint = siphon_constraint(siphon, protocol, triple)
                assert not evaluate(constraint, model), "refinement must cut the model"
                known.add(siphon)
                state.siphons.append(siphon)
                additions.append(("siphon", siphon, constraint))
        if not additions:
            return LoopOutcome("model", model)
        for kind, states, _ in additions:
            build = trap_constraint if kind == "trap" else siphon_constraint
            for triple in triples:
                session.add(build(states, protocol, triple))
        if max_refinements is not None and state.count > max_refinements:
            return LoopOutcome("unknown")


def check_strong_consensus(
    protocol: Protocol,
    solver: Optional[SolverConfig] = None,
    timeout: Optional[float] = None,
    max_refinements: Optional[int] = None,
) -> ConsensusVerdict:
    """Decide strong consensus; holds-proofs carry the refinement sets, and
    failures carry a replayable counterexample."""
    started = time.monotonic()
    deadline = None if timeout is None else started + timeout
    cfg = solver or SolverConfig.resolve()
    names = NameMap()
    with SolverSession(cfg, logic="QF_LIA", name="consensus") as session:
        c0 = declare_config(session, names, protocol, "c0")
        c1 = declare_config(session, names, protocol, "c1")
        c2 = declare_config(session, names, protocol, "c2")
        x1 = declare_flow(session, names, protocol, "x1")
        x2 = declare_flow(session, names, protocol, "x2")
        t1 = ReachTriple(c0, c1, x1)
        t2 = ReachTriple(c0, c2, x2)
        for f in flow_equations(protocol, c0, c1, x1):
            session.add(f)
        for f in flow_equations(protocol, c0, c2, x2):
            session.add(f)
        session.add(initial_constraint(protocol, c0))
        session.add(terminal_constraint(protocol, c1))
        session.add(terminal_constraint(protocol, c2))
        session.add(output_support_constraint(protocol, c1, 1))
        session.add(output_support_constraint(protocol, c2, 0))

        state = RefinementState()
        outcome = refine_until_stable(session, protocol, (t1, t2), state,
                                      deadline, max_refinements)
        elapsed = time.monotonic() - started
        if outcome.kind == "unsat":
            return ConsensusVerdict("holds", traps=tuple(state.traps),
                                    siphons=tuple(state.siphons),
                                    iterations=state.iterations,
                                    stats=session.stats, elapsed=elapsed)
        if outcome.kind == "unknown":
            return ConsensusVerdict("unknown", traps=tuple(state.traps),
                                    siphons=tuple(state.siphons),
                                    iterations=state.iterations,
                                    stats=session.stats, elapsed=elapsed)
        model = outcome.model
        return ConsensusVerdict(
            "fails",
            c0=config_from_model(model, c0),
            c1=config_from_model(model, c1),
            c2=config_from_model(model, c2),
            x1=flow_from_model(model, x1),
            x2=flow_from_model(model, x2),
            traps=tuple(state.traps),
            siphons=tuple(state.siphons),
            iterations=state.iterations,
            stats=session.stats,
            elapsed=elapsed,
        )


def audit_counterexample(protocol: Protocol, verdict: ConsensusVerdict) -> bool:
    """Replay a failure certificate with exact arithmetic, independent of the solver.

    Checks both potential-reachability triples plus the side conditions:
    the source is initial with at least two agents, both targets are terminal,
    and the targets populate a 1-output and a 0-output state respectively.
    """
    if verdict.kind != "fails":
        raise ValueError("only failure verdicts carry counterexamples")
    c0, c1, c2 = verdict.c0, verdict.c1, verdict.c2
    if c0 is None or c1 is None or c2 is None:
        return False
    initial = set(protocol.initial_states())
    if c0.total < 2 or any(q not in initial for q in c0.support):
        return False
    if not (is_terminal(protocol, c1) and is_terminal(protocol, c2)):
        return False
    if not any(protocol.output_map[q] == 1 for q in c1.support):
        return False
    if not any(protocol.output_map[q] == 0 for q in c2.support):
        return False
    return bool(check_potential_reachability(protocol, c0, c1, verdict.x1 or {})
                and check_potential_reachability(protocol, c0, c2, verdict.x2 or {}))

"""Structural analyses shared by both verifiers.

Flow-equation checking, U-traps and U-siphons with greedy maximal-set
computation, the potential-reachability test, U-deadness, and the
linear-programming test for non-silent invariant cycles (the one operation
here that consults the external solver, over rationals).
"""

from __future__ import annotations

import atexit
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .multiset import Multiset
from .protocol import Configuration, Protocol, Transition
from .smt.ast import Formula, atom_eq, atom_ge, lin
from .smt.driver import SolverConfig, SolverSession

FlowAssignment = Mapping[Transition, int]
StateSet = frozenset[str]


def producers_into(states: Iterable[str], transitions: Iterable[Transition]) -> set[Transition]:
    """Transitions that put at least one agent into the state set."""
    s = set(states)
    return {t for t in transitions if s.intersection(t.post)}


def consumers_from(states: Iterable[str], transitions: Iterable[Transition]) -> set[Transition]:
    """Transitions that take at least one agent out of the state set."""
    s = set(states)
    return {t for t in transitions if s.intersection(t.pre)}


def check_flow(protocol: Protocol, source: Configuration, target: Configuration,
               x: FlowAssignment) -> bool:
    """Does target(q) = source(q) + sum_t x(t) * (post(t)(q) - pre(t)(q)) hold for all q?"""
    net: dict[str, int] = {}
    for t, n in x.items():
        if not n:
            continue
        for q, d in t.delta().items():
            net[q] = net.get(q, 0) + n * d
    return all(target[q] == source[q] + net.get(q, 0) for q in protocol.states)


def is_trap(states: Iterable[str], transitions: Iterable[Transition]) -> bool:
    """True iff every listed transition consuming from the set also produces into it."""
    s = set(states)
    for t in transitions:
        if s.intersection(t.pre) and not s.intersection(t.post):
            return False
    return True


def is_siphon(states: Iterable[str], transitions: Iterable[Transition]) -> bool:
    """True iff every listed transition producing into the set also consumes from it."""
    s = set(states)
    for t in transitions:
        if s.intersection(t.post) and not s.intersection(t.pre):
            return False
    return True


def maximal_trap_in_zero(transitions: Iterable[Transition], zero: Iterable[str]) -> StateSet:
    """Largest trap (w.r.t. the given transitions) inside the state set `zero`.

    Greedy fixpoint: while some transition consumes from the current set but
    produces nothing into it, drop the consumed states. Traps are closed under
    union, so the fixpoint is the unique maximum and is independent of the
    (lexicographically fixed) removal order.
    """
    current = set(zero)
    ts = sorted(transitions, key=lambda t: (t.pre, t.post))
    changed = True
    while changed and current:
        changed = False
        for t in ts:
            inside = current.intersection(t.pre)
            if inside and not current.intersection(t.post):
                current -= inside
                changed = True
    return frozenset(current)


def maximal_siphon_in_zero(transitions: Iterable[Transition], zero: Iterable[str]) -> StateSet:
    """Dual of `maximal_trap_in_zero`: largest siphon inside `zero`."""
    current = set(zero)
    ts = sorted(transitions, key=lambda t: (t.pre, t.post))
    changed = True
    while changed and current:
        changed = False
        for t in ts:
            inside = current.intersection(t.post)
            if inside and not current.intersection(t.pre):
                current -= inside
                changed = True
    return frozenset(current)


@dataclass(frozen=True)
class PotentialReachResult:
    ok: bool
    condition: Optional[str] = None  # "a" | "b" | "c"
    witness: Optional[StateSet] = None

    def __bool__(self) -> bool:
        return self.ok


def check_potential_reachability(protocol: Protocol, source: Configuration,
                                 target: Configuration, x: FlowAssignment) -> PotentialReachResult:
    """Flow equations plus trap/siphon emptiness for U = support of x.

    (a) the flow equations hold; (b) the maximal U-trap inside the zero set
    of `target` receives nothing from U; (c) the maximal U-siphon inside the
    zero set of `source` feeds nothing in U. Sound over-approximation of
    reachability: every genuine execution passes.
    """
    support = [t for t, n in x.items() if n]
    if not check_flow(protocol, source, target, x):
        return PotentialReachResult(False, "a")
    zero_target = [q for q in protocol.states if target[q] == 0]
    trap = maximal_trap_in_zero(support, zero_target)
    if producers_into(trap, support):
        return PotentialReachResult(False, "b", trap)
    zero_source = [q for q in protocol.states if source[q] == 0]
    siphon = maximal_siphon_in_zero(support, zero_source)
    if consumers_from(siphon, support):
        return PotentialReachResult(False, "c", siphon)
    return PotentialReachResult(True)


@dataclass(frozen=True)
class DeadnessViolation:
    """Witness that firing s from `config` (which is U-dead) enables u."""

    s: Transition
    u: Transition
    config: Multiset


def find_u_dead_violation(
    s_transitions: Iterable[Transition], u_transitions: Iterable[Transition]
) -> Optional[DeadnessViolation]:
    """A witness that S-steps can wake a non-silent U-transition, if any.

    A violation exists iff some s in S and non-silent u in U satisfy
    pre(u') <= pre(s) + (pre(u) - post(s)) for no non-silent u' in U
    (saturating difference); the bound itself is then a U-dead configuration
    that enables u after firing s.
    """
    u_live = sorted((u for u in u_transitions if not u.silent),
                    key=lambda t: (t.pre, t.post))
    if not u_live:
        return None
    pre_u_list = [u.pre_multiset for u in u_live]
    for s in sorted(s_transitions, key=lambda t: (t.pre, t.post)):
        pre_s = s.pre_multiset
        post_s = s.post_multiset
        for u, pre_u in zip(u_live, pre_u_list):
            bound = pre_s + pre_u.saturating_sub(post_s)
            if not any(p <= bound for p in pre_u_list):
                return DeadnessViolation(s, u, bound)
    return None


def is_U_dead(s_transitions: Iterable[Transition], u_transitions: Iterable[Transition]) -> bool:
    """True iff no S-sequence from any U-dead configuration enables non-silent U."""
    return find_u_dead_violation(s_transitions, u_transitions) is None


# -- non-silent invariant cycles (LP over rationals) -------------------------

_lp_sessions = threading.local()
_all_lp_sessions: list[SolverSession] = []


@atexit.register
def _close_lp_sessions() -> None:
    for session in _all_lp_sessions:
        session.close()


def _lp_session(config: Optional[SolverConfig]) -> SolverSession:
    """Thread-local solver session reused across LP queries via push/pop."""
    cache = getattr(_lp_sessions, "cache", None)
    if cache is None:
        cache = {}
        _lp_sessions.cache = cache
    cfg = config or SolverConfig.resolve()
    session = cache.get(cfg.command)
    if session is None or not session.alive:
        session = SolverSession(cfg, logic="QF_LRA")
        cache[cfg.command] = session
        _all_lp_sessions.append(session)
    return session


def has_nonsilent_invariant_cycle(
    transitions: Iterable[Transition],
    solver: Optional[SolverConfig] = None,
) -> Optional[dict[Transition, Fraction]]:
    """A nonnegative, nonzero rational combination of the given non-silent
    transitions with zero net effect, if one exists.

    Such a combination exists iff the protocol restricted to those transitions
    admits a non-silent execution. Strict positivity is normalized to
    "the components sum to at least 1" (the condition is scale-invariant).
    """
    ts = sorted((t for t in transitions if not t.silent), key=lambda t: (t.pre, t.post))
    if not ts:
        return None
    names = {t: f"x{i}" for i, t in enumerate(ts)}
    constraints: list[Formula] = [atom_ge(lin({names[t]: 1 for t in ts}, -1))]
    touched: set[str] = set()
    for t in ts:
        touched.update(t.pre)
        touched.update(t.post)
    for q in sorted(touched):
        coeffs = {names[t]: t.delta().get(q, 0) for t in ts if t.delta().get(q, 0)}
        constraints.append(atom_eq(lin(coeffs, 0)))
    session = _lp_session(solver)
    with session.scope():
        for name in names.values():
            session.declare(name, "Real", nonneg=True)
        for f in constraints:
            session.add(f)
        answer = session.check_sat()
        if answer == "unsat":
            return None
        if answer != "sat":
            raise RuntimeError(f"LP feasibility query returned {answer}")
        model = session.get_model(sorted(names.values()))
    return {t: Fraction(model[names[t]]) for t in ts}

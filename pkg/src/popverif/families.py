"""Generators for the benchmark protocol families and boolean combinators.

Covers the threshold and remainder constructions, the 4-state majority
protocol, a 2-state broadcast, two flock-of-birds variants, output negation,
and conjunction as an asynchronous product. Each generator also knows the
predicate its protocol is meant to compute, as a predicate document tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .errors import AlphabetMismatch, ProtocolError
from .protocol import Protocol, Transition, normalize

Predicate = dict


def _clamp(v_max: int, value: int) -> int:
    return max(-v_max, min(v_max, value))


@dataclass(frozen=True)
class ThresholdSpec:
    """Parameters of sum(a_i * x_i) < c with the saturation bound v_max."""

    coeffs: tuple[int, ...]
    c: int

    def __post_init__(self) -> None:
        if not self.coeffs:
            raise ProtocolError("threshold needs at least one coefficient")

    @property
    def v_max(self) -> int:
        return max(max(abs(a) for a in self.coeffs), abs(self.c) + 1)

    @staticmethod
    def benchmark(v_max: int, c: int = 1) -> "ThresholdSpec":
        """Worst-case instance: one input symbol per value in [-v_max, v_max]."""
        spec = ThresholdSpec(tuple(range(-v_max, v_max + 1)), c)
        if spec.v_max != v_max:
            raise ProtocolError(f"c={c} inflates v_max beyond {v_max}")
        return spec

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(f"x{a}" for a in self.coeffs)


@dataclass(frozen=True)
class RemainderSpec:
    """Parameters of sum(a_i * x_i) = c (mod m)."""

    coeffs: tuple[int, ...]
    c: int
    m: int

    def __post_init__(self) -> None:
        if self.m < 2:
            raise ProtocolError(f"modulus must be at least 2, got {self.m}")
        if not self.coeffs:
            raise ProtocolError("remainder needs at least one coefficient")

    @staticmethod
    def benchmark(m: int, c: int = 1) -> "RemainderSpec":
        """One input symbol per residue class."""
        return RemainderSpec(tuple(range(m)), c, m)

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(f"x{a}" for a in self.coeffs)


def _threshold_state(leader: int, value: int, opinion: int) -> str:
    return f"{'L' if leader else 'N'}{value:+d}{'T' if opinion else 'F'}"


def gen_threshold(spec: ThresholdSpec) -> Protocol:
    """Leader-based saturating-sum protocol for sum(a_i * x_i) < c.

    States are (leader, value, opinion) triples over values in
    [-v_max, v_max]; when a leader meets any agent it absorbs as much value
    as saturation allows and imposes its fresh opinion on both.
    """
    v, c = spec.v_max, spec.c
    values = range(-v, v + 1)
    states = [_threshold_state(l, n, o) for l in (0, 1) for n in values for o in (0, 1)]
    out = {_threshold_state(l, n, o): o for l in (0, 1) for n in values for o in (0, 1)}

    transitions = []
    for n in values:
        for n2 in values:
            f = _clamp(v, n + n2)
            g = (n + n2) - f
            b = int(f < c)
            post = [_threshold_state(1, f, b), _threshold_state(0, g, b)]
            for l in (0, 1):
                for o in (0, 1):
                    for o2 in (0, 1):
                        pre = [_threshold_state(1, n, o), _threshold_state(l, n2, o2)]
                        transitions.append(Transition.of(pre, post))

    input_map = {sym: _threshold_state(1, a, int(a < c))
                 for sym, a in zip(spec.symbols, spec.coeffs)}
    return normalize(Protocol(
        states=states, transitions=transitions, alphabet=spec.symbols,
        input_map=input_map, output_map=out,
        name=f"threshold(v_max={v},c={c})"))


def threshold_predicate(spec: ThresholdSpec) -> Predicate:
    return {"threshold": {"coeffs": dict(zip(spec.symbols, spec.coeffs)), "c": spec.c}}


def gen_remainder(spec: RemainderSpec) -> Protocol:
    """Residue-accumulating protocol for sum(a_i * x_i) = c (mod m).

    Numeric states hold residues; meetings merge residues into one agent and
    park the other on a boolean opinion state; opinion states are refreshed
    by any numeric agent.
    """
    m = spec.m
    c_res = spec.c % m
    residues = [str(n) for n in range(m)]
    states = residues + ["true", "false"]
    out = {q: int(q in (str(c_res), "true")) for q in states}

    transitions = []
    for n in range(m):
        for n2 in range(m):
            s = (n + n2) % m
            transitions.append(Transition.of(
                [str(n), str(n2)], [str(s), "true" if s == c_res else "false"]))
        for b in ("true", "false"):
            transitions.append(Transition.of(
                [str(n), b], [str(n), "true" if n == c_res else "false"]))

    input_map = {sym: str(a % m) for sym, a in zip(spec.symbols, spec.coeffs)}
    return normalize(Protocol(
        states=states, transitions=transitions, alphabet=spec.symbols,
        input_map=input_map, output_map=out,
        name=f"remainder(m={m},c={spec.c})"))


def remainder_predicate(spec: RemainderSpec) -> Predicate:
    return {"remainder": {"coeffs": dict(zip(spec.symbols, spec.coeffs)),
                          "c": spec.c, "m": spec.m}}


def gen_majority() -> Protocol:
    """The 4-state majority protocol: is #B at least #A?"""
    return normalize(Protocol(
        states=["A", "B", "a", "b"],
        transitions=[
            Transition.of(["A", "B"], ["a", "b"], "t_AB"),
            Transition.of(["A", "b"], ["A", "a"], "t_Ab"),
            Transition.of(["B", "a"], ["B", "b"], "t_Ba"),
            Transition.of(["b", "a"], ["b", "b"], "t_ba"),
        ],
        alphabet=["A", "B"],
        input_map={"A": "A", "B": "B"},
        output_map={"A": 0, "B": 1, "a": 0, "b": 1},
        name="majority"))


def majority_predicate() -> Predicate:
    return {"not": {"threshold": {"coeffs": {"B": 1, "A": -1}, "c": 0}}}


def gen_broadcast() -> Protocol:
    """Two states: one positive agent converts everyone it meets."""
    return normalize(Protocol(
        states=["T", "F"],
        transitions=[Transition.of(["T", "F"], ["T", "T"], "spread")],
        alphabet=["T", "F"],
        input_map={"T": "T", "F": "F"},
        output_map={"T": 1, "F": 0},
        name="broadcast"))


def broadcast_predicate() -> Predicate:
    # -#T < 0, i.e. at least one positive agent exists.
    return {"threshold": {"coeffs": {"T": -1, "F": 0}, "c": 0}}


def gen_flock_cms(c: int) -> Protocol:
    """Value-merging flock-of-birds protocol for x >= c.

    Agents carry integer loads starting at 1; meetings pool two loads into
    one agent, and any pooled load reaching c saturates both agents, after
    which saturated agents convert the unloaded.
    """
    if c < 1:
        raise ProtocolError(f"flock threshold must be at least 1, got {c}")
    states = [str(i) for i in range(c + 1)]
    transitions = []
    for i in range(1, c + 1):
        for j in range(i, c + 1):
            if i + j < c:
                transitions.append(Transition.of([str(i), str(j)], [str(i + j), "0"]))
            elif (i, j) != (c, c):
                transitions.append(Transition.of([str(i), str(j)], [str(c), str(c)]))
    transitions.append(Transition.of(["0", str(c)], [str(c), str(c)]))
    return normalize(Protocol(
        states=states, transitions=transitions, alphabet=["x"],
        input_map={"x": "1"},
        output_map={q: int(q == str(c)) for q in states},
        name=f"flock_cms(c={c})"))


def gen_flock_guidelines(c: int) -> Protocol:
    """Tower-building flock-of-birds protocol for x >= c.

    Two agents on the same level push one of them a level up; an agent on the
    top level converts everyone else.
    """
    if c < 1:
        raise ProtocolError(f"flock threshold must be at least 1, got {c}")
    states = [str(i) for i in range(c + 1)]
    transitions = []
    for i in range(1, c):
        transitions.append(Transition.of([str(i), str(i)], [str(i + 1), str(i)]))
    for j in range(c):
        transitions.append(Transition.of([str(c), str(j)], [str(c), str(c)]))
    return normalize(Protocol(
        states=states, transitions=transitions, alphabet=["x"],
        input_map={"x": "1"},
        output_map={q: int(q == str(c)) for q in states},
        name=f"flock_guidelines(c={c})"))


def flock_predicate(c: int) -> Predicate:
    return {"not": {"threshold": {"coeffs": {"x": 1}, "c": c}}}


def negate(protocol: Protocol) -> Protocol:
    """Same protocol computing the complement: every output bit flipped."""
    return normalize(Protocol(
        states=protocol.states,
        transitions=protocol.raw_transitions,
        alphabet=protocol.alphabet,
        input_map=protocol.input_map,
        output_map={q: 1 - v for q, v in protocol.output_map.items()},
        name=f"not({protocol.name})" if protocol.name else None))


def product_state(q1: str, q2: str) -> str:
    return f"({q1},{q2})"


def conjoin(p1: Protocol, p2: Protocol) -> Protocol:
    """Asynchronous product computing the conjunction of both predicates.

    States are pairs, inputs map componentwise, the output is the AND of the
    component outputs, and every transition of either factor is lifted over
    every pair of passenger states of the other factor. Lifted transitions
    that collapse to the same (pre, post) pair are merged; silent liftings
    stay implicit.
    """
    if p1.alphabet != p2.alphabet:
        raise AlphabetMismatch(
            f"alphabets differ: {p1.alphabet} vs {p2.alphabet}; extend the "
            "input domain with zero-coefficient symbols first")
    states = [product_state(q1, q2) for q1 in p1.states for q2 in p2.states]
    transitions = []
    for t in p1.transitions:
        (a, b), (a2, b2) = t.pre, t.post
        for r in p2.states:
            for s in p2.states:
                lifted = Transition.of(
                    [product_state(a, r), product_state(b, s)],
                    [product_state(a2, r), product_state(b2, s)])
                if not lifted.silent:
                    transitions.append(lifted)
    for t in p2.transitions:
        (a, b), (a2, b2) = t.pre, t.post
        for r in p1.states:
            for s in p1.states:
                lifted = Transition.of(
                    [product_state(r, a), product_state(s, b)],
                    [product_state(r, a2), product_state(s, b2)])
                if not lifted.silent:
                    transitions.append(lifted)
    return normalize(Protocol(
        states=states,
        transitions=transitions,
        alphabet=p1.alphabet,
        input_map={sym: product_state(p1.input_map[sym], p2.input_map[sym])
                   for sym in p1.alphabet},
        output_map={product_state(q1, q2): p1.output_map[q1] & p2.output_map[q2]
                    for q1 in p1.states for q2 in p2.states},
        name=f"and({p1.name},{p2.name})" if p1.name and p2.name else None))


def protocol_size(protocol: Protocol) -> tuple[int, int]:
    """(number of states, number of declared non-silent transitions)."""
    return (len(protocol.states), len(protocol.non_silent_transitions))


_GENERATORS = {
    "majority": lambda **kw: (gen_majority(), majority_predicate()),
    "broadcast": lambda **kw: (gen_broadcast(), broadcast_predicate()),
    "threshold": lambda v_max=3, c=1, **kw: (
        gen_threshold(ThresholdSpec.benchmark(v_max, c)),
        threshold_predicate(ThresholdSpec.benchmark(v_max, c))),
    "remainder": lambda m=10, c=1, **kw: (
        gen_remainder(RemainderSpec.benchmark(m, c)),
        remainder_predicate(RemainderSpec.benchmark(m, c))),
    "flock_cms": lambda c=20, **kw: (gen_flock_cms(c), flock_predicate(c)),
    "flock_guidelines": lambda c=50, **kw: (gen_flock_guidelines(c), flock_predicate(c)),
}

FAMILY_NAMES = tuple(sorted(_GENERATORS))


def generate(family: str, **params) -> tuple[Protocol, Predicate]:
    """Build a named family instance together with its intended predicate."""
    try:
        builder = _GENERATORS[family]
    except KeyError:
        raise ProtocolError(f"unknown family {family!r}; known: {', '.join(FAMILY_NAMES)}")
    return builder(**params)

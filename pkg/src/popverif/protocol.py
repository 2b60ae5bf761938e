"""Population protocol model: states, pairwise transitions, configurations.

A protocol is a tuple (states, transitions, alphabet, input map, output map).
Transitions consume a pair of agents and produce a pair; a transition whose
pre and post pairs coincide (as multisets) is silent. Unordered state pairs
with no declared transition are completed with implicit silent transitions,
so every configuration of two or more agents enables something.

`Configuration` and `InputAssignment` are `Multiset` aliases; all operations
here are pure functions over immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .errors import (
    DuplicateState,
    EmptyAlphabet,
    InputTooSmall,
    NonBinaryTransition,
    NotEnabled,
    ProtocolError,
    UnknownStateInTransition,
)
from .multiset import Multiset

Configuration = Multiset
InputAssignment = Multiset

Pair = tuple[str, str]


def _as_pair(states: Sequence[str], what: str) -> Pair:
    if len(states) != 2:
        raise NonBinaryTransition(f"{what} must name exactly 2 agents, got {list(states)!r}")
    a, b = states
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class Transition:
    """A pairwise interaction. Identity is the (pre, post) multiset pair.

    `pre` and `post` are stored as sorted pairs, so two declarations that
    differ only in agent order compare equal; the first declared name is kept
    for reporting.
    """

    pre: Pair
    post: Pair
    name: Optional[str] = field(default=None, compare=False)
    implicit: bool = field(default=False, compare=False)

    @staticmethod
    def of(pre: Sequence[str], post: Sequence[str], name: Optional[str] = None,
           implicit: bool = False) -> "Transition":
        return Transition(_as_pair(pre, "pre"), _as_pair(post, "post"), name, implicit)

    @property
    def silent(self) -> bool:
        return self.pre == self.post

    @property
    def pre_multiset(self) -> Multiset:
        return Multiset(self.pre)

    @property
    def post_multiset(self) -> Multiset:
        return Multiset(self.post)

    @property
    def canonical_name(self) -> str:
        return self.name or f"{self.pre[0]},{self.pre[1]}->{self.post[0]},{self.post[1]}"

    def delta(self) -> dict[str, int]:
        """Net effect post - pre as a sparse map (zero entries dropped)."""
        d: dict[str, int] = {}
        for q in self.post:
            d[q] = d.get(q, 0) + 1
        for q in self.pre:
            d[q] = d.get(q, 0) - 1
        return {q: v for q, v in d.items() if v}

    def __repr__(self) -> str:
        return f"({self.pre[0]},{self.pre[1]})->({self.post[0]},{self.post[1]})"


class Protocol:
    """Immutable protocol. Build with raw fields, then `normalize`.

    `transitions` holds the deduplicated declared transitions in a stable
    lexicographic order; `raw_transitions` preserves the declaration list
    verbatim for reporting; `implicit_silent` holds the completion added by
    `normalize` for pairs with no declared transition.
    """

    def __init__(
        self,
        states: Iterable[str],
        transitions: Iterable[Transition],
        alphabet: Iterable[str],
        input_map: Mapping[str, str],
        output_map: Mapping[str, int],
        *,
        implicit_silent: Iterable[Transition] = (),
        raw_transitions: Optional[Sequence[Transition]] = None,
        name: Optional[str] = None,
    ) -> None:
        self.states: tuple[str, ...] = tuple(sorted(dict.fromkeys(states)))
        trans_list = tuple(transitions)
        self.raw_transitions: tuple[Transition, ...] = (
            tuple(raw_transitions) if raw_transitions is not None else trans_list
        )
        seen: dict[tuple[Pair, Pair], Transition] = {}
        for t in trans_list:
            seen.setdefault((t.pre, t.post), t)
        self.transitions: tuple[Transition, ...] = tuple(
            sorted(seen.values(), key=lambda t: (t.pre, t.post))
        )
        self.alphabet: tuple[str, ...] = tuple(sorted(dict.fromkeys(alphabet)))
        self.input_map: dict[str, str] = dict(input_map)
        self.output_map: dict[str, int] = {q: int(v) for q, v in output_map.items()}
        self.implicit_silent: tuple[Transition, ...] = tuple(
            sorted(implicit_silent, key=lambda t: t.pre)
        )
        self.name = name
        self._by_pre: dict[Pair, tuple[Transition, ...]] = {}
        for t in self.transitions + self.implicit_silent:
            self._by_pre.setdefault(t.pre, ())
            self._by_pre[t.pre] += (t,)

    # -- derived views -------------------------------------------------------

    @property
    def non_silent_transitions(self) -> tuple[Transition, ...]:
        return tuple(t for t in self.transitions if not t.silent)

    @property
    def all_transitions(self) -> tuple[Transition, ...]:
        """Declared (deduplicated) plus implicit silent completion."""
        return self.transitions + self.implicit_silent

    def transitions_with_pre(self, pre: Pair) -> tuple[Transition, ...]:
        return self._by_pre.get(pre, ())

    def transition_by_name(self, name: str) -> Transition:
        for t in self.transitions:
            if t.canonical_name == name or t.name == name:
                return t
        raise ProtocolError(f"no transition named {name!r}")

    def output(self, q: str) -> int:
        return self.output_map[q]

    def initial_states(self) -> tuple[str, ...]:
        return tuple(sorted({self.input_map[s] for s in self.alphabet}))

    def __repr__(self) -> str:
        label = self.name or "protocol"
        return (f"<{label}: |Q|={len(self.states)} "
                f"|T|={len(self.non_silent_transitions)} non-silent>")


def normalize(raw: Protocol) -> Protocol:
    """Validate a protocol and complete it with implicit silent transitions.

    Unordered state pairs without a declared transition receive a silent
    (p,q) -> (p,q) transition, recorded separately so reported transition
    counts cover only declared, non-silent interactions.
    """
    states = raw.states
    if len(states) != len(set(states)):
        raise DuplicateState("duplicate state names")
    if not raw.alphabet:
        raise EmptyAlphabet("alphabet must be nonempty")
    state_set = set(states)
    for t in raw.raw_transitions:
        for q in t.pre + t.post:
            if q not in state_set:
                raise UnknownStateInTransition(
                    f"transition {t.canonical_name} uses undeclared state {q!r}")
    for sym in raw.alphabet:
        q = raw.input_map.get(sym)
        if q is None:
            raise ProtocolError(f"input map missing symbol {sym!r}")
        if q not in state_set:
            raise UnknownStateInTransition(f"input map sends {sym!r} to undeclared state {q!r}")
    for q in states:
        o = raw.output_map.get(q)
        if o is None:
            raise ProtocolError(f"output map missing state {q!r}")
        if o not in (0, 1):
            raise ProtocolError(f"output of {q!r} must be 0 or 1, got {o!r}")

    declared_pairs = {t.pre for t in raw.transitions}
    implicit = tuple(
        Transition(pre=(p, q), post=(p, q), implicit=True)
        for i, p in enumerate(states)
        for q in states[i:]
        if (p, q) not in declared_pairs
    )
    return Protocol(
        states=states,
        transitions=raw.transitions,
        alphabet=raw.alphabet,
        input_map=raw.input_map,
        output_map=raw.output_map,
        implicit_silent=implicit,
        raw_transitions=raw.raw_transitions,
        name=raw.name,
    )


def _require_population(config: Configuration) -> None:
    if config.total < 2:
        raise InputTooSmall(f"populations need at least 2 agents, got {config.total}")


def step(config: Configuration, t: Transition) -> Configuration:
    """Fire `t` at `config`: result is config - pre + post."""
    pre = t.pre_multiset
    if not config >= pre:
        missing = {q: pre[q] - config[q] for q in pre.support if config[q] < pre[q]}
        raise NotEnabled(f"{t.canonical_name} not enabled; missing agents {missing}")
    return (config - pre) + t.post_multiset


def enabled_transitions(protocol: Protocol, config: Configuration) -> set[Transition]:
    """All declared and implicit transitions whose pre-pair fits in `config`."""
    _require_population(config)
    out: set[Transition] = set()
    support = config.support
    for i, p in enumerate(support):
        if config[p] >= 2:
            out.update(protocol.transitions_with_pre((p, p)))
        for q in support[i + 1:]:
            pair = (p, q) if p <= q else (q, p)
            out.update(protocol.transitions_with_pre(pair))
    return out


def enabled_non_silent(protocol: Protocol, config: Configuration) -> list[Transition]:
    """Enabled declared non-silent transitions, in stable order."""
    _require_population(config)
    out: list[Transition] = []
    support = config.support
    pairs: list[Pair] = []
    for i, p in enumerate(support):
        if config[p] >= 2:
            pairs.append((p, p))
        for q in support[i + 1:]:
            pairs.append((p, q) if p <= q else (q, p))
    for pair in sorted(pairs):
        for t in protocol.transitions_with_pre(pair):
            if not t.silent:
                out.append(t)
    return out


def is_terminal(protocol: Protocol, config: Configuration) -> bool:
    """True iff every transition enabled at `config` is silent."""
    return not enabled_non_silent(protocol, config)


def consensus_output(protocol: Protocol, config: Configuration) -> Optional[int]:
    """The common output of all populated states, or None if they disagree."""
    _require_population(config)
    values = {protocol.output_map[q] for q in config.support}
    if len(values) == 1:
        return values.pop()
    return None


def initialize(protocol: Protocol, x: InputAssignment) -> Configuration:
    """Map an input multiset through the input function to a configuration."""
    if x.total < 2:
        raise InputTooSmall(f"inputs need at least 2 agents, got {x.total}")
    acc: dict[str, int] = {}
    for sym, n in x.items():
        if sym not in protocol.input_map:
            raise ProtocolError(f"unknown input symbol {sym!r}")
        q = protocol.input_map[sym]
        acc[q] = acc.get(q, 0) + n
    return Multiset(acc)

"""Ground-truth explicit-state engine for small inputs.

Builds per-input reachability graphs (nodes are configurations, edges are
non-silent steps), decomposes them into strongly connected components, and
classifies each input by its bottom components: under the fairness
assumption, every fair execution is eventually confined to one bottom
component and visits all of its configurations infinitely often, so an input
stabilizes to b exactly when every bottom component consists of consensus
configurations of that single value.

This module is the independent validator for verifier verdicts at desk
scale; it never feeds the constraint-based checkers.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Iterator, Optional

from .errors import CapExceeded, InputTooSmall
from .multiset import Multiset
from .protocol import Configuration, InputAssignment, Protocol, Transition, initialize

DEFAULT_CAP = 200_000


class Explorer:
    """Successor computation with a cache shared across roots."""

    def __init__(self, protocol: Protocol) -> None:
        self.protocol = protocol
        self._cache: dict[Multiset, tuple[tuple[Transition, Multiset], ...]] = {}

    def successors(self, config: Configuration) -> tuple[tuple[Transition, Multiset], ...]:
        cached = self._cache.get(config)
        if cached is not None:
            return cached
        out: list[tuple[Transition, Multiset]] = []
        support = config.support
        pairs: list[tuple[str, str]] = []
        for i, p in enumerate(support):
            if config[p] >= 2:
                pairs.append((p, p))
            for q in support[i + 1:]:
                pairs.append((p, q) if p <= q else (q, p))
        for pair in sorted(pairs):
            for t in self.protocol.transitions_with_pre(pair):
                if t.silent:
                    continue
                nxt = config.saturating_sub(t.pre_multiset) + t.post_multiset
                out.append((t, nxt))
        result = tuple(out)
        self._cache[config] = result
        return result


@dataclass
class ReachGraph:
    """Reachable configurations from a root, closed under non-silent steps."""

    root: Configuration
    edges: dict[Configuration, tuple[tuple[Transition, Configuration], ...]]

    @property
    def nodes(self) -> set[Configuration]:
        return set(self.edges)

    def bottom_sccs(self) -> list[frozenset[Configuration]]:
        """Strongly connected components without outgoing edges."""
        sccs = _tarjan(self.edges)
        comp_of: dict[Configuration, int] = {}
        for idx, comp in enumerate(sccs):
            for node in comp:
                comp_of[node] = idx
        bottoms = []
        for idx, comp in enumerate(sccs):
            if all(comp_of[dst] == idx for node in comp for _, dst in self.edges[node]):
                bottoms.append(comp)
        return bottoms


def _tarjan(edges: dict[Configuration, tuple[tuple[Transition, Configuration], ...]]
            ) -> list[frozenset[Configuration]]:
    index: dict[Configuration, int] = {}
    low: dict[Configuration, int] = {}
    on_stack: set[Configuration] = set()
    stack: list[Configuration] = []
    sccs: list[frozenset[Configuration]] = []
    counter = 0

    for start in edges:
        if start in index:
            continue
        work: list[tuple[Configuration, int]] = [(start, 0)]
        while work:
            node, child = work[-1]
            if child == 0:
                index[node] = low[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            advanced = False
            succ = edges[node]
            while child < len(succ):
                _, dst = succ[child]
                child += 1
                if dst not in index:
                    work[-1] = (node, child)
                    work.append((dst, 0))
                    advanced = True
                    break
                if dst in on_stack:
                    low[node] = min(low[node], index[dst])
            if advanced:
                continue
            work.pop()
            if low[node] == index[node]:
                comp = []
                while True:
                    other = stack.pop()
                    on_stack.discard(other)
                    comp.append(other)
                    if other == node:
                        break
                sccs.append(frozenset(comp))
            if work:
                parent, _ = work[-1]
                low[parent] = min(low[parent], low[node])
    return sccs


def explore(protocol: Protocol, root: Configuration, cap: int = DEFAULT_CAP,
            explorer: Optional[Explorer] = None) -> ReachGraph:
    """BFS closure of `root` under non-silent steps; loud failure at the cap."""
    if root.total < 2:
        raise InputTooSmall(f"populations need at least 2 agents, got {root.total}")
    exp = explorer or Explorer(protocol)
    edges: dict[Configuration, tuple[tuple[Transition, Configuration], ...]] = {}
    frontier = [root]
    edges[root] = exp.successors(root)
    while frontier:
        nxt: list[Configuration] = []
        for node in frontier:
            for _, dst in edges[node]:
                if dst not in edges:
                    if len(edges) >= cap:
                        raise CapExceeded(len(edges) + 1, cap)
                    edges[dst] = exp.successors(dst)
                    nxt.append(dst)
        frontier = nxt
    return ReachGraph(root, edges)


@dataclass(frozen=True)
class InputClassification:
    kind: str  # "stabilizes" | "non_consensus" | "split"
    value: Optional[int]  # the stabilized output when kind == "stabilizes"
    silent: bool  # every bottom component is a single terminal configuration

    @property
    def stabilizes(self) -> bool:
        return self.kind == "stabilizes"


def _scc_consensus(protocol: Protocol, comp: frozenset[Configuration]) -> Optional[int]:
    """The single output shared by every configuration of the component, if any."""
    values: set[int] = set()
    for config in comp:
        outs = {protocol.output_map[q] for q in config.support}
        if len(outs) != 1:
            return None
        values.add(outs.pop())
        if len(values) > 1:
            return None
    return values.pop()


def classify_input(protocol: Protocol, x: InputAssignment, cap: int = DEFAULT_CAP,
                   explorer: Optional[Explorer] = None) -> InputClassification:
    """Fair-execution verdict for one input, from its bottom components."""
    if x.total < 2:
        raise InputTooSmall(f"inputs need at least 2 agents, got {x.total}")
    graph = explore(protocol, initialize(protocol, x), cap, explorer)
    bottoms = graph.bottom_sccs()
    silent = all(len(comp) == 1 for comp in bottoms)
    values: set[Optional[int]] = set()
    for comp in bottoms:
        values.add(_scc_consensus(protocol, comp))
    if None in values:
        return InputClassification("non_consensus", None, silent)
    if len(values) > 1:
        return InputClassification("split", None, silent)
    return InputClassification("stabilizes", values.pop(), silent)


def inputs_up_to(alphabet: tuple[str, ...], max_agents: int) -> Iterator[InputAssignment]:
    """All input multisets with between 2 and max_agents agents."""
    for size in range(2, max_agents + 1):
        for combo in combinations_with_replacement(alphabet, size):
            yield Multiset(combo)


@dataclass
class OracleReport:
    ok: bool
    table: dict[InputAssignment, int]
    silent_all: bool
    witness: Optional[InputAssignment] = None
    witness_kind: Optional[str] = None


def oracle_well_specified(protocol: Protocol, max_agents: int = 6,
                          cap: int = DEFAULT_CAP) -> OracleReport:
    """Exhaustively classify every input of 2..max_agents agents.

    ok means every input stabilizes; the table maps inputs to their
    stabilized outputs. The first non-stabilizing input becomes the witness.
    """
    if max_agents < 2:
        raise InputTooSmall("max_agents must be at least 2")
    explorer = Explorer(protocol)
    table: dict[InputAssignment, int] = {}
    silent_all = True
    for x in inputs_up_to(protocol.alphabet, max_agents):
        verdict = classify_input(protocol, x, cap, explorer)
        silent_all = silent_all and verdict.silent
        if not verdict.stabilizes:
            return OracleReport(False, table, silent_all, x, verdict.kind)
        table[x] = verdict.value  # type: ignore[assignment]
    return OracleReport(True, table, silent_all)

"""Layered-termination: constraint search plus independent certificate check.

The search asks, for a growing number of layers k, whether transitions can be
assigned to layers 1..k such that (i) each layer admits a per-state ranking
vector strictly decreased by every non-silent transition of the layer,
(ii) layer indices stay in range, and (iii) a transition can only wake a
lower-layer transition if an equal-layer transition was already awake —
encoded over naturals and handed to the solver. The first satisfiable k
yields an ordered partition and its ranking vectors.

`verify_partition` re-checks any candidate partition with the two polynomial
tests (no constraint solving for the ranking side beyond a rational
feasibility query), so every emitted certificate is replayable.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .multiset import Multiset
from .protocol import Protocol, Transition
from .smt.ast import (
    NameMap,
    atom_ge,
    atom_gt,
    atom_le,
    atom_lt,
    atom_eq,
    conj,
    disj,
    implies,
    lin,
)
from .smt.driver import SolverConfig, SolverSession, SolverStats
from .smt.emit import VarDecl
from .structural import (
    DeadnessViolation,
    find_u_dead_violation,
    has_nonsilent_invariant_cycle,
)

OrderedPartition = tuple[frozenset[Transition], ...]
Ranking = dict[str, int]


@dataclass(frozen=True)
class LayeredResult:
    kind: str  # "found" | "none" | "unknown"
    partition: Optional[OrderedPartition] = None
    rankings: Optional[tuple[Ranking, ...]] = None
    k: Optional[int] = None
    stats: Optional[SolverStats] = field(default=None, compare=False)
    elapsed: float = field(default=0.0, compare=False)

    @property
    def found(self) -> bool:
        return self.kind == "found"


@dataclass(frozen=True)
class PartitionCheck:
    ok: bool
    layer: Optional[int] = None  # 1-based
    condition: Optional[str] = None  # "a" | "b"
    cycle: Optional[dict] = None
    deadness: Optional[DeadnessViolation] = None

    def __bool__(self) -> bool:
        return self.ok


def wakeable_sets(protocol: Protocol) -> dict[tuple[Transition, Transition], list[Transition]]:
    """For each (t, u): the non-silent u' enabled at pre(t) + (pre(u) - post(t)).

    This is the precomputed disjunction domain of constraint (iii): after
    firing t in a configuration that barely enables t and u's missing agents,
    exactly these u' could already have been awake.
    """
    live = protocol.non_silent_transitions
    by_pre: dict[Multiset, list[Transition]] = {}
    for t in live:
        by_pre.setdefault(t.pre_multiset, []).append(t)
    out: dict[tuple[Transition, Transition], list[Transition]] = {}
    for t in live:
        pre_t, post_t = t.pre_multiset, t.post_multiset
        for u in live:
            bound = pre_t + u.pre_multiset.saturating_sub(post_t)
            support = bound.support
            candidates: list[Transition] = []
            for i, p in enumerate(support):
                if bound[p] >= 2:
                    candidates.extend(by_pre.get(Multiset((p, p)), ()))
                for q in support[i + 1:]:
                    candidates.extend(by_pre.get(Multiset((p, q)), ()))
            out[(t, u)] = sorted(candidates, key=lambda v: (v.pre, v.post))
    return out


def _layer_system(protocol: Protocol, k: int,
                  wake: dict[tuple[Transition, Transition], list[Transition]],
                  names: NameMap) -> tuple[list[VarDecl], list, dict, dict]:
    """Constraints for exactly k layers; returns decls, formulas, and var maps."""
    live = protocol.non_silent_transitions
    b_var = {t: names.assign(("b", t), f"b_{t.canonical_name}") for t in live}
    y_var = {(i, q): names.assign(("y", i, q), f"y{i}_{q}")
             for i in range(1, k + 1) for q in protocol.states}

    decls = [VarDecl(b_var[t], "Int") for t in live]
    decls += [VarDecl(y_var[key], "Int", nonneg=True) for key in y_var]

    formulas = []
    for t in live:
        formulas.append(conj(atom_ge(lin({b_var[t]: 1}, -1)),
                             atom_le(lin({b_var[t]: 1}, -k))))
    for i in range(1, k + 1):
        for t in live:
            drop = {y_var[(i, q)]: d for q, d in sorted(t.delta().items())}
            formulas.append(implies(
                atom_eq(lin({b_var[t]: 1}, -i)),
                atom_lt(lin(drop))))
    for t in live:
        for u in live:
            if t == u:
                continue
            wakers = wake[(t, u)]
            if u in wakers:
                continue  # b(u) = b(u) makes the disjunction a tautology
            guard = atom_lt(lin({b_var[u]: 1, b_var[t]: -1}))
            if not wakers:
                formulas.append(atom_ge(lin({b_var[u]: 1, b_var[t]: -1})))
            else:
                formulas.append(implies(
                    guard,
                    disj(*(atom_eq(lin({b_var[u]: 1, b_var[w]: -1})) for w in wakers))))
    return decls, formulas, b_var, y_var


def _extract(protocol: Protocol, k: int, model: dict, b_var: dict, y_var: dict
             ) -> tuple[OrderedPartition, tuple[Ranking, ...]]:
    """Partition and rankings from a model; squeezes out empty layers and puts
    declared silent transitions into the first layer."""
    live = protocol.non_silent_transitions
    layers: dict[int, set[Transition]] = {}
    for t in live:
        layers.setdefault(int(model[b_var[t]]), set()).add(t)
    order = sorted(layers)
    partition = [set(layers[i]) for i in order]
    rankings = [{q: int(model[y_var[(i, q)]]) for q in protocol.states} for i in order]
    silent_declared = [t for t in protocol.transitions if t.silent]
    if silent_declared:
        if not partition:
            partition = [set()]
            rankings = [{q: 0 for q in protocol.states}]
        partition[0].update(silent_declared)
    return tuple(frozenset(layer) for layer in partition), tuple(rankings)


def find_layered_termination(
    protocol: Protocol,
    k_max: Optional[int] = None,
    solver: Optional[SolverConfig] = None,
    timeout: Optional[float] = None,
) -> LayeredResult:
    """Search k = 1, 2, ... for an ordered partition witnessing termination.

    Layer counts beyond the number of non-silent transitions never help
    (declared silent transitions are pinned to the first layer), so the
    search caps there.
    """
    started = time.monotonic()
    live = protocol.non_silent_transitions
    if not live:
        declared = frozenset(protocol.transitions)
        partition = (declared,) if declared else ()
        rankings = ({q: 0 for q in protocol.states},) if declared else ()
        return LayeredResult("found", partition, rankings, k=min(1, len(partition)),
                             elapsed=time.monotonic() - started)
    cap = len(live) if k_max is None else max(1, min(k_max, len(live)))
    wake = wakeable_sets(protocol)
    cfg = solver or SolverConfig.resolve()
    deadline = None if timeout is None else started + timeout
    with SolverSession(cfg, logic="QF_LIA", name="layered") as session:
        for k in range(1, cap + 1):
            names = NameMap()
            decls, formulas, b_var, y_var = _layer_system(protocol, k, wake, names)
            session.push()
            session.declare_all(decls)
            for f in formulas:
                session.add(f)
            remaining = None if deadline is None else deadline - time.monotonic()
            if remaining is not None and remaining <= 0:
                return LayeredResult("unknown", k=k, stats=session.stats,
                                     elapsed=time.monotonic() - started)
            answer = session.check_sat(remaining)
            if answer == "sat":
                model = session.get_model()
                partition, rankings = _extract(protocol, k, model, b_var, y_var)
                return LayeredResult("found", partition, rankings, k=k,
                                     stats=session.stats,
                                     elapsed=time.monotonic() - started)
            if answer == "unknown":
                return LayeredResult("unknown", k=k, stats=session.stats,
                                     elapsed=time.monotonic() - started)
            session.pop()
        return LayeredResult("none", stats=session.stats,
                             elapsed=time.monotonic() - started)


def verify_partition(protocol: Protocol, partition: Sequence[frozenset[Transition]],
                     solver: Optional[SolverConfig] = None) -> PartitionCheck:
    """Independent check of an ordered partition against both conditions.

    Layer i passes (a) when its non-silent transitions admit no nonnegative
    nonzero zero-effect combination, and (b) when firing its transitions
    cannot wake any non-silent transition of the layers before it.
    """
    declared = set(protocol.transitions)
    seen: set[Transition] = set()
    for layer in partition:
        if not layer:
            raise ValueError("partition layers must be nonempty")
        if seen & layer:
            raise ValueError("partition layers must be disjoint")
        seen |= layer
    if seen != declared:
        missing = declared - seen
        extra = seen - declared
        raise ValueError(f"partition must cover the declared transitions exactly "
                         f"(missing {len(missing)}, extra {len(extra)})")
    lower: set[Transition] = set()
    for idx, layer in enumerate(partition, start=1):
        cycle = has_nonsilent_invariant_cycle(
            [t for t in layer if not t.silent], solver=solver)
        if cycle is not None:
            return PartitionCheck(False, idx, "a",
                                  cycle={t.canonical_name: v for t, v in cycle.items()})
        violation = find_u_dead_violation(layer, lower)
        if violation is not None:
            return PartitionCheck(False, idx, "b", deadness=violation)
        lower |= layer
    return PartitionCheck(True)

"""Event-structure oracle for the compiled semantics.

This module recomputes, from first principles, what the compiler and
matrix backend claim: the prime event structure of a marked net, its
branching cells (initial stopping prefixes of futures), the
recursively-stopped configurations built by completing one branching
cell at a time, the configurations denoted by a term, and the exact
outcome distribution obtained by playing the term operationally.  The
correspondence and equivalence checks diff the two routes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Mapping

from .cells import at_marking
from .compiler import compile_net
from .errors import CellnetError, DeltaError, NetError
from .kleisli import DeltaTable, Dist
from .nets import MarkedNet, PlaceId, TransitionId
from .terms import (
    Constant,
    Dead,
    Identity,
    Par,
    Seq,
    Sum,
    Term,
    render_place_set,
    subsets_lex,
    typecheck,
)

Configuration = frozenset[TransitionId]


@dataclass(frozen=True)
class PES:
    """A prime event structure: events, a causality partial order
    (stored as its reflexive pair set), and a symmetric irreflexive
    conflict relation inherited along causality."""

    events: frozenset[TransitionId]
    leq: frozenset[tuple[TransitionId, TransitionId]]
    conflict: frozenset[tuple[TransitionId, TransitionId]]

    def __post_init__(self) -> None:
        for e, f in self.conflict:
            if e == f:
                raise NetError(f"conflict must be irreflexive, got {e} # {e}")
            if (f, e) not in self.conflict:
                raise NetError(f"conflict must be symmetric, missing {f} # {e}")
        for e1, e2 in self.conflict:
            for e2b, e3 in self.leq:
                if e2b == e2 and (e1, e3) not in self.conflict:
                    raise NetError(
                        f"conflict not inherited: {e1} # {e2} ≼ {e3} but not {e1} # {e3}"
                    )

    def down(self, e: TransitionId) -> frozenset[TransitionId]:
        return frozenset(x for x, y in self.leq if y == e)

    def in_conflict(self, e: TransitionId, f: TransitionId) -> bool:
        return (e, f) in self.conflict

    def immediate_conflicts(self, e: TransitionId) -> frozenset[TransitionId]:
        """Events f with e #0 f: in conflict with e, but with every other
        pair of their causes compatible."""
        out = set()
        de = self.down(e)
        for f in self.events:
            if not self.in_conflict(e, f):
                continue
            pairs = {
                (x, y) for x in de for y in self.down(f) if self.in_conflict(x, y)
            }
            if pairs == {(e, f)}:
                out.add(f)
        return frozenset(out)

    def is_configuration(self, v: Iterable[TransitionId]) -> bool:
        v = frozenset(v)
        if not v <= self.events:
            return False
        for e in v:
            if not self.down(e) <= v:
                return False
        return not any(self.in_conflict(e, f) for e in v for f in v)


def pes_of_net(marked: MarkedNet) -> PES:
    """The PES of a marked net: events are the transitions that can ever
    fire (unmarked inputs are first removed together with everything
    depending on them), causality is the flow order, and conflict is the
    shared-precondition relation inherited along causality."""
    if marked.inputs:
        marked = at_marking(marked, frozenset()).marked
    net = marked.net
    events = net.transitions
    leq = frozenset(
        (t, u) for t in events for u in events if u in net._descendants[t]
    )
    immediate = [
        (t, u)
        for t in events
        for u in events
        if t != u and net.pre(t) & net.pre(u)
    ]
    conflict = set()
    for t1, t2 in immediate:
        above1 = [x for x in events if x in net._descendants[t1]]
        above2 = [y for y in events if y in net._descendants[t2]]
        for x in above1:
            for y in above2:
                if x != y:
                    conflict.add((x, y))
                    conflict.add((y, x))
    return PES(events, leq, frozenset(conflict))


def future(pes: PES, v: Iterable[TransitionId]) -> PES:
    """The events executable after configuration v: outside v and
    compatible with all of it."""
    v = frozenset(v)
    if not pes.is_configuration(v):
        raise NetError(f"{sorted(v)} is not a configuration")
    remaining = frozenset(
        e for e in pes.events - v if not any(pes.in_conflict(e, f) for f in v)
    )
    return PES(
        remaining,
        frozenset((a, b) for a, b in pes.leq if a in remaining and b in remaining),
        frozenset((a, b) for a, b in pes.conflict if a in remaining and b in remaining),
    )


def initial_stopping_prefixes(pes: PES) -> frozenset[frozenset[TransitionId]]:
    """Minimal non-empty prefixes closed under immediate conflict.

    Every such prefix is the closure of a single event under causes and
    immediate conflicts, so it suffices to close each event and keep the
    minimal results.
    """
    closures: set[frozenset[TransitionId]] = set()
    for seed in pes.events:
        block = {seed}
        changed = True
        while changed:
            changed = False
            for e in list(block):
                extra = (pes.down(e) | pes.immediate_conflicts(e)) - block
                if extra:
                    block |= extra
                    changed = True
        closures.add(frozenset(block))
    return frozenset(
        b for b in closures if not any(other < b for other in closures)
    )


def branching_cells(pes: PES, v: Iterable[TransitionId]) -> frozenset[frozenset[TransitionId]]:
    """The branching cells enabled after v: initial stopping prefixes of
    the future of v."""
    return initial_stopping_prefixes(future(pes, v))


def configurations_within(pes: PES, block: frozenset[TransitionId]) -> frozenset[Configuration]:
    """All configurations contained in a downward-closed block."""
    ordered = sorted(block)
    found: set[Configuration] = set()

    def grow(current: frozenset[TransitionId]) -> None:
        if current in found:
            return
        found.add(current)
        for e in ordered:
            if e in current:
                continue
            if not pes.down(e) - {e} <= current:
                continue
            if any(pes.in_conflict(e, f) for f in current):
                continue
            grow(current | {e})

    grow(frozenset())
    return frozenset(found)


def maximal_configurations_within(pes: PES, block: frozenset[TransitionId]) -> frozenset[Configuration]:
    configs = configurations_within(pes, block)
    return frozenset(c for c in configs if not any(c < d for d in configs))


@dataclass(frozen=True)
class RStopped:
    """One recursively-stopped configuration with a witnessing chain of
    branching-cell completions; ``maximal`` marks an empty future."""

    configuration: Configuration
    chain: tuple[Configuration, ...]
    maximal: bool


def r_stopped_configs(pes: PES) -> dict[Configuration, RStopped]:
    """All recursively-stopped configurations, found by repeatedly
    completing one enabled branching cell.  Futures are memoised per
    configuration, which keeps the search polynomial in the number of
    r-stopped configurations at desk scale."""
    futures: dict[Configuration, PES] = {}

    def future_of(v: Configuration) -> PES:
        if v not in futures:
            futures[v] = future(pes, v)
        return futures[v]

    info: dict[Configuration, RStopped] = {}
    empty = frozenset()
    info[empty] = RStopped(empty, (), not future_of(empty).events)
    queue = [empty]
    while queue:
        v = queue.pop()
        fut = future_of(v)
        for cell in sorted(initial_stopping_prefixes(fut), key=sorted):
            for w in sorted(maximal_configurations_within(fut, cell), key=sorted):
                nxt = v | w
                if nxt in info:
                    continue
                nxt_fut = future_of(nxt)
                info[nxt] = RStopped(nxt, info[v].chain + (w,), not nxt_fut.events)
                queue.append(nxt)
    return info


def maximal_r_stopped(pes: PES) -> frozenset[Configuration]:
    return frozenset(v for v, r in r_stopped_configs(pes).items() if r.maximal)


# --------------------------------------------------------------------- #
# Configurations of a term
# --------------------------------------------------------------------- #

def _split_input(m: frozenset[str], ty_inputs: frozenset[str], where: str) -> frozenset[str]:
    stray = m - ty_inputs
    if stray:
        raise NetError(f"{where}: marking mentions non-input places {sorted(stray)}")
    return m


def conf_of_term(term: Term, m: Iterable[PlaceId]) -> frozenset[Configuration]:
    """The configurations a term admits when the input places ``m``
    receive tokens: constants contribute whole transactions, sums select
    the branch named by the arriving subset, sequential composition
    feeds each stage the final marking of the previous one."""
    m = frozenset(m)
    ty = typecheck(term)
    _split_input(m, ty.inputs, "conf_of_term")
    return frozenset(v for v, _fin in _runs(term, m))


def _runs(term: Term, m: frozenset[str]) -> frozenset[tuple[Configuration, frozenset[str]]]:
    """(configuration, final marking) pairs of a term under input m; the
    final marking mirrors the matrix semantics (identities pass their
    tokens through, constants emit exactly a transaction's final
    places)."""
    if isinstance(term, Identity):
        return frozenset({(frozenset(), m)})
    if isinstance(term, Dead):
        return frozenset({(frozenset(), frozenset())})
    if isinstance(term, Constant):
        return frozenset(
            (proc.transitions, proc.final_places) for proc in term.key.transactions
        )
    if isinstance(term, Par):
        t1 = typecheck(term.left)
        t2 = typecheck(term.right)
        left = _runs(term.left, m & t1.inputs)
        right = _runs(term.right, m & t2.inputs)
        return frozenset(
            (v1 | v2, f1 | f2) for v1, f1 in left for v2, f2 in right
        )
    if isinstance(term, Seq):
        t2 = typecheck(term.second)
        out: set[tuple[Configuration, frozenset[str]]] = set()
        for v1, f1 in _runs(term.first, m):
            for v2, f2 in _runs(term.second, f1 & t2.inputs):
                out.add((v1 | v2, f2))
        return frozenset(out)
    if isinstance(term, Sum):
        return _runs(term.branch(m), frozenset())
    raise NetError(f"not a term: {term!r}")


# --------------------------------------------------------------------- #
# Correspondence check
# --------------------------------------------------------------------- #

@dataclass(frozen=True)
class CorrespondenceCase:
    arriving: frozenset[PlaceId]
    from_event_structure: frozenset[Configuration]
    from_term: frozenset[Configuration]

    @property
    def ok(self) -> bool:
        return self.from_event_structure == self.from_term

    def __str__(self) -> str:
        label = render_place_set(self.arriving)
        if self.ok:
            count = len(self.from_term)
            return f"inputs {label}: OK ({count} maximal configuration(s))"
        only_ab = sorted(render_place_set(v) for v in self.from_event_structure - self.from_term)
        only_term = sorted(render_place_set(v) for v in self.from_term - self.from_event_structure)
        return (
            f"inputs {label}: MISMATCH "
            f"(only event structure: {only_ab}; only term: {only_term})"
        )


@dataclass(frozen=True)
class CorrespondenceReport:
    cases: tuple[CorrespondenceCase, ...]

    @property
    def ok(self) -> bool:
        return all(case.ok for case in self.cases)

    def __str__(self) -> str:
        return "\n".join(str(case) for case in self.cases)


def check_correspondence(marked: MarkedNet) -> CorrespondenceReport:
    """For every subset j of the unmarked inputs, compare the maximal
    recursively-stopped configurations of the marked net extended with j
    against the configurations of the compiled term under j.

    Tokens arriving on isolated input places enable no events, so the
    event-structure side drops them (a marking may not mention them).
    """
    from .nets import isolated_places

    term = compile_net(marked)
    lonely = isolated_places(marked.net)
    cases = []
    for arriving in subsets_lex(marked.inputs):
        extended = MarkedNet(marked.net, (marked.marking | arriving) - lonely)
        ab = maximal_r_stopped(pes_of_net(extended))
        tv = conf_of_term(term, arriving)
        cases.append(CorrespondenceCase(arriving, ab, tv))
    return CorrespondenceReport(tuple(cases))


# --------------------------------------------------------------------- #
# Exact outcome enumeration
# --------------------------------------------------------------------- #

@dataclass(frozen=True)
class OutcomeDistribution:
    """Exact joint result of playing a compiled term: probability per
    (maximal configuration, final marking) pair, with both marginals."""

    joint: Dist
    markings: Dist
    configurations: Dist

    def place_marginal(self, place: PlaceId) -> float:
        return float(
            sum(p for marking, p in self.markings.items() if place in marking)
        )


def enumerate_outcome_distribution(
    marked: MarkedNet,
    delta: DeltaTable,
    inputs: Iterable[PlaceId] | None = None,
) -> OutcomeDistribution:
    """Evaluate the compiled term operationally, with exact arithmetic
    over δ: constants expand to their transactions, sums branch on the
    tokens that actually arrive, parallel parts multiply, sequential
    parts feed final markings forward.  Defaults to all inputs marked."""
    term = compile_net(marked)
    ty = typecheck(term)
    arriving = ty.inputs if inputs is None else frozenset(inputs)
    _split_input(arriving, ty.inputs, "enumerate_outcome_distribution")
    weights = _weighted_runs(term, arriving, delta)
    joint = Dist(weights)
    markings: dict[frozenset[str], float] = {}
    configs: dict[Configuration, float] = {}
    for (config, marking), p in weights.items():
        markings[marking] = markings.get(marking, 0.0) + p
        configs[config] = configs.get(config, 0.0) + p
    return OutcomeDistribution(joint, Dist(markings), Dist(configs))


def _weighted_runs(
    term: Term,
    m: frozenset[str],
    delta: DeltaTable,
) -> dict[tuple[Configuration, frozenset[str]], float]:
    if isinstance(term, Identity):
        return {(frozenset(), m): 1.0}
    if isinstance(term, Dead):
        return {(frozenset(), frozenset()): 1.0}
    if isinstance(term, Constant):
        dist = delta.distribution_for(term.key)
        out: dict[tuple[Configuration, frozenset[str]], float] = {}
        # sorted so that float accumulation is reproducible across runs
        for proc in sorted(term.key.transactions, key=lambda p: p.sort_key()):
            p = dist.prob(proc.transitions)
            if p > 0:
                key = (proc.transitions, proc.final_places)
                out[key] = out.get(key, 0.0) + p
        return out
    if isinstance(term, Par):
        t1 = typecheck(term.left)
        t2 = typecheck(term.right)
        left = _weighted_runs(term.left, m & t1.inputs, delta)
        right = _weighted_runs(term.right, m & t2.inputs, delta)
        out = {}
        for (v1, f1), p1 in left.items():
            for (v2, f2), p2 in right.items():
                key = (v1 | v2, f1 | f2)
                out[key] = out.get(key, 0.0) + p1 * p2
        return out
    if isinstance(term, Seq):
        t2 = typecheck(term.second)
        out = {}
        for (v1, f1), p1 in _weighted_runs(term.first, m, delta).items():
            for (v2, f2), p2 in _weighted_runs(term.second, f1 & t2.inputs, delta).items():
                key = (v1 | v2, f2)
                out[key] = out.get(key, 0.0) + p1 * p2
        return out
    if isinstance(term, Sum):
        return _weighted_runs(term.branch(m), frozenset(), delta)
    raise NetError(f"not a term: {term!r}")


@dataclass(frozen=True)
class SampleSummary:
    """Monte-Carlo estimate of the outcome distribution for nets too
    large to enumerate exactly."""

    samples: int
    seed: int
    marking_counts: Mapping[frozenset[str], int]

    def place_marginal(self, place: PlaceId) -> float:
        hits = sum(c for marking, c in self.marking_counts.items() if place in marking)
        return hits / self.samples

    def standard_error(self, place: PlaceId) -> float:
        p = self.place_marginal(place)
        return (p * (1.0 - p) / self.samples) ** 0.5


def sample_outcome_distribution(
    marked: MarkedNet,
    delta: DeltaTable,
    samples: int,
    seed: int = 0,
    inputs: Iterable[PlaceId] | None = None,
) -> SampleSummary:
    """Seeded sampling variant of :func:`enumerate_outcome_distribution`."""
    if samples <= 0:
        raise CellnetError("sample count must be positive")
    term = compile_net(marked)
    ty = typecheck(term)
    arriving = ty.inputs if inputs is None else frozenset(inputs)
    _split_input(arriving, ty.inputs, "sample_outcome_distribution")
    rng = random.Random(seed)
    counts: dict[frozenset[str], int] = {}

    def play(t: Term, m: frozenset[str]) -> frozenset[str]:
        if isinstance(t, Identity):
            return m
        if isinstance(t, Dead):
            return frozenset()
        if isinstance(t, Constant):
            dist = delta.distribution_for(t.key)
            outcomes = sorted(dist.items(), key=lambda kv: sorted(kv[0]))
            pick = rng.random()
            acc = 0.0
            chosen = outcomes[-1][0]
            for outcome, p in outcomes:
                acc += p
                if pick < acc:
                    chosen = outcome
                    break
            for proc in t.key.transactions:
                if proc.transitions == chosen:
                    return proc.final_places
            raise DeltaError(f"sampled unknown transaction {sorted(chosen)}")
        if isinstance(t, Par):
            t1 = typecheck(t.left)
            t2 = typecheck(t.right)
            return play(t.left, m & t1.inputs) | play(t.right, m & t2.inputs)
        if isinstance(t, Seq):
            t2 = typecheck(t.second)
            middle = play(t.first, m)
            return play(t.second, middle & t2.inputs)
        if isinstance(t, Sum):
            return play(t.branch(m), frozenset())
        raise NetError(f"not a term: {t!r}")

    for _ in range(samples):
        outcome = play(term, arriving)
        counts[outcome] = counts.get(outcome, 0) + 1
    return SampleSummary(samples, seed, counts)

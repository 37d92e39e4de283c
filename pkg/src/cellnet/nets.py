"""Finite occurrence Petri nets: structural validation, causality and
conflict relations, token-game firing, and maximal-process enumeration.

Places and transitions are opaque strings living in disjoint namespaces.
All values are immutable after construction and every operation is a pure
function of its inputs, so nets can be shared freely across threads.
Set-valued results are deterministic: whenever an order is needed it is
the lexicographic order on identifiers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator

from .errors import NetError, OccurrenceError

PlaceId = str
TransitionId = str
NodeId = str


def _frozen(items: Iterable[str]) -> frozenset[str]:
    return frozenset(items)


@dataclass(frozen=True)
class Net:
    """A Petri net (P, T, F) with F ⊆ (P×T) ∪ (T×P).

    Construction enforces basic well-formedness: non-empty identifiers,
    disjoint place/transition namespaces, flow endpoints that exist and
    alternate place/transition, and a non-empty pre-set for every
    transition.  The occurrence-net conditions (acyclicity, no backward
    conflicts, no self-conflicts) are checked separately by
    :func:`validate_occurrence` so that violations can be reported all
    at once.
    """

    places: frozenset[PlaceId]
    transitions: frozenset[TransitionId]
    flow: frozenset[tuple[NodeId, NodeId]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "places", _frozen(self.places))
        object.__setattr__(self, "transitions", _frozen(self.transitions))
        object.__setattr__(self, "flow", frozenset(tuple(arc) for arc in self.flow))
        for x in self.places | self.transitions:
            if not isinstance(x, str) or not x:
                raise NetError(f"identifiers must be non-empty strings, got {x!r}")
        shared = self.places & self.transitions
        if shared:
            raise NetError(f"identifiers used both as place and transition: {sorted(shared)}")
        for src, dst in self.flow:
            if src in self.places and dst in self.transitions:
                continue
            if src in self.transitions and dst in self.places:
                continue
            raise NetError(f"flow arc ({src!r}, {dst!r}) does not connect a known place and transition")
        for t in self.transitions:
            if not self.pre(t):
                raise NetError(f"transition {t!r} has an empty pre-set")

    @cached_property
    def _pre(self) -> dict[NodeId, frozenset[NodeId]]:
        table: dict[NodeId, set[NodeId]] = {x: set() for x in self.places | self.transitions}
        for src, dst in self.flow:
            table[dst].add(src)
        return {x: frozenset(s) for x, s in table.items()}

    @cached_property
    def _post(self) -> dict[NodeId, frozenset[NodeId]]:
        table: dict[NodeId, set[NodeId]] = {x: set() for x in self.places | self.transitions}
        for src, dst in self.flow:
            table[src].add(dst)
        return {x: frozenset(s) for x, s in table.items()}

    @property
    def nodes(self) -> frozenset[NodeId]:
        return self.places | self.transitions

    def pre(self, x: NodeId) -> frozenset[NodeId]:
        """Pre-set •x."""
        try:
            return self._pre[x]
        except KeyError:
            raise NetError(f"unknown node {x!r}") from None

    def post(self, x: NodeId) -> frozenset[NodeId]:
        """Post-set x•."""
        try:
            return self._post[x]
        except KeyError:
            raise NetError(f"unknown node {x!r}") from None

    @cached_property
    def _descendants(self) -> dict[NodeId, frozenset[NodeId]]:
        # Reflexive-transitive closure of F, per node (memoised DFS).
        closure: dict[NodeId, frozenset[NodeId]] = {}

        def walk(x: NodeId) -> frozenset[NodeId]:
            if x in closure:
                return closure[x]
            acc = {x}
            for y in self._post[x]:
                acc |= walk(y)
            closure[x] = frozenset(acc)
            return closure[x]

        if self._has_flow_cycle:
            # Straightforward saturation; cycles make the DFS memo unsound.
            reach: dict[NodeId, set[NodeId]] = {x: {x} for x in self.nodes}
            changed = True
            while changed:
                changed = False
                for x in self.nodes:
                    for y in self._post[x]:
                        merged = reach[x] | reach[y]
                        if merged != reach[x]:
                            reach[x] = merged
                            changed = True
            return {x: frozenset(s) for x, s in reach.items()}
        for x in self.nodes:
            walk(x)
        return closure

    @cached_property
    def _has_flow_cycle(self) -> bool:
        colors: dict[NodeId, int] = {}

        def visit(x: NodeId) -> bool:
            colors[x] = 1
            for y in self._post[x]:
                state = colors.get(y, 0)
                if state == 1:
                    return True
                if state == 0 and visit(y):
                    return True
            colors[x] = 2
            return False

        return any(visit(x) for x in sorted(self.nodes) if colors.get(x, 0) == 0)


@dataclass(frozen=True)
class Violation:
    """One occurrence-condition violation, anchored at a node."""

    kind: str  # "cycle" | "backward-conflict" | "self-conflict"
    node: NodeId
    detail: str

    def __str__(self) -> str:
        return f"{self.kind} at {self.node}: {self.detail}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "OK"
        return "\n".join(str(v) for v in self.violations)


def causality_leq(net: Net, x: NodeId, y: NodeId) -> bool:
    """x ≼ y: reflexive-transitive closure of the flow relation."""
    if x not in net.nodes:
        raise NetError(f"unknown node {x!r}")
    if y not in net.nodes:
        raise NetError(f"unknown node {y!r}")
    return y in net._descendants[x]


def immediate_conflict(net: Net, t1: TransitionId, t2: TransitionId) -> bool:
    """t1 #0 t2: distinct transitions competing for a common pre-place."""
    for t in (t1, t2):
        if t not in net.transitions:
            raise NetError(f"unknown transition {t!r}")
    return t1 != t2 and bool(net.pre(t1) & net.pre(t2))


def conflict(net: Net, x: NodeId, y: NodeId) -> bool:
    """x # y: some immediate conflict t1 #0 t2 with t1 ≼ x and t2 ≼ y.

    On validated occurrence nets this relation is symmetric and
    irreflexive (irreflexivity is exactly the absence of
    self-conflicts).
    """
    if x not in net.nodes:
        raise NetError(f"unknown node {x!r}")
    if y not in net.nodes:
        raise NetError(f"unknown node {y!r}")
    below_x = _ancestor_transitions(net, x)
    below_y = _ancestor_transitions(net, y)
    for t1 in below_x:
        pre1 = net.pre(t1)
        for t2 in below_y:
            if t1 != t2 and pre1 & net.pre(t2):
                return True
    return False


def _ancestor_transitions(net: Net, x: NodeId) -> frozenset[TransitionId]:
    return frozenset(t for t in net.transitions if x in net._descendants[t])


def validate_occurrence(net: Net) -> ValidationReport:
    """Check the occurrence-net conditions.

    Reports one violation per offending node: nodes lying on a flow
    cycle, places with more than one producer (backward conflict), and
    self-conflicting transitions.
    """
    violations: list[Violation] = []
    if net._has_flow_cycle:
        for x in sorted(net.nodes):
            if _on_cycle(net, x):
                violations.append(Violation("cycle", x, "node lies on a flow cycle"))
    for p in sorted(net.places):
        producers = net.pre(p)
        if len(producers) > 1:
            violations.append(
                Violation("backward-conflict", p, f"multiple producers {sorted(producers)}")
            )
    if not net._has_flow_cycle:
        # Conflict is only meaningful on acyclic nets.
        for t in sorted(net.transitions):
            witness = _self_conflict_witness(net, t)
            if witness:
                violations.append(
                    Violation("self-conflict", t, f"conflicting causes {witness[0]} #0 {witness[1]}")
                )
    return ValidationReport(tuple(violations))


def _on_cycle(net: Net, x: NodeId) -> bool:
    return any(x in net._descendants[y] for y in net._post[x])


def _self_conflict_witness(net: Net, t: TransitionId) -> tuple[str, str] | None:
    causes = sorted(u for u in net.transitions if t in net._descendants[u])
    for i, t1 in enumerate(causes):
        for t2 in causes[i + 1:]:
            if net.pre(t1) & net.pre(t2):
                return (t1, t2)
    return None


def ensure_occurrence(net: Net) -> None:
    report = validate_occurrence(net)
    if not report.ok:
        raise OccurrenceError(f"not an occurrence net:\n{report}")


def min_places(net: Net) -> frozenset[PlaceId]:
    """Initial places: empty pre-set."""
    return frozenset(p for p in net.places if not net.pre(p))


def max_places(net: Net) -> frozenset[PlaceId]:
    """Final places: empty post-set."""
    return frozenset(p for p in net.places if not net.post(p))


def isolated_places(net: Net) -> frozenset[PlaceId]:
    """Places that are both initial and final."""
    return min_places(net) & max_places(net)


def identity_net(places: Iterable[PlaceId]) -> "MarkedNet":
    """The identity net I_s: unmarked isolated places, no transitions."""
    return MarkedNet(Net(frozenset(places), frozenset(), frozenset()), frozenset())


EMPTY_NET = Net(frozenset(), frozenset(), frozenset())


@dataclass(frozen=True)
class MarkedNet:
    """An occurrence net together with a subset of its initial,
    non-isolated places that already hold a token.

    The unmarked initial places form the input interface (tokens may
    arrive there from the context); the final places form the output
    interface.
    """

    net: Net
    marking: frozenset[PlaceId] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "marking", _frozen(self.marking))
        ensure_occurrence(self.net)
        initial = min_places(self.net)
        isolated = isolated_places(self.net)
        foreign = self.marking - self.net.places
        if foreign:
            raise OccurrenceError(f"marking mentions unknown places {sorted(foreign)}")
        not_initial = self.marking - initial
        if not_initial:
            raise OccurrenceError(f"marking mentions non-initial places {sorted(not_initial)}")
        lonely = self.marking & isolated
        if lonely:
            raise OccurrenceError(f"marking mentions isolated places {sorted(lonely)}")

    @property
    def inputs(self) -> frozenset[PlaceId]:
        """Unmarked initial places (the input interface)."""
        return min_places(self.net) - self.marking

    @property
    def outputs(self) -> frozenset[PlaceId]:
        """Final places (the output interface)."""
        return max_places(self.net)

    def is_trivial(self) -> bool:
        """True when the net has no transitions."""
        return not self.net.transitions


def enabled(marked: MarkedNet, t: TransitionId, marking: frozenset[PlaceId] | None = None) -> bool:
    m = marked.marking if marking is None else marking
    return marked.net.pre(t) <= m


def fire_at(net: Net, marking: frozenset[PlaceId], t: TransitionId) -> frozenset[PlaceId]:
    """The raw token game on any net: (m \\ •t) ∪ t• when •t ⊆ m."""
    if t not in net.transitions:
        raise NetError(f"unknown transition {t!r}")
    pre = net.pre(t)
    if not pre <= marking:
        missing = sorted(pre - marking)
        raise NetError(f"transition {t!r} not enabled: missing tokens in {missing}")
    return (marking - pre) | net.post(t)


def fire(marked: MarkedNet, t: TransitionId, marking: frozenset[PlaceId] | None = None) -> frozenset[PlaceId]:
    """Fire t at the given marking (default: the net's own marking) and
    return the successor marking."""
    return fire_at(marked.net, marked.marking if marking is None else marking, t)


@dataclass(frozen=True)
class Process:
    """A deterministic process (transaction) written as its set of
    transitions, together with the interface places of the induced
    subnet.

    ``initial_places``/``final_places`` are the min/max places of the
    subnet spanned by the transitions; ``internal_places`` are produced
    and consumed within the process.
    """

    transitions: frozenset[TransitionId]
    initial_places: frozenset[PlaceId]
    final_places: frozenset[PlaceId]
    internal_places: frozenset[PlaceId] = field(default=frozenset())

    @property
    def nodes(self) -> frozenset[NodeId]:
        return self.transitions | self.initial_places | self.final_places | self.internal_places

    @property
    def label(self) -> str:
        """Canonical rendering of the transition set, used to key δ."""
        return ",".join(sorted(self.transitions))

    def sort_key(self) -> tuple[str, ...]:
        return tuple(sorted(self.transitions))


def process_of(net: Net, fired: Iterable[TransitionId]) -> Process:
    """Build the :class:`Process` induced by a set of fired transitions."""
    fired = frozenset(fired)
    consumed: set[PlaceId] = set()
    produced: set[PlaceId] = set()
    for t in fired:
        consumed |= net.pre(t)
        produced |= net.post(t)
    return Process(
        transitions=fired,
        initial_places=frozenset(consumed - produced),
        final_places=frozenset(produced - consumed),
        internal_places=frozenset(produced & consumed),
    )


def enumerate_transactions(marked: MarkedNet) -> frozenset[Process]:
    """All maximal deterministic processes runnable from the marking.

    Requires every non-isolated initial place to be marked (the net is
    "fully marked"); isolated places carry no behaviour and are
    ignored.  Exploration is a memoised depth-first search over
    markings, so every interleaving of the same process collapses to a
    single transition set.
    """
    needed = min_places(marked.net) - isolated_places(marked.net)
    unmarked = needed - marked.marking
    if unmarked:
        raise OccurrenceError(f"unmarked initial place present: {sorted(unmarked)}")

    net = marked.net
    memo: dict[frozenset[PlaceId], frozenset[frozenset[TransitionId]]] = {}

    def completions(m: frozenset[PlaceId]) -> frozenset[frozenset[TransitionId]]:
        if m in memo:
            return memo[m]
        fireable = sorted(t for t in net.transitions if net.pre(t) <= m)
        if not fireable:
            result = frozenset({frozenset()})
        else:
            acc: set[frozenset[TransitionId]] = set()
            for t in fireable:
                after = (m - net.pre(t)) | net.post(t)
                for rest in completions(after):
                    acc.add(rest | {t})
            result = frozenset(acc)
        memo[m] = result
        return result

    return frozenset(process_of(net, fired) for fired in completions(marked.marking))


def maximal_firing_outcomes(marked: MarkedNet) -> frozenset[frozenset[PlaceId]]:
    """Final markings of all maximal firing sequences (marking-level view)."""
    net = marked.net
    seen: set[frozenset[PlaceId]] = set()
    finals: set[frozenset[PlaceId]] = set()
    stack = [marked.marking]
    while stack:
        m = stack.pop()
        if m in seen:
            continue
        seen.add(m)
        fireable = [t for t in net.transitions if net.pre(t) <= m]
        if not fireable:
            finals.add(m)
        for t in fireable:
            stack.append((m - net.pre(t)) | net.post(t))
    return frozenset(finals)


def reachable_markings(marked: MarkedNet) -> Iterator[frozenset[PlaceId]]:
    """All markings reachable from the net's marking (for safety checks)."""
    net = marked.net
    seen: set[frozenset[PlaceId]] = set()
    stack = [marked.marking]
    while stack:
        m = stack.pop()
        if m in seen:
            continue
        seen.add(m)
        yield m
        for t in net.transitions:
            if net.pre(t) <= m:
                stack.append((m - net.pre(t)) | net.post(t))

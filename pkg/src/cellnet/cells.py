"""Structural branching cells and the net algebra built on them.

An s-cell groups the transitions whose choices cannot be separated: it
is an equivalence class of the preorder generated by causality together
with the inverse precondition relation.  Cells are the indecomposable
blocks of a marked occurrence net; every net factors uniquely (up to the
commutative-monoidal axioms) into a layered parallel/sequential
composition of cell subnets and identity nets, which this module
computes as a tree of :class:`TreeNode` values.

Also here: the place-removal operator used to specialise a cell under
the hypothesis that some of its inputs stay empty, and the fully-marked
restriction view derived from it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .errors import CompositionError, NetError
from .nets import (
    MarkedNet,
    Net,
    NodeId,
    PlaceId,
    ensure_occurrence,
    identity_net,
    isolated_places,
    max_places,
    min_places,
)


def scell_preorder(net: Net) -> dict[NodeId, frozenset[NodeId]]:
    """The preorder ⊑ on nodes: reflexive-transitive closure of the flow
    relation extended with arcs from each transition back to its
    pre-places.  Returns, per node, the set of nodes it precedes."""
    ensure_occurrence(net)
    succ: dict[NodeId, set[NodeId]] = {x: set() for x in net.nodes}
    for src, dst in net.flow:
        succ[src].add(dst)
    for t in net.transitions:
        succ[t] |= net.pre(t)

    reach: dict[NodeId, frozenset[NodeId]] = {}

    def walk(x: NodeId) -> frozenset[NodeId]:
        # The relation may contain cycles (that is what makes cells), so
        # saturate strongly connected parts iteratively.
        pending = [x]
        acc = {x}
        while pending:
            y = pending.pop()
            for z in succ[y]:
                if z not in acc:
                    acc.add(z)
                    pending.append(z)
        return frozenset(acc)

    for x in net.nodes:
        reach[x] = walk(x)
    return reach


@dataclass(frozen=True)
class SCell:
    """One structural branching cell.

    ``members`` is the equivalence class itself (transitions plus their
    pre-places); ``subnet`` additionally contains the post-places of the
    member transitions, with the marking inherited from the enclosing
    net restricted to the subnet's initial places.
    """

    members: frozenset[NodeId]
    subnet: MarkedNet

    @property
    def nodes(self) -> frozenset[NodeId]:
        return self.subnet.net.nodes

    @property
    def min_places(self) -> frozenset[PlaceId]:
        return min_places(self.subnet.net)

    @property
    def max_places(self) -> frozenset[PlaceId]:
        return max_places(self.subnet.net)

    @property
    def transitions(self) -> frozenset[str]:
        return self.subnet.net.transitions

    def sort_key(self) -> str:
        """Lexicographically smallest member place id (deterministic order)."""
        return min(p for p in self.members if p in self.subnet.net.places)


def scells(net: Net, marking: frozenset[PlaceId] = frozenset()) -> tuple[SCell, ...]:
    """All s-cells of the net, sorted by their smallest member place.

    Each cell's subnet inherits ``marking ∩ minp``.
    """
    reach = scell_preorder(net)
    classes: dict[NodeId, frozenset[NodeId]] = {}
    for t in net.transitions:
        if t in classes:
            continue
        cls = frozenset(y for y in reach[t] if t in reach[y])
        for member in cls:
            classes[member] = cls
    cells = []
    for cls in sorted({classes[t] for t in net.transitions}, key=sorted):
        member_transitions = cls & net.transitions
        nodes = set(cls)
        for t in member_transitions:
            nodes |= net.post(t)
        flow = frozenset(
            (src, dst) for src, dst in net.flow if src in nodes and dst in nodes
        )
        subnet = Net(
            frozenset(p for p in nodes if p in net.places),
            frozenset(member_transitions),
            flow,
        )
        inherited = marking & min_places(subnet)
        cells.append(SCell(frozenset(cls), MarkedNet(subnet, inherited)))
    return tuple(sorted(cells, key=SCell.sort_key))


def cell_precedes(reach: dict[NodeId, frozenset[NodeId]], a: SCell, b: SCell) -> bool:
    """a ⊑ b lifted to cells (any representative pair suffices)."""
    rep_a = next(iter(a.members))
    rep_b = next(iter(b.members))
    return rep_b in reach[rep_a]


def cell_order(net: Net, cells: tuple[SCell, ...]) -> frozenset[tuple[int, int]]:
    """Strict order pairs (i, j) with cells[i] ⊑ cells[j], i ≠ j."""
    reach = scell_preorder(net)
    pairs = set()
    for i, a in enumerate(cells):
        for j, b in enumerate(cells):
            if i != j and cell_precedes(reach, a, b):
                pairs.add((i, j))
    return frozenset(pairs)


# --------------------------------------------------------------------- #
# Net algebra: parallel and sequential composition
# --------------------------------------------------------------------- #

def parallel_compose(m1: MarkedNet, m2: MarkedNet) -> MarkedNet:
    """Disjoint union of two marked nets (the ⊕ of the net algebra)."""
    shared = m1.net.nodes & m2.net.nodes
    if shared:
        raise CompositionError(f"parallel composition overlaps on nodes {sorted(shared)}")
    return MarkedNet(
        Net(
            m1.net.places | m2.net.places,
            m1.net.transitions | m2.net.transitions,
            m1.net.flow | m2.net.flow,
        ),
        m1.marking | m2.marking,
    )


def sequential_compose(m1: MarkedNet, m2: MarkedNet) -> MarkedNet:
    """Glue m1's final places onto m2's unmarked initial places.

    The two nets must be disjoint except for that shared interface,
    which must be exactly maxp(m1) and exactly the unmarked initial
    places of m2.
    """
    shared = m1.net.nodes & m2.net.nodes
    out1 = m1.outputs
    in2 = m2.inputs
    if out1 != in2:
        missing = sorted(out1 - in2)
        extra = sorted(in2 - out1)
        raise CompositionError(
            "sequential interface mismatch: "
            f"uncovered outputs {missing}, unfed inputs {extra}"
        )
    if shared != out1:
        stray = sorted(shared ^ out1)
        raise CompositionError(f"nets share nodes beyond the interface: {stray}")
    return MarkedNet(
        Net(
            m1.net.places | m2.net.places,
            m1.net.transitions | m2.net.transitions,
            m1.net.flow | m2.net.flow,
        ),
        m1.marking | m2.marking,
    )


EMPTY_MARKED = MarkedNet(Net(frozenset(), frozenset(), frozenset()), frozenset())


# --------------------------------------------------------------------- #
# Canonical form
# --------------------------------------------------------------------- #

class TreeNode:
    """Node of a composition tree; leaves are cell subnets and identity
    nets, internal nodes are parallel (n-ary) or sequential (binary)."""

    @property
    def inputs(self) -> frozenset[PlaceId]:
        raise NotImplementedError

    @property
    def outputs(self) -> frozenset[PlaceId]:
        raise NotImplementedError

    @property
    def marking(self) -> frozenset[PlaceId]:
        raise NotImplementedError


@dataclass(frozen=True)
class CellLeaf(TreeNode):
    cell: SCell

    @property
    def inputs(self) -> frozenset[PlaceId]:
        return self.cell.subnet.inputs

    @property
    def outputs(self) -> frozenset[PlaceId]:
        return self.cell.subnet.outputs

    @property
    def marking(self) -> frozenset[PlaceId]:
        return self.cell.subnet.marking


@dataclass(frozen=True)
class IdentityLeaf(TreeNode):
    places: frozenset[PlaceId]

    @property
    def inputs(self) -> frozenset[PlaceId]:
        return self.places

    @property
    def outputs(self) -> frozenset[PlaceId]:
        return self.places

    @property
    def marking(self) -> frozenset[PlaceId]:
        return frozenset()


@dataclass(frozen=True)
class ParNode(TreeNode):
    children: tuple[TreeNode, ...]

    @cached_property
    def inputs(self) -> frozenset[PlaceId]:
        return frozenset().union(*(c.inputs for c in self.children))

    @cached_property
    def outputs(self) -> frozenset[PlaceId]:
        return frozenset().union(*(c.outputs for c in self.children))

    @cached_property
    def marking(self) -> frozenset[PlaceId]:
        return frozenset().union(*(c.marking for c in self.children))


@dataclass(frozen=True)
class SeqNode(TreeNode):
    first: TreeNode
    second: TreeNode

    @property
    def inputs(self) -> frozenset[PlaceId]:
        return self.first.inputs

    @property
    def outputs(self) -> frozenset[PlaceId]:
        return self.second.outputs

    @property
    def marking(self) -> frozenset[PlaceId]:
        return self.first.marking | self.second.marking


def canonical_form(marked: MarkedNet) -> TreeNode:
    """Layered decomposition of a marked occurrence net.

    Cells are stratified greedily: a cell's layer is one past the
    deepest of its strict predecessors.  Each layer is the parallel
    composition of its cells (ordered by smallest member place) plus one
    identity net threading every place that crosses the layer boundary.
    Folding the tree back with ⊕ and ; reproduces the input net exactly.
    """
    net = marked.net
    cells = scells(net, marked.marking)
    if not cells:
        return IdentityLeaf(net.places)
    order = cell_order(net, cells)
    preds: dict[int, set[int]] = {i: set() for i in range(len(cells))}
    for i, j in order:
        preds[j].add(i)

    layer: dict[int, int] = {}

    def assign(i: int) -> int:
        if i not in layer:
            layer[i] = 1 + max((assign(j) for j in preds[i]), default=0)
        return layer[i]

    for i in range(len(cells)):
        assign(i)
    depth = max(layer.values())

    consumer_cell: dict[PlaceId, int] = {}
    producer_cell: dict[PlaceId, int] = {}
    for i, cell in enumerate(cells):
        for t in cell.transitions:
            for p in net.pre(t):
                consumer_cell[p] = i
            for p in net.post(t):
                producer_cell[p] = i

    initial = min_places(net)
    pads: dict[int, set[PlaceId]] = {j: set() for j in range(1, depth + 1)}
    for p in sorted(net.places):
        if p in initial:
            if p in marked.marking:
                continue  # marked inputs live inside their cell's subnet
            avail = 0
        else:
            avail = layer[producer_cell[p]]
        last = layer[consumer_cell[p]] - 1 if p in consumer_cell else depth
        for j in range(avail + 1, last + 1):
            pads[j].add(p)

    layers: list[TreeNode] = []
    for j in range(1, depth + 1):
        children: list[TreeNode] = [
            CellLeaf(cells[i]) for i in sorted(
                (i for i in range(len(cells)) if layer[i] == j),
                key=lambda i: cells[i].sort_key(),
            )
        ]
        if pads[j]:
            children.append(IdentityLeaf(frozenset(pads[j])))
        layers.append(children[0] if len(children) == 1 else ParNode(tuple(children)))

    tree = layers[0]
    for nxt in layers[1:]:
        tree = SeqNode(tree, nxt)
    return tree


def fold_tree(tree: TreeNode) -> MarkedNet:
    """Recompose a composition tree back into a marked net."""
    if isinstance(tree, CellLeaf):
        return tree.cell.subnet
    if isinstance(tree, IdentityLeaf):
        return identity_net(tree.places)
    if isinstance(tree, ParNode):
        acc = fold_tree(tree.children[0])
        for child in tree.children[1:]:
            acc = parallel_compose(acc, fold_tree(child))
        return acc
    if isinstance(tree, SeqNode):
        return sequential_compose(fold_tree(tree.first), fold_tree(tree.second))
    raise TypeError(f"not a composition tree node: {tree!r}")


def cell_leaves(tree: TreeNode) -> tuple[CellLeaf, ...]:
    if isinstance(tree, CellLeaf):
        return (tree,)
    if isinstance(tree, IdentityLeaf):
        return ()
    if isinstance(tree, ParNode):
        return tuple(leaf for c in tree.children for leaf in cell_leaves(c))
    if isinstance(tree, SeqNode):
        return cell_leaves(tree.first) + cell_leaves(tree.second)
    raise TypeError(f"not a composition tree node: {tree!r}")


def render_tree(tree: TreeNode) -> str:
    """Bracketed textual form used by the CLI."""
    if isinstance(tree, CellLeaf):
        body = ",".join(sorted(tree.cell.members))
        marking = tree.cell.subnet.marking
        if marking:
            return f"cell{{{body} | m={','.join(sorted(marking))}}}"
        return f"cell{{{body}}}"
    if isinstance(tree, IdentityLeaf):
        return f"I{{{','.join(sorted(tree.places))}}}"
    if isinstance(tree, ParNode):
        return "(" + " + ".join(render_tree(c) for c in tree.children) + ")"
    if isinstance(tree, SeqNode):
        return f"({render_tree(tree.first)} ; {render_tree(tree.second)})"
    raise TypeError(f"not a composition tree node: {tree!r}")


# --------------------------------------------------------------------- #
# Place removal and restriction
# --------------------------------------------------------------------- #

@dataclass(frozen=True)
class PlaceRemoval:
    """Result of deleting dead input places and everything that can no
    longer happen.  ``dropped_tokens`` lists marked places that became
    isolated and were removed together with their token."""

    result: MarkedNet
    removed_places: frozenset[PlaceId]
    removed_transitions: frozenset[str]
    dropped_tokens: frozenset[PlaceId]


def remove_places(cell: MarkedNet, dead: frozenset[PlaceId]) -> PlaceRemoval:
    """Delete the (unmarked, initial) places ``dead`` plus every
    transition and place that causally depends on them, then drop the
    junk this leaves behind: places whose consumers all died (a token
    landing there could never be used again) and places left isolated."""
    dead = frozenset(dead)
    stray = dead - cell.inputs
    if stray:
        raise NetError(
            f"places {sorted(stray)} are not unmarked initial places of the cell"
        )
    net = cell.net
    dead_places = set(dead)
    dead_transitions: set[str] = set()
    changed = True
    while changed:
        changed = False
        for t in net.transitions - dead_transitions:
            if net.pre(t) & dead_places:
                dead_transitions.add(t)
                changed = True
        for p in net.places - dead_places:
            producer = net.pre(p)
            if producer and producer <= dead_transitions:
                dead_places.add(p)
                changed = True

    # Stranded places: produced within the net, but every consumer died.
    # A token arriving there is unusable, so the place is cut away (its
    # producer keeps firing, the token vanishes).  Initial places in the
    # same situation become isolated and are handled below, where a
    # marked one has its dropped token recorded.
    for p in net.places - dead_places:
        consumers = net.post(p)
        if net.pre(p) and consumers and consumers <= dead_transitions:
            dead_places.add(p)

    places = net.places - dead_places
    transitions = net.transitions - dead_transitions
    flow = frozenset(
        (src, dst)
        for src, dst in net.flow
        if src in places | transitions and dst in places | transitions
    )
    trimmed = Net(frozenset(places), frozenset(transitions), flow)
    lonely = isolated_places(trimmed)
    dropped = frozenset(lonely & cell.marking)
    final = Net(
        trimmed.places - lonely,
        trimmed.transitions,
        trimmed.flow,
    )
    marking = cell.marking & final.places
    return PlaceRemoval(
        result=MarkedNet(final, marking),
        removed_places=frozenset(dead_places | lonely),
        removed_transitions=frozenset(dead_transitions),
        dropped_tokens=dropped,
    )


@dataclass(frozen=True)
class MarkedView:
    """A cell specialised to the inputs that actually receive tokens:
    everything else is removed and all surviving initial places are
    marked.  ``dead_finals`` are the original final places that can no
    longer be reached."""

    marked: MarkedNet
    dead_finals: frozenset[PlaceId]
    dropped_tokens: frozenset[PlaceId]


def at_marking(cell: MarkedNet, arriving: frozenset[PlaceId]) -> MarkedView:
    """Specialise ``cell`` to the case where exactly ``arriving`` (a
    subset of its unmarked initial places) receive tokens."""
    arriving = frozenset(arriving)
    stray = arriving - cell.inputs
    if stray:
        raise NetError(
            f"places {sorted(stray)} are not unmarked initial places of the cell"
        )
    removal = remove_places(cell, cell.inputs - arriving)
    survivor = removal.result.net
    marked = MarkedNet(survivor, min_places(survivor))
    return MarkedView(
        marked=marked,
        dead_finals=cell.outputs - marked.outputs,
        dropped_tokens=removal.dropped_tokens,
    )

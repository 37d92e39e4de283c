"""Translation from marked occurrence nets to terms.

The net's canonical form is folded homomorphically: identity leaves map
to identity terms, parallel/sequential nodes to + and ;, and each cell
leaf is encoded either as a single constant (when every initial place of
the cell is already marked) or as a sum over all subsets of its unmarked
initial places, where each branch restricts the cell to the arriving
tokens, recursively compiles the restriction, and pads the final places
that die with a dead-wire term.

Termination is structural (every restriction strictly shrinks the cell)
but a depth guard turns any accidental non-termination into an error.
"""

from __future__ import annotations

from .cells import (
    CellLeaf,
    IdentityLeaf,
    ParNode,
    SeqNode,
    TreeNode,
    at_marking,
    canonical_form,
    scells,
)
from .errors import CompileError
from .nets import MarkedNet, Process, enumerate_transactions, min_places
from .terms import Constant, ConstantKey, Dead, Identity, Par, Seq, Term, make_sum, subsets_lex

DEFAULT_DEPTH_GUARD = 64


def compile_net(marked: MarkedNet, *, depth_guard: int = DEFAULT_DEPTH_GUARD) -> Term:
    """Compile a validated marked occurrence net into a well-typed term
    whose inputs are the net's unmarked initial places and whose outputs
    are its final places."""
    return _compile_tree(canonical_form(marked), depth_guard)


def _compile_tree(tree: TreeNode, fuel: int) -> Term:
    if fuel <= 0:
        raise CompileError("recursion depth guard exceeded while compiling")
    if isinstance(tree, IdentityLeaf):
        return Identity(tree.places)
    if isinstance(tree, CellLeaf):
        return compile_cell(tree.cell.subnet, depth_guard=fuel)
    if isinstance(tree, ParNode):
        term = _compile_tree(tree.children[0], fuel)
        for child in tree.children[1:]:
            term = Par(term, _compile_tree(child, fuel))
        return term
    if isinstance(tree, SeqNode):
        return Seq(_compile_tree(tree.first, fuel), _compile_tree(tree.second, fuel))
    raise CompileError(f"unexpected composition tree node {tree!r}")


def compile_cell(cell: MarkedNet, *, depth_guard: int = DEFAULT_DEPTH_GUARD) -> Term:
    """Encode one s-cell leaf.

    Fully marked cells become a constant over their transactions.  A
    cell with unmarked inputs becomes a sum with one branch per subset
    of those inputs; branch m pads the final places killed by the
    missing tokens and recursively compiles the restricted net (which
    may decompose into several smaller cells).
    """
    if depth_guard <= 0:
        raise CompileError("recursion depth guard exceeded while compiling a cell")
    parts = scells(cell.net, cell.marking)
    if len(parts) != 1 or parts[0].subnet.net != cell.net:
        raise CompileError(
            "not a single s-cell: the net decomposes into "
            f"{len(parts)} cell(s) and possibly identity wires"
        )
    unmarked = cell.inputs
    if not unmarked:
        transactions = _clip_to_boundary(enumerate_transactions(cell), cell.outputs)
        key = ConstantKey(
            marked=min_places(cell.net),
            outputs=frozenset().union(*(p.final_places for p in transactions)),
            transactions=transactions,
        )
        return Constant(key)

    branches: dict[frozenset[str], Term] = {}
    for arriving in subsets_lex(unmarked):
        view = at_marking(cell, arriving)
        if view.marked.net.places or view.marked.net.transitions:
            inner = _compile_tree(canonical_form(view.marked), depth_guard - 1)
        else:
            inner = Identity(frozenset())
        branches[arriving] = _pad_dead(view.dead_finals, inner)
    return make_sum(unmarked, branches)


def _clip_to_boundary(transactions, boundary: frozenset[str]):
    """Restrict transaction final places to the cell's own final places.

    A maximal process can strand a token on a place internal to the
    cell (produced there, but every consumer conflicts with the chosen
    run).  Nothing outside the cell can ever consume it, so the matrix
    semantics drops it; the stranded places stay accounted among the
    transaction's nodes.
    """
    clipped = set()
    for proc in transactions:
        stranded = proc.final_places - boundary
        if not stranded:
            clipped.add(proc)
        else:
            clipped.add(
                Process(
                    proc.transitions,
                    proc.initial_places,
                    proc.final_places & boundary,
                    proc.internal_places | stranded,
                )
            )
    return frozenset(clipped)


def _pad_dead(dead_finals: frozenset[str], inner: Term) -> Term:
    """⊥ padding with the unit laws applied: drop ⊥ over nothing and a
    trailing empty identity."""
    if not dead_finals:
        return inner
    if inner == Identity(frozenset()):
        return Dead(dead_finals)
    return Par(Dead(dead_finals), inner)

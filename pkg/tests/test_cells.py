import pytest

from cellnet import (
    CellLeaf,
    CompositionError,
    IdentityLeaf,
    MarkedNet,
    Net,
    NetError,
    ParNode,
    SeqNode,
    at_marking,
    canonical_form,
    cell_order,
    fold_tree,
    identity_net,
    parallel_compose,
    remove_places,
    render_tree,
    scell_preorder,
    scells,
    sequential_compose,
)

fs = frozenset


def cell_by_place(cells, place):
    for cell in cells:
        if place in cell.members:
            return cell
    raise AssertionError(f"no cell containing {place}")


def test_preorder_merges_choice(three_cells):
    reach = scell_preorder(three_cells.net)
    assert "a" in reach["1"] and "1" in reach["a"]   # 1 ⊑ a and a ⊑ 1
    assert "b" in reach["a"] and "a" in reach["b"]   # a ↔ b through place 1
    assert "f" in reach["a"]                          # a ⊑ 4 ⊑ f
    assert "a" not in reach["f"]


def test_preorder_single_place():
    net = Net(fs({"p"}), fs(), fs())
    # an isolated place is only related to itself
    assert scell_preorder(net) == {"p": fs({"p"})}


def test_scells_running_example(three_cells):
    cells = scells(three_cells.net, three_cells.marking)
    members = sorted(sorted(c.members) for c in cells)
    assert members == [
        ["1", "a", "b"],
        ["2", "c", "d"],
        ["3", "4", "6", "e", "f", "g", "h"],
    ]
    order = cell_order(three_cells.net, cells)
    c1 = next(i for i, c in enumerate(cells) if "a" in c.members)
    c2 = next(i for i, c in enumerate(cells) if "c" in c.members)
    c3 = next(i for i, c in enumerate(cells) if "f" in c.members)
    assert order == fs({(c1, c3), (c2, c3)})
    # inherited markings
    assert cell_by_place(cells, "2").subnet.marking == fs({"2"})
    assert cell_by_place(cells, "3").subnet.marking == fs({"3"})
    # cell interfaces
    c3_cell = cell_by_place(cells, "3")
    assert c3_cell.min_places == fs({"3", "4", "6"})
    assert c3_cell.max_places == fs({"7", "8", "9", "10"})
    c1_cell = cell_by_place(cells, "1")
    assert c1_cell.min_places == fs({"1"})
    assert c1_cell.max_places == fs({"4", "5"})


def test_scells_confusion(confusion):
    cells = scells(confusion.net, confusion.marking)
    members = sorted(sorted(c.members) for c in cells)
    assert members == [["1", "a", "b"], ["3", "4", "c", "d"]]
    assert cell_order(confusion.net, cells)  # C1 below C2


def test_scells_independent_transitions():
    net = Net(fs({"p", "q", "r", "s"}), fs({"t", "u"}),
              fs([("p", "t"), ("t", "r"), ("q", "u"), ("u", "s")]))
    cells = scells(net)
    assert len(cells) == 2
    assert cell_order(net, cells) == fs()


def test_parallel_compose(three_cells):
    cells = scells(three_cells.net, three_cells.marking)
    nc1 = cell_by_place(cells, "1").subnet
    nc2 = cell_by_place(cells, "2").subnet
    nc3 = cell_by_place(cells, "3").subnet
    both = parallel_compose(nc1, nc2)
    assert both.inputs == fs({"1"})
    assert both.outputs == fs({"4", "5", "6"})
    with pytest.raises(CompositionError) as err:
        parallel_compose(nc1, nc3)
    assert "4" in str(err.value)


def test_parallel_unit(three_cells):
    empty = MarkedNet(Net(fs(), fs(), fs()), fs())
    assert parallel_compose(three_cells, empty) == three_cells


def test_sequential_compose(three_cells):
    cells = scells(three_cells.net, three_cells.marking)
    nc1 = cell_by_place(cells, "1").subnet
    nc2 = cell_by_place(cells, "2").subnet
    nc3 = cell_by_place(cells, "3").subnet
    first = parallel_compose(nc1, nc2)
    second = parallel_compose(nc3, identity_net({"5"}))
    whole = sequential_compose(first, second)
    assert whole == three_cells
    # place 5 uncovered without the identity padding
    with pytest.raises(CompositionError) as err:
        sequential_compose(first, nc3)
    assert "5" in str(err.value)


def test_sequential_identity_law(three_cells):
    ident = identity_net(three_cells.outputs)
    assert sequential_compose(three_cells, ident) == three_cells


def test_canonical_form_running(three_cells):
    tree = canonical_form(three_cells)
    assert render_tree(tree) == (
        "((cell{1,a,b} + cell{2,c,d | m=2}) ; (cell{3,4,6,e,f,g,h | m=3} + I{5}))"
    )
    assert fold_tree(tree) == three_cells


def test_canonical_form_single_cell():
    net = Net(fs({"p", "q", "r"}), fs({"t", "u"}),
              fs([("p", "t"), ("p", "u"), ("t", "q"), ("u", "r")]))
    tree = canonical_form(MarkedNet(net, fs()))
    assert isinstance(tree, CellLeaf)


def test_canonical_form_trivial_net():
    tree = canonical_form(identity_net({"x", "y"}))
    assert tree == IdentityLeaf(fs({"x", "y"}))


def test_canonical_form_confusion(confusion):
    tree = canonical_form(confusion)
    assert isinstance(tree, SeqNode)
    assert isinstance(tree.first, CellLeaf)
    assert isinstance(tree.second, CellLeaf)
    assert fold_tree(tree) == confusion


def test_remove_places_kills_dependents(three_cells):
    cells = scells(three_cells.net, fs())
    nc3 = cell_by_place(cells, "3").subnet
    removal = remove_places(nc3, fs({"6"}))
    survivor = removal.result
    assert survivor.net.transitions == fs({"e"})
    assert survivor.net.places == fs({"3", "7"})
    assert "4" in removal.removed_places          # isolated once f is gone
    assert removal.dropped_tokens == fs()


def test_remove_places_other_input(three_cells):
    cells = scells(three_cells.net, fs())
    nc3 = cell_by_place(cells, "3").subnet
    removal = remove_places(nc3, fs({"4"}))
    survivor = removal.result
    assert survivor.net.transitions == fs({"e", "g", "h"})
    assert "8" not in survivor.net.places
    assert survivor.net.places == fs({"3", "6", "7", "9", "10"})


def test_remove_places_empty_set_is_identity(three_cells):
    cells = scells(three_cells.net, fs())
    nc3 = cell_by_place(cells, "3").subnet
    removal = remove_places(nc3, fs())
    assert removal.result == nc3


def test_remove_places_requires_unmarked_inputs(three_cells):
    cells = scells(three_cells.net, three_cells.marking)
    nc3 = cell_by_place(cells, "3").subnet      # 3 is marked
    with pytest.raises(NetError):
        remove_places(nc3, fs({"3"}))
    with pytest.raises(NetError):
        remove_places(nc3, fs({"7"}))


def test_remove_places_monotone(three_cells):
    cells = scells(three_cells.net, fs())
    nc3 = cell_by_place(cells, "3").subnet
    for first, second in [(fs({"4"}), fs({"6"})), (fs({"6"}), fs({"4"})), (fs({"3"}), fs({"4", "6"}))]:
        once = remove_places(nc3, first).result
        rest = second & once.inputs
        stepwise = remove_places(once, rest).result
        direct = remove_places(nc3, first | second).result
        assert stepwise == direct


def test_at_marking_views(three_cells):
    cells = scells(three_cells.net, three_cells.marking)
    nc3 = cell_by_place(cells, "3").subnet       # marked {3}, inputs {4,6}
    only3 = at_marking(nc3, fs())
    assert only3.marked.net.transitions == fs({"e"})
    assert only3.marked.marking == fs({"3"})
    assert only3.dead_finals == fs({"8", "9", "10"})

    both = at_marking(nc3, fs({"4", "6"}))
    assert both.marked.net == nc3.net
    assert both.marked.marking == fs({"3", "4", "6"})
    assert both.dead_finals == fs()

    just4 = at_marking(nc3, fs({"4"}))           # 4 ends up isolated: dropped
    assert just4.marked.net.places == fs({"3", "7"})
    assert just4.dropped_tokens == fs()          # 4 was not marked here

    just6 = at_marking(nc3, fs({"6"}))
    assert just6.marked.net.transitions == fs({"e", "g", "h"})
    assert just6.dead_finals == fs({"8"})
    # the restriction splits into two side-by-side cells
    split = canonical_form(just6.marked)
    assert isinstance(split, ParNode)
    assert all(isinstance(child, CellLeaf) for child in split.children)
    assert sorted(sorted(c.cell.members) for c in split.children) == [
        ["3", "e"], ["6", "g", "h"],
    ]


def test_at_marking_empty_cell(three_cells):
    cells = scells(three_cells.net, fs())
    nc1 = cell_by_place(cells, "1").subnet
    view = at_marking(nc1, fs())
    assert view.marked.net.places == fs()
    assert view.dead_finals == fs({"4", "5"})


def test_at_marking_drops_marked_isolated_token():
    # t needs {m, u}; u stays empty, so m's token is silently dropped (and logged)
    net = Net(fs({"m", "u", "r"}), fs({"t"}),
              fs([("m", "t"), ("u", "t"), ("t", "r")]))
    cell = MarkedNet(net, fs({"m"}))
    view = at_marking(cell, fs())
    assert view.marked.net.places == fs()
    assert view.dropped_tokens == fs({"m"})
    assert view.dead_finals == fs({"r"})

import pytest

from cellnet import (
    CompileError,
    Constant,
    Dead,
    Identity,
    MarkedNet,
    Net,
    Par,
    Seq,
    Sum,
    compile_cell,
    compile_net,
    identity_net,
    render_term,
    scells,
    typecheck,
)

fs = frozenset


def cell_subnet(marked, member):
    for cell in scells(marked.net, marked.marking):
        if member in cell.members:
            return cell.subnet
    raise AssertionError(f"no cell containing {member}")


def test_compile_identity_net():
    assert compile_net(identity_net({"x", "y"})) == Identity(fs({"x", "y"}))


def test_compile_cell_c1(three_cells):
    term = compile_cell(cell_subnet(three_cells, "a"))
    assert isinstance(term, Sum)
    assert term.inputs == fs({"1"})
    assert term.branch(fs()) == Dead(fs({"4", "5"}))
    full = term.branch(fs({"1"}))
    assert isinstance(full, Constant)
    assert full.key.signature == "a|b"
    assert full.key.outputs == fs({"4", "5"})


def test_compile_cell_c2_is_constant(three_cells):
    term = compile_cell(cell_subnet(three_cells, "c"))
    assert isinstance(term, Constant)
    assert term.key.signature == "c|d"
    assert term.key.marked == fs({"2"})
    assert term.key.outputs == fs({"6"})


def test_compile_cell_c3_branches(three_cells):
    term = compile_cell(cell_subnet(three_cells, "f"))
    assert isinstance(term, Sum)
    assert term.inputs == fs({"4", "6"})

    empty = term.branch(fs())
    assert isinstance(empty, Par)
    assert empty.left == Dead(fs({"8", "9", "10"}))
    assert isinstance(empty.right, Constant) and empty.right.key.signature == "e"

    assert term.branch(fs({"4"})) == empty  # place 4 alone is useless

    six = term.branch(fs({"6"}))
    rendered = render_term(six)
    assert rendered.startswith("(Bot{8}")
    assert "g" in rendered and "h" in rendered

    both = term.branch(fs({"4", "6"}))
    assert isinstance(both, Constant)
    assert both.key.signature == "e,g|e,h|f"


def test_compile_running_net_shape(three_cells):
    term = compile_net(three_cells)
    assert isinstance(term, Seq)
    assert isinstance(term.first, Par)
    assert isinstance(term.second, Par)
    assert term.second.right == Identity(fs({"5"}))
    ty = typecheck(term)
    assert ty.inputs == three_cells.inputs
    assert ty.outputs == three_cells.outputs


def test_compile_confusion_two_stages(confusion):
    term = compile_net(confusion)
    assert isinstance(term, Seq)
    assert isinstance(term.first, Constant)           # a/b cell, fully marked
    assert term.first.key.outputs == fs({"4"})
    assert isinstance(term.second, Sum)               # c/d cell over input 4
    assert term.second.inputs == fs({"4"})
    ty = typecheck(term)
    assert ty.inputs == fs() and ty.outputs == fs({"5", "6"})


def test_compile_output_is_stable(three_cells):
    first = render_term(compile_net(three_cells))
    for _ in range(3):
        assert render_term(compile_net(three_cells)) == first


def test_compile_nested_restriction():
    # A chain of two cells below an unmarked input: the inner branch
    # compilation must recurse through another sum.
    net = Net(
        fs({"i", "p", "q", "r"}),
        fs({"t", "u", "v"}),
        fs([("i", "t"), ("t", "p"), ("p", "u"), ("u", "q"), ("p", "v"), ("v", "r")]),
    )
    term = compile_net(MarkedNet(net, fs()))
    ty = typecheck(term)
    assert ty.inputs == fs({"i"})
    assert ty.outputs == fs({"q", "r"})
    rendered = render_term(term)
    assert rendered.count("sum") == 2


def stranded_token_net(marking):
    # One cell in which p is internal (t1 produces it, t4 consumes it)
    # but the run {t1, t5} strands a token on p forever.
    return MarkedNet(
        Net(
            fs({"x0", "x1", "p", "q", "r", "s"}),
            fs({"t0", "t1", "t4", "t5"}),
            fs([
                ("x0", "t0"), ("x1", "t0"), ("t0", "r"),
                ("x0", "t1"), ("t1", "p"),
                ("x1", "t4"), ("p", "t4"), ("t4", "q"),
                ("x1", "t5"), ("t5", "s"),
            ]),
        ),
        fs(marking),
    )


def test_stranded_internal_token_is_clipped():
    marked = stranded_token_net({"x0", "x1"})
    term = compile_net(marked)
    assert isinstance(term, Constant)
    key = term.key
    assert key.outputs == fs({"q", "r", "s"})       # p never escapes the cell
    finals = {p.transitions: p.final_places for p in key.transactions}
    assert finals[fs({"t1", "t5"})] == fs({"s"})    # token on p dropped
    assert finals[fs({"t1", "t4"})] == fs({"q"})
    assert finals[fs({"t0"})] == fs({"r"})
    # the stranded place still counts among the transaction's nodes
    stranded = next(p for p in key.transactions if p.transitions == fs({"t1", "t5"}))
    assert "p" in stranded.nodes


def test_stranded_internal_place_in_restriction():
    # With x1 as an unfed input, the empty branch loses t4, so p is cut
    # away while its producer t1 survives with an empty post-set.
    marked = stranded_token_net({"x0"})
    term = compile_net(marked)
    assert isinstance(term, Sum)
    assert term.inputs == fs({"x1"})
    ty = typecheck(term)
    assert ty.outputs == fs({"q", "r", "s"})
    empty = term.branch(fs())
    assert isinstance(empty, Par)
    assert empty.left == Dead(fs({"q", "r", "s"}))
    inner = empty.right
    assert isinstance(inner, Constant)
    assert inner.key.outputs == fs()                # t1 fires into nothing
    assert {p.transitions for p in inner.key.transactions} == {fs({"t1"})}


def test_compile_cell_rejects_non_cell(three_cells):
    with pytest.raises(CompileError):
        compile_cell(three_cells)


def test_depth_guard():
    with pytest.raises(CompileError):
        compile_net(MarkedNet(Net(fs({"p", "q"}), fs({"t"}), fs([("p", "t"), ("t", "q")])), fs()),
                    depth_guard=0)

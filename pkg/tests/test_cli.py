import json

import pytest

from cellnet.cli import run
from conftest import build_three_cell_net

RUNNING = "nets/three_cells.net"
RUNNING_DELTA = "nets/three_cells.delta"
CONFUSION = "nets/confusion.net"
CONFUSION_DELTA = "nets/confusion.delta"


def test_validate_ok(capsys):
    assert run(["validate", RUNNING]) == 0
    assert capsys.readouterr().out.strip() == "OK"


def test_validate_reports_violations(tmp_path, capsys):
    bad = tmp_path / "bad.net"
    bad.write_text(
        '{"places": ["p", "q", "r"], "transitions": ['
        '{"id": "t", "pre": ["q"], "post": ["p"]}, '
        '{"id": "u", "pre": ["r"], "post": ["p"]}]}'
    )
    assert run(["validate", str(bad)]) == 1
    assert "backward-conflict" in capsys.readouterr().out


def test_validate_missing_file(capsys):
    assert run(["validate", "nets/nope.net"]) == 1
    assert "nope.net" in capsys.readouterr().err


def test_cells_listing(capsys):
    assert run(["cells", RUNNING]) == 0
    out = capsys.readouterr().out
    assert "C1: members {1,a,b}" in out
    assert "C3: members {3,4,6,e,f,g,h}" in out
    assert "C1 < C3" in out and "C2 < C3" in out


def test_canon(capsys):
    assert run(["canon", RUNNING]) == 0
    out = capsys.readouterr().out.strip()
    assert out == "((cell{1,a,b} + cell{2,c,d | m=2}) ; (cell{3,4,6,e,f,g,h | m=3} + I{5}))"


def test_canon_dot(capsys):
    assert run(["canon", RUNNING, "--dot"]) == 0
    assert "digraph" in capsys.readouterr().out


def test_compile_emits_parseable_term(capsys, tmp_path):
    assert run(["compile", RUNNING]) == 0
    text = capsys.readouterr().out.strip()
    from cellnet import compile_net, parse_term

    assert parse_term(text) == compile_net(build_three_cell_net())
    term_file = tmp_path / "running.term"
    term_file.write_text(text)
    assert run(["check-term", str(term_file)]) == 0
    assert "OK" in capsys.readouterr().out


def test_check_term_rejects_ill_typed(tmp_path, capsys):
    bad = tmp_path / "bad.term"
    bad.write_text("(I{a} ; I{b})")
    assert run(["check-term", str(bad)]) == 1
    assert "mismatch" in capsys.readouterr().err


def test_constants_listing(capsys):
    assert run(["constants", RUNNING]) == 0
    lines = [line.split()[0] for line in capsys.readouterr().out.splitlines()]
    assert lines == ["a|b", "c|d", "e", "e,g|e,h|f", "g|h"]


def test_matrix_keep_wire7(capsys):
    assert run(["matrix", RUNNING, RUNNING_DELTA, "--keep", "7", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["rows"][0] == pytest.approx([0.0, 1.0])
    assert doc["rows"][1] == pytest.approx([0.09, 0.91])


def test_matrix_text_and_csv(capsys):
    assert run(["matrix", RUNNING, RUNNING_DELTA, "--keep", "7"]) == 0
    text = capsys.readouterr().out
    assert "{7}" in text and "0.91" in text
    assert run(["matrix", RUNNING, RUNNING_DELTA, "--keep", "7", "--format", "csv"]) == 0
    csv_lines = capsys.readouterr().out.splitlines()
    assert csv_lines[0] == '"","{}","{7}"'
    row1 = csv_lines[2].split(",")
    assert float(row1[2]) == pytest.approx(0.91, abs=1e-12)


def test_matrix_wiring_overrides(capsys):
    assert run([
        "matrix", RUNNING, RUNNING_DELTA,
        "--in-order", "1", "--out-order", "7,5,8,9,10", "--keep", "7",
        "--format", "json",
    ]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["rows"][1] == pytest.approx([0.09, 0.91])


def test_matrix_missing_delta_strict(tmp_path, capsys):
    empty = tmp_path / "empty.delta"
    empty.write_text("[]")
    assert run(["matrix", RUNNING, str(empty)]) == 1
    assert "missing" in capsys.readouterr().err


def test_matrix_missing_delta_lax(tmp_path, capsys):
    empty = tmp_path / "empty.delta"
    empty.write_text("[]")
    assert run(["matrix", RUNNING, str(empty), "--allow-missing-delta", "--keep", "7"]) == 0
    assert "uniform" in capsys.readouterr().err


def test_infer_marginal(capsys):
    assert run(["infer", RUNNING, RUNNING_DELTA, "--marginal", "7"]) == 0
    assert "0.91" in capsys.readouterr().out


def test_infer_forward(tmp_path, capsys):
    state = tmp_path / "prior.state"
    state.write_text('{"places": ["1"], "probabilities": {"": 0.5, "1": 0.5}}')
    assert run(["infer", RUNNING, RUNNING_DELTA, "--forward", str(state), "--marginal", "7"]) == 0
    assert "0.91" in capsys.readouterr().out


def test_infer_posterior(tmp_path, capsys):
    state = tmp_path / "prior.state"
    state.write_text('{"places": ["1"], "probabilities": {"": 0.5, "1": 0.5}}')
    assert run([
        "infer", RUNNING, RUNNING_DELTA,
        "--posterior", "--prior", str(state), "--evidence", "7=1",
    ]) == 0
    out = capsys.readouterr().out
    expected = (1 - 0.09) / (2 - 0.09)
    line = next(l for l in out.splitlines() if l.startswith("{1}"))
    assert float(line.split(":")[1]) == pytest.approx(expected, abs=1e-12)


def test_infer_requires_an_action(capsys):
    assert run(["infer", RUNNING, RUNNING_DELTA]) == 1
    assert "nothing to do" in capsys.readouterr().err


def test_infer_bad_evidence(capsys):
    assert run([
        "infer", RUNNING, RUNNING_DELTA, "--posterior",
        "--prior", "nets/three_cells.delta", "--evidence", "7~1",
    ]) == 1


def test_configs(capsys):
    assert run(["configs", RUNNING]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert "{c,e,g}" in lines and "{d,e}" in lines  # place 1 unmarked
    assert len(lines) == 3


def test_oracle_check(capsys):
    assert run(["oracle-check", RUNNING, RUNNING_DELTA]) == 0
    out = capsys.readouterr().out
    assert "OK" in out and "MISMATCH" not in out


def test_oracle_check_confusion(capsys):
    assert run(["oracle-check", CONFUSION, CONFUSION_DELTA]) == 0


def test_diagram(capsys):
    assert run(["diagram", CONFUSION]) == 0
    out = capsys.readouterr().out
    assert out.count("->") == 3


def test_matrix_rejects_bad_wiring_override(capsys):
    assert run(["matrix", RUNNING, RUNNING_DELTA, "--in-order", "7"]) == 1
    assert "wire" in capsys.readouterr().err


def test_tolerance_env_override(monkeypatch, capsys):
    monkeypatch.setenv("CELLNET_TOLERANCE", "not-a-float")
    assert run(["matrix", RUNNING, RUNNING_DELTA]) == 1
    assert "CELLNET_TOLERANCE" in capsys.readouterr().err
    monkeypatch.setenv("CELLNET_TOLERANCE", "1e-6")
    assert run(["matrix", RUNNING, RUNNING_DELTA, "--keep", "7"]) == 0


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        run(["matrix"])                      # missing arguments
    assert exc.value.code == 2


def test_outputs_are_byte_stable(capsys):
    outputs = []
    for _ in range(2):
        assert run(["compile", RUNNING]) == 0
        outputs.append(capsys.readouterr().out)
    assert outputs[0] == outputs[1]


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["--version"])
    assert exc.value.code == 0

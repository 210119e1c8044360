import io
import json

import pytest

from pnltl import models
from pnltl.cli import BENCH_HEADER, MACHINE_KEYS, bench, main
from pnltl.petri import write_pnml


def run(fn, *argv):
    out, err = io.StringIO(), io.StringIO()
    code = fn(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def phils(tmp_path):
    net = tmp_path / "phils3.pnml"
    net.write_text(write_pnml(models.philosophers(3)))
    props = tmp_path / "props.ltl"
    props.write_text("# two properties\nG F is-fireable(takeL0)\nF (tokens-count(eat0) >= 1)\n")
    return str(net), str(props)


def test_two_formulas_two_lines(phils):
    code, out, _ = run(main, "--net", phils[0], "--formula", phils[1])
    assert code == 0
    lines = [l for l in out.splitlines() if l.startswith("[")]
    assert len(lines) == 2
    assert lines[0].startswith("[0] violated") and lines[1].startswith("[1] violated")
    assert "cycle:" in out


def test_machine_output_keys(phils):
    code, out, _ = run(main, "--net", phils[0], "--formula", phils[1], "--output", "machine")
    assert code == 0
    records = [json.loads(line) for line in out.splitlines()]
    assert len(records) == 2
    for r in records:
        assert set(MACHINE_KEYS) <= set(r)
        assert r["verdict"] in ("holds", "violated")


def test_machine_output_is_deterministic(phils):
    strip = lambda text: [{k: v for k, v in json.loads(l).items() if k not in ("wall-seconds", "peak-resident-bytes")}
                          for l in text.splitlines()]
    a = run(main, "--net", phils[0], "--formula", phils[1], "--output", "machine")[1]
    b = run(main, "--net", phils[0], "--formula", phils[1], "--output", "machine")[1]
    assert strip(a) == strip(b)


def test_inline_formula(phils):
    code, out, _ = run(main, "check", "--net", phils[0], "--formula", "G (tokens-count(eat0, eat1) <= 1)")
    assert code == 0
    assert out.startswith("[0] holds")


def test_timeout_is_resource_limit(tmp_path):
    net = tmp_path / "big.pnml"
    net.write_text(write_pnml(models.switches(24)))
    code, out, _ = run(main, "--net", str(net), "--formula", "G (tokens-count(on0) <= 0) || F is-fireable(down0)",
                       "--timeout", "1", "--output", "machine")
    assert code == 1
    assert json.loads(out)["verdict"] == "resource-limit"


def test_cannot_handle_exits_one(tmp_path):
    net = tmp_path / "source.pnml"
    net.write_text(write_pnml(models.source_overflow()))
    code, out, _ = run(main, "--net", str(net), "--formula", "G (tokens-count(p) <= 70000)")
    assert code == 1 and "cannot-handle" in out


def test_ori_matches_defaults(tmp_path):
    for net, formulas in models.corpus()[:8]:
        path = tmp_path / f"{net.name}.pnml"
        path.write_text(write_pnml(net))
        props = tmp_path / f"{net.name}.ltl"
        props.write_text("\n".join(formulas) + "\n")
        base = run(main, "--net", str(path), "--formula", str(props), "--output", "machine")[1]
        ori = run(main, "--net", str(path), "--formula", str(props), "--output", "machine",
                  "--hba", "off", "--dyn", "off", "--drw", "off")[1]
        verdicts = lambda text: [json.loads(l)["verdict"] for l in text.splitlines()]
        assert verdicts(base) == verdicts(ori)


@pytest.mark.parametrize("args", [
    ["--net", "missing.pnml", "--formula", "G is-fireable(t)"],
    ["--formula", "G is-fireable(t)"],
    ["--dyn", "maybe"],
])
def test_usage_errors(args):
    code, _, _ = run(main, *args)
    assert code == 2


def test_bad_inputs_exit_two(tmp_path, phils):
    bad = tmp_path / "bad.pnml"
    bad.write_text("<pnml><net")
    code, _, err = run(main, "--net", str(bad), "--formula", "G is-fireable(t)")
    assert code == 2 and "error" in err
    code, _, err = run(main, "--net", phils[0], "--formula", "G (is-fireable(takeL0)")
    assert code == 2 and "column" in err
    code, _, err = run(main, "--net", phils[0], "--formula", "G is-fireable(nobody)")
    assert code == 2 and "nobody" in err


def test_dump_layout_and_buchi(phils):
    code, out, _ = run(main, "--net", phils[0], "--formula", "F is-fireable(takeL0)", "--dump-layout",
                       "--dump-buchi", "--encoding", "default")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "place\tstart_pos\tbit_len"
    assert lines[1] == "think0\t0\t16"
    assert any(l.startswith("states ") for l in lines)


def test_bench_table(tmp_path, phils):
    dest = tmp_path / "bench.tsv"
    code, _, _ = run(bench, "--net", phils[0], "--formula", phils[1], "--out", str(dest))
    assert code == 0
    rows = [r.split("\t") for r in dest.read_text().splitlines()]
    assert tuple(rows[0]) == BENCH_HEADER
    assert len(rows) == 3
    head = rows[0]
    for row in rows[1:]:
        rec = dict(zip(head, row))
        t_ori, t_dyn = float(rec["T_ORI"]), float(rec["T_DYN"])
        if t_dyn:
            assert rec["dT1"] == f"{t_ori / t_dyn:.2f}"
        assert rec["dN"] == f"{int(rec['N_ORI']) / int(rec['N_HBA']):.2f}"
        assert rec["timeouts"] == "-"


def test_bench_timeout_rows_use_the_limit(tmp_path):
    net = tmp_path / "big.pnml"
    net.write_text(write_pnml(models.switches(24)))
    code, out, _ = run(bench, "--net", str(net), "--formula", "G (tokens-count(on0) <= 0) || F is-fireable(down0)",
                       "--timeout", "0.5")
    assert code == 1
    head, row = [r.split("\t") for r in out.splitlines()]
    rec = dict(zip(head, row))
    assert rec["timeouts"] == "ORI,DYN,DRW,HBA"
    assert float(rec["T_ORI"]) == 0.5

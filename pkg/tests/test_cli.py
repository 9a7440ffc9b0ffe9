import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from maxop.basis import Basis
from maxop.cli import dump_json, main
from maxop.grid import Domain, GridFunction, format_grid, load_grid, save_grid
from maxop.operators import HARMONIC, MeanKind, maximal
from maxop.weights import joint_harmonic_constant

DATA = Path(__file__).parent / "data"


@pytest.fixture
def grid(tmp_path):
    def make(vals, name="f.grid"):
        vals = np.asarray(vals, dtype=float)
        p = tmp_path / name
        save_grid(GridFunction(Domain(vals.shape, 1.0 / vals.shape[0]), vals), p)
        return str(p)
    return make


def test_compute_constant_input(grid, tmp_path):
    out = tmp_path / "out.grid"
    assert main(["compute", "--op", "m-1", "--basis", "dyadic", "--in", grid(np.full(8, 3.0)),
                 "--out", str(out)]) == 0
    assert np.all(load_grid(out).values == 3.0)


@pytest.mark.parametrize("op,r", [("m", None), ("m-1", None), ("m0", None), ("m-r", 0.5), ("mr", 2.0)])
def test_compute_matches_library_bytes(grid, tmp_path, op, r):
    rng = np.random.default_rng(1)
    f = rng.lognormal(size=(8, 8))
    s = rng.lognormal(size=(8, 8))
    fp, sp = grid(f), grid(s, "s.grid")
    out = tmp_path / "out.grid"
    argv = ["compute", "--op", op, "--basis", "cubes", "--in", fp, "--sigma", sp, "--out", str(out)]
    if r is not None:
        argv += ["--r", str(r)]
    assert main(argv) == 0
    want = maximal(MeanKind.parse(op, r), Basis("cubes", load_grid(fp).domain), load_grid(fp),
                   load_grid(sp))
    assert out.read_text() == format_grid(want)


def test_compute_stdout_and_minimal(grid, capsys):
    assert main(["compute", "--op", "min", "--in", grid([1, 3, 5, 7])]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [float(x) for x in lines[5:]] == [1, 2, 4, 4]


def test_usage_and_io_exit_codes(grid, tmp_path, capsys):
    fp = grid([1, 2, 3, 4])
    assert main(["compute", "--op", "m-r", "--in", fp]) == 2
    assert main(["compute", "--op", "bogus", "--in", fp]) == 2
    assert main(["compute", "--op", "m", "--in", str(tmp_path / "missing.grid")]) == 3
    bad = tmp_path / "bad.grid"
    bad.write_text("gridfn 1\ndim 1\nshape 4\nh 1\norigin 0\n1\n2\n")
    assert main(["compute", "--op", "m", "--in", str(bad)]) == 3
    assert main(["constants", "--which", "ap", "--p", "1", "--in", fp]) == 2
    assert main(["constants", "--which", "cond-a", "--alpha", "2", "--in", fp]) == 2
    assert main(["experiment", "--name", "nope"]) == 2
    assert main([]) == 2
    err = capsys.readouterr().err
    assert "maxop: error" in err


def test_inputs_are_not_modified(grid):
    fp = grid([1, 2, 3, 4])
    before = Path(fp).read_bytes()
    main(["compute", "--op", "m", "--in", fp])
    main(["constants", "--which", "ainfty", "--in", fp])
    assert Path(fp).read_bytes() == before


def test_constants_ainfty_on_constant_weight(grid, capsys):
    assert main(["constants", "--which", "ainfty", "--in", grid(np.full(16, 2.0))]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == 1


def test_constants_joint_golden(capsys):
    assert main(["constants", "--which", "joint", "--p", "1", "--u", str(DATA / "pair_u.grid"),
                 "--sigma", str(DATA / "pair_sigma.grid")]) == 0
    out = capsys.readouterr().out
    assert out == (DATA / "joint_p1.json").read_text()
    # hand oracle over the 7 dyadic intervals: [0,2) gives 2 / (1/2)^2
    u, s = [4, 0, 1, 1], [1, 0, 1, 2]
    best = max(Fraction(sum(u[a:a + n]), n) / Fraction(sum(s[a:a + n]), n) ** 2
               for n in (1, 2, 4) for a in range(0, 4, n) if sum(s[a:a + n]) > 0)
    assert best == 8 and json.loads(out)["value"] == 8
    lib = joint_harmonic_constant(load_grid(DATA / "pair_u.grid"), load_grid(DATA / "pair_sigma.grid"),
                                  Basis("dyadic", Domain((4,), h=0.25)), 1.0)
    assert out == dump_json(lib.to_json()) + "\n"


@pytest.mark.parametrize("which,extra", [
    ("ap", ["--p", "2"]), ("doubling", []), ("cond-a", ["--alpha", "0.5", "--exhaustive"]),
])
def test_constants_one_weight(grid, capsys, which, extra):
    assert main(["constants", "--which", which, "--in", grid([1, 1, 1, 8])] + extra) == 0
    assert "value" in json.loads(capsys.readouterr().out)


@pytest.mark.parametrize("which,extra", [
    ("bump-harmonic", ["--p", "1", "--r", "0.5"]), ("bump-arith", ["--p", "2", "--r", "2"]),
])
def test_constants_two_weight(capsys, which, extra):
    argv = ["constants", "--which", which, "--u", str(DATA / "pair_u.grid"),
            "--sigma", str(DATA / "pair_sigma.grid")] + extra
    assert main(argv) == 0
    assert json.loads(capsys.readouterr().out)["params"]["constant"] == which


def test_constants_tw_ainfty(grid, capsys):
    assert main(["constants", "--which", "tw-ainfty", "--u", grid([2, 2], "u.grid"),
                 "--v", grid([1, 4], "v.grid")]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == 2


def test_testing_and_normest(grid, capsys):
    u, s = grid([4, 0], "u.grid"), grid([1, 1], "s.grid")
    assert main(["testing", "--u", u, "--sigma", s, "--p", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["constant"] == 4
    assert main(["testing", "--kind", "geometric", "--u", grid([1, 1], "a.grid"),
                 "--v", grid([1, 4], "b.grid")]) == 0
    assert json.loads(capsys.readouterr().out)["constant"] == 1
    assert main(["normest", "--u", u, "--sigma", s, "--trials", "4", "--sweeps", "1"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["strong_ratio"] >= 4 and d["weak_ratio"] <= d["strong_ratio"]


def test_experiment_ordering(tmp_path, capsys):
    csv1, csv2 = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["experiment", "--name", "ordering", "--seed", "7", "--fields", "3", "--ladder", "16"]
    assert main(base + ["--csv", str(csv1), "--threads", "1"]) == 0
    assert main(base + ["--csv", str(csv2), "--threads", "4", "--json", str(tmp_path / "r.json")]) == 0
    assert csv1.read_bytes() == csv2.read_bytes()
    assert json.loads((tmp_path / "r.json").read_text())["passed"] is True
    assert "ordering: PASS" in capsys.readouterr().err


def test_experiment_weighted_geometric_reports_bound(tmp_path):
    js = tmp_path / "r.json"
    assert main(["experiment", "--name", "weighted-geometric-bound", "--p", "1", "--ladder", "64",
                 "--json", str(js)]) == 0
    rows = json.loads(js.read_text())["rows"]
    worst = [r["value"] for r in rows if r["quantity"] == "max_norm_ratio.p=1"]
    assert worst and worst[0] <= 2.71829


def test_experiment_config_file(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"fields": 2, "ladder": [8], "rect_side": 4}))
    monkeypatch.setenv("MAXOP_THREADS", "2")
    assert main(["experiment", "--name", "ordering", "--config", str(cfg)]) == 0
    assert capsys.readouterr().out.startswith("experiment,N,quantity,value\n")
    cfg.write_text("{not json")
    assert main(["experiment", "--name", "ordering", "--config", str(cfg)]) == 2
    assert main(["experiment", "--name", "ordering", "--config", str(tmp_path / "none.json")]) == 3


def test_gen_constant_and_sidecar(tmp_path):
    out = tmp_path / "c.grid"
    assert main(["gen", "--family", "constant", "--value", "1", "--n", "8", "--out", str(out)]) == 0
    assert np.all(load_grid(out).values == 1.0)
    side = json.loads((tmp_path / "c.grid.json").read_text())
    assert side["family"] == "constant" and side["params"] == {"value": 1}


def test_gen_power_closed_form(tmp_path):
    out = tmp_path / "p.grid"
    assert main(["gen", "--family", "power", "--a", "0.5", "--center", "0.5", "--n", "8",
                 "--out", str(out)]) == 0
    x = (np.arange(8) + 0.5) / 8
    np.testing.assert_allclose(load_grid(out).values, np.abs(x - 0.5) ** 0.5, rtol=1e-15)


def test_gen_is_deterministic(tmp_path):
    a, b, c = tmp_path / "a.grid", tmp_path / "b.grid", tmp_path / "c.grid"
    base = ["gen", "--family", "lognormal", "--n", "16,16", "--smooth", "1"]
    assert main(base + ["--seed", "5", "--out", str(a)]) == 0
    assert main(base + ["--seed", "5", "--out", str(b)]) == 0
    assert main(base + ["--seed", "6", "--out", str(c)]) == 0
    assert a.read_bytes() == b.read_bytes() != c.read_bytes()


def test_gen_bad_parameters(tmp_path):
    out = str(tmp_path / "x.grid")
    assert main(["gen", "--family", "zigzag", "--out", out]) == 2
    assert main(["gen", "--family", "constant", "--n", "6", "--out", out]) == 2
    assert main(["gen", "--family", "power", "--a", "-1", "--center", "0.0625", "--n", "8",
                 "--out", out]) == 2


def test_help_lists_every_command(capsys):
    assert main(["--help"]) == 0
    text = capsys.readouterr().out
    for cmd in ("compute", "constants", "testing", "normest", "experiment", "gen"):
        assert cmd in text

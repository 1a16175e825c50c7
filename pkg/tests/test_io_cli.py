import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tvising import cli
from tvising.core import Dataset
from tvising.evaluation import GridMismatchError, compare, evaluate, metrics_csv
from tvising.io import (
    DataFormatError,
    Scenario,
    ScenarioError,
    dataset_to_csv,
    load_scenario,
    parse_taus,
    read_dataset,
    truth_document,
)

CHAIN10 = {
    "p": 10, "n": 2000, "seed": 3, "method": "exact",
    "edges": [{"u": j, "v": j + 1, "kind": "constant", "value": 0.5} for j in range(9)],
    "kernel": "box", "bandwidth": 2.0, "taus": [0.5],
}


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def run(*argv):
    return cli.run([str(a) for a in argv])


# --- parsing --------------------------------------------------------------

def test_parse_taus_forms():
    assert parse_taus(0.3) == [0.3]
    assert parse_taus([0.1, 1]) == [0.1, 1.0]
    assert parse_taus("0.2,0.4") == [0.2, 0.4]
    assert parse_taus("grid:0:1:5") == [0.0, 0.25, 0.5, 0.75, 1.0]
    with pytest.raises(ValueError):
        parse_taus("grid:0:1")
    with pytest.raises(ValueError):
        parse_taus("grid:0:1:0")


def test_scenario_defaults():
    s = Scenario.from_dict({"p": 3, "n": 10})
    assert s.theta_min_eval == 0.1 and s.combine == "and" and s.taus == [0.5]


@pytest.mark.parametrize("patch, field", [
    ({"p": "three"}, "p"),
    ({"n": 0}, "n"),
    ({"method": "mcmc"}, "method"),
    ({"kernel": "gauss"}, "kernel"),
    ({"lambda": -1}, "lambda"),
    ({"taus": [0.5, 1.5]}, "taus[1]"),
    ({"edges": [{"u": 0, "v": 0, "kind": "constant"}]}, "edges[0]"),
    ({"edges": [{"u": 0, "v": 9, "kind": "constant"}]}, "edges[0].v"),
    ({"edges": [{"u": 0, "kind": "constant"}]}, "edges[0].v"),
    ({"edges": [{"u": 0, "v": 1, "kind": "sine"}]}, "edges[0]"),
    ({"bogus": 1}, "bogus"),
])
def test_scenario_errors_name_the_field(patch, field):
    d = {"p": 3, "n": 10, **patch}
    with pytest.raises(ScenarioError) as err:
        Scenario.from_dict(d)
    msg = str(err.value)
    assert msg.startswith(field), msg


edge_lists = st.lists(
    st.tuples(st.integers(0, 4), st.integers(0, 4), st.floats(-2, 2)).filter(lambda e: e[0] != e[1]),
    max_size=4, unique_by=lambda e: (min(e[:2]), max(e[:2])))


@given(edge_lists, st.integers(1, 10**5), st.integers(0, 2**31), st.sampled_from(["and", "or"]),
       st.one_of(st.none(), st.floats(1e-3, 2.0)), st.lists(st.floats(0, 1), min_size=1, max_size=5))
def test_scenario_json_round_trip(edges, n, seed, combine, lam, taus):
    d = {"p": 5, "n": n, "seed": seed, "combine": combine, "lambda": lam, "taus": taus,
         "edges": [{"u": u, "v": v, "kind": "constant", "value": val} for u, v, val in edges]}
    s = Scenario.from_dict(d)
    again = Scenario.from_dict(json.loads(json.dumps(s.to_dict())))
    assert again == s


def test_dataset_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    data = Dataset.equispaced(rng.choice([-1, 1], size=(7, 3)))
    path = tmp_path / "d.csv"
    path.write_text(dataset_to_csv(data))
    back = read_dataset(path)
    assert np.array_equal(back.X, data.X) and np.array_equal(back.times, data.times)


@pytest.mark.parametrize("body, needle", [
    ("t,x1,x2\n0.5,1,-1\n0.7,1\n", "line 3"),
    ("t,x1,x2\n0.5,1,-1\n0.7,1,2\n", "line 3: non-binary value '2'"),
    ("t,x1,x2\n0.5,1,-1\nabc,1,1\n", "line 3: bad time stamp"),
    ("time,a,b\n0.5,1,1\n", "line 1"),
    ("t,x1,x2\n0.7,1,1\n0.5,1,1\n", "increasing"),
    ("t,x1\n", "no data rows"),
])
def test_malformed_csv(tmp_path, body, needle):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(DataFormatError, match=needle):
        read_dataset(path)


def test_zero_one_ingestion(tmp_path):
    path = tmp_path / "z.csv"
    path.write_text("t,x1,x2\n0.5,0,1\n1.0,1,1\n")
    assert read_dataset(path, zero_one=True).X.tolist() == [[-1, 1], [1, 1]]
    with pytest.raises(DataFormatError, match="non-binary"):
        read_dataset(path)


# --- evaluation -----------------------------------------------------------

def test_compare_examples():
    truth = {(j, j + 1): 1 for j in range(9)}
    exact = compare(dict(truth), truth)
    assert exact.signed_exact and exact.f1 == 1.0
    empty = compare({}, truth)
    assert empty.recall == 0.0 and empty.precision == 0.0 and empty.f1 == 0.0
    extra = compare({**truth, (0, 5): -1}, truth)
    assert extra.precision == pytest.approx(0.9) and extra.recall == 1.0
    assert compare({}, {}).f1 == 1.0
    flipped = compare({**truth, (0, 1): -1}, truth)
    assert flipped.f1 == 1.0 and not flipped.signed_exact
    banded = compare({(0, 1): 1, (2, 3): 1}, {(0, 1): 1}, band={(2, 3)})
    assert banded.signed_exact and banded.precision == 1.0


def docs(est_edges, truth_edges, taus=(0.5,)):
    est = {"p": 4, "estimates": [{"tau": t, "edges": est_edges, "conflicts": [], "error": None} for t in taus]}
    truth = {"p": 4, "truth": [{"tau": t, "edges": truth_edges, "band": []} for t in taus]}
    return est, truth


def test_evaluate_documents_and_csv():
    e = [{"u": 0, "v": 1, "sign": 1}]
    est, truth = docs(e, e, taus=(0.2, 0.8))
    res = evaluate(est, truth)
    assert res.signed_exact and res.mean_f1 == 1.0
    rows = list(csv.reader(io.StringIO(metrics_csv(res))))
    assert rows[0][:4] == ["tau", "precision", "recall", "f1"] and len(rows) == 3
    truth["truth"][1]["tau"] = 0.9
    with pytest.raises(GridMismatchError):
        evaluate(est, truth)


def test_failed_tau_scores_as_empty():
    est, truth = docs([], [{"u": 0, "v": 1, "sign": 1}])
    est["estimates"][0]["error"] = "EmptyWindowError: nothing here"
    assert evaluate(est, truth).per_tau[0].recall == 0.0


# --- command line ---------------------------------------------------------

def test_simulate_shape_and_determinism(tmp_path):
    scen = write_json(tmp_path / "s.json", {"p": 4, "n": 100, "seed": 1, "edges": [
        {"u": 0, "v": 1, "kind": "constant", "value": 0.5}]})
    outs = []
    for k in range(2):
        d, t = tmp_path / f"d{k}.csv", tmp_path / f"t{k}.json"
        assert run("simulate", "--scenario", scen, "--out-data", d, "--out-truth", t) == 0
        outs.append((d.read_bytes(), t.read_bytes()))
    rows = list(csv.reader(io.StringIO(outs[0][0].decode())))
    assert len(rows) == 101 and all(len(r) == 5 for r in rows)
    assert rows[0] == ["t", "x1", "x2", "x3", "x4"]
    assert outs[0] == outs[1]


def test_truth_document_band():
    s = Scenario.from_dict({"p": 3, "n": 10, "taus": [0.5], "theta_min_eval": 0.1, "edges": [
        {"u": 0, "v": 1, "kind": "constant", "value": 0.05},
        {"u": 1, "v": 2, "kind": "constant", "value": -0.4}]})
    t = truth_document(s)["truth"][0]
    assert t["edges"] == [{"u": 1, "v": 2, "sign": -1, "theta": -0.4}]
    assert t["band"] == [{"u": 0, "v": 1, "theta": 0.05}]


def test_simulate_exact_p25_exits_2(tmp_path, capsys):
    scen = write_json(tmp_path / "s.json", {"p": 25, "n": 10, "method": "exact"})
    assert run("simulate", "--scenario", scen, "--out-data", tmp_path / "d.csv", "--out-truth", tmp_path / "t.json") == 2
    assert "enumeration limit" in capsys.readouterr().err


def test_invalid_scenario_exits_2(tmp_path, capsys):
    scen = write_json(tmp_path / "s.json", {"p": 4, "n": 10, "edges": [{"u": 0, "v": 7, "kind": "constant"}]})
    assert run("simulate", "--scenario", scen, "--out-data", tmp_path / "d.csv", "--out-truth", tmp_path / "t.json") == 2
    assert "edges[0].v" in capsys.readouterr().err


@pytest.fixture(scope="module")
def chain_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("chain")
    scen = write_json(root / "s.json", CHAIN10)
    assert run("simulate", "--scenario", scen, "--out-data", root / "d.csv", "--out-truth", root / "t.json") == 0
    return root


def test_estimate_reproduces_static_chain(chain_files, tmp_path):
    out = tmp_path / "e.json"
    assert run("estimate", "--data", chain_files / "d.csv", "--tau", "0.5", "--bandwidth", "2", "--out", out) == 0
    doc = json.loads(out.read_text())
    assert doc["p"] == 10 and doc["kernel"] == "box" and doc["combine"] == "and"
    (est,) = doc["estimates"]
    assert {(e["u"], e["v"], e["sign"]) for e in est["edges"]} == {(j, j + 1, 1) for j in range(9)}
    assert set(est["edges"][0]) == {"u", "v", "sign", "theta_uv_u", "theta_uv_v"}
    assert est["solver_stats"]["max_kkt_residual"] <= 1e-7
    ev, mc = tmp_path / "ev.json", tmp_path / "m.csv"
    assert run("evaluate", "--estimates", out, "--truth", chain_files / "t.json", "--out", ev, "--csv", mc) == 0
    assert json.loads(ev.read_text())["signed_exact"] is True


def test_estimate_empty_window_exits_2(chain_files, tmp_path, capsys):
    code = run("estimate", "--data", chain_files / "d.csv", "--tau", "0.50025", "--bandwidth", "1e-6",
               "--out", tmp_path / "e.json")
    assert code == 2
    assert "bandwidth window" in capsys.readouterr().err
    assert not (tmp_path / "e.json").exists()


def test_estimate_huge_lambda_gives_no_edges(chain_files, tmp_path):
    out = tmp_path / "e.json"
    assert run("estimate", "--data", chain_files / "d.csv", "--tau", "grid:0.2:0.8:3", "--lambda", "100",
               "--out", out) == 0
    doc = json.loads(out.read_text())
    assert [e["edges"] for e in doc["estimates"]] == [[], [], []]


def test_estimate_bad_csv_exits_2(tmp_path, capsys):
    path = tmp_path / "d.csv"
    path.write_text("t,x1,x2\n0.5,1,-1\n0.7,1,3\n")
    assert run("estimate", "--data", path, "--tau", "0.5", "--out", tmp_path / "e.json") == 2
    assert "line 3" in capsys.readouterr().err


def test_estimate_zero_one_flag(tmp_path):
    rng = np.random.default_rng(1)
    X = rng.integers(0, 2, size=(60, 3))
    lines = ["t,x1,x2,x3"] + [f"{(i + 1) / 60!r},{a},{b},{c}" for i, (a, b, c) in enumerate(X)]
    path = tmp_path / "z.csv"
    path.write_text("\n".join(lines) + "\n")
    assert run("estimate", "--data", path, "--zero-one", "--tau", "0.5", "--out", tmp_path / "e.json") == 0
    assert run("estimate", "--data", path, "--tau", "0.5", "--out", tmp_path / "e.json") == 2


def test_evaluate_grid_mismatch_exits_2(chain_files, tmp_path):
    out = tmp_path / "e.json"
    assert run("estimate", "--data", chain_files / "d.csv", "--tau", "0.4", "--out", out) == 0
    code = run("evaluate", "--estimates", out, "--truth", chain_files / "t.json", "--out", tmp_path / "ev.json",
               "--csv", tmp_path / "m.csv")
    assert code == 2


def test_diagnose(chain_files, tmp_path):
    out = tmp_path / "r.json"
    assert run("diagnose", "--scenario", chain_files / "s.json", "--data", chain_files / "d.csv", "--out", out) == 0
    doc = json.loads(out.read_text())
    (rep,) = doc["reports"]
    assert len(rep["nodes"]) == 10 and all(r["alpha"] > 0 for r in rep["nodes"])
    assert rep["deviations"]["reference"] == "truth"


def test_json_outputs_round_trip(chain_files, tmp_path):
    out = tmp_path / "e.json"
    assert run("estimate", "--data", chain_files / "d.csv", "--tau", "0.5", "--out", out) == 0
    doc = json.loads(out.read_text())
    assert json.loads(json.dumps(doc)) == doc
    truth = json.loads((chain_files / "t.json").read_text())
    assert Scenario.from_dict(truth["scenario"]) == load_scenario(chain_files / "s.json")


def test_internal_error_exits_1(chain_files, tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise ZeroDivisionError("unexpected")

    monkeypatch.setattr(cli, "cmd_diagnose", boom)
    assert run("diagnose", "--scenario", chain_files / "s.json", "--out", tmp_path / "r.json") == 1


def test_usage_error_exits_2():
    assert run("estimate") == 2
    assert run("frobnicate") == 2


# --- sweep ----------------------------------------------------------------

def sweep_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_sweep_single_cell_gives_one_row():
    scen = Scenario.from_dict({**CHAIN10, "n": 300})
    rows = sweep_rows(cli.cmd_sweep(scen, "n", [300.0], seeds=1, threads=1))
    assert len(rows) == 1 and rows[0]["status"] == "ok"
    assert list(rows[0]) == cli.SWEEP_COLUMNS


def test_lambda_sweep_edge_count_grows_as_lambda_falls():
    scen = Scenario.from_dict({**CHAIN10, "n": 1000})
    values = [2.0, 0.2, 0.05, 0.01, 0.002]
    rows = sweep_rows(cli.cmd_sweep(scen, "lambda", values, seeds=2, threads=2))
    for seed in ("3", "4"):
        counts = [int(r["n_est"]) for r in rows if r["seed"] == seed]
        assert counts[0] == 0 and counts == sorted(counts)


def test_sweep_records_failed_cells():
    scen = Scenario.from_dict({**CHAIN10, "n": 200, "taus": [0.5025]})
    rows = sweep_rows(cli.cmd_sweep(scen, "h", [1e-6, 1.0], seeds=1, threads=2))
    assert len(rows) == 2
    assert rows[0]["status"].startswith("error") and rows[1]["status"] == "ok"


def test_sweep_cli(tmp_path, monkeypatch):
    monkeypatch.setenv("TVISING_THREADS", "2")
    scen = write_json(tmp_path / "s.json", {**CHAIN10, "n": 300})
    out = tmp_path / "sw.csv"
    assert run("sweep", "--scenario", scen, "--axis", "n", "--values", "200,400", "--seeds", "2", "--out", out) == 0
    rows = sweep_rows(out.read_text())
    assert [(r["value"], r["seed"]) for r in rows] == [("200.0", "3"), ("200.0", "4"), ("400.0", "3"), ("400.0", "4")]
    monkeypatch.setenv("TVISING_THREADS", "many")
    assert run("sweep", "--scenario", scen, "--axis", "n", "--values", "200", "--out", out) == 2

import csv
import json

import pytest

from icq.cli import main


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen")
    cfg = out / "cfg.json"
    cfg.write_text(json.dumps({"n_objects": 15, "horizon": 1800, "min_lifespan": 900, "n_queries": 2,
                               "n_injected": 2, "room_rows": 2, "room_cols": 3}))
    assert main(["gen", "--config", str(cfg), "--seed", "4", "--out", str(out)]) == 0
    return out


def test_gen_outputs(data_dir):
    for name in ("floorplan.json", "trajectories.csv", "queries.json", "ground_truth.json", "config.json"):
        assert (data_dir / name).exists()
    assert json.loads((data_dir / "config.json").read_text())["seed"] == 4


def test_ingest(data_dir, tmp_path, capsys):
    out = tmp_path / "summary.json"
    assert main(["ingest", "--floorplan", str(data_dir / "floorplan.json"),
                 "--trajectories", str(data_dir / "trajectories.csv"), "--kprime", "6", "--out", str(out)]) == 0
    summary = json.loads(out.read_text())
    assert summary["objects"] == 19 and summary["kprime"] == 6


def test_query_file_and_single(data_dir, tmp_path):
    out = tmp_path / "results.csv"
    assert main(["query", "--data", str(data_dir), "--queries", str(data_dir / "queries.json"),
                 "--method", "sequential", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 2 and all(r["method"] == "sequential" for r in rows)
    q = json.loads((data_dir / "queries.json").read_text())[0]
    single = tmp_path / "one.csv"
    assert main(["query", "--data", str(data_dir), "--object", q["object"], "--t-start", str(q["t_start"]),
                 "--t-end", str(q["t_end"]), "--ll", "0.5", "--out", str(single)]) == 0
    one = list(csv.DictReader(single.open()))
    assert one[0]["method"] == "constrained"


def test_bench(data_dir, tmp_path):
    sweep = tmp_path / "sweep.json"
    sweep.write_text(json.dumps({"dimensions": ["k", "delta"], "values": {"k": [6, 18], "delta": [2.0]},
                                 "methods": ["constrained", "raw"]}))
    out = tmp_path / "tables"
    assert main(["bench", "--data", str(data_dir), "--config", str(sweep), "--out", str(out)]) == 0
    assert (out / "sweep_k.csv").exists() and (out / "sweep_delta.csv").exists()
    lines = (out / "sweep_k.csv").read_text().splitlines()
    assert len(lines) == 2 + 4


def test_validation_failures_exit_nonzero(data_dir, tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("object_id,x,y,floor,t,et\na,1,1,0,0,x\n")
    code = main(["ingest", "--floorplan", str(data_dir / "floorplan.json"), "--trajectories", str(bad)])
    assert code != 0 and "bad.csv:2" in capsys.readouterr().err
    plan = tmp_path / "plan.json"
    plan.write_text("{")
    code = main(["ingest", "--floorplan", str(plan), "--trajectories", str(bad)])
    assert code != 0 and "plan.json" in capsys.readouterr().err
    code = main(["query", "--data", str(data_dir), "--object", "nobody"])
    assert code != 0
    with pytest.raises(SystemExit):
        main(["query", "--data", str(data_dir), "--method", "fastest"])

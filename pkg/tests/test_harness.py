import csv
import json
import re

import numpy as np
import pytest

import robggm.harness.experiment as experiment
from robggm import ConfigurationError
from robggm.cli import main
from robggm.graphest import EdgeSet
from robggm.harness import (
    CsvParseError,
    ExperimentConfig,
    emit_plots,
    ingest_csv,
    load_config,
    parse_estimator,
    read_edges,
    run_experiment,
    write_edges,
)
from robggm.harness.experiment import METRIC_COLUMNS

SMALL = dict(graph="chain", p=12, n=60, eps=0.1, replicates=2, lambda_count=4)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# configuration

def test_parse_estimator():
    assert parse_estimator("gamma@0.5") == ("gamma", 0.5)
    assert parse_estimator("gamma") == ("gamma", 0.3)
    assert parse_estimator(" kendall ") == ("kendall", None)
    for bad in ("clime", "gamma@x", "gamma@-1", "kendall@2", "mcd"):
        with pytest.raises(ConfigurationError):
            parse_estimator(bad)


def test_config_canonical_tags_and_dedup():
    cfg = ExperimentConfig(estimators="gamma@0.30, gamma, kendall")
    assert cfg.estimators == ("gamma@0.3", "kendall")


@pytest.mark.parametrize("bad", [
    dict(graph="star"), dict(p=1), dict(eps=2.0), dict(estimators=[]),
    dict(graph_method="clime"), dict(selection="aic"), dict(selection="cv2", graph_method="nodewise"),
    dict(selection="stars"), dict(n=10), dict(replicates=0), dict(lambda_count=1),
    dict(graph="hub", p=30), dict(threads=0), dict(rule="xor"), dict(scenario="left"),
])
def test_config_validation(bad):
    with pytest.raises(ConfigurationError):
        ExperimentConfig(**bad)


def test_load_ini_and_json_agree(tmp_path):
    ini = tmp_path / "exp.ini"
    ini.write_text("[experiment]\ngraph = random\np = 20\neps = 0.05  # light\n"
                   "estimators = gamma@0.1, kendall\ncv_symmetric = yes\n")
    js = tmp_path / "exp.json"
    js.write_text(json.dumps({"experiment": {"graph": "random", "p": 20, "eps": 0.05,
                                             "estimators": ["gamma@0.1", "kendall"],
                                             "cv_symmetric": True}}))
    a, b = load_config(ini), load_config(js)
    assert a == b
    assert a.p == 20 and a.cv_symmetric and a.estimators == ("gamma@0.1", "kendall")


def test_load_sectionless_ini(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("p = 30\nreplicates = 3\n")
    cfg = load_config(path)
    assert (cfg.p, cfg.replicates) == (30, 3)


def test_load_unknown_key(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text("[experiment]\nwidth = 3\n")
    with pytest.raises(ConfigurationError, match="width"):
        load_config(path)


# CSV and edge files

def test_ingest_plain(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("1,2\n3,4")
    d = ingest_csv(path)
    np.testing.assert_array_equal(d.values, [[1, 2], [3, 4]])
    assert d.names is None


def test_ingest_header(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,b,c\n1,2,3\n")
    d = ingest_csv(path, has_header=True)
    assert d.values.shape == (1, 3) and d.names == ("a", "b", "c")


@pytest.mark.parametrize("text,line", [("1,x\n", 1), ("1,2\n3\n", 2), ("1,2\n\n3,nan\n", 3), ("", 1)])
def test_ingest_errors(tmp_path, text, line):
    path = tmp_path / "d.csv"
    path.write_text(text)
    with pytest.raises(CsvParseError) as info:
        ingest_csv(path)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_edges_round_trip(tmp_path):
    edges = EdgeSet(5, {(0, 1), (3, 4)})
    path = tmp_path / "e.txt"
    write_edges(path, edges)
    assert path.read_text() == "# p=5\n1 2\n4 5\n"
    assert read_edges(path) == edges


# campaigns

def test_smoke_clean_single_replicate(tmp_path):
    res = run_experiment(ExperimentConfig(p=12, n=60, eps=0.0, replicates=1, out=str(tmp_path),
                                          estimators=["gamma"]))
    assert res.exit_code == 0
    rows = read_csv(tmp_path / "metrics.csv")
    assert len(rows) == 1
    assert all(np.isfinite(float(rows[0][c])) for c in ("tpr", "fpr", "mse", "supnorm"))
    for name in ("summary.csv", "roc.csv", "config.json", "supnorm_boxplot.svg", "roc.svg",
                 "boxplot_data.csv", "roc_plot_data.csv", "truth/edges.txt", "truth/omega.csv",
                 "estimates/gamma@0.3/sigma_hat.csv", "estimates/gamma@0.3/omega_hat.csv",
                 "estimates/gamma@0.3/edges.txt"):
        assert (tmp_path / name).exists(), name


def test_metrics_rows_and_summary_consistency(tmp_path):
    cfg = ExperimentConfig(**SMALL, estimators=["gamma", "kendall"], out=str(tmp_path))
    run_experiment(cfg, plots=False)
    rows = read_csv(tmp_path / "metrics.csv")
    assert list(rows[0]) == list(METRIC_COLUMNS)
    assert len(rows) == 2 * 2
    for r in rows:
        assert r["estimator"] and r["lambda"] and r["seed"] and r["status"] == "ok"
    assert [r["seed"] for r in rows] == ["0", "0", "1", "1"]
    summary = {r["estimator"]: r for r in read_csv(tmp_path / "summary.csv")}
    for tag in ("gamma@0.3", "kendall"):
        mine = [r for r in rows if r["estimator"] == tag]
        for stat in ("lambda", "mse", "tpr", "fpr", "supnorm"):
            vals = [float(r[stat]) for r in mine]
            assert abs(float(summary[tag][f"{stat}_mean"]) - np.mean(vals)) <= 1e-12
            assert float(summary[tag][f"{stat}_sd"]) == pytest.approx(np.std(vals, ddof=1), abs=1e-12)


def test_roc_selection_rows(tmp_path):
    cfg = ExperimentConfig(**SMALL, estimators=["kendall"], selection="roc", out=str(tmp_path))
    res = run_experiment(cfg, plots=False)
    rows = read_csv(tmp_path / "metrics.csv")
    assert len(rows) == 2 * 4
    roc = read_csv(tmp_path / "roc.csv")
    assert [int(r["lambda_index"]) for r in roc] == [0, 1, 2, 3]
    assert 0 <= res.roc["kendall"][1] <= 1
    summary = read_csv(tmp_path / "summary.csv")
    assert len(summary) == 4


def test_nodewise_stars_campaign(tmp_path):
    cfg = ExperimentConfig(**SMALL, estimators=["kendall"], graph_method="nodewise",
                           selection="stars", out=str(tmp_path))
    res = run_experiment(cfg, plots=False)
    assert res.exit_code == 0
    assert (tmp_path / "estimates/kendall/beta_hat.csv").exists()
    assert read_csv(tmp_path / "metrics.csv")[0]["mse"] == "nan"


def test_determinism_and_threads(tmp_path):
    outs = []
    for k, threads in enumerate((1, 1, 2)):
        out = tmp_path / f"run{k}"
        run_experiment(ExperimentConfig(**SMALL, estimators=["gamma", "gk_qn"], out=str(out),
                                        threads=threads), plots=False)
        outs.append({n: (out / n).read_bytes() for n in ("metrics.csv", "summary.csv", "roc.csv")})
    assert outs[0] == outs[1] == outs[2]


def test_failure_sentinel(tmp_path, monkeypatch):
    real = experiment.assemble_cov
    calls = {"n": 0}

    def flaky(x, method, **kw):
        calls["n"] += 1
        if calls["n"] > 1:
            raise RuntimeError("boom")
        return real(x, method, **kw)

    monkeypatch.setattr(experiment, "assemble_cov", flaky)
    cfg = ExperimentConfig(**SMALL, estimators=["kendall"], selection="roc", out=str(tmp_path))
    res = run_experiment(cfg)
    assert res.failed and res.exit_code == 1
    rows = read_csv(tmp_path / "metrics.csv")
    assert rows[-1]["estimator"] == "FAILED" and "boom" in rows[-1]["status"]
    assert all(r["status"] == "ok" for r in rows[:-1]) and len(rows) == 5


# plots

def write_results(d, roc_tags):
    (d / "metrics.csv").write_text(
        ",".join(METRIC_COLUMNS) + "\n"
        + "".join(f"0,0,{t},glasso,cv2,0,0.1,0.2,0.9,0.1,0.5,3,ok\n" for t in roc_tags))
    (d / "roc.csv").write_text(
        "estimator,lambda_index,fpr,tpr,auc\n"
        + "".join(f"{t},{k},{0.2 * k},{0.3 * k},0.6\n" for t in roc_tags for k in range(3)))


def test_plots_one_curve(tmp_path):
    write_results(tmp_path, ["gamma@0.3"])
    paths = emit_plots(tmp_path)
    assert [p.name for p in paths] == ["supnorm_boxplot.svg", "roc.svg"]
    svg = (tmp_path / "roc.svg").read_text()
    assert len(re.findall(r'id="roc-curve-', svg)) == 1
    data = read_csv(tmp_path / "roc_plot_data.csv")
    assert (data[0]["fpr"], data[0]["tpr"]) == ("0", "0")
    assert len(data) == 4


def test_plots_legend_two_series(tmp_path):
    write_results(tmp_path, ["gamma@0.3", "kendall"])
    emit_plots(tmp_path)
    svg = (tmp_path / "roc.svg").read_text()
    assert len(re.findall(r'id="roc-curve-', svg)) == 2
    assert "gamma@0.3" in svg and "kendall" in svg
    first = (tmp_path / "roc.svg").read_bytes()
    emit_plots(tmp_path)
    assert (tmp_path / "roc.svg").read_bytes() == first


def test_plots_errors(tmp_path):
    with pytest.raises(ConfigurationError):
        emit_plots(tmp_path)
    (tmp_path / "metrics.csv").write_text(",".join(METRIC_COLUMNS) + "\n")
    (tmp_path / "roc.csv").write_text("estimator,lambda_index,fpr,tpr,auc\n")
    with pytest.raises(ConfigurationError):
        emit_plots(tmp_path)


# command line

def test_cli_pipeline(tmp_path, capsys):
    gen, est = tmp_path / "gen", tmp_path / "est"
    assert main(["generate", "--graph", "chain", "--p", "10", "--n", "80", "--eps", "0.1",
                 "--seed", "3", "--out", str(gen)]) == 0
    data = ingest_csv(gen / "data.csv", has_header=True)
    assert data.values.shape == (80, 10) and data.names[0] == "X1"
    assert main(["estimate", "--data", str(gen / "data.csv"), "--header", "--gamma", "0.5",
                 "--target-edges", "9", "--out", str(est)]) == 0
    assert len(read_edges(est / "edges.txt")) == 9
    capsys.readouterr()
    assert main(["evaluate", "--truth-edges", str(gen / "edges.txt"), "--omega-hat",
                 str(est / "omega_hat.csv"), "--omega", str(gen / "omega.csv"),
                 "--sigma-hat", str(est / "sigma_hat.csv"), "--sigma", str(gen / "sigma.csv")]) == 0
    result = json.loads(capsys.readouterr().out)
    assert set(result) == {"tpr", "fpr", "n_edges", "mse", "supnorm"} and result["n_edges"] == 9
    assert main(["select", "--data", str(gen / "data.csv"), "--header", "--estimator", "kendall",
                 "--out", str(tmp_path / "sel")]) == 0
    sel = read_csv(tmp_path / "sel" / "selection.csv")
    assert len(sel) == 10 and sum(int(r["selected"]) for r in sel) == 1
    assert main(["estimate", "--data", str(gen / "data.csv"), "--header", "--estimator", "sample",
                 "--lambda", "0.1", "--graph-method", "nodewise", "--out", str(est)]) == 0
    assert (est / "beta_hat.csv").exists()


def test_cli_run_and_plot(tmp_path, capsys):
    cfg = tmp_path / "exp.ini"
    cfg.write_text("[experiment]\np = 10\nn = 60\nreplicates = 2\nlambda_count = 4\n"
                   "estimators = kendall\n")
    out = tmp_path / "res"
    assert main(["run", "--config", str(cfg), "--gamma", "0.1", "--gamma", "0.5",
                 "--estimator", "gamma", "--estimator", "kendall", "--scenario", "sym",
                 "--eps", "0.2", "--out", str(out), "--seed", "4"]) == 0
    saved = json.loads((out / "config.json").read_text())
    assert saved["estimators"] == ["gamma@0.1", "gamma@0.5", "kendall"]
    assert saved["scenario"] == "symmetric" and saved["seed"] == 4 and saved["p"] == 10
    (out / "roc.svg").unlink()
    assert main(["plot", "--out", str(out)]) == 0
    assert (out / "roc.svg").exists()


def test_cli_errors(tmp_path, capsys):
    assert main(["run", "--estimator", "clime", "--out", str(tmp_path)]) == 2
    assert "reserved" in capsys.readouterr().err
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,x\n")
    assert main(["estimate", "--data", str(bad), "--out", str(tmp_path)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["plot", "--out", str(tmp_path / "nothing")]) == 2
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_cli_help_lists_defaults(capsys):
    with pytest.raises(SystemExit):
        main(["generate", "--help"])
    assert "default: 100" in capsys.readouterr().out

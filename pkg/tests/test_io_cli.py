import json
import subprocess
import sys

import numpy as np
import pytest

from continuum.classifier import fit_cda
from continuum.cli import main
from continuum.errors import CsvParseError
from continuum.io import load_csv, parse_csv, to_tsv
from continuum.scatter import Dataset
from continuum.selection import cv_gamma


def write_csv(path, X, labels=None):
    """Rows-as-observations CSV; floats written with repr so they round-trip."""
    p = X.shape[0]
    head = [f"x{j}" for j in range(p)] + (["cls"] if labels is not None else [])
    lines = [",".join(head)]
    for i in range(X.shape[1]):
        cells = [repr(float(v)) for v in X[:, i]]
        if labels is not None:
            cells.append(str(labels[i]))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def binary_csv(tmp_path, rng):
    X = rng.standard_normal((4, 40))
    y = np.repeat(["a", "b"], 20)
    X[:2, :20] += 1.5
    return write_csv(tmp_path / "train.csv", X, y), X, y


def test_parse_small_csv():
    ds = parse_csv("f1,f2,label\n1,2,a\n3,4,b\n5,6,a\n", "label")
    assert (ds.p, ds.n) == (2, 3)
    np.testing.assert_array_equal(ds.X, [[1, 3, 5], [2, 4, 6]])
    assert ds.labels.tolist() == ["a", "b", "a"]


def test_blank_lines_are_ignored():
    ds = parse_csv("f1,f2\n1,2\n\n3,4\n\n")
    assert ds.n == 2


@pytest.mark.parametrize("text,fragment", [
    ("f1,f2\n1,NaN\n2,3\n", "line 2, column 'f2'"),
    ("f1,f2\n1,2\nx,3\n", "line 3, column 'f1'"),
    ("f1,f2\n1,inf\n", "non-finite"),
    ("f1,f2\n1,2,3\n", "expected 2 fields"),
    ("", "empty"),
    ("f1,f2\n", "no data rows"),
])
def test_parse_errors_name_the_location(text, fragment):
    with pytest.raises(CsvParseError, match=fragment):
        parse_csv(text)


def test_missing_label_column():
    with pytest.raises(CsvParseError, match="label column"):
        parse_csv("f1,f2\n1,2\n", "label")


def test_tsv_round_trips_floats():
    v = 0.1 + 0.2
    text = to_tsv(["a", "b"], [[v, np.float64(np.inf)], [np.int64(3), "x"]])
    rows = [line.split("\t") for line in text.splitlines()]
    assert float(rows[1][0]) == v and rows[1][1] == "inf" and rows[2] == ["3", "x"]


def test_load_csv_matches_parse(binary_csv):
    path, X, y = binary_csv
    ds = load_csv(path, "cls")
    np.testing.assert_array_equal(ds.X, X)
    np.testing.assert_array_equal(ds.labels, y)


def test_path_command(binary_csv, capsys):
    path, _, _ = binary_csv
    assert main(["path", "-i", str(path), "--labels", "cls", "--grid-size", "10"]) == 0
    points = json.loads(capsys.readouterr().out)
    gammas = [float(p["gamma"]) for p in points]
    assert gammas == sorted(gammas)
    assert points[0]["kind"] == "MDP" and points[-1]["kind"] == "PCA"
    assert points[-1]["gamma"] == "inf"


def test_cv_fit_predict_round_trip(binary_csv, tmp_path, rng, capsys):
    path, X, y = binary_csv
    grid = "0,0.1,1,5"
    assert main(["cv", "-i", str(path), "--labels", "cls", "--gamma-grid", grid,
                 "--folds", "5", "--seed", "3"]) == 0
    rep = json.loads(capsys.readouterr().out)
    lib = cv_gamma(Dataset(X, y), [0, 0.1, 1, 5], folds=5, seed=3)
    assert rep["chosen_gamma"] == lib.chosen_gamma
    np.testing.assert_array_equal(rep["cv_error"], lib.cv_error)

    model_path = tmp_path / "model.json"
    assert main(["fit", "-i", str(path), "--labels", "cls", "--gamma", str(rep["chosen_gamma"]),
                 "-o", str(model_path)]) == 0
    Xt = rng.standard_normal((4, 25))
    test_path = write_csv(tmp_path / "test.csv", Xt)
    assert main(["predict", "-i", str(test_path), "--model", str(model_path)]) == 0
    pred = json.loads(capsys.readouterr().out)["predictions"]
    expected = fit_cda(Dataset(X, y), lib.chosen_gamma).predict(Xt)
    assert pred == expected.tolist()


def test_fit_without_gamma_runs_cv(binary_csv, tmp_path):
    path, _, _ = binary_csv
    out = tmp_path / "m.json"
    assert main(["fit", "-i", str(path), "--labels", "cls", "--gamma-grid", "0.5,2",
                 "--folds", "4", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["gamma"] in (0.5, 2.0)


def test_outputs_are_byte_identical(binary_csv, tmp_path):
    path, _, _ = binary_csv
    texts = []
    for k in range(2):
        out = tmp_path / f"basis{k}.json"
        assert main(["basis", "-i", str(path), "--labels", "cls", "--gamma", "0.7",
                     "-o", str(out)]) == 0
        texts.append(out.read_bytes())
    assert texts[0] == texts[1]


def test_config_file_is_overridden_by_flags(binary_csv, tmp_path, capsys):
    path, _, _ = binary_csv
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"input": str(path), "labels": "cls", "gamma": 5.0}))
    assert main(["basis", "--config", str(cfg), "--gamma", "0.25"]) == 0
    assert json.loads(capsys.readouterr().out)["gamma"] == 0.25


def test_tsv_format(binary_csv, capsys):
    path, _, _ = binary_csv
    assert main(["cv", "-i", str(path), "--labels", "cls", "--gamma-grid", "0.5,1",
                 "--folds", "4", "--format", "tsv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "gamma\tcv_error" and len(lines) == 3


def test_exit_codes(binary_csv, tmp_path, capsys):
    path, _, _ = binary_csv
    assert main(["nonsense"]) == 2
    assert "usage" in capsys.readouterr().err
    assert main(["path", "-i", str(tmp_path / "missing.csv"), "--labels", "cls"]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("x0,x1,cls\n1,oops,a\n")
    assert main(["path", "-i", str(bad), "--labels", "cls"]) == 3
    assert "line 2" in capsys.readouterr().err
    same = write_csv(tmp_path / "same.csv", np.ones((2, 6)), ["a", "b"] * 3)
    assert main(["path", "-i", str(same), "--labels", "cls"]) == 4
    assert main(["basis", "-i", str(path), "--labels", "cls"]) == 2
    assert main(["cv", "-i", str(path), "--labels", "cls", "--format", "table"]) == 2


def test_simulate_and_hdlss_commands(capsys):
    assert main(["simulate", "--p", "20", "--s", "4", "--n-per-class", "10",
                 "--n-test-per-class", "10", "--replications", "2", "--folds", "5",
                 "--gamma-grid", "0,1", "--methods", "CDA,LDA,Bayes", "--format", "table"]) == 0
    out = capsys.readouterr().out
    assert "CDA" in out and "Bayes" in out
    assert main(["hdlss", "--p-sequence", "20,40", "--replications", "2"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert [r["p"] for r in doc["rows"]] == [20, 40]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "continuum", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "continuum" in res.stdout
    res = subprocess.run([sys.executable, "-m", "continuum", "bogus"], capture_output=True, text=True)
    assert res.returncode == 2 and "usage" in res.stderr

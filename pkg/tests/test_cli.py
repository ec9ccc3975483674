import csv
import json

import numpy as np
import pytest

from seisdamage.cli import COMPARISON_COLUMNS, main
from seisdamage.dataset import FEATURE_COLUMNS, read_table


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(line for line in fh if not line.startswith("#")))


def _error(capsys):
    lines = [ln for ln in capsys.readouterr().err.splitlines() if ln.startswith("seisdamage-error ")]
    assert len(lines) == 1
    return json.loads(lines[0].split(" ", 1)[1])


@pytest.fixture(scope="module")
def small_table(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--seed", "3", "-n", "240", "--out-dir", str(d)]) == 0
    return d / "table.csv"


# ---------------------------------------------------------------------------
# synth / compare


def test_synth_writes_labeled_table(small_table):
    t = read_table(small_table)
    assert len(t) == 240 and t.columns == FEATURE_COLUMNS
    assert np.bincount(t.labels).tolist() == [96, 84, 60]


def test_compare_report_shape_and_order(small_table, tmp_path):
    assert main(["compare", str(small_table), "--folds", "4", "--out-dir", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "comparison.csv")
    assert tuple(rows[0]) == COMPARISON_COLUMNS
    body = rows[1:]
    assert len(body) == 8
    assert [r[0] for r in body] == [str(i) for i in range(1, 9)]
    acc = [float(r[2]) for r in body]
    assert acc == sorted(acc, reverse=True)
    assert len({r[1] for r in body}) == 8
    for name in ("svm-rbf", "qda"):
        cm = np.array(_rows(tmp_path / f"confusion_{name}.csv")[1:], dtype=float)[:, 1:]
        assert cm.sum() == 240
        assert len(_rows(tmp_path / f"folds_{name}.csv")) == 5


def test_compare_single_model_and_config(small_table, tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[compare]\nfolds = 3\nmodels = knn\n\n[model:knn]\nk = 1\n")
    assert main(["compare", str(small_table), "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == 0
    rows = _rows(tmp_path / "o" / "comparison.csv")
    assert len(rows) == 2 and rows[1][1] == "k-Neighbors Classifier"
    assert len(_rows(tmp_path / "o" / "folds_knn.csv")) == 4


def test_compare_deterministic_except_time(small_table, tmp_path):
    outs = []
    for sub, workers in (("a", "1"), ("b", "2")):
        d = tmp_path / sub
        assert main(["compare", str(small_table), "--folds", "3", "--models", "svm-gaussian,cart",
                     "--workers", workers, "--out-dir", str(d)]) == 0
        outs.append(d)
    a, b = outs
    assert sorted(p.name for p in a.iterdir()) == sorted(p.name for p in b.iterdir())
    for p in a.iterdir():
        ra, rb = _rows(p), _rows(b / p.name)
        if "Time/sec" in ra[0]:
            k = ra[0].index("Time/sec")
            ra = [r[:k] + r[k + 1:] for r in ra]
            rb = [r[:k] + r[k + 1:] for r in rb]
        assert ra == rb, p.name


def test_train_writes_model(small_table, tmp_path):
    assert main(["train", str(small_table), "--model", "svm-polynomial", "--param", "c=2",
                 "--out-dir", str(tmp_path)]) == 0
    from seisdamage.models.registry import loads_model
    doc = loads_model((tmp_path / "model_svm-polynomial.json").read_text())
    assert doc["config"].resolved()["c"] == 2.0
    assert doc["columns"] == FEATURE_COLUMNS


# ---------------------------------------------------------------------------
# extract


def _records(tmp_path):
    rec = tmp_path / "records"
    rec.mkdir()
    rng = np.random.default_rng(0)
    for i in range(3):
        a = rng.standard_normal(400) * np.hanning(400) * (i + 1)
        lines = [f"{k * 0.01:.2f} {float(v)!r}" for k, v in enumerate(a)]
        (rec / f"r{i}.txt").write_text("# time acc\n" + "\n".join(lines) + "\n")
    (tmp_path / "structural.csv").write_text(
        "id,Htot,nvx,nvy,e0\nr0,9.0,0.5,0.5,0.0\nr1,12.0,0.2,0.8,0.1\nr2,15.0,0.0,1.0,0.3\n")
    (tmp_path / "midr.csv").write_text("id,MIDR\nr0,0.2\nr1,0.7\nr2,2.0\n")
    return rec


def test_extract_table(tmp_path):
    rec = _records(tmp_path)
    args = ["extract", str(rec), "--structural", str(tmp_path / "structural.csv"),
            "--midr", str(tmp_path / "midr.csv")]
    assert main(args + ["--out-dir", str(tmp_path / "a")]) == 0
    rows = _rows(tmp_path / "a" / "table.csv")
    assert len(rows[0]) == 20 and len(rows) == 4
    assert [r[-1] for r in rows[1:]] == ["0", "1", "2"]
    assert main(args + ["--out-dir", str(tmp_path / "b"), "--workers", "2"]) == 0
    assert (tmp_path / "a" / "table.csv").read_bytes() == (tmp_path / "b" / "table.csv").read_bytes()


def test_extract_missing_id_named(tmp_path, capsys):
    rec = _records(tmp_path)
    (tmp_path / "structural.csv").write_text("id,Htot,nvx,nvy,e0\nr0,9.0,0.5,0.5,0.0\nr2,15.0,0.0,1.0,0.3\n")
    out = tmp_path / "out"
    assert main(["extract", str(rec), "--structural", str(tmp_path / "structural.csv"),
                 "--out-dir", str(out)]) == 1
    err = _error(capsys)
    assert err["code"] == "id_mismatch" and "'r1'" in err["message"]
    assert not out.exists()


# ---------------------------------------------------------------------------
# preprocess


def test_preprocess_reports(small_table, tmp_path):
    assert main(["preprocess", str(small_table), "--out-dir", str(tmp_path), "--normalized-copy"]) == 0
    norm = _rows(tmp_path / "normalization.csv")
    assert len(norm) == 1 + len(FEATURE_COLUMNS)
    scree = np.array(_rows(tmp_path / "pca_scree.csv")[1:], dtype=float)
    assert abs(scree[:, 2].sum() - 1.0) < 1e-9 and abs(scree[-1, 3] - 1.0) < 1e-9
    assert np.all(np.diff(scree[:, 1]) <= 0)
    pps = _rows(tmp_path / "pps.csv")[1:]
    # targets are the features plus MIDR and CLASS
    assert len(pps) == len(FEATURE_COLUMNS) * (len(FEATURE_COLUMNS) + 2)
    assert all(float(r[2]) == 1.0 for r in pps if r[0] == r[1])
    assert all(0.0 <= float(r[2]) <= 1.0 for r in pps)
    scaled = read_table(tmp_path / "table_normalized.csv")
    assert scaled.scaled and scaled.features.min() >= 0.0 and scaled.features.max() <= 1.0


def test_preprocess_flags_constant_column(tmp_path):
    rows = _rows(_write_constant_table(tmp_path))
    assert rows[0][0] == "Htot"
    assert main(["preprocess", str(tmp_path / "const.csv"), "--out-dir", str(tmp_path / "o")]) == 0
    norm = {r[0]: r for r in _rows(tmp_path / "o" / "normalization.csv")[1:]}
    assert norm["e0"][5] == "1" and norm["Htot"][5] == "0"


def _write_constant_table(tmp_path):
    assert main(["synth", "-n", "60", "--out-dir", str(tmp_path)]) == 0
    src = (tmp_path / "table.csv").read_text().splitlines()
    header = src[1].split(",")
    j = header.index("e0")
    out = src[:2]
    for line in src[2:]:
        cells = line.split(",")
        cells[j] = "0.25"
        out.append(",".join(cells))
    path = tmp_path / "const.csv"
    path.write_text("\n".join(out) + "\n")
    return path


# ---------------------------------------------------------------------------
# failures


def test_missing_table_error_line(tmp_path, capsys):
    assert main(["compare", str(tmp_path / "nope.csv"), "--out-dir", str(tmp_path / "o")]) == 1
    err = _error(capsys)
    assert err == {"command": "compare", "code": "missing_input", "type": "CliError",
                   "message": f"table not found: {tmp_path / 'nope.csv'}"}


def test_unknown_model_rolls_back(small_table, tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["compare", str(small_table), "--models", "knn,forest", "--out-dir", str(out)]) == 1
    assert _error(capsys)["code"] == "unknown_model"
    assert not out.exists()


def test_failure_midway_removes_written_files(small_table, tmp_path, capsys):
    out = tmp_path / "o"
    out.mkdir()
    keep = out / "keep.txt"
    keep.write_text("x")
    # k larger than n fails after nothing is written; a bad fold count fails the plan
    assert main(["compare", str(small_table), "--folds", "1000", "--out-dir", str(out)]) == 1
    assert _error(capsys)["code"] == "bad_argument"
    assert sorted(p.name for p in out.iterdir()) == ["keep.txt"]


def test_bad_record_error_code(tmp_path, capsys):
    rec = _records(tmp_path)
    (rec / "r1.txt").write_text("0.0 1.0\n0.01 abc\n")
    assert main(["extract", str(rec), "--structural", str(tmp_path / "structural.csv"),
                 "--out-dir", str(tmp_path / "o")]) == 1
    err = _error(capsys)
    assert err["code"] == "bad_record" and "abc" in err["message"]


def test_bad_config_value(small_table, tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[compare]\nfolds = ten\n")
    assert main(["compare", str(small_table), "--config", str(cfg), "--out-dir", str(tmp_path)]) == 1
    assert _error(capsys)["code"] == "bad_config"

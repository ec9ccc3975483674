"""Command-line front end.

Subcommands
-----------
synth       write a seeded synthetic feature table
extract     compute intensity measures for records and join structural/MIDR sidecars
preprocess  normalisation statistics, IQR flags, PCA scree and PPS reports
train       fit one model on a whole table and save it as JSON
compare     cross-validate several models and write the comparison reports

All outputs are comma-separated with a header row. On failure the command
prints one line ``seisdamage-error {json}`` to stderr, removes anything it
wrote, and exits with status 1 (2 for usage errors).
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .dataset import (FEATURE_COLUMNS, STRUCTURAL_COLUMNS, FeatureRow, FeatureTable, TableSchemaError,
                      classify_damage, generate_synthetic, read_table, table_to_csv)
from .evaluation import PreprocessConfig, cross_validate, kfold_plan
from .models.registry import DISPLAY_NAMES, MODEL_NAMES, ModelConfig, dumps_model, fit_model
from .preprocess import apply_minmax, fit_minmax, fit_pca, iqr_flags, pps_matrix
from .signal import IMConfig, RecordFormatError, compute_intensity_measures, load_accelerogram

DEFAULT_SEED = 42
DEFAULT_FOLDS = 10

COMPARISON_COLUMNS = ("ID", "Model", "Accuracy", "ROC", "Recall", "Precision", "F-Score",
                      "CKS", "MCC", "Time/sec")


class CliError(Exception):
    """A user-facing failure with a short machine-readable code."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# output bookkeeping


class Outputs:
    """Tracks files written by a command so a failure can remove them."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.created_dir = not out_dir.exists()
        self.paths: list[Path] = []

    def write(self, name: str, text: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / name
        self.paths.append(path)
        path.write_text(text)
        return path

    def write_rows(self, name: str, header, rows) -> Path:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return self.write(name, buf.getvalue())

    def rollback(self):
        for p in self.paths:
            p.unlink(missing_ok=True)
        if self.created_dir and self.out_dir.exists() and not any(self.out_dir.iterdir()):
            self.out_dir.rmdir()


def _f(x: float, digits: int = 6) -> str:
    return f"{x:.{digits}f}"


def _g(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# configuration


def _load_config(path):
    cp = configparser.ConfigParser()
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise CliError("missing_input", f"config file not found: {p}")
        cp.read(p)
    return cp


def _opt(args, cp, name, section, default, conv=str):
    """Flag value if given, else ``[section] name`` (or ``[run] name``) from the config, else default."""
    val = getattr(args, name.replace("-", "_"), None)
    if val is not None:
        return val
    key = name.replace("_", "-")
    for sec in (section, "run"):
        if cp.has_option(sec, key):
            raw = cp.get(sec, key)
            try:
                if conv is bool:
                    return cp.getboolean(sec, key)
                return conv(raw)
            except ValueError:
                raise CliError("bad_config", f"[{sec}] {key} = {raw!r} is not a valid value") from None
    return default


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in str(text).split(","))


def _model_configs(names, cp) -> list[ModelConfig]:
    configs = []
    for name in names:
        if name not in MODEL_NAMES:
            raise CliError("unknown_model", f"unknown model {name!r}; expected one of {', '.join(MODEL_NAMES)}")
        sec = f"model:{name}"
        hp = dict(cp.items(sec)) if cp.has_section(sec) else {}
        hp = {k.replace("-", "_"): (None if v.strip().lower() in ("", "auto") else v) for k, v in hp.items()}
        try:
            configs.append(ModelConfig(name, hp))
        except ValueError as exc:
            raise CliError("bad_config", str(exc)) from None
    return configs


def _require_file(path, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise CliError("missing_input", f"{what} not found: {p}")
    return p


def _labeled_table(path) -> FeatureTable:
    table = read_table(_require_file(path, "table"))
    if not table.is_labeled:
        raise CliError("unlabeled_table", f"{path}: table has neither MIDR nor CLASS column")
    return table


def _class_summary(table: FeatureTable) -> str:
    if not table.is_labeled:
        return f"{len(table)} rows (unlabeled)"
    counts = np.bincount(table.labels, minlength=3)
    return f"{len(table)} rows; class counts " + ", ".join(f"{c}={n}" for c, n in enumerate(counts))


# ---------------------------------------------------------------------------
# synth


def cmd_synth(args, cp, out: Outputs):
    seed = _opt(args, cp, "seed", "synth", DEFAULT_SEED, int)
    n = _opt(args, cp, "n", "synth", 1500, int)
    mix = _opt(args, cp, "class_mix", "synth", (0.4, 0.35, 0.25), _floats)
    tag = _opt(args, cp, "tag", "synth", "synthetic")
    name = _opt(args, cp, "output", "synth", "table.csv")
    table = generate_synthetic(seed, n, mix, tag)
    path = out.write(name, table_to_csv(table))
    print(f"wrote {path}: {_class_summary(table)}")


# ---------------------------------------------------------------------------
# extract


def _read_sidecar(path, columns) -> dict:
    rows = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.lstrip().startswith("#"))
        missing = [c for c in ("id",) + columns if c not in (reader.fieldnames or [])]
        if missing:
            raise CliError("bad_sidecar", f"{path}: missing column {missing[0]!r}")
        for lineno, rec in enumerate(reader, start=2):
            rid = rec["id"].strip()
            if rid in rows:
                raise CliError("bad_sidecar", f"{path}: duplicate id {rid!r}")
            try:
                rows[rid] = tuple(float(rec[c]) for c in columns)
            except (TypeError, ValueError):
                raise CliError("bad_sidecar", f"{path}: non-numeric value for id {rid!r} (line {lineno})") from None
    return rows


def _expand_records(paths) -> list[Path]:
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            out += sorted(q for q in p.iterdir() if q.is_file() and not q.name.startswith("."))
        elif p.is_file():
            out.append(p)
        else:
            raise CliError("missing_input", f"record not found: {p}")
    if not out:
        raise CliError("missing_input", "no record files given")
    return out


def _extract_one(job):
    path, fmt, units, cfg = job
    acc = load_accelerogram(path, fmt=fmt, units=units)
    return acc.id, compute_intensity_measures(acc, cfg)


def cmd_extract(args, cp, out: Outputs):
    records = _expand_records(args.records)
    structural = _read_sidecar(_require_file(args.structural, "structural sidecar"), STRUCTURAL_COLUMNS)
    midr = None
    if args.midr is not None:
        midr = _read_sidecar(_require_file(args.midr, "MIDR sidecar"), ("MIDR",))
    workers = _opt(args, cp, "workers", "extract", 1, int)
    cfg = IMConfig(damping=_opt(args, cp, "damping", "extract", 0.05, float),
                   threshold=_opt(args, cp, "threshold", "extract", 0.05, float))
    fmt = _opt(args, cp, "format", "extract", "auto")
    units = _opt(args, cp, "units", "extract", "mps2")
    jobs = [(p, fmt, units, cfg) for p in records]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_extract_one, jobs))
    else:
        results = [_extract_one(j) for j in jobs]
    ids = [rid for rid, _ in results]
    dup = sorted({i for i in ids if ids.count(i) > 1})
    if dup:
        raise CliError("id_mismatch", f"record id {dup[0]!r} appears more than once")
    for name, side in (("structural", structural), ("MIDR", midr)):
        if side is None:
            continue
        missing = [i for i in ids if i not in side]
        if missing:
            raise CliError("id_mismatch", f"record id {missing[0]!r} is missing from the {name} sidecar")
        extra = sorted(set(side) - set(ids))
        if extra:
            raise CliError("id_mismatch", f"{name} sidecar id {extra[0]!r} has no matching record")
    rows = []
    for rid, im in results:
        h, nvx, nvy, e0 = structural[rid]
        m = None if midr is None else midr[rid][0]
        rows.append(FeatureRow(h, nvx, nvy, e0, im, m, None if m is None else classify_damage(m)))
    table = FeatureTable.from_rows(rows, tag=_opt(args, cp, "tag", "extract", "synthetic"))
    path = out.write(_opt(args, cp, "output", "extract", "table.csv"), table_to_csv(table))
    print(f"wrote {path}: {_class_summary(table)}")


# ---------------------------------------------------------------------------
# preprocess


def cmd_preprocess(args, cp, out: Outputs):
    table = read_table(_require_file(args.table, "table"))
    lo, hi = _opt(args, cp, "feature_range", "preprocess", (0.0, 1.0), _floats)
    seed = _opt(args, cp, "seed", "preprocess", DEFAULT_SEED, int)
    pps_folds = _opt(args, cp, "pps_folds", "preprocess", 4, int)
    cols = table.columns

    norm = fit_minmax(table, (lo, hi))
    out.write_rows("normalization.csv", ("column", "min", "max", "new_min", "new_max", "degenerate"),
                   [(c, _g(norm.min[i]), _g(norm.max[i]), _g(lo), _g(hi), int(norm.degenerate[i]))
                    for i, c in enumerate(cols)])

    rep = iqr_flags(table)
    lows = (table.features < rep.lower).sum(axis=0)
    highs = (table.features > rep.upper).sum(axis=0)
    out.write_rows("iqr.csv", ("column", "q1", "q3", "iqr", "lower_fence", "upper_fence",
                               "n_below", "n_above", "n_flagged"),
                   [(c, _g(rep.q1[i]), _g(rep.q3[i]), _g(rep.iqr[i]), _g(rep.lower[i]), _g(rep.upper[i]),
                     int(lows[i]), int(highs[i]), int(rep.counts[i])) for i, c in enumerate(cols)])

    # PCA on the normalised features so that units do not dominate the axes
    pca = fit_pca(apply_minmax(norm, table))
    ratio = pca.explained_variance_ratio
    cum = np.cumsum(ratio)
    out.write_rows("pca_scree.csv", ("component", "eigenvalue", "ratio", "cumulative"),
                   [(k + 1, _g(pca.eigenvalues[k]), _g(ratio[k]), _g(cum[k])) for k in range(ratio.size)])

    pps = pps_matrix(table, cv_folds=pps_folds, seed=seed)
    out.write_rows("pps.csv", ("predictor", "target", "score", "metric", "flag"),
                   [(p, t, _g(pps.scores[i, j]), pps.metrics[j], pps.flags.get((p, t), "identity" if p == t else ""))
                    for i, p in enumerate(pps.predictors) for j, t in enumerate(pps.targets)])

    if _opt(args, cp, "normalized_copy", "preprocess", False, bool):
        out.write("table_normalized.csv", table_to_csv(apply_minmax(norm, table)))
    print(f"wrote preprocessing reports for {_class_summary(table)} to {out.out_dir}")


# ---------------------------------------------------------------------------
# train


def cmd_train(args, cp, out: Outputs):
    table = _labeled_table(args.table)
    seed = _opt(args, cp, "seed", "train", DEFAULT_SEED, int)
    name = _opt(args, cp, "model", "train", "svm-gaussian")
    (config,) = _model_configs([name], cp)
    if args.param:
        hp = dict(config.hyperparams)
        for item in args.param:
            key, sep, val = item.partition("=")
            if not sep:
                raise CliError("bad_argument", f"--param expects key=value, got {item!r}")
            hp[key.strip().replace("-", "_")] = None if val.strip().lower() in ("", "auto") else val.strip()
        try:
            config = ModelConfig(name, hp)
        except ValueError as exc:
            raise CliError("bad_config", str(exc)) from None
    lo, hi = _opt(args, cp, "feature_range", "train", (0.0, 1.0), _floats)
    norm = fit_minmax(table, (lo, hi))
    X = apply_minmax(norm, table.features)
    start = time.perf_counter()
    model = fit_model(config, X, table.labels, seed=seed)
    seconds = time.perf_counter() - start
    path = out.write(_opt(args, cp, "output", "train", f"model_{name}.json"),
                     dumps_model(model, config, norm, FEATURE_COLUMNS))
    acc = float(np.mean(model.predict(X) == table.labels))
    print(f"wrote {path}: {DISPLAY_NAMES[name]}, training accuracy {acc:.4f}, {seconds:.2f} s")


# ---------------------------------------------------------------------------
# compare


def cmd_compare(args, cp, out: Outputs):
    table = _labeled_table(args.table)
    seed = _opt(args, cp, "seed", "compare", DEFAULT_SEED, int)
    folds = _opt(args, cp, "folds", "compare", DEFAULT_FOLDS, int)
    workers = _opt(args, cp, "workers", "compare", 1, int)
    stratify = _opt(args, cp, "stratify", "compare", True, bool)
    names = args.models or _opt(args, cp, "models", "compare", ",".join(MODEL_NAMES))
    if isinstance(names, str):
        names = [n.strip() for n in names.split(",") if n.strip()]
    if not names:
        raise CliError("bad_argument", "no models configured")
    configs = _model_configs(names, cp)
    prep = PreprocessConfig(normalize=_opt(args, cp, "normalize", "compare", True, bool),
                            feature_range=_opt(args, cp, "feature_range", "compare", (0.0, 1.0), _floats))
    average = _opt(args, cp, "average", "compare", "macro")
    try:
        plan = kfold_plan(len(table), folds, seed, table.labels if stratify else None)
    except ValueError as exc:
        raise CliError("bad_argument", str(exc)) from None

    reports = []
    for cfg in configs:
        rep = cross_validate(table, cfg, plan, prep, workers=workers, seed=seed, average=average)
        reports.append(rep)
        m = rep.metrics
        print(f"{cfg.name:15s} accuracy {m.accuracy:.4f}  kappa {m.cks:.4f}  {m.wall_time:.2f} s", file=sys.stderr)
        _write_model_reports(out, cfg.name, rep)
    order = sorted(range(len(reports)), key=lambda i: -reports[i].metrics.accuracy)
    rows = []
    for rank, i in enumerate(order, start=1):
        m = reports[i].metrics
        rows.append((rank, reports[i].model.display_name, _f(m.accuracy), _f(m.roc_auc), _f(m.recall),
                     _f(m.precision), _f(m.f_score), _f(m.cks), _f(m.mcc), _f(m.wall_time, 3)))
    path = out.write_rows("comparison.csv", COMPARISON_COLUMNS, rows)
    print(f"wrote {path}: {len(rows)} models, {folds}-fold {'stratified ' if stratify else ''}CV, seed {seed}")


def _write_model_reports(out: Outputs, name: str, rep):
    labels = rep.confusion.labels
    out.write_rows(f"confusion_{name}.csv", ("true",) + tuple(f"pred_{c}" for c in labels),
                   [(c, *map(int, rep.confusion.counts[i])) for i, c in enumerate(labels)])
    out.write_rows(f"class_error_{name}.csv", ("true", "support") + tuple(f"pred_{c}" for c in labels),
                   rep.class_error.rows())
    roc_rows = []
    for c, curve in rep.roc_curves.items():
        roc_rows += [(c, _g(curve.thresholds[k]), _g(curve.fpr[k]), _g(curve.tpr[k]))
                     for k in range(curve.fpr.size)]
    out.write_rows(f"roc_{name}.csv", ("class", "threshold", "fpr", "tpr"), roc_rows)
    fold_rows = [(f, _f(m.accuracy), _f(m.roc_auc), _f(m.recall), _f(m.precision), _f(m.f_score),
                  _f(m.cks), _f(m.mcc), _f(m.wall_time, 3)) for f, m in rep.fold_metrics]
    fold_rows += [(f, "", "", "", "", "", "", "", "") for f, _ in rep.skipped_folds]
    fold_rows.sort(key=lambda r: r[0])
    out.write_rows(f"folds_{name}.csv", ("fold",) + COMPARISON_COLUMNS[2:], fold_rows)


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help=f"random seed (default {DEFAULT_SEED})")
    common.add_argument("--config", default=None, help="INI configuration file; flags override its values")
    common.add_argument("--out-dir", default=None, help="output directory (default: current directory)")
    common.add_argument("--workers", type=int, default=None, help="parallel worker processes (default 1)")

    parser = argparse.ArgumentParser(prog="seisdamage", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic labeled table")
    p.add_argument("-n", type=int, default=None, help="number of rows (default 1500)")
    p.add_argument("--class-mix", type=_floats, default=None, help="three class proportions, e.g. 0.4,0.35,0.25")
    p.add_argument("--tag", default=None)
    p.add_argument("--output", default=None, help="file name inside --out-dir (default table.csv)")

    p = sub.add_parser("extract", parents=[common], help="build a feature table from accelerograms")
    p.add_argument("records", nargs="+", help="record files or directories of records")
    p.add_argument("--structural", required=True, help="CSV with columns id,Htot,nvx,nvy,e0")
    p.add_argument("--midr", default=None, help="CSV with columns id,MIDR")
    p.add_argument("--format", choices=("auto", "two-column", "npts-dt"), default=None)
    p.add_argument("--units", choices=("mps2", "g"), default=None)
    p.add_argument("--damping", type=float, default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--tag", default=None)
    p.add_argument("--output", default=None)

    p = sub.add_parser("preprocess", parents=[common], help="normalisation, IQR, PCA and PPS reports")
    p.add_argument("table")
    p.add_argument("--feature-range", type=_floats, default=None)
    p.add_argument("--pps-folds", type=int, default=None)
    p.add_argument("--normalized-copy", action="store_true", default=None)

    p = sub.add_parser("train", parents=[common], help="fit one model on a whole table")
    p.add_argument("table")
    p.add_argument("--model", choices=MODEL_NAMES, default=None)
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--feature-range", type=_floats, default=None)
    p.add_argument("--output", default=None)

    p = sub.add_parser("compare", parents=[common], help="cross-validate models and write comparison reports")
    p.add_argument("table")
    p.add_argument("--models", type=lambda s: [v.strip() for v in s.split(",") if v.strip()], default=None,
                   help="comma-separated model names (default: all)")
    p.add_argument("--folds", type=int, default=None, help=f"number of folds (default {DEFAULT_FOLDS})")
    p.add_argument("--stratify", dest="stratify", action="store_true", default=None)
    p.add_argument("--no-stratify", dest="stratify", action="store_false")
    p.add_argument("--no-normalize", dest="normalize", action="store_false", default=None)
    p.add_argument("--feature-range", type=_floats, default=None)
    p.add_argument("--average", choices=("macro", "weighted"), default=None)
    return parser


COMMANDS = {"synth": cmd_synth, "extract": cmd_extract, "preprocess": cmd_preprocess,
            "train": cmd_train, "compare": cmd_compare}


def _error_line(command, code, exc) -> str:
    return "seisdamage-error " + json.dumps(
        {"command": command, "code": code, "type": type(exc).__name__, "message": str(exc)}, sort_keys=True)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = None
    try:
        cp = _load_config(args.config)
        out_dir = _opt(args, cp, "out_dir", args.command, ".")
        out = Outputs(Path(out_dir))
        COMMANDS[args.command](args, cp, out)
    except CliError as exc:
        if out is not None:
            out.rollback()
        print(_error_line(args.command, exc.code, exc), file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - every failure becomes one parsable line
        if out is not None:
            out.rollback()
        if isinstance(exc, FileNotFoundError):
            code = "missing_input"
        elif isinstance(exc, RecordFormatError):
            code = "bad_record"
        elif isinstance(exc, TableSchemaError):
            code = "bad_table"
        else:
            code = "failed"
        print(_error_line(args.command, code, exc), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

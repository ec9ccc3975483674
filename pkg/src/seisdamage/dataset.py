"""Labeled feature tables: damage classification from MIDR, CSV
persistence and a seeded synthetic data generator.

A table holds the 18 input features (4 structural, 14 seismic) of each
building/record pair plus the maximum interstory drift ratio (MIDR, in
percent) and/or the derived damage class.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .signal import G, IntensityMeasures

STRUCTURAL_COLUMNS = ("Htot", "nvx", "nvy", "e0")
SEISMIC_COLUMNS = (
    "PGA", "PGV", "PGD", "Ia", "SED", "CAV", "ASI", "HI",
    "EPA", "PGV_PGA", "PP", "TUD", "TBD", "TSD",
)
FEATURE_COLUMNS = STRUCTURAL_COLUMNS + SEISMIC_COLUMNS
TARGET_COLUMNS = ("MIDR", "CLASS")
ALL_COLUMNS = FEATURE_COLUMNS + TARGET_COLUMNS

# IntensityMeasures field -> table column
IM_COLUMN = {
    "pga": "PGA", "pgv": "PGV", "pgd": "PGD", "arias": "Ia", "sed": "SED",
    "cav": "CAV", "asi": "ASI", "hi": "HI", "epa": "EPA",
    "vmax_over_amax": "PGV_PGA", "pp": "PP", "tud": "TUD", "tbd": "TBD", "tsd": "TSD",
}

DATASET_TAGS = ("ROW_FORM_BARE", "ROW_FORM_FULL-MASONRY", "ROW_FORM_PILOTIS", "synthetic")

#: Story height used to convert a story count to H_tot (m).
STORY_HEIGHT = 3.2


class DamageClass(enum.IntEnum):
    """Damage state from MIDR: slight, moderate, heavy."""

    CLASS0 = 0
    CLASS1 = 1
    CLASS2 = 2


class TableSchemaError(ValueError):
    """A table file or array does not match the canonical schema."""


class MissingValueError(TableSchemaError):
    """A table cell is empty or NaN."""

    def __init__(self, row: int, column: str):
        super().__init__(f"missing value at row {row}, column {column!r}")
        self.row = row
        self.column = column


def classify_damage(midr: float) -> DamageClass:
    """Map MIDR (%) to a damage class.

    ``midr < 0.5`` is slight, ``0.5 <= midr <= 1.0`` moderate and
    ``midr > 1.0`` heavy; both boundaries belong to the moderate class.
    """
    midr = float(midr)
    if not math.isfinite(midr) or midr < 0:
        raise ValueError(f"MIDR must be finite and nonnegative, got {midr}")
    if midr < 0.5:
        return DamageClass.CLASS0
    if midr <= 1.0:
        return DamageClass.CLASS1
    return DamageClass.CLASS2


def classify_damage_array(midr) -> np.ndarray:
    """Vectorised :func:`classify_damage` returning an int array."""
    midr = np.asarray(midr, dtype=np.float64)
    if not np.all(np.isfinite(midr)) or np.any(midr < 0):
        raise ValueError("MIDR values must be finite and nonnegative")
    return np.where(midr < 0.5, 0, np.where(midr <= 1.0, 1, 2)).astype(np.int64)


@dataclass(frozen=True)
class FeatureRow:
    """One building/record pair."""

    h_tot: float
    n_vx: float
    n_vy: float
    e_0: float
    im: IntensityMeasures
    midr: float | None = None
    label: DamageClass | None = None

    def features(self) -> list[float]:
        ims = self.im.as_dict()
        by_col = {IM_COLUMN[k]: v for k, v in ims.items()}
        return [self.h_tot, self.n_vx, self.n_vy, self.e_0] + [by_col[c] for c in SEISMIC_COLUMNS]


@dataclass(frozen=True)
class FeatureTable:
    """Immutable table of feature rows.

    Attributes
    ----------
    features : ndarray, shape (n, 18)
        Columns in :data:`FEATURE_COLUMNS` order.
    midr : ndarray or None
        MIDR in percent.
    labels : ndarray of int or None
        Damage class indices 0..2.
    tag : str
        Dataset tag, e.g. ``"ROW_FORM_BARE"`` or ``"synthetic"``.
    scaled : bool
        Features have been transformed (normalised, projected), so the
        physical range checks on the structural columns are skipped.
    """

    features: np.ndarray
    midr: np.ndarray | None = None
    labels: np.ndarray | None = None
    tag: str = "synthetic"
    columns: tuple[str, ...] = field(default=FEATURE_COLUMNS)
    scaled: bool = False

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.columns):
            raise TableSchemaError(f"features must have shape (n, {len(self.columns)}), got {X.shape}")
        bad = np.argwhere(~np.isfinite(X))
        if bad.size:
            r, c = bad[0]
            raise MissingValueError(int(r), self.columns[c])
        if self.columns == FEATURE_COLUMNS and not self.scaled:
            _check_structural(X)
        X.setflags(write=False)
        object.__setattr__(self, "features", X)
        n = X.shape[0]
        midr = None
        if self.midr is not None:
            midr = np.array(self.midr, dtype=np.float64)
            if midr.shape != (n,):
                raise TableSchemaError("MIDR length does not match the feature rows")
            if not np.all(np.isfinite(midr)):
                raise MissingValueError(int(np.argmin(np.isfinite(midr))), "MIDR")
            if np.any(midr < 0):
                raise TableSchemaError("MIDR must be nonnegative")
            midr.setflags(write=False)
        labels = None
        if self.labels is not None:
            labels = np.array(self.labels)
            if labels.shape != (n,) or not np.all(np.isin(labels, (0, 1, 2))):
                raise TableSchemaError("labels must be n damage-class indices in {0, 1, 2}")
            labels = labels.astype(np.int64)
            if midr is not None and not np.array_equal(labels, classify_damage_array(midr)):
                row = int(np.argmax(labels != classify_damage_array(midr)))
                raise TableSchemaError(f"row {row}: CLASS disagrees with the class derived from MIDR")
            labels.setflags(write=False)
        elif midr is not None:
            labels = classify_damage_array(midr)
            labels.setflags(write=False)
        object.__setattr__(self, "midr", midr)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def is_labeled(self) -> bool:
        return self.labels is not None

    def column(self, name: str) -> np.ndarray:
        if name == "MIDR":
            if self.midr is None:
                raise KeyError("table has no MIDR column")
            return self.midr
        if name == "CLASS":
            if self.labels is None:
                raise KeyError("table has no CLASS column")
            return self.labels
        return self.features[:, self.columns.index(name)]

    def take(self, index) -> "FeatureTable":
        """Sub-table of the given row indices."""
        index = np.asarray(index)
        return FeatureTable(
            self.features[index],
            None if self.midr is None else self.midr[index],
            None if self.labels is None else self.labels[index],
            self.tag,
            self.columns,
            self.scaled,
        )

    def with_features(self, features, columns=None) -> "FeatureTable":
        """Same targets, new feature matrix (e.g. normalised or projected)."""
        return FeatureTable(features, self.midr, self.labels, self.tag, tuple(columns or self.columns), True)

    @classmethod
    def from_rows(cls, rows, tag: str = "synthetic") -> "FeatureTable":
        rows = list(rows)
        if not rows:
            raise TableSchemaError("a table needs at least one row")
        X = np.array([r.features() for r in rows], dtype=np.float64)
        has_midr = [r.midr is not None for r in rows]
        has_label = [r.label is not None for r in rows]
        if len(set(has_midr)) > 1 or len(set(has_label)) > 1:
            raise TableSchemaError("all rows must share the same optional fields")
        midr = np.array([r.midr for r in rows]) if has_midr[0] else None
        labels = np.array([int(r.label) for r in rows]) if has_label[0] else None
        return cls(X, midr, labels, tag)


def _check_structural(X: np.ndarray) -> None:
    h, nvx, nvy, e0 = (X[:, i] for i in range(4))
    if np.any(h <= 0):
        raise TableSchemaError(f"Htot must be positive (row {int(np.argmax(h <= 0))})")
    for name, col in (("nvx", nvx), ("nvy", nvy)):
        bad = (col < 0) | (col > 1)
        if np.any(bad):
            raise TableSchemaError(f"{name} must lie in [0, 1] (row {int(np.argmax(bad))})")
    if np.any(e0 < 0):
        raise TableSchemaError(f"e0 must be nonnegative (row {int(np.argmax(e0 < 0))})")


# ---------------------------------------------------------------------------
# CSV persistence


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def table_to_csv(table: FeatureTable) -> str:
    buf = io.StringIO()
    buf.write(f"# dataset: {table.tag}\n")
    if table.scaled:
        buf.write("# scaled: true\n")
    writer = csv.writer(buf, lineterminator="\n")
    header = list(table.columns)
    if table.midr is not None:
        header.append("MIDR")
    if table.labels is not None:
        header.append("CLASS")
    writer.writerow(header)
    for i in range(len(table)):
        row = [_fmt(v) for v in table.features[i]]
        if table.midr is not None:
            row.append(_fmt(table.midr[i]))
        if table.labels is not None:
            row.append(str(int(table.labels[i])))
        writer.writerow(row)
    return buf.getvalue()


def write_table(table: FeatureTable, path) -> None:
    """Write a table as CSV with 17 significant digits (exact round trip)."""
    Path(path).write_text(table_to_csv(table))


def read_table(path) -> FeatureTable:
    """Read a table written by :func:`write_table` or by hand.

    The header must contain every feature column; ``MIDR`` and ``CLASS``
    are optional, column order is free, and ``#`` comment lines may precede
    the header (``# dataset: <tag>`` sets the tag).
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"table file not found: {path}")
    tag = "synthetic"
    scaled = False
    body = []
    for line in path.read_text().splitlines():
        stripped = line.strip()
        if not body and (not stripped or stripped.startswith("#")):
            if stripped.lower().startswith("# dataset:"):
                tag = stripped.split(":", 1)[1].strip()
            elif stripped.lower().replace(" ", "") == "#scaled:true":
                scaled = True
            continue
        body.append(line)
    if not body:
        raise TableSchemaError(f"{path}: no header row")
    reader = csv.reader(body)
    header = [h.strip() for h in next(reader)]
    unknown = [h for h in header if h not in ALL_COLUMNS]
    if unknown:
        raise TableSchemaError(f"{path}: unknown column {unknown[0]!r}")
    if len(set(header)) != len(header):
        raise TableSchemaError(f"{path}: duplicate column names")
    missing = [c for c in FEATURE_COLUMNS if c not in header]
    if missing:
        raise TableSchemaError(f"{path}: missing column {missing[0]!r}")
    pos = {name: header.index(name) for name in header}
    values = []
    for r, cells in enumerate(reader):
        if not any(c.strip() for c in cells):
            continue
        if len(cells) != len(header):
            raise TableSchemaError(f"{path}: row {r} has {len(cells)} cells, expected {len(header)}")
        row = []
        for name in header:
            cell = cells[pos[name]].strip()
            if cell == "" or cell.lower() in ("nan", "na", "null", "none"):
                raise MissingValueError(r, name)
            try:
                v = float(cell)
            except ValueError:
                raise TableSchemaError(f"{path}: non-numeric cell {cell!r} at row {r}, column {name!r}") from None
            if not math.isfinite(v):
                raise MissingValueError(r, name)
            row.append(v)
        values.append(row)
    data = np.array(values, dtype=np.float64).reshape(len(values), len(header))
    X = data[:, [pos[c] for c in FEATURE_COLUMNS]]
    midr = data[:, pos["MIDR"]] if "MIDR" in pos else None
    labels = None
    if "CLASS" in pos:
        raw = data[:, pos["CLASS"]]
        if np.any(raw != np.round(raw)):
            raise TableSchemaError(f"{path}: CLASS values must be integers")
        labels = raw.astype(np.int64)
    return FeatureTable(X, midr, labels, tag, FEATURE_COLUMNS, scaled)


# ---------------------------------------------------------------------------
# Synthetic generator


def _synthetic_pool(rng: np.random.Generator, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``m`` candidate rows and their MIDR.

    Record-level latent variables (log PGA, predominant period, significant
    duration) drive the correlated seismic measures; structural features are
    independent. MIDR is a monotone function of PGA, HI and H_tot with
    lognormal scatter.
    """
    stories = rng.integers(1, 11, size=m)
    h_tot = stories * STORY_HEIGHT                           # 3.2 .. 32 m
    n_vx = np.where(rng.random(m) < 0.25, 0.0, rng.uniform(0.1, 0.9, m))
    n_vy = np.clip(n_vx + rng.normal(0.0, 0.15, m), 0.0, 1.0) * (n_vx > 0)
    e_0 = rng.gamma(2.0, 0.4, m)                             # m

    pga = np.clip(np.exp(rng.normal(np.log(2.0), 0.75, m)), 0.2, 12.0)
    pp = np.clip(np.exp(rng.normal(np.log(0.35), 0.45, m)), 0.1, 1.6)
    tsd = np.clip(np.exp(rng.normal(np.log(10.0), 0.5, m)), 2.0, 60.0)
    pgv = pga * pp / (2.0 * np.pi) * np.exp(rng.normal(0.3, 0.25, m))
    pgd = pgv * pp / (2.0 * np.pi) * np.exp(rng.normal(0.8, 0.35, m))
    rms = pga * np.exp(rng.normal(np.log(0.28), 0.15, m))
    arias = np.pi / (2.0 * G) * rms ** 2 * tsd * 1.3
    sed = (0.35 * pgv) ** 2 * tsd * 1.3
    tbd = tsd * np.exp(rng.normal(np.log(1.5), 0.2, m))
    tud = tbd * rng.uniform(0.3, 0.8, m)
    cav = rms * 1.2 * tbd
    asi = 0.4 * 2.1 * pga * np.exp(rng.normal(0.0, 0.15, m))
    epa = asi / (0.4 * 2.5)
    hi = 2.2 * pgv * np.exp(rng.normal(0.0, 0.2, m))

    midr = 1.0 * hi ** 0.75 * pga ** 0.35 * (h_tot / 16.0) ** 0.5 * np.exp(rng.normal(0.0, 0.22, m))

    X = np.column_stack([
        h_tot, n_vx, n_vy, e_0,
        pga, pgv, pgd, arias, sed, cav, asi, hi, epa, pgv / pga, pp, tud, tbd, tsd,
    ])
    return X, midr


def _class_counts(n: int, mix) -> np.ndarray:
    exact = np.asarray(mix, dtype=np.float64) * n
    counts = np.floor(exact).astype(np.int64)
    rem = n - counts.sum()
    order = np.argsort(-(exact - counts), kind="stable")
    counts[order[:rem]] += 1
    return counts


def generate_synthetic(seed: int, n: int, class_mix=(0.4, 0.35, 0.25), tag: str = "synthetic") -> FeatureTable:
    """Seeded synthetic feature table with ``n`` rows.

    Candidate rows are drawn from :func:`_synthetic_pool` until every damage
    class has enough members; each class then contributes its share of
    ``n`` (largest-remainder rounding of ``class_mix``) in draw order, and
    the rows are shuffled. Labels come from :func:`classify_damage` applied
    to the generated MIDR, so class membership is a genuine function of the
    features plus noise.
    """
    if n < 30:
        raise ValueError(f"n must be at least 30, got {n}")
    mix = np.asarray(class_mix, dtype=np.float64)
    if mix.shape != (3,) or np.any(mix <= 0) or abs(mix.sum() - 1.0) > 1e-9:
        raise ValueError("class_mix must be three positive proportions summing to 1")
    counts = _class_counts(n, mix)
    rng = np.random.default_rng(seed)
    chosen: list[list[np.ndarray]] = [[], [], []]
    have = np.zeros(3, dtype=np.int64)
    while np.any(have < counts):
        X, midr = _synthetic_pool(rng, max(2 * n, 512))
        labels = classify_damage_array(midr)
        rows = np.column_stack([X, midr])
        for c in range(3):
            need = counts[c] - have[c]
            if need > 0:
                take = rows[labels == c][:need]
                chosen[c].append(take)
                have[c] += take.shape[0]
    data = np.vstack([np.vstack(parts) for parts in chosen if parts])
    data = data[rng.permutation(data.shape[0])]
    return FeatureTable(data[:, :-1], data[:, -1], None, tag)

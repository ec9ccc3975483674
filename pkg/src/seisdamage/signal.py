"""Accelerogram ingestion, integration, elastic response spectra and the
fourteen ground-motion intensity measures used as seismic features.

Units are SI throughout: acceleration in m/s², velocity in m/s,
displacement in m, time in s. Records given in units of g are converted on
load with ``G = 9.81``.

Notes
-----
Cumulative absolute velocity integrates ``|a(t)|``. The tabulated formula it
is usually copied from omits the absolute value, which would make the
measure a residual velocity rather than a cumulative one.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from ._accel import newmark_peak_displacement

G = 9.81

#: Default period grid: 0.02 s to 4.0 s in 0.02 s steps.
DEFAULT_PERIODS = np.round(np.arange(1, 201) * 0.02, 10)

_HEADER_RE = re.compile(
    r"NPTS\s*=\s*(?P<npts>\d+)\s*,?\s*DT\s*=\s*(?P<dt>[-+0-9.eE]+)", re.IGNORECASE
)


class RecordFormatError(ValueError):
    """Raised when an accelerogram file cannot be parsed."""


@dataclass(frozen=True)
class Accelerogram:
    """Uniformly sampled ground acceleration in m/s².

    Parameters
    ----------
    dt : float
        Time step in seconds.
    samples : ndarray
        Acceleration values in m/s².
    id : str
        Record label.
    source_unit : {'mps2', 'g'}
        Unit of the file the record came from. Informational only; ``samples``
        are always m/s².
    """

    dt: float
    samples: np.ndarray
    id: str = ""
    source_unit: str = "mps2"

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")
        if samples.size < 2:
            raise ValueError("an accelerogram needs at least 2 samples")
        if not np.all(np.isfinite(samples)):
            raise ValueError("accelerogram samples must be finite")
        if self.source_unit not in ("mps2", "g"):
            raise ValueError(f"unknown unit tag {self.source_unit!r}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def duration(self) -> float:
        return self.dt * (self.samples.size - 1)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) * self.dt


@dataclass(frozen=True)
class TimeSeries:
    """Velocity (m/s) or displacement (m) history on the record's time grid."""

    dt: float
    samples: np.ndarray


@dataclass(frozen=True)
class ResponseSpectrum:
    """Elastic response spectrum at fixed damping.

    ``sd`` is the peak relative displacement; ``psv`` and ``sa`` follow from
    the pseudo-spectral identities ``psv = sd*w`` and ``sa = sd*w**2`` with
    ``w = 2*pi/T``.
    """

    damping: float
    periods: np.ndarray
    sa: np.ndarray
    psv: np.ndarray
    sd: np.ndarray


@dataclass(frozen=True)
class IMConfig:
    """Settings for :func:`compute_intensity_measures`."""

    damping: float = 0.05
    threshold: float = 0.05
    arias_bounds: tuple[float, float] = (0.05, 0.95)
    periods: np.ndarray = field(default_factory=lambda: DEFAULT_PERIODS.copy())
    detrend: bool = False


@dataclass(frozen=True)
class IntensityMeasures:
    """The fourteen scalar ground-motion parameters of one record.

    ``undefined`` names fields whose value is not defined for the record
    (``vmax_over_amax`` of an all-zero record, ``tsd`` when the squared
    samples underflow to zero); such fields hold 0.0.
    """

    pga: float
    pgv: float
    pgd: float
    arias: float
    sed: float
    cav: float
    asi: float
    hi: float
    epa: float
    vmax_over_amax: float
    pp: float
    tud: float
    tbd: float
    tsd: float
    undefined: tuple[str, ...] = ()

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "undefined"}


# ---------------------------------------------------------------------------
# Loading


def _parse_float(token: str, lineno: int, path) -> float:
    try:
        value = float(token)
    except ValueError:
        raise RecordFormatError(f"{path}:{lineno}: non-numeric token {token!r}") from None
    if not math.isfinite(value):
        raise RecordFormatError(f"{path}:{lineno}: non-finite value {token!r}")
    return value


def load_accelerogram(path, fmt: str = "auto", units: str = "mps2", id: str | None = None) -> Accelerogram:
    """Read an accelerogram from a text file.

    Two layouts are understood:

    ``two-column``
        ``time acceleration`` pairs separated by whitespace; lines starting
        with ``#`` are comments. The time column must be uniform to within
        ``1e-6*dt``.
    ``npts-dt``
        A header line ``NPTS=<n>, DT=<dt>`` followed by ``n`` whitespace
        separated acceleration values over any number of lines.

    ``fmt='auto'`` picks ``npts-dt`` when the first non-comment line matches
    the header pattern. ``units`` is ``'mps2'`` or ``'g'``.
    """
    path = Path(path)
    if units not in ("mps2", "g"):
        raise ValueError(f"units must be 'mps2' or 'g', got {units!r}")
    if not path.is_file():
        raise FileNotFoundError(f"accelerogram file not found: {path}")
    lines = [
        (no, line.strip())
        for no, line in enumerate(path.read_text().splitlines(), start=1)
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if not lines:
        raise RecordFormatError(f"{path}: no data")
    header = _HEADER_RE.search(lines[0][1])
    if fmt == "auto":
        fmt = "npts-dt" if header else "two-column"
    if fmt == "npts-dt":
        if header is None:
            raise RecordFormatError(f"{path}: missing 'NPTS=<n>, DT=<dt>' header")
        npts = int(header.group("npts"))
        dt = _parse_float(header.group("dt"), lines[0][0], path)
        values = [_parse_float(tok, no, path) for no, line in lines[1:] for tok in line.split()]
        if len(values) != npts:
            raise RecordFormatError(f"{path}: header declares NPTS={npts} but found {len(values)} values")
        samples = np.array(values)
    elif fmt == "two-column":
        rows = []
        for no, line in lines:
            toks = line.split()
            if len(toks) != 2:
                raise RecordFormatError(f"{path}:{no}: expected 2 columns, got {len(toks)}")
            rows.append((_parse_float(toks[0], no, path), _parse_float(toks[1], no, path)))
        if len(rows) < 2:
            raise RecordFormatError(f"{path}: fewer than 2 samples")
        data = np.array(rows)
        steps = np.diff(data[:, 0])
        dt = float(steps[0])
        if dt <= 0 or np.any(np.abs(steps - dt) > 1e-6 * dt):
            bad = int(np.argmax(np.abs(steps - dt) > 1e-6 * dt)) if dt > 0 else 0
            raise RecordFormatError(
                f"{path}: non-uniform time step near t={data[bad + 1, 0]!r} (expected dt={dt!r})"
            )
        samples = data[:, 1]
    else:
        raise ValueError(f"unknown record format {fmt!r}")
    if samples.size < 2:
        raise RecordFormatError(f"{path}: fewer than 2 samples")
    if units == "g":
        samples = samples * G
    return Accelerogram(dt=dt, samples=samples, id=id if id is not None else path.stem, source_unit=units)


# ---------------------------------------------------------------------------
# Time-domain processing


def integrate_series(x) -> TimeSeries:
    """Cumulative trapezoidal integral starting at zero."""
    s = np.asarray(x.samples, dtype=np.float64)
    out = np.empty_like(s)
    out[0] = 0.0
    np.cumsum((s[1:] + s[:-1]) * (0.5 * x.dt), out=out[1:])
    return TimeSeries(dt=x.dt, samples=out)


def _trapz(y: np.ndarray, dx) -> float:
    # sequential accumulation (not pairwise np.sum) so that appending
    # nonnegative terms can never lower the result by rounding
    if y.size < 2:
        return 0.0
    if np.ndim(dx) == 0:
        terms = (y[1:] + y[:-1]) * (0.5 * dx)
    else:
        terms = (y[1:] + y[:-1]) * 0.5 * np.diff(dx)
    return float(np.cumsum(terms)[-1])


def _detrended(acc: Accelerogram) -> Accelerogram:
    t = acc.times
    coef = np.polyfit(t, acc.samples, 1)
    return Accelerogram(acc.dt, acc.samples - np.polyval(coef, t), acc.id, acc.source_unit)


# ---------------------------------------------------------------------------
# Response spectrum


def compute_response_spectrum(acc: Accelerogram, damping: float = 0.05, periods=None) -> ResponseSpectrum:
    """Elastic response spectrum by Newmark average-acceleration integration.

    Each oscillator is integrated with a step ``dt/m`` where ``m`` is the
    smallest integer making the step no larger than ``T/20``; ground
    acceleration is linearly interpolated between samples.
    """
    if not 0 < damping < 1:
        raise ValueError(f"damping must lie in (0, 1), got {damping}")
    periods = DEFAULT_PERIODS if periods is None else np.asarray(periods, dtype=np.float64)
    if periods.ndim != 1 or periods.size == 0:
        raise ValueError("period grid must be a non-empty 1-D sequence")
    if np.any(periods <= 0):
        raise ValueError("periods must be positive")
    if np.any(np.diff(periods) <= 0):
        raise ValueError("periods must be strictly increasing")
    if periods[0] < 0.02:
        raise ValueError(f"shortest period must be >= 0.02 s, got {periods[0]}")
    sd = newmark_peak_displacement(np.ascontiguousarray(acc.samples), acc.dt, np.ascontiguousarray(periods), damping)
    w = 2.0 * np.pi / periods
    return ResponseSpectrum(damping=damping, periods=periods.copy(), sa=sd * w * w, psv=sd * w, sd=sd)


def _band_integral(x: np.ndarray, y: np.ndarray, lo: float, hi: float) -> float:
    """Trapezoidal integral of piecewise-linear y(x) over [lo, hi]."""
    if lo < x[0] or hi > x[-1]:
        raise ValueError(f"period grid [{x[0]}, {x[-1]}] does not cover [{lo}, {hi}]")
    inner = (x > lo) & (x < hi)
    xs = np.concatenate(([lo], x[inner], [hi]))
    ys = np.concatenate(([np.interp(lo, x, y)], y[inner], [np.interp(hi, x, y)]))
    return _trapz(ys, xs)


# ---------------------------------------------------------------------------
# Durations


def _exceedance_times(absval: np.ndarray, dt: float, level: float):
    """Time above ``level`` and first/last crossing of piecewise-linear |a|."""
    above = absval > level
    if not above.any():
        return 0.0, 0.0, 0.0
    a0, a1 = absval[:-1], absval[1:]
    up0, up1 = above[:-1], above[1:]
    both = up0 & up1
    total = float(np.count_nonzero(both)) * dt
    partial = up0 ^ up1
    if partial.any():
        p0, p1 = a0[partial], a1[partial]
        # fraction of the interval spent above the level
        frac = np.where(up0[partial], (p0 - level) / (p0 - p1), (p1 - level) / (p1 - p0))
        total += float(np.sum(frac)) * dt
    idx = np.flatnonzero(above)
    first, last = idx[0], idx[-1]
    t_first = first * dt
    if first > 0:
        t_first = (first - 1 + (level - absval[first - 1]) / (absval[first] - absval[first - 1])) * dt
    t_last = last * dt
    if last < absval.size - 1:
        t_last = (last + (absval[last] - level) / (absval[last] - absval[last + 1])) * dt
    return total, t_first, t_last


def _crossing_time(curve: np.ndarray, dt: float, level: float) -> float:
    """First time a nondecreasing sampled curve reaches ``level``."""
    k = int(np.searchsorted(curve, level, side="left"))
    if k == 0:
        return 0.0
    if k >= curve.size:
        return (curve.size - 1) * dt
    c0, c1 = curve[k - 1], curve[k]
    return (k - 1 + (level - c0) / (c1 - c0)) * dt


# ---------------------------------------------------------------------------
# Intensity measures


def compute_intensity_measures(acc: Accelerogram, cfg: IMConfig | None = None) -> IntensityMeasures:
    """Extract the fourteen ground-motion parameters of a record.

    Peak values come from the record and its trapezoidal velocity and
    displacement integrals. ASI and HI integrate the 5%-damped Sa and PSV
    over 0.1-0.5 s and 0.1-2.5 s; EPA is the band average of Sa over
    0.1-0.5 s divided by 2.5; PP is the grid period of maximum Sa, smallest
    period on ties. Durations use ``cfg.threshold * PGA`` on the piecewise
    linear ``|a(t)|`` (uniform and bracketed) and the Husid curve between
    ``cfg.arias_bounds`` (significant).
    """
    cfg = cfg or IMConfig()
    if cfg.detrend:
        acc = _detrended(acc)
    a = acc.samples
    dt = acc.dt
    vel = integrate_series(acc).samples
    disp = integrate_series(TimeSeries(dt, vel)).samples
    absa = np.abs(a)
    pga = float(absa.max())
    pgv = float(np.abs(vel).max())
    pgd = float(np.abs(disp).max())
    a2 = a * a
    arias = math.pi / (2.0 * G) * _trapz(a2, dt)
    sed = _trapz(vel * vel, dt)
    cav = _trapz(absa, dt)

    spec = compute_response_spectrum(acc, cfg.damping, cfg.periods)
    asi = _band_integral(spec.periods, spec.sa, 0.1, 0.5)
    hi = _band_integral(spec.periods, spec.psv, 0.1, 2.5)
    epa = asi / (0.4 * 2.5)
    pp = float(spec.periods[int(np.argmax(spec.sa))])

    undefined: tuple[str, ...] = ()
    if pga == 0.0:
        vmax_over_amax = 0.0
        undefined = ("vmax_over_amax",)
        tud = tbd = tsd = 0.0
    else:
        vmax_over_amax = pgv / pga
        tud, t_first, t_last = _exceedance_times(absa, dt, cfg.threshold * pga)
        tud = float(tud)
        tbd = float(t_last - t_first)
        husid = np.empty_like(a)
        husid[0] = 0.0
        np.cumsum((a2[1:] + a2[:-1]) * (0.5 * dt), out=husid[1:])
        if husid[-1] > 0.0:
            husid /= husid[-1]
            lo, hi_frac = cfg.arias_bounds
            tsd = float(_crossing_time(husid, dt, hi_frac) - _crossing_time(husid, dt, lo))
        else:
            # a**2 underflows for subnormal records: no Husid curve
            tsd = 0.0
            undefined = ("tsd",)
    return IntensityMeasures(
        pga=pga,
        pgv=pgv,
        pgd=pgd,
        arias=arias,
        sed=sed,
        cav=cav,
        asi=asi,
        hi=hi,
        epa=epa,
        vmax_over_amax=vmax_over_amax,
        pp=pp,
        tud=tud,
        tbd=tbd,
        tsd=tsd,
        undefined=undefined,
    )

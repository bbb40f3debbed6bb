"""Single-state detection reports and grid-then-bisect threshold sweeps."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .catalog import MapSpec, UnknownLabel, family_of
from .gme import GmeMap, min_eig_detect
from .moments import VIOLATED, compute_moments, hankel_report
from .qcore import DensityOperator
from .states import FAMILIES

DETECTORS = ("map-eig", "H1", "H2", "H3")
DEFAULT_GRID_POINTS = 101
DEFAULT_BISECTION_TOL = 5e-4


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


@dataclass(frozen=True)
class DetectionRecord:
    """All detector statistics for one state."""

    moments: tuple[float, ...]
    hankel_dets: tuple[float, ...]
    hankel_verdicts: tuple[str, ...]
    min_eig: float
    map_detected: bool

    def fires(self, detector: str) -> bool:
        if detector == "map-eig":
            return self.map_detected
        return self.hankel_verdicts[_hankel_order(detector) - 1] == VIOLATED


def _hankel_order(detector: str) -> int:
    if detector not in DETECTORS or detector == "map-eig":
        raise ValueError(f"unknown detector {detector!r}; known: {', '.join(DETECTORS)}")
    return int(detector[1:])


def evaluate(g: GmeMap, rho: DensityOperator, max_order: int) -> DetectionRecord:
    det = min_eig_detect(g, rho)
    if max_order < 1:
        return DetectionRecord((), (), (), det.min_eig, det.detected)
    m = compute_moments(g, rho, n_max=2 * max_order + 1)
    rep = hankel_report(m, max_order)
    return DetectionRecord(m.values, rep.determinants, rep.per_order_verdict,
                           det.min_eig, det.detected)


@dataclass(frozen=True)
class DetectReport:
    state: str
    map: str
    record: DetectionRecord

    def verdicts(self) -> dict[str, str]:
        out = {"map-eig": "detected" if self.record.map_detected else "not-detected"}
        for l, v in enumerate(self.record.hankel_verdicts, start=1):
            out[f"H{l}"] = v
        return out

    def to_json(self) -> dict:
        return {
            "state": self.state,
            "map": self.map,
            "moments": list(self.record.moments),
            "hankel_dets": list(self.record.hankel_dets),
            "min_eig": self.record.min_eig,
            "verdicts": self.verdicts(),
        }

    def to_text(self) -> str:
        r = self.record
        lines = [f"state: {self.state}", f"map: {self.map}", f"min_eig: {_fmt(r.min_eig)}"]
        lines += [f"s{n}: {_fmt(v)}" for n, v in enumerate(r.moments, start=1)]
        lines += [f"detH{l}: {_fmt(v)}" for l, v in enumerate(r.hankel_dets, start=1)]
        lines += [f"verdict {k}: {v}" for k, v in self.verdicts().items()]
        return "\n".join(lines) + "\n"


def run_detect(state_label: str, rho: DensityOperator, map_spec: MapSpec,
               max_order: int = 3) -> DetectReport:
    g = map_spec.build(rho.shape.n_sites)
    return DetectReport(state_label, g.label, evaluate(g, rho, max_order))


@dataclass(frozen=True)
class SweepConfig:
    family: str
    map_spec: MapSpec = field(default_factory=MapSpec)
    detectors: tuple[str, ...] = DETECTORS
    grid: tuple[float, float, int] = (0.0, 1.0, DEFAULT_GRID_POINTS)
    bisection_tol: float = DEFAULT_BISECTION_TOL
    output_path: str | None = None
    output_format: str = "csv"
    seed: int = 0

    def __post_init__(self):
        fam = family_of(self.family)
        if fam is None:
            raise UnknownLabel(f"unknown state family {self.family!r}; "
                               f"known: {', '.join(FAMILIES)}")
        object.__setattr__(self, "family", fam)
        for d in self.detectors:
            if d != "map-eig":
                _hankel_order(d)
        lo, hi, points = self.grid
        if int(points) < 2:
            raise ValueError("grid needs at least 2 points")
        plo, phi = FAMILIES[fam].parameter_range
        if not plo <= lo < hi <= phi:
            raise ValueError(f"grid [{lo}, {hi}] must be increasing and inside [{plo}, {phi}]")
        if self.output_format not in ("csv", "json"):
            raise ValueError(f"output format must be csv or json, got {self.output_format!r}")
        if self.bisection_tol <= 0:
            raise ValueError("bisection tolerance must be positive")
        object.__setattr__(self, "grid", (float(lo), float(hi), int(points)))

    @property
    def max_order(self) -> int:
        return max((_hankel_order(d) for d in self.detectors if d != "map-eig"), default=0)


@dataclass(frozen=True)
class Crossing:
    """A verdict change bracketed to ``[low, high]``; ``fires_above`` gives its direction."""

    low: float
    high: float
    threshold: float
    fires_above: bool


@dataclass(frozen=True)
class ThresholdResult:
    detector: str
    crossings: tuple[Crossing, ...]
    detection_regions: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    mus: tuple[float, ...]
    records: tuple[DetectionRecord, ...]
    thresholds: tuple[ThresholdResult, ...]

    def columns(self) -> list[str]:
        return sweep_columns(self.config.detectors)

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns())
        for mu, rec in zip(self.mus, self.records):
            w.writerow(_row(mu, rec, self.config.detectors))
        return buf.getvalue()

    def json_text(self) -> str:
        cols = self.columns()
        rows = [dict(zip(cols, _row(mu, rec, self.config.detectors)))
                for mu, rec in zip(self.mus, self.records)]
        return json.dumps({"rows": rows, "thresholds": [_threshold_json(t) for t in self.thresholds]},
                          indent=2) + "\n"

    def summary(self) -> str:
        lines = []
        for t in self.thresholds:
            if not t.crossings:
                state = "always" if t.detection_regions else "never"
                lines.append(f"{t.detector}: no threshold ({state} fires on the grid)")
                continue
            ths = ", ".join(f"{c.threshold:.4f} ({'fires above' if c.fires_above else 'fires below'})"
                            for c in t.crossings)
            lines.append(f"{t.detector}: {ths}")
        return "\n".join(lines) + "\n"


def sweep_columns(detectors: Sequence[str]) -> list[str]:
    """CSV header; depends only on the detector list."""
    L = max((_hankel_order(d) for d in detectors if d != "map-eig"), default=0)
    orders = [_hankel_order(d) for d in DETECTORS[1:] if d in detectors]
    cols = ["mu"] + [f"s{n}" for n in range(1, 2 * L + 2)] if L else ["mu"]
    cols += [f"detH{l}" for l in orders]
    if "map-eig" in detectors:
        cols += ["min_eig", "verdict_map"]
    cols += [f"verdict_H{l}" for l in orders]
    return cols


def _row(mu: float, rec: DetectionRecord, detectors: Sequence[str]) -> list[str]:
    orders = [_hankel_order(d) for d in DETECTORS[1:] if d in detectors]
    row = [_fmt(mu)] + [_fmt(s) for s in rec.moments]
    row += [_fmt(rec.hankel_dets[l - 1]) for l in orders]
    if "map-eig" in detectors:
        row += [_fmt(rec.min_eig), "detected" if rec.map_detected else "not-detected"]
    row += [rec.hankel_verdicts[l - 1] for l in orders]
    return row


def _threshold_json(t: ThresholdResult) -> dict:
    return {
        "detector": t.detector,
        "crossings": [{"low": c.low, "high": c.high, "threshold": c.threshold,
                       "fires_above": c.fires_above} for c in t.crossings],
        "detection_regions": [list(r) for r in t.detection_regions],
    }


def bisect_crossing(fires: Callable[[float], bool], low: float, high: float,
                    tol: float) -> Crossing:
    """Shrink ``[low, high]`` around a verdict change until its width is at most ``tol``."""
    f_low = fires(low)
    while high - low > tol:
        mid = 0.5 * (low + high)
        if fires(mid) == f_low:
            low = mid
        else:
            high = mid
    return Crossing(low, high, 0.5 * (low + high), fires_above=not f_low)


def _regions(lo: float, hi: float, first_fires: bool,
             crossings: Sequence[Crossing]) -> tuple[tuple[float, float], ...]:
    regions, start = [], lo if first_fires else None
    for c in crossings:
        if c.fires_above:
            start = c.threshold
        else:
            regions.append((start, c.threshold))
            start = None
    if start is not None:
        regions.append((start, hi))
    return tuple(regions)


def run_sweep(config: SweepConfig) -> SweepResult:
    """Evaluate every grid point, then bisect each detector's verdict changes.

    Multiple crossings per detector are kept, so non-monotone families
    report every detection region. Writes ``config.output_format`` to
    ``config.output_path`` when the path is set.
    """
    family = FAMILIES[config.family]
    n_sites = family(config.grid[0]).shape.n_sites
    g = config.map_spec.build(n_sites)
    L = config.max_order
    lo, hi, points = config.grid
    mus = tuple(float(x) for x in np.linspace(lo, hi, points))
    records = tuple(evaluate(g, family(mu), L) for mu in mus)

    thresholds = []
    for det in config.detectors:
        # a detector only needs its own statistic during bisection
        order = 0 if det == "map-eig" else _hankel_order(det)
        fires = lambda mu, det=det, order=order: evaluate(g, family(mu), order).fires(det)
        verdicts = [rec.fires(det) for rec in records]
        crossings = tuple(bisect_crossing(fires, mus[k], mus[k + 1], config.bisection_tol)
                          for k in range(points - 1) if verdicts[k] != verdicts[k + 1])
        thresholds.append(ThresholdResult(det, crossings, _regions(lo, hi, verdicts[0], crossings)))

    result = SweepResult(config, mus, records, tuple(thresholds))
    if config.output_path:
        text = result.json_text() if config.output_format == "json" else result.csv_text()
        with open(config.output_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return result

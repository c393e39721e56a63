"""Grid scans over (curve, q, delta), exponent fits and the shape checks of the main bounds."""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .counting import count_near
from .curves import MongeCurve3, get_curve, read_keyvalue
from .linearize import block_params, sandwich_check
from .planar_sums import error_term

log = logging.getLogger(__name__)

CSV_HEADER = ("curve", "q", "delta", "A_lo", "A_hi", "B1", "B2", "E", "q0", "r", "runtime_ms")
DEFAULT_Q = (10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6, 10 ** 7)


@dataclass(frozen=True)
class DeltaRule:
    """delta as a function of q: ``fixed``, ``power`` (c q^-theta) or ``theorem`` (c q^-1/5 (log q)^2/5)."""

    kind: str
    c: float
    theta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("fixed", "power", "theorem"):
            raise ValueError(f"unknown delta rule {self.kind!r}")
        if self.kind == "power" and not 0 <= self.theta < 1:
            raise ValueError("theta must lie in [0, 1)")

    def __call__(self, q: int) -> float:
        if self.kind == "fixed":
            return self.c
        if self.kind == "power":
            return self.c * q ** -self.theta
        return self.c * q ** -0.2 * math.log(q) ** 0.4

    @classmethod
    def parse(cls, text: str) -> "DeltaRule":
        """``fixed:0.3``, ``power:1:0.15`` or ``theorem:5``."""
        parts = text.strip().split(":")
        kind = parts[0]
        try:
            if kind == "fixed" and len(parts) == 2:
                return cls("fixed", float(parts[1]))
            if kind == "power" and len(parts) == 3:
                return cls("power", float(parts[1]), float(parts[2]))
            if kind == "theorem" and len(parts) == 2:
                return cls("theorem", float(parts[1]))
        except ValueError:
            pass
        raise ValueError(f"cannot parse delta rule {text!r}")

    def __str__(self) -> str:
        if self.kind == "power":
            return f"power:{self.c:g}:{self.theta:g}"
        return f"{self.kind}:{self.c:g}"


@dataclass
class ScanConfig:
    curves: Sequence[str | MongeCurve3]
    delta_rule: DeltaRule
    q_list: Sequence[int] = DEFAULT_Q
    workers: int = 1
    output: str | None = None

    @classmethod
    def from_file(cls, path) -> "ScanConfig":
        kv = read_keyvalue(path)
        base = Path(path).parent

        def resolve(name: str) -> str:
            cand = base / name
            return str(cand) if cand.is_file() else name

        curves = [resolve(c.strip()) for c in kv["curves"].split(",") if c.strip()]
        q_list = tuple(int(float(v)) for v in kv["q_list"].split(",")) if "q_list" in kv else DEFAULT_Q
        return cls(
            curves=curves,
            delta_rule=DeltaRule.parse(kv.get("delta_rule", "theorem:1")),
            q_list=q_list,
            workers=int(kv.get("workers", 1)),
            output=kv.get("output"),
        )


@dataclass(frozen=True)
class ScanRecord:
    curve: str
    q: int
    delta: float
    A_lo: int
    A_hi: int
    B1: int | None  # B1(q, 3 delta / 2), certified lower side
    B2: int | None  # B2(q, delta / 2), certified upper side
    E: float | None  # E(q, delta)
    q0: int
    r: int
    runtime_ms: float = field(default=0.0, compare=False)

    @property
    def sandwich_ok(self) -> bool | None:
        if self.B1 is None or self.B2 is None:
            return None
        return self.B2 <= self.A_lo and self.A_hi <= self.B1

    def row(self) -> list[str]:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, float):
                return f"{v:.17g}"
            return str(v)

        return [fmt(getattr(self, name)) for name in CSV_HEADER]


def run_cell(curve: MongeCurve3, q: int, delta: float) -> ScanRecord:
    t0 = time.perf_counter()
    bp = block_params(q, delta, curve.c4)
    b1 = b2 = None
    if block_params(q, delta / 2, curve.c4).valid:
        rep = sandwich_check(curve, q, delta)
        a, b1, b2 = rep.a_mid, rep.b1_threehalf, rep.b2_half
    else:
        a = count_near(curve, q, delta)
    E = error_term(curve, q, delta) if bp.valid else None
    return ScanRecord(
        curve=curve.id, q=q, delta=delta, A_lo=a.count_lo, A_hi=a.count_hi, B1=b1, B2=b2, E=E,
        q0=bp.q0, r=bp.r, runtime_ms=1e3 * (time.perf_counter() - t0),
    )


def _cell_job(args):
    return run_cell(*args)


def scan(config: ScanConfig) -> list[ScanRecord]:
    """One record per valid (curve, q, delta) cell, sorted by (curve, q, delta)."""
    jobs = []
    for spec in config.curves:
        curve = get_curve(spec)
        for q in config.q_list:
            delta = config.delta_rule(q)
            if not 0 < delta < 0.5:
                log.warning("skipping %s q=%d: delta=%.6g outside (0, 1/2) under rule %s",
                            curve.id, q, delta, config.delta_rule)
                continue
            jobs.append((curve, int(q), float(delta)))
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            records = list(pool.map(_cell_job, jobs))
    else:
        records = [_cell_job(j) for j in jobs]
    records.sort(key=lambda r: (r.curve, r.q, r.delta))
    return records


def write_csv(records: Iterable[ScanRecord], path_or_file) -> None:
    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for rec in records:
            w.writerow(rec.row())
    finally:
        if own:
            fh.close()


def read_csv(path) -> list[ScanRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            opt_int = lambda v: int(v) if v != "" else None  # noqa: E731
            out.append(ScanRecord(
                curve=row["curve"], q=int(row["q"]), delta=float(row["delta"]),
                A_lo=int(row["A_lo"]), A_hi=int(row["A_hi"]), B1=opt_int(row["B1"]), B2=opt_int(row["B2"]),
                E=float(row["E"]) if row["E"] != "" else None, q0=int(row["q0"]), r=int(row["r"]),
                runtime_ms=float(row["runtime_ms"]),
            ))
    return out


# --------------------------------------------------------------------------
# fits
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    n_points: int


def fit_loglog(x, y) -> FitResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise ValueError("need at least 3 points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive data")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - float(np.sum(resid ** 2)) / ss_tot)
    return FitResult(slope=float(slope), intercept=float(intercept), r_squared=min(r2, 1.0), n_points=int(x.size))


def fit_exponent(records, x_field: str = "q", y_field: str = "A_lo") -> FitResult:
    """Least squares slope of ln(y_field) against ln(x_field)."""
    get = lambda r, k: r[k] if isinstance(r, dict) else getattr(r, k)  # noqa: E731
    return fit_loglog([float(get(r, x_field)) for r in records], [float(get(r, y_field)) for r in records])


# --------------------------------------------------------------------------
# the main bounds
# --------------------------------------------------------------------------


def secondary_term(q: int) -> float:
    return q ** 0.6 * math.log(q) ** 0.8


@dataclass(frozen=True)
class TheoremCell:
    q: int
    delta: float
    A_lo: int
    A_hi: int
    main: float  # delta^2 q
    secondary: float  # q^(3/5) (log q)^(4/5)
    upper_ratio: float
    lower_ratio: float
    dominant: str
    sandwich_ok: bool | None


@dataclass
class TheoremReport:
    curve: str
    rule: str
    cells: list[TheoremCell]
    skipped: list[int]
    max_spread: float = 3.0

    @property
    def upper_spread(self) -> float:
        r = [c.upper_ratio for c in self.cells]
        return max(r) / min(r) if r else math.nan

    @property
    def lower_min(self) -> float:
        return min((c.lower_ratio for c in self.cells), default=math.nan)

    @property
    def sandwich_ok(self) -> bool:
        return all(c.sandwich_ok is not False for c in self.cells)

    @property
    def bounded(self) -> bool:
        return len(self.cells) >= 2 and self.upper_spread <= self.max_spread


def theorem_cells(records: Sequence[ScanRecord]) -> list[TheoremCell]:
    cells = []
    for r in records:
        main = r.delta ** 2 * r.q
        sec = secondary_term(r.q)
        cells.append(TheoremCell(
            q=r.q, delta=r.delta, A_lo=r.A_lo, A_hi=r.A_hi, main=main, secondary=sec,
            upper_ratio=r.A_hi / (main + sec), lower_ratio=r.A_lo / main,
            dominant="main" if main >= sec else "secondary", sandwich_ok=r.sandwich_ok,
        ))
    return cells


def verify_theorem(curve: str | MongeCurve3, config: ScanConfig, max_spread: float = 3.0) -> TheoremReport:
    """Normalized upper and lower ratios per cell, with the spread of the upper ratio."""
    curve = get_curve(curve)
    cfg = ScanConfig(curves=[curve], delta_rule=config.delta_rule, q_list=config.q_list,
                     workers=config.workers)
    records = scan(cfg)
    done = {r.q for r in records}
    skipped = [q for q in config.q_list if q not in done]
    return TheoremReport(curve=curve.id, rule=str(config.delta_rule), cells=theorem_cells(records),
                         skipped=skipped, max_spread=max_spread)


def estimate_theorem_constants(curve: str | MongeCurve3, q_list: Sequence[int], c_grid: Sequence[float],
                               threshold: float = 0.1) -> tuple[float, int] | None:
    """Smallest c on the grid for which A_lo / (delta^2 q) >= threshold at every valid q,
    with delta = c q^-1/5 (log q)^2/5; returns (c, smallest such q) or None.
    """
    curve = get_curve(curve)
    for c in sorted(c_grid):
        rule = DeltaRule("theorem", c)
        cells = [(q, rule(q)) for q in q_list if 0 < rule(q) < 0.5]
        if not cells:
            continue
        ok = [count_near(curve, q, d).count_lo / (d * d * q) >= threshold for q, d in cells]
        if all(ok):
            return c, min(q for q, _ in cells)
    return None


def records_equal_modulo_runtime(a: Sequence[ScanRecord], b: Sequence[ScanRecord]) -> bool:
    strip = lambda rs: [{k: v for k, v in asdict(r).items() if k != "runtime_ms"} for r in rs]  # noqa: E731
    return strip(a) == strip(b)


__all__ = [
    "DeltaRule", "ScanConfig", "ScanRecord", "FitResult", "TheoremReport", "scan", "fit_exponent",
    "fit_loglog", "verify_theorem", "estimate_theorem_constants", "write_csv", "read_csv",
]

"""Integral points near dilated space curves with nonvanishing torsion.

Exact counts of A(q, delta), the block linearization, Selberg majorants,
sublevel-set measures, exponential-sum error terms and a scan harness.
"""

from __future__ import annotations

from .counting import CountResult, UnsupportedError, count_near, count_on_curve
from .curves import (
    BUILTIN_CURVES,
    BUILTIN_PLANAR,
    DomainError,
    DualCurve,
    MongeCurve3,
    PlanarCurve,
    curve_from_coeffs,
    dual_curve,
    eval_derivatives,
    extend,
    get_curve,
    get_planar,
    load_curve,
    planar_from_poly,
    torsion,
)
from .harness import DeltaRule, FitResult, ScanConfig, ScanRecord, fit_exponent, scan, verify_theorem
from .linearize import BlockParams, SandwichReport, aggregate, block_params, count_block, sandwich_check
from .planar_sums import error_term, lemma3_count, lemma4_sum, linear_expsum
from .selberg import SelbergSystem, eval_trig_poly, selberg_coeffs, selberg_for_delta
from .sublevel import LevelSetQuery, MeasureReport, cell_bound_check, classify, measure_sublevel, prop_sum

__version__ = "0.1.0"

"""Linear bridge between refresh probability and pruning threshold.

The simulated coverage curve G_d(p) and the analytic largest-component curve
G_b(v) describe the same plateau through different knobs. This module finds
the affine map v = m*p + c that sends one onto the other: match the curve
endpoints by inverting G_b, then refine (m, c) by least squares over the
whole grid.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .formulas import FormulaParams, gb_analytic

__all__ = [
    "CalibrationResult",
    "CalibrationError",
    "ExtrapolationWarning",
    "fit",
    "predict_coverage",
    "analytic_gb_fn",
    "write_result_json",
    "write_overlay_csv",
]


class CalibrationError(ValueError):
    """The simulated curve cannot be matched to the analytic family."""


class ExtrapolationWarning(UserWarning):
    """Prediction requested outside the calibrated refresh-probability range."""


@dataclass(frozen=True)
class CalibrationResult:
    """Fitted affine map and its held-out quality.

    ``rmse`` is measured in places, over the interior grid points only; the
    two endpoints anchor the window match and would report near-zero error by
    construction.
    """

    m: float
    c: float
    rmse: float
    p_range: tuple[float, float]
    v_window: tuple[float, float]

    def predict_threshold(self, p: float) -> float:
        return max(self.m * p + self.c, 0.0)


def analytic_gb_fn(n_places: int, denominator: float) -> Callable[[float], float]:
    """Largest-component size as a function of the threshold coefficient."""

    def fn(v: float) -> float:
        return gb_analytic(FormulaParams(n_places, denominator, max(float(v), 0.0)))

    return fn


def _invert_decreasing(
    fn: Callable[[float], float], target: float, tol: float
) -> float:
    """Smallest v with fn(v) <= target, for non-increasing fn with fn(0) >= target."""
    lo, hi = 0.0, 1.0
    for _ in range(200):
        if fn(hi) <= target:
            break
        lo, hi = hi, hi * 2.0
    else:
        raise CalibrationError(
            f"analytic curve never drops to {target}; model mismatch"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if fn(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


def fit(
    sim_curve: Sequence[tuple[float, float]],
    analytic_fn: Callable[[float], float],
    p_range: tuple[float, float] = (0.01, 0.2),
) -> CalibrationResult:
    """Fit v = m*p + c sending the simulated curve onto the analytic one.

    Args:
        sim_curve: at least five (p, mean coverage) points spanning
            ``p_range``, coverage decreasing from the first to the last point.
        analytic_fn: non-increasing map from threshold coefficient to
            predicted plateau size (see :func:`analytic_gb_fn`; a
            simulation-backed callable works equally well).

    Raises:
        CalibrationError: fewer than five points, grid not spanning the
            range, a flat or increasing curve, or no threshold window whose
            endpoints match the curve (model mismatch).
    """
    pts = sorted((float(p), float(g)) for p, g in sim_curve)
    if len(pts) < 5:
        raise CalibrationError(f"need at least 5 grid points, got {len(pts)}")
    ps = np.array([p for p, _ in pts])
    gs = np.array([g for _, g in pts])
    lo_p, hi_p = p_range
    eps = 1e-9
    if ps[0] > lo_p + eps or ps[-1] < hi_p - eps:
        raise CalibrationError(
            f"grid [{ps[0]}, {ps[-1]}] does not span the calibration range {p_range}"
        )
    if ps[0] < lo_p - eps or ps[-1] > hi_p + eps:
        raise CalibrationError(f"grid exceeds the calibration range {p_range}")
    if not gs[0] > gs[-1]:
        raise CalibrationError(
            "coverage is flat or non-decreasing across the grid; "
            "no informative threshold window exists"
        )

    def safe_fn(v: float) -> float:
        return float(analytic_fn(max(float(v), 0.0)))

    ceiling = safe_fn(0.0)
    if ceiling < gs[0] - 1e-6 * max(1.0, gs[0]):
        raise CalibrationError(
            f"analytic ceiling {ceiling:.6g} sits below the simulated "
            f"curve start {gs[0]:.6g}; model mismatch"
        )
    scale = max(gs[0], 1.0)
    v_lo = _invert_decreasing(safe_fn, float(gs[0]), tol=1e-14 * max(1.0, scale))
    v_hi = _invert_decreasing(safe_fn, float(gs[-1]), tol=1e-14 * max(1.0, scale))
    if not v_hi > v_lo:
        raise CalibrationError(
            "matched threshold window is empty; curve too flat to calibrate"
        )
    m0 = (v_hi - v_lo) / (ps[-1] - ps[0])
    c0 = v_lo - m0 * ps[0]

    def residuals(mc: np.ndarray) -> np.ndarray:
        m, c = mc
        return np.array([safe_fn(m * p + c) - g for p, g in zip(ps, gs)])

    sol = least_squares(
        residuals,
        x0=np.array([m0, c0]),
        bounds=(np.array([1e-15, -np.inf]), np.array([np.inf, np.inf])),
    )
    m, c = float(sol.x[0]), float(sol.x[1])
    interior = residuals(sol.x)[1:-1]
    rmse = float(np.sqrt(np.mean(interior**2)))
    window = (float(max(m * ps[0] + c, 0.0)), float(max(m * ps[-1] + c, 0.0)))
    return CalibrationResult(
        m=m, c=c, rmse=rmse, p_range=(float(lo_p), float(hi_p)), v_window=window
    )


def predict_coverage(p: float, result: CalibrationResult, params: FormulaParams) -> float:
    """Predicted plateau at refresh probability ``p`` via the fitted map.

    ``params`` supplies the place count and pair rate; its own threshold
    field is ignored in favor of the mapped one. Requests outside the
    calibrated range still return a value but raise ExtrapolationWarning.
    """
    lo_p, hi_p = result.p_range
    if not lo_p <= p <= hi_p:
        warnings.warn(
            f"p={p} lies outside the calibrated range [{lo_p}, {hi_p}]",
            ExtrapolationWarning,
            stacklevel=2,
        )
    v = result.predict_threshold(p)
    return gb_analytic(FormulaParams(params.n_places, params.denominator, v))


def write_result_json(result: CalibrationResult, path: str) -> None:
    payload = {
        "m": result.m,
        "c": result.c,
        "rmse": result.rmse,
        "p_range": list(result.p_range),
        "v_window": list(result.v_window),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)


def write_overlay_csv(
    rows: Sequence[tuple[float, float, float]], path: str
) -> None:
    """Write (p, simulated coverage, predicted coverage) rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("p,G_d_sim,G_b_pred\n")
        for p, gd, gb in rows:
            fh.write(f"{p:.10g},{gd:.10g},{gb:.10g}\n")

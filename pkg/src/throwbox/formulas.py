"""Closed-form predictions for the thresholded projection and coverage.

All formulas share the pair-formation rate D = sigma^2 + psi*(psi - 1) of
the visit-count distribution (see :func:`throwbox.core.denominator`), which
for a constant count mu reduces to mu*(mu - 1). Bases that would go negative
are clamped to zero: sizes and probabilities cannot be negative, and the
clamp marks the regime where the prediction has degenerated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FormulaParams",
    "cumulative_degree",
    "expected_degree",
    "gb_analytic",
    "gd_simplified",
    "weight_growth_rate",
]


@dataclass(frozen=True)
class FormulaParams:
    """Inputs shared by the projection formulas.

    Attributes:
        n_places: number of places N (at least 2; the largest-component
            formula needs at least 3).
        denominator: pair-formation rate D, strictly positive.
        threshold: pruning coefficient v, non-negative.
    """

    n_places: int
    denominator: float
    threshold: float = 0.0

    def __post_init__(self) -> None:
        if self.n_places < 2:
            raise ValueError(f"n_places must be >= 2, got {self.n_places}")
        if self.denominator <= 0:
            raise ValueError(f"denominator must be > 0, got {self.denominator}")
        if self.threshold < 0:
            raise ValueError(f"threshold must be >= 0, got {self.threshold}")


def cumulative_degree(k, params: FormulaParams):
    """Fraction of places with thresholded-projection degree at least ``k``.

    Valid for 0 <= k < N-1. Accepts a scalar or array ``k``; returns the
    matching scalar or array.

    Raises:
        ValueError: any k outside [0, N-1); the transform degenerates at
            k = N-1 (division by zero).
    """
    n = params.n_places
    k_arr = np.asarray(k, dtype=np.float64)
    if np.any(k_arr < 0) or np.any(k_arr >= n - 1):
        raise ValueError(f"k must lie in [0, {n - 1}), got {k!r}")
    x = 1.0 - np.power(k_arr / (n - 1), 1.0 / (n - 1))
    base = 1.0 - params.threshold / (params.denominator * x)
    out = np.power(np.clip(base, 0.0, 1.0), n - 1)
    if np.isscalar(k) or (isinstance(k, np.ndarray) and k.ndim == 0):
        return float(out)
    return out


def expected_degree(theta_i: float, params: FormulaParams) -> float:
    """Expected thresholded-projection degree of a place with attractiveness theta_i."""
    if not 0.0 < theta_i < 1.0:
        raise ValueError(f"theta_i must lie in (0, 1), got {theta_i}")
    n = params.n_places
    base = 1.0 - params.threshold / (params.denominator * theta_i)
    return float((n - 1) * np.power(max(base, 0.0), n - 1))


def gb_analytic(params: FormulaParams) -> float:
    """Stabilized largest-component size of the thresholded projection.

    Requires N >= 3. Written out directly (not via
    :func:`cumulative_degree`); the identity gb_analytic == N * F_v(1) is a
    consequence checked by tests, not a shared code path.
    """
    n = params.n_places
    if n < 3:
        raise ValueError(f"gb_analytic requires n_places >= 3, got {n}")
    a = np.power(n - 1, 1.0 / (n - 1))
    base = 1.0 - (a / (a - 1.0)) * (params.threshold / params.denominator)
    return float(n * np.power(max(base, 0.0), n - 1))


def gd_simplified(p: float, n_places: int, mu: float, k_const: float) -> float:
    """Linearized place coverage: N minus a term linear in p.

    The deficit N - G_d grows as N^2 * (N-1) in the place count and shrinks
    as mu*(mu - 1) in the per-agent visit count; ``k_const`` is the fitted
    proportionality constant. Clamped to [0, N].
    """
    if mu < 2:
        raise ValueError(f"mu must be >= 2, got {mu}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if k_const <= 0:
        raise ValueError(f"k_const must be > 0, got {k_const}")
    value = n_places - k_const * n_places**2 * p * (n_places - 1) / (mu * (mu - 1.0))
    return float(min(max(value, 0.0), float(n_places)))


def weight_growth_rate(theta_i: float, theta_j: float, denominator: float) -> float:
    """Asymptotic per-agent growth rate of one projection edge weight.

    W(i, j) / t converges to D * theta_i * theta_j as the agent side grows.
    """
    for name, val in (("theta_i", theta_i), ("theta_j", theta_j)):
        if not 0.0 < val < 1.0:
            raise ValueError(f"{name} must lie in (0, 1), got {val}")
    if denominator <= 0:
        raise ValueError(f"denominator must be > 0, got {denominator}")
    return float(denominator * theta_i * theta_j)

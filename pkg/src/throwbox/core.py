"""Shared domain types: visit-count distributions, experiment config, place state.

Randomness contract: every stochastic function in this package takes a
``numpy.random.Generator``. Identical seed plus identical call sequence gives
bit-identical output. Ensembles derive run ``r`` from ``seed + r`` so that
averaged curves are reproducible and individual runs can be re-created in
isolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

__all__ = [
    "Constant",
    "Empirical",
    "VisitDistribution",
    "moments",
    "denominator",
    "SimConfig",
    "PlaceState",
    "parse_config_text",
]

_PMF_TOL = 1e-12


@dataclass(frozen=True)
class Constant:
    """Degenerate visit-count distribution: every agent makes ``mu`` visits."""

    mu: int

    def __post_init__(self) -> None:
        if not isinstance(self.mu, (int, np.integer)) or self.mu < 1:
            raise ValueError(f"mu must be a positive integer, got {self.mu!r}")

    @property
    def support(self) -> tuple[int, ...]:
        return (int(self.mu),)

    @property
    def probabilities(self) -> tuple[float, ...]:
        return (1.0,)

    def sample(self, rng: np.random.Generator) -> int:
        return int(self.mu)

    def config_value(self) -> str:
        return str(int(self.mu))


@dataclass(frozen=True)
class Empirical:
    """Finite visit-count distribution given by an explicit pmf.

    Args:
        support: distinct positive integers, the possible visit counts.
        probabilities: matching weights; must sum to 1 within 1e-12.
    """

    support: tuple[int, ...]
    probabilities: tuple[float, ...]
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __init__(self, pmf: dict[int, float]) -> None:
        if not pmf:
            raise ValueError("empirical pmf must be non-empty")
        items = sorted(pmf.items())
        support = tuple(int(k) for k, _ in items)
        probabilities = tuple(float(v) for _, v in items)
        if any(k < 1 for k in support):
            raise ValueError(f"support must be positive integers, got {support}")
        if len(set(support)) != len(support):
            raise ValueError("support values must be distinct")
        if any(p < 0 for p in probabilities):
            raise ValueError("probabilities must be non-negative")
        total = float(sum(probabilities))
        if abs(total - 1.0) > _PMF_TOL:
            raise ValueError(f"probabilities sum to {total!r}, expected 1 within {_PMF_TOL}")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probabilities", probabilities)
        object.__setattr__(self, "_cum", np.cumsum(probabilities))

    def sample(self, rng: np.random.Generator) -> int:
        # One uniform per draw, via inverse CDF. Keeping the consumption
        # pattern fixed lets matched-seed runs stay aligned across parameter
        # changes that do not touch the visit distribution.
        u = rng.random()
        idx = int(np.searchsorted(self._cum, u, side="right"))
        return self.support[min(idx, len(self.support) - 1)]

    def config_value(self) -> str:
        return ",".join(f"{k}:{p!r}" for k, p in zip(self.support, self.probabilities))


VisitDistribution = Constant | Empirical


def moments(dist: VisitDistribution) -> tuple[float, float, float]:
    """Exact moments of a visit-count distribution by summation over support.

    Returns:
        ``(mean, second_moment, variance)`` with
        ``second_moment == variance + mean**2``.
    """
    ks = np.asarray(dist.support, dtype=float)
    ps = np.asarray(dist.probabilities, dtype=float)
    mean = float(np.dot(ks, ps))
    second = float(np.dot(ks * ks, ps))
    return mean, second, second - mean * mean


def denominator(dist: VisitDistribution) -> float:
    """Pair-formation rate of a visit distribution: sigma^2 + psi*(psi - 1).

    Equals ``second_moment - mean``; for ``Constant(mu)`` this is
    ``mu*(mu - 1)``. Every closed-form prediction in :mod:`throwbox.formulas`
    divides by this quantity, so a non-positive value means those formulas do
    not apply (an agent making at most one visit creates no place pairs).

    Raises:
        ValueError: if the value is not strictly positive.
    """
    mean, second, _ = moments(dist)
    value = second - mean
    if value <= 0.0:
        raise ValueError(
            f"visit distribution has non-positive pair rate {value!r} "
            "(mean <= 1 with zero variance); closed-form coverage does not apply"
        )
    return value


@dataclass
class SimConfig:
    """Complete description of one dissemination experiment.

    Attributes:
        n_places: number of stationary buffers N.
        visits_per_agent: visit-count distribution (disjoint mode draws one
            count per agent from it).
        refresh_prob: per-time-unit probability p that an occupied place
            buffer deletes its message.
        randomness: additive smoothing delta in the place-selection weights.
        clustering_exp: exponent alpha on the selection weights.
        n_agents: total number of agents T (disjoint: one per time unit;
            overlapping: one enters per step, horizon is T steps).
        lifespan_mode: "disjoint" or "overlapping".
        visits_per_step_overlap: total visits per step in overlapping mode;
            defaults to the rounded mean of ``visits_per_agent``.
        seed: base RNG seed; ensemble run r uses seed + r.
        runs: ensemble size.
    """

    n_places: int
    visits_per_agent: VisitDistribution
    refresh_prob: float
    n_agents: int
    randomness: float = 0.0
    clustering_exp: float = 1.0
    lifespan_mode: str = "disjoint"
    visits_per_step_overlap: int | None = None
    seed: int = 0
    runs: int = 1

    def __post_init__(self) -> None:
        if self.n_places < 1:
            raise ValueError(f"n_places must be positive, got {self.n_places}")
        if self.n_agents < 1:
            raise ValueError(f"n_agents must be positive, got {self.n_agents}")
        if not 0.0 <= self.refresh_prob <= 1.0:
            raise ValueError(f"refresh_prob must lie in [0, 1], got {self.refresh_prob}")
        if self.randomness < 0.0:
            raise ValueError(f"randomness must be >= 0, got {self.randomness}")
        if self.clustering_exp < 0.0:
            raise ValueError(f"clustering_exp must be >= 0, got {self.clustering_exp}")
        if self.lifespan_mode not in ("disjoint", "overlapping"):
            raise ValueError(
                f"lifespan_mode must be 'disjoint' or 'overlapping', got {self.lifespan_mode!r}"
            )
        if self.runs < 1:
            raise ValueError(f"runs must be positive, got {self.runs}")
        mean, _, _ = moments(self.visits_per_agent)
        if mean > self.n_places:
            raise ValueError(
                f"mean visits per agent ({mean}) exceeds n_places ({self.n_places}); "
                "an agent cannot visit more distinct places than exist"
            )
        if max(self.visits_per_agent.support) > self.n_places:
            raise ValueError(
                "visit-count support exceeds n_places; distinct visits are impossible"
            )
        if self.visits_per_step_overlap is None:
            self.visits_per_step_overlap = max(1, round(mean))
        if self.visits_per_step_overlap < 1:
            raise ValueError("visits_per_step_overlap must be positive")

    # -- plain-text serialization -------------------------------------------

    def to_text(self) -> str:
        """Serialize as ``key = value`` lines (the CLI config format)."""
        lines = [
            f"n_places = {self.n_places}",
        ]
        if isinstance(self.visits_per_agent, Constant):
            lines.append(f"mu = {self.visits_per_agent.config_value()}")
        else:
            lines.append(f"visit_pmf = {self.visits_per_agent.config_value()}")
        lines += [
            f"refresh_prob = {self.refresh_prob!r}",
            f"randomness = {self.randomness!r}",
            f"clustering_exp = {self.clustering_exp!r}",
            f"n_agents = {self.n_agents}",
            f"lifespan_mode = {self.lifespan_mode}",
            f"visits_per_step_overlap = {self.visits_per_step_overlap}",
            f"seed = {self.seed}",
            f"runs = {self.runs}",
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SimConfig":
        config, extras = parse_config_text(text)
        if extras:
            raise ValueError(f"unknown config keys: {sorted(extras)}")
        return config

    @classmethod
    def from_mapping(cls, raw: dict[str, str]) -> "SimConfig":
        config, extras = _build_config(dict(raw))
        if extras:
            raise ValueError(f"unknown config keys: {sorted(extras)}")
        return config


def _parse_pmf(value: str) -> Empirical:
    pmf: dict[int, float] = {}
    for chunk in value.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        k_str, _, p_str = chunk.partition(":")
        if not p_str:
            raise ValueError(f"bad pmf entry {chunk!r}, expected 'count:prob'")
        pmf[int(k_str)] = float(p_str)
    return Empirical(pmf)


def _iter_config_lines(text: str) -> Iterator[tuple[str, str]]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        yield key.strip(), value.strip()


def parse_config_text(text: str) -> tuple[SimConfig, dict[str, str]]:
    """Parse ``key = value`` config text.

    Keys the experiment config does not own (sweep axes, thresholds, trace
    options) are returned untouched in the extras mapping for the caller.
    """
    raw: dict[str, str] = {}
    for key, value in _iter_config_lines(text):
        raw[key] = value
    return _build_config(raw)


_INT_KEYS = ("n_places", "n_agents", "seed", "runs", "visits_per_step_overlap")
_FLOAT_KEYS = ("refresh_prob", "randomness", "clustering_exp")


def _build_config(raw: dict[str, str]) -> tuple[SimConfig, dict[str, str]]:
    kwargs: dict[str, object] = {}
    if "mu" in raw and "visit_pmf" in raw:
        raise ValueError("config sets both 'mu' and 'visit_pmf'; pick one")
    if "mu" in raw:
        kwargs["visits_per_agent"] = Constant(int(raw.pop("mu")))
    elif "visit_pmf" in raw:
        kwargs["visits_per_agent"] = _parse_pmf(raw.pop("visit_pmf"))
    else:
        raise ValueError("config must set 'mu' or 'visit_pmf'")
    for key in _INT_KEYS:
        if key in raw:
            kwargs[key] = int(raw.pop(key))
    for key in _FLOAT_KEYS:
        if key in raw:
            kwargs[key] = float(raw.pop(key))
    if "lifespan_mode" in raw:
        kwargs["lifespan_mode"] = raw.pop("lifespan_mode")
    missing = {"n_places", "refresh_prob", "n_agents"} - set(kwargs)
    if missing:
        raise ValueError(f"config is missing required keys: {sorted(missing)}")
    return SimConfig(**kwargs), raw


@dataclass
class PlaceState:
    """Mutable per-place state of one run.

    ``visit_counts`` starts at one everywhere so that selection weights are
    well defined before any visit and the latent attractiveness of each place
    is symmetric at the start. ``ever_hosted`` is cumulative: refreshing a
    buffer never takes a place back out of the coverage count.
    """

    visit_counts: np.ndarray
    has_message: np.ndarray
    ever_hosted: np.ndarray

    @classmethod
    def initial(cls, n_places: int) -> "PlaceState":
        return cls(
            visit_counts=np.ones(n_places, dtype=np.int64),
            has_message=np.zeros(n_places, dtype=bool),
            ever_hosted=np.zeros(n_places, dtype=bool),
        )

    @property
    def n_places(self) -> int:
        return int(self.visit_counts.shape[0])

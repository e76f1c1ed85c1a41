"""Seeded Monte-Carlo ensembles over the dissemination engine."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .core import SimConfig
from .dtn import CoverageSeries, run_disjoint, run_overlapping, stabilized_place_coverage

__all__ = ["EnsembleResult", "ensemble"]


@dataclass
class EnsembleResult:
    """Pointwise mean and standard error over ``runs`` independent runs.

    ``final_place_coverage`` holds each run's last series value;
    ``stabilized_place_coverage`` each run's final-quarter mean, the plateau
    estimate used throughout the calibration pipeline.
    """

    config: SimConfig
    times: np.ndarray
    place_mean: np.ndarray
    place_sem: np.ndarray
    agent_mean: np.ndarray
    agent_sem: np.ndarray
    final_place_coverage: np.ndarray
    stabilized_place_coverage: np.ndarray

    @property
    def runs(self) -> int:
        return len(self.final_place_coverage)

    def mean_series(self) -> CoverageSeries:
        return CoverageSeries(
            times=self.times,
            place_coverage=self.place_mean,
            agent_coverage=self.agent_mean,
        )

    def stabilized_mean(self) -> float:
        return float(np.mean(self.stabilized_place_coverage))

    def stabilized_sem(self) -> float:
        if self.runs < 2:
            return 0.0
        return float(
            np.std(self.stabilized_place_coverage, ddof=1) / np.sqrt(self.runs)
        )

    def to_csv(self, path: str) -> None:
        header = (
            "time,place_coverage_mean,place_coverage_sem,"
            "agent_coverage_mean,agent_coverage_sem"
        )
        data = np.column_stack(
            [self.times, self.place_mean, self.place_sem, self.agent_mean, self.agent_sem]
        )
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.10g")

    def to_json(self, path: str) -> None:
        payload = {
            "runs": self.runs,
            "times": self.times.tolist(),
            "place_coverage_mean": self.place_mean.tolist(),
            "place_coverage_sem": self.place_sem.tolist(),
            "agent_coverage_mean": self.agent_mean.tolist(),
            "agent_coverage_sem": self.agent_sem.tolist(),
            "final_place_coverage": self.final_place_coverage.tolist(),
            "stabilized_place_coverage": self.stabilized_place_coverage.tolist(),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)


def _run_one(config: SimConfig, run_index: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rng = np.random.default_rng(config.seed + run_index)
    runner = run_overlapping if config.lifespan_mode == "overlapping" else run_disjoint
    series = runner(config, rng)
    return series.times, series.place_coverage, series.agent_coverage


def _run_block(config: SimConfig, indices: list[int]) -> list[tuple[np.ndarray, np.ndarray]]:
    return [(r[1], r[2]) for r in (_run_one(config, i) for i in indices)]


def ensemble(config: SimConfig, parallelism: int = 1) -> EnsembleResult:
    """Run ``config.runs`` independent runs; run ``r`` uses seed ``seed + r``.

    Aggregation is by run index, so the result is identical for any
    ``parallelism`` (worker count only changes wall time).
    """
    runs = config.runs
    indices = list(range(runs))
    if parallelism > 1 and runs > 1:
        workers = min(parallelism, runs)
        blocks = [indices[w::workers] for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_block, [config] * len(blocks), blocks))
        by_index: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        for block, block_result in zip(blocks, results):
            for idx, pair in zip(block, block_result):
                by_index[idx] = pair
        pairs = [by_index[i] for i in indices]
        times = _run_one(replace(config, runs=1), 0)[0]
    else:
        singles = [_run_one(config, i) for i in indices]
        times = singles[0][0]
        pairs = [(s[1], s[2]) for s in singles]

    place = np.stack([p for p, _ in pairs]).astype(np.float64)
    agent = np.stack([a for _, a in pairs]).astype(np.float64)
    sqrt_n = np.sqrt(runs)
    if runs > 1:
        place_sem = place.std(axis=0, ddof=1) / sqrt_n
        agent_sem = agent.std(axis=0, ddof=1) / sqrt_n
    else:
        place_sem = np.zeros_like(place[0])
        agent_sem = np.zeros_like(agent[0])

    q = max(1, place.shape[1] // 4)
    stabilized = place[:, -q:].mean(axis=1)

    return EnsembleResult(
        config=config,
        times=times,
        place_mean=place.mean(axis=0),
        place_sem=place_sem,
        agent_mean=agent.mean(axis=0),
        agent_sem=agent_sem,
        final_place_coverage=place[:, -1].copy(),
        stabilized_place_coverage=stabilized,
    )

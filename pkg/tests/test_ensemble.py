"""Seeded ensemble aggregation."""

import json

import numpy as np
import pytest

from throwbox.core import Constant, SimConfig
from throwbox.dtn import run_disjoint
from throwbox.ensemble import EnsembleResult, ensemble


def _cfg(**kw):
    defaults = dict(
        n_places=25,
        visits_per_agent=Constant(5),
        refresh_prob=0.1,
        n_agents=150,
        seed=11,
        runs=5,
    )
    defaults.update(kw)
    return SimConfig(**defaults)


class TestEnsemble:
    def test_mean_and_sem_match_manual_aggregation(self):
        cfg = _cfg()
        result = ensemble(cfg)
        manual = np.stack(
            [
                run_disjoint(cfg, np.random.default_rng(cfg.seed + r)).place_coverage
                for r in range(cfg.runs)
            ]
        ).astype(float)
        assert result.place_mean == pytest.approx(manual.mean(axis=0))
        expected_sem = manual.std(axis=0, ddof=1) / np.sqrt(cfg.runs)
        assert result.place_sem == pytest.approx(expected_sem)
        assert result.final_place_coverage == pytest.approx(manual[:, -1])

    def test_runs_attribute_and_reproducibility(self):
        a = ensemble(_cfg())
        b = ensemble(_cfg())
        assert a.runs == 5
        assert a.place_mean == pytest.approx(b.place_mean)
        assert a.agent_mean == pytest.approx(b.agent_mean)

    def test_parallel_equals_serial(self):
        serial = ensemble(_cfg())
        parallel = ensemble(_cfg(), parallelism=3)
        assert serial.place_mean == pytest.approx(parallel.place_mean)
        assert serial.place_sem == pytest.approx(parallel.place_sem)
        assert serial.final_place_coverage == pytest.approx(parallel.final_place_coverage)

    def test_single_run_has_zero_sem(self):
        result = ensemble(_cfg(runs=1))
        assert np.all(result.place_sem == 0.0)

    def test_overlapping_mode_dispatch(self):
        result = ensemble(_cfg(lifespan_mode="overlapping", runs=2))
        assert result.agent_mean[0] == 0.0  # overlapping series starts at (0, 0)

    def test_stabilized_statistics(self):
        result = ensemble(_cfg())
        per_run = result.stabilized_place_coverage
        assert len(per_run) == 5
        assert result.stabilized_mean() == pytest.approx(float(np.mean(per_run)))
        assert result.stabilized_sem() == pytest.approx(
            float(np.std(per_run, ddof=1) / np.sqrt(5))
        )


class TestSerialization:
    def test_csv_round_trip(self, tmp_path):
        result = ensemble(_cfg(runs=2))
        path = tmp_path / "series.csv"
        result.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == (
            "time,place_coverage_mean,place_coverage_sem,"
            "agent_coverage_mean,agent_coverage_sem"
        )
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert data.shape == (len(result.times), 5)
        assert data[:, 1] == pytest.approx(result.place_mean, rel=1e-9)

    def test_json_round_trip(self, tmp_path):
        result = ensemble(_cfg(runs=2))
        path = tmp_path / "series.json"
        result.to_json(path)
        payload = json.loads(path.read_text())
        assert payload["place_coverage_mean"] == pytest.approx(result.place_mean.tolist())
        assert payload["runs"] == 2

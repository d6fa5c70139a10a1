import math

import numpy as np
import pytest

from persmeasure import pers_p
from persmeasure.experiments import (
    ExperimentConfig,
    convergence_experiment,
    limit_measure_discretization,
    rescaled_empirical_measure,
    rips_h0_diagram_1d,
)


class TestRips:
    def test_examples(self):
        assert rips_h0_diagram_1d([0, 1]).points.tolist() == [[0, 1]]
        assert sorted(rips_h0_diagram_1d([1, 0.25, 0]).points.tolist()) == [[0, 0.25], [0, 0.75]]
        dgm = rips_h0_diagram_1d(np.arange(6) * 0.5)
        assert dgm.points.tolist() == [[0, 0.5]] and dgm.masses.tolist() == [5.0]

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            rips_h0_diagram_1d([3.0])

    def test_repeated_points(self):
        assert rips_h0_diagram_1d([0, 0, 1]).total_mass == 1

    def test_gaps_sum_to_range(self):
        # dyadic points: every gap and partial sum is exact
        rng = np.random.default_rng(0)
        x = rng.integers(0, 2**20, 50) / 2**20
        dgm = rips_h0_diagram_1d(x)
        assert float(np.dot(dgm.points[:, 1], dgm.masses)) == x.max() - x.min()
        y = rng.uniform(0, 1, 200)
        dgm = rips_h0_diagram_1d(y)
        assert math.fsum(dgm.points[:, 1] * dgm.masses) == pytest.approx(y.max() - y.min(), abs=1e-12)


class TestRescaled:
    def test_two_points(self):
        mu = rescaled_empirical_measure([0.0, 0.5])
        assert mu.points.tolist() == [[0, 1]] and mu.masses.tolist() == [0.5]

    def test_total_mass(self):
        x = np.random.default_rng(1).uniform(0, 1, 17)
        assert rescaled_empirical_measure(x).total_mass == pytest.approx(16 / 17, rel=1e-14)


class TestLimit:
    def test_examples(self):
        mu = limit_measure_discretization(1)
        assert mu.points.tolist() == [[0, pytest.approx(math.log(2))]] and mu.masses.tolist() == [1.0]
        mu = limit_measure_discretization(2)
        assert mu.points[:, 1] == pytest.approx([-math.log(0.75), -math.log(0.25)])
        assert mu.total_mass == pytest.approx(1.0)

    def test_persistence_converges(self):
        assert pers_p(limit_measure_discretization(1000), 1) == pytest.approx(1 / math.sqrt(2), rel=1e-2)

    def test_validation(self):
        with pytest.raises(ValueError):
            limit_measure_discretization(0)
        with pytest.raises(ValueError):
            limit_measure_discretization(3, "gaussian")


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            ExperimentConfig(n_values=(1, 2))
        with pytest.raises(ValueError):
            ExperimentConfig(trials=0)
        with pytest.raises(ValueError):
            ExperimentConfig(m=0)
        with pytest.raises(ValueError):
            ExperimentConfig(seed=-1)
        with pytest.raises(ValueError):
            ExperimentConfig(p=0.5)


class TestConvergence:
    def test_deterministic(self):
        cfg = ExperimentConfig(n_values=(4, 3), trials=3, m=50, seed=7)
        rows = convergence_experiment(cfg)
        assert [r.n for r in rows] == [3, 4]
        assert rows == convergence_experiment(cfg)
        assert all(r.p10 <= r.median <= r.p90 for r in rows)

    def test_single_trial(self):
        rows = convergence_experiment(ExperimentConfig(n_values=(5,), trials=1, m=20, seed=1))
        assert rows[0].p10 == rows[0].median == rows[0].p90

    def test_schedule_independent(self):
        a = convergence_experiment(ExperimentConfig(n_values=(3, 6), trials=4, m=30, seed=11))
        b = convergence_experiment(ExperimentConfig(n_values=(6,), trials=4, m=30, seed=11))
        assert a[1] == b[0]

    def test_limit_against_itself(self):
        cfg = ExperimentConfig(n_values=(2, 10), trials=2, m=40, seed=0)
        rows = convergence_experiment(cfg, empirical=lambda n, rng: limit_measure_discretization(40))
        assert all(r.median == 0.0 and r.p90 == 0.0 for r in rows)

    def test_decreasing_trend(self):
        rows = convergence_experiment(ExperimentConfig(n_values=(5, 40), trials=20, m=200, seed=3))
        assert rows[1].median < rows[0].median

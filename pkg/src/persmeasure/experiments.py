"""Law-of-large-numbers experiment for rescaled 1D Rips diagrams.

For ``n`` uniform points on ``[0, 1]`` the H0 diagram of the Rips filtration
has one atom ``(0, gap)`` per pair of neighbouring points.  Scaling the gaps
by ``n`` and dividing the mass by ``n`` gives a measure that converges to the
measure on ``{0} x (0, inf)`` with density ``exp(-u)``.  The experiment
tracks ``OT_p`` between the two as ``n`` grows.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .measures import PersistenceMeasure, check_exponent
from .transport import ot_distance

__all__ = [
    "ExperimentConfig",
    "ConvergenceRow",
    "rips_h0_diagram_1d",
    "sample_uniform",
    "rescaled_empirical_measure",
    "limit_measure_discretization",
    "convergence_experiment",
]

DENSITIES = ("uniform",)


@dataclass(frozen=True)
class ExperimentConfig:
    n_values: tuple = tuple(range(2, 51))
    trials: int = 100
    p: float = 2.0
    density: str = "uniform"
    m: int = 1000
    seed: int = 0

    def __post_init__(self):
        n_values = tuple(int(n) for n in self.n_values)
        if not n_values or min(n_values) < 2:
            raise ValueError("every sample size must be at least 2")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.m < 1:
            raise ValueError("the limit discretization needs m >= 1 atoms")
        if self.density not in DENSITIES:
            raise ValueError(f"unknown density {self.density!r}; choose from {DENSITIES}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "n_values", n_values)
        object.__setattr__(self, "p", check_exponent(self.p, allow_infinity=False))
        object.__setattr__(self, "seed", int(self.seed))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n_values"] = list(self.n_values)
        return d


class ConvergenceRow(NamedTuple):
    n: int
    median: float
    p10: float
    p90: float


def rips_h0_diagram_1d(points: Sequence[float]) -> PersistenceMeasure:
    """H0 diagram of the Rips filtration of points on the line, infinite bar removed.

    Components merge when the gap between neighbours closes, so the finite
    bars are ``(0, gap)`` for each consecutive gap.  Zero gaps (repeated
    points) lie on the diagonal and are omitted.
    """
    x = np.sort(np.asarray(points, dtype=float).reshape(-1))
    if len(x) < 2:
        raise ValueError("need at least 2 points for a finite H0 bar")
    gaps = np.diff(x)
    gaps = gaps[gaps > 0]
    return PersistenceMeasure(np.column_stack([np.zeros_like(gaps), gaps]))


def sample_uniform(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.0, 1.0, size=n)


def rescaled_empirical_measure(sample: Sequence[float]) -> PersistenceMeasure:
    """Diagram of ``n * sample`` with every atom given mass ``1/n``."""
    x = np.asarray(sample, dtype=float).reshape(-1)
    n = len(x)
    dgm = rips_h0_diagram_1d(n * x)
    return PersistenceMeasure(dgm.points, dgm.masses / n)


def limit_measure_discretization(m: int = 1000, density: str = "uniform") -> PersistenceMeasure:
    """``m`` atoms at the midpoint quantiles of Exp(1), mass ``1/m`` each."""
    if m < 1:
        raise ValueError("m must be at least 1")
    if density not in DENSITIES:
        raise ValueError(f"unknown density {density!r}")
    j = np.arange(1, m + 1)
    u = -np.log1p(-(j - 0.5) / m)
    return PersistenceMeasure(np.column_stack([np.zeros(m), u]), np.full(m, 1.0 / m))


def _trial_rng(seed: int, n: int, trial: int) -> np.random.Generator:
    # one independent stream per (seed, n, trial), whatever the evaluation order
    return np.random.default_rng([seed, n, trial])


def convergence_experiment(
    cfg: ExperimentConfig,
    empirical: Optional[Callable[[int, np.random.Generator], PersistenceMeasure]] = None,
) -> list:
    """Median and 10/90 percentiles of ``OT_p(mu_n, mu)`` for each ``n`` in ``cfg.n_values``.

    ``empirical(n, rng)`` replaces the default draw of the rescaled measure.
    Rows come back sorted by ``n``.
    """
    limit = limit_measure_discretization(cfg.m, cfg.density)
    if empirical is None:

        def empirical(n, rng):
            return rescaled_empirical_measure(sample_uniform(n, rng))

    rows = []
    for n in sorted(set(cfg.n_values)):
        vals = np.array(
            [ot_distance(empirical(n, _trial_rng(cfg.seed, n, t)), limit, cfg.p) for t in range(cfg.trials)]
        )
        p10, med, p90 = np.percentile(vals, [10, 50, 90], method="linear")
        rows.append(ConvergenceRow(n, float(med), float(p10), float(p90)))
    return rows

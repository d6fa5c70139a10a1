"""Linear representations ``mu -> mu(f)`` sampled on a grid.

Every representation here is a sum over atoms of ``mass * f(atom)`` where
``f`` carries a factor of the distance to the diagonal.  That factor is what
makes the map continuous for ``OT_p``: atoms drifting towards the diagonal
contribute less and less, however much mass they carry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .measures import PersistenceMeasure, check_exponent, diag_distances

__all__ = [
    "RepresentationGrid",
    "SurfaceConfig",
    "persistence_surface",
    "weighted_surface",
    "silhouette",
    "betti_curve",
    "capped_persistence",
    "stock_features",
    "lipschitz_feature_gap",
]

Feature = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class RepresentationGrid:
    """Regular lattice of evaluation nodes, endpoints included.

    ``bounds`` holds one ``(lo, hi)`` pair per axis and ``resolution`` the
    number of nodes per axis.  One axis gives a line of ``t`` values, two
    axes a plane of ``(birth, death)`` nodes.
    """

    bounds: tuple
    resolution: tuple

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        resolution = tuple(int(r) for r in self.resolution)
        if len(bounds) not in (1, 2) or len(resolution) != len(bounds):
            raise ValueError("a grid has one or two axes, each with bounds and a resolution")
        for (lo, hi), r in zip(bounds, resolution):
            if r < 1:
                raise ValueError("resolution must be at least 1")
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValueError("grid bounds must be finite")
            if hi < lo or (hi == lo and r > 1):
                raise ValueError(f"grid bounds ({lo}, {hi}) are not ordered")
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "resolution", resolution)

    @classmethod
    def line(cls, t_min: float, t_max: float, samples: int) -> "RepresentationGrid":
        return cls(((t_min, t_max),), (samples,))

    @classmethod
    def plane(cls, x_min, x_max, y_min, y_max, nx: int, ny: Optional[int] = None) -> "RepresentationGrid":
        return cls(((x_min, x_max), (y_min, y_max)), (nx, nx if ny is None else ny))

    @property
    def ndim(self) -> int:
        return len(self.bounds)

    @property
    def shape(self) -> tuple:
        return self.resolution

    def axis(self, k: int = 0) -> np.ndarray:
        (lo, hi), r = self.bounds[k], self.resolution[k]
        return np.linspace(lo, hi, r)


@dataclass(frozen=True)
class SurfaceConfig:
    """Gaussian bandwidth ``sigma`` and persistence weight exponent ``p``."""

    sigma: float = 1.0
    p: float = 1.0

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError("bandwidth sigma must be positive and finite")
        object.__setattr__(self, "p", check_exponent(self.p, allow_infinity=False))


def _require(grid: RepresentationGrid, ndim: int) -> None:
    if grid.ndim != ndim:
        raise ValueError(f"expected a {ndim}D grid, got {grid.ndim}D")


def weighted_surface(mu: PersistenceMeasure, sigma: float, weight_power: float, grid: RepresentationGrid) -> np.ndarray:
    """Gaussian surface with atom weights ``mass * d(x, diagonal)**weight_power``.

    Any ``weight_power >= 0`` is accepted so that under-weighted variants can
    be compared with :func:`persistence_surface`.  The result has shape
    ``grid.shape`` and ``out[i, j]`` is the value at ``(x_i, y_j)``.
    """
    _require(grid, 2)
    if not sigma > 0:
        raise ValueError("bandwidth sigma must be positive")
    if weight_power < 0:
        raise ValueError("weight_power must be nonnegative")
    xs, ys = grid.axis(0), grid.axis(1)
    if mu.n_atoms == 0:
        return np.zeros(grid.shape)
    w = mu.masses * diag_distances(mu.points) ** weight_power
    # the Gaussian factorizes over the two axes
    ex = np.exp(-((xs[:, None] - mu.points[None, :, 0]) ** 2) / (2 * sigma**2))
    ey = np.exp(-((ys[:, None] - mu.points[None, :, 1]) ** 2) / (2 * sigma**2))
    return np.einsum("ik,jk,k->ij", ex, ey, w)


def persistence_surface(mu: PersistenceMeasure, cfg: SurfaceConfig, grid: RepresentationGrid) -> np.ndarray:
    """Sum over atoms of ``mass * d(x, diagonal)**p * exp(-|x - g|**2 / (2 sigma**2))``."""
    return weighted_surface(mu, cfg.sigma, cfg.p, grid)


def silhouette(mu: PersistenceMeasure, p: float, grid: RepresentationGrid) -> np.ndarray:
    """Persistence-weighted sum of tent functions.

    The tent of ``(b, d)`` peaks at ``(d - b) / 2`` over the midpoint and
    vanishes outside ``[b, d]``; it is weighted by ``mass * d(x, diagonal)**(p - 1)``.
    """
    _require(grid, 1)
    p = check_exponent(p, allow_infinity=False)
    t = grid.axis(0)
    if mu.n_atoms == 0:
        return np.zeros(grid.shape)
    b, d = mu.points[:, 0], mu.points[:, 1]
    tent = np.maximum((d - b)[None, :] / 2 - np.abs(t[:, None] - (b + d)[None, :] / 2), 0.0)
    w = mu.masses * diag_distances(mu.points) ** (p - 1)
    return tent @ w


def betti_curve(mu: PersistenceMeasure, p: float, q: float, grid: RepresentationGrid) -> np.ndarray:
    """Weighted count of atoms alive at ``t``: ``sum mass * d(x, diagonal)**(p - 1/q) * 1{b <= t <= d}``.

    With ``p = q = 1`` this is the usual Betti curve.
    """
    _require(grid, 1)
    p = check_exponent(p, allow_infinity=False)
    q = check_exponent(q, allow_infinity=False)
    t = grid.axis(0)
    if mu.n_atoms == 0:
        return np.zeros(grid.shape)
    b, d = mu.points[:, 0], mu.points[:, 1]
    alive = (b[None, :] <= t[:, None]) & (t[:, None] <= d[None, :])
    w = mu.masses * diag_distances(mu.points) ** (p - 1.0 / q)
    return alive.astype(float) @ w


def capped_persistence(t: float) -> Feature:
    """The test function ``x -> min(d(x, diagonal), t)``: 1-Lipschitz and zero on the diagonal."""

    def f(points: np.ndarray) -> np.ndarray:
        return np.minimum(diag_distances(points), t)

    f.threshold = t
    return f


def stock_features(measures: Iterable[PersistenceMeasure]) -> list:
    """Capped-persistence functions at every breakpoint of the given measures.

    ``t -> mu(min(d, t)) - nu(min(d, t))`` is piecewise linear with kinks at
    the atoms' diagonal distances, so its largest absolute value over all
    ``t > 0`` is reached at one of them.
    """
    levels = set()
    for mu in measures:
        levels.update(diag_distances(mu.points).tolist())
    return [capped_persistence(t) for t in sorted(levels)]


def _integrate(mu: PersistenceMeasure, f: Feature) -> float:
    if mu.n_atoms == 0:
        return 0.0
    return float(np.dot(mu.masses, f(mu.points)))


def lipschitz_feature_gap(mu: PersistenceMeasure, nu: PersistenceMeasure, features: Optional[Sequence[Feature]] = None) -> float:
    """Largest ``|mu(f) - nu(f)|`` over the given test functions.

    Features take an ``(k, 2)`` array of points and return ``k`` values.
    Without ``features`` the capped-persistence family is used, for which
    the supremum over all thresholds is computed exactly.
    """
    if features is None:
        features = stock_features([mu, nu])
    gap = 0.0
    for f in features:
        gap = max(gap, abs(_integrate(mu, f) - _integrate(nu, f)))
    return gap

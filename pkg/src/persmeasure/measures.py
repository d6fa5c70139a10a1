"""Persistence measures on the open upper half-plane and their elementary geometry.

A persistence measure is stored as a finite list of atoms ``(birth, death)``
with positive masses.  Persistence diagrams are the special case where every
mass is an integer.  The diagonal is represented by the sentinel :data:`DIAG`,
which is the single extra point of the quotient space used by the transport
routines.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

import numpy as np

__all__ = [
    "DIAG",
    "INFINITY",
    "PlanarPoint",
    "PersistenceMeasure",
    "check_exponent",
    "diag_distance",
    "diag_distances",
    "pers_p",
    "truncate",
    "ground_rho",
    "rho_matrix",
]

INFINITY = math.inf
SQRT2 = math.sqrt(2.0)


class _Diagonal:
    """The diagonal collapsed to a single point."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "DIAG"

    def __reduce__(self):
        return (_Diagonal, ())


DIAG = _Diagonal()


@dataclass(frozen=True)
class PlanarPoint:
    birth: float
    death: float

    def __post_init__(self):
        b, d = float(self.birth), float(self.death)
        if not (math.isfinite(b) and math.isfinite(d)):
            raise ValueError(
                f"point ({b}, {d}) has a non-finite coordinate; infinite bars are not supported"
            )
        if not d > b:
            raise ValueError(f"point ({b}, {d}) is not strictly above the diagonal")
        object.__setattr__(self, "birth", b)
        object.__setattr__(self, "death", d)

    def as_array(self) -> np.ndarray:
        return np.array([self.birth, self.death])


PointLike = Union[PlanarPoint, _Diagonal, tuple, np.ndarray]


def check_exponent(p, allow_infinity: bool = True) -> float:
    """Validate a transport exponent and return it as a float."""
    p = float(p)
    if math.isnan(p) or p < 1:
        raise ValueError(f"exponent must satisfy p >= 1, got {p}")
    if math.isinf(p) and not allow_infinity:
        raise ValueError("a finite exponent is required here")
    return p


class PersistenceMeasure:
    """Finite atomic measure on the open upper half-plane.

    Atoms sharing exactly the same coordinates are merged at construction
    by summing their masses, and atoms are kept in lexicographic
    ``(birth, death)`` order so that equal measures have equal arrays.
    Instances are immutable.

    Parameters
    ----------
    points : array_like, shape (k, 2)
        Birth/death coordinates.
    masses : array_like, shape (k,), optional
        Positive masses. Defaults to 1 for every atom.
    """

    __slots__ = ("_points", "_masses")

    def __init__(self, points=(), masses=None):
        pts = np.asarray(points, dtype=float)
        if pts.size == 0:
            pts = pts.reshape(0, 2)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must have shape (k, 2), got {pts.shape}")
        if masses is None:
            ms = np.ones(len(pts))
        else:
            ms = np.asarray(masses, dtype=float).reshape(-1)
            if ms.shape[0] != pts.shape[0]:
                raise ValueError("points and masses have different lengths")
        if not np.all(np.isfinite(pts)):
            raise ValueError("non-finite coordinates (infinite bars) are not supported")
        if np.any(pts[:, 1] <= pts[:, 0]):
            bad = pts[np.argmax(pts[:, 1] <= pts[:, 0])]
            raise ValueError(f"point {tuple(bad)} is not strictly above the diagonal")
        if not np.all(np.isfinite(ms)) or np.any(ms <= 0):
            raise ValueError("masses must be finite and strictly positive")
        if len(pts):
            uniq, inverse = np.unique(pts, axis=0, return_inverse=True)
            ms = np.bincount(inverse.reshape(-1), weights=ms, minlength=len(uniq))
            pts = uniq
        pts.setflags(write=False)
        ms.setflags(write=False)
        self._points = pts
        self._masses = ms

    @classmethod
    def empty(cls) -> "PersistenceMeasure":
        return cls()

    @classmethod
    def from_atoms(cls, atoms: Iterable) -> "PersistenceMeasure":
        """Build from ``(point, mass)`` pairs where point is a PlanarPoint or a pair."""
        pts, ms = [], []
        for point, mass in atoms:
            if isinstance(point, PlanarPoint):
                pts.append((point.birth, point.death))
            else:
                pts.append(tuple(point))
            ms.append(mass)
        return cls(pts, ms)

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def masses(self) -> np.ndarray:
        return self._masses

    @property
    def n_atoms(self) -> int:
        return len(self._masses)

    @property
    def total_mass(self) -> float:
        return float(self._masses.sum())

    @property
    def is_diagram(self) -> bool:
        """True when every mass is an integer."""
        return bool(np.all(self._masses == np.round(self._masses)))

    def atoms(self) -> Iterator[tuple[PlanarPoint, float]]:
        for (b, d), m in zip(self._points, self._masses):
            yield PlanarPoint(b, d), float(m)

    def expanded_points(self) -> np.ndarray:
        """Points repeated by multiplicity; only defined for diagrams."""
        if not self.is_diagram:
            raise ValueError("multiplicity expansion requires integer masses")
        return np.repeat(self._points, self._masses.astype(int), axis=0)

    def scaled(self, c: float) -> "PersistenceMeasure":
        if c < 0:
            raise ValueError("scaling factor must be nonnegative")
        if c == 0 or self.n_atoms == 0:
            return PersistenceMeasure.empty()
        return PersistenceMeasure(self._points, self._masses * c)

    def __add__(self, other: "PersistenceMeasure") -> "PersistenceMeasure":
        if not isinstance(other, PersistenceMeasure):
            return NotImplemented
        return PersistenceMeasure(
            np.vstack([self._points, other._points]),
            np.concatenate([self._masses, other._masses]),
        )

    def __len__(self) -> int:
        return self.n_atoms

    def __eq__(self, other) -> bool:
        if not isinstance(other, PersistenceMeasure):
            return NotImplemented
        return (
            self._points.shape == other._points.shape
            and np.array_equal(self._points, other._points)
            and np.array_equal(self._masses, other._masses)
        )

    def __hash__(self):
        return hash((self._points.tobytes(), self._masses.tobytes()))

    def __repr__(self) -> str:
        if self.n_atoms > 6:
            return f"PersistenceMeasure(<{self.n_atoms} atoms, mass {self.total_mass:g}>)"
        atoms = ", ".join(f"({b:g}, {d:g}): {m:g}" for (b, d), m in zip(self._points, self._masses))
        return f"PersistenceMeasure({{{atoms}}})"


def _coords(x) -> np.ndarray:
    if isinstance(x, PlanarPoint):
        return x.as_array()
    return np.asarray(x, dtype=float)


def diag_distances(points: np.ndarray) -> np.ndarray:
    """Euclidean distance of each row ``(birth, death)`` to the diagonal."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    return (points[:, 1] - points[:, 0]) / SQRT2


def diag_distance(x: PointLike) -> float:
    """Distance from ``x`` to its orthogonal projection on the diagonal.

    ``DIAG`` itself is at distance 0.
    """
    if x is DIAG:
        return 0.0
    c = _coords(x)
    return float((c[1] - c[0]) / SQRT2)


def pers_p(mu: PersistenceMeasure, p) -> float:
    """Total ``p``-persistence; the largest diagonal distance when ``p`` is infinite."""
    p = check_exponent(p)
    if mu.n_atoms == 0:
        return 0.0
    dd = diag_distances(mu.points)
    if math.isinf(p):
        return float(dd.max())
    return float(np.dot(mu.masses, dd**p))


def truncate(mu: PersistenceMeasure, r: float) -> PersistenceMeasure:
    """Keep only the atoms farther than ``r`` from the diagonal."""
    if not r > 0:
        raise ValueError("truncation radius must be positive")
    keep = diag_distances(mu.points) > r
    if not keep.any():
        return PersistenceMeasure.empty()
    return PersistenceMeasure(mu.points[keep], mu.masses[keep])


def ground_rho(x: PointLike, y: PointLike) -> float:
    """Quotient metric: direct distance or the route through the diagonal, whichever is shorter."""
    if x is DIAG and y is DIAG:
        return 0.0
    if x is DIAG:
        return diag_distance(y)
    if y is DIAG:
        return diag_distance(x)
    cx, cy = _coords(x), _coords(y)
    direct = math.hypot(cx[0] - cy[0], cx[1] - cy[1])
    return min(direct, diag_distance(cx) + diag_distance(cy))


def euclidean_matrix(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    P = np.asarray(P, dtype=float).reshape(-1, 2)
    Q = np.asarray(Q, dtype=float).reshape(-1, 2)
    return np.hypot(P[:, None, 0] - Q[None, :, 0], P[:, None, 1] - Q[None, :, 1])


def rho_matrix(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Pairwise quotient distances between two point arrays (no DIAG rows)."""
    direct = euclidean_matrix(P, Q)
    via = diag_distances(P)[:, None] + diag_distances(Q)[None, :]
    return np.minimum(direct, via)

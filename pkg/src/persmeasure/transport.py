"""Optimal partial transport between finite persistence measures.

Mass may be created or destroyed on the diagonal at a cost equal to the
distance to the diagonal.  For finite measures the problem becomes a balanced
transport problem once each side receives a diagonal atom carrying the mass
of the other side; the ground cost is then the quotient metric ``rho``.  The
diagonal is aggregated into a single node, so a problem with ``n`` and ``m``
atoms is solved on an ``(n + 1) x (m + 1)`` cost matrix.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .measures import (
    DIAG,
    PersistenceMeasure,
    check_exponent,
    diag_distances,
    euclidean_matrix,
    ground_rho,
)

# POT probes every installed array backend on import; only numpy is used here.
for _backend in ("TENSORFLOW", "PYTORCH", "JAX", "CUPY"):
    os.environ.setdefault(f"POT_BACKEND_DISABLE_{_backend}", "1")
import ot  # noqa: E402

__all__ = [
    "AugmentedMeasure",
    "NumericalFailure",
    "TransportPlan",
    "augment",
    "augmented_coupling",
    "cost_matrix",
    "ot_cost",
    "ot_distance",
    "optimal_plan",
    "total_cost",
    "bottleneck_distance",
    "mean_measure",
]

MARGINAL_RTOL = 1e-9
_EMD_MAX_ITER = 10_000_000


class NumericalFailure(RuntimeError):
    """Raised when a solver does not reach an optimal solution."""


@dataclass(frozen=True)
class AugmentedMeasure:
    """A measure plus a mass sitting on the collapsed diagonal."""

    measure: PersistenceMeasure
    diag_mass: float

    @property
    def total_mass(self) -> float:
        return self.measure.total_mass + self.diag_mass

    def weights(self) -> np.ndarray:
        """Atom masses followed by the diagonal mass."""
        return np.append(self.measure.masses, self.diag_mass)


def augment(mu: PersistenceMeasure, nu: PersistenceMeasure) -> tuple[AugmentedMeasure, AugmentedMeasure]:
    """Pad both measures with diagonal mass up to ``r = mu(Omega) + nu(Omega)``."""
    m_mu, m_nu = mu.total_mass, nu.total_mass
    return AugmentedMeasure(mu, m_nu), AugmentedMeasure(nu, m_mu)


def cost_matrix(mu: PersistenceMeasure, nu: PersistenceMeasure, p) -> np.ndarray:
    """``rho**p`` between atoms of ``mu`` (rows) and ``nu`` (columns).

    The last row and column stand for the diagonal; their shared corner is 0.
    For ``p = inf`` the unpowered distances are returned.
    """
    p = check_exponent(p)
    n, m = mu.n_atoms, nu.n_atoms
    C = np.zeros((n + 1, m + 1))
    dmu = diag_distances(mu.points)
    dnu = diag_distances(nu.points)
    C[:n, :m] = np.minimum(euclidean_matrix(mu.points, nu.points), dmu[:, None] + dnu[None, :])
    C[:n, m] = dmu
    C[n, :m] = dnu
    if not math.isinf(p):
        C = C**p
    return C


def augmented_coupling(mu: PersistenceMeasure, nu: PersistenceMeasure, p: float):
    """Solve the balanced augmented problem.

    Returns the optimal coupling and the cost matrix, both of shape
    ``(n + 1, m + 1)`` with the diagonal in the last row and column.
    """
    a_aug, b_aug = augment(mu, nu)
    a, b = a_aug.weights(), b_aug.weights()
    C = cost_matrix(mu, nu, p)
    if a_aug.total_mass == 0:
        return np.zeros_like(C), C
    G, log = ot.emd(a, b, C, numItermax=_EMD_MAX_ITER, log=True)
    if log.get("warning"):
        raise NumericalFailure(f"network simplex did not converge: {log['warning']}")
    return np.asarray(G), C


def _order_key(mu: PersistenceMeasure):
    return (mu.n_atoms, mu.points.tobytes(), mu.masses.tobytes())


def ot_cost(mu: PersistenceMeasure, nu: PersistenceMeasure, p) -> float:
    """Optimal transport cost ``OT_p(mu, nu) ** p``."""
    p = check_exponent(p, allow_infinity=False)
    # solve both orientations as the same problem so the value is exactly symmetric
    if _order_key(nu) < _order_key(mu):
        mu, nu = nu, mu
    G, C = augmented_coupling(mu, nu, p)
    return max(float(np.sum(G * C)), 0.0)


def ot_distance(mu: PersistenceMeasure, nu: PersistenceMeasure, p) -> float:
    """Optimal partial transport distance ``OT_p`` for finite ``p``."""
    p = check_exponent(p, allow_infinity=False)
    return ot_cost(mu, nu, p) ** (1.0 / p)


@dataclass(frozen=True)
class TransportPlan:
    """Sparse admissible plan between two measures.

    Each edge is ``(source, target, mass)`` where source is an atom index of
    ``source_measure`` or ``DIAG`` and target an atom index of
    ``target_measure`` or ``DIAG``.  Mass sent to ``DIAG`` lands on the
    orthogonal projection of its atom.
    """

    edges: tuple
    p: float
    source_measure: PersistenceMeasure = field(repr=False)
    target_measure: PersistenceMeasure = field(repr=False)

    def source_marginal(self) -> np.ndarray:
        out = np.zeros(self.source_measure.n_atoms)
        for s, _, w in self.edges:
            if s is not DIAG:
                out[s] += w
        return out

    def target_marginal(self) -> np.ndarray:
        out = np.zeros(self.target_measure.n_atoms)
        for _, t, w in self.edges:
            if t is not DIAG:
                out[t] += w
        return out

    def check_marginals(self, rtol: float = MARGINAL_RTOL) -> bool:
        scale = max(self.source_measure.total_mass, self.target_measure.total_mass, 1.0)
        ok_src = np.allclose(self.source_marginal(), self.source_measure.masses, rtol=rtol, atol=rtol * scale)
        ok_tgt = np.allclose(self.target_marginal(), self.target_measure.masses, rtol=rtol, atol=rtol * scale)
        return bool(ok_src and ok_tgt)

    def to_dict(self) -> dict:
        def node(x):
            return "DIAG" if x is DIAG else int(x)

        return {
            "p": self.p,
            "cost": total_cost(self, self.p),
            "edges": [{"src": node(s), "tgt": node(t), "mass": float(w)} for s, t, w in self.edges],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def optimal_plan(mu: PersistenceMeasure, nu: PersistenceMeasure, p) -> TransportPlan:
    """An optimal plan, mapped back from the augmented problem.

    Atom-to-atom mass whose cheapest route passes through the diagonal is
    split into an atom-to-DIAG and a DIAG-to-atom edge, so every edge cost
    is measured with the plain distance.
    """
    p = check_exponent(p, allow_infinity=False)
    G, _ = augmented_coupling(mu, nu, p)
    n, m = mu.n_atoms, nu.n_atoms
    direct = euclidean_matrix(mu.points, nu.points)
    via = diag_distances(mu.points)[:, None] + diag_distances(nu.points)[None, :]

    acc: dict = {}

    def add(s, t, w):
        acc[(s, t)] = acc.get((s, t), 0.0) + w

    for i, j in zip(*np.nonzero(G > 0)):
        w = float(G[i, j])
        if i < n and j < m:
            if direct[i, j] <= via[i, j]:
                add(int(i), int(j), w)
            else:
                add(int(i), DIAG, w)
                add(DIAG, int(j), w)
        elif i < n:
            add(int(i), DIAG, w)
        elif j < m:
            add(DIAG, int(j), w)

    def order(item):
        s, t = item[0]
        return (s is DIAG, -1 if s is DIAG else s, t is DIAG, -1 if t is DIAG else t)

    edges = tuple((s, t, w) for (s, t), w in sorted(acc.items(), key=order))
    return TransportPlan(edges=edges, p=p, source_measure=mu, target_measure=nu)


def total_cost(plan: TransportPlan, p=None) -> float:
    """Sum over edges of ``mass * rho(source, target)**p``."""
    p = check_exponent(plan.p if p is None else p, allow_infinity=False)
    src, tgt = plan.source_measure.points, plan.target_measure.points
    cost = 0.0
    for s, t, w in plan.edges:
        x = DIAG if s is DIAG else src[s]
        y = DIAG if t is DIAG else tgt[t]
        cost += w * ground_rho(x, y) ** p
    return cost


def _bottleneck_matrix(a_pts: np.ndarray, b_pts: np.ndarray) -> np.ndarray:
    n, m = len(a_pts), len(b_pts)
    C = np.zeros((n + m, m + n))
    C[:n, :m] = euclidean_matrix(a_pts, b_pts)
    C[:n, m:] = diag_distances(a_pts)[:, None]
    C[n:, :m] = diag_distances(b_pts)[None, :]
    return C


def _has_perfect_matching(mask: np.ndarray) -> bool:
    graph = csr_matrix(mask.astype(np.int8))
    match = maximum_bipartite_matching(graph, perm_type="column")
    return bool(np.all(match >= 0))


def bottleneck_distance(a: PersistenceMeasure, b: PersistenceMeasure) -> float:
    """Exact bottleneck distance between two persistence diagrams.

    Atoms are expanded by multiplicity.  The answer is the smallest entry
    ``t`` of the augmented cost matrix such that the edges of cost ``<= t``
    contain a perfect matching; it is found by binary search over the
    sorted distinct entries.
    """
    if not (a.is_diagram and b.is_diagram):
        raise ValueError("bottleneck distance is only defined here for diagrams (integer masses)")
    a_pts, b_pts = a.expanded_points(), b.expanded_points()
    if len(a_pts) + len(b_pts) == 0:
        return 0.0
    C = _bottleneck_matrix(a_pts, b_pts)
    candidates = np.unique(C)
    lo, hi = 0, len(candidates) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _has_perfect_matching(C <= candidates[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(candidates[lo])


def mean_measure(measures: Sequence[PersistenceMeasure], weights=None) -> PersistenceMeasure:
    """Weighted linear average ``sum_i w_i mu_i`` of finitely many measures."""
    if len(measures) == 0:
        raise ValueError("mean of an empty collection is undefined")
    if weights is None:
        weights = np.full(len(measures), 1.0 / len(measures))
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(measures),):
        raise ValueError("need exactly one weight per measure")
    if np.any(weights < 0) or not math.isclose(weights.sum(), 1.0, rel_tol=0, abs_tol=1e-9):
        raise ValueError("weights must be nonnegative and sum to 1")
    out = PersistenceMeasure.empty()
    for mu, w in zip(measures, weights):
        if w > 0:
            out = out + mu.scaled(w)
    return out

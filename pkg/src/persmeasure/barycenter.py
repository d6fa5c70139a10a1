"""Frechet means of finite families of persistence measures under ``OT_p``.

The main solver alternates between an assignment step (optimal plans from the
current candidate to every input) and an update step that moves each piece of
candidate mass to the point minimizing its weighted cost to the input atoms it
is matched with.  Mass created from the diagonal in one input becomes a new
candidate atom.  Each step can only lower the energy, so the solver returns a
local minimizer.

For small diagram families :func:`exact_barycenter_lp` solves the problem
globally as a linear program over all groupings of input atoms.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import LinearConstraint, linear_sum_assignment, linprog, milp, minimize

from .measures import DIAG, PersistenceMeasure, PlanarPoint, check_exponent, ground_rho
from .transport import NumericalFailure, augmented_coupling, ot_cost

__all__ = [
    "BarycenterProblem",
    "BarycenterState",
    "LPBarycenter",
    "frechet_energy",
    "localized_candidate",
    "frechet_mean",
    "multistart_frechet_mean",
    "solve_barycenter_lp",
    "exact_barycenter_lp",
]

SQRT2 = math.sqrt(2.0)
ENERGY_TOL = 1e-10
EXCHANGE_MAX_SLOTS = 100
MAX_LP_GROUPINGS = 10**5
_MAX_SUBSET_INPUTS = 20


@dataclass(frozen=True)
class BarycenterProblem:
    inputs: tuple
    weights: np.ndarray
    p: float

    def __init__(self, inputs: Sequence[PersistenceMeasure], weights=None, p: float = 2.0):
        inputs = tuple(inputs)
        if not inputs:
            raise ValueError("a barycenter problem needs at least one input")
        if weights is None:
            weights = np.full(len(inputs), 1.0 / len(inputs))
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (len(inputs),):
            raise ValueError("need exactly one weight per input")
        if np.any(weights <= 0) or not math.isclose(weights.sum(), 1.0, rel_tol=0, abs_tol=1e-9):
            raise ValueError("weights must be positive and sum to 1")
        p = check_exponent(p, allow_infinity=False)
        if p <= 1:
            raise ValueError("barycenters require p > 1 (p = 1 is a median problem)")
        weights.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "p", p)

    @property
    def n_inputs(self) -> int:
        return len(self.inputs)

    @property
    def total_mass(self) -> float:
        """Upper bound on the mass of some minimizer: the sum of input masses."""
        return float(sum(mu.total_mass for mu in self.inputs))


@dataclass
class BarycenterState:
    candidate: PersistenceMeasure
    energy: float
    energy_trace: list = field(default_factory=list)
    # groupings[k][i] lists (target, mass) pairs: where candidate atom k goes in input i
    groupings: list = field(default_factory=list)
    converged: bool = True
    iterations: int = 0


def frechet_energy(candidate: PersistenceMeasure, problem: BarycenterProblem) -> float:
    """Weighted sum of ``OT_p**p`` from ``candidate`` to every input."""
    return float(
        sum(float(w) * ot_cost(candidate, mu, problem.p) for mu, w in zip(problem.inputs, problem.weights))
    )


# -- localization ---------------------------------------------------------------


def _to_rotated(b, d):
    return (b + d) / SQRT2, (d - b) / SQRT2


def _from_rotated(u, v):
    return (u - v) / SQRT2, (u + v) / SQRT2


def _objective(y, pts, lam, p):
    return sum(w * ground_rho(x, y) ** p for x, w in zip(pts, lam))


def _subset_minimizer(U, V, lam, direct, p):
    """Minimize the branch-fixed energy over the closed upper half-plane.

    Inputs in ``direct`` are charged the Euclidean distance, the others the
    route through the diagonal.  Returns rotated coordinates ``(u, v)``.
    """
    ls, lc = lam[direct], lam[~direct]
    Us, Vs, Vc = U[direct], V[direct], V[~direct]
    u0 = float(np.dot(ls, Us) / ls.sum())
    v0 = float((np.dot(ls, Vs) - np.dot(lc, Vc)) / lam.sum())
    if p == 2.0:
        return u0, max(v0, 0.0)

    def f(z):
        u, v = z
        du, dv = u - Us, v - Vs
        r2 = du * du + dv * dv
        r = np.sqrt(r2)
        a = Vc + v
        val = np.dot(ls, r**p) + np.dot(lc, a**p)
        # d/dz |z - x|^p = p |z - x|^(p-2) (z - x); finite at r = 0 since p > 1
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = np.where(r > 0, p * r ** (p - 2), 0.0)
        gu = np.dot(ls, coef * du)
        gv = np.dot(ls, coef * dv) + np.dot(lc, p * a ** (p - 1))
        return val, np.array([gu, gv])

    res = minimize(
        f,
        x0=np.array([u0, max(v0, 0.0)]),
        jac=True,
        method="L-BFGS-B",
        bounds=[(None, None), (0.0, None)],
        options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 500},
    )
    return float(res.x[0]), float(res.x[1])


def localized_candidate(points: Sequence, weights, p: float = 2.0):
    """Minimizer over the quotient space of ``y -> sum_i w_i rho(x_i, y)**p``.

    ``rho(x, y)**p`` is the minimum of a direct and a through-the-diagonal
    branch, so the minimum is taken over every assignment of branches to the
    inputs.  Each branch-fixed problem is convex; for ``p = 2`` it is solved
    in closed form.  Returns a :class:`PlanarPoint` or ``DIAG``.
    """
    if len(points) == 0:
        raise ValueError("localized_candidate needs at least one point")
    p = check_exponent(p, allow_infinity=False)
    lam = np.asarray(weights, dtype=float)
    if lam.shape != (len(points),):
        raise ValueError("need exactly one weight per point")

    pts = []
    for x in points:
        if x is DIAG or isinstance(x, PlanarPoint):
            pts.append(x)
        else:
            pts.append(PlanarPoint(*x))
    off_diag = [k for k, x in enumerate(pts) if x is not DIAG]
    if len(off_diag) > _MAX_SUBSET_INPUTS:
        raise ValueError(f"at most {_MAX_SUBSET_INPUTS} off-diagonal points are supported")

    best, best_val = DIAG, _objective(DIAG, pts, lam, p)
    # input points first: an exact input location wins ties against a rounded copy
    for k in off_diag:
        val = _objective(pts[k], pts, lam, p)
        if val < best_val:
            best, best_val = pts[k], val

    U = np.zeros(len(pts))
    V = np.zeros(len(pts))
    for k in off_diag:
        U[k], V[k] = _to_rotated(pts[k].birth, pts[k].death)
    for r in range(1, len(off_diag) + 1):
        for subset in itertools.combinations(off_diag, r):
            direct = np.zeros(len(pts), dtype=bool)
            direct[list(subset)] = True
            u, v = _subset_minimizer(U, V, lam, direct, p)
            if v <= 0:
                continue
            b, d = _from_rotated(u, v)
            if not d > b:
                continue
            y = PlanarPoint(b, d)
            val = _objective(y, pts, lam, p)
            if val < best_val:
                best, best_val = y, val
    return best


# -- alternating minimization ---------------------------------------------------


def _refine(splits: list, total: float) -> list:
    """Common refinement of several partitions of the same mass.

    ``splits[i]`` is a list of ``(target, mass)`` whose masses sum to
    ``total``.  Returns ``(targets_tuple, mass)`` pieces.
    """
    cuts = {0.0, total}
    for parts in splits:
        acc = 0.0
        for _, w in parts:
            acc += w
            cuts.add(min(acc, total))
    cuts = sorted(cuts)
    eps = 1e-12 * max(total, 1.0)
    pieces = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi - lo <= eps:
            continue
        mid = 0.5 * (lo + hi)
        targets = []
        for parts in splits:
            acc, chosen = 0.0, parts[-1][0]
            for t, w in parts:
                acc += w
                if mid < acc:
                    chosen = t
                    break
            targets.append(chosen)
        pieces.append((tuple(targets), hi - lo))
    return pieces


def _assignment(candidate: PersistenceMeasure, problem: BarycenterProblem):
    """Optimal plans from ``candidate`` to each input.

    Returns per-atom splits ``splits[k][i] = [(target, mass), ...]``, the
    orphan masses ``(i, j, mass)`` that input ``i`` receives from the
    diagonal, and the energy.
    """
    n = candidate.n_atoms
    splits = [[[] for _ in problem.inputs] for _ in range(n)]
    orphans = []
    energy = 0.0
    for i, (mu, lam) in enumerate(zip(problem.inputs, problem.weights)):
        G, C = augmented_coupling(candidate, mu, problem.p)
        energy += float(lam) * float(np.sum(G * C))
        m = mu.n_atoms
        for k in range(n):
            diag_w = 0.0
            for j in np.nonzero(G[k] > 0)[0]:
                w = float(G[k, j])
                if j == m:
                    diag_w += w
                elif _via_cheaper(candidate.points[k], mu.points[j]):
                    # cheaper through the diagonal: the candidate atom is
                    # destroyed and the input atom created from the diagonal
                    diag_w += w
                    orphans.append((i, int(j), w))
                else:
                    splits[k][i].append((int(j), w))
            if diag_w > 0:
                splits[k][i].append((DIAG, diag_w))
        for j in np.nonzero(G[n, :m] > 0)[0]:
            orphans.append((i, int(j), float(G[n, j])))
    return splits, orphans, energy


def _via_cheaper(x, y) -> bool:
    direct = math.hypot(x[0] - y[0], x[1] - y[1])
    return (x[1] - x[0]) / SQRT2 + (y[1] - y[0]) / SQRT2 < direct


def _groupings_of(splits: list) -> list:
    return [[tuple(parts) for parts in per_atom] for per_atom in splits]


def _update(candidate, problem, splits, orphans) -> PersistenceMeasure:
    cache: dict = {}

    def locate(grouping):
        if grouping not in cache:
            pts = [
                DIAG if t is DIAG else PlanarPoint(*problem.inputs[i].points[t])
                for i, t in enumerate(grouping)
            ]
            cache[grouping] = localized_candidate(pts, problem.weights, problem.p)
        return cache[grouping]

    new_pts, new_w = [], []
    for k in range(candidate.n_atoms):
        for grouping, w in _refine(splits[k], float(candidate.masses[k])):
            y = locate(grouping)
            if y is not DIAG:
                new_pts.append((y.birth, y.death))
                new_w.append(w)
    N = problem.n_inputs
    for i, j, w in orphans:
        grouping = tuple(j if ii == i else DIAG for ii in range(N))
        y = locate(grouping)
        if y is not DIAG:
            new_pts.append((y.birth, y.death))
            new_w.append(w)
    return PersistenceMeasure(new_pts, new_w)


class _GroupCost:
    """Cached localized point and cost of a grouping (one target per input)."""

    def __init__(self, problem: BarycenterProblem):
        self.problem = problem
        self.cache: dict = {}

    def __call__(self, grouping):
        if grouping not in self.cache:
            pts = [
                DIAG if t is DIAG else PlanarPoint(*self.problem.inputs[i].points[t])
                for i, t in enumerate(grouping)
            ]
            y = localized_candidate(pts, self.problem.weights, self.problem.p)
            self.cache[grouping] = (y, float(_objective(y, pts, self.problem.weights, self.problem.p)))
        return self.cache[grouping]


def _integral_state(candidate, splits, orphans) -> bool:
    if not candidate.is_diagram:
        return False
    ws = [w for per_atom in splits for parts in per_atom for _, w in parts]
    ws += [w for _, _, w in orphans]
    return all(w == round(w) for w in ws)


def _unit_slots(candidate, problem, splits, orphans) -> list:
    """Expand an integer-mass assignment into unit slots, padded with all-diagonal slots."""
    N = problem.n_inputs
    slots = []
    for k in range(candidate.n_atoms):
        for grouping, w in _refine(splits[k], float(candidate.masses[k])):
            slots.extend([list(grouping)] * int(round(w)))
    for i, j, w in orphans:
        slots.extend([[j if ii == i else DIAG for ii in range(N)]] * int(round(w)))
    slots = [list(g) for g in slots if any(t is not DIAG for t in g)]
    m_tot = int(round(problem.total_mass))
    slots.extend([[DIAG] * N for _ in range(max(m_tot - len(slots), 0))])
    return slots


def _exchange_descent(slots: list, cost: _GroupCost) -> bool:
    """Block-coordinate descent over the slot groupings.

    For one input at a time, the targets of that input are reassigned to the
    slots by solving a linear assignment problem with the other inputs held
    fixed.  Repeats until no input improves the total cost.
    """
    improved_any = False
    N = len(slots[0]) if slots else 0
    S = len(slots)
    improved = True
    while improved:
        improved = False
        for i in range(N):
            targets = [g[i] for g in slots]
            table = np.empty((S, S))
            for k, g in enumerate(slots):
                for a, t in enumerate(targets):
                    trial = list(g)
                    trial[i] = t
                    table[k, a] = cost(tuple(trial))[1]
            old = float(np.trace(table))
            rows, cols = linear_sum_assignment(table)
            new = float(table[rows, cols].sum())
            if new < old - 1e-12 * max(1.0, old):
                for k, a in zip(rows, cols):
                    slots[k] = slots[k][:i] + [targets[a]] + slots[k][i + 1:]
                improved = improved_any = True
    return improved_any


def _slots_to_measure(slots: list, cost: _GroupCost) -> PersistenceMeasure:
    pts, ws = [], []
    for g in slots:
        y = cost(tuple(g))[0]
        if y is not DIAG:
            pts.append((y.birth, y.death))
            ws.append(1.0)
    return PersistenceMeasure(pts, ws)


def _random_seed(problem: BarycenterProblem, rng: np.random.Generator) -> PersistenceMeasure:
    pts = np.vstack([mu.points for mu in problem.inputs])
    ms = np.concatenate([mu.masses for mu in problem.inputs])
    if len(pts) == 0:
        return PersistenceMeasure.empty()
    largest = max(mu.n_atoms for mu in problem.inputs)
    k = int(rng.integers(1, largest + 1))
    idx = rng.choice(len(pts), size=min(k, len(pts)), replace=False)
    return PersistenceMeasure(pts[idx], ms[idx])


def frechet_mean(
    problem: BarycenterProblem,
    init: Union[PersistenceMeasure, int, str, None] = None,
    max_iter: int = 100,
    rng: Optional[np.random.Generator] = None,
    tol: float = ENERGY_TOL,
    exchange: bool = True,
) -> BarycenterState:
    """Local minimizer of the Frechet energy by alternating minimization.

    Parameters
    ----------
    problem : BarycenterProblem
    init : PersistenceMeasure, int or "random", optional
        Starting candidate, the index of an input to start from, or
        ``"random"`` for a random subset of input atoms.  Defaults to the
        first input.
    max_iter : int
        Maximum number of assignment/update rounds.
    rng : numpy.random.Generator, optional
        Only used by ``init="random"``.
    tol : float
        Stop once an update lowers the energy by less than this amount.
    exchange : bool
        When the alternation stalls on an integer-mass state, try
        reassigning the atoms of one input at a time between groupings
        before giving up.  Skipped for fractional masses and for total
        input mass above ``EXCHANGE_MAX_SLOTS``.

    Returns
    -------
    BarycenterState
        ``converged`` is False when ``max_iter`` rounds ran out first.
    """
    if init is None:
        init = 0
    if isinstance(init, PersistenceMeasure):
        candidate = init
    elif isinstance(init, str):
        if init != "random":
            raise ValueError(f"unknown seed rule {init!r}")
        candidate = _random_seed(problem, rng if rng is not None else np.random.default_rng())
    else:
        candidate = problem.inputs[int(init)]

    splits, orphans, energy = _assignment(candidate, problem)
    trace = [energy]
    converged = False
    group_cost = _GroupCost(problem)
    use_exchange = exchange and problem.total_mass <= EXCHANGE_MAX_SLOTS
    it = 0
    while it < max_iter:
        it += 1
        proposal = _update(candidate, problem, splits, orphans)
        p_splits, p_orphans, p_energy = _assignment(proposal, problem)
        decrease = energy - p_energy
        if decrease >= tol:
            candidate, splits, orphans, energy = proposal, p_splits, p_orphans, p_energy
            trace.append(energy)
            continue
        if decrease >= 0:
            candidate, splits, orphans, energy = proposal, p_splits, p_orphans, p_energy
            trace.append(energy)
        # the alternation has stalled; try regrouping input atoms
        if use_exchange and _integral_state(candidate, splits, orphans):
            slots = _unit_slots(candidate, problem, splits, orphans)
            if _exchange_descent(slots, group_cost):
                proposal = _slots_to_measure(slots, group_cost)
                p_splits, p_orphans, p_energy = _assignment(proposal, problem)
                if energy - p_energy >= tol:
                    candidate, splits, orphans, energy = proposal, p_splits, p_orphans, p_energy
                    trace.append(energy)
                    continue
        converged = True
        break
    return BarycenterState(
        candidate=candidate,
        energy=energy,
        energy_trace=trace,
        groupings=_groupings_of(splits),
        converged=converged,
        iterations=it,
    )


def multistart_frechet_mean(
    problem: BarycenterProblem,
    n_random: int = 1,
    rng: Optional[np.random.Generator] = None,
    max_iter: int = 100,
) -> BarycenterState:
    """Best of :func:`frechet_mean` runs seeded from every input and ``n_random`` random seeds."""
    rng = rng if rng is not None else np.random.default_rng(0)
    seeds: list = list(range(problem.n_inputs)) + ["random"] * n_random
    best = None
    for seed in seeds:
        state = frechet_mean(problem, init=seed, max_iter=max_iter, rng=rng)
        if best is None or state.energy < best.energy:
            best = state
    return best


# -- exact linear program ---------------------------------------------------------


@dataclass
class LPBarycenter:
    measure: PersistenceMeasure
    lp_value: float
    integer_value: float
    vertex_integral: bool
    n_groupings: int


def solve_barycenter_lp(problem: BarycenterProblem) -> LPBarycenter:
    """Global minimizer for small diagram families.

    Every input is padded with diagonal copies up to the total input mass.
    A barycenter atom is then determined by its grouping (one padded atom per
    input) and sits at the localized point of that grouping, so the problem
    is a linear program over nonnegative grouping weights whose marginals
    reproduce every padded input.  When the simplex vertex is fractional the
    integer program is solved as well and both optimal values are reported.
    """
    if not all(mu.is_diagram for mu in problem.inputs):
        raise ValueError("the exact LP needs diagram inputs (integer masses)")
    m_tot = int(round(problem.total_mass))
    N = problem.n_inputs
    if float(m_tot) ** N > MAX_LP_GROUPINGS:
        raise ValueError(
            f"{m_tot}^{N} groupings exceed the limit of {MAX_LP_GROUPINGS}; use frechet_mean instead"
        )
    if m_tot == 0:
        return LPBarycenter(PersistenceMeasure.empty(), 0.0, 0.0, True, 0)

    supports = []
    for mu in problem.inputs:
        sup = [(PlanarPoint(*x), float(w)) for x, w in zip(mu.points, mu.masses)]
        pad = m_tot - int(round(mu.total_mass))
        if pad > 0:
            sup.append((DIAG, float(pad)))
        supports.append(sup)

    groupings = list(itertools.product(*[range(len(s)) for s in supports]))
    K = len(groupings)
    positions, costs = [], np.empty(K)
    for k, g in enumerate(groupings):
        pts = [supports[i][g[i]][0] for i in range(N)]
        y = localized_candidate(pts, problem.weights, problem.p)
        positions.append(y)
        costs[k] = _objective(y, pts, problem.weights, problem.p)

    rows, rhs = [], []
    for i, sup in enumerate(supports):
        for s, (_, mult) in enumerate(sup):
            rows.append([1.0 if g[i] == s else 0.0 for g in groupings])
            rhs.append(mult)
    A = np.array(rows)
    b = np.array(rhs)

    res = linprog(costs, A_eq=A, b_eq=b, bounds=(0, None), method="highs-ds")
    if res.status != 0:
        raise NumericalFailure(f"barycenter LP failed: {res.message}")
    x = res.x
    lp_value = float(res.fun)
    vertex_integral = bool(np.all(np.abs(x - np.round(x)) <= 1e-9))
    if vertex_integral:
        x_int = np.round(x)
    else:
        ires = milp(
            costs,
            constraints=LinearConstraint(A, b, b),
            integrality=np.ones(K),
            bounds=(0, np.inf),
        )
        if ires.status != 0:
            raise NumericalFailure(f"barycenter integer program failed: {ires.message}")
        x_int = np.round(ires.x)
    integer_value = float(np.dot(costs, x_int))

    pts, ws = [], []
    for y, w in zip(positions, x_int):
        if w > 0 and y is not DIAG:
            pts.append((y.birth, y.death))
            ws.append(w)
    return LPBarycenter(
        measure=PersistenceMeasure(pts, ws),
        lp_value=lp_value,
        integer_value=integer_value,
        vertex_integral=vertex_integral,
        n_groupings=K,
    )


def exact_barycenter_lp(problem: BarycenterProblem) -> PersistenceMeasure:
    """Integer-mass Frechet mean of a small family of diagrams.

    See :func:`solve_barycenter_lp` for the formulation and the size limit.
    """
    return solve_barycenter_lp(problem).measure

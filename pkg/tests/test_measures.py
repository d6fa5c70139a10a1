import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from persmeasure import DIAG, INFINITY, PersistenceMeasure, PlanarPoint, diag_distance, ground_rho, pers_p, truncate
from persmeasure.measures import rho_matrix

SQ2 = math.sqrt(2)

coord = st.floats(-20, 20, allow_nan=False, allow_infinity=False)
life = st.floats(1e-3, 20, allow_nan=False, allow_infinity=False)


@st.composite
def points(draw):
    b = draw(coord)
    return (b, b + draw(life))


point_or_diag = st.one_of(st.just(DIAG), points())


@st.composite
def measures(draw, max_atoms=6):
    pts = draw(st.lists(points(), max_size=max_atoms))
    ms = draw(st.lists(st.floats(0.01, 5), min_size=len(pts), max_size=len(pts)))
    return PersistenceMeasure(pts, ms)


class TestPlanarPoint:
    def test_rejects_points_on_or_below_diagonal(self):
        with pytest.raises(ValueError, match="above the diagonal"):
            PlanarPoint(1.0, 1.0)
        with pytest.raises(ValueError):
            PlanarPoint(2.0, 1.0)

    def test_rejects_infinite_bars(self):
        with pytest.raises(ValueError, match="infinite"):
            PlanarPoint(0.0, math.inf)


class TestPersistenceMeasure:
    def test_duplicates_are_merged(self):
        mu = PersistenceMeasure([(0, 2), (1, 3), (0, 2)], [1.0, 2.0, 0.5])
        assert mu.n_atoms == 2
        assert dict(((p.birth, p.death), m) for p, m in mu.atoms()) == {(0.0, 2.0): 1.5, (1.0, 3.0): 2.0}

    def test_no_snapping_of_nearby_points(self):
        assert PersistenceMeasure([(0, 2), (0, 2 + 1e-15)]).n_atoms == 2

    def test_validation(self):
        with pytest.raises(ValueError):
            PersistenceMeasure([(0, 1)], [0.0])
        with pytest.raises(ValueError):
            PersistenceMeasure([(0, 1)], [-1.0])
        with pytest.raises(ValueError, match="infinite"):
            PersistenceMeasure([(0, math.inf)])
        with pytest.raises(ValueError):
            PersistenceMeasure([(0, 1, 2)])

    def test_immutable_arrays(self):
        mu = PersistenceMeasure([(0, 1)])
        with pytest.raises(ValueError):
            mu.points[0, 0] = 5.0

    def test_diagram_flag_and_expansion(self):
        a = PersistenceMeasure([(0, 1), (2, 3)], [2, 1])
        assert a.is_diagram
        assert a.expanded_points().tolist() == [[0, 1], [0, 1], [2, 3]]
        assert not PersistenceMeasure([(0, 1)], [0.5]).is_diagram

    def test_addition_and_scaling(self):
        a = PersistenceMeasure([(0, 1)])
        b = PersistenceMeasure([(0, 1), (0, 2)])
        assert a + b == PersistenceMeasure([(0, 1), (0, 2)], [2, 1])
        assert b.scaled(0.5).total_mass == 1.0
        assert b.scaled(0) == PersistenceMeasure.empty()


class TestDiagDistance:
    def test_examples(self):
        assert diag_distance((0, 2)) == pytest.approx(SQ2, abs=1e-15)
        assert diag_distance(DIAG) == 0.0
        for n in (0, 1, 7, 1000):
            assert diag_distance((n, n + 1)) == pytest.approx(SQ2 / 2, abs=1e-12)

    def test_vanishes_near_diagonal(self):
        assert diag_distance((0, 1e-12)) < 1e-12


class TestPersP:
    def test_examples(self):
        assert pers_p(PersistenceMeasure.empty(), 2) == 0.0
        assert pers_p(PersistenceMeasure.empty(), INFINITY) == 0.0
        assert pers_p(PersistenceMeasure([(0, 2)]), 2) == pytest.approx(2.0, abs=1e-14)
        mu = PersistenceMeasure([(0, 2), (1, 2)], [2, 1])
        assert pers_p(mu, 1) == pytest.approx(2 * SQ2 + SQ2 / 2, abs=1e-14)

    def test_infinity_is_the_largest_distance(self):
        mu = PersistenceMeasure([(0, 2), (1, 2)], [2, 1])
        assert pers_p(mu, INFINITY) == pytest.approx(SQ2)

    def test_rejects_small_exponent(self):
        with pytest.raises(ValueError):
            pers_p(PersistenceMeasure.empty(), 0.5)

    @given(measures(), st.floats(0.01, 10), st.sampled_from([1.0, 1.5, 2.0, 3.0]))
    def test_homogeneous_in_mass(self, mu, c, p):
        assert pers_p(mu.scaled(c), p) == pytest.approx(c * pers_p(mu, p), rel=1e-12, abs=1e-12)


class TestTruncate:
    def test_examples(self):
        assert truncate(PersistenceMeasure.empty(), 1.0) == PersistenceMeasure.empty()
        mu = PersistenceMeasure([(0, 2), (0, 0.1)])
        assert truncate(mu, 0.5) == PersistenceMeasure([(0, 2)])
        assert truncate(mu, 1e-300) == mu

    def test_rejects_nonpositive_radius(self):
        with pytest.raises(ValueError):
            truncate(PersistenceMeasure.empty(), 0.0)

    @given(measures(), st.floats(1e-3, 15), st.sampled_from([1.0, 2.0, 3.0]))
    def test_removed_persistence(self, mu, r, p):
        kept = truncate(mu, r)
        removed = sum(m * diag_distance(x) ** p for x, m in mu.atoms() if diag_distance(x) <= r)
        assert pers_p(kept, p) <= pers_p(mu, p) + 1e-12
        assert pers_p(mu, p) - pers_p(kept, p) == pytest.approx(removed, rel=1e-9, abs=1e-9)


class TestGroundRho:
    def test_examples(self):
        x = PlanarPoint(0, 2)
        assert ground_rho(x, x) == 0.0
        assert ground_rho((0, 1), (10, 11)) == pytest.approx(SQ2, abs=1e-14)
        assert ground_rho((0, 2), DIAG) == pytest.approx(SQ2, abs=1e-15)
        assert ground_rho(DIAG, DIAG) == 0.0

    @settings(max_examples=300)
    @given(point_or_diag, point_or_diag, point_or_diag)
    def test_metric_axioms(self, x, y, z):
        dxy, dyx = ground_rho(x, y), ground_rho(y, x)
        assert dxy >= 0
        assert dxy == dyx
        assert ground_rho(x, z) <= dxy + ground_rho(y, z) + 1e-12
        if x is not DIAG and y is not DIAG and dxy == 0:
            assert tuple(x) == tuple(y)

    @given(points(), points())
    def test_bounded_by_euclidean(self, x, y):
        assert ground_rho(x, y) <= math.dist(x, y) + 1e-12

    def test_matrix_matches_scalar(self):
        rng = np.random.default_rng(1)
        P = np.cumsum(rng.uniform(0, 1, (5, 2)), axis=1)
        Q = np.cumsum(rng.uniform(0, 1, (4, 2)), axis=1)
        R = rho_matrix(P, Q)
        for i in range(5):
            for j in range(4):
                assert R[i, j] == pytest.approx(ground_rho(P[i], Q[j]), abs=1e-14)

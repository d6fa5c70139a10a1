import math

import numpy as np
import pytest

from persmeasure import PersistenceMeasure, ot_distance
from persmeasure.representations import (
    RepresentationGrid,
    SurfaceConfig,
    betti_curve,
    capped_persistence,
    lipschitz_feature_gap,
    persistence_surface,
    silhouette,
    stock_features,
    weighted_surface,
)

SQ2 = math.sqrt(2)
PLANE = RepresentationGrid.plane(0, 4, 0, 4, 41)
LINE = RepresentationGrid.line(-1, 5, 61)


def random_measure(rng, k):
    b = rng.uniform(0, 3, k)
    return PersistenceMeasure(np.column_stack([b, b + rng.uniform(0.01, 2, k)]), rng.uniform(0.1, 2, k))


class TestGrid:
    def test_axes(self):
        g = RepresentationGrid.line(0, 1, 5)
        assert g.ndim == 1 and g.axis(0).tolist() == [0, 0.25, 0.5, 0.75, 1]
        assert PLANE.shape == (41, 41)

    def test_validation(self):
        with pytest.raises(ValueError):
            RepresentationGrid.line(1, 0, 5)
        with pytest.raises(ValueError):
            RepresentationGrid.line(0, 1, 0)
        with pytest.raises(ValueError):
            RepresentationGrid.line(0, 0, 3)
        assert RepresentationGrid.line(2, 2, 1).axis(0).tolist() == [2.0]
        with pytest.raises(ValueError):
            SurfaceConfig(sigma=0)
        with pytest.raises(ValueError):
            SurfaceConfig(p=0.5)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            silhouette(PersistenceMeasure.empty(), 1, PLANE)
        with pytest.raises(ValueError):
            persistence_surface(PersistenceMeasure.empty(), SurfaceConfig(), LINE)


class TestSurface:
    def test_empty(self):
        assert np.all(persistence_surface(PersistenceMeasure.empty(), SurfaceConfig(), PLANE) == 0)

    def test_peak_at_atom(self):
        mu = PersistenceMeasure([(1.0, 3.0)])
        out = persistence_surface(mu, SurfaceConfig(0.5, 2), PLANE)
        i, j = 10, 30  # nodes at 1.0 and 3.0
        assert out[i, j] == pytest.approx(2.0, rel=1e-14)
        assert out.max() == out[i, j]

    def test_sum_of_atoms(self):
        a, b = PersistenceMeasure([(0.5, 2)]), PersistenceMeasure([(1, 3.5)], [2])
        cfg = SurfaceConfig(0.7, 1)
        np.testing.assert_allclose(
            persistence_surface(a + b, cfg, PLANE),
            persistence_surface(a, cfg, PLANE) + persistence_surface(b, cfg, PLANE),
            rtol=1e-12,
            atol=1e-14,
        )

    def test_weight_power_zero_ignores_persistence(self):
        # (1.0, 1.1) is a grid node, so the unweighted peak is the bare kernel value 1
        mu = PersistenceMeasure([(1.0, 1.1)], [3.0])
        assert weighted_surface(mu, 0.5, 0.0, PLANE).max() == pytest.approx(3.0, rel=1e-12)


class TestSilhouette:
    def test_empty(self):
        assert np.all(silhouette(PersistenceMeasure.empty(), 1, LINE) == 0)

    def test_tent(self):
        grid = RepresentationGrid.line(0, 2, 3)
        assert silhouette(PersistenceMeasure([(0, 2)]), 1, grid).tolist() == [0.0, 1.0, 0.0]

    def test_weighting(self):
        grid = RepresentationGrid.line(0, 2, 3)
        assert silhouette(PersistenceMeasure([(0, 2)]), 3, grid)[1] == pytest.approx(2.0)


class TestBettiCurve:
    def test_empty(self):
        assert np.all(betti_curve(PersistenceMeasure.empty(), 1, 1, LINE) == 0)

    def test_indicator(self):
        out = betti_curve(PersistenceMeasure([(0, 2)]), 1, 1, LINE)
        t = LINE.axis(0)
        np.testing.assert_array_equal(out, ((t >= 0) & (t <= 2)).astype(float))

    def test_overlap(self):
        grid = RepresentationGrid.line(1.5, 1.5, 1)
        assert betti_curve(PersistenceMeasure([(0, 2), (1, 3)]), 1, 1, grid).tolist() == [2.0]

    def test_exponent(self):
        grid = RepresentationGrid.line(1, 1, 1)
        assert betti_curve(PersistenceMeasure([(0, 2)]), 2, 2, grid)[0] == pytest.approx(SQ2**1.5)


@pytest.mark.parametrize(
    "rep",
    [
        lambda m: persistence_surface(m, SurfaceConfig(0.6, 2), PLANE),
        lambda m: silhouette(m, 2, LINE),
        lambda m: betti_curve(m, 2, 1, LINE),
    ],
    ids=["surface", "silhouette", "betti"],
)
def test_linearity(rep):
    rng = np.random.default_rng(0)
    mu, nu = random_measure(rng, 4), random_measure(rng, 3)
    alpha, beta = 0.3, 2.5
    lhs = rep(mu.scaled(alpha) + nu.scaled(beta))
    np.testing.assert_allclose(lhs, alpha * rep(mu) + beta * rep(nu), rtol=1e-12, atol=1e-12)


class TestFeatureGap:
    def test_identical(self):
        mu = random_measure(np.random.default_rng(1), 4)
        assert lipschitz_feature_gap(mu, mu) == 0.0

    def test_single_atom_is_tight(self):
        mu = PersistenceMeasure([(0, 2)])
        gap = lipschitz_feature_gap(mu, PersistenceMeasure.empty(), [capped_persistence(10.0)])
        assert gap == pytest.approx(SQ2)
        assert gap == pytest.approx(ot_distance(mu, PersistenceMeasure.empty(), 1))

    def test_stock_family_breakpoints(self):
        mu, nu = PersistenceMeasure([(0, 1)]), PersistenceMeasure([(0, 3)])
        levels = [f.threshold for f in stock_features([mu, nu])]
        assert levels == pytest.approx([1 / SQ2, 3 / SQ2])
        # fine scan over thresholds never beats the breakpoints
        scan = [capped_persistence(t) for t in np.linspace(0.01, 5, 500)]
        assert lipschitz_feature_gap(mu, nu, scan) <= lipschitz_feature_gap(mu, nu) + 1e-15

    def test_bounded_by_ot1(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            mu, nu = random_measure(rng, int(rng.integers(0, 5))), random_measure(rng, int(rng.integers(0, 5)))
            assert lipschitz_feature_gap(mu, nu) <= ot_distance(mu, nu, 1) + 1e-9


def test_vanishing_atoms_need_full_weight():
    # adding mass M at distance eps from the diagonal with M * eps**2 -> 0
    base = PersistenceMeasure([(1.0, 3.0)])
    grid = RepresentationGrid.plane(0, 4, 0, 4, 41)
    weighted, light = [], []
    for k in range(1, 11):
        eps = 2.0**-k
        extra = PersistenceMeasure([(2.0, 2.0 + eps * SQ2)], [1 / eps])
        mu_n = base + extra
        weighted.append(np.abs(weighted_surface(mu_n, 0.5, 2, grid) - weighted_surface(base, 0.5, 2, grid)).max())
        light.append(np.abs(weighted_surface(mu_n, 0.5, 1, grid) - weighted_surface(base, 0.5, 1, grid)).max())
        assert ot_distance(mu_n, base, 2) ** 2 == pytest.approx(eps, rel=1e-9)
    assert weighted[-1] < 1e-2 * weighted[0]
    assert light[-1] > 0.5 * light[0]

import numpy as np
import pytest

import oracles
from npriem import verify as vf
from npriem.errors import StencilLeavesChart

FIELDS = sorted(oracles.FIELDS)


def _sample(e, n=20, seed=5):
    return e.sample(n, seed=seed, reach=vf.stencil_reach(e.chart))


class TestIdentities:
    @pytest.mark.parametrize("manifold,field", FIELDS)
    def test_all_equations_pass(self, entries, manifold, field):
        e = entries[manifold]
        reports = vf.verify_all(e.chart, e.field(field), _sample(e))
        assert list(reports) == list(vf.EQUATION_IDS)
        for eq, rep in reports.items():
            assert rep.passed, (eq, rep.max_residual)
            assert rep.points == 20

    def test_gauge_robust(self, entries):
        e = entries["berger"]
        K = e.field("tilted")
        U = _sample(e, 10)
        base = vf.verify_all(e.chart, K, U)
        rng = np.random.default_rng(3)
        for theta in rng.uniform(-np.pi, np.pi, 3):
            rot = vf.verify_all(e.chart, K, U, theta=theta)
            for eq in vf.EQUATION_IDS:
                assert rot[eq].max_residual < max(10 * base[eq].max_residual, 1e-9)

    def test_variable_gauge(self, entries):
        e = entries["nil"]
        U = _sample(e, 10)
        reports = vf.verify_all(e.chart, e.field("mixed"), U, theta=lambda V: 0.4 * V[:, 0] * V[:, 1])
        assert all(r.passed for r in reports.values())

    def test_single_point_checks(self, s3):
        K, p = s3.field("hopf"), (0.7, 0.3, 0.2)
        for check in (vf.check_covariant_table, vf.check_brackets, vf.check_sachs, vf.check_bianchi,
                      vf.check_ricci_triad, vf.check_riemann_frame):
            rep = check(s3.chart, K, p)
            assert rep.passed and rep.points == 1

    def test_tolerance_below_floor_fails(self, s3):
        reports = vf.verify_all(s3.chart, s3.field("hopf"), _sample(s3, 5), tol=1e-15)
        assert not any(r.passed for r in reports.values())
        assert all(np.isfinite(r.max_residual) for r in reports.values())

    def test_stencil_near_boundary(self, h3):
        with pytest.raises(StencilLeavesChart):
            vf.check_sachs(h3.chart, h3.field("radial"), (0.5, 0.5, 0.032))


class TestTriadCurvature:
    def test_sphere_components(self, s3):
        tc = vf.triad_curvature_batch(s3.chart, s3.field("hopf"), _sample(s3, 10))
        assert np.max(np.abs(tc.ric_kk - 2)) < 1e-8
        assert np.max(np.abs(tc.ric_mmbar - 2)) < 1e-8
        assert np.max(np.abs(tc.ric_mm)) < 1e-8
        assert np.max(np.abs(tc.riem_frame["R_kmkmbar"] + 1)) < 1e-8

    def test_product_components(self, h2xr):
        tc = vf.triad_curvature_batch(h2xr.chart, h2xr.field("vertical"), _sample(h2xr, 10))
        assert np.max(np.abs(tc.ric_mmbar + 1)) < 1e-8
        assert np.max(np.abs(tc.ric_mm)) < 1e-8
        assert np.max(np.abs(tc.ric_kk)) < 1e-8


class TestReport:
    def test_nan_never_passes(self, euclid):
        U = np.zeros((2, 3))
        rep = vf.make_report("x", euclid.chart, U, np.array([np.nan, 0.0]), 1.0)
        assert not rep.passed and rep.max_residual == np.inf

    def test_as_dict(self, euclid):
        rep = vf.make_report("x", euclid.chart, np.array([[1.0, 2.0, 3.0], [0, 0, 0]]), np.array([0.5, 0.1]), 1.0)
        d = rep.as_dict()
        assert d["pass"] and d["worst_point"] == [1.0, 2.0, 3.0]
        assert d["mean_residual"] == pytest.approx(0.3)

    def test_frame_derivative_direction(self, euclid):
        f = lambda U, seed: U[:, 2] ** 2  # noqa: E731
        d = vf.frame_derivative(euclid.chart, euclid.field("constant"), f, (1.0, 1.0, 1.5), "k")
        assert d == pytest.approx(3.0)
        with pytest.raises(ValueError):
            vf.frame_derivative(euclid.chart, euclid.field("constant"), f, (1.0, 1.0, 1.5), "z")

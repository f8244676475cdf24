import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from npriem import geometry as geo
from npriem import triad as tr
from npriem.errors import FrameSeedDegenerate, ZeroField
from npriem.triad import VectorFieldSpec

FIELDS = sorted(oracles.FIELDS)


class TestFrame:
    @pytest.mark.parametrize("manifold,field", FIELDS)
    def test_orthonormal_and_oriented(self, entries, manifold, field):
        e = entries[manifold]
        U = e.sample(10, reach=0.01)
        F, seed = tr.frame_batch(e.chart, e.field(field), U)
        g, _, sq = geo.metric_batch(e.chart, U)
        gram = np.einsum("nai,nij,nbj->nab", F, g, F)
        assert np.max(np.abs(gram - np.eye(3))) < 1e-12
        # det of frame components times sqrt(det g) is the volume form on (k, x, y)
        assert np.all(np.linalg.det(F) * sq > 0)

    def test_seed_rule(self, euclid):
        # k along e1 rules out e1; e2 is the first to clear 25 degrees
        K = VectorFieldSpec("e1", lambda U: np.tile([1.0, 0.0, 0.0], (len(U), 1)), normalize=False)
        t = tr.build_frame(euclid.chart, K, (0.5, 0.5, 0.5))
        assert t.seed == 1
        assert t.x == pytest.approx([0, 1, 0])
        assert t.y == pytest.approx([0, 0, 1])

    def test_seed_at_threshold(self, euclid):
        a = math.radians(24.0)
        K = VectorFieldSpec("near", lambda U: np.tile([math.cos(a), math.sin(a), 0.0], (len(U), 1)))
        assert tr.build_frame(euclid.chart, K, (1, 1, 1)).seed == 1
        b = math.radians(26.0)
        K = VectorFieldSpec("far", lambda U: np.tile([math.cos(b), math.sin(b), 0.0], (len(U), 1)))
        assert tr.build_frame(euclid.chart, K, (1, 1, 1)).seed == 0

    def test_complex_triad_pairings(self, s3):
        t = tr.build_frame(s3.chart, s3.field("hopf"), (0.7, 0.3, 0.2))
        g = geo.metric_at(s3.chart, t.p)[0]
        assert geo.inner(g, t.m, t.mbar) == pytest.approx(1.0)
        assert abs(geo.inner(g, t.m, t.m)) < 1e-14
        assert abs(geo.inner(g, t.k, t.m)) < 1e-14

    def test_zero_field(self, euclid):
        K = VectorFieldSpec("zero", lambda U: np.zeros((len(U), 3)))
        with pytest.raises(ZeroField):
            tr.build_frame(euclid.chart, K, (1, 1, 1))

    def test_seed_parallel_to_field(self, euclid):
        K = VectorFieldSpec("e1", lambda U: np.tile([1.0, 0.0, 0.0], (len(U), 1)))
        with pytest.raises(FrameSeedDegenerate):
            tr.frame_batch(euclid.chart, K, np.array([[1.0, 1.0, 1.0]]), seed=0)

    def test_declared_unit_field_checked(self, euclid):
        K = VectorFieldSpec("long", lambda U: np.tile([0.0, 0.0, 2.0], (len(U), 1)), normalize=False)
        with pytest.raises(ValueError):
            tr.build_frame(euclid.chart, K, (1, 1, 1))


class TestKinematicsOracle:
    @pytest.mark.parametrize("manifold,field", FIELDS)
    def test_against_gram_schmidt(self, entries, manifold, field):
        e = entries[manifold]
        U = e.sample(10, seed=7, reach=0.01)
        jet = tr.triad_jet(e.chart, e.field(field), U)
        sc = jet.spin()
        kil = tr.killing_residual_batch(jet)
        for i, u in enumerate(U):
            kappa, div, omega, shear2, killing = oracles.gram_schmidt_kinematics(manifold, field, u)
            assert abs(abs(sc.kappa[i]) - kappa) < 1e-8
            assert abs(sc.div[i] - div) < 1e-8
            assert abs(abs(sc.omega[i]) - omega) < 1e-8
            assert abs(sc.shear_mag2[i] - shear2) < 1e-8
            assert abs(kil[i] - killing) < 1e-8

    @pytest.mark.parametrize("manifold,field", FIELDS)
    def test_rho_from_screen(self, entries, manifold, field):
        e = entries[manifold]
        sc = tr.spin_batch(e.chart, e.field(field), e.sample(10, reach=0.01))
        assert np.max(np.abs(-2 * sc.rho - (sc.div + 1j * sc.omega))) < 1e-10

    @pytest.mark.parametrize("manifold,field", FIELDS)
    def test_alternate_forms(self, entries, manifold, field):
        e = entries[manifold]
        jet = tr.triad_jet(e.chart, e.field(field), e.sample(10, reach=0.01))
        sc = jet.spin()
        assert np.max(np.abs(jet.shear_from_frame() - sc.sigma)) < 1e-10
        # Re epsilon vanishes only up to differencing noise
        assert np.max(np.abs(jet.epsilon_alt() - sc.epsilon)) < 1e-8

    def test_euclidean_radial(self, euclid):
        p = (0.6, 0.8, 1.2)
        sc = tr.spin_coefficients(euclid.chart, euclid.field("radial_out"), p)
        assert sc.div == pytest.approx(2 / np.linalg.norm(p), abs=1e-9)
        assert abs(sc.kappa) < 1e-9 and abs(sc.sigma) < 1e-9 and abs(sc.omega) < 1e-9

    def test_euclidean_constant_all_zero(self, euclid):
        sc = tr.spin_coefficients(euclid.chart, euclid.field("constant"), (1, 1, 1))
        assert max(abs(v) for v in sc.as_dict().values()) < 1e-12


class TestClassification:
    def test_hopf(self, s3):
        flags = tr.classify(s3.chart, s3.field("hopf"), (0.7, 0.3, 0.2))
        assert flags == {"geodesic": True, "divergence_free": True, "shear_free": True,
                         "hypersurface_orthogonal": False, "killing": True}
        assert tr.killing_residual(s3.chart, s3.field("hopf"), (0.7, 0.3, 0.2)) < 1e-7

    def test_circular_not_geodesic(self, euclid):
        flags = tr.classify(euclid.chart, euclid.field("circular"), (1.0, 0.5, 0.0))
        assert not flags["geodesic"] and flags["divergence_free"]

    def test_radial_not_killing(self, h3):
        flags = tr.classify(h3.chart, h3.field("radial"), (0.5, 0.5, 1.5))
        assert flags["geodesic"] and flags["hypersurface_orthogonal"] and not flags["killing"]

    def test_bad_tol(self, s3):
        with pytest.raises(ValueError):
            tr.classify(s3.chart, s3.field("hopf"), (0.7, 0.3, 0.2), tol=0)


class TestGauge:
    @settings(max_examples=25, deadline=None)
    @given(theta=st.floats(-math.pi, math.pi), i=st.integers(0, 9))
    def test_constant_rotation(self, entries, theta, i):
        e = entries["berger"]
        p = e.sample(10, seed=11, reach=0.01)[i]
        K = e.field("tilted")
        sc = tr.spin_coefficients(e.chart, K, p)
        _, sc1 = tr.rotated_spin_coefficients(e.chart, K, p, theta)
        ph = np.exp(1j * theta)
        assert abs(sc1.kappa - ph * sc.kappa) < 1e-8
        assert abs(sc1.sigma - ph ** 2 * sc.sigma) < 1e-8
        assert abs(sc1.rho - sc.rho) < 1e-8
        assert abs(sc1.epsilon - sc.epsilon) < 1e-8

    def test_epsilon_shift_by_derivative(self, entries):
        e = entries["nil"]
        K = e.field("mixed")
        theta = lambda U: 0.3 * U[:, 0] + 0.2 * np.sin(U[:, 1]) - 0.5 * U[:, 2] ** 2  # noqa: E731
        for p in e.sample(5, reach=0.01):
            t = tr.build_frame(e.chart, K, p)
            dtheta = np.array([0.3, 0.2 * np.cos(p[1]), -p[2]])
            sc = tr.spin_coefficients(e.chart, K, p)
            _, sc1 = tr.rotated_spin_coefficients(e.chart, K, p, theta)
            assert abs(sc1.epsilon - (sc.epsilon + 1j * dtheta @ t.k)) < 1e-8

    def test_epsilon_can_be_gauged_away(self, s3):
        K = s3.field("hopf")
        p = (0.7, 0.3, 0.2)
        assert abs(tr.spin_coefficients(s3.chart, K, p).epsilon - 1j) < 1e-8
        _, sc1 = tr.rotated_spin_coefficients(s3.chart, K, p, lambda U: -(U[:, 1] + U[:, 2]) / 2)
        assert abs(sc1.epsilon) < 1e-8

    def test_rotate_triad(self, s3):
        t = tr.build_frame(s3.chart, s3.field("hopf"), (0.7, 0.3, 0.2))
        r = tr.rotate_triad(t, 0.4)
        assert r.m == pytest.approx(np.exp(0.4j) * t.m)

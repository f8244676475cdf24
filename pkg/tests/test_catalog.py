import numpy as np
import pytest

from helpers import measure
from npriem import catalog
from npriem import verify as vf
from npriem.errors import BadParameter, UnknownField, UnknownManifold


def _expected_cases():
    for mid in catalog.MANIFOLD_IDS:
        e = catalog.load(mid)
        for (fid, q) in sorted(e.expected):
            yield mid, fid, q


class TestLoad:
    def test_six_entries(self):
        assert catalog.MANIFOLD_IDS == ("euclidean", "s3_round", "h3", "h2xr", "nil", "berger")

    def test_unknown(self):
        with pytest.raises(UnknownManifold):
            catalog.load("torus")
        with pytest.raises(UnknownField):
            catalog.load("h3").field("hopf")

    @pytest.mark.parametrize("mid,params", [("s3_round", {"r": 0}), ("berger", {"lambda": -1}),
                                            ("h3", {"r": 2}), ("s3_round", {"lambda": 1})])
    def test_bad_parameters(self, mid, params):
        with pytest.raises(BadParameter):
            catalog.load(mid, **params)

    def test_sampling_is_seeded(self):
        e = catalog.load("nil")
        assert np.array_equal(e.sample(10), e.sample(10))
        assert not np.array_equal(e.sample(10, seed=1), e.sample(10, seed=2))

    def test_samples_respect_reach(self):
        e = catalog.load("h3")
        reach = vf.stencil_reach(e.chart)
        assert e.chart.inside(e.sample(200, reach=reach), reach).all()


class TestExpectedTables:
    @pytest.mark.parametrize("mid,fid,q", list(_expected_cases()))
    def test_expected_value(self, entries, mid, fid, q):
        e = entries[mid]
        U = e.sample(e.sample_count, reach=vf.stencil_reach(e.chart))
        fields = sorted(e.fields) if fid == "*" else [fid]
        exp = e.expected[(fid, q)]
        for f in fields:
            got = measure(e, f, q, U)
            assert np.max(np.abs(got - exp.at(U))) < exp.tol, (f, q)

    def test_radius_scaling(self):
        e = catalog.load("s3_round", r=2.0)
        U = e.sample(10, reach=vf.stencil_reach(e.chart))
        assert np.max(np.abs(measure(e, None, "S", U) - 1.5)) < 1e-8
        assert np.max(np.abs(measure(e, "hopf", "abs_omega", U) - 1.0)) < 1e-6

    def test_berger_one_is_round(self):
        b, s = catalog.load("berger", **{"lambda": 1.0}), catalog.load("s3_round")
        U = s.sample(20, reach=vf.stencil_reach(s.chart))
        for q in ("S", "div", "abs_omega", "Ric_kk", "abs_sigma"):
            assert np.max(np.abs(measure(b, "hopf", q, U) - measure(s, "hopf", q, U))) < 1e-8

    @pytest.mark.parametrize("lam", [0.5, 1.3])
    def test_berger_family(self, lam):
        e = catalog.load("berger", **{"lambda": lam})
        U = e.sample(10, reach=vf.stencil_reach(e.chart))
        assert np.max(np.abs(measure(e, None, "S", U) - (8 - 2 * lam ** 2))) < 1e-8
        assert np.max(np.abs(measure(e, "hopf", "abs_omega", U) - 2 * lam)) < 1e-6

    def test_h3_distance(self):
        assert catalog.h3_distance(np.array([[0.0, 0.0, np.e]]))[0] == pytest.approx(1.0)

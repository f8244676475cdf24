import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from npriem import geometry as geo
from npriem import triad as tr
from npriem import verify as vf
from npriem.errors import BadParameter
from npriem.metricfile import ExpressionError, load_metric_file, load_metric_spec, parse_expression

H3_SPEC = {
    "id": "h3_file",
    "domain": [[-5, 5], [-5, 5], [0.02, 10]],
    "g": ["1/u3^2", "0", "0", "1/u3^2", "0", "1/u3^2"],
    "fields": {"up": ["0", "0", "u3"]},
    "sample_box": [[0.2, 1.2], [0.2, 1.2], [0.5, 2.0]],
}


class TestExpressions:
    @pytest.mark.parametrize("src,expected", [
        ("1 + 2*3", 7.0),
        ("2^3^2", 512.0),
        ("-u1^2", -4.0),
        ("(u1 - u2) / u3", -0.25),
        ("sin(pi/2) + cos(0) + exp(log(3))", 5.0),
        ("sinh(0) + cosh(0)", 1.0),
        ("u1 × u2 ÷ u3 − 1", 0.5),
        ("e", math.e),
        ("3", 3.0),
    ])
    def test_values(self, src, expected):
        f = parse_expression(src)
        assert f(np.array([[2.0, 3.0, 4.0]]))[0] == pytest.approx(expected)

    @pytest.mark.parametrize("src", [
        "__import__('os')", "u1.real", "u4", "abs(u1)", "sin(u1, u2)", "[1]", "u1 if u2 else u3",
        "lambda: 1", "", "u1 **2", "1j", "True", "sin(x=1)", "u1 +",
    ])
    def test_rejected(self, src):
        with pytest.raises(ExpressionError):
            parse_expression(src)

    def test_vectorized(self):
        U = np.arange(12.0).reshape(4, 3)
        assert parse_expression("u1 + 10*u3")(U) == pytest.approx(U[:, 0] + 10 * U[:, 2])
        assert parse_expression("2")(U).shape == (4,)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(-5, 5), min_size=3, max_size=3),
           st.floats(-2, 2), st.floats(-2, 2), st.floats(0.1, 2))
    def test_polynomial_matches_python(self, coeffs, x, y, z):
        a, b, c = coeffs
        src = f"{a}*u1^2 + {b}*u1*u2 - ({c})*u3^3 + 1"
        got = parse_expression(src)(np.array([[x, y, z]]))[0]
        assert got == pytest.approx(a * x ** 2 + b * x * y - c * z ** 3 + 1, rel=1e-12, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.text(alphabet="u123+-*/^() sinco.", max_size=12))
    def test_random_text_never_escapes(self, src):
        try:
            f = parse_expression(src)
        except ExpressionError:
            return
        out = f(np.array([[0.5, 0.25, 2.0]]))
        assert out.shape == (1,)


class TestMetricFile:
    def test_h3_from_file(self, tmp_path):
        path = tmp_path / "h3.json"
        path.write_text(json.dumps(H3_SPEC))
        e = load_metric_file(path)
        assert not e.chart.analytic
        U = e.sample(10, reach=vf.stencil_reach(e.chart))
        cd = geo.curvature_batch(e.chart, U)
        assert np.max(np.abs(cd.S + 6)) < 1e-6
        sc = tr.spin_batch(e.chart, e.field("up"), U)
        # horospheres w = const have div = -2 for the upward unit field w d/dw
        assert np.max(np.abs(sc.div + 2)) < 1e-6

    def test_full_table_and_identities(self):
        spec = dict(H3_SPEC, g=[["1", "0", "0"], ["0", "1 + u1^2", "-u1"], ["0", "-u1", "1"]],
                    domain=[[-3, 3]] * 3, fields={"v": ["0", "0", "1"]}, sample_box=[[-1, 1]] * 3)
        e = load_metric_spec(spec)
        U = e.sample(10, reach=vf.stencil_reach(e.chart))
        assert np.max(np.abs(geo.curvature_batch(e.chart, U).S + 0.5)) < 1e-6
        reps = vf.verify_all(e.chart, e.field("v"), U)
        assert all(r.passed for r in reps.values())

    @pytest.mark.parametrize("bad", [
        {"g": ["1"] * 6},
        {"domain": [[0, 1]] * 3, "g": ["1"] * 5},
        {"domain": [[1, 0]] * 3, "g": ["1"] * 6},
        {"domain": [[0, 1]] * 3, "g": ["1", "0", "0", "1", "0", "import"]},
        [],
    ])
    def test_bad_specs(self, bad):
        with pytest.raises(BadParameter):
            load_metric_spec(bad)

    def test_bad_files(self, tmp_path):
        with pytest.raises(BadParameter):
            load_metric_file(tmp_path / "missing.json")
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(BadParameter):
            load_metric_file(p)

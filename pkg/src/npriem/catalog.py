"""Built-in model manifolds with analytic metric partials and named fields.

Every entry carries a table of expected values.  Constant values are plain
floats; values that vary over the manifold are callables of the coordinate
batch.  Each expected value records the oracle used to obtain it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import BadParameter, UnknownField, UnknownManifold
from .geometry import ChartPoint, MetricChart
from .triad import VectorFieldSpec

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Expected:
    value: Union[float, Callable[[np.ndarray], np.ndarray]]
    tol: float
    oracle: str

    def at(self, U: np.ndarray) -> np.ndarray:
        U = np.atleast_2d(U)
        if callable(self.value):
            return np.asarray(self.value(U), dtype=float)
        return np.full(len(U), float(self.value))


@dataclass(frozen=True)
class FlowSpec:
    p0: tuple
    length: float
    step: float = 1e-3


@dataclass(frozen=True)
class CatalogEntry:
    manifold_id: str
    params: dict
    chart: MetricChart
    fields: dict
    expected: dict
    sample_box: tuple
    sample_count: int = 100
    flows: dict = field(default_factory=dict)
    description: str = ""

    def field(self, field_id: str) -> VectorFieldSpec:
        try:
            return self.fields[field_id]
        except KeyError:
            raise UnknownField(f"{self.manifold_id!r} has no field {field_id!r}; "
                               f"choose from {sorted(self.fields)}") from None

    def point(self, *u) -> ChartPoint:
        return self.chart.point(*u)

    def sample(self, count: Optional[int] = None, seed: int = 42, reach: float = 0.0) -> np.ndarray:
        """Seeded uniform samples from the sample box, rejecting points whose
        stencil of the given reach would leave the chart margin."""
        count = self.sample_count if count is None else count
        rng = np.random.default_rng(seed)
        lo = np.array([b[0] for b in self.sample_box])
        hi = np.array([b[1] for b in self.sample_box])
        out = []
        while sum(len(o) for o in out) < count:
            U = lo + (hi - lo) * rng.random((max(count, 8), 3))
            out.append(U[self.chart.inside(U, reach)])
        return np.concatenate(out)[:count]


def _diag(*entries):
    n = len(entries[0])
    out = np.zeros((n, 3, 3))
    for i, e in enumerate(entries):
        out[:, i, i] = e
    return out


def _radial(center, sign=1.0):
    c = np.asarray(center, dtype=float)

    def K(U):
        d = U - c
        return sign * d / np.linalg.norm(d, axis=1)[:, None]
    return K


def euclidean() -> CatalogEntry:
    chart = MetricChart(
        "euclidean",
        ((-10.0, 10.0),) * 3,
        g=lambda U: np.broadcast_to(np.eye(3), (len(U), 3, 3)).copy(),
        dg=lambda U: np.zeros((len(U), 3, 3, 3)),
        labels=("x", "y", "z"),
    )

    def circular(U):
        x, y = U[:, 0], U[:, 1]
        return np.stack([-y, x, np.zeros_like(x)], axis=1)

    fields = {
        "constant": VectorFieldSpec("constant", lambda U: np.tile([0.0, 0.0, 1.0], (len(U), 1)),
                                    normalize=False, description="parallel field d/dz"),
        "radial_out": VectorFieldSpec("radial_out", _radial((0, 0, 0)), description="d/dr from the origin"),
        "radial_in": VectorFieldSpec("radial_in", _radial((0, 0, 0), -1.0), description="-d/dr toward the origin"),
        "circular": VectorFieldSpec("circular", circular, description="unit rotation field about the z-axis (not geodesic)"),
    }
    r = lambda U: np.linalg.norm(U, axis=1)  # noqa: E731
    cyl = lambda U: np.hypot(U[:, 0], U[:, 1])  # noqa: E731
    expected = {
        ("*", "S"): Expected(0.0, 1e-10, "flat metric"),
        ("constant", "div"): Expected(0.0, 1e-10, "parallel field"),
        ("constant", "abs_omega"): Expected(0.0, 1e-10, "parallel field"),
        ("radial_out", "div"): Expected(lambda U: 2.0 / r(U), 1e-8, "div of x/|x| in R^3 is 2/r"),
        ("radial_out", "abs_omega"): Expected(0.0, 1e-8, "gradient field"),
        ("radial_out", "abs_sigma"): Expected(0.0, 1e-8, "screen map (1/r) Id"),
        ("radial_out", "abs_kappa"): Expected(0.0, 1e-8, "straight lines"),
        ("radial_in", "div"): Expected(lambda U: -2.0 / r(U), 1e-8, "div of -x/|x| is -2/r"),
        ("circular", "abs_kappa"): Expected(lambda U: 1.0 / (math.sqrt(2.0) * cyl(U)), 1e-8,
                                            "|nabla_k k| = 1/rho, |kappa| = |nabla_k k|/sqrt 2"),
        ("circular", "div"): Expected(0.0, 1e-8, "rotation field is divergence-free"),
    }
    flows = {
        "constant": FlowSpec((0.5, 0.5, 0.5), 2.0),
        "radial_out": FlowSpec((0.0, 0.0, 1.0), 1.0),
        "radial_in": FlowSpec((0.0, 0.0, 2.0), 0.5),
    }
    return CatalogEntry("euclidean", {}, chart, fields, expected, ((0.5, 2.0),) * 3, flows=flows,
                        description="flat R^3 in Cartesian coordinates")


def _hopf_chart(chart_id: str, r: float, lam: float) -> MetricChart:
    """Hopf coordinates (eta, xi1, xi2) on S^3(r), with the fibre direction
    stretched by ``lam`` (Berger family; lam = 1 is the round sphere)."""
    mu = lam * lam - 1.0
    r2 = r * r

    def g(U):
        s, c = np.sin(U[:, 0]), np.cos(U[:, 0])
        s2, c2 = s * s, c * c
        out = _diag(np.ones_like(s), s2, c2)
        eta = np.stack([np.zeros_like(s), s2, c2], axis=1)
        return r2 * (out + mu * np.einsum("ni,nj->nij", eta, eta))

    def dg(U):
        s, c = np.sin(U[:, 0]), np.cos(U[:, 0])
        s2, c2, sc2 = s * s, c * c, 2 * s * c
        out = np.zeros((len(U), 3, 3, 3))
        eta = np.stack([np.zeros_like(s), s2, c2], axis=1)
        deta = np.stack([np.zeros_like(s), sc2, -sc2], axis=1)
        out[:, 0] = _diag(np.zeros_like(s), sc2, -sc2) + mu * (
            np.einsum("ni,nj->nij", deta, eta) + np.einsum("ni,nj->nij", eta, deta))
        return r2 * out

    return MetricChart(chart_id, ((0.0, math.pi / 2), (0.0, TWO_PI), (0.0, TWO_PI)), g, dg,
                       periods=(None, TWO_PI, TWO_PI), labels=("eta", "xi1", "xi2"))


_HOPF_BOX = ((0.2, 1.35), (0.0, TWO_PI), (0.0, TWO_PI))


def s3_round(r: float = 1.0) -> CatalogEntry:
    if not r > 0:
        raise BadParameter(f"radius must be positive, got {r}")
    chart = _hopf_chart("s3_round", r, 1.0)
    fields = {
        "hopf": VectorFieldSpec("hopf", lambda U: np.tile([0.0, 1.0 / r, 1.0 / r], (len(U), 1)),
                                normalize=False, description="unit Hopf field (d/dxi1 + d/dxi2)/r"),
    }
    K = 1.0 / (r * r)
    expected = {
        ("*", "S"): Expected(6.0 * K, 1e-8, "Ric = 2K g for constant curvature K = 1/r^2"),
        ("*", "Ric_over_g"): Expected(2.0 * K, 1e-8, "Ric = 2K g"),
        ("hopf", "abs_omega"): Expected(2.0 / r, 1e-6, "omega = <k, [x, y]> on left-invariant fields, [X2, X3] = 2 X1"),
        ("hopf", "abs_kappa"): Expected(0.0, 1e-7, "Hopf fibres are great circles"),
        ("hopf", "abs_sigma"): Expected(0.0, 1e-7, "Killing field"),
        ("hopf", "div"): Expected(0.0, 1e-7, "Killing field"),
        ("hopf", "Ric_kk"): Expected(2.0 * K, 1e-8, "constant curvature"),
    }
    flows = {"hopf": FlowSpec((math.pi / 4, 0.0, 0.0), TWO_PI * r)}
    return CatalogEntry("s3_round", {"r": r}, chart, fields, expected, _HOPF_BOX, flows=flows,
                        description="round 3-sphere of radius r in Hopf coordinates")


def berger(lam: float = 0.7) -> CatalogEntry:
    if not lam > 0:
        raise BadParameter(f"lambda must be positive, got {lam}")
    chart = _hopf_chart("berger", 1.0, lam)
    fields = {
        "hopf": VectorFieldSpec("hopf", lambda U: np.tile([0.0, 1.0 / lam, 1.0 / lam], (len(U), 1)),
                                normalize=False, description="unit fibre field (d/dxi1 + d/dxi2)/lambda"),
        "tilted": VectorFieldSpec("tilted", lambda U: np.tile([1.0, 1.0, 0.0], (len(U), 1)),
                                  description="normalized d/deta + d/dxi1 (generic, not geodesic)"),
    }
    l2 = lam * lam
    expected = {
        ("*", "S"): Expected(8.0 - 2.0 * l2, 1e-8, "left-invariant frame: Ric = diag(2l^2, 4-2l^2, 4-2l^2)"),
        ("hopf", "abs_omega"): Expected(2.0 * lam, 1e-6, "omega = <k, [x, y]> = 2 lambda"),
        ("hopf", "abs_kappa"): Expected(0.0, 1e-7, "fibres are geodesics"),
        ("hopf", "abs_sigma"): Expected(0.0, 1e-7, "Killing field (U(1) isometry)"),
        ("hopf", "div"): Expected(0.0, 1e-7, "Killing field"),
        ("hopf", "Ric_kk"): Expected(2.0 * l2, 1e-8, "Ric(k, k) = omega^2 / 2 for a unit Killing field"),
    }
    flows = {"hopf": FlowSpec((math.pi / 4, 0.0, 0.0), TWO_PI * lam)}
    return CatalogEntry("berger", {"lambda": lam}, chart, fields, expected, _HOPF_BOX, flows=flows,
                        description="Berger sphere: unit S^3 with Hopf fibres scaled by lambda")


H3_CENTER = (0.0, 0.0, 1.0)


def h3_distance(U: np.ndarray, center=H3_CENTER) -> np.ndarray:
    c = np.asarray(center, dtype=float)
    A = 1.0 + np.sum((U - c) ** 2, axis=1) / (2.0 * U[:, 2] * c[2])
    return np.arccosh(A)


def h3() -> CatalogEntry:
    chart = MetricChart(
        "h3",
        ((-5.0, 5.0), (-5.0, 5.0), (0.02, 10.0)),
        g=lambda U: _diag(*(1.0 / U[:, 2] ** 2,) * 3),
        dg=lambda U: _h3_dg(U),
        labels=("u", "v", "w"),
    )
    c = np.asarray(H3_CENTER)

    def radial(U):
        # grad of A = 1 + |p - c|^2 / (2 w w_c), raised with g^-1 = w^2; a positive multiple of grad r
        d = U - c
        w = U[:, 2]
        dA = d / (w * c[2])[:, None]
        dA[:, 2] -= np.sum(d * d, axis=1) / (2.0 * w * w * c[2])
        return (w * w)[:, None] * dA

    fields = {"radial": VectorFieldSpec("radial", radial, description="unit gradient of distance to (0, 0, 1)")}
    coth = lambda U: 1.0 / np.tanh(h3_distance(U))  # noqa: E731
    expected = {
        ("*", "S"): Expected(-6.0, 1e-8, "Ric = 2K g with K = -1"),
        ("*", "Ric_over_g"): Expected(-2.0, 1e-8, "Ric = 2K g"),
        ("radial", "div"): Expected(lambda U: 2.0 * coth(U), 1e-7, "geodesic spheres: screen map coth(r) Id"),
        ("radial", "abs_omega"): Expected(0.0, 1e-7, "gradient field"),
        ("radial", "abs_sigma"): Expected(0.0, 1e-7, "umbilic spheres"),
        ("radial", "abs_kappa"): Expected(0.0, 1e-7, "radial geodesics"),
        ("radial", "killing_residual"): Expected(lambda U: 2.0 * coth(U), 1e-7, "2 coth r on the screen diagonal"),
        ("radial", "Ric_kk"): Expected(-2.0, 1e-8, "constant curvature"),
    }
    flows = {"radial": FlowSpec((0.0, 0.0, math.exp(0.5)), 1.0)}
    return CatalogEntry("h3", {}, chart, fields, expected, ((0.2, 1.2), (0.2, 1.2), (0.5, 2.0)), flows=flows,
                        description="hyperbolic 3-space, upper half-space model")


def _h3_dg(U):
    out = np.zeros((len(U), 3, 3, 3))
    out[:, 2] = _diag(*(-2.0 / U[:, 2] ** 3,) * 3)
    return out


def h2xr() -> CatalogEntry:
    def dg(U):
        out = np.zeros((len(U), 3, 3, 3))
        y = U[:, 1]
        out[:, 1] = _diag(-2.0 / y ** 3, -2.0 / y ** 3, np.zeros_like(y))
        return out

    chart = MetricChart(
        "h2xr",
        ((-5.0, 5.0), (0.05, 10.0), (-10.0, 10.0)),
        g=lambda U: _diag(1.0 / U[:, 1] ** 2, 1.0 / U[:, 1] ** 2, np.ones(len(U))),
        dg=dg,
        labels=("x", "y", "z"),
    )
    fields = {
        "vertical": VectorFieldSpec("vertical", lambda U: np.tile([0.0, 0.0, 1.0], (len(U), 1)),
                                    normalize=False, description="parallel field d/dz"),
        "tilted": VectorFieldSpec("tilted", lambda U: np.stack([U[:, 1], np.zeros(len(U)), np.ones(len(U))], axis=1),
                                  description="normalized y d/dx + d/dz (not geodesic)"),
    }
    expected = {
        ("*", "S"): Expected(-2.0, 1e-8, "product of H^2 (K = -1) with a line"),
        ("vertical", "abs_kappa"): Expected(0.0, 1e-8, "nabla k = 0"),
        ("vertical", "div"): Expected(0.0, 1e-8, "nabla k = 0"),
        ("vertical", "abs_omega"): Expected(0.0, 1e-8, "nabla k = 0"),
        ("vertical", "abs_sigma"): Expected(0.0, 1e-8, "nabla k = 0"),
        ("vertical", "Ric_kk"): Expected(0.0, 1e-8, "Ric = diag(-1, -1, 0) in an adapted frame"),
        ("vertical", "Ric_mmbar"): Expected(-1.0, 1e-8, "Ric = diag(-1, -1, 0) in an adapted frame"),
        ("vertical", "abs_Ric_mm"): Expected(0.0, 1e-8, "Ric is -1 times the metric on the screen"),
        ("vertical", "sup_Rk"): Expected(0.0, 1e-8, "product metric, k parallel"),
    }
    flows = {"vertical": FlowSpec((0.0, 1.0, 0.0), 2.0)}
    return CatalogEntry("h2xr", {}, chart, fields, expected, ((-1.0, 1.0), (0.5, 2.0), (-1.0, 1.0)), flows=flows,
                        description="H^2 x R with the half-plane model on the first factor")


def nil() -> CatalogEntry:
    def g(U):
        x = U[:, 0]
        out = _diag(np.ones_like(x), 1.0 + x * x, np.ones_like(x))
        out[:, 1, 2] = out[:, 2, 1] = -x
        return out

    def dg(U):
        x = U[:, 0]
        out = np.zeros((len(U), 3, 3, 3))
        out[:, 0, 1, 1] = 2.0 * x
        out[:, 0, 1, 2] = out[:, 0, 2, 1] = -1.0
        return out

    chart = MetricChart("nil", ((-3.0, 3.0),) * 3, g, dg, labels=("x", "y", "z"))
    fields = {
        "vertical": VectorFieldSpec("vertical", lambda U: np.tile([0.0, 0.0, 1.0], (len(U), 1)),
                                    normalize=False, description="central left-invariant field e3 = d/dz"),
        "horizontal": VectorFieldSpec("horizontal", lambda U: np.tile([1.0, 0.0, 0.0], (len(U), 1)),
                                      normalize=False, description="left-invariant field e1 = d/dx"),
        "mixed": VectorFieldSpec("mixed", lambda U: np.stack([np.ones(len(U)), np.ones(len(U)), U[:, 0]], axis=1),
                                 description="normalized e1 + e2 = d/dx + d/dy + x d/dz"),
    }
    expected = {
        ("*", "S"): Expected(-0.5, 1e-8, "left-invariant frame with [e1, e2] = e3: Ric = diag(-1/2, -1/2, 1/2)"),
        ("vertical", "abs_omega"): Expected(1.0, 1e-6, "omega = <e3, [e1, e2]> = 1"),
        ("vertical", "abs_kappa"): Expected(0.0, 1e-7, "Killing field of constant length"),
        ("vertical", "abs_sigma"): Expected(0.0, 1e-7, "Killing field"),
        ("vertical", "div"): Expected(0.0, 1e-7, "Killing field"),
        ("vertical", "Ric_kk"): Expected(0.5, 1e-8, "Ric(e3, e3) = 1/2"),
        ("horizontal", "abs_kappa"): Expected(0.0, 1e-7, "nabla_{e1} e1 = 0 by Koszul"),
        ("horizontal", "div"): Expected(0.0, 1e-7, "left-invariant field on a unimodular group"),
        ("horizontal", "Ric_kk"): Expected(-0.5, 1e-8, "Ric(e1, e1) = -1/2"),
    }
    flows = {
        "vertical": FlowSpec((0.3, 0.2, 0.0), 2.0),
        "horizontal": FlowSpec((-1.0, 0.0, 0.0), 2.0),
    }
    return CatalogEntry("nil", {}, chart, fields, expected, ((-1.0, 1.0),) * 3, flows=flows,
                        description="Heisenberg group with dx^2 + dy^2 + (dz - x dy)^2")


_BUILDERS = {
    "euclidean": (euclidean, ()),
    "s3_round": (s3_round, ("r",)),
    "h3": (h3, ()),
    "h2xr": (h2xr, ()),
    "nil": (nil, ()),
    "berger": (berger, ("lambda",)),
}

MANIFOLD_IDS = tuple(_BUILDERS)


def load(manifold_id: str, **params) -> CatalogEntry:
    """Load a catalog entry; parameters are ``r`` (s3_round) and ``lambda`` (berger)."""
    try:
        builder, names = _BUILDERS[manifold_id]
    except KeyError:
        raise UnknownManifold(f"unknown manifold {manifold_id!r}; choose from {', '.join(MANIFOLD_IDS)}") from None
    extra = set(params) - set(names)
    if extra:
        raise BadParameter(f"{manifold_id} takes no parameter(s) {sorted(extra)}")
    kwargs = {("lam" if k == "lambda" else k): float(v) for k, v in params.items()}
    return builder(**kwargs)


def parameter_names(manifold_id: str) -> tuple:
    return _BUILDERS[manifold_id][1]

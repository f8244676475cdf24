"""Chart-based Riemannian geometry in three dimensions.

Every routine here is vectorized over a leading batch axis: metric callables
take coordinates of shape ``(N, 3)`` and return ``(N, 3, 3)``.  Single-point
wrappers (``metric_at``, ``christoffel``, ``curvature``...) accept a
:class:`ChartPoint` or any length-3 sequence.

Index conventions
-----------------
``dg[n, k, i, j]``        partial_k g_ij
``Gamma[n, k, i, j]``     Gamma^k_ij
``Riem[n, i, j, k, l]``   R(d_i, d_j, d_k, d_l) = <R(d_i, d_j) d_k, d_l>,
                          R(u, v)w = nabla_u nabla_v w - nabla_v nabla_u w - nabla_[u,v] w
``Ric[n, j, k]``          sum_a R(e_a, d_j, d_k, e_a)

With this convention R(u, v, v, u) is the sectional curvature of an
orthonormal pair, so the unit round 3-sphere has S = +6.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .errors import (
    LeftChartDomain,
    MetricNotPositiveDefinite,
    PointOutsideChart,
    StencilLeavesChart,
    StepNotPositive,
)

__all__ = [
    "ChartPoint",
    "MetricChart",
    "CurvatureData",
    "GeodesicTrace",
    "LEVI_CIVITA",
    "central_diff",
    "inner",
    "g_cross",
    "metric_batch",
    "metric_at",
    "christoffel_batch",
    "christoffel",
    "curvature_batch",
    "curvature",
    "vector_gradient",
    "covariant_derivative",
    "geodesic_integrate",
    "riemann_symmetry_residuals",
]

DEFAULT_MARGIN = 1e-2
DEFAULT_FD_STEP = 1e-4
# step for differentiating Christoffel symbols; balances truncation against
# roundoff, which is larger when the metric partials are themselves differenced
DEFAULT_CURV_STEP = 2.5e-4
DEFAULT_CURV_STEP_FD = 5e-4
DEFAULT_VECTOR_STEP = 1e-3

# 4th-order central difference stencil
_OFFSETS = np.array([-2.0, -1.0, 1.0, 2.0])
# integer weights so that constants difference to exactly zero; scaled by 1/(12 h)
_WEIGHTS = np.array([1.0, -8.0, 8.0, -1.0])
STENCIL_REACH = 2.0  # in units of the step

LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_i, _j, _k] = 1.0
    LEVI_CIVITA[_i, _k, _j] = -1.0


@dataclass(frozen=True)
class ChartPoint:
    chart_id: str
    u: tuple

    def __post_init__(self):
        object.__setattr__(self, "u", tuple(float(c) for c in self.u))
        if len(self.u) != 3:
            raise ValueError("a chart point needs exactly 3 coordinates")

    @property
    def array(self) -> np.ndarray:
        return np.array(self.u)


@dataclass(frozen=True)
class MetricChart:
    """A single coordinate chart carrying a Riemannian metric.

    ``g`` maps ``(N, 3)`` coordinates to ``(N, 3, 3)`` symmetric matrices.
    ``dg`` is optional and returns the analytic partials ``dg[n, k, i, j]``;
    without it the partials come from 4th-order central differences with
    step ``fd_step``.  ``periods`` marks coordinates that are identified
    modulo a period (e.g. Hopf angles); such axes carry no domain bound.
    """

    chart_id: str
    domain: tuple
    g: Callable[[np.ndarray], np.ndarray]
    dg: Optional[Callable[[np.ndarray], np.ndarray]] = None
    margin: float = DEFAULT_MARGIN
    fd_step: float = DEFAULT_FD_STEP
    curv_step: Optional[float] = None
    periods: tuple = (None, None, None)
    labels: tuple = ("u1", "u2", "u3")

    def __post_init__(self):
        dom = tuple((float(a), float(b)) for a, b in self.domain)
        if len(dom) != 3 or any(a >= b for a, b in dom):
            raise ValueError(f"bad domain box {self.domain!r}")
        if self.margin <= 0 or self.fd_step <= 0 or (self.curv_step is not None and self.curv_step <= 0):
            raise ValueError("margin and steps must be positive")
        object.__setattr__(self, "domain", dom)

    @property
    def analytic(self) -> bool:
        return self.dg is not None

    @property
    def curvature_step(self) -> float:
        if self.curv_step is not None:
            return self.curv_step
        return DEFAULT_CURV_STEP if self.analytic else DEFAULT_CURV_STEP_FD

    def point(self, *u) -> ChartPoint:
        if len(u) == 1:
            u = tuple(u[0])
        return ChartPoint(self.chart_id, u)

    def inside(self, U, reach: float = 0.0) -> np.ndarray:
        """Mask of rows of ``U`` lying inside the domain shrunk by margin + reach."""
        U = np.atleast_2d(np.asarray(U, dtype=float))
        ok = np.all(np.isfinite(U), axis=-1)
        pad = self.margin + reach
        for a, ((lo, hi), per) in enumerate(zip(self.domain, self.periods)):
            if per is not None:
                continue
            ok &= (U[:, a] > lo + pad) & (U[:, a] < hi - pad)
        return ok

    def wrap(self, U: np.ndarray) -> np.ndarray:
        """Reduce periodic coordinates into ``[lo, lo + period)``."""
        U = np.array(U, dtype=float)
        for a, ((lo, _), per) in enumerate(zip(self.domain, self.periods)):
            if per is not None:
                U[..., a] = lo + np.mod(U[..., a] - lo, per)
        return U

    def coordinate_distance(self, a, b) -> float:
        """Euclidean coordinate distance honouring periodic identifications."""
        d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        for i, per in enumerate(self.periods):
            if per is not None:
                d[..., i] = (d[..., i] + per / 2) % per - per / 2
        return float(np.linalg.norm(d))


@dataclass(frozen=True)
class CurvatureData:
    Gamma: np.ndarray
    Riem: np.ndarray
    Ric: np.ndarray
    S: np.ndarray

    def __getitem__(self, idx) -> "CurvatureData":
        return CurvatureData(self.Gamma[idx], self.Riem[idx], self.Ric[idx], self.S[idx])


def as_coords(chart: MetricChart, p, reach: float = 0.0) -> np.ndarray:
    """Validate a point (or batch) against ``chart`` and return an (N, 3) array."""
    if isinstance(p, ChartPoint):
        if p.chart_id != chart.chart_id:
            raise PointOutsideChart(f"point belongs to chart {p.chart_id!r}, not {chart.chart_id!r}")
        U = p.array[None, :]
    else:
        U = np.atleast_2d(np.asarray(p, dtype=float))
    if U.shape[-1] != 3 or U.ndim != 2:
        raise ValueError(f"expected coordinates of shape (N, 3), got {U.shape}")
    bad = ~chart.inside(U)
    if bad.any():
        raise PointOutsideChart(f"{U[bad][0].tolist()} outside chart {chart.chart_id!r} (margin {chart.margin})")
    if reach > 0 and (~chart.inside(U, reach)).any():
        raise StencilLeavesChart(f"stencil of reach {reach:g} leaves chart {chart.chart_id!r}")
    return U


def central_diff(f: Callable[[np.ndarray], np.ndarray], U: np.ndarray, h: float) -> np.ndarray:
    """4th-order central partials of a batched field.

    ``f`` maps ``(M, 3)`` to ``(M, ...)``; the result has shape ``(N, 3, ...)``
    with the derivative index right after the batch axis.
    """
    U = np.asarray(U, dtype=float)
    n = U.shape[0]
    eye = np.eye(3)
    pts = U[:, None, None, :] + h * _OFFSETS[None, None, :, None] * eye[None, :, None, :]
    vals = np.asarray(f(pts.reshape(-1, 3)))
    vals = vals.reshape((n, 3, len(_OFFSETS)) + vals.shape[1:])
    return np.einsum("nds...,s->nd...", vals, _WEIGHTS) / (12.0 * h)


def inner(g: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Complex-bilinear metric pairing (no conjugation)."""
    return np.einsum("...i,...ij,...j->...", a, g, b)


def g_cross(g_inv: np.ndarray, sqrt_det: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Metric cross product  c^i = g^{il} sqrt(det g) eps_{ljm} a^j b^m."""
    low = np.einsum("ljm,...j,...m->...l", LEVI_CIVITA, a, b) * sqrt_det[..., None]
    return np.einsum("...il,...l->...i", g_inv, low)


def metric_batch(chart: MetricChart, U: np.ndarray, check: bool = True):
    g = np.asarray(chart.g(U), dtype=float)
    if check:
        eig = np.linalg.eigvalsh(g)
        low = eig[:, 0]
        if not np.all(low > 0):
            i = int(np.argmin(low))
            raise MetricNotPositiveDefinite(low[i], U[i])
    g_inv = np.linalg.inv(g)
    sqrt_det = np.sqrt(np.linalg.det(g))
    return g, g_inv, sqrt_det


def metric_at(chart: MetricChart, p):
    """Metric, inverse metric and sqrt(det g) at one point."""
    U = as_coords(chart, p)
    g, g_inv, sqrt_det = metric_batch(chart, U)
    return g[0], g_inv[0], float(sqrt_det[0])


def metric_partials(chart: MetricChart, U: np.ndarray) -> np.ndarray:
    if chart.dg is not None:
        return np.asarray(chart.dg(U), dtype=float)
    return central_diff(chart.g, U, chart.fd_step)


def christoffel_batch(chart: MetricChart, U: np.ndarray, g_inv: Optional[np.ndarray] = None) -> np.ndarray:
    if g_inv is None:
        g_inv = np.linalg.inv(np.asarray(chart.g(U), dtype=float))
    dg = metric_partials(chart, U)
    # lowered Gamma_{l i j} = (d_i g_lj + d_j g_li - d_l g_ij) / 2
    low = 0.5 * (dg.transpose(0, 2, 1, 3) + dg.transpose(0, 2, 3, 1) - dg)
    return np.einsum("nkl,nlij->nkij", g_inv, low)


def christoffel(chart: MetricChart, p) -> np.ndarray:
    """Christoffel symbols ``Gamma[k, i, j]`` of the second kind at one point."""
    U = as_coords(chart, p)
    metric_batch(chart, U)
    return christoffel_batch(chart, U)[0]


def curvature_batch(chart: MetricChart, U: np.ndarray) -> CurvatureData:
    g, g_inv, _ = metric_batch(chart, U, check=False)
    G = christoffel_batch(chart, U, g_inv)
    dG = central_diff(lambda V: christoffel_batch(chart, V), U, chart.curvature_step)
    # R(d_i, d_j) d_k = R^m_{ijk} d_m
    up = (np.einsum("nimjk->nmijk", dG) - np.einsum("njmik->nmijk", dG)
          + np.einsum("nmip,npjk->nmijk", G, G) - np.einsum("nmjp,npik->nmijk", G, G))
    riem = np.einsum("nlm,nmijk->nijkl", g, up)
    ric = np.einsum("nil,nijkl->njk", g_inv, riem)
    ric = 0.5 * (ric + ric.transpose(0, 2, 1))
    S = np.einsum("njk,njk->n", g_inv, ric)
    return CurvatureData(G, riem, ric, S)


def curvature(chart: MetricChart, p) -> CurvatureData:
    """Christoffels, Riemann, Ricci and scalar curvature at one point."""
    reach = STENCIL_REACH * chart.curvature_step + (0.0 if chart.analytic else STENCIL_REACH * chart.fd_step)
    U = as_coords(chart, p, reach=reach)
    metric_batch(chart, U)
    return curvature_batch(chart, U)[0]


def riemann_symmetry_residuals(riem: np.ndarray) -> dict:
    """Max violations of the algebraic Riemann symmetries (batched or single)."""
    r = np.asarray(riem)
    sw = lambda *ax: np.moveaxis(r, [-4, -3, -2, -1], list(ax))  # noqa: E731
    bianchi = r + np.einsum("...jkil->...ijkl", r) + np.einsum("...kijl->...ijkl", r)
    return {
        "antisym_12": float(np.max(np.abs(r + sw(-3, -4, -2, -1)))),
        "antisym_34": float(np.max(np.abs(r + sw(-4, -3, -1, -2)))),
        "pair_swap": float(np.max(np.abs(r - sw(-2, -1, -4, -3)))),
        "first_bianchi": float(np.max(np.abs(bianchi))),
    }


def vector_gradient(chart: MetricChart, V: Callable, U: np.ndarray, h: float = DEFAULT_VECTOR_STEP,
                    Gamma: Optional[np.ndarray] = None) -> np.ndarray:
    """``DV[n, j, i] = (nabla_j V)^i`` for a batched (possibly complex) field."""
    if Gamma is None:
        Gamma = christoffel_batch(chart, U)
    dV = central_diff(V, U, h)
    return dV + np.einsum("nijk,nk->nji", Gamma, V(U))


def covariant_derivative(chart: MetricChart, p, V: Callable, w, h: float = DEFAULT_VECTOR_STEP) -> np.ndarray:
    """``nabla_w V`` at one point, with V differentiated on a central stencil."""
    U = as_coords(chart, p)
    if not chart.inside(U, STENCIL_REACH * h).all():
        raise StencilLeavesChart(f"stencil of step {h:g} leaves chart {chart.chart_id!r}")
    DV = vector_gradient(chart, V, U, h)[0]
    return np.einsum("j,ji->i", np.asarray(w), DV)


@dataclass
class GeodesicTrace:
    """RK4 samples of a geodesic, plus the stage positions of every step."""

    chart_id: str
    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    stages: np.ndarray = field(repr=False)
    dt: float = 0.0

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self) -> Iterator:
        for t, u, v in zip(self.t, self.u, self.v):
            yield float(t), ChartPoint(self.chart_id, u), v


def _geodesic_accel(chart: MetricChart, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    G = christoffel_batch(chart, u[None, :])[0]
    return -np.einsum("kij,i,j->k", G, v, v)


def speed(chart: MetricChart, u, v) -> float:
    g = np.asarray(chart.g(np.atleast_2d(u)))[0]
    return float(np.sqrt(inner(g, v, v)))


def geodesic_integrate(chart: MetricChart, p0, v0: Sequence[float], length: float, step: float,
                       unit_tol: float = 1e-10) -> GeodesicTrace:
    """Integrate the geodesic equation with classical RK4 at a uniform step.

    The number of steps is ``ceil(length / step)`` and the step is shrunk
    uniformly so the trace ends exactly at ``length``.
    """
    if not step > 0:
        raise StepNotPositive(f"step must be positive, got {step}")
    if length < 0:
        raise ValueError("length must be nonnegative")
    u0 = as_coords(chart, p0)[0]
    v0 = np.asarray(v0, dtype=float)
    if abs(speed(chart, u0, v0) - 1.0) > unit_tol:
        raise ValueError(f"initial velocity must be unit length, |v0| = {speed(chart, u0, v0)!r}")
    n = int(np.ceil(length / step - 1e-9)) if length > 0 else 0
    dt = length / n if n else 0.0
    ts = np.zeros(n + 1)
    us = np.zeros((n + 1, 3))
    vs = np.zeros((n + 1, 3))
    stages = np.zeros((n, 4, 3))
    us[0], vs[0] = u0, v0
    u, v = u0.copy(), v0.copy()
    for i in range(n):
        a1 = _geodesic_accel(chart, u, v)
        u2, v2 = u + 0.5 * dt * v, v + 0.5 * dt * a1
        a2 = _geodesic_accel(chart, u2, v2)
        u3, v3 = u + 0.5 * dt * v2, v + 0.5 * dt * a2
        a3 = _geodesic_accel(chart, u3, v3)
        u4, v4 = u + dt * v3, v + dt * a3
        a4 = _geodesic_accel(chart, u4, v4)
        stages[i] = (u, u2, u3, u4)
        u_new = u + dt / 6.0 * (v + 2 * v2 + 2 * v3 + v4)
        v_new = v + dt / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
        if not chart.inside(np.vstack([u2, u3, u4, u_new])).all():
            partial = GeodesicTrace(chart.chart_id, ts[: i + 1], us[: i + 1], vs[: i + 1], stages[:i], dt)
            raise LeftChartDomain((i + 1) * dt, partial)
        shift = chart.wrap(u_new) - u_new
        u, v = u_new + shift, v_new
        ts[i + 1], us[i + 1], vs[i + 1] = (i + 1) * dt, u, v
    return GeodesicTrace(chart.chart_id, ts, us, vs, stages, dt)

"""Orthonormal frames, complex triads and the five spin coefficients.

A unit field k is completed to a frame {k, x, y} by a deterministic rule:
the seed is the first coordinate vector e_a whose (acute) g-angle with k
exceeds 25 degrees; x is the normalized projection of e_a onto k-perp and
y = k x x (metric cross product), so (k, x, y) is positively oriented in the
chart.  The seed index is fixed at a base point and reused on every stencil
point around it so that finite-difference derivatives see a smooth frame.

The complex triad is m = (x - i y)/sqrt(2), mbar = (x + i y)/sqrt(2), and
all pairings are complex-bilinear.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Callable, Optional, Union

import numpy as np

from . import geometry as geo
from .errors import FrameSeedDegenerate, ZeroField

SEED_ANGLE_DEG = 25.0
_COS_SEED = np.cos(np.deg2rad(SEED_ANGLE_DEG))
_SQRT2 = np.sqrt(2.0)

Theta = Union[float, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class VectorFieldSpec:
    """A vector field given by its chart components ``K(U) -> (N, 3)``."""

    field_id: str
    K: Callable[[np.ndarray], np.ndarray]
    normalize: bool = True
    description: str = ""


@dataclass(frozen=True)
class Triad:
    p: geo.ChartPoint
    k: np.ndarray
    x: np.ndarray
    y: np.ndarray
    seed: int = 0

    @property
    def m(self) -> np.ndarray:
        return (self.x - 1j * self.y) / _SQRT2

    @property
    def mbar(self) -> np.ndarray:
        return (self.x + 1j * self.y) / _SQRT2


@dataclass(frozen=True)
class SpinCoefficients:
    kappa: complex
    rho: complex
    sigma: complex
    epsilon: complex
    beta: complex
    div: float
    omega: float
    shear_mag2: float

    def __getitem__(self, idx) -> "SpinCoefficients":
        return SpinCoefficients(**{f.name: getattr(self, f.name)[idx] for f in fields(self)})

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _rotation(theta: Theta, U: np.ndarray) -> np.ndarray:
    if callable(theta):
        return np.asarray(theta(U), dtype=float).reshape(len(U))
    return np.full(len(U), float(theta))


def unit_field(K: VectorFieldSpec, g: np.ndarray, U: np.ndarray) -> np.ndarray:
    raw = np.asarray(K.K(U), dtype=float)
    norm = np.sqrt(geo.inner(g, raw, raw))
    if np.any(~(norm > 0)):
        raise ZeroField(f"field {K.field_id!r} vanishes at {U[np.argmin(np.nan_to_num(norm))].tolist()}")
    if K.normalize:
        return raw / norm[:, None]
    if np.max(np.abs(norm - 1.0)) > 1e-10:
        raise ValueError(f"field {K.field_id!r} is declared unit but |K| - 1 = {np.max(np.abs(norm - 1)):.2e}")
    return raw


def choose_seed(g: np.ndarray, k: np.ndarray) -> np.ndarray:
    """First coordinate index whose basis vector makes an angle > 25 deg with k."""
    k_low = np.einsum("nij,nj->ni", g, k)
    cos = np.abs(k_low) / np.sqrt(np.einsum("nii->ni", g))
    clears = cos < _COS_SEED
    if not clears.any(axis=1).all():
        raise FrameSeedDegenerate("no coordinate vector clears the seed angle")
    return np.argmax(clears, axis=1)


def frame_batch(chart: geo.MetricChart, K: VectorFieldSpec, U: np.ndarray,
                seed: Optional[np.ndarray] = None, theta: Theta = 0.0):
    """Frame vectors at each row of U; returns ``(F, seed)`` with ``F[n] = [k, x, y]``.

    ``theta`` rotates the screen pair: x1 = cos t x + sin t y, y1 = -sin t x + cos t y,
    which is m1 = e^{i t} m.
    """
    g, g_inv, sqrt_det = geo.metric_batch(chart, U, check=False)
    k = unit_field(K, g, U)
    if seed is None:
        seed = choose_seed(g, k)
    seed = np.broadcast_to(np.asarray(seed, dtype=int), (len(U),))
    e = np.eye(3)[seed]
    x = e - geo.inner(g, e, k)[:, None] * k
    xn = np.sqrt(geo.inner(g, x, x))
    if np.any(xn < 1e-8):
        raise FrameSeedDegenerate("seed vector is parallel to the field")
    x = x / xn[:, None]
    y = geo.g_cross(g_inv, sqrt_det, k, x)
    th = _rotation(theta, U)
    if np.any(th != 0):
        c, s = np.cos(th)[:, None], np.sin(th)[:, None]
        x, y = c * x + s * y, -s * x + c * y
    return np.stack([k, x, y], axis=1), np.array(seed)


@dataclass
class TriadJet:
    """Frame, metric and covariant frame derivatives on a batch of points.

    ``DF[n, a, j, i]`` is the i-th chart component of nabla_{d_j} of frame
    vector a (0 = k, 1 = x, 2 = y).
    """

    U: np.ndarray
    g: np.ndarray
    F: np.ndarray
    DF: np.ndarray
    dF: np.ndarray
    Gamma: np.ndarray
    seed: np.ndarray

    @property
    def k(self):
        return self.F[:, 0]

    @property
    def x(self):
        return self.F[:, 1]

    @property
    def y(self):
        return self.F[:, 2]

    @property
    def m(self):
        return (self.F[:, 1] - 1j * self.F[:, 2]) / _SQRT2

    @property
    def mbar(self):
        return (self.F[:, 1] + 1j * self.F[:, 2]) / _SQRT2

    def vec(self, name: str) -> np.ndarray:
        return {"k": self.k, "x": self.x, "y": self.y, "m": self.m, "mbar": self.mbar}[name]

    def grad(self, name: str) -> np.ndarray:
        """``D[n, j, i]`` covariant derivative table of a frame vector."""
        D = self.DF
        return {
            "k": D[:, 0], "x": D[:, 1], "y": D[:, 2],
            "m": (D[:, 1] - 1j * D[:, 2]) / _SQRT2,
            "mbar": (D[:, 1] + 1j * D[:, 2]) / _SQRT2,
        }[name]

    def partial(self, name: str) -> np.ndarray:
        """Plain chart partials ``d[n, j, i] = d_j V^i`` of a frame vector."""
        d = self.dF
        return {
            "k": d[:, 0], "x": d[:, 1], "y": d[:, 2],
            "m": (d[:, 1] - 1j * d[:, 2]) / _SQRT2,
            "mbar": (d[:, 1] + 1j * d[:, 2]) / _SQRT2,
        }[name]

    def nabla(self, w, V: str) -> np.ndarray:
        """nabla_w V; ``w`` is a frame name or a batch of vectors."""
        w = self.vec(w) if isinstance(w, str) else w
        return np.einsum("nj,nji->ni", w, self.grad(V))

    def ip(self, a, b) -> np.ndarray:
        a = self.vec(a) if isinstance(a, str) else a
        b = self.vec(b) if isinstance(b, str) else b
        return geo.inner(self.g, a, b)

    def bracket(self, V: str, W: str) -> np.ndarray:
        v, w = self.vec(V), self.vec(W)
        return (np.einsum("nj,nji->ni", v, self.partial(W))
                - np.einsum("nj,nji->ni", w, self.partial(V)))

    def spin(self) -> SpinCoefficients:
        ip, nab = self.ip, self.nabla
        kappa = -ip(nab("k", "k"), "m")
        rho = -ip(nab("mbar", "k"), "m")
        sigma = -ip(nab("m", "k"), "m")
        epsilon = ip(nab("k", "m"), "mbar")
        beta = ip(nab("m", "m"), "mbar")
        div = ip(nab("x", "k"), "x") + ip(nab("y", "k"), "y")
        omega = ip(nab("y", "k"), "x") - ip(nab("x", "k"), "y")
        return SpinCoefficients(kappa, rho, sigma, epsilon, beta, div, omega, np.abs(sigma) ** 2)

    def shear_from_frame(self) -> np.ndarray:
        """Complex shear assembled from the real screen matrix."""
        ip, nab = self.ip, self.nabla
        xx, yy = ip(nab("x", "k"), "x"), ip(nab("y", "k"), "y")
        yx, xy = ip(nab("y", "k"), "x"), ip(nab("x", "k"), "y")
        return 0.5 * (yy - xx) + 0.5j * (yx + xy)

    def epsilon_alt(self) -> np.ndarray:
        return 1j * self.ip(self.nabla("k", "x"), "y")

    def screen_table(self) -> np.ndarray:
        """``A[n, v, w] = <nabla_v k, w>`` over the real frame {k, x, y}."""
        Dk = self.grad("k")
        nab = np.einsum("naj,nji->nai", self.F, Dk)
        return np.einsum("nai,nij,nbj->nab", nab, self.g, self.F)


def triad_jet(chart: geo.MetricChart, K: VectorFieldSpec, U: np.ndarray,
              seed: Optional[np.ndarray] = None, theta: Theta = 0.0,
              h: float = geo.DEFAULT_VECTOR_STEP) -> TriadJet:
    U = np.atleast_2d(np.asarray(U, dtype=float))
    # positive-definiteness is checked at the base points only
    g, g_inv, _ = geo.metric_batch(chart, U)
    F, seed = frame_batch(chart, K, U, seed, theta)
    stencil_seed = np.repeat(seed, 3 * 4)
    dF = geo.central_diff(lambda V: frame_batch(chart, K, V, stencil_seed, theta)[0], U, h)
    # dF[n, j, a, i] -> [n, a, j, i]
    dF = dF.transpose(0, 2, 1, 3)
    G = geo.christoffel_batch(chart, U, g_inv)
    DF = dF + np.einsum("nijl,nal->naji", G, F)
    return TriadJet(U, g, F, DF, dF, G, seed)


def _single(chart, p, h):
    reach = geo.STENCIL_REACH * h + (0.0 if chart.analytic else geo.STENCIL_REACH * chart.fd_step)
    return geo.as_coords(chart, p, reach=reach)


def build_frame(chart: geo.MetricChart, K: VectorFieldSpec, p, seed: Optional[int] = None,
                theta: Theta = 0.0) -> Triad:
    """Deterministic orthonormal frame {k, x, y} at ``p``."""
    U = geo.as_coords(chart, p)
    geo.metric_batch(chart, U)
    F, s = frame_batch(chart, K, U, seed, theta)
    return Triad(geo.ChartPoint(chart.chart_id, U[0]), F[0, 0], F[0, 1], F[0, 2], int(s[0]))


def spin_batch(chart: geo.MetricChart, K: VectorFieldSpec, U: np.ndarray, seed=None,
               theta: Theta = 0.0, h: float = geo.DEFAULT_VECTOR_STEP) -> SpinCoefficients:
    return triad_jet(chart, K, U, seed, theta, h).spin()


def spin_coefficients(chart: geo.MetricChart, K: VectorFieldSpec, p, theta: Theta = 0.0,
                      seed: Optional[int] = None, h: float = geo.DEFAULT_VECTOR_STEP) -> SpinCoefficients:
    """kappa, rho, sigma, epsilon, beta plus div, omega and |sigma|^2 at ``p``."""
    U = _single(chart, p, h)
    return triad_jet(chart, K, U, seed, theta, h).spin()[0]


def rotate_triad(t: Triad, theta: float) -> Triad:
    """Gauge rotation m -> e^{i theta} m of a pointwise triad."""
    c, s = np.cos(theta), np.sin(theta)
    return Triad(t.p, t.k, c * t.x + s * t.y, -s * t.x + c * t.y, t.seed)


def rotated_spin_coefficients(chart, K, p, theta: Theta, h: float = geo.DEFAULT_VECTOR_STEP):
    """Triad and spin coefficients after the gauge rotation by ``theta``.

    The seed of the unrotated frame is kept, so the rotated frame field is
    exactly the rotation of the original one.
    """
    base = build_frame(chart, K, p)
    U = _single(chart, p, h)
    rotated = build_frame(chart, K, p, seed=base.seed, theta=theta)
    return rotated, triad_jet(chart, K, U, base.seed, theta, h).spin()[0]


def default_tol(chart: geo.MetricChart) -> float:
    return 1e-7 if chart.analytic else 1e-4


def classify(chart: geo.MetricChart, K: VectorFieldSpec, p, tol: Optional[float] = None) -> dict:
    tol = default_tol(chart) if tol is None else tol
    if not tol > 0:
        raise ValueError("tol must be positive")
    sc = spin_coefficients(chart, K, p)
    return flags_from(sc, tol)


def flags_from(sc: SpinCoefficients, tol: float) -> dict:
    geodesic = bool(abs(sc.kappa) < tol)
    divergence_free = bool(abs(sc.div) < tol)
    shear_free = bool(abs(sc.sigma) < tol)
    return {
        "geodesic": geodesic,
        "divergence_free": divergence_free,
        "shear_free": shear_free,
        "hypersurface_orthogonal": bool(abs(sc.omega) < tol),
        "killing": geodesic and divergence_free and shear_free,
    }


def killing_residual_batch(jet: TriadJet) -> np.ndarray:
    A = jet.screen_table()
    return np.max(np.abs(A + A.transpose(0, 2, 1)), axis=(1, 2))


def killing_residual(chart: geo.MetricChart, K: VectorFieldSpec, p, h: float = geo.DEFAULT_VECTOR_STEP) -> float:
    """max over frame pairs (v, w) of |<nabla_v k, w> + <v, nabla_w k>|."""
    U = _single(chart, p, h)
    return float(killing_residual_batch(triad_jet(chart, K, U, h=h))[0])

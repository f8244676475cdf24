"""Residual checks for the structural identities of the complex-triad formalism.

Every check works on a batch of base points.  The frame seed is fixed at each
base point and reused on all stencil points around it, so spin coefficients
and triad Ricci components are smooth scalar fields that can be
differentiated by central differences.

Residuals are absolute.  Vector identities are compared through their
components along the real frame {k, x, y}, which makes them independent of
the chart scaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import geometry as geo
from . import triad as tr

DEFAULT_DERIV_STEP = 1e-4
DEFAULT_SEED = 42

_NSTENCIL = 12  # 3 directions x 4 offsets


@dataclass(frozen=True)
class TriadCurvature:
    ric_kk: np.ndarray
    ric_mm: np.ndarray
    ric_km: np.ndarray
    ric_mmbar: np.ndarray
    riem_frame: dict
    S: np.ndarray

    def __getitem__(self, idx) -> "TriadCurvature":
        return TriadCurvature(self.ric_kk[idx], self.ric_mm[idx], self.ric_km[idx], self.ric_mmbar[idx],
                              {k: v[idx] for k, v in self.riem_frame.items()}, self.S[idx])


@dataclass
class ResidualReport:
    equation_id: str
    points: int
    max_residual: float
    mean_residual: float
    tol: float
    worst_point: Optional[geo.ChartPoint]
    components: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.max_residual < self.tol)

    def as_dict(self) -> dict:
        return {
            "equation_id": self.equation_id,
            "points": self.points,
            "max_residual": self.max_residual,
            "mean_residual": self.mean_residual,
            "tol": self.tol,
            "pass": self.passed,
            "worst_point": None if self.worst_point is None else list(self.worst_point.u),
            "components": dict(self.components),
        }


def stencil_reach(chart: geo.MetricChart, deriv_step: float = DEFAULT_DERIV_STEP,
                  vector_step: float = geo.DEFAULT_VECTOR_STEP) -> float:
    """Coordinate reach of the deepest nested stencil used by the checks."""
    reach = deriv_step + vector_step + chart.curvature_step
    if not chart.analytic:
        reach += chart.fd_step
    return geo.STENCIL_REACH * reach


def default_tol(chart: geo.MetricChart) -> float:
    return 1e-5 if chart.analytic else 1e-3


def make_report(equation_id: str, chart: geo.MetricChart, U: np.ndarray, res: np.ndarray,
                tol: float, components: Optional[dict] = None) -> ResidualReport:
    res = np.asarray(res, dtype=float)
    # NaN must never pass
    res = np.where(np.isfinite(res), res, np.inf)
    i = int(np.argmax(res))
    return ResidualReport(
        equation_id, int(len(res)), float(res[i]), float(np.mean(res)), float(tol),
        geo.ChartPoint(chart.chart_id, U[i]),
        {k: float(np.max(np.where(np.isfinite(v), v, np.inf))) for k, v in (components or {}).items()},
    )


def _points(chart, p, reach):
    return geo.as_coords(chart, p, reach=reach)


# ---------------------------------------------------------------------------
# scalar-field pipelines
# ---------------------------------------------------------------------------

def triad_curvature_batch(chart: geo.MetricChart, K: tr.VectorFieldSpec, U: np.ndarray,
                          seed=None, theta: tr.Theta = 0.0) -> TriadCurvature:
    F, _ = tr.frame_batch(chart, K, U, seed, theta)
    cd = geo.curvature_batch(chart, U)
    k = F[:, 0]
    m = (F[:, 1] - 1j * F[:, 2]) / np.sqrt(2.0)
    mb = np.conj(m)
    ric = lambda a, b: np.einsum("ni,nij,nj->n", a, cd.Ric, b)  # noqa: E731
    R = lambda a, b, c, d: np.einsum("nijkl,ni,nj,nk,nl->n", cd.Riem, a, b, c, d)  # noqa: E731
    frame = {
        "R_kmkm": R(k, m, k, m),
        "R_kmkmbar": R(k, m, k, mb),
        "R_kmmmbar": R(k, m, m, mb),
        "R_mbarmmmbar": R(mb, m, m, mb),
    }
    return TriadCurvature(ric(k, k).real, ric(m, m), ric(k, m), ric(m, mb).real, frame, cd.S)


def spin_field(chart, K, h=geo.DEFAULT_VECTOR_STEP, theta: tr.Theta = 0.0) -> Callable:
    """``f(U, seed) -> (M, 5)`` complex array of (kappa, rho, sigma, epsilon, beta)."""
    def f(U, seed):
        sc = tr.spin_batch(chart, K, U, seed, theta, h)
        return np.stack([sc.kappa, sc.rho, sc.sigma, sc.epsilon, sc.beta], axis=1)
    return f


def ricci_field(chart, K, theta: tr.Theta = 0.0) -> Callable:
    """``f(U, seed) -> (M, 4)`` complex array of Ric(k,k), Ric(m,m), Ric(k,m), Ric(m,mbar)."""
    def f(U, seed):
        tc = triad_curvature_batch(chart, K, U, seed, theta)
        return np.stack([tc.ric_kk, tc.ric_mm, tc.ric_km, tc.ric_mmbar], axis=1)
    return f


def scalar_gradient(f: Callable, U: np.ndarray, seed: np.ndarray, h: float = DEFAULT_DERIV_STEP) -> np.ndarray:
    """Chart gradient ``G[n, j, ...]`` of a seeded scalar pipeline."""
    seed_rep = np.repeat(np.asarray(seed), _NSTENCIL)
    return geo.central_diff(lambda V: f(V, seed_rep), U, h)


def along(direction: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Contract chart gradients ``G[n, j, ...]`` with direction components ``[n, j]``."""
    return np.einsum("nj,nj...->n...", direction, G)


def frame_derivative(chart: geo.MetricChart, K: tr.VectorFieldSpec, f: Callable, p, direction: str,
                     h: float = DEFAULT_DERIV_STEP) -> complex:
    """Derivative of a scalar pipeline ``f(U, seed)`` at ``p`` along k, m or mbar."""
    if direction not in ("k", "m", "mbar"):
        raise ValueError(f"direction must be k, m or mbar, got {direction!r}")
    U = _points(chart, p, geo.STENCIL_REACH * h)
    F, seed = tr.frame_batch(chart, K, U)
    k, x, y = F[:, 0], F[:, 1], F[:, 2]
    vec = {"k": k + 0j, "m": (x - 1j * y) / np.sqrt(2.0), "mbar": (x + 1j * y) / np.sqrt(2.0)}[direction]
    G = scalar_gradient(f, U, seed, h)
    return along(vec, G)[0]


# ---------------------------------------------------------------------------
# identity residuals (per point)
# ---------------------------------------------------------------------------

def _frame_components(jet: tr.TriadJet, d: np.ndarray) -> np.ndarray:
    """max |<d, e>| over the real frame e in {k, x, y}."""
    comps = np.einsum("ni,nij,naj->na", d, jet.g, jet.F)
    return np.max(np.abs(comps), axis=1)


def covariant_table_residuals(jet: tr.TriadJet, sc: Optional[tr.SpinCoefficients] = None) -> dict:
    sc = jet.spin() if sc is None else sc
    k, m, mb = jet.k, jet.m, jet.mbar
    c = np.conj
    col = lambda a: a[:, None]  # noqa: E731
    eqs = {
        "nabla_k_k": (jet.nabla("k", "k"), -col(c(sc.kappa)) * m - col(sc.kappa) * mb),
        "nabla_m_k": (jet.nabla("m", "k"), -col(c(sc.rho)) * m - col(sc.sigma) * mb),
        "nabla_k_m": (jet.nabla("k", "m"), col(sc.kappa) * k + col(sc.epsilon) * m),
        "nabla_m_m": (jet.nabla("m", "m"), col(sc.sigma) * k + col(sc.beta) * m),
        "nabla_m_mbar": (jet.nabla("m", "mbar"), col(c(sc.rho)) * k - col(sc.beta) * mb),
    }
    return {name: _frame_components(jet, lhs - rhs) for name, (lhs, rhs) in eqs.items()}


def bracket_residuals(jet: tr.TriadJet, sc: Optional[tr.SpinCoefficients] = None) -> dict:
    sc = jet.spin() if sc is None else sc
    k, m, mb = jet.k, jet.m, jet.mbar
    c = np.conj
    col = lambda a: a[:, None]  # noqa: E731
    rhs_km = col(sc.kappa) * k + col(sc.epsilon + c(sc.rho)) * m + col(sc.sigma) * mb
    rhs_mmb = col(c(sc.rho) - sc.rho) * k + col(c(sc.beta)) * m - col(sc.beta) * mb
    return {
        "k_m": _frame_components(jet, jet.bracket("k", "m") - rhs_km),
        "m_mbar": _frame_components(jet, jet.bracket("m", "mbar") - rhs_mmb),
    }


def sachs_residuals(chart, K, U, seed, jet: Optional[tr.TriadJet] = None, h: float = DEFAULT_DERIV_STEP,
                    tc: Optional[TriadCurvature] = None, theta: tr.Theta = 0.0) -> dict:
    jet = tr.triad_jet(chart, K, U, seed, theta) if jet is None else jet
    sc = jet.spin()
    tc = triad_curvature_batch(chart, K, U, seed, theta) if tc is None else tc
    G = scalar_gradient(spin_field(chart, K, theta=theta), U, seed, h)
    dk, dm, dmb = along(jet.k + 0j, G), along(jet.m, G), along(jet.mbar, G)
    KA, RH, SG, EP, BE = range(5)
    kap, rho, sig, eps, bet = sc.kappa, sc.rho, sc.sigma, sc.epsilon, sc.beta
    c = np.conj
    a2 = lambda z: np.abs(z) ** 2  # noqa: E731
    # m[conj(beta)] = m . conj(grad beta)
    m_betabar = np.einsum("nj,nj->n", jet.m, np.conj(G[:, :, BE]))
    eqs = {
        "sachs1": (dk[:, RH] - dmb[:, KA],
                   a2(kap) + a2(sig) + rho ** 2 + kap * c(bet) + 0.5 * tc.ric_kk),
        "sachs2": (dk[:, SG] - dm[:, KA],
                   kap ** 2 + 2 * sig * eps + sig * (rho + c(rho)) - kap * bet + tc.ric_mm),
        "sachs3": (dm[:, RH] - dmb[:, SG],
                   2 * sig * c(bet) + (c(rho) - rho) * kap + tc.ric_km),
        "sachs4": (dk[:, BE] - dm[:, EP],
                   sig * (c(kap) - c(bet)) + kap * (eps - c(rho)) + bet * (eps + c(rho)) - tc.ric_km),
        "sachs5": (m_betabar + dmb[:, BE],
                   a2(sig) - a2(rho) - 2 * a2(bet) + (rho - c(rho)) * eps - tc.ric_mmbar + 0.5 * tc.ric_kk),
    }
    return {name: np.abs(lhs - rhs) for name, (lhs, rhs) in eqs.items()}


def bianchi_residuals(chart, K, U, seed, jet: Optional[tr.TriadJet] = None, h: float = DEFAULT_DERIV_STEP,
                      tc: Optional[TriadCurvature] = None, theta: tr.Theta = 0.0) -> dict:
    jet = tr.triad_jet(chart, K, U, seed, theta) if jet is None else jet
    sc = jet.spin()
    tc = triad_curvature_batch(chart, K, U, seed, theta) if tc is None else tc
    G = scalar_gradient(ricci_field(chart, K, theta), U, seed, h)
    KK, MM, KM, MMB = range(4)
    dk, dm, dmb = along(jet.k + 0j, G), along(jet.m, G), along(jet.mbar, G)
    m_ric_kmbar = np.einsum("nj,nj->n", jet.m, np.conj(G[:, :, KM]))
    kap, rho, sig, eps, bet = sc.kappa, sc.rho, sc.sigma, sc.epsilon, sc.beta
    c = np.conj
    Rkk, Rmm, Rkm, Rmmb = tc.ric_kk, tc.ric_mm, tc.ric_km, tc.ric_mmbar
    lhs1 = dk[:, KM] - 0.5 * dm[:, KK] + dmb[:, MM]
    rhs1 = (kap * Rkk + (eps + 2 * rho + c(rho)) * Rkm + sig * c(Rkm)
            - (c(kap) + 2 * c(bet)) * Rmm - kap * Rmmb)
    lhs2 = m_ric_kmbar + dmb[:, KM] - (dk[:, MMB] - 0.5 * dk[:, KK])
    rhs2 = ((rho + c(rho)) * (Rkk - Rmmb) - c(sig) * Rmm - sig * c(Rmm)
            - (2 * c(kap) + c(bet)) * Rkm - (2 * kap + bet) * c(Rkm))
    return {"bianchi1": np.abs(lhs1 - rhs1), "bianchi2": np.abs(lhs2 - rhs2)}


def ricci_star_residuals(chart, K, U, seed, rng: Optional[np.random.Generator] = None,
                         theta: tr.Theta = 0.0) -> dict:
    """Residuals of the four Ricci/Riemann triad relations and the trace display."""
    F, _ = tr.frame_batch(chart, K, U, seed, theta)
    cd = geo.curvature_batch(chart, U)
    tc = triad_curvature_batch(chart, K, U, seed, theta)
    k = F[:, 0]
    m = (F[:, 1] - 1j * F[:, 2]) / np.sqrt(2.0)
    mb = np.conj(m)
    fr = tc.riem_frame
    out = {
        "ric_mm": np.abs(tc.ric_mm + fr["R_kmkm"]),
        "ric_kk": np.abs(tc.ric_kk + 2 * fr["R_kmkmbar"]),
        "ric_km": np.abs(tc.ric_km + fr["R_kmmmbar"]),
        "ric_mmbar": np.abs(tc.ric_mmbar - (0.5 * tc.ric_kk - fr["R_mbarmmmbar"])),
        "real_parts": np.maximum(np.abs(fr["R_kmkmbar"].imag), np.abs(fr["R_mbarmmmbar"].imag)),
    }
    rng = np.random.default_rng(DEFAULT_SEED) if rng is None else rng
    b = rng.standard_normal(U.shape)
    cvec = rng.standard_normal(U.shape)
    R = lambda a, b_, c_, d: np.einsum("nijkl,ni,nj,nk,nl->n", cd.Riem, a, b_, c_, d)  # noqa: E731
    trace = R(k, b, cvec, k) + R(m, b, cvec, mb) + R(mb, b, cvec, m)
    ric_bc = np.einsum("ni,nij,nj->n", b, cd.Ric, cvec)
    out["trace"] = np.abs(trace - ric_bc)
    return out


def riemann_frame_residuals(chart, K, U, seed, h: float = DEFAULT_DERIV_STEP,
                            theta: tr.Theta = 0.0) -> np.ndarray:
    """Riemann tensor rebuilt from the frame expansion

        R(u,v,w,z) = u<nabla_v w, z> - <nabla_v w, nabla_u z> - v<nabla_u w, z>
                     + <nabla_u w, nabla_v z> - <nabla_[u,v] w, z>

    over all (u, v, w, z) in {k, m, mbar}, compared against the coordinate
    Riemann tensor contracted into the triad.  Returns the max residual per point.
    """
    names = ("k", "m", "mbar")

    def nabla_table(jet):
        # NV[n, v, w, i] = (nabla_v w)^i
        return np.stack([np.stack([jet.nabla(v, w) for w in names], 1) for v in names], 1)

    def conn(V, s):
        # C[n, v, w, z] = <nabla_v w, z>
        jet = tr.triad_jet(chart, K, V, s, theta)
        T = np.stack([jet.vec(a) + 0j for a in names], axis=1)
        return np.einsum("nvwi,nij,nzj->nvwz", nabla_table(jet), jet.g, T)

    jet = tr.triad_jet(chart, K, U, seed, theta)
    T = np.stack([jet.vec(a) + 0j for a in names], axis=1)            # [n, a, i]
    uC = np.einsum("nuj,njvwz->nuvwz", T, scalar_gradient(conn, U, seed, h))
    NV = nabla_table(jet)
    NN = np.einsum("nvwi,nij,nuzj->nvwuz", NV, jet.g, NV)             # <nabla_v w, nabla_u z>
    partial = np.stack([jet.partial(a) for a in names], 1)            # [n, a, j, i]
    br = np.einsum("nuj,nvji->nuvi", T, partial) - np.einsum("nvj,nuji->nuvi", T, partial)
    grads = np.stack([jet.grad(a) for a in names], 1)                 # [n, w, j, i]
    last = np.einsum("nuvj,nwja,nab,nzb->nuvwz", br, grads, jet.g, T)
    frame_R = (uC
               - np.einsum("nvwuz->nuvwz", NN)
               - np.einsum("nvuwz->nuvwz", uC)
               + np.einsum("nuwvz->nuvwz", NN)
               - last)
    cd = geo.curvature_batch(chart, U)
    coord_R = np.einsum("nijkl,nui,nvj,nwk,nzl->nuvwz", cd.Riem, T, T, T, T)
    return np.max(np.abs(frame_R - coord_R), axis=(1, 2, 3, 4))


# ---------------------------------------------------------------------------
# public checks returning reports
# ---------------------------------------------------------------------------

def _setup(chart, K, p, reach):
    U = _points(chart, p, reach)
    _, seed = tr.frame_batch(chart, K, U)
    return U, seed


def check_covariant_table(chart, K, p, tol: Optional[float] = None) -> ResidualReport:
    tol = default_tol(chart) if tol is None else tol
    U, seed = _setup(chart, K, p, stencil_reach(chart))
    res = covariant_table_residuals(tr.triad_jet(chart, K, U, seed))
    return make_report("cov_table", chart, U, np.max(np.stack(list(res.values())), axis=0), tol, res)


def check_brackets(chart, K, p, tol: Optional[float] = None) -> ResidualReport:
    tol = default_tol(chart) if tol is None else tol
    U, seed = _setup(chart, K, p, stencil_reach(chart))
    res = bracket_residuals(tr.triad_jet(chart, K, U, seed))
    return make_report("brackets", chart, U, np.max(np.stack(list(res.values())), axis=0), tol, res)


def check_sachs(chart, K, p, tol: Optional[float] = None) -> ResidualReport:
    tol = default_tol(chart) if tol is None else tol
    U, seed = _setup(chart, K, p, stencil_reach(chart))
    res = sachs_residuals(chart, K, U, seed)
    return make_report("sachs", chart, U, np.max(np.stack(list(res.values())), axis=0), tol, res)


def check_bianchi(chart, K, p, tol: Optional[float] = None) -> ResidualReport:
    tol = default_tol(chart) if tol is None else tol
    U, seed = _setup(chart, K, p, stencil_reach(chart))
    res = bianchi_residuals(chart, K, U, seed)
    return make_report("bianchi", chart, U, np.max(np.stack(list(res.values())), axis=0), tol, res)


def check_ricci_triad(chart, K, p, tol: Optional[float] = None) -> ResidualReport:
    tol = default_tol(chart) if tol is None else tol
    U, seed = _setup(chart, K, p, stencil_reach(chart))
    res = ricci_star_residuals(chart, K, U, seed)
    return make_report("ricci_star", chart, U, np.max(np.stack(list(res.values())), axis=0), tol, res)


def check_riemann_frame(chart, K, p, tol: Optional[float] = None) -> ResidualReport:
    tol = default_tol(chart) if tol is None else tol
    U, seed = _setup(chart, K, p, stencil_reach(chart))
    return make_report("riemann_frame", chart, U, riemann_frame_residuals(chart, K, U, seed), tol)


EQUATION_IDS = ("cov_table", "brackets", "sachs1", "sachs2", "sachs3", "sachs4", "sachs5",
                "bianchi1", "bianchi2", "ricci_star", "riemann_frame")


def verify_all(chart: geo.MetricChart, K: tr.VectorFieldSpec, U: np.ndarray, tol: Optional[float] = None,
               theta: tr.Theta = 0.0, chunk: int = 50) -> dict:
    """Run every identity check on the sample points ``U``; one report per equation id.

    ``theta`` applies a gauge rotation m -> e^{i theta} m to the frame field first.
    """
    tol = default_tol(chart) if tol is None else tol
    U = _points(chart, U, stencil_reach(chart))
    per_point = {eq: [] for eq in EQUATION_IDS}
    comps = {eq: {} for eq in ("cov_table", "brackets", "ricci_star")}
    for start in range(0, len(U), chunk):
        V = U[start:start + chunk]
        _, seed = tr.frame_batch(chart, K, V)
        jet = tr.triad_jet(chart, K, V, seed, theta)
        sc = jet.spin()
        tc = triad_curvature_batch(chart, K, V, seed, theta)
        groups = {
            "cov_table": covariant_table_residuals(jet, sc),
            "brackets": bracket_residuals(jet, sc),
            "ricci_star": ricci_star_residuals(chart, K, V, seed, theta=theta),
        }
        for eq, res in groups.items():
            per_point[eq].append(np.max(np.stack(list(res.values())), axis=0))
            for name, r in res.items():
                comps[eq].setdefault(name, []).append(r)
        for eq, r in sachs_residuals(chart, K, V, seed, jet, tc=tc, theta=theta).items():
            per_point[eq].append(r)
        for eq, r in bianchi_residuals(chart, K, V, seed, jet, tc=tc, theta=theta).items():
            per_point[eq].append(r)
        per_point["riemann_frame"].append(riemann_frame_residuals(chart, K, V, seed, theta=theta))
    reports = {}
    for eq in EQUATION_IDS:
        res = np.concatenate(per_point[eq])
        sub = {name: np.concatenate(v) for name, v in comps.get(eq, {}).items()}
        reports[eq] = make_report(eq, chart, U, res, tol, sub)
    return reports

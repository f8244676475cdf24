"""Kinematics along geodesic integral curves and the 2-principal checks.

For a geodesic unit field the real and imaginary parts of the first Sachs
equation are the transport laws

    k[div]   = omega^2/2 - 2|sigma|^2 - div^2/2 - Ric(k, k)
    k[omega] = -div * omega

``transport_kinematics`` integrates (div, omega) with RK4 along the geodesic
while |sigma|^2 and Ric(k, k) are sampled directly, and compares the result
with direct pipeline evaluations.  The ODE stage positions are exactly the
RK4 stage positions of the geodesic integrator, so the coupled system is
integrated consistently.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import geometry as geo
from . import triad as tr
from . import verify as vf
from .errors import HypothesesViolated, NotGeodesicField, NPError, ZeroField

GEODESIC_TOL = 1e-6
CSV_COLUMNS = ("t", "u1", "u2", "u3", "v1", "v2", "v3", "div_direct", "div_transported",
               "omega_direct", "omega_transported", "shear_mag2", "S")


@dataclass(frozen=True)
class FlowState:
    t: float
    p: geo.ChartPoint
    v: np.ndarray
    div: float
    omega: float
    shear_mag2: float
    S: float
    source: str  # "direct" or "transported"


@dataclass
class FlowTrace:
    chart_id: str
    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    div_direct: np.ndarray
    div_transported: np.ndarray
    omega_direct: np.ndarray
    omega_transported: np.ndarray
    shear_mag2: np.ndarray
    S: np.ndarray
    ric_kk: np.ndarray
    length: float
    step: float

    def states(self, source: str = "direct") -> list:
        div = self.div_direct if source == "direct" else self.div_transported
        om = self.omega_direct if source == "direct" else self.omega_transported
        return [FlowState(float(t), geo.ChartPoint(self.chart_id, u), v, float(d), float(o), float(s2), float(S), source)
                for t, u, v, d, o, s2, S in zip(self.t, self.u, self.v, div, om, self.shear_mag2, self.S)]

    def max_deviation(self) -> dict:
        return {
            "div": float(np.max(np.abs(self.div_direct - self.div_transported))),
            "omega": float(np.max(np.abs(self.omega_direct - self.omega_transported))),
        }

    def rows(self):
        cols = np.column_stack([self.t, self.u, self.v, self.div_direct, self.div_transported,
                                self.omega_direct, self.omega_transported, self.shear_mag2, self.S])
        return cols

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.rows():
            w.writerow([format(float(x), ".17g") for x in row])
        return buf.getvalue()


def kinematics_batch(chart, K, U, seed, h: float = geo.DEFAULT_VECTOR_STEP, chunk: int = 2000) -> dict:
    """Direct pointwise kinematic scalars and curvature along a batch of points."""
    out = {k: [] for k in ("kappa_abs", "div", "omega", "shear_mag2", "ric_kk", "S")}
    seed = np.broadcast_to(np.asarray(seed, dtype=int), (len(U),))
    for s in range(0, len(U), chunk):
        V, sd = U[s:s + chunk], seed[s:s + chunk]
        sc = tr.spin_batch(chart, K, V, sd, h=h)
        tc = vf.triad_curvature_batch(chart, K, V, sd)
        out["kappa_abs"].append(np.abs(sc.kappa))
        out["div"].append(sc.div)
        out["omega"].append(sc.omega)
        out["shear_mag2"].append(sc.shear_mag2)
        out["ric_kk"].append(tc.ric_kk)
        out["S"].append(tc.S)
    return {k: np.concatenate(v) if v else np.zeros(0) for k, v in out.items()}


def _start(chart, K, p0, geodesic_tol):
    U0 = geo.as_coords(chart, p0, reach=vf.stencil_reach(chart))
    F, seed = tr.frame_batch(chart, K, U0)
    kap = abs(tr.spin_batch(chart, K, U0, seed).kappa[0])
    if not kap < geodesic_tol:
        raise NotGeodesicField(f"field {K.field_id!r} is not geodesic at {U0[0].tolist()}: |kappa| = {kap:.3e}")
    return U0, F[0, 0], seed


def _rhs(y, sigma2, ric):
    div, om = y
    return np.array([0.5 * om * om - 2.0 * sigma2 - 0.5 * div * div - ric, -div * om])


def transport_kinematics(chart: geo.MetricChart, K: tr.VectorFieldSpec, p0, length: float, step: float,
                         geodesic_tol: float = GEODESIC_TOL) -> FlowTrace:
    """Transport (div, omega) along the geodesic through ``p0`` and pair with direct values."""
    U0, k0, seed = _start(chart, K, p0, geodesic_tol)
    trace = geo.geodesic_integrate(chart, U0[0], k0, length, step, unit_tol=1e-9)
    n = len(trace.t) - 1
    direct = kinematics_batch(chart, K, trace.u, seed)
    if n:
        inner_stages = trace.stages[:, 1:].reshape(-1, 3)
        staged = kinematics_batch(chart, K, inner_stages, seed)
        s2 = staged["shear_mag2"].reshape(n, 3)
        ric = staged["ric_kk"].reshape(n, 3)
    y = np.array([direct["div"][0], direct["omega"][0]])
    transported = np.zeros((n + 1, 2))
    transported[0] = y
    dt = trace.dt
    for i in range(n):
        k1 = _rhs(y, direct["shear_mag2"][i], direct["ric_kk"][i])
        k2 = _rhs(y + 0.5 * dt * k1, s2[i, 0], ric[i, 0])
        k3 = _rhs(y + 0.5 * dt * k2, s2[i, 1], ric[i, 1])
        k4 = _rhs(y + dt * k3, s2[i, 2], ric[i, 2])
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        transported[i + 1] = y
    return FlowTrace(chart.chart_id, trace.t, trace.u, trace.v, direct["div"], transported[:, 0],
                     direct["omega"], transported[:, 1], direct["shear_mag2"], direct["S"], direct["ric_kk"],
                     float(length), float(step))


def omega_rigidity(chart, K, p0, length: float, step: float, tol: float = 1e-6,
                   geodesic_tol: float = GEODESIC_TOL) -> dict:
    """Direct samples of omega along the geodesic integral curve through ``p0``.

    Along such a curve omega either vanishes identically or never vanishes;
    on a finite segment the samples can only be consistent with one case.
    """
    U0, k0, seed = _start(chart, K, p0, geodesic_tol)
    trace = geo.geodesic_integrate(chart, U0[0], k0, length, step, unit_tol=1e-9)
    om = kinematics_batch(chart, K, trace.u, seed)["omega"]
    a = np.abs(om)
    big = np.maximum(a[:-1], a[1:]) > tol
    sign_changes = int(np.sum((om[:-1] * om[1:] < 0) & big))
    lo, hi = float(a.min()), float(a.max())
    if hi < tol:
        verdict = "identically_zero"
    elif lo > tol:
        verdict = "never_zero"
    else:
        verdict = "mixed"
    statement = {
        "identically_zero": "samples consistent with omega vanishing identically along the curve",
        "never_zero": "samples consistent with omega never vanishing along the curve",
        "mixed": "samples NOT consistent with the vanishing dichotomy at this tolerance",
    }[verdict]
    return {
        "omega_min_abs": lo,
        "omega_max_abs": hi,
        "sign_changes": sign_changes,
        "tol": tol,
        "length": float(length),
        "samples": int(len(om)),
        "verdict": verdict,
        "dichotomy_consistent": verdict != "mixed",
        "statement": statement,
    }


def comparison_solution(div0: float, t0: float, t: np.ndarray) -> np.ndarray:
    """Solution of u' = -u^2/2 with u(t0) = div0."""
    return 1.0 / (1.0 / div0 + 0.5 * (np.asarray(t) - t0))


def _adaptive_direct(chart, K, U, seed, h0, scale=0.02, chunk=64):
    """Direct (div, omega, Ric(k,k)) with the stencil shrunk where div is large.

    The finite-difference step is kept below ``scale / |div|``, the length
    scale on which a focusing congruence varies.  Stops at the first point
    where the field cannot be evaluated.
    """
    out = {"div": [], "omega": [], "ric_kk": []}
    h = h0
    i = 0
    while i < len(U):
        V = U[i:i + chunk]
        try:
            with np.errstate(all="ignore"):
                kin = kinematics_batch(chart, K, V, seed, h=h)
        except (ZeroField, NPError, FloatingPointError):
            kin = None
        ok = kin is not None and np.all(np.isfinite(kin["div"]))
        if ok:
            need = min(h0, scale / max(np.max(np.abs(kin["div"])), 1e-300))
            if need < h:
                h = need
                continue
        elif chunk > 1:
            chunk = max(1, chunk // 4)
            continue
        else:
            break
        for key in out:
            out[key].append(kin[key])
        i += len(V)
    return {k: np.concatenate(v) if v else np.zeros(0) for k, v in out.items()}


def focusing_check(chart, K, p0, length: float, step: float, tol: float = 1e-6,
                   threshold: float = 1e3, geodesic_tol: float = GEODESIC_TOL) -> dict:
    """Finite-parameter blowup of a negative divergence for irrotational flows
    with Ric(k, k) >= 0, compared with u' = -u^2/2."""
    U0, k0, seed = _start(chart, K, p0, geodesic_tol)
    trace = geo.geodesic_integrate(chart, U0[0], k0, length, step, unit_tol=1e-9)
    kin = _adaptive_direct(chart, K, trace.u, seed, geo.DEFAULT_VECTOR_STEP)
    n = len(kin["div"])
    t = trace.t[:n]
    div, om, ric = kin["div"], kin["omega"], kin["ric_kk"]
    crossing = np.nonzero(div < -threshold)[0]
    stop = int(crossing[0]) + 1 if len(crossing) else n
    reasons = []
    if np.any(ric[:stop] < -tol):
        reasons.append(f"Ric(k,k) < 0 along the curve (min {ric[:stop].min():.3e})")
    if np.any(np.abs(om[:stop]) >= tol):
        reasons.append(f"omega != 0 along the curve (max |omega| {np.abs(om[:stop]).max():.3e})")
    if reasons:
        raise HypothesesViolated(reasons)
    report = {
        "length": float(length),
        "samples": int(n),
        "threshold": float(threshold),
        "t0": None,
        "div_t0": None,
        "predicted_blowup_t": None,
        "crossing_t": float(t[crossing[0]]) if len(crossing) else None,
        "comparison_holds": True,
        "max_comparison_excess": 0.0,
    }
    neg = np.nonzero(div[:stop] < -tol)[0]
    if len(neg) == 0:
        return report
    i0 = int(neg[0])
    t0, d0 = float(t[i0]), float(div[i0])
    t_star = t0 + 2.0 / abs(d0)
    seg = slice(i0, stop)
    live = t[seg] < t_star
    u = comparison_solution(d0, t0, t[seg][live])
    excess = div[seg][live] - u
    rel = excess / np.maximum(1.0, np.abs(u))
    report.update({
        "t0": t0,
        "div_t0": d0,
        "predicted_blowup_t": t_star,
        "comparison_holds": bool(np.all(rel <= 1e-6)),
        "max_comparison_excess": float(np.max(rel)) if rel.size else 0.0,
    })
    return report


# ---------------------------------------------------------------------------
# 2-principal fields
# ---------------------------------------------------------------------------

@dataclass
class PrincipalReport:
    sup_Rk: float
    kappaS_residual: float
    shear_omega_residual: float
    scalar_evolution_residual: float
    S: float
    sup_R: float
    killing_residual: float
    tol: float
    notes: list = field(default_factory=list)

    @property
    def non_flat(self) -> bool:
        return self.sup_R >= self.tol

    @property
    def two_principal(self) -> bool:
        return self.non_flat and self.sup_Rk < self.tol

    @property
    def killing(self) -> bool:
        return self.killing_residual < self.tol

    def as_dict(self) -> dict:
        return {
            "sup_Rk": self.sup_Rk,
            "kappaS_residual": self.kappaS_residual,
            "shear_omega_residual": self.shear_omega_residual,
            "scalar_evolution_residual": self.scalar_evolution_residual,
            "S": self.S,
            "sup_R": self.sup_R,
            "killing_residual": self.killing_residual,
            "tol": self.tol,
            "non_flat": self.non_flat,
            "two_principal": self.two_principal,
            "killing": self.killing,
            "notes": list(self.notes),
        }


def _scalar_S(chart):
    return lambda U, seed: geo.curvature_batch(chart, U).S


def principal_batch(chart, K, U, tol: float = 1e-6, h: float = vf.DEFAULT_DERIV_STEP) -> list:
    _, seed = tr.frame_batch(chart, K, U)
    jet = tr.triad_jet(chart, K, U, seed)
    sc = jet.spin()
    cd = geo.curvature_batch(chart, U)
    R = np.einsum("nijkl,nai,nbj,nck,ndl->nabcd", cd.Riem, jet.F, jet.F, jet.F, jet.F)
    sup_Rk = np.max(np.abs(R[:, 0]), axis=(1, 2, 3))
    sup_R = np.max(np.abs(R), axis=(1, 2, 3, 4))
    dS = vf.along(jet.k, vf.scalar_gradient(_scalar_S(chart), U, seed, h))
    kres = tr.killing_residual_batch(jet)
    reports = []
    for i in range(len(U)):
        rep = PrincipalReport(
            sup_Rk=float(sup_Rk[i]),
            kappaS_residual=float(abs(sc.kappa[i] * cd.S[i])),
            shear_omega_residual=float(abs(sc.shear_mag2[i] - 0.25 * sc.omega[i] ** 2)),
            scalar_evolution_residual=float(abs(dS[i] + sc.div[i] * cd.S[i])),
            S=float(cd.S[i]),
            sup_R=float(sup_R[i]),
            killing_residual=float(kres[i]),
            tol=tol,
        )
        if not rep.non_flat:
            rep.notes.append("manifold is flat here: the non-flat hypothesis of 2-principal fields is unmet")
        elif not rep.two_principal:
            rep.notes.append("R(k, ., ., .) != 0: field is not 2-principal; the shear and scalar residuals carry no claim")
        reports.append(rep)
    return reports


def principal_check(chart, K, p, tol: float = 1e-6) -> PrincipalReport:
    U = geo.as_coords(chart, p, reach=vf.stencil_reach(chart))
    return principal_batch(chart, K, U, tol)[0]


def goldberg_sachs_check(chart, K, sample_points, tol: float = 1e-6) -> dict:
    """On a region of constant nonzero scalar curvature, check that a
    hypersurface-orthogonal unit field is 2-principal exactly when it is Killing."""
    U = geo.as_coords(chart, sample_points, reach=vf.stencil_reach(chart))
    reps = principal_batch(chart, K, U, tol)
    sc = tr.spin_batch(chart, K, U)
    S = np.array([r.S for r in reps])
    reasons = []
    if np.any(np.abs(S) < tol):
        reasons.append(f"scalar curvature vanishes (min |S| = {np.abs(S).min():.3e})")
    if S.max() - S.min() >= tol:
        reasons.append(f"scalar curvature not constant (spread {S.max() - S.min():.3e})")
    if np.any(np.abs(sc.omega) >= tol):
        reasons.append(f"field not hypersurface-orthogonal (max |omega| = {np.abs(sc.omega).max():.3e})")
    if reasons:
        raise HypothesesViolated(reasons)
    per_point = [
        {"point": U[i].tolist(), "two_principal": r.sup_Rk < tol, "killing": r.killing,
         "sup_Rk": r.sup_Rk, "killing_residual": r.killing_residual}
        for i, r in enumerate(reps)
    ]
    holds = all(p["two_principal"] == p["killing"] for p in per_point)
    return {
        "S_mean": float(S.mean()),
        "S_spread": float(S.max() - S.min()),
        "tol": tol,
        "points": per_point,
        "all_two_principal": all(p["two_principal"] for p in per_point),
        "all_killing": all(p["killing"] for p in per_point),
        "biconditional_holds": holds,
    }


def divergence_free_identity(chart, K, U, tol: float = 1e-6) -> np.ndarray:
    """|Ric(k,k) - (omega^2/2 - 2|sigma|^2)| for geodesic divergence-free fields."""
    U = geo.as_coords(chart, U, reach=vf.stencil_reach(chart))
    _, seed = tr.frame_batch(chart, K, U)
    kin = kinematics_batch(chart, K, U, seed)
    if np.any(kin["kappa_abs"] >= tol) or np.any(np.abs(kin["div"]) >= tol):
        raise HypothesesViolated(["field must be geodesic and divergence-free"])
    return np.abs(kin["ric_kk"] - (0.5 * kin["omega"] ** 2 - 2.0 * kin["shear_mag2"]))

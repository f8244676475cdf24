"""Library-side measurement of the quantities named in catalog expected tables."""

import numpy as np

from npriem import flow, geometry as geo, triad as tr, verify as vf


def measure(entry, field_id, quantity, U):
    chart = entry.chart
    if quantity == "S":
        return geo.curvature_batch(chart, U).S
    if quantity == "Ric_over_g":
        cd = geo.curvature_batch(chart, U)
        g, _, _ = geo.metric_batch(chart, U)
        # worst deviation of Ric/g from a multiple of the identity, reported as the mean ratio
        ratio = np.einsum("nij,njk->nik", np.linalg.inv(g), cd.Ric)
        return np.where(np.max(np.abs(ratio - np.trace(ratio, axis1=1, axis2=2)[:, None, None] / 3 * np.eye(3)),
                               axis=(1, 2)) < 1e-7, np.trace(ratio, axis1=1, axis2=2) / 3, np.nan)
    K = entry.field(field_id)
    if quantity in ("div", "abs_omega", "abs_sigma", "abs_kappa"):
        sc = tr.spin_batch(chart, K, U)
        return {"div": sc.div, "abs_omega": np.abs(sc.omega), "abs_sigma": np.abs(sc.sigma),
                "abs_kappa": np.abs(sc.kappa)}[quantity]
    if quantity in ("Ric_kk", "Ric_mmbar", "abs_Ric_mm"):
        tc = vf.triad_curvature_batch(chart, K, U)
        return {"Ric_kk": tc.ric_kk, "Ric_mmbar": tc.ric_mmbar, "abs_Ric_mm": np.abs(tc.ric_mm)}[quantity]
    if quantity == "killing_residual":
        return tr.killing_residual_batch(tr.triad_jet(chart, K, U))
    if quantity == "sup_Rk":
        return np.array([r.sup_Rk for r in flow.principal_batch(chart, K, U)])
    raise KeyError(quantity)
ACCEPTANCE = []

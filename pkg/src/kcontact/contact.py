"""Contact-geometric objects at a phase point.

Energy, contact one-form coefficients, Legendre map, velocity Hessian
with a regularity verdict, and Reeb vector fields, all assembled from
the exact Jet2 blocks -- nothing here differentiates numerically.

Index conventions: the velocity pair (i, a) flattens to i*k + a, and the
contact coefficients satisfy eta^a = ds^a - p[i, a] dq^i with
p[i, a] = dLdv[i, a].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotRegularError
from .jet import (Jet2, LagrangianModel, MomentumPoint, PhasePoint,
                  evaluate_jet, evaluate_jet_batch)

RANK_TOL = 1e-10


@dataclass(frozen=True)
class ContactCoeffs:
    """Coefficients of the contact forms: eta^a = ds^a - p[i, a] dq^i."""

    p: np.ndarray  # (n, k)


@dataclass(frozen=True)
class HessianW:
    """Velocity Hessian in flat (i*k + a) indexing with regularity data."""

    W: np.ndarray            # (nk, nk)
    Winv: np.ndarray | None  # present iff regular
    regular: bool
    cond: float


@dataclass(frozen=True)
class ReebFields:
    """(R_L)_a = d/ds^a + vcomp[a, i, b] d/dv^i_b."""

    vcomp: np.ndarray  # (k, n, k)


def energy(jet: Jet2, z: PhasePoint) -> float:
    """Lagrangian energy: scaling of L along velocities minus L."""
    return float(np.sum(z.v * jet.dLdv) - jet.L)


def contact_coeffs(jet: Jet2) -> ContactCoeffs:
    return ContactCoeffs(p=np.array(jet.dLdv))


def legendre(jet: Jet2, z: PhasePoint) -> MomentumPoint:
    """Fibre derivative: (q, v, s) -> (q, dL/dv, s)."""
    return MomentumPoint(q=z.q.copy(), p=np.array(jet.dLdv), s=z.s.copy())


def hessian(jet: Jet2, rank_tol: float = RANK_TOL) -> HessianW:
    """Flatten the v-v block and decide regularity by singular values."""
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    n, k = jet.dLdv.shape
    nk = n * k
    W = jet.d2Ldvdv.reshape(nk, nk)
    W = 0.5 * (W + W.T)
    sv = np.linalg.svd(W, compute_uv=False)
    smax = sv[0] if nk else 0.0
    smin = sv[-1] if nk else 0.0
    regular = bool(smin > rank_tol * max(smax, 1e-300))
    Winv = np.linalg.inv(W) if regular else None
    cond = float(smax / smin) if smin > 0 else np.inf
    return HessianW(W=W, Winv=Winv, regular=regular, cond=cond)


def reeb(jet: Jet2, hess: HessianW) -> ReebFields:
    """Reeb fields of a regular Lagrangian from the explicit formula."""
    if not hess.regular:
        raise NotRegularError("Lagrangian not regular")
    n, k = jet.dLdv.shape
    C = jet.d2Ldvds.reshape(n * k, k)  # rows flat (j, g), cols a
    vcomp = -(hess.Winv @ C)           # (flat (i, b), a)
    return ReebFields(vcomp=np.moveaxis(vcomp.reshape(n, k, k), 2, 0))


def verify_reeb(model: LagrangianModel, z: PhasePoint,
                rank_tol: float = RANK_TOL):
    """Residuals of the defining Reeb relations at z.

    i(R_b) eta^a - delta^a_b is algebraically zero (Reeb fields have no
    d/dq component); i(R_b) d(eta^a) is contracted from the Jet2 blocks
    of the momenta, with no numerical differentiation.
    """
    jet = evaluate_jet(model, z)
    hess_ = hessian(jet, rank_tol)
    rf = reeb(jet, hess_)
    n, k = model.n, model.k
    # i(R_b) eta^a = delta^a_b - p[i, a] * (R_b)^{q,i} and (R_b)^q = 0
    res_eta = np.zeros((k, k))
    # i(R_b) d(eta^a) = -[dp^a_i(R_b)] dq^i with
    # dp^a_i(R_b) = d2Ldvds[i,a,b] + sum_{j,g} d2Ldvdv[i,a,j,g] vcomp[b,j,g]
    res_deta = (jet.d2Ldvds
                + np.einsum("iajg,bjg->iab", jet.d2Ldvdv, rf.vcomp))
    return {"eta": float(np.max(np.abs(res_eta))),
            "deta": float(np.max(np.abs(res_deta)))}


def _energy_gradients(jet: Jet2, v):
    """dE/ds and dE/dv from Jet2 blocks (batched shapes allowed)."""
    dEds = np.einsum("jg...,jga...->a...", v, jet.d2Ldvds) - jet.dLds
    dEdv = np.einsum("jg...,jgib...->ib...", v, jet.d2Ldvdv)
    return dEds, dEdv


def reeb_derivative_of_energy(jet: Jet2, z: PhasePoint,
                              rf: ReebFields) -> np.ndarray:
    """Directional derivative of the energy along each Reeb field."""
    dEds, dEdv = _energy_gradients(jet, z.v)
    return dEds + np.einsum("aib,ib->a", rf.vcomp, dEdv)


def reeb_energy_derivative_batch(model: LagrangianModel, q, v, s
                                 ) -> np.ndarray:
    """Batched Reeb derivative of the energy; shape (k, *batch).

    Solves the per-point Hessian systems directly; raises if any point
    is singular.
    """
    jet = evaluate_jet_batch(model, q, v, s)
    n, k = model.n, model.k
    batch = jet.L.shape
    nk = n * k
    W = jet.d2Ldvdv.reshape((nk, nk) + batch)
    C = jet.d2Ldvds.reshape((nk, k) + batch)
    # move batch axes to the front for the stacked solve
    Wb = np.moveaxis(W.reshape(nk, nk, -1), 2, 0)
    Cb = np.moveaxis(C.reshape(nk, k, -1), 2, 0)
    try:
        X = np.linalg.solve(Wb, Cb)  # (B, nk, k)
    except np.linalg.LinAlgError as exc:
        raise NotRegularError(f"Lagrangian not regular on batch: {exc}")
    vcomp = -np.moveaxis(X, 0, 2).reshape((n, k, k) + batch)  # (i,b,a,*B)
    dEds, dEdv = _energy_gradients(jet, v)
    return dEds + np.einsum("iba...,ib...->a...", vcomp, dEdv)

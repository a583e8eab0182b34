"""Legendre-transformed side: inverse Legendre map, Hamiltonian values,
and Hamilton-De Donder-Weyl residuals along discrete momentum paths.

All Hamiltonian derivatives are taken through the Legendre duality
identities (dH/dp = v, dH/dq = -dL/dq, dH/ds = -dL/ds at the velocity
preimage); only path derivatives are finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contact import energy
from .errors import NewtonError, NotRegularError
from .jet import (LagrangianModel, MomentumPoint, PhasePoint, evaluate_jet,
                  evaluate_jet_batch)

NEWTON_TOL = 1e-10
NEWTON_MAXITER = 50


def _newton_batch(model, q, p, s, v0):
    """Batched Newton solve of dLdv(q, v, s) = p.  Shapes: q (n, *B),
    p/v0 (n, k, *B), s (k, *B).  Returns v with the same shape as p."""
    n, k = model.n, model.k
    nk = n * k
    v = np.array(v0, dtype=float)
    batch = v.shape[2:]
    last = np.inf
    for _ in range(NEWTON_MAXITER):
        jet = evaluate_jet_batch(model, q, v, s)
        r = jet.dLdv - p
        last = float(np.max(np.abs(r)))
        if last <= NEWTON_TOL:
            return v
        if not np.isfinite(last):
            raise NewtonError("Legendre inversion diverged",
                              residual=last)
        W = jet.d2Ldvdv.reshape((nk, nk) + batch)
        Wb = np.moveaxis(W.reshape(nk, nk, -1), 2, 0)
        rb = np.moveaxis(r.reshape(nk, -1), 1, 0)[..., None]
        try:
            step = np.linalg.solve(Wb, rb)[..., 0]
        except np.linalg.LinAlgError:
            raise NotRegularError(
                "singular velocity Hessian during Legendre inversion")
        v = v - np.moveaxis(step, 0, 1).reshape((n, k) + batch)
    raise NewtonError(
        f"Legendre inversion did not converge in {NEWTON_MAXITER} "
        f"iterations (last residual {last:.3e})", residual=last)


def legendre_inverse(model: LagrangianModel, mp: MomentumPoint,
                     v0=None) -> PhasePoint:
    """Newton inversion of the Legendre map at a momentum point.

    The default initial guess v0 = p is exact for the free model.
    """
    if mp.p.shape != (model.n, model.k):
        raise ValueError("momentum point dims do not match model")
    guess = np.array(mp.p if v0 is None else v0, dtype=float)
    v = _newton_batch(model, mp.q, mp.p, mp.s, guess)
    return PhasePoint(q=mp.q.copy(), v=v, s=mp.s.copy())


def hamiltonian_value(model: LagrangianModel, mp: MomentumPoint,
                      v0=None) -> float:
    """H = Lagrangian energy at the Legendre preimage."""
    z = legendre_inverse(model, mp, v0=v0)
    return energy(evaluate_jet(model, z), z)


@dataclass(frozen=True)
class MomentumPath:
    """A discrete map t -> momentum bundle on a uniform grid in the k
    independent variables.  q: (n, *G), p: (n, k, *G), s: (k, *G),
    spacings: (k,) grid steps per direction."""

    q: np.ndarray
    p: np.ndarray
    s: np.ndarray
    spacings: np.ndarray


def momentum_path_from_arrays(model: LagrangianModel, q, v, s,
                              spacings) -> MomentumPath:
    """Push a (batched) velocity path through the Legendre map."""
    jet = evaluate_jet_batch(model, q, v, s)
    return MomentumPath(q=np.asarray(q, dtype=float), p=np.array(jet.dLdv),
                        s=np.asarray(s, dtype=float),
                        spacings=np.asarray(spacings, dtype=float))


def _grid_gradient(f, spacings):
    """Central differences of f (component axes first, grid axes last)."""
    k = len(spacings)
    grid_axes = range(f.ndim - k, f.ndim)
    return [np.gradient(f, spacings[a], axis=ax, edge_order=2)
            for a, ax in enumerate(grid_axes)]


@dataclass(frozen=True)
class HdwResiduals:
    """Pointwise Hamilton-De Donder-Weyl residuals on the path interior."""

    r_q: np.ndarray   # (n, k, *Gint)   dq/dt^a - dH/dp^a
    r_p: np.ndarray   # (n, *Gint)      div p + dH/dq + p dH/ds
    r_s: np.ndarray   # (*Gint,)        div s - (p dH/dp - H)

    def max(self) -> float:
        return float(max(np.max(np.abs(self.r_q)),
                         np.max(np.abs(self.r_p)),
                         np.max(np.abs(self.r_s))))


def hdw_residual(model: LagrangianModel, path: MomentumPath,
                 v0=None) -> HdwResiduals:
    """Residuals of the canonical HDW equations along a discrete path.

    Path derivatives are second-order central differences; Hamiltonian
    derivatives come from the duality identities at the batched Legendre
    preimage.  Residuals are reported on the grid interior (two layers
    stripped) so one-sided edge stencils never enter.
    """
    k = model.k
    if path.spacings.shape != (k,):
        raise ValueError("path spacings must have one entry per direction")
    guess = np.array(path.p if v0 is None else v0, dtype=float)
    v = _newton_batch(model, path.q, path.p, path.s, guess)
    jet = evaluate_jet_batch(model, path.q, v, path.s)

    dq = np.stack(_grid_gradient(path.q, path.spacings), axis=1)
    dp = _grid_gradient(path.p, path.spacings)
    ds = _grid_gradient(path.s, path.spacings)

    r_q = dq - v
    r_p = (sum(dp[a][:, a] for a in range(k))
           - jet.dLdq
           - np.einsum("ia...,a...->i...", path.p, jet.dLds))
    H = np.einsum("ia...,ia...->...", v, jet.dLdv) - jet.L
    pv = np.einsum("ia...,ia...->...", path.p, v)
    r_s = sum(ds[a][a] for a in range(k)) - (pv - H)

    cut = tuple(slice(2, -2) for _ in range(k))
    return HdwResiduals(r_q=r_q[(slice(None), slice(None)) + cut],
                        r_p=r_p[(slice(None),) + cut],
                        r_s=r_s[cut])


def no_reeb_residual(model: LagrangianModel, mp: MomentumPoint,
                     Xq, Xp, Xs, v0=None):
    """Diagnostic contraction residuals of the Reeb-free equations.

    For a candidate k-vector field with components Xq[a, i], Xp[a, i, b],
    Xs[a, b], evaluates the one-form sum_a i(X_a) Omega^a with
    Omega^a = -H d(eta^a) + dH ^ eta^a, plus the energy condition
    sum_a i(X_a) eta^a + H.  Only meaningful where H != 0.
    """
    z = legendre_inverse(model, mp, v0=v0)
    jet = evaluate_jet(model, z)
    H = energy(jet, z)
    Hq, Hp, Hs = -jet.dLdq, z.v, -jet.dLds
    Xq = np.asarray(Xq, dtype=float)
    Xp = np.asarray(Xp, dtype=float)
    Xs = np.asarray(Xs, dtype=float)
    # X_a(H) per direction
    XH = (np.einsum("ai,i->a", Xq, Hq)
          + np.einsum("aib,ib->a", Xp, Hp)
          + np.einsum("ab,b->a", Xs, Hs))
    i_eta = np.einsum("aa->", Xs) - np.einsum("ai,ia->", Xq, mp.p)
    energy_residual = float(i_eta + H)
    # coefficients of sum_a i(X_a) Omega^a in the coframe (dq, dp, ds)
    coeff_dq = (H * np.einsum("aia->i", Xp)
                - np.einsum("a,ia->i", XH, mp.p)
                - i_eta * Hq)
    coeff_dp = -H * np.swapaxes(Xq, 0, 1) - i_eta * Hp  # (n, k) dp^a_i slot
    coeff_ds = XH - i_eta * Hs
    return {"dq": coeff_dq, "dp": coeff_dp, "ds": coeff_ds,
            "energy": energy_residual, "H": H}

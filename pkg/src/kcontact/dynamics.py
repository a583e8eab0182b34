"""Euler-Lagrange field equation assembly.

Three views of the same equations: pointwise PDE residuals for candidate
second jets, an explicit evolution form (solve for the time-time second
derivatives) used by the simulator, and the coefficients of a
second-order k-vector field with the dissipation velocities fixed by the
evolution-concentrated gauge g = diag(L, 0, ..., 0).

Direction 0 is always the evolution direction t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contact import hessian
from .errors import NotRegularError, SimulationError
from .jet import LagrangianModel, PhasePoint, evaluate_jet, evaluate_jet_batch


@dataclass(frozen=True)
class SecondJet:
    """A candidate solution jet: point, field second derivatives
    a[i, alpha, beta] (symmetric in the direction pair) and the
    s-derivative matrix dsdt[alpha, beta] = d s^beta / d t^alpha."""

    z: PhasePoint
    a: np.ndarray     # (n, k, k)
    dsdt: np.ndarray  # (k, k)

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))
        object.__setattr__(self, "dsdt", np.asarray(self.dsdt, dtype=float))
        n, k = self.z.n, self.z.k
        if self.a.shape != (n, k, k) or self.dsdt.shape != (k, k):
            raise ValueError("second jet shapes do not match the point")
        if np.max(np.abs(self.a - np.swapaxes(self.a, 1, 2))) > 1e-12 * max(
                1.0, np.max(np.abs(self.a))):
            raise ValueError("field second derivatives must be symmetric")


@dataclass(frozen=True)
class SopdeData:
    """Second-order coefficients Gamma[i, alpha, beta] (symmetric) and
    dissipation velocities g[beta, alpha] of an Euler-Lagrange field."""

    Gamma: np.ndarray  # (n, k, k)
    g: np.ndarray      # (k, k)


def el_residual(model: LagrangianModel, sj: SecondJet):
    """Residuals of the Euler-Lagrange equations at a second jet.

    Returns (rEL, rS): rEL[i] is the field equation residual, rS the
    divergence condition residual trace(dsdt) - L.  Both vanish exactly
    on solutions.
    """
    model.check_point(sj.z)
    jet = evaluate_jet(model, sj.z)
    rEL = (np.einsum("iajb,jba->i", jet.d2Ldvdv, sj.a)
           + np.einsum("iaj,ja->i", jet.d2Ldvdq, sj.z.v)
           + np.einsum("iab,ab->i", jet.d2Ldvds, sj.dsdt)
           - jet.dLdq
           - np.einsum("a,ia->i", jet.dLds, jet.dLdv))
    rS = float(np.trace(sj.dsdt) - jet.L)
    return rEL, rS


def el_residual_batch(model: LagrangianModel, q, v, s, a, dsdt):
    """Batched `el_residual`; batch axes trail every array."""
    jet = evaluate_jet_batch(model, q, v, s)
    rEL = (np.einsum("iajb...,jba...->i...", jet.d2Ldvdv, a)
           + np.einsum("iaj...,ja...->i...", jet.d2Ldvdq, v)
           + np.einsum("iab...,ab...->i...", jet.d2Ldvds, dsdt)
           - jet.dLdq
           - np.einsum("a...,ia...->i...", jet.dLds, jet.dLdv))
    rS = np.einsum("aa...->...", dsdt) - jet.L
    return rEL, rS


def _evolution_pieces(model, jet, v, spatial, mixed):
    """Shared assembly for the explicit evolution form (batched)."""
    n, k = model.n, model.k
    if np.max(np.abs(jet.d2Ldvds)) > 1e-12:
        raise SimulationError(
            "s-coupled model requires full SecondJet interface")
    W11 = jet.d2Ldvdv[:, 0, :, 0]                      # (n, n, *B)
    rhs = (jet.dLdq
           + np.einsum("a...,ia...->i...", jet.dLds, jet.dLdv)
           - np.einsum("iaj...,ja...->i...", jet.d2Ldvdq, v))
    if k > 1:
        # mixed time-space second derivatives a[j, 0, g], g >= 1
        Cm = jet.d2Ldvdv[:, 0, :, 1:] + np.moveaxis(
            jet.d2Ldvdv[:, 1:, :, 0], 1, 2)            # (n, n, k-1, *B)
        rhs = rhs - np.einsum("ijg...,jg...->i...", Cm, mixed)
        # purely spatial second derivatives a[j, b, g], b, g >= 1
        Cs = np.moveaxis(jet.d2Ldvdv[:, 1:, :, 1:], 1, 3)  # (n, n, b, g, *B)
        rhs = rhs - np.einsum("ijbg...,jbg...->i...", Cs, spatial)
    return W11, rhs


def evolution_rhs(model: LagrangianModel, z: PhasePoint,
                  spatial, mixed) -> np.ndarray:
    """Solve the field equations for the time-time second derivatives.

    `spatial[i, b, g]` are the known purely spatial second derivatives
    (directions 1..k-1) and `mixed[i, g]` the time-space ones.  Requires
    an invertible time-time Hessian block and no velocity-dissipation
    coupling.
    """
    model.check_point(z)
    spatial = np.asarray(spatial, dtype=float).reshape(
        model.n, model.k - 1, model.k - 1)
    mixed = np.asarray(mixed, dtype=float).reshape(model.n, model.k - 1)
    jet = evaluate_jet(model, z)
    W11, rhs = _evolution_pieces(model, jet, z.v, spatial, mixed)
    try:
        return np.linalg.solve(W11, rhs)
    except np.linalg.LinAlgError:
        raise NotRegularError("not hyperbolic-evolvable in direction t")


def evolution_rhs_batch(model: LagrangianModel, q, v, s, spatial, mixed):
    """Batched evolution solve; returns (accel, L) with batch trailing.

    accel has shape (n, *B); L is returned because the simulator needs
    the density for the s^1 equation and the jet is already in hand.
    """
    jet = evaluate_jet_batch(model, q, v, s)
    W11, rhs = _evolution_pieces(model, jet, v, spatial, mixed)
    n = model.n
    batch = jet.L.shape
    Wb = np.moveaxis(W11.reshape(n, n, -1), 2, 0)
    rb = np.moveaxis(rhs.reshape(n, -1), 1, 0)[..., None]
    try:
        acc = np.linalg.solve(Wb, rb)[..., 0]
    except np.linalg.LinAlgError:
        raise NotRegularError("not hyperbolic-evolvable in direction t")
    return np.moveaxis(acc, 0, 1).reshape((n,) + batch), jet.L


def gauge_s_velocities(L: float, k: int) -> np.ndarray:
    """Evolution-concentrated gauge: g = diag(L, 0, ..., 0)."""
    g = np.zeros((k, k))
    g[0, 0] = L
    return g


def _symmetric_basis(k: int):
    """Orthonormal basis (Frobenius) of symmetric k x k matrices."""
    basis = []
    for a in range(k):
        E = np.zeros((k, k))
        E[a, a] = 1.0
        basis.append(E)
    r = 1.0 / np.sqrt(2.0)
    for a in range(k):
        for b in range(a + 1, k):
            E = np.zeros((k, k))
            E[a, b] = E[b, a] = r
            basis.append(E)
    return basis


def assemble_sopde(model: LagrangianModel, z: PhasePoint) -> SopdeData:
    """Coefficients of an Euler-Lagrange k-vector field at z.

    The SOPDE condition fixes the q-components to the velocities; the
    dissipation velocities follow the evolution-concentrated gauge; the
    symmetric Gamma solves the contracted field equations with minimal
    Frobenius norm (the system is underdetermined for k > 1).
    """
    model.check_point(z)
    jet = evaluate_jet(model, z)
    hw = hessian(jet)
    if not hw.regular:
        raise NotRegularError("Lagrangian not regular")
    n, k = model.n, model.k
    g = gauge_s_velocities(jet.L, k)
    b = (jet.dLdq
         + np.einsum("a,ia->i", jet.dLds, jet.dLdv)
         - np.einsum("iaj,ja->i", jet.d2Ldvdq, z.v)
         - np.einsum("iab,ba->i", jet.d2Ldvds, g))
    basis = _symmetric_basis(k)
    # columns: contraction of W with each (j, basis-matrix) pair
    cols = []
    for j in range(n):
        for E in basis:
            cols.append(np.einsum("iab,ab->i", jet.d2Ldvdv[:, :, j, :], E))
    A = np.stack(cols, axis=1)  # (n, n * len(basis))
    coeffs, *_ = np.linalg.lstsq(A, b, rcond=None)
    Gamma = np.zeros((n, k, k))
    idx = 0
    for j in range(n):
        for E in basis:
            Gamma[j] += coeffs[idx] * E
            idx += 1
    return SopdeData(Gamma=Gamma, g=g)


def verify_sopde(model: LagrangianModel, z: PhasePoint,
                 sopde: SopdeData) -> float:
    """Max residual of the k-vector-field equations for given coefficients.

    Under the SOPDE condition the velocity-difference equations hold
    identically; what remains are the contracted second-order equations
    and the trace condition on the dissipation velocities.
    """
    model.check_point(z)
    jet = evaluate_jet(model, z)
    res_field = (np.einsum("iajb,jab->i", jet.d2Ldvdv, sopde.Gamma)
                 + np.einsum("iaj,ja->i", jet.d2Ldvdq, z.v)
                 + np.einsum("iab,ba->i", jet.d2Ldvds, sopde.g)
                 - jet.dLdq
                 - np.einsum("a,ia->i", jet.dLds, jet.dLdv))
    res_trace = np.trace(sopde.g) - jet.L
    return float(max(np.max(np.abs(res_field)), abs(res_trace)))

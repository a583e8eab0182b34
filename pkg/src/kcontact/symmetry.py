"""Infinitesimal symmetries, dissipated quantities, dissipation laws.

A `SymmetryField` is a vector field on the phase bundle given by its
components along dq, dv, ds.  The Lie derivative of the contact forms is
assembled analytically from the Jet2 blocks and the field's Jacobian;
only solution traces are ever differenced.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .contact import (_energy_gradients, hessian, reeb,
                      reeb_energy_derivative_batch)
from .jet import LagrangianModel, PhasePoint, evaluate_jet, evaluate_jet_batch


def _as_batch(x, shape):
    return np.broadcast_to(np.asarray(x, dtype=float), shape)


@dataclass(frozen=True)
class SymmetryJacobian:
    """First derivatives of the components with respect to the flat
    coordinate vector (q | v | s) of length m = n + n*k + k."""

    dYq: np.ndarray  # (n, m, *B)
    dYv: np.ndarray  # (n, k, m, *B)
    dYs: np.ndarray  # (k, m, *B)


@dataclass(frozen=True)
class SymmetryField:
    """Vector field Yq d/dq + Yv d/dv + Ys d/ds.

    Component callables receive batched coordinate arrays q (n, *B),
    v (n, k, *B), s (k, *B) and may return anything broadcastable to the
    required shape.  `jacobian` defaults to central finite differences
    of the components.
    """

    n: int
    k: int
    Yq: Callable
    Yv: Callable
    Ys: Callable
    jacobian: Callable | None = None
    name: str = ""

    def components(self, q, v, s):
        batch = np.shape(q)[1:]
        return (_as_batch(self.Yq(q, v, s), (self.n,) + batch),
                _as_batch(self.Yv(q, v, s), (self.n, self.k) + batch),
                _as_batch(self.Ys(q, v, s), (self.k,) + batch))

    def jacobian_blocks(self, q, v, s, h: float = 1e-6) -> SymmetryJacobian:
        if self.jacobian is not None:
            return self.jacobian(q, v, s)
        n, k = self.n, self.k
        m = n + n * k + k
        batch = np.shape(q)[1:]
        dYq = np.zeros((n, m) + batch)
        dYv = np.zeros((n, k, m) + batch)
        dYs = np.zeros((k, m) + batch)
        for j in range(m):
            qp, vp, sp = _displace(q, v, s, j, h)
            qm, vm, sm = _displace(q, v, s, j, -h)
            cp = self.components(qp, vp, sp)
            cm = self.components(qm, vm, sm)
            dYq[:, j] = (cp[0] - cm[0]) / (2 * h)
            dYv[:, :, j] = (cp[1] - cm[1]) / (2 * h)
            dYs[:, j] = (cp[2] - cm[2]) / (2 * h)
        return SymmetryJacobian(dYq=dYq, dYv=dYv, dYs=dYs)


def _displace(q, v, s, j, h):
    """Shift flat coordinate j by h (batched)."""
    n, k = np.shape(q)[0], np.shape(s)[0]
    q, v, s = np.array(q, dtype=float), np.array(v, dtype=float), \
        np.array(s, dtype=float)
    if j < n:
        q[j] += h
    elif j < n + n * k:
        r = j - n
        v[r // k, r % k] += h
    else:
        s[j - n - n * k] += h
    return q, v, s


def constant_field(model: LagrangianModel, Yq=None, Yv=None, Ys=None,
                   name: str = "") -> SymmetryField:
    """Constant-coefficient vector field; its Jacobian is exactly zero."""
    n, k = model.n, model.k
    cq = np.zeros(n) if Yq is None else np.asarray(Yq, dtype=float)
    cv = np.zeros((n, k)) if Yv is None else np.asarray(Yv, dtype=float)
    cs = np.zeros(k) if Ys is None else np.asarray(Ys, dtype=float)
    m = n + n * k + k

    def jac(q, v, s):
        batch = np.shape(q)[1:]
        return SymmetryJacobian(dYq=np.zeros((n, m) + batch),
                                dYv=np.zeros((n, k, m) + batch),
                                dYs=np.zeros((k, m) + batch))

    return SymmetryField(
        n=n, k=k,
        Yq=lambda q, v, s: cq.reshape((n,) + (1,) * (np.ndim(q) - 1)),
        Yv=lambda q, v, s: cv.reshape((n, k) + (1,) * (np.ndim(q) - 1)),
        Ys=lambda q, v, s: cs.reshape((k,) + (1,) * (np.ndim(q) - 1)),
        jacobian=jac, name=name)


def builtin_symmetry_field(model: LagrangianModel,
                           name: str) -> SymmetryField:
    """Named vector fields used by the verification suites.

    'du'      translation of the first field coordinate;
    'scaling' the field-scaling q d/dq (generically not a symmetry);
    'paperY'  the lifted rotation of a two-field model
              (-q1, q0) d/dq + (-v1, v0) d/dv.
    """
    n, k = model.n, model.k
    m = n + n * k + k
    if name == "du":
        e0 = np.zeros(n)
        e0[0] = 1.0
        return constant_field(model, Yq=e0, name="du")
    if name == "scaling":
        def jac(q, v, s):
            batch = np.shape(q)[1:]
            dYq = np.zeros((n, m) + batch)
            for i in range(n):
                dYq[i, i] = 1.0
            return SymmetryJacobian(dYq=dYq,
                                    dYv=np.zeros((n, k, m) + batch),
                                    dYs=np.zeros((k, m) + batch))

        return SymmetryField(
            n=n, k=k, Yq=lambda q, v, s: np.asarray(q, dtype=float),
            Yv=lambda q, v, s: np.zeros(np.shape(v)),
            Ys=lambda q, v, s: np.zeros(np.shape(s)),
            jacobian=jac, name="scaling")
    if name == "paperY":
        if n != 2:
            raise ValueError("the rotation field needs exactly two fields")

        def jac(q, v, s):
            batch = np.shape(q)[1:]
            dYq = np.zeros((n, m) + batch)
            dYv = np.zeros((n, k, m) + batch)
            dYq[0, 1] = -1.0
            dYq[1, 0] = 1.0
            for a in range(k):
                dYv[0, a, n + k + a] = -1.0
                dYv[1, a, n + a] = 1.0
            return SymmetryJacobian(dYq=dYq, dYv=dYv,
                                    dYs=np.zeros((k, m) + batch))

        return SymmetryField(
            n=n, k=k,
            Yq=lambda q, v, s: np.stack([-q[1], q[0]]),
            Yv=lambda q, v, s: np.stack([-v[1], v[0]]),
            Ys=lambda q, v, s: np.zeros(np.shape(s)),
            jacobian=jac, name="paperY")
    raise ValueError(f"unknown symmetry field '{name}'")


@dataclass(frozen=True)
class DissipatedQuantity:
    """The current F^a = -i(Y) eta^a = p^a_i Yq^i - Ys^a of a field Y."""

    model: LagrangianModel
    Y: SymmetryField

    def batch(self, q, v, s) -> np.ndarray:
        jet = evaluate_jet_batch(self.model, q, v, s)
        Yq, _, Ys = self.Y.components(q, v, s)
        return np.einsum("ia...,i...->a...", jet.dLdv, Yq) - Ys

    def __call__(self, z: PhasePoint) -> np.ndarray:
        return self.batch(z.q, z.v, z.s)


def dissipated_quantity(model: LagrangianModel,
                        Y: SymmetryField) -> DissipatedQuantity:
    return DissipatedQuantity(model=model, Y=Y)


def lie_derivative_eta(model: LagrangianModel, Y: SymmetryField, q, v, s):
    """Coordinate components of L_Y eta^a at batched points.

    Returns (coef_dq (k, n, *B), coef_dv (k, n, k, *B),
    coef_ds (k, k, *B)).
    """
    n, k = model.n, model.k
    jet = evaluate_jet_batch(model, q, v, s)
    Yq, Yv, Ys = Y.components(q, v, s)
    jac = Y.jacobian_blocks(q, v, s)
    p = jet.dLdv  # (n, k, *B)
    # directional derivative of the momenta along Y
    Yp = (np.einsum("l...,ial...->ia...", Yq, jet.d2Ldvdq)
          + np.einsum("lg...,ialg...->ia...", Yv, jet.d2Ldvdv)
          + np.einsum("g...,iag...->ia...", Ys, jet.d2Ldvds))
    dYq_q = jac.dYq[:, :n]
    dYq_v = jac.dYq[:, n:n + n * k].reshape((n, n, k) + np.shape(q)[1:])
    dYq_s = jac.dYq[:, n + n * k:]
    dYs_q = jac.dYs[:, :n]
    dYs_v = jac.dYs[:, n:n + n * k].reshape((k, n, k) + np.shape(q)[1:])
    dYs_s = jac.dYs[:, n + n * k:]
    coef_dq = (dYs_q
               - np.moveaxis(Yp, 1, 0)
               - np.einsum("ia...,ij...->aj...", p, dYq_q))
    coef_dv = dYs_v - np.einsum("ia...,ijb...->ajb...", p, dYq_v)
    coef_ds = dYs_s - np.einsum("ia...,ib...->ab...", p, dYq_s)
    return coef_dq, coef_dv, coef_ds


def apply_to_energy(model: LagrangianModel, Y: SymmetryField, q, v, s):
    """Y(E_L) at batched points."""
    jet = evaluate_jet_batch(model, q, v, s)
    Yq, Yv, Ys = Y.components(q, v, s)
    dEdq = (np.einsum("ia...,iaj...->j...", v, jet.d2Ldvdq) - jet.dLdq)
    dEds, dEdv = _energy_gradients(jet, v)
    return (np.einsum("j...,j...->...", Yq, dEdq)
            + np.einsum("ib...,ib...->...", Yv, dEdv)
            + np.einsum("b...,b...->...", Ys, dEds))


def check_contact_symmetry(model: LagrangianModel, Y: SymmetryField,
                           points, tol: float = 1e-9) -> dict:
    """Evaluate L_Y eta^a and Y(E_L) at sample points.

    `points` is an iterable of PhasePoint.  Returns a report with the
    overall max residual and the verdict max <= tol.
    """
    q = np.stack([z.q for z in points], axis=-1)
    v = np.stack([z.v for z in points], axis=-1)
    s = np.stack([z.s for z in points], axis=-1)
    cdq, cdv, cds = lie_derivative_eta(model, Y, q, v, s)
    YE = apply_to_energy(model, Y, q, v, s)
    res_eta = max(np.max(np.abs(cdq)), np.max(np.abs(cdv)),
                  np.max(np.abs(cds)))
    res_E = float(np.max(np.abs(YE)))
    worst = float(max(res_eta, res_E))
    return {"is_symmetry": worst <= tol, "max_residual": worst,
            "eta_residual": float(res_eta), "energy_residual": res_E}


def reeb_bracket_check(model: LagrangianModel, Y: SymmetryField,
                       points, h: float = 1e-5) -> float:
    """Max component of [Y, (R_L)_a] at the sample points.

    The derivative of the Reeb velocity components along Y is a central
    difference of the Reeb construction (it involves third derivatives
    of L, which the jet does not carry)."""
    worst = 0.0
    for z in points:
        jet = evaluate_jet(model, z)
        rf = reeb(jet, hessian(jet))
        Yq, Yv, Ys = Y.components(z.q, z.v, z.s)
        jac = Y.jacobian_blocks(z.q, z.v, z.s)
        n, k = model.n, model.k
        for a in range(k):
            # flat direction vector of (R_L)_a
            direction = np.concatenate(
                [np.zeros(n), rf.vcomp[a].ravel(),
                 np.eye(k)[a]])
            dYq = jac.dYq @ direction
            dYv = jac.dYv @ direction
            dYs = jac.dYs @ direction
            # Y(vcomp[a]) by central differences along Y
            zp = PhasePoint(q=z.q + h * Yq, v=z.v + h * Yv, s=z.s + h * Ys)
            zm = PhasePoint(q=z.q - h * Yq, v=z.v - h * Yv, s=z.s - h * Ys)
            jp = evaluate_jet(model, zp)
            jm = evaluate_jet(model, zm)
            dv = (reeb(jp, hessian(jp)).vcomp[a]
                  - reeb(jm, hessian(jm)).vcomp[a]) / (2 * h)
            worst = max(worst, np.max(np.abs(dYq)), np.max(np.abs(dYs)),
                        np.max(np.abs(dv - dYv)))
    return float(worst)


def _trace_divergence(fields, spacings):
    """div of a k-tuple of fields over a (T, *S) grid; fields (k, T, *S)."""
    k = fields.shape[0]
    out = 0.0
    for a in range(k):
        out = out + np.gradient(fields[a], spacings[a], axis=a,
                                edge_order=2)
    return out


def _interior(arr, k):
    return arr[tuple(slice(2, -2) for _ in range(k))]


def momentum_dissipation_check(model: LagrangianModel, i: int,
                               trace, tol_cyclic: float = 1e-9) -> float:
    """Residual of the momentum dissipation identity along a trace:

        div(p_i o sigma) = sum_a dL/ds^a * p_i^a  on solutions,

    valid when q^i is cyclic.  Raises if dL/dq^i is not identically
    zero on the trace samples."""
    from .sim import trace_point_arrays
    q, v, s, spacings = trace_point_arrays(model, trace)
    jet = evaluate_jet_batch(model, q, v, s)
    if np.max(np.abs(jet.dLdq[i])) > tol_cyclic:
        raise ValueError(f"coordinate {i} not cyclic")
    momenta = jet.dLdv[i]  # (k, T, *S)
    rhs = np.einsum("a...,a...->...", jet.dLds, jet.dLdv[i])
    res = _trace_divergence(momenta, spacings) - rhs
    return float(np.max(np.abs(_interior(res, model.k))))


def dissipation_law_check(model: LagrangianModel, F: DissipatedQuantity,
                          trace) -> np.ndarray:
    """Pointwise residual of div(F o sigma) + (L_{R_a} E_L) F^a o sigma
    over the trace interior."""
    from .sim import trace_point_arrays
    q, v, s, spacings = trace_point_arrays(model, trace)
    Fvals = F.batch(q, v, s)  # (k, T, *S)
    rE = reeb_energy_derivative_batch(model, q, v, s)
    res = (_trace_divergence(Fvals, spacings)
           + np.einsum("a...,a...->...", rE, Fvals))
    return _interior(res, model.k)

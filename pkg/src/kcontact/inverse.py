"""Inverse problem: build a k-contact Lagrangian for a prescribed PDE

    A^{ab} u_{ab} + D^a u_a + G(u) = 0

with A constant symmetric invertible and D constant.  The matching
Lagrangian is L = (1/2) A^{ab} u_a u_b - (A^{-1} D)_a s^a - gbar(u),
where gbar is an antiderivative of G normalized by gbar(0) = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .dynamics import SecondJet, el_residual
from .errors import ConfigError
from .jet import LagrangianModel, PhasePoint
from .taylor import T2

RANK_TOL = 1e-10
QUAD_TOL = 1e-10


@dataclass(frozen=True)
class PdeSpec:
    """Coefficients of the target PDE.

    G is a scalar callable (or None for G = 0); gbar optionally supplies
    a closed-form antiderivative written with overloaded arithmetic so
    it can be differentiated exactly.  Without it the antiderivative is
    computed by adaptive quadrature and G is differenced once for the
    second-derivative channel.
    """

    A: np.ndarray
    D: np.ndarray
    G: Callable | None = None
    gbar: Callable | None = None
    g_poly: tuple | None = None  # polynomial coefficients of G, if known

    def __post_init__(self):
        object.__setattr__(self, "A", np.asarray(self.A, dtype=float))
        object.__setattr__(self, "D", np.asarray(self.D, dtype=float))
        k = self.A.shape[0]
        if self.A.shape != (k, k) or self.D.shape != (k,):
            raise ValueError("A must be k x k and D length k")
        if np.max(np.abs(self.A - self.A.T)) > 1e-12 * max(
                1.0, np.max(np.abs(self.A))):
            raise ValueError("A must be symmetric")

    @property
    def k(self) -> int:
        return self.A.shape[0]

    @classmethod
    def from_dict(cls, data: dict) -> "PdeSpec":
        """Load from the CLI config format: {'A': [[...]], 'D': [...],
        'G': {'poly': [c0, c1, ...]} optional polynomial coefficients}."""
        data = dict(data)
        A = data.pop("A")
        D = data.pop("D")
        gspec = data.pop("G", None)
        if data:
            raise ConfigError(f"unknown PDE spec keys: {sorted(data)}")
        G = gbar = None
        if gspec is not None:
            if not (isinstance(gspec, dict) and "poly" in gspec):
                raise ConfigError("G must be {'poly': [c0, c1, ...]}")
            coeffs = [float(c) for c in gspec["poly"]]

            def G(u, _c=coeffs):
                out = 0.0
                pw = 1.0
                for c in _c:
                    out = out + c * pw
                    pw = pw * u
                return out

            def gbar(u, _c=coeffs):
                out = 0.0
                pw = u
                for j, c in enumerate(_c):
                    out = out + c / (j + 1) * pw
                    pw = pw * u
                return out

        return cls(A=np.asarray(A, dtype=float),
                   D=np.asarray(D, dtype=float), G=G, gbar=gbar,
                   g_poly=tuple(coeffs) if gspec is not None else None)


def _antiderivative(spec: PdeSpec):
    """Return gbar usable on arrays and T2 values, with gbar(0) = 0."""
    if spec.G is None:
        return None
    if spec.gbar is not None:
        return spec.gbar

    G = spec.G

    def quad_gbar(u):
        flat = np.atleast_1d(np.asarray(u, dtype=float)).ravel()
        vals = np.array([quad(G, 0.0, x, epsabs=QUAD_TOL, epsrel=QUAD_TOL)[0]
                         for x in flat])
        return vals.reshape(np.shape(u)) if np.shape(u) else float(vals[0])

    def dG(u, h=1e-6):
        return (G(u + h) - G(u - h)) / (2 * h)

    def gbar(u):
        if isinstance(u, T2):
            return u.apply(quad_gbar, G, dG)
        return quad_gbar(u)

    return gbar


def build_lagrangian(spec: PdeSpec) -> LagrangianModel:
    """The matching Lagrangian as an n=1 model with k directions."""
    sv = np.linalg.svd(spec.A, compute_uv=False)
    if sv[-1] <= RANK_TOL * max(sv[0], 1e-300):
        raise ConfigError("parabolic spec not representable")
    k = spec.k
    A = spec.A
    c = np.linalg.solve(A, spec.D)  # (A^{-1} D)_a
    gbar = _antiderivative(spec)

    def lag(q, v, s):
        u = q[0]
        total = 0.0
        for a in range(k):
            for b in range(k):
                if A[a, b] != 0.0:
                    total = total + 0.5 * A[a, b] * v[0][a] * v[0][b]
        for a in range(k):
            if c[a] != 0.0:
                total = total - c[a] * s[a]
        if gbar is not None:
            total = total - gbar(u)
        return total

    return LagrangianModel(n=1, k=k, name="inverse", lagrangian=lag,
                           params={"A": A.tolist(), "D": spec.D.tolist(),
                                   "has_G": spec.G is not None})


def direct_residual(spec: PdeSpec, sj: SecondJet) -> float:
    """Direct evaluation of the target PDE at a second jet (the oracle)."""
    u = float(sj.z.q[0])
    G = spec.G(u) if spec.G is not None else 0.0
    return float(np.einsum("ab,ab->", spec.A, sj.a[0])
                 + spec.D @ sj.z.v[0] + G)


def roundtrip_check(spec: PdeSpec, n_samples: int = 100,
                    rng=None, scale: float = 1.0) -> float:
    """Max discrepancy between the built model's Euler-Lagrange residual
    and the prescribed PDE over random second jets."""
    rng = np.random.default_rng(0) if rng is None else rng
    model = build_lagrangian(spec)
    k = spec.k
    worst = 0.0
    for _ in range(n_samples):
        z = PhasePoint(q=rng.uniform(-scale, scale, 1),
                       v=rng.uniform(-scale, scale, (1, k)),
                       s=rng.uniform(-scale, scale, k))
        a = rng.uniform(-scale, scale, (1, k, k))
        a = 0.5 * (a + np.swapaxes(a, 1, 2))
        sj = SecondJet(z=z, a=a, dsdt=rng.uniform(-scale, scale, (k, k)))
        rEL, _ = el_residual(model, sj)
        worst = max(worst, abs(float(rEL[0]) - direct_residual(spec, sj)))
    return worst


_DIRECTION_NAMES = ("t", "x", "y", "z")


def _fmt(c: float) -> str:
    return repr(float(c))


def render_lagrangian(spec: PdeSpec) -> str:
    """Human-readable L with the spec's numbers substituted."""
    k = spec.k
    names = (_DIRECTION_NAMES[:k] if k <= len(_DIRECTION_NAMES)
             else tuple(f"t{a + 1}" for a in range(k)))
    terms = []
    for a in range(k):
        for b in range(a, k):
            coeff = 0.5 * spec.A[a, b] if a == b else spec.A[a, b]
            if coeff != 0.0:
                terms.append(f"{_fmt(coeff)}*u_{names[a]}*u_{names[b]}")
    c = np.linalg.solve(spec.A, spec.D)
    for a in range(k):
        if c[a] != 0.0:
            terms.append(f"{_fmt(-c[a])}*s_{names[a]}")
    if spec.g_poly is not None:
        for j, coeff in enumerate(spec.g_poly):
            if coeff != 0.0:
                pw = "u" if j == 0 else f"u^{j + 1}"
                terms.append(f"{_fmt(-coeff / (j + 1))}*{pw}")
    elif spec.G is not None:
        terms.append("-gbar(u)")
    if not terms:
        return "0"
    out = terms[0]
    for t in terms[1:]:
        out += f" - {t[1:]}" if t.startswith("-") else f" + {t}"
    return out


def membrane_spec(mu: float, gamma: float) -> PdeSpec:
    """The damped-membrane instance of the inverse problem."""
    return PdeSpec(A=np.diag([1.0, -mu ** 2, -mu ** 2]),
                   D=np.array([gamma, 0.0, 0.0]))


def telegraph_spec(c: float, m: float) -> PdeSpec:
    """u_tt - u_zz + c u_z + m u = 0 (telegraph-like)."""
    return PdeSpec(A=np.diag([1.0, -1.0]), D=np.array([0.0, c]),
                   G=lambda u: m * u, gbar=lambda u: 0.5 * m * u * u,
                   g_poly=(0.0, m))

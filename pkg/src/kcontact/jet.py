"""Phase-space points and exact second-order differentiation of Lagrangians.

The central object is `LagrangianModel`: a field count n, a direction
count k, and a Lagrangian written with overloaded arithmetic so that it
evaluates both on plain numpy arrays (fast path for simulation) and on
`T2` Taylor values (exact derivatives).  `evaluate_jet` produces the
`Jet2` derivative bundle every other module consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .taylor import T2, TaylorContext, variable


@dataclass(frozen=True)
class PhasePoint:
    """A point (q^i, v^i_a, s^a) of the dissipative velocity bundle."""

    q: np.ndarray  # (n,)
    v: np.ndarray  # (n, k)
    s: np.ndarray  # (k,)

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        object.__setattr__(self, "s", np.asarray(self.s, dtype=float))
        n, k = self.v.shape
        if self.q.shape != (n,) or self.s.shape != (k,):
            raise ValueError(
                f"inconsistent phase point shapes q={self.q.shape} "
                f"v={self.v.shape} s={self.s.shape}")
        if not (np.isfinite(self.q).all() and np.isfinite(self.v).all()
                and np.isfinite(self.s).all()):
            raise ValueError("non-finite phase point entries")

    @property
    def n(self) -> int:
        return self.v.shape[0]

    @property
    def k(self) -> int:
        return self.v.shape[1]


@dataclass(frozen=True)
class MomentumPoint:
    """A point (q^i, p^a_i, s^a) of the momentum bundle; p[i, a] = p^a_i."""

    q: np.ndarray  # (n,)
    p: np.ndarray  # (n, k)
    s: np.ndarray  # (k,)

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        object.__setattr__(self, "s", np.asarray(self.s, dtype=float))
        n, k = self.p.shape
        if self.q.shape != (n,) or self.s.shape != (k,):
            raise ValueError("inconsistent momentum point shapes")
        if not (np.isfinite(self.q).all() and np.isfinite(self.p).all()
                and np.isfinite(self.s).all()):
            raise ValueError("non-finite momentum point entries")


@dataclass(frozen=True)
class Jet2:
    """Value and derivative blocks of L at a point (or a batch of points).

    For a single point the shapes are L: scalar, dLdq: (n,), dLdv: (n,k),
    dLds: (k,), d2Ldvdv: (n,k,n,k), d2Ldvdq: (n,k,n), d2Ldvds: (n,k,k).
    Batched evaluations append the batch axes on the right.
    """

    L: np.ndarray
    dLdq: np.ndarray
    dLdv: np.ndarray
    dLds: np.ndarray
    d2Ldvdv: np.ndarray
    d2Ldvdq: np.ndarray
    d2Ldvds: np.ndarray

    def check(self, rtol=1e-12):
        """Validate finiteness and v-v symmetry of the Hessian block."""
        for name in ("L", "dLdq", "dLdv", "dLds",
                     "d2Ldvdv", "d2Ldvdq", "d2Ldvds"):
            arr = getattr(self, name)
            if not np.isfinite(arr).all():
                raise ValueError(f"non-finite entries in jet block {name}")
        W = self.d2Ldvdv
        Wt = np.moveaxis(W, (0, 1, 2, 3), (2, 3, 0, 1))
        scale = max(np.max(np.abs(W)), 1.0)
        if np.max(np.abs(W - Wt)) > rtol * scale:
            raise ValueError("velocity Hessian block is not symmetric")
        return self


@dataclass(frozen=True)
class LagrangianModel:
    """A field theory: dimensions (n, k) and a Lagrangian density.

    `lagrangian(q, v, s)` receives the coordinates as nested lists
    (q[i], v[i][a], s[a]) of either numpy arrays or T2 values and must
    combine them with overloaded arithmetic only.
    """

    n: int
    k: int
    name: str
    lagrangian: Callable
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise ValueError("model dimensions must satisfy n >= 1, k >= 1")

    def check_point(self, z: PhasePoint):
        if z.n != self.n or z.k != self.k:
            raise ValueError(
                f"phase point dims ({z.n},{z.k}) do not match model "
                f"({self.n},{self.k})")

    def lagrangian_value(self, q, v, s):
        """Plain evaluation of L on (batched) coordinate arrays."""
        qs = [np.asarray(q[i], dtype=float) for i in range(self.n)]
        vs = [[np.asarray(v[i][a], dtype=float) for a in range(self.k)]
              for i in range(self.n)]
        ss = [np.asarray(s[a], dtype=float) for a in range(self.k)]
        out = self.lagrangian(qs, vs, ss)
        shape = np.broadcast_shapes(*(x.shape for x in qs + ss))
        return np.broadcast_to(np.asarray(out, dtype=float), shape)


def evaluate_jet_batch(model: LagrangianModel, q, v, s) -> Jet2:
    """Exact Jet2 blocks at a batch of points.

    q: (n, *B), v: (n, k, *B), s: (k, *B); batch axes trail everywhere.
    """
    n, k = model.n, model.k
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    s = np.asarray(s, dtype=float)
    batch = q.shape[1:]
    ctx = TaylorContext(n, k)
    qv = [variable(ctx, i, np.broadcast_to(q[i], batch)) for i in range(n)]
    vv = [[variable(ctx, n + i * k + a, np.broadcast_to(v[i, a], batch))
           for a in range(k)] for i in range(n)]
    sv = [variable(ctx, n + n * k + a, np.broadcast_to(s[a], batch))
          for a in range(k)]
    out = model.lagrangian(qv, vv, sv)
    if not isinstance(out, T2):  # constant Lagrangian
        L = np.broadcast_to(np.asarray(out, dtype=float), batch)
        grad = np.zeros((ctx.m,) + batch)
        hess = np.zeros((ctx.nv, ctx.m) + batch)
    else:
        L = np.broadcast_to(np.asarray(out.val, dtype=float), batch)
        grad = np.broadcast_to(out.grad, (ctx.m,) + batch)
        hess = np.broadcast_to(out._materialized_hess(),
                               (ctx.nv, ctx.m) + batch)
    nv = ctx.nv
    jet = Jet2(
        L=np.array(L),
        dLdq=np.array(grad[:n]),
        dLdv=np.array(grad[n:n + nv]).reshape((n, k) + batch),
        dLds=np.array(grad[n + nv:]),
        d2Ldvdv=np.array(hess[:, n:n + nv]).reshape((n, k, n, k) + batch),
        d2Ldvdq=np.array(hess[:, :n]).reshape((n, k, n) + batch),
        d2Ldvds=np.array(hess[:, n + nv:]).reshape((n, k, k) + batch),
    )
    return jet


def evaluate_jet(model: LagrangianModel, z: PhasePoint) -> Jet2:
    """Exact Jet2 at a single phase point."""
    model.check_point(z)
    jet = evaluate_jet_batch(model, z.q, z.v, z.s)
    jet = Jet2(L=float(jet.L), dLdq=jet.dLdq, dLdv=jet.dLdv, dLds=jet.dLds,
               d2Ldvdv=jet.d2Ldvdv, d2Ldvdq=jet.d2Ldvdq, d2Ldvds=jet.d2Ldvds)
    return jet.check()


def _lag_value(model, q, v, s):
    """Scalar L at explicitly given coordinate arrays."""
    return float(model.lagrangian_value(q, [list(row) for row in v], s))


def fd_check(model: LagrangianModel, z: PhasePoint, h: float = 1e-4) -> float:
    """Worst relative discrepancy between `evaluate_jet` and central
    finite differences of L.  Independent of the Taylor kernel: it only
    evaluates L itself."""
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    model.check_point(z)
    jet = evaluate_jet(model, z)
    n, k = model.n, model.k
    m = n + n * k + k

    def coords(delta):
        x = np.concatenate([z.q, z.v.ravel(), z.s]) + delta
        return x[:n], x[n:n + n * k].reshape(n, k), x[n + n * k:]

    def L_at(delta):
        return _lag_value(model, *coords(delta))

    e = np.eye(m)
    grad_fd = np.array([(L_at(h * e[j]) - L_at(-h * e[j])) / (2 * h)
                        for j in range(m)])
    grad_ad = np.concatenate([jet.dLdq, jet.dLdv.ravel(), jet.dLds])

    # second derivatives: velocity rows against every coordinate
    hess_fd = np.zeros((n * k, m))
    L0 = L_at(np.zeros(m))
    for r in range(n * k):
        I = n + r
        for j in range(m):
            if I == j:
                hess_fd[r, j] = (L_at(h * e[I]) - 2 * L0
                                 + L_at(-h * e[I])) / h ** 2
            else:
                hess_fd[r, j] = (L_at(h * (e[I] + e[j]))
                                 - L_at(h * (e[I] - e[j]))
                                 - L_at(h * (e[j] - e[I]))
                                 + L_at(-h * (e[I] + e[j]))) / (4 * h ** 2)
    # blocks in coordinate order q | v | s
    hess_ad = np.concatenate(
        [jet.d2Ldvdq.reshape(n * k, n),
         jet.d2Ldvdv.reshape(n * k, n * k),
         jet.d2Ldvds.reshape(n * k, k)], axis=1)

    def rel(a, b):
        return np.abs(a - b) / np.maximum(1.0, np.abs(b))

    return float(max(rel(grad_fd, grad_ad).max(),
                     rel(hess_fd, hess_ad).max()))


def random_phase_point(model: LagrangianModel, rng, scale: float = 1.0
                       ) -> PhasePoint:
    """Uniform random point in [-scale, scale] per coordinate."""
    return PhasePoint(
        q=rng.uniform(-scale, scale, size=model.n),
        v=rng.uniform(-scale, scale, size=(model.n, model.k)),
        s=rng.uniform(-scale, scale, size=model.k),
    )

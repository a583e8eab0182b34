"""Exact jets vs pure finite differences of the Lagrangian density."""

import numpy as np
import pytest

from kcontact import (LagrangianModel, PhasePoint, builtin_models,
                      evaluate_jet, evaluate_jet_batch, fd_check,
                      random_phase_point)


@pytest.mark.parametrize("model", builtin_models(),
                         ids=lambda m: f"{m.name}-n{m.n}k{m.k}")
def test_fd_check_all_models(model):
    rng = np.random.default_rng(11)
    for _ in range(5):
        z = random_phase_point(model, rng)
        assert fd_check(model, z) < 1e-6


def test_jet_shapes():
    model = builtin_models()[3]  # string, n=2, k=2
    rng = np.random.default_rng(0)
    z = random_phase_point(model, rng)
    jet = evaluate_jet(model, z)
    n, k = model.n, model.k
    assert jet.dLdq.shape == (n,)
    assert jet.dLdv.shape == (n, k)
    assert jet.dLds.shape == (k,)
    assert jet.d2Ldvdv.shape == (n, k, n, k)
    assert jet.d2Ldvdq.shape == (n, k, n)
    assert jet.d2Ldvds.shape == (n, k, k)


def test_batch_matches_single():
    model = builtin_models()[2]  # membrane
    rng = np.random.default_rng(5)
    pts = [random_phase_point(model, rng) for _ in range(7)]
    q = np.stack([z.q for z in pts], axis=-1)
    v = np.stack([z.v for z in pts], axis=-1)
    s = np.stack([z.s for z in pts], axis=-1)
    jb = evaluate_jet_batch(model, q, v, s)
    for idx, z in enumerate(pts):
        js = evaluate_jet(model, z)
        assert jb.L[idx] == pytest.approx(js.L, rel=1e-14)
        assert np.allclose(jb.dLdv[..., idx], js.dLdv)
        assert np.allclose(jb.d2Ldvdv[..., idx], js.d2Ldvdv)
        assert np.allclose(jb.d2Ldvdq[..., idx], js.d2Ldvdq)


def test_multidim_batch_axes():
    model = builtin_models()[0]  # free n=1 k=2
    q = np.zeros((1, 3, 4))
    v = np.arange(24, dtype=float).reshape(1, 2, 3, 4)
    s = np.zeros((2, 3, 4))
    jet = evaluate_jet_batch(model, q, v, s)
    assert jet.L.shape == (3, 4)
    assert np.allclose(jet.L, 0.5 * (v ** 2).sum(axis=(0, 1)))
    assert np.allclose(jet.dLdv, v)


def test_phase_point_validation():
    with pytest.raises(ValueError, match="inconsistent"):
        PhasePoint(q=[0.0, 1.0], v=[[1.0, 2.0]], s=[0.0, 0.0])
    with pytest.raises(ValueError, match="non-finite"):
        PhasePoint(q=[np.nan], v=[[1.0]], s=[0.0])


def test_point_dim_mismatch_rejected():
    model = builtin_models()[2]
    z = PhasePoint(q=[0.0], v=[[1.0]], s=[0.0])
    with pytest.raises(ValueError, match="do not match"):
        evaluate_jet(model, z)


def test_constant_lagrangian():
    model = LagrangianModel(n=1, k=1, name="const",
                            lagrangian=lambda q, v, s: 2.5)
    z = PhasePoint(q=[0.3], v=[[0.7]], s=[0.1])
    jet = evaluate_jet(model, z)
    assert jet.L == 2.5
    assert np.all(jet.dLdv == 0.0)
    assert np.all(jet.d2Ldvdv == 0.0)


def test_fd_check_rejects_bad_step():
    model = builtin_models()[0]
    z = random_phase_point(model, np.random.default_rng(1))
    with pytest.raises(ValueError):
        fd_check(model, z, h=0.0)

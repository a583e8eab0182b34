"""Contact symmetries, dissipated quantities, and the dissipation law."""

import numpy as np
import pytest

from kcontact import (Grid, SimState, builtin_symmetry_field,
                      check_contact_symmetry, constant_field,
                      dissipated_quantity, dissipation_law_check, free,
                      lie_derivative_eta, membrane,
                      momentum_dissipation_check, random_phase_point,
                      reeb_bracket_check, run, string)
from kcontact.symmetry import SymmetryField


@pytest.fixture(scope="module")
def membrane_model():
    return membrane(mu=1.0, gamma=0.2)


@pytest.fixture(scope="module")
def membrane_points(membrane_model):
    rng = np.random.default_rng(42)
    return [random_phase_point(membrane_model, rng) for _ in range(100)]


@pytest.fixture(scope="module")
def membrane_trace(membrane_model):
    N = 25
    grid = Grid(bounds=((0, np.pi), (0, np.pi)), counts=(N, N))
    X, Y = grid.mesh()
    init = SimState(phi=(np.sin(X) * np.sin(Y))[None],
                    phidot=np.zeros((1, N, N)), s1=np.zeros((N, N)))
    dt = 0.4 * grid.spacing[0]
    return grid, run(membrane_model, grid, dt, 2.0, init, output_every=2)


class TestSymmetryCheck:
    def test_field_translation_is_symmetry(self, membrane_model,
                                           membrane_points):
        Y = builtin_symmetry_field(membrane_model, "du")
        res = check_contact_symmetry(membrane_model, Y, membrane_points)
        assert res["is_symmetry"]
        assert res["max_residual"] <= 1e-9

    def test_scaling_is_not_symmetry(self, membrane_model, membrane_points):
        Y = builtin_symmetry_field(membrane_model, "scaling")
        res = check_contact_symmetry(membrane_model, Y, membrane_points)
        assert not res["is_symmetry"]
        assert res["max_residual"] > 1e-3

    def test_rotation_of_magnetic_string(self):
        model = string(rho=1.0, tau=1.0, lam=0.1, gamma=0.3, B=1.0)
        rng = np.random.default_rng(7)
        pts = [random_phase_point(model, rng) for _ in range(100)]
        Y = builtin_symmetry_field(model, "paperY")
        res = check_contact_symmetry(model, Y, pts)
        assert res["max_residual"] <= 1e-9

    def test_finite_difference_jacobian_agrees(self, membrane_model,
                                               membrane_points):
        # same rotation-style field once with the exact Jacobian, once
        # finite-differenced
        model = string(rho=1.0, tau=2.0, lam=0.0, gamma=0.1, B=0.0)
        exact = builtin_symmetry_field(model, "paperY")
        fd = SymmetryField(n=2, k=2, Yq=exact.Yq, Yv=exact.Yv, Ys=exact.Ys)
        rng = np.random.default_rng(8)
        pts = [random_phase_point(model, rng) for _ in range(20)]
        q = np.stack([z.q for z in pts], axis=-1)
        v = np.stack([z.v for z in pts], axis=-1)
        s = np.stack([z.s for z in pts], axis=-1)
        for a, b in zip(lie_derivative_eta(model, exact, q, v, s),
                        lie_derivative_eta(model, fd, q, v, s)):
            assert np.max(np.abs(a - b)) < 1e-8

    def test_unknown_field_name(self, membrane_model):
        with pytest.raises(ValueError, match="unknown symmetry"):
            builtin_symmetry_field(membrane_model, "nope")


class TestReebBracket:
    def test_translation_commutes_with_reeb(self, membrane_model,
                                            membrane_points):
        Y = builtin_symmetry_field(membrane_model, "du")
        assert reeb_bracket_check(membrane_model, Y,
                                  membrane_points[:10]) <= 1e-9

    def test_scaling_commutes_too(self, membrane_model, membrane_points):
        # [u d/du, d/ds] = 0 even though scaling is not a contact symmetry
        Y = builtin_symmetry_field(membrane_model, "scaling")
        assert reeb_bracket_check(membrane_model, Y,
                                  membrane_points[:5]) <= 1e-9


class TestDissipatedQuantity:
    def test_membrane_current_components(self, membrane_model):
        # F = -i(Y) eta for Y = d/du gives (u_t, -mu^2 u_x, -mu^2 u_y)
        Y = builtin_symmetry_field(membrane_model, "du")
        F = dissipated_quantity(membrane_model, Y)
        z = random_phase_point(membrane_model, np.random.default_rng(3))
        vals = F(z)
        mu2 = membrane_model.params["mu"] ** 2
        assert np.allclose(vals, [z.v[0, 0], -mu2 * z.v[0, 1],
                                  -mu2 * z.v[0, 2]])

    def test_constant_field_with_s_component(self, membrane_model):
        Y = constant_field(membrane_model, Ys=[1.0, 0.0, 0.0])
        F = dissipated_quantity(membrane_model, Y)
        z = random_phase_point(membrane_model, np.random.default_rng(4))
        assert np.allclose(F(z), [-1.0, 0.0, 0.0])


class TestDissipationLaw:
    def test_law_holds_along_membrane_trace(self, membrane_model,
                                            membrane_trace):
        _, trace = membrane_trace
        Y = builtin_symmetry_field(membrane_model, "du")
        F = dissipated_quantity(membrane_model, Y)
        res = dissipation_law_check(membrane_model, F, trace)
        assert np.max(np.abs(res)) < 0.05  # O(h^2 + dt_out^2)

    def test_momentum_dissipation_cyclic(self, membrane_model,
                                         membrane_trace):
        _, trace = membrane_trace
        assert momentum_dissipation_check(membrane_model, 0,
                                          trace) < 0.05

    def test_non_cyclic_coordinate_rejected(self):
        model = string(rho=1.0, tau=1.0, lam=0.5, gamma=0.0, B=1.0)
        grid = Grid(bounds=((0, np.pi),), counts=(16,))
        Z = grid.mesh()[0]
        phi = np.zeros((2, 16))
        phi[0] = np.sin(Z)
        init = SimState(phi=phi, phidot=np.zeros((2, 16)),
                        s1=np.zeros(16))
        trace = run(model, grid, 0.05, 0.5, init)
        with pytest.raises(ValueError, match="not cyclic"):
            momentum_dissipation_check(model, 0, trace)

    def test_free_model_conserves(self):
        # gamma = 0: the law degenerates to a plain conservation law
        model = free(n=1, k=2)
        grid = Grid(bounds=((0, 2 * np.pi),), counts=(32,),
                    bc="periodic")
        Z = grid.mesh()[0]
        init = SimState(phi=np.sin(Z)[None],
                        phidot=np.zeros((1, 32)), s1=np.zeros(32))
        # NOTE: free has L = (v_t^2 + v_z^2)/2 (elliptic); integrate only
        # a very short time so nothing blows up, the law is pointwise
        trace = run(model, grid, 0.02, 0.2, init)
        Y = builtin_symmetry_field(model, "du")
        F = dissipated_quantity(model, Y)
        res = dissipation_law_check(model, F, trace)
        assert np.max(np.abs(res)) < 0.05

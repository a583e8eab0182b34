"""Euler-Lagrange residuals, evolution form, and SOPDE assembly."""

import numpy as np
import pytest

from kcontact import (LagrangianModel, NotRegularError, PhasePoint,
                      SecondJet, assemble_sopde, builtin_models,
                      damped_oscillator, el_residual, evolution_rhs,
                      membrane, random_phase_point, string, sv_coupling,
                      verify_sopde)
from kcontact.dynamics import gauge_s_velocities
from kcontact.errors import SimulationError


def membrane_second_jet(mu, gamma, u, ut, ux, uy, utt, uxx, uyy, s1):
    """Second jet of a membrane configuration with the s-gauge applied
    (s^t carries the density, the cross second derivatives vanish)."""
    z = PhasePoint(q=[u], v=[[ut, ux, uy]], s=[s1, 0.0, 0.0])
    a = np.zeros((1, 3, 3))
    a[0, 0, 0], a[0, 1, 1], a[0, 2, 2] = utt, uxx, uyy
    L = 0.5 * ut ** 2 - 0.5 * mu ** 2 * (ux ** 2 + uy ** 2) - gamma * s1
    dsdt = np.zeros((3, 3))
    dsdt[0, 0] = L
    return z, SecondJet(z=z, a=a, dsdt=dsdt)


class TestElResidual:
    def test_membrane_equation_recovered(self):
        # residual must equal u_tt - mu^2(u_xx + u_yy) + gamma*u_t
        mu, gamma = 1.3, 0.4
        model = membrane(mu=mu, gamma=gamma)
        vals = dict(u=0.2, ut=0.7, ux=-0.3, uy=0.5,
                    utt=0.9, uxx=-0.6, uyy=0.4, s1=0.25)
        z, sj = membrane_second_jet(mu, gamma, **vals)
        rEL, rS = el_residual(model, sj)
        expect = (vals["utt"] - mu ** 2 * (vals["uxx"] + vals["uyy"])
                  + gamma * vals["ut"])
        assert rEL[0] == pytest.approx(expect, abs=1e-13)
        assert rS == pytest.approx(0.0, abs=1e-13)

    def test_exact_solution_jet_has_zero_residual(self):
        # pick u_tt so the field equation holds
        mu, gamma = 1.0, 0.2
        model = membrane(mu=mu, gamma=gamma)
        uxx, uyy, ut = -0.6, 0.4, 0.7
        utt = mu ** 2 * (uxx + uyy) - gamma * ut
        z, sj = membrane_second_jet(mu, gamma, u=0.2, ut=ut, ux=-0.3,
                                    uy=0.5, utt=utt, uxx=uxx, uyy=uyy,
                                    s1=0.25)
        rEL, rS = el_residual(model, sj)
        assert abs(rEL[0]) < 1e-13 and abs(rS) < 1e-13

    def test_asymmetric_second_jet_rejected(self):
        z = PhasePoint(q=[0.0], v=[[0.0, 0.0]], s=[0.0, 0.0])
        a = np.zeros((1, 2, 2))
        a[0, 0, 1] = 1.0
        with pytest.raises(ValueError, match="symmetric"):
            SecondJet(z=z, a=a, dsdt=np.zeros((2, 2)))


class TestEvolutionRhs:
    def test_membrane_acceleration(self):
        mu, gamma = 1.5, 0.3
        model = membrane(mu=mu, gamma=gamma)
        z = PhasePoint(q=[0.1], v=[[0.7, -0.2, 0.4]], s=[0.05, 0.0, 0.0])
        spatial = np.array([[[-0.6, 0.1], [0.1, 0.3]]])
        mixed = np.array([[0.2, -0.1]])
        acc = evolution_rhs(model, z, spatial, mixed)
        expect = mu ** 2 * (spatial[0, 0, 0] + spatial[0, 1, 1]) \
            - gamma * z.v[0, 0]
        assert acc[0] == pytest.approx(expect, abs=1e-13)

    def test_string_coupled_accelerations(self):
        # with B != 0 the magnetic force couples the polarizations
        model = string(rho=2.0, tau=1.0, lam=0.5, gamma=0.0, B=1.0)
        z = PhasePoint(q=[0.3, -0.2], v=[[0.4, 0.1], [-0.3, 0.6]],
                       s=[0.0, 0.0])
        spatial = np.array([[[0.5]], [[-0.7]]])
        mixed = np.zeros((2, 1))
        acc = evolution_rhs(model, z, spatial, mixed)
        # rho*x_tt = tau*x_zz + lam*B*y_t, rho*y_tt = tau*y_zz - lam*B*x_t
        assert acc[0] == pytest.approx((0.5 + 0.5 * (-0.3)) / 2.0, abs=1e-13)
        assert acc[1] == pytest.approx((-0.7 - 0.5 * 0.4) / 2.0, abs=1e-13)

    def test_s_coupled_model_refused(self):
        model = sv_coupling(eps=0.1)
        z = PhasePoint(q=[0.0], v=[[1.0]], s=[0.2])
        with pytest.raises(SimulationError, match="s-coupled"):
            evolution_rhs(model, z, np.zeros((1, 0, 0)), np.zeros((1, 0)))

    def test_degenerate_time_block_refused(self):
        model = LagrangianModel(
            n=1, k=2, name="spaceonly",
            lagrangian=lambda q, v, s: 0.5 * v[0][1] * v[0][1])
        z = PhasePoint(q=[0.0], v=[[1.0, 1.0]], s=[0.0, 0.0])
        with pytest.raises(NotRegularError, match="direction t"):
            evolution_rhs(model, z, np.zeros((1, 1, 1)), np.zeros((1, 1)))


class TestSopde:
    @pytest.mark.parametrize("model", builtin_models(),
                             ids=lambda m: m.name)
    def test_assembled_coefficients_solve_equations(self, model):
        rng = np.random.default_rng(9)
        for _ in range(20):
            z = random_phase_point(model, rng)
            sopde = assemble_sopde(model, z)
            assert verify_sopde(model, z, sopde) <= 1e-9
            assert np.allclose(sopde.Gamma,
                               np.swapaxes(sopde.Gamma, 1, 2))

    def test_oscillator_brute_force(self):
        # for k=1 the system is determined: Gamma = -omega^2 q - gamma v
        gamma, omega = 0.3, 1.4
        model = damped_oscillator(gamma=gamma, omega=omega)
        z = PhasePoint(q=[0.6], v=[[-0.8]], s=[0.2])
        sopde = assemble_sopde(model, z)
        assert sopde.Gamma.reshape(()) == pytest.approx(
            -omega ** 2 * 0.6 - gamma * (-0.8), abs=1e-13)
        L = 0.5 * 0.64 - 0.5 * omega ** 2 * 0.36 - gamma * 0.2
        assert sopde.g.reshape(()) == pytest.approx(L, abs=1e-13)

    def test_pure_damping_case(self):
        # without the spring term, Gamma = -gamma*v exactly
        model = damped_oscillator(gamma=0.25, omega=0.0)
        z = PhasePoint(q=[1.1], v=[[0.4]], s=[-0.3])
        sopde = assemble_sopde(model, z)
        assert sopde.Gamma.reshape(()) == pytest.approx(-0.25 * 0.4,
                                                        abs=1e-14)

    def test_gauge_velocities(self):
        g = gauge_s_velocities(-2.5, 3)
        assert g[0, 0] == -2.5
        assert np.all(g.ravel()[1:] == 0.0)

    def test_irregular_point_rejected(self):
        model = LagrangianModel(n=1, k=1, name="linear",
                                lagrangian=lambda q, v, s: v[0][0])
        z = PhasePoint(q=[0.0], v=[[1.0]], s=[0.0])
        with pytest.raises(NotRegularError):
            assemble_sopde(model, z)

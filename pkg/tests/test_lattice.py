import math

import numpy as np
import pytest

from eprbfock import fock, lattice
from eprbfock.eprb import AnalyzerPair, unit
from eprbfock.errors import DomainError, PreconditionError, ResourceError
from eprbfock.field import Wavepacket
from eprbfock.lattice import LatticeConfig, LatticeScenario
from eprbfock.verify import lattice_refinement

import oracles

PAIR = AnalyzerPair(unit([0.4, -0.3, 0.8]), unit([-0.2, 0.7, 0.5]))


def _small(sites=4, eps=0.2, t=1.3, profile=None, spacing=1.0):
    config = LatticeConfig(sites, spacing, 0.8)
    kappa = np.linspace(0.3, 1.1, sites)
    return LatticeScenario(config, Wavepacket([0.5 * spacing], [0.6], 0.7, 0.8),
                           Wavepacket([2.0 * spacing], [-0.4], 0.7, 0.8),
                           kappa, eps, 0.0, t, PAIR, profile)


def _oracle(sc, profile=None):
    psi1, psi2 = sc.amplitudes
    return oracles.lattice_first_quantized(
        sc.config.sites, sc.config.spacing, sc.config.mass, psi1, psi2, sc.kappa,
        sc.epsilon, sc.t - sc.t0, PAIR.n1, PAIR.n2, profile)


class TestSingleParticle:
    def test_propagator_group_property(self):
        config = LatticeConfig(10, 0.7, 1.3)
        u = lattice.propagator
        np.testing.assert_allclose(u(config, 0.4) @ u(config, 1.1), u(config, 1.5), atol=1e-12)

    def test_propagator_matches_expm(self):
        config = LatticeConfig(7, 0.5, 2.0)
        ref = oracles.expm(-1j * 0.9 * lattice.hopping_matrix(config))
        np.testing.assert_allclose(lattice.propagator(config, 0.9), ref, atol=1e-12)

    def test_spectrum_diagonalizes_hopping(self):
        config = LatticeConfig(6, 1.2, 0.9)
        waves, energies = lattice.momentum_spectrum(config)
        np.testing.assert_allclose(waves.conj().T @ lattice.hopping_matrix(config) @ waves,
                                   np.diag(energies), atol=1e-13)

    def test_packet_normalized(self):
        psi = lattice.sample_packet(LatticeConfig(8), Wavepacket([7.5], [0.3], 0.5, 1.0))
        assert abs(np.linalg.norm(psi) - 1) <= 1e-15

    def test_config_validation(self):
        with pytest.raises(DomainError):
            LatticeConfig(1)
        with pytest.raises(PreconditionError):
            LatticeConfig(4, spacing=0.0)
        with pytest.raises(DomainError):
            LatticeConfig(4, boundary="open")


class TestExactCorrelation:
    @pytest.mark.parametrize("sites,eps,t", [(3, 0.3, 1.0), (4, 0.2, 1.3), (4, 1.0, 2.0)])
    def test_static_matches_first_quantized(self, sites, eps, t):
        sc = _small(sites, eps, t)
        assert abs(lattice.lattice_exact_correlation(sc) - _oracle(sc)) <= 1e-10

    def test_time_dependent_matches_first_quantized(self):
        profile = lambda t: math.exp(-((t - 0.6) / 0.4) ** 2)
        sc = _small(3, 0.5, 1.2, profile)
        assert abs(lattice.lattice_exact_correlation(sc) - _oracle(sc, profile)) <= 1e-6

    def test_zero_epsilon(self):
        sc = _small(eps=0.0)
        assert abs(lattice.lattice_exact_correlation(sc) + PAIR.zz) <= 1e-12

    def test_no_elapsed_time(self):
        sc = _small(t=0.0)
        assert abs(lattice.lattice_exact_correlation(sc) + PAIR.zz) <= 1e-12

    def test_site_budget(self):
        config = LatticeConfig(17)
        with pytest.raises(ResourceError):
            lattice.lattice_space(config)

    def test_largest_allowed_lattice_builds(self):
        assert lattice.lattice_space(LatticeConfig(16)).dim == 1024


class TestFirstOrder:
    def test_L_matches_quadrature_oracle(self):
        sc = _small(5, 0.1, 2.0, spacing=0.8)
        psi1, psi2 = sc.amplitudes
        ref = oracles.lattice_L_quad(5, 0.8, 0.8, psi1, psi2, sc.kappa, 2.0)
        assert abs(lattice.lattice_L(sc) - ref) <= 1e-10 * ref

    def test_zero_epsilon_perturbative(self):
        assert lattice.lattice_perturbative_correlation(_small(eps=0.0)) == -PAIR.zz

    def test_agrees_with_exact_at_small_epsilon(self):
        sc = lattice.default_scenario().with_epsilon(1e-3)
        exact = lattice.lattice_exact_correlation(sc)
        assert abs(exact - lattice.lattice_perturbative_correlation(sc)) <= 1e-5

    def test_residual_order(self):
        # the residual is odd in epsilon, so the leading correction is cubic
        fit = lattice.perturbation_residuals(lattice.default_scenario(), [1e-1, 3e-2, 1e-2, 3e-3])
        assert abs(fit.slope - 3.0) <= 0.1
        assert np.all(np.diff(fit.residuals) < 0)

    def test_residual_is_odd_in_epsilon(self):
        # C(eps) - C(0) flips sign with eps, so even orders vanish
        sc = lattice.default_scenario()
        c0 = lattice.lattice_exact_correlation(sc.with_epsilon(0.0))
        plus = lattice.lattice_exact_correlation(sc.with_epsilon(0.05))
        ops = lattice.build_operators(sc.config, sc.analyzers)
        psi = lattice.initial_state(ops.space, *sc.amplitudes)
        h = ops.h0 - 0.05 * lattice.interaction(ops, sc.coupling_at(0.0))
        minus = fock.expectation(fock.evolve(h, sc.t, psi), ops.xi).real
        assert abs(plus + minus - 2 * c0) <= 1e-12

    def test_single_epsilon_has_no_slope(self):
        fit = lattice.perturbation_residuals(lattice.default_scenario(), [0.01])
        assert fit.slope is None

    def test_refinement_approaches_continuum(self):
        values, cont = lattice_refinement()
        gaps = [abs(v - cont) for v in values]
        assert gaps[0] > gaps[1] > gaps[2]

    def test_continuum_needs_uniform_coupling(self):
        with pytest.raises(DomainError):
            lattice.continuum_L(_small())

import math

import numpy as np
import pytest

from eprbfock import fock, vacuum
from eprbfock.errors import DomainError, PreconditionError, ResourceError
from eprbfock.fock import Mode
from eprbfock.scenarios import ANALYZERS
from eprbfock.vacuum import PairAmplitude
from eprbfock.verify import time_invariance_error, transformed_algebra_error, vacuum_models

import oracles

MODELS = vacuum_models()


def _dense_W(space, pair):
    c1 = [(space.position(m), pair.amplitude(m)) for m in space.modes if (m.species, m.spin) == (1, 1)]
    c2 = [(space.position(m), pair.amplitude(m)) for m in space.modes if (m.species, m.spin) == (2, 2)]
    return oracles.dense_W(space.n_modes, c1, c2)


@pytest.fixture(params=list(MODELS))
def model(request):
    return MODELS[request.param]


# the dense Jordan-Wigner oracle holds one full matrix per mode, so it is
# limited to the models with at most 8 modes
@pytest.fixture(params=["four-mode", "two-site"])
def small_model(request):
    return MODELS[request.param]


class TestW:
    def test_matches_oracle(self, small_model):
        space, pair = small_model
        w_ref, _ = _dense_W(space, pair)
        np.testing.assert_allclose(vacuum.build_W(space, pair).dense(), w_ref, atol=1e-14)

    def test_skew_hermitian(self, model):
        w = vacuum.build_W(*model).dense()
        assert np.max(np.abs(w + w.conj().T)) <= 1e-12

    def test_vacuum_action(self, model):
        space, pair = model
        w = vacuum.build_W(space, pair)
        vac = space.vacuum()
        assert ((w @ vac) - vacuum.psi0(space, pair)).norm() <= 1e-12
        assert ((w @ (w @ vac)) + vac).norm() <= 1e-12

    def test_power_identities(self, model):
        for even, odd in vacuum.w_power_errors(*model, n_max=3):
            assert even <= 1e-10 and odd <= 1e-10


class TestV:
    @pytest.mark.parametrize("theta", [0.0, math.pi / 6, math.pi / 4, math.pi / 2, 1.1])
    def test_matches_expm_and_closed_form(self, small_model, theta):
        space, pair = small_model
        ref = oracles.expm_V(_dense_W(space, pair)[0], theta)
        v = vacuum.build_V(space, pair, theta)
        np.testing.assert_allclose(v.dense(), ref, atol=1e-12)
        np.testing.assert_allclose(vacuum.build_V_closed(space, pair, theta).dense(), ref, atol=1e-12)
        assert vacuum.unitarity_error(v) <= 1e-12

    def test_zero_angle_identity(self, model):
        np.testing.assert_allclose(vacuum.build_V(*model, 0.0).dense(), np.eye(model[0].dim), atol=1e-15)

    def test_quarter_turn_maps_vacuum_to_pair_state(self, model):
        space, pair = model
        v = vacuum.build_V(space, pair)
        target = vacuum.psi0(space, pair)
        assert ((v @ space.vacuum()) - target).norm() <= 1e-12
        assert ((v.adjoint() @ target) - space.vacuum()).norm() <= 1e-12

    def test_rotation(self, model):
        assert vacuum.rotation_error(*model, np.linspace(0, 2 * math.pi, 9)) <= 1e-12


class TestTransform:
    def test_identity_leaves_operator(self):
        space, pair = MODELS["two-site"]
        a = fock.ladder_operator(space, Mode(1, 1, 0))
        ident = vacuum.build_V(space, pair, 0.0)
        np.testing.assert_array_equal(vacuum.transform_operator(ident, a).dense(), a.dense())

    def test_non_unitary_rejected(self):
        space, _ = MODELS["four-mode"]
        a = fock.ladder_operator(space, Mode(1, 1))
        with pytest.raises(PreconditionError):
            vacuum.transform_operator(a, a)

    def test_spectrum_preserved(self):
        space, pair = MODELS["two-site"]
        n = fock.number_operator(space)
        nv = vacuum.transform_operator(vacuum.build_V(space, pair, 0.8), n)
        np.testing.assert_allclose(np.linalg.eigvalsh(nv.dense()), np.linalg.eigvalsh(n.dense()), atol=1e-12)

    @pytest.mark.parametrize("name", ["four-mode", "two-site"])
    def test_algebra_preserved(self, name):
        assert transformed_algebra_error(*MODELS[name]) <= 1e-12

    def test_matrix_element_invariance(self, model):
        space, pair = model
        obs = vacuum.default_observables(space, ANALYZERS)
        assert vacuum.invariance_error(space, pair, obs) <= 1e-10

    def test_invariance_over_time(self):
        assert time_invariance_error(*MODELS["two-site"]) <= 1e-10


class TestCommutator:
    def test_closed_form_matches_direct(self, model):
        space, pair = model
        for m in space.modes:
            diff = vacuum.commutator_phi_W(space, pair, m) - vacuum.commutator_phi_W_direct(space, pair, m)
            assert fock.max_abs_entry(diff) <= 1e-12

    def test_spin_down_species_one_is_zero(self):
        space, pair = MODELS["four-mode"]
        assert fock.max_abs_entry(vacuum.commutator_phi_W(space, pair, Mode(1, 2))) == 0

    def test_outside_support_is_zero(self):
        space, pair = MODELS["four-site"]
        assert fock.max_abs_entry(vacuum.commutator_phi_W_direct(space, pair, Mode(1, 1, 3))) <= 1e-15

    def test_inside_support_is_smeared_creation(self):
        space, pair = MODELS["four-site"]
        m = Mode(1, 1, 1)
        expected = pair.amplitude(m) * vacuum.smeared_creation(space, pair, 2)
        got = vacuum.commutator_phi_W_direct(space, pair, m)
        assert fock.max_abs_entry(got - expected) <= 1e-12
        assert fock.max_abs_entry(got) > 0.1


class TestLocality:
    def test_report_on_four_site_lattice(self):
        space, pair = MODELS["four-site"]
        report = vacuum.locality_support_check(space, pair)
        assert report.locality_violations == []
        assert report.rotation_error <= 1e-12
        assert report.invariance_error <= 1e-10
        for x in (2, 3):
            assert report.deviations[Mode(1, 1, x)] <= 1e-10
        for x in range(4):
            assert report.deviations[Mode(1, 2, x)] <= 1e-10
        for x in (0, 1):
            assert report.deviations[Mode(1, 1, x)] > 1e-3
        assert all(d >= 0 for d in report.deviations.values())

    def test_four_mode_model(self):
        space, pair = MODELS["four-mode"]
        report = vacuum.locality_support_check(space, pair)
        assert report.locality_violations == []
        assert report.deviations[Mode(1, 2)] <= 1e-10
        assert report.deviations[Mode(1, 1)] > 1e-3


class TestBCH:
    def test_converges(self, model):
        space, pair = model
        m = next(m for m in space.modes if pair.in_support(m))
        assert vacuum.bch_expansion_check(space, pair, m, 20) <= 1e-9

    def test_monotone_tail(self, model):
        space, pair = model
        for m in space.modes:
            if not pair.in_support(m):
                continue
            dev = vacuum.bch_deviations(space, pair, m, 20)
            for k in range(2, 19):
                assert dev[k + 2] <= dev[k] + 1e-15

    def test_zero_outside_support(self):
        space, pair = MODELS["four-site"]
        m = Mode(1, 1, 2)
        assert fock.max_abs_entry(vacuum.commutator_phi_W_direct(space, pair, m)) == 0
        # what remains is round-off in the exact conjugation
        assert np.all(vacuum.bch_deviations(space, pair, m, 8) <= 1e-14)

    def test_order_must_be_positive(self):
        space, pair = MODELS["four-mode"]
        with pytest.raises(DomainError):
            vacuum.bch_expansion_check(space, pair, Mode(1, 1), 0)


class TestPairAmplitude:
    def test_unit_norm_required(self):
        with pytest.raises(PreconditionError):
            PairAmplitude([1.0, 1.0], [1.0, 0.0])

    def test_support(self):
        pair = PairAmplitude.normalized([0.6, 0.8, 0, 0], [0, 1, 0, 0])
        assert pair.support(1, 1) == [0, 1]
        assert pair.support(2, 2) == [1]
        assert pair.support(1, 2) == []

    def test_mode_budget(self):
        with pytest.raises(ResourceError):
            vacuum.vacuum_space(4)

    def test_site_mismatch(self):
        space = vacuum.vacuum_space(2)
        with pytest.raises(DomainError):
            vacuum.build_W(space, PairAmplitude.normalized([1, 0, 0], [0, 1, 0]))

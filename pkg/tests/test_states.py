import math

import numpy as np
import pytest

from sagnacsim.states import (
    AnalysisSettings,
    TwoPhotonState,
    apply_phase_modulators,
    coincidence_probabilities,
    correlation_coefficient,
    make_source_state,
)

import oracles

SQRT2 = math.sqrt(2.0)


def bell_state(gamma=1.0, phi=0.0):
    return make_source_state(math.pi / 4, phi, gamma)


class TestMakeSourceState:
    def test_balanced_split_gives_maximally_entangled_state(self):
        state = bell_state()
        assert state.alpha == pytest.approx(1 / SQRT2)
        assert state.beta == pytest.approx(1 / SQRT2)
        assert state.phi == 0.0
        assert state.gamma == 1.0

    def test_zero_angle_is_pure_vv(self):
        state = make_source_state(0.0, 0.0, 1.0)
        assert state.alpha == 1.0
        assert state.beta == 0.0
        rho = state.density_matrix()
        assert rho[3, 3] == pytest.approx(1.0)
        assert np.count_nonzero(rho) == 1

    def test_partial_coherence_off_diagonal_and_psd(self):
        # (pi/4, 0.3, 0.5): off-diagonal magnitude gamma*alpha*beta = 0.25.
        state = make_source_state(math.pi / 4, 0.3, 0.5)
        rho = state.density_matrix()
        assert abs(rho[0, 3]) == pytest.approx(0.25, abs=1e-12)
        eigenvalues = np.linalg.eigvalsh(oracles.density_matrix(state.alpha, state.beta, 0.3, 0.5))
        assert eigenvalues.min() >= -1e-12

    def test_gamma_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            make_source_state(math.pi / 4, 0.0, 1.5)
        with pytest.raises(ValueError):
            make_source_state(math.pi / 4, 0.0, -0.1)

    def test_unnormalized_amplitudes_rejected(self):
        with pytest.raises(ValueError):
            TwoPhotonState(alpha=0.8, beta=0.8, phi=0.0, gamma=1.0)


class TestPhaseModulators:
    def test_identity(self):
        state = bell_state()
        assert apply_phase_modulators(state, AnalysisSettings(0.0, 0.0)) == state

    def test_additive_phases(self):
        out = apply_phase_modulators(bell_state(), AnalysisSettings(-math.pi / 2, math.pi / 4))
        assert out.phi == pytest.approx(-math.pi / 4)

    def test_amplitudes_unchanged(self):
        state = TwoPhotonState(alpha=0.6, beta=0.8, phi=0.1, gamma=1.0)
        out = apply_phase_modulators(state, AnalysisSettings(0.2, 0.3))
        assert out.phi == pytest.approx(0.6)
        assert (out.alpha, out.beta, out.gamma) == (0.6, 0.8, 1.0)

    def test_phase_additivity_composes(self):
        state = TwoPhotonState(alpha=0.6, beta=0.8, phi=0.1, gamma=0.7)
        a = AnalysisSettings(0.3, -1.2)
        b = AnalysisSettings(-0.8, 2.5)
        combined = AnalysisSettings(a.phi_s + b.phi_s, a.phi_i + b.phi_i)
        stepwise = apply_phase_modulators(apply_phase_modulators(state, a), b)
        direct = apply_phase_modulators(state, combined)
        assert stepwise.phi == pytest.approx(direct.phi, abs=1e-12)

    def test_wrapped_reporting(self):
        settings = AnalysisSettings(-math.pi / 2, 5 * math.pi / 2)
        wrapped = settings.wrapped()
        assert wrapped[0] == pytest.approx(3 * math.pi / 2)
        assert wrapped[1] == pytest.approx(math.pi / 2)


class TestCoincidenceProbabilities:
    def test_perfect_correlation(self):
        probs = coincidence_probabilities(bell_state())
        assert probs["VV"] == pytest.approx(0.5)
        assert probs["HH"] == pytest.approx(0.5)
        assert probs["VH"] == pytest.approx(0.0)
        assert probs["HV"] == pytest.approx(0.0)

    def test_fully_distinguishable_is_flat(self):
        probs = coincidence_probabilities(bell_state(gamma=0.0))
        assert all(p == pytest.approx(0.25) for p in probs.values())

    def test_partial_coherence_example(self):
        # gamma=0.9, phi=pi/3 -> C = 0.45 -> {0.3625, 0.3625, 0.1375, 0.1375}
        probs = coincidence_probabilities(bell_state(gamma=0.9, phi=math.pi / 3))
        oracle = oracles.outcome_probabilities(1 / SQRT2, 1 / SQRT2, math.pi / 3, 0.9)
        assert oracle["VV"] == pytest.approx(0.3625, abs=1e-12)
        for outcome in ("VV", "HH", "VH", "HV"):
            assert probs[outcome] == pytest.approx(oracle[outcome], abs=1e-10)

    def test_matches_projection_oracle_on_random_states(self):
        rng = np.random.default_rng(41)
        for _ in range(1000):
            angle = rng.uniform(0, math.pi / 2)
            state = make_source_state(angle, rng.uniform(-math.pi, math.pi), rng.uniform(0, 1))
            probs = coincidence_probabilities(state)
            oracle = oracles.outcome_probabilities(state.alpha, state.beta, state.phi, state.gamma)
            for outcome, value in probs.items():
                assert value == pytest.approx(oracle[outcome], abs=1e-10)
            assert sum(probs.values()) == pytest.approx(1.0, abs=1e-12)

    def test_density_matrix_legality_on_random_states(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            angle = rng.uniform(0, math.pi / 2)
            state = make_source_state(angle, rng.uniform(-math.pi, math.pi), rng.uniform(0, 1))
            rho = state.density_matrix()
            assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
            assert np.allclose(rho, rho.conj().T)
            assert np.linalg.eigvalsh(rho).min() >= -1e-12


class TestCorrelationCoefficient:
    def test_perfect(self):
        assert correlation_coefficient(bell_state(), AnalysisSettings(0, 0)) == pytest.approx(1.0)

    def test_quadrature(self):
        value = correlation_coefficient(bell_state(), AnalysisSettings(0, math.pi / 2))
        assert value == pytest.approx(0.0, abs=1e-12)

    def test_partial_coherence_example(self):
        # gamma=0.95 at (-pi/2, 3pi/4): E = 0.95 cos(pi/4).
        state = bell_state(gamma=0.95)
        settings = AnalysisSettings(-math.pi / 2, 3 * math.pi / 4)
        oracle = oracles.correlation(state.alpha, state.beta, 0.0, 0.95, *settings.wrapped())
        assert oracle == pytest.approx(0.95 * math.cos(math.pi / 4), abs=1e-12)
        assert correlation_coefficient(state, settings) == pytest.approx(0.6718, abs=5e-5)
        assert correlation_coefficient(state, settings) == pytest.approx(oracle, abs=1e-10)

    def test_bounded(self):
        rng = np.random.default_rng(43)
        for _ in range(200):
            state = make_source_state(
                rng.uniform(0, math.pi / 2), rng.uniform(-math.pi, math.pi), rng.uniform(0, 1)
            )
            settings = AnalysisSettings(rng.uniform(-math.pi, math.pi), rng.uniform(-math.pi, math.pi))
            assert abs(correlation_coefficient(state, settings)) <= 1.0 + 1e-12


class TestTsirelsonBound:
    def test_random_states_and_settings(self):
        rng = np.random.default_rng(44)
        bound = 2 * SQRT2 + 1e-9
        for _ in range(10_000):
            state = make_source_state(
                rng.uniform(0, math.pi / 2), rng.uniform(-math.pi, math.pi), rng.uniform(0, 1)
            )
            a = rng.uniform(-math.pi, math.pi, 2)
            b = rng.uniform(-math.pi, math.pi, 2)
            s = (
                correlation_coefficient(state, AnalysisSettings(a[0], b[0]))
                - correlation_coefficient(state, AnalysisSettings(a[0], b[1]))
                + correlation_coefficient(state, AnalysisSettings(a[1], b[0]))
                + correlation_coefficient(state, AnalysisSettings(a[1], b[1]))
            )
            assert abs(s) <= bound

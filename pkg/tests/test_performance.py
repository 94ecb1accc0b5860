import pytest

from sagnacsim.performance import (
    SourceBudget,
    emission_bandwidth_ghz,
    heralding_efficiency,
    pairs_per_coherence_time,
    pump_photon_flux_per_mw,
    spectral_brightness,
    total_pair_rate,
)


@pytest.fixture
def budget():
    return SourceBudget(
        downconversion_efficiency=2.5e-6,
        emission_bandwidth_nm=40.0,
        emission_center_nm=1560.0,
        pump_wavelength_nm=780.0,
        propagation_loss_db=3.5,
    )


class TestSpectralBrightness:
    def test_reference_arithmetic(self, budget):
        # Oracle chain: 2.5e-6 pairs/photon * 3.93e15 photons/(s mW)
        # / 4931 GHz = 1.99e6 pairs/(s mW GHz).
        assert pump_photon_flux_per_mw(780.0) == pytest.approx(3.93e15, rel=2e-3)
        assert emission_bandwidth_ghz(budget) == pytest.approx(4931.0, rel=1e-3)
        assert spectral_brightness(budget) == pytest.approx(1.99e6, rel=5e-3)
        # Within 5% of the 1.96e6 headline value.
        assert spectral_brightness(budget) == pytest.approx(1.96e6, rel=0.05)

    def test_zero_efficiency(self, budget):
        zero = SourceBudget(0.0, 40.0, 1560.0, 780.0, 3.5)
        assert spectral_brightness(zero) == 0.0

    def test_inverse_in_bandwidth(self, budget):
        doubled = SourceBudget(2.5e-6, 80.0, 1560.0, 780.0, 3.5)
        assert spectral_brightness(doubled) == pytest.approx(spectral_brightness(budget) / 2)

    def test_zero_bandwidth_rejected(self):
        bad = SourceBudget(2.5e-6, 0.0, 1560.0, 780.0, 3.5)
        with pytest.raises(ValueError):
            spectral_brightness(bad)

    def test_round_trip_identity(self, budget):
        # brightness * power * bandwidth == efficiency * photon flux * power.
        power = 37.0
        lhs = spectral_brightness(budget) * power * emission_bandwidth_ghz(budget)
        rhs = total_pair_rate(budget, power)
        assert lhs == pytest.approx(rhs, rel=1e-9)


class TestPairsPerCoherenceTime:
    def test_reference_point(self):
        assert pairs_per_coherence_time(1.96e6, 116.0, 0.44) == pytest.approx(0.100, abs=5e-4)

    def test_zero_power(self):
        assert pairs_per_coherence_time(1.96e6, 0.0) == 0.0

    def test_linear_in_power(self):
        single = pairs_per_coherence_time(1.96e6, 10.0)
        assert pairs_per_coherence_time(1.96e6, 20.0) == pytest.approx(2 * single)

    def test_invalid_convention(self):
        with pytest.raises(ValueError):
            pairs_per_coherence_time(1.96e6, 116.0, 0.0)


class TestHeraldingEfficiency:
    def test_current_filters(self):
        assert heralding_efficiency(6.5) == pytest.approx(0.224, abs=1e-3)

    def test_upgraded_filters_near_half(self):
        value = heralding_efficiency(3.5)
        assert value == pytest.approx(0.447, abs=1e-3)
        assert 0.42 <= value <= 0.50

    def test_lossless(self):
        assert heralding_efficiency(0.0) == 1.0

    def test_negative_loss_rejected(self):
        with pytest.raises(ValueError):
            heralding_efficiency(-0.1)

    def test_strictly_decreasing(self):
        values = [heralding_efficiency(db) for db in (0.0, 1.0, 2.0, 4.0, 8.0, 16.0)]
        assert all(b < a for a, b in zip(values, values[1:]))


class TestBudgetValidation:
    def test_efficiency_bounds(self):
        with pytest.raises(ValueError):
            SourceBudget(1.5, 40.0, 1560.0, 780.0, 3.5)
        with pytest.raises(ValueError):
            SourceBudget(-0.1, 40.0, 1560.0, 780.0, 3.5)

    def test_negative_loss(self):
        with pytest.raises(ValueError):
            SourceBudget(2.5e-6, 40.0, 1560.0, 780.0, -1.0)

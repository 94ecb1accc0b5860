import math

import numpy as np
import pytest

from sagnacsim.dispersion import (
    DispersionFitResult,
    LengthScan,
    RulerCurve,
    build_ruler,
    dispersion_coefficient,
    fit_dispersion,
    fit_scaling_factor,
    read_ruler_csv,
    read_scan_csv,
    sensitivity_report,
    write_fit_json,
    write_ruler_csv,
    write_scan_csv,
)
from sagnacsim.errors import DataError
from sagnacsim.spectral import SpectralFilter, build_biphoton_spectrum, coherence_function

import oracles


@pytest.fixture(scope="module")
def one_nm_spectrum():
    return build_biphoton_spectrum(
        SpectralFilter(1574.0, 1.0, "supergaussian"),
        SpectralFilter(1546.0, 1.0, "supergaussian"),
        780.0,
    )


@pytest.fixture(scope="module")
def ruler(one_nm_spectrum):
    return build_ruler(one_nm_spectrum, max_delay_ps=20.0, n_samples=200)


def scan_from_ruler(ruler, lengths, scaling, noise_sigma=0.0, rng=None):
    lengths = np.asarray(lengths, dtype=float)
    clean = ruler.value(scaling * lengths)
    if noise_sigma > 0.0:
        clean = np.clip(clean + rng.normal(0.0, noise_sigma, lengths.size), 0.0, 1.0)
    return LengthScan(
        delta_l_m=lengths,
        visibility=np.asarray(clean, dtype=float),
        visibility_sigma=np.full(lengths.size, max(noise_sigma, 1e-9)),
    )


class TestBuildRuler:
    def test_rectangular_ruler_crosses_half_near_4p8ps(self):
        # Oracle: |sinc| of a ~121 GHz rectangle crosses 0.5 at 4.98 ps;
        # a 125 GHz one at 4.83 ps ("about 4-5 ps" scale).
        spectrum = build_biphoton_spectrum(
            SpectralFilter(1574.0, 1.0, "rectangular"),
            SpectralFilter(1546.0, 1.0, "rectangular"),
            780.0,
        )
        curve = build_ruler(spectrum, max_delay_ps=12.0, n_samples=1200)
        crossing = curve.delta_t_ps[np.argmin(np.abs(curve.visibility - 0.5))]
        ts = np.linspace(3.0, 7.0, 4000)
        oracle_crossing = ts[np.argmin(np.abs(oracles.rect_coherence(121.0e9, ts) - 0.5))]
        assert crossing == pytest.approx(oracle_crossing, abs=0.1)
        assert 4.0 < crossing < 5.5

    def test_degenerate_single_sample(self):
        curve = build_ruler(None, max_delay_ps=0.0, n_samples=1, zero_delay_visibility=0.9)
        assert curve.delta_t_ps.tolist() == [0.0]
        assert curve.visibility.tolist() == [0.9]

    def test_removing_filters_shrinks_resolution_20_to_40x(self, one_nm_spectrum):
        wide = build_biphoton_spectrum(
            SpectralFilter(1574.0, 40.0, "supergaussian"),
            SpectralFilter(1546.0, 40.0, "supergaussian"),
            780.0,
        )
        narrow_curve = build_ruler(one_nm_spectrum, 12.0, 2400)
        wide_curve = build_ruler(wide, 0.3, 2400)
        t_half_narrow = narrow_curve.delta_t_ps[np.argmin(np.abs(narrow_curve.visibility - 0.5))]
        t_half_wide = wide_curve.delta_t_ps[np.argmin(np.abs(wide_curve.visibility - 0.5))]
        ratio = t_half_narrow / t_half_wide
        assert 20.0 <= ratio <= 41.0
        assert ratio == pytest.approx(40.0, rel=0.05)  # pure bandwidth scaling

    def test_sample_count_guard(self, one_nm_spectrum):
        with pytest.raises(ValueError):
            build_ruler(one_nm_spectrum, 10.0, 8)

    def test_ruler_validation(self):
        with pytest.raises(ValueError, match="zero delay"):
            RulerCurve(np.array([1.0, 2.0]), np.array([1.0, 0.5]))
        with pytest.raises(ValueError, match="increasing"):
            RulerCurve(np.array([0.0, 2.0, 1.0]), np.array([1.0, 0.5, 0.4]))
        with pytest.raises(ValueError, match="maximum"):
            RulerCurve(np.array([0.0, 1.0]), np.array([0.5, 0.9]))

    def test_interpolation_exact_at_samples_and_monotone_between(self, ruler):
        assert np.allclose(ruler.value(ruler.delta_t_ps), ruler.visibility, atol=1e-12)
        # Linear interpolation stays within the bracketing samples.
        midpoints = 0.5 * (ruler.delta_t_ps[:-1] + ruler.delta_t_ps[1:])
        values = ruler.value(midpoints)
        lower = np.minimum(ruler.visibility[:-1], ruler.visibility[1:])
        upper = np.maximum(ruler.visibility[:-1], ruler.visibility[1:])
        assert np.all(values >= lower - 1e-12)
        assert np.all(values <= upper + 1e-12)

    def test_out_of_range_is_ruler_too_short(self, ruler):
        with pytest.raises(DataError, match="ruler too short"):
            ruler.value(25.0)


class TestFitScalingFactor:
    def test_noiseless_self_consistency(self, ruler):
        scan = scan_from_ruler(ruler, [0, 2, 4, 8, 16, 32], 0.47)
        fit = fit_scaling_factor(scan, ruler)
        assert fit.scaling_ps_per_m == pytest.approx(0.47, abs=1e-6)
        assert fit.residual_sse < 1e-12

    def test_noisy_coverage_with_spec_lengths(self, ruler):
        # 0.02 visibility noise on {0,2,4,8,16,32} m: the recovered
        # scaling is within 2 reported sigma in >= 90 of 100 trials.
        rng = np.random.default_rng(2024)
        successes = 0
        for _ in range(100):
            scan = scan_from_ruler(ruler, [0, 2, 4, 8, 16, 32], 0.47, 0.02, rng)
            fit = fit_scaling_factor(scan, ruler)
            if abs(fit.scaling_ps_per_m - 0.47) <= 2 * fit.scaling_sigma_ps_per_m:
                successes += 1
        assert successes >= 90

    def test_all_zero_lengths_unidentifiable(self, ruler):
        scan = LengthScan(
            delta_l_m=np.zeros(4),
            visibility=np.full(4, 0.97),
            visibility_sigma=np.full(4, 0.02),
        )
        with pytest.raises(DataError, match="unidentifiable"):
            fit_scaling_factor(scan, ruler)

    def test_ruler_too_short_detected(self, one_nm_spectrum):
        short_ruler = build_ruler(one_nm_spectrum, 3.0, 64)
        lengths = np.array([0.0, 8.0, 16.0, 32.0])
        # True delays extend far beyond the 3 ps ruler.
        visibility = np.array([1.0, 0.7, 0.2, 0.05])
        scan = LengthScan(lengths, visibility, np.full(4, 0.02))
        with pytest.raises(DataError, match="ruler too short"):
            fit_scaling_factor(scan, short_ruler)

    def test_scale_consistency(self, ruler):
        lengths = np.array([0.0, 2.0, 4.0, 8.0, 16.0, 32.0])
        base = fit_scaling_factor(scan_from_ruler(ruler, lengths, 0.47), ruler)
        scaled = fit_scaling_factor(scan_from_ruler(ruler, lengths * 2.0, 0.235), ruler)
        products_base = base.scaling_ps_per_m * lengths
        products_scaled = scaled.scaling_ps_per_m * lengths * 2.0
        assert np.allclose(products_base, products_scaled, rtol=1e-5)

    def test_local_minimum_certificate(self, ruler):
        rng = np.random.default_rng(5)
        scan = scan_from_ruler(ruler, [0, 2, 4, 8, 16, 32], 0.47, 0.02, rng)
        fit = fit_scaling_factor(scan, ruler)
        sse_at = lambda r: float(np.sum((scan.visibility - ruler.value(r * scan.delta_l_m)) ** 2))
        center = sse_at(fit.scaling_ps_per_m)
        assert center <= sse_at(fit.scaling_ps_per_m * (1 + 1e-3)) + 1e-15
        assert center <= sse_at(fit.scaling_ps_per_m * (1 - 1e-3)) + 1e-15

    def test_one_sided_offsets_reported(self, ruler):
        rng = np.random.default_rng(6)
        scan = scan_from_ruler(ruler, [0, 2, 4, 8, 16, 32], 0.47, 0.02, rng)
        fit = fit_scaling_factor(scan, ruler)
        low, high = fit.one_sided_ps_per_m
        assert low > 0 and high > 0
        assert fit.scaling_sigma_ps_per_m == pytest.approx(0.5 * (low + high))


class TestDispersionCoefficient:
    def test_normalisation_by_wavelength_separation(self):
        value, sigma = dispersion_coefficient(0.47, 0.06, 28.0)
        assert value == pytest.approx(16.79, abs=0.01)
        assert sigma == pytest.approx(2.14, abs=0.01)

    def test_zero_scaling(self):
        assert dispersion_coefficient(0.0, 0.0, 28.0) == (0.0, 0.0)

    def test_linearity(self):
        single, _ = dispersion_coefficient(0.47, 0.0, 28.0)
        double, _ = dispersion_coefficient(0.94, 0.0, 28.0)
        assert double == pytest.approx(2 * single)

    def test_invalid_separation(self):
        with pytest.raises(ValueError):
            dispersion_coefficient(0.47, 0.06, 0.0)


class TestFitDispersion:
    def test_noiseless_round_trip_reproduces_generator(self, ruler):
        scan = scan_from_ruler(ruler, [0, 1, 2, 3, 4, 5, 28, 32], 0.47)
        result = fit_dispersion(scan, ruler, 28.0)
        generated = 1e3 * 0.47 / 28.0
        assert result.dispersion_ps_nm_km == pytest.approx(generated, rel=0.01)
        assert isinstance(result, DispersionFitResult)

    def test_fit_json_schema(self, ruler, tmp_path):
        import json

        rng = np.random.default_rng(9)
        scan = scan_from_ruler(ruler, [0, 2, 4, 8, 16, 32], 0.47, 0.02, rng)
        result = fit_dispersion(scan, ruler, 28.0)
        path = tmp_path / "fit.json"
        write_fit_json(path, result)
        payload = json.loads(path.read_text())
        assert set(payload) == {"R", "R_sigma", "D", "D_sigma", "delta_lambda", "residual_sse", "one_sided_sigmas"}
        assert payload["D"] == pytest.approx(result.dispersion_ps_nm_km)


class TestSensitivityReport:
    def test_delay_linearity_and_ordering(self, one_nm_spectrum):
        rows = sensitivity_report(one_nm_spectrum, [56.0, 14.0, 28.0], 16.0, 16.79)
        separations = [row.delta_lambda_nm for row in rows]
        assert separations == sorted(separations)
        by_sep = {row.delta_lambda_nm: row for row in rows}
        assert by_sep[28.0].delta_t_ps == pytest.approx(7.52, abs=0.01)
        assert by_sep[56.0].delta_t_ps == pytest.approx(2 * by_sep[28.0].delta_t_ps)

    def test_visibility_non_increasing_on_main_lobe(self, one_nm_spectrum):
        # Options chosen so all delays stay on the main lobe of gamma.
        rows = sensitivity_report(one_nm_spectrum, [2.0, 6.0, 10.0, 14.0, 18.0], 16.0, 16.79)
        visibilities = [row.visibility for row in rows]
        assert all(b <= a + 1e-9 for a, b in zip(visibilities, visibilities[1:]))

    def test_empty_options_rejected(self, one_nm_spectrum):
        with pytest.raises(ValueError):
            sensitivity_report(one_nm_spectrum, [], 16.0, 16.79)


class TestDispersionIo:
    def test_ruler_csv_round_trip_byte_identical(self, ruler, tmp_path):
        first = tmp_path / "ruler.csv"
        write_ruler_csv(first, ruler)
        read_back = read_ruler_csv(first)
        second = tmp_path / "ruler2.csv"
        write_ruler_csv(second, read_back)
        assert first.read_bytes() == second.read_bytes()
        assert np.allclose(read_back.visibility, ruler.visibility)

    def test_scan_csv_round_trip_byte_identical(self, ruler, tmp_path):
        rng = np.random.default_rng(3)
        scan = scan_from_ruler(ruler, [0, 2, 4, 8], 0.47, 0.02, rng)
        first = tmp_path / "scan.csv"
        write_scan_csv(first, scan)
        read_back = read_scan_csv(first)
        second = tmp_path / "scan2.csv"
        write_scan_csv(second, read_back)
        assert first.read_bytes() == second.read_bytes()

    def test_imported_ruler_gives_identical_fit(self, ruler, tmp_path):
        # Export the analytic ruler, re-import it as a "measured" ruler:
        # the fit must be bit-identical.
        path = tmp_path / "ruler.csv"
        write_ruler_csv(path, ruler)
        imported = read_ruler_csv(path)
        rng = np.random.default_rng(8)
        scan = scan_from_ruler(ruler, [0, 2, 4, 8, 16, 32], 0.47, 0.02, rng)
        fit_analytic = fit_dispersion(scan, ruler, 28.0)
        fit_imported = fit_dispersion(scan, imported, 28.0)
        assert fit_imported == fit_analytic

"""Monte Carlo generation of time-tagged detections and coincidence histograms.

Pairs are emitted as a Poisson process; each pair picks one of the four
detector-pair outcomes from the diagonal-basis statistics of the state.
Photons are thinned by detector efficiency, smeared by Gaussian timing
jitter, merged with independent dark counts and filtered by a
non-paralyzable deadtime per detector. Signal-idler time differences are
binned at the TDC bin width into one histogram per detector pair.

The acquisition interval can be sharded; each shard draws from an RNG
stream derived deterministically from (rng_seed, shard index), so a
sharded run merges to bit-identical histograms regardless of how the
shards are evaluated. Triggered gating of the idler detectors is not
modelled; it is absorbed into the effective efficiency plus the
coincidence windowing, which leaves the normalized coincidence
observables unchanged.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from . import csvio
from .errors import DataError
from .states import (
    DETECTOR_LABELS,
    OUTCOME_DETECTORS,
    OUTCOMES,
    AnalysisSettings,
    TwoPhotonState,
    apply_phase_modulators,
    coincidence_probabilities,
)

GAUSS_FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))

#: Detector pairs in outcome order; histogram keys are "sV-iV" etc.
PAIR_LABELS = tuple("-".join(OUTCOME_DETECTORS[o]) for o in OUTCOMES)


@dataclass(frozen=True)
class DetectorSpec:
    """Single-photon detector: efficiency, dark rate, deadtime, jitter.

    The 100 ps default jitter FWHM is a configurable stand-in; typical
    InGaAs detectors resolve at roughly that scale.
    """

    efficiency: float
    dark_count_rate_hz: float = 0.0
    deadtime_us: float = 0.0
    timing_jitter_fwhm_ps: float = 100.0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in [0, 1]")
        if self.dark_count_rate_hz < 0.0:
            raise ValueError("dark_count_rate_hz must be non-negative")
        if self.deadtime_us < 0.0:
            raise ValueError("deadtime_us must be non-negative")
        if self.timing_jitter_fwhm_ps < 0.0:
            raise ValueError("timing_jitter_fwhm_ps must be non-negative")

    def jitter_sigma_s(self) -> float:
        return self.timing_jitter_fwhm_ps * 1e-12 * GAUSS_FWHM_TO_SIGMA


@dataclass(frozen=True)
class TdcSpec:
    """Time-to-digital converter: bin width and coincidence window."""

    bin_width_ps: float = 81.0
    coincidence_window_bins: int = 4

    def __post_init__(self):
        if self.bin_width_ps <= 0.0:
            raise ValueError("bin_width_ps must be positive")
        if self.coincidence_window_bins < 1:
            raise ValueError("coincidence_window_bins must be at least 1")

    def window_ps(self) -> float:
        return self.bin_width_ps * self.coincidence_window_bins


@dataclass(eq=False)
class CoincidenceHistogram:
    """Binned signal-idler time differences for one detector pair."""

    detector_pair: tuple[str, str]
    bin_edges_ps: np.ndarray
    counts: np.ndarray
    acquisition_time_s: float

    def __post_init__(self):
        edges = np.asarray(self.bin_edges_ps, dtype=float)
        counts = np.asarray(self.counts, dtype=np.int64)
        if edges.ndim != 1 or counts.ndim != 1 or counts.size != edges.size - 1:
            raise ValueError("counts length must equal len(bin_edges_ps) - 1")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        if self.acquisition_time_s <= 0.0:
            raise ValueError("acquisition_time_s must be positive")
        self.bin_edges_ps = edges
        self.counts = counts


@dataclass(frozen=True)
class ExperimentRun:
    """Everything needed to reproduce one acquisition deterministically."""

    state: TwoPhotonState
    pair_rate_hz: float
    detectors: Mapping[str, DetectorSpec]
    tdc: TdcSpec
    settings: AnalysisSettings
    acquisition_time_s: float
    rng_seed: int
    histogram_bins: int = 1000
    n_shards: int = 1

    def __post_init__(self):
        if self.pair_rate_hz < 0.0:
            raise ValueError("pair_rate_hz must be non-negative")
        if self.acquisition_time_s <= 0.0:
            raise ValueError("acquisition_time_s must be positive")
        if set(self.detectors) != set(DETECTOR_LABELS):
            raise ValueError(f"detectors must be keyed by {DETECTOR_LABELS}")
        if self.histogram_bins < 2 or self.histogram_bins % 2:
            raise ValueError("histogram_bins must be an even integer >= 2")
        if self.n_shards < 1:
            raise ValueError("n_shards must be at least 1")


def _shard_rng(seed: int, shard: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(shard,)))


def _simulate_shard(run: ExperimentRun, shard: int) -> dict[str, np.ndarray]:
    """Raw (pre-deadtime) detection times per detector for one shard."""
    rng = _shard_rng(run.rng_seed, shard)
    t_lo = run.acquisition_time_s * shard / run.n_shards
    t_hi = run.acquisition_time_s * (shard + 1) / run.n_shards
    duration = t_hi - t_lo

    probs = coincidence_probabilities(apply_phase_modulators(run.state, run.settings))
    cumulative = np.cumsum([probs[o] for o in OUTCOMES])
    cumulative[-1] = 1.0  # guard against rounding

    events: dict[str, list[np.ndarray]] = {d: [] for d in DETECTOR_LABELS}

    n_pairs = rng.poisson(run.pair_rate_hz * duration)
    if n_pairs:
        emission = rng.uniform(t_lo, t_hi, n_pairs)
        outcome_idx = np.searchsorted(cumulative, rng.random(n_pairs), side="right")
        for k, outcome in enumerate(OUTCOMES):
            mask = outcome_idx == k
            if not mask.any():
                continue
            det_s, det_i = OUTCOME_DETECTORS[outcome]
            times = emission[mask]
            for det in (det_s, det_i):
                spec = run.detectors[det]
                detected = times[rng.random(times.size) < spec.efficiency]
                if detected.size and spec.timing_jitter_fwhm_ps > 0.0:
                    detected = detected + rng.normal(0.0, spec.jitter_sigma_s(), detected.size)
                events[det].append(detected)

    for det in DETECTOR_LABELS:
        spec = run.detectors[det]
        n_dark = rng.poisson(spec.dark_count_rate_hz * duration)
        if n_dark:
            events[det].append(rng.uniform(t_lo, t_hi, n_dark))

    return {
        det: (np.concatenate(chunks) if chunks else np.empty(0)) for det, chunks in events.items()
    }


def _apply_deadtime(times: np.ndarray, deadtime_s: float) -> np.ndarray:
    """Non-paralyzable deadtime on a sorted time array."""
    if deadtime_s <= 0.0 or times.size == 0:
        return times
    keep = np.zeros(times.size, dtype=bool)
    last = -math.inf
    for i, t in enumerate(times):
        if t - last >= deadtime_s:
            keep[i] = True
            last = t
    return times[keep]


def simulate_detector_events(run: ExperimentRun) -> dict[str, np.ndarray]:
    """Sorted, deadtime-filtered detection times (s) per detector."""
    merged: dict[str, list[np.ndarray]] = {d: [] for d in DETECTOR_LABELS}
    for shard in range(run.n_shards):
        shard_events = _simulate_shard(run, shard)
        for det in DETECTOR_LABELS:
            merged[det].append(shard_events[det])
    out = {}
    for det in DETECTOR_LABELS:
        times = np.sort(np.concatenate(merged[det])) if merged[det] else np.empty(0)
        out[det] = _apply_deadtime(times, run.detectors[det].deadtime_us * 1e-6)
    return out


def histogram_bin_edges_ps(run: ExperimentRun) -> np.ndarray:
    """Symmetric edges with zero delay on a bin boundary."""
    half = run.histogram_bins // 2
    return (np.arange(run.histogram_bins + 1) - half) * run.tdc.bin_width_ps


def _pair_differences_ps(
    signal_times: np.ndarray, idler_times: np.ndarray, half_span_s: float
) -> np.ndarray:
    """All idler-minus-signal differences within the histogram span."""
    if signal_times.size == 0 or idler_times.size == 0:
        return np.empty(0)
    lo = np.searchsorted(idler_times, signal_times - half_span_s, side="left")
    hi = np.searchsorted(idler_times, signal_times + half_span_s, side="right")
    multiplicity = hi - lo
    total = int(multiplicity.sum())
    if total == 0:
        return np.empty(0)
    # Ragged [lo_i, hi_i) ranges flattened without a Python loop.
    starts = np.repeat(lo, multiplicity)
    offsets = np.arange(total) - np.repeat(np.cumsum(multiplicity) - multiplicity, multiplicity)
    idler_idx = starts + offsets
    diffs = idler_times[idler_idx] - np.repeat(signal_times, multiplicity)
    return diffs * 1e12


def simulate_run(run: ExperimentRun) -> dict[str, CoincidenceHistogram]:
    """Histograms of the four detector combinations, keyed by pair label."""
    histograms, _ = simulate_run_with_singles(run)
    return histograms


def simulate_run_with_singles(
    run: ExperimentRun,
) -> tuple[dict[str, CoincidenceHistogram], dict[str, int]]:
    """Like :func:`simulate_run`, also returning accepted singles per detector."""
    events = simulate_detector_events(run)
    singles = {det: int(events[det].size) for det in DETECTOR_LABELS}
    edges = histogram_bin_edges_ps(run)
    half_span_s = edges[-1] * 1e-12
    histograms = {}
    for outcome in OUTCOMES:
        det_s, det_i = OUTCOME_DETECTORS[outcome]
        diffs = _pair_differences_ps(events[det_s], events[det_i], half_span_s)
        counts, _ = np.histogram(diffs, bins=edges)
        label = f"{det_s}-{det_i}"
        histograms[label] = CoincidenceHistogram(
            detector_pair=(det_s, det_i),
            bin_edges_ps=edges,
            counts=counts.astype(np.int64),
            acquisition_time_s=run.acquisition_time_s,
        )
    return histograms, singles


def extract_coincidences(histogram: CoincidenceHistogram, tdc: TdcSpec) -> tuple[int, int]:
    """Windowed coincidence count and the peak-centre bin.

    The peak is the bin with the maximum count (ties resolve to the
    lowest index). Odd windows centre exactly on the peak bin; even
    windows cannot, so the two half-bin-offset alignments around the
    peak are compared and the one with the larger sum is used (leftmost
    on a tie). The window is clamped to the histogram range.
    """
    counts = histogram.counts
    if not counts.any():
        raise DataError("no peak: histogram is all zeros")
    peak = int(np.argmax(counts))
    w = tdc.coincidence_window_bins

    def window_sum(start: int) -> int:
        start = max(0, min(start, counts.size - w)) if counts.size >= w else 0
        return int(counts[start : start + w].sum())

    if w >= counts.size:
        return int(counts.sum()), peak
    if w % 2:
        total = window_sum(peak - w // 2)
    else:
        left_aligned = window_sum(peak - w // 2)
        right_aligned = window_sum(peak - w // 2 + 1)
        total = max(left_aligned, right_aligned)
    return total, peak


def windowed_counts(
    histograms: Mapping[str, CoincidenceHistogram], tdc: TdcSpec
) -> dict[str, int]:
    """Windowed counts per joint outcome; all-zero histograms count zero."""
    out = {}
    for outcome in OUTCOMES:
        label = "-".join(OUTCOME_DETECTORS[outcome])
        try:
            total, _ = extract_coincidences(histograms[label], tdc)
        except DataError:
            total = 0
        out[outcome] = total
    return out


def write_histogram_csv(path, histogram: CoincidenceHistogram) -> None:
    csvio.write_rows(
        path,
        ("bin_start_ps", "count"),
        zip(histogram.bin_edges_ps[:-1].tolist(), histogram.counts.tolist()),
    )


def read_histogram_csv(path, detector_pair: tuple[str, str], acquisition_time_s: float, bin_width_ps: float) -> CoincidenceHistogram:
    rows = csvio.read_rows(path, ("bin_start_ps", "count"))
    starts = np.array([float(r[0]) for r in rows])
    counts = np.array([int(r[1]) for r in rows], dtype=np.int64)
    edges = np.append(starts, starts[-1] + bin_width_ps)
    return CoincidenceHistogram(
        detector_pair=detector_pair,
        bin_edges_ps=edges,
        counts=counts,
        acquisition_time_s=acquisition_time_s,
    )


def write_run_sidecar(path, run: ExperimentRun, histogram_files: Mapping[str, str]) -> None:
    """JSON sidecar with the specs, acquisition metadata and the seed."""
    payload = {
        "detectors": {
            det: {
                "efficiency": spec.efficiency,
                "dark_count_rate_hz": spec.dark_count_rate_hz,
                "deadtime_us": spec.deadtime_us,
                "timing_jitter_fwhm_ps": spec.timing_jitter_fwhm_ps,
            }
            for det, spec in run.detectors.items()
        },
        "tdc": {
            "bin_width_ps": run.tdc.bin_width_ps,
            "coincidence_window_bins": run.tdc.coincidence_window_bins,
        },
        "acquisition_time_s": run.acquisition_time_s,
        "pair_rate_hz": run.pair_rate_hz,
        "settings": {"phi_s": run.settings.phi_s, "phi_i": run.settings.phi_i},
        "rng_seed": run.rng_seed,
        "histogram_bins": run.histogram_bins,
        "n_shards": run.n_shards,
        "histogram_files": dict(histogram_files),
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")

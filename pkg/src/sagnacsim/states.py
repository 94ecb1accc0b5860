"""Two-photon polarization states of the Sagnac pair source.

The source emits pairs in the family

    alpha |V>_s |V>_i  +  e^{i phi} beta |H>_s |H>_i

with real non-negative amplitudes (any global phase is unobservable) and
no |HV> / |VH> population. Partial indistinguishability of the two
generation paths is carried by a scalar coherence factor ``gamma`` that
multiplies the off-diagonal term of the induced density matrix; it is
the only quantity a differential signal-idler delay can degrade.

Port convention: the analyzer output labelled "V" transmits the +45 deg
projection on both the signal and the idler side. Only relative fringe
phases are observable, so swapping both labels globally has no effect.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

import numpy as np

AMPLITUDE_TOL = 1e-12

#: Joint detection outcomes, first letter = signal port, second = idler port.
OUTCOMES = ("VV", "HH", "VH", "HV")

#: Detector labels used throughout the package.
DETECTOR_LABELS = ("sV", "sH", "iV", "iH")

#: Detector pair that registers each joint outcome.
OUTCOME_DETECTORS = {
    "VV": ("sV", "iV"),
    "HH": ("sH", "iH"),
    "VH": ("sV", "iH"),
    "HV": ("sH", "iV"),
}


@dataclass(frozen=True)
class TwoPhotonState:
    """State alpha|VV> + e^{i phi} beta|HH> with coherence factor gamma.

    ``gamma = 1`` is a pure state, ``gamma = 0`` a fully distinguishable
    mixture of |VV><VV| and |HH><HH|.
    """

    alpha: float
    beta: float
    phi: float
    gamma: float

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.alpha < 0.0 or self.beta < 0.0:
            raise ValueError("amplitudes must be non-negative")
        norm = self.alpha * self.alpha + self.beta * self.beta
        if abs(norm - 1.0) > AMPLITUDE_TOL:
            raise ValueError(f"alpha^2 + beta^2 must equal 1, got {norm!r}")

    def density_matrix(self) -> np.ndarray:
        """4x4 density matrix in the product basis (HH, HV, VH, VV)."""
        rho = np.zeros((4, 4), dtype=complex)
        rho[0, 0] = self.beta**2
        rho[3, 3] = self.alpha**2
        off = self.gamma * self.alpha * self.beta
        rho[3, 0] = off * cmath.exp(-1j * self.phi)
        rho[0, 3] = off * cmath.exp(1j * self.phi)
        return rho


@dataclass(frozen=True)
class AnalysisSettings:
    """Phase shifts applied by the signal and idler phase modulators."""

    phi_s: float
    phi_i: float

    def wrapped(self) -> tuple[float, float]:
        """Phases reduced to [0, 2*pi), for reporting only."""
        two_pi = 2.0 * math.pi
        return (self.phi_s % two_pi, self.phi_i % two_pi)


def make_source_state(pump_split_angle: float, phi0: float, gamma: float) -> TwoPhotonState:
    """Build the emitted state for a given pump polarization split.

    ``alpha = cos(pump_split_angle)``, ``beta = sin(pump_split_angle)``;
    an angle of pi/4 with ``phi0 = 0`` and ``gamma = 1`` gives the
    maximally entangled state.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    return TwoPhotonState(
        alpha=math.cos(pump_split_angle),
        beta=math.sin(pump_split_angle),
        phi=phi0,
        gamma=gamma,
    )


def apply_phase_modulators(state: TwoPhotonState, settings: AnalysisSettings) -> TwoPhotonState:
    """Add the modulator phases to the relative phase of the |HH> term."""
    return replace(state, phi=state.phi + settings.phi_s + settings.phi_i)


def interference_term(state: TwoPhotonState) -> float:
    """Coherence term C = 2*alpha*beta*gamma*cos(phi) of the diagonal-basis statistics."""
    return 2.0 * state.alpha * state.beta * state.gamma * math.cos(state.phi)


def coincidence_probabilities(state: TwoPhotonState) -> dict[str, float]:
    """Joint detection probabilities in the diagonal basis.

    Same-polarization ports see (1 + C)/4 each and opposite ports
    (1 - C)/4 each, so the two groups of fringes are mutually in phase
    and anti-phased against each other as the analysis phases scan.
    """
    c = interference_term(state)
    same = 0.25 * (1.0 + c)
    opposite = 0.25 * (1.0 - c)
    return {"VV": same, "HH": same, "VH": opposite, "HV": opposite}


def correlation_coefficient(state: TwoPhotonState, settings: AnalysisSettings) -> float:
    """Correlation E = P(VV) + P(HH) - P(VH) - P(HV) after applying the settings.

    Equals ``2*alpha*beta*gamma*cos(phi + phi_s + phi_i)``.
    """
    return interference_term(apply_phase_modulators(state, settings))

"""Independent reference computations used to check the library.

Everything here is built directly from first principles (explicit 4x4
matrices, closed-form Fourier transforms, textbook rate formulas) and
never calls the code paths it is used to verify.
"""

import numpy as np

SQRT2 = np.sqrt(2.0)

# Single-photon basis order (H, V); two-photon order (HH, HV, VH, VV).
KET_H = np.array([1.0, 0.0])
KET_V = np.array([0.0, 1.0])
KET_PLUS45 = (KET_H + KET_V) / SQRT2
KET_MINUS45 = (KET_H - KET_V) / SQRT2

# Analyzer port -> projection state ("V" port transmits +45 degrees).
PORT_STATES = {"V": KET_PLUS45, "H": KET_MINUS45}


def density_matrix(alpha, beta, phi, gamma):
    """4x4 matrix of alpha|VV> + e^{i phi} beta|HH> with coherence gamma."""
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = beta**2  # |HH><HH|
    rho[3, 3] = alpha**2  # |VV><VV|
    rho[3, 0] = gamma * alpha * beta * np.exp(-1j * phi)
    rho[0, 3] = np.conj(rho[3, 0])
    return rho


def projection_probability(rho, signal_port, idler_port):
    """<p_s p_i| rho |p_s p_i> for the diagonal-basis product state."""
    ket = np.kron(PORT_STATES[signal_port], PORT_STATES[idler_port])
    return float(np.real(ket @ rho @ ket))


def outcome_probabilities(alpha, beta, phi, gamma):
    """All four diagonal-basis outcome probabilities by explicit projection."""
    rho = density_matrix(alpha, beta, phi, gamma)
    return {
        "VV": projection_probability(rho, "V", "V"),
        "HH": projection_probability(rho, "H", "H"),
        "VH": projection_probability(rho, "V", "H"),
        "HV": projection_probability(rho, "H", "V"),
    }


def correlation(alpha, beta, phi, gamma, phi_s, phi_i):
    """E from explicit projections after adding the modulator phases."""
    probs = outcome_probabilities(alpha, beta, phi + phi_s + phi_i, gamma)
    return probs["VV"] + probs["HH"] - probs["VH"] - probs["HV"]


def rect_coherence(delta_nu_hz, delta_t_ps):
    """|FT| of a unit-area rectangle of full width delta_nu: |sinc|."""
    x = np.pi * delta_nu_hz * np.asarray(delta_t_ps) * 1e-12
    return np.abs(np.sinc(x / np.pi))


def accidental_rate(rate1_hz, rate2_hz, window_s):
    """Coincidence rate of two independent Poisson streams in a window."""
    return rate1_hz * rate2_hz * window_s

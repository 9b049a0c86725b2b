"""End-to-end figures of merit for Bob's link and closed-form FLOP counts."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .errors import DimensionError, DomainError
from .irs import HybridIrsLayout, PhaseShiftState, split


@dataclass(frozen=True)
class LinkBudget:
    p_tx: float
    sigma_b2: float
    sigma_r2: float

    def __post_init__(self):
        if min(self.p_tx, self.sigma_b2, self.sigma_r2) <= 0:
            raise DomainError("powers and noise levels must be strictly positive")


def _check(v, state, layout, channels):
    v = np.asarray(v, dtype=complex)
    if v.shape != (channels.n,):
        raise DimensionError(f"v has shape {v.shape}, expected ({channels.n},)")
    if state.m != channels.m or layout.m_total != channels.m:
        raise DimensionError("state/layout size does not match the IRS channel")
    return v


def cascade_coefficients(v: np.ndarray, channels: ChannelSet) -> np.ndarray:
    """``diag(h_rb^H) H_sr v``: per-element cascade gain before reflection."""
    return channels.h_rb.conj() * (channels.H_sr @ v)


def effective_gain(v, state: PhaseShiftState, layout: HybridIrsLayout, channels: ChannelSet) -> complex:
    v = _check(v, state, layout, channels)
    s = cascade_coefficients(v, channels)
    direct = np.vdot(channels.h_sb, v)
    return complex(np.sqrt(channels.rho_srb) * np.sum(s * state.theta) + np.sqrt(channels.rho_sb) * direct)


def noise_power(state: PhaseShiftState, layout: HybridIrsLayout, channels: ChannelSet, budget: LinkBudget) -> float:
    """Noise at Bob: amplified IRS noise plus receiver noise."""
    amp2 = state.amplitudes**2 * np.abs(channels.h_rb) ** 2
    return float(budget.sigma_r2 * channels.rho_rb * np.sum(amp2[layout.active_mask]) + budget.sigma_b2)


def snr(v, state, layout, channels, budget: LinkBudget) -> float:
    g = effective_gain(v, state, layout, channels)
    return budget.p_tx * abs(g) ** 2 / noise_power(state, layout, channels, budget)


def achievable_rate(snr_value: float) -> float:
    if snr_value < 0:
        raise DomainError(f"negative SNR {snr_value}")
    return math.log2(1.0 + snr_value)


def slnr_matrix(state, layout, channels: ChannelSet) -> np.ndarray:
    """Gram matrix whose Rayleigh quotient is the SLNR numerator."""
    psi, phi = split(state, layout)
    hr = channels.h_rb.conj()
    row_p = (hr * phi) @ channels.H_sr
    row_a = (hr * psi) @ channels.H_sr
    e = channels.rho_srb * (np.outer(row_p.conj(), row_p) + np.outer(row_a.conj(), row_a))
    return e + np.outer(channels.h_sb, channels.h_sb.conj())


def slnr(v, state, layout, channels, budget: LinkBudget) -> float:
    v = _check(v, state, layout, channels)
    nv2 = float(np.real(np.vdot(v, v)))
    if nv2 == 0.0:
        raise DomainError("SLNR undefined for a zero beamformer")
    e = slnr_matrix(state, layout, channels)
    return float(np.real(np.vdot(v, e @ v))) / (budget.sigma_b2 * nv2)


def flop_count(method: str, iterations: int, m: int, n: int, epsilon: float = 1e-3) -> float:
    """Closed-form FLOP estimates of the three alternating schemes.

    ``method`` is one of ``"FP"``, ``"EAR"``, ``"MM"``. ``epsilon`` only
    enters the FP count.
    """
    if iterations < 1 or m < 1 or n < 1:
        raise DomainError("counts must be at least 1")
    method = method.upper()
    if method == "FP":
        if not 0 < epsilon < 1:
            raise DomainError("epsilon must lie in (0, 1)")
        return (
            iterations * ((m + 1) ** 3 + 2 * m * n**2 + 2 * m**2) * math.log(1 / epsilon)
            + m**3 + n**3 + 5 * m**2 + 2 * m * n + 2 * m + 2 * m * n**2
        )
    if method == "EAR":
        return float(iterations * (2 * m**2 + n**3 + 8 * n**2 * m + 2 * m * n))
    if method == "MM":
        return float(iterations * (4 * (m + 1) ** 2 + n**3 + 3 * n**2 + 4 * n**2 * m + 8 * m * n))
    raise ValueError(f"unknown method {method!r}")

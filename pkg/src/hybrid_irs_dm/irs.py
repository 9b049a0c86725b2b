"""Hybrid IRS layout, reflection state and the active-element power model."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet
from .errors import DimensionError

AMPLITUDE_TOL = 1e-9
POWER_RTOL = 1e-6


@dataclass(frozen=True, eq=False)
class HybridIrsLayout:
    """Which IRS elements are active, plus the active-side limits.

    ``active_set`` holds 0-based element indices.
    """

    m_total: int
    active_set: tuple[int, ...] = ()
    beta_max: float = 10.0
    pr_max: float = 1.0
    active_mask: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        idx = tuple(sorted(set(int(i) for i in self.active_set)))
        if any(i < 0 or i >= self.m_total for i in idx):
            raise DimensionError(f"active indices {idx} out of range for M={self.m_total}")
        object.__setattr__(self, "active_set", idx)
        mask = np.zeros(self.m_total, dtype=bool)
        mask[list(idx)] = True
        mask.setflags(write=False)
        object.__setattr__(self, "active_mask", mask)
        if self.beta_max < 1.0:
            raise ValueError("beta_max must be at least 1")
        m_a = len(idx)
        if m_a > self.m_total - m_a:
            warnings.warn(
                f"{m_a} active elements exceed the passive count {self.m_total - m_a}",
                stacklevel=2,
            )

    @classmethod
    def first_active(cls, m_total: int, m_active: int, **kw) -> "HybridIrsLayout":
        return cls(m_total=m_total, active_set=tuple(range(m_active)), **kw)

    @property
    def m_active(self) -> int:
        return len(self.active_set)

    @property
    def passive_mask(self) -> np.ndarray:
        return ~self.active_mask

    def caps(self) -> np.ndarray:
        return np.where(self.active_mask, self.beta_max, 1.0)


@dataclass(frozen=True, eq=False)
class PhaseShiftState:
    """Per-element phases in [0, 2pi) and amplitudes of the IRS."""

    phases: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        ph = np.mod(np.asarray(self.phases, dtype=float), 2 * np.pi)
        amp = np.asarray(self.amplitudes, dtype=float)
        if ph.shape != amp.shape or ph.ndim != 1:
            raise DimensionError("phases and amplitudes must be 1-D of equal length")
        object.__setattr__(self, "phases", ph)
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def from_theta(cls, theta: np.ndarray, layout: HybridIrsLayout | None = None) -> "PhaseShiftState":
        """Build from complex reflection coefficients.

        Passive amplitudes are snapped to exactly 1 when a layout is given.
        """
        theta = np.asarray(theta, dtype=complex)
        amp = np.abs(theta)
        if layout is not None:
            if theta.shape != (layout.m_total,):
                raise DimensionError(f"theta has shape {theta.shape}, expected ({layout.m_total},)")
            amp = np.where(layout.active_mask, amp, 1.0)
        return cls(phases=np.angle(theta), amplitudes=amp)

    @classmethod
    def passive_ones(cls, m: int) -> "PhaseShiftState":
        return cls(phases=np.zeros(m), amplitudes=np.ones(m))

    @property
    def theta(self) -> np.ndarray:
        return self.amplitudes * np.exp(1j * self.phases)

    @property
    def m(self) -> int:
        return self.phases.shape[0]


def split(state: PhaseShiftState, layout: HybridIrsLayout) -> tuple[np.ndarray, np.ndarray]:
    """Return the active part ``psi`` and passive part ``phi`` of theta."""
    if state.m != layout.m_total:
        raise DimensionError(f"state has {state.m} elements, layout has {layout.m_total}")
    theta = state.theta
    psi = np.where(layout.active_mask, theta, 0)
    phi = np.where(layout.active_mask, 0, theta)
    return psi, phi


def active_power_weights(v: np.ndarray, channels: ChannelSet, p_tx: float, sigma_r2: float) -> np.ndarray:
    """Per-element power drawn per unit squared amplitude, for every element."""
    hv = channels.H_sr @ v
    return channels.rho_sr * p_tx * np.abs(hv) ** 2 + sigma_r2


def relay_power(
    state: PhaseShiftState,
    layout: HybridIrsLayout,
    v: np.ndarray,
    channels: ChannelSet,
    p_tx: float,
    sigma_r2: float,
) -> float:
    """Total transmit power of the active elements."""
    v = np.asarray(v, dtype=complex)
    if v.shape != (channels.n,) or state.m != channels.m or layout.m_total != channels.m:
        raise DimensionError("v, state, layout and channels disagree on dimensions")
    w = active_power_weights(v, channels, p_tx, sigma_r2)
    amp2 = state.amplitudes**2
    return float(np.sum(amp2[layout.active_mask] * w[layout.active_mask]))


def validate(state: PhaseShiftState, layout: HybridIrsLayout) -> list[str]:
    """Report amplitude-constraint violations; an empty list means feasible."""
    out = []
    if state.m != layout.m_total:
        return [f"state has {state.m} elements, layout has {layout.m_total}"]
    for m in range(layout.m_total):
        a = state.amplitudes[m]
        if layout.active_mask[m]:
            if a > layout.beta_max + AMPLITUDE_TOL:
                out.append(f"element {m}: active amplitude {a:.6g} exceeds beta_max {layout.beta_max:g}")
            if a < 0:
                out.append(f"element {m}: negative amplitude {a:.6g}")
        elif abs(a - 1.0) > AMPLITUDE_TOL:
            out.append(f"element {m}: passive amplitude {a:.12g} is not 1")
    return out


def check_power(
    state: PhaseShiftState,
    layout: HybridIrsLayout,
    v: np.ndarray,
    channels: ChannelSet,
    p_tx: float,
    sigma_r2: float,
) -> list[str]:
    out = []
    pr = relay_power(state, layout, v, channels, p_tx, sigma_r2)
    if pr > layout.pr_max * (1 + POWER_RTOL):
        out.append(f"relay power {pr:.6g} W exceeds budget {layout.pr_max:.6g} W")
    nv = float(np.linalg.norm(v))
    if nv > 1 + AMPLITUDE_TOL:
        out.append(f"beamformer norm {nv:.12g} exceeds 1")
    return out

"""Line-of-sight channels between the BS, the IRS and Bob.

Both the BS array and the IRS element line are uniform linear arrays along
the global x-axis. The direction cosine fed to the steering vector is the
x-component of the unit displacement vector between the two endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError
from .numerics import db_to_linear


@dataclass(frozen=True)
class Geometry:
    bs_pos: tuple[float, float, float] = (0.0, 0.0, 0.0)
    irs_pos: tuple[float, float, float] = (100 * np.sqrt(2), 0.0, 100 * np.sqrt(2))
    bob_pos: tuple[float, float, float] = (110 * np.sqrt(3), 0.0, 110.0)

    def distances(self) -> dict[str, float]:
        bs, irs, bob = (np.asarray(p, dtype=float) for p in (self.bs_pos, self.irs_pos, self.bob_pos))
        return {
            "sb": float(np.linalg.norm(bob - bs)),
            "sr": float(np.linalg.norm(irs - bs)),
            "rb": float(np.linalg.norm(bob - irs)),
        }


@dataclass(frozen=True)
class ArrayConfig:
    n_bs: int = 8
    m_irs: int = 32
    spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        if self.n_bs < 1 or self.m_irs < 1:
            raise DomainError("array sizes must be at least 1")
        if self.spacing_over_wavelength <= 0:
            raise DomainError("element spacing must be positive")


@dataclass(frozen=True)
class PathLossLaw:
    """Log-distance path loss ``PL0 - 10 gamma log10(d / d0)`` in dB.

    ``gamma`` holds one exponent per link, keyed ``sb``, ``sr`` and ``rb``.
    """

    pl0_db: float = -30.0
    d0: float = 1.0
    gamma: dict[str, float] = field(default_factory=lambda: {"sb": 2.0, "sr": 2.0, "rb": 2.0})

    def __post_init__(self):
        if self.d0 <= 0:
            raise DomainError("reference distance must be positive")


@dataclass(frozen=True, eq=False)
class ChannelSet:
    h_sb: np.ndarray  # (N,)
    h_rb: np.ndarray  # (M,)
    h_sr_bs: np.ndarray  # (N,) BS-side steering towards the IRS
    h_rs_irs: np.ndarray  # (M,) IRS-side steering towards the BS
    rho_sb: float
    rho_rb: float
    rho_sr: float

    @cached_property
    def H_sr(self) -> np.ndarray:
        return np.outer(self.h_rs_irs, self.h_sr_bs.conj())

    @property
    def rho_srb(self) -> float:
        return self.rho_sr * self.rho_rb

    @property
    def n(self) -> int:
        return self.h_sb.shape[0]

    @property
    def m(self) -> int:
        return self.h_rb.shape[0]


def steering_vector(n: int, spacing_over_wavelength: float, direction_cosine: float) -> np.ndarray:
    """Normalized ULA steering vector with phases centred on the array middle."""
    if n < 1:
        raise DomainError("n must be at least 1")
    if abs(direction_cosine) > 1.0 + 1e-12:
        raise DomainError(f"direction cosine {direction_cosine} outside [-1, 1]")
    k = np.arange(1, n + 1)
    phase = -(k - (n + 1) / 2) * spacing_over_wavelength * direction_cosine
    return np.exp(2j * np.pi * phase) / np.sqrt(n)


def path_loss_linear(distance: float, law: PathLossLaw, link: str = "sb") -> float:
    if distance < law.d0:
        raise DomainError(f"distance {distance} m is inside the reference distance {law.d0} m")
    gamma = law.gamma[link]
    return db_to_linear(law.pl0_db - 10.0 * gamma * np.log10(distance / law.d0))


def _direction_cosine(src, dst) -> float:
    delta = np.asarray(dst, dtype=float) - np.asarray(src, dtype=float)
    norm = np.linalg.norm(delta)
    if norm == 0.0:
        raise DomainError("coincident node positions")
    return float(np.clip(delta[0] / norm, -1.0, 1.0))


def build_channels(geometry: Geometry, arrays: ArrayConfig, law: PathLossLaw) -> ChannelSet:
    dist = geometry.distances()
    for link, d in dist.items():
        if d < law.d0:
            raise DomainError(f"link {link}: distance {d:.3f} m below reference distance")
    d_over_l = arrays.spacing_over_wavelength
    bs, irs, bob = geometry.bs_pos, geometry.irs_pos, geometry.bob_pos
    return ChannelSet(
        h_sb=steering_vector(arrays.n_bs, d_over_l, _direction_cosine(bs, bob)),
        h_rb=steering_vector(arrays.m_irs, d_over_l, _direction_cosine(irs, bob)),
        h_sr_bs=steering_vector(arrays.n_bs, d_over_l, _direction_cosine(bs, irs)),
        h_rs_irs=steering_vector(arrays.m_irs, d_over_l, _direction_cosine(irs, bs)),
        rho_sb=path_loss_linear(dist["sb"], law, "sb"),
        rho_rb=path_loss_linear(dist["rb"], law, "rb"),
        rho_sr=path_loss_linear(dist["sr"], law, "sr"),
    )

"""Exhaustive grid search over reflection coefficients for tiny instances.

For each candidate reflection vector the beamformer is optimized exactly.
In this line-of-sight model ``H_sr`` is rank one, so the relay-power
ellipsoid only bounds ``|h_sr^H v|^2`` and the best ``v`` has a closed form
in the plane spanned by the gain direction and ``h_sr``.
"""

from __future__ import annotations

import itertools
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .errors import ConfigError, GridTooLargeError
from .irs import PhaseShiftState
from .link import achievable_rate
from .scenario import ScenarioConfig

GRID_LIMIT = 10**8
_CHUNK = 1 << 16


@dataclass(frozen=True)
class GridSpec:
    phase_steps: int = 180
    amp_steps: int = 32
    v_mode: str = "exact"  # "exact", "direct_mrt" or "sphere"
    sphere_steps: int = 64

    def __post_init__(self):
        if self.phase_steps < 8:
            raise ConfigError("phase_steps must be at least 8")
        if self.amp_steps < 2:
            raise ConfigError("amp_steps must be at least 2")
        if self.v_mode not in ("exact", "direct_mrt", "sphere"):
            raise ConfigError(f"unknown v_mode {self.v_mode!r}")


@dataclass
class OracleResult:
    best_rate: float
    best_state: PhaseShiftState
    best_v: np.ndarray
    candidates: int
    feasible: int


def grid_size(m: int, m_active: int, grid: GridSpec, n: int = 1) -> int:
    size = grid.phase_steps**m * grid.amp_steps**m_active
    if grid.v_mode == "sphere":
        size *= grid.sphere_steps**2
    return size


def _best_gain_exact(a_vec, h_sr, kappa, slack):
    """Max of ``|a_vec^H v|`` s.t. ``||v|| <= 1`` and ``kappa |h_sr^H v|^2 <= slack``.

    ``a_vec`` is (K, N); ``h_sr`` has unit norm; ``kappa`` and ``slack``
    are (K,). Returns the optimal values and the squared projection used.
    """
    alpha = a_vec @ h_sr.conj()  # <h_sr, a>
    norm2 = np.sum(np.abs(a_vec) ** 2, axis=1)
    perp2 = np.maximum(norm2 - np.abs(alpha) ** 2, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(kappa > 0, slack / np.where(kappa > 0, kappa, 1.0), np.inf)
        free_proj = np.where(norm2 > 0, np.abs(alpha) ** 2 / norm2, 0.0)
    bound = free_proj > r
    rc = np.clip(r, 0.0, 1.0)
    constrained = np.abs(alpha) * np.sqrt(rc) + np.sqrt(perp2) * np.sqrt(1.0 - rc)
    return np.where(bound, constrained, np.sqrt(norm2)), np.where(bound, rc, free_proj)


def _v_from_projection(a_vec, h_sr, proj2):
    alpha = np.vdot(h_sr, a_vec)
    perp = a_vec - alpha * h_sr
    pn = np.linalg.norm(perp)
    ua = alpha / abs(alpha) if abs(alpha) > 0 else 1.0
    v = np.sqrt(proj2) * ua * h_sr
    if pn > 0:
        v = v + np.sqrt(max(1.0 - proj2, 0.0)) * perp / pn
    return v


def brute_force(
    scenario: ScenarioConfig, grid: GridSpec = GridSpec(), jobs: int = 1, channels: ChannelSet | None = None
) -> OracleResult:
    """Best achievable rate over a Cartesian phase/amplitude grid.

    The returned rate is a lower bound on the optimum that tightens as the
    grid is refined. Candidates violating the relay budget are skipped.
    Ties keep the lexicographically first candidate. ``channels`` replaces
    the channels built from the scenario geometry when given.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        layout = scenario.layout()
    ch = scenario.channels() if channels is None else channels
    bud = scenario.link_budget()
    m, n = ch.m, ch.n
    act = layout.active_mask
    size = grid_size(m, layout.m_active, grid)
    if size > GRID_LIMIT:
        raise GridTooLargeError(f"grid of {size} candidates exceeds {GRID_LIMIT}")
    if grid.v_mode == "sphere" and n != 2:
        raise ConfigError("sphere beamformer grid is only implemented for N = 2")

    phases = 2 * np.pi * np.arange(grid.phase_steps) / grid.phase_steps
    a_hi = min(layout.beta_max, np.sqrt(layout.pr_max / bud.sigma_r2))
    amps = np.linspace(0.0, a_hi, grid.amp_steps)

    # per-element scalar contributions: gain row is
    # sqrt(rho_srb) * g * h_sr^H + sqrt(rho_sb) * h_sb^H with g = sum coef_m theta_m
    coef = ch.h_rb.conj() * ch.h_rs_irs
    h_sr = ch.h_sr_bs
    rs2 = np.abs(ch.h_rs_irs) ** 2
    hrb2 = np.abs(ch.h_rb) ** 2

    axes = [phases] * m + [amps] * layout.m_active
    act_idx = np.flatnonzero(act)

    def evaluate(block):
        ph = block[:, :m]
        amp = np.ones_like(ph)
        if act_idx.size:
            amp[:, act_idx] = block[:, m:]
        theta = amp * np.exp(1j * ph)
        g = theta @ coef
        a_vec = np.sqrt(ch.rho_srb) * np.conj(g)[:, None] * h_sr[None, :] + np.sqrt(ch.rho_sb) * ch.h_sb[None, :]
        psi2 = np.where(act[None, :], amp**2, 0.0)
        kappa = ch.rho_sr * bud.p_tx * (psi2 @ rs2)
        b0 = bud.sigma_r2 * psi2.sum(axis=1)
        slack = layout.pr_max - b0
        feasible = slack >= 0
        noise = bud.sigma_r2 * ch.rho_rb * (psi2 @ hrb2) + bud.sigma_b2
        if grid.v_mode == "exact":
            val, proj = _best_gain_exact(a_vec, h_sr, kappa, np.maximum(slack, 0.0))
            snr = bud.p_tx * val**2 / noise
            extra = proj
        elif grid.v_mode == "direct_mrt":
            v = ch.h_sb
            hv2 = abs(np.vdot(h_sr, v)) ** 2
            feasible &= kappa * hv2 <= np.maximum(slack, 0.0) * (1 + 1e-12)
            snr = bud.p_tx * np.abs(a_vec.conj() @ v) ** 2 / noise
            extra = np.zeros(len(block))
        else:
            s = grid.sphere_steps
            ang = (np.arange(s) + 0.5) * (np.pi / 2) / s
            rot = 2 * np.pi * np.arange(s) / s
            A, R = np.meshgrid(ang, rot, indexing="ij")
            vs = np.stack([np.cos(A).ravel(), (np.sin(A) * np.exp(1j * R)).ravel()], axis=1)
            gains = np.abs(a_vec.conj() @ vs.T) ** 2
            hv2 = np.abs(vs @ h_sr.conj()) ** 2
            ok = kappa[:, None] * hv2[None, :] <= np.maximum(slack, 0.0)[:, None]
            gains = np.where(ok, gains, -np.inf)
            j = np.argmax(gains, axis=1)
            snr = bud.p_tx * gains[np.arange(len(block)), j] / noise
            feasible &= np.isfinite(snr)
            extra = j.astype(float)
        snr = np.where(feasible, snr, -np.inf)
        k = int(np.argmax(snr))
        return snr[k], block[k], a_vec[k], extra[k], int(feasible.sum())

    def blocks():
        it = itertools.product(*axes)
        while True:
            chunk = list(itertools.islice(it, _CHUNK))
            if not chunk:
                return
            yield np.asarray(chunk, dtype=float)

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(evaluate, blocks()))
    else:
        results = [evaluate(b) for b in blocks()]

    best = max(range(len(results)), key=lambda i: (results[i][0], -i))
    best_snr, best_cand, best_a, best_extra, _ = results[best]
    feasible_total = sum(r[4] for r in results)
    if not np.isfinite(best_snr):
        raise ConfigError("no feasible candidate on the grid")

    amp = np.ones(m)
    if act_idx.size:
        amp[act_idx] = best_cand[m:]
    state = PhaseShiftState(phases=best_cand[:m], amplitudes=amp)
    if grid.v_mode == "exact":
        v = _v_from_projection(best_a, h_sr, best_extra)
    elif grid.v_mode == "direct_mrt":
        v = ch.h_sb.copy()
    else:
        s = grid.sphere_steps
        i, r = divmod(int(best_extra), s)
        a = (i + 0.5) * (np.pi / 2) / s
        v = np.array([np.cos(a), np.sin(a) * np.exp(2j * np.pi * r / s)])
    return OracleResult(achievable_rate(float(best_snr)), state, v, size, feasible_total)

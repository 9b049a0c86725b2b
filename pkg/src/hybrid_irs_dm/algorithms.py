"""Alternating-optimization drivers and baselines.

Every driver starts from the same point: ``v = h_sb``, reflection phases
aligned with the cascade at that beamformer, and active amplitudes at the
common equal-amplitude value. Each returns a :class:`RunResult`.
"""

from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channel import ChannelSet
from .irs import (
    HybridIrsLayout,
    PhaseShiftState,
    active_power_weights,
    check_power,
    relay_power,
    split,
    validate,
)
from .link import LinkBudget, achievable_rate, cascade_coefficients, flop_count, slnr_matrix, snr
from .scenario import ScenarioConfig
from .solvers import (
    fp_psi_step,
    lift,
    max_linear_ball_ellipsoid,
    max_linear_capped_budget,
    mm_theta_step,
    unlift,
)

log = logging.getLogger(__name__)

METHODS = ("fp", "mm", "ear", "active_irs", "passive_irs", "random_phase", "no_irs")


class Termination(enum.Enum):
    CONVERGED = "Converged"
    ITERATION_CAP = "IterationCap"


@dataclass
class RunResult:
    method: str
    v_final: np.ndarray
    state_final: PhaseShiftState
    layout: HybridIrsLayout
    rate_trace: list[float]
    outer_iters: int
    flops: float
    termination: Termination
    constraint_report: list[str]
    relay_power: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def rate(self) -> float:
        return self.rate_trace[-1]


@dataclass
class Problem:
    """Channels, IRS layout and link budget of one optimization instance."""

    channels: ChannelSet
    layout: HybridIrsLayout
    budget: LinkBudget

    @classmethod
    def from_scenario(cls, scenario: ScenarioConfig, active=None) -> "Problem":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            layout = scenario.layout(active)
        return cls(scenario.channels(), layout, scenario.link_budget())

    def with_active(self, active) -> "Problem":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            layout = HybridIrsLayout(self.layout.m_total, tuple(active), self.layout.beta_max, self.layout.pr_max)
        return Problem(self.channels, layout, self.budget)

    def rate(self, v, theta) -> float:
        state = PhaseShiftState.from_theta(theta, self.layout)
        return achievable_rate(snr(v, state, self.layout, self.channels, self.budget))


# --------------------------------------------------------------------------
# building blocks
# --------------------------------------------------------------------------


def gain_row(theta, channels: ChannelSet) -> np.ndarray:
    """Row vector ``a`` with ``effective_gain = a @ v``."""
    cascade = (channels.h_rb.conj() * theta) @ channels.H_sr
    return np.sqrt(channels.rho_srb) * cascade + np.sqrt(channels.rho_sb) * channels.h_sb.conj()


def relay_quadratic(theta, layout: HybridIrsLayout, channels: ChannelSet, budget: LinkBudget):
    """Relay power as ``v^H B v + b0`` for fixed reflection coefficients."""
    psi2 = np.where(layout.active_mask, np.abs(theta) ** 2, 0.0)
    H = channels.H_sr
    B = channels.rho_sr * budget.p_tx * (H.conj().T * psi2) @ H
    b0 = budget.sigma_r2 * float(np.sum(psi2))
    return B, b0


def beamformer_step(c, theta, layout, channels, budget) -> np.ndarray:
    """Maximize ``Re{c^H v}`` over the unit ball and the relay-power ellipsoid."""
    B, b0 = relay_quadratic(theta, layout, channels, budget)
    v, rep = max_linear_ball_ellipsoid(c, B, b0, layout.pr_max)
    if rep.status.value != "Optimal":
        log.debug("beamformer step ended with %s (kkt %.3g)", rep.status.value, rep.kkt_residual)
    return v


def snr_beamformer_step(v_bar, theta, layout, channels, budget) -> np.ndarray:
    """Tangent step on ``|a v|^2`` at ``v_bar``."""
    a = gain_row(theta, channels)
    c = a.conj() * (a @ v_bar)
    if not np.any(c):
        c = a.conj()
    return beamformer_step(c, theta, layout, channels, budget)


def ear_amplitude(v, layout, channels, budget) -> float:
    """Common active amplitude that spends the whole relay budget, capped by beta_max."""
    if layout.m_active == 0:
        return 0.0
    q = float(np.sum(active_power_weights(v, channels, budget.p_tx, budget.sigma_r2)[layout.active_mask]))
    if q <= 0:
        warnings.warn("no active element draws power; using beta_max", stacklevel=2)
        return layout.beta_max
    return min(layout.beta_max, float(np.sqrt(layout.pr_max / q)))


def aligned_phases(v, channels) -> np.ndarray:
    """``exp(-j arg s)`` with ``s = diag(h_rb^H) H_sr v``."""
    return np.exp(-1j * np.angle(cascade_coefficients(v, channels)))


def ear_reflection(v, layout, channels, budget) -> np.ndarray:
    beta = ear_amplitude(v, layout, channels, budget)
    return aligned_phases(v, channels) * np.where(layout.active_mask, beta, 1.0)


def initial_point(layout, channels, budget):
    v = channels.h_sb.astype(complex).copy()
    return v, ear_reflection(v, layout, channels, budget)


def passive_step(v, theta, layout, channels) -> np.ndarray:
    """Tangent step for the passive entries; active entries are left as is."""
    pas = layout.passive_mask
    if not np.any(pas):
        return theta
    s = np.sqrt(channels.rho_srb) * cascade_coefficients(v, channels)
    zbar = np.sum(s * theta) + np.sqrt(channels.rho_sb) * np.vdot(channels.h_sb, v)
    coef = zbar * s[pas].conj()
    n = int(pas.sum())
    x, _ = max_linear_capped_budget(coef, np.ones(n), np.zeros(n), 0.0)
    out = theta.copy()
    out[pas] = x
    return out


def _finish(method, prob: Problem, v, theta, trace, iters, term, flops, diagnostics) -> RunResult:
    layout, channels, budget = prob.layout, prob.channels, prob.budget
    state = PhaseShiftState.from_theta(theta, layout)
    nv = np.linalg.norm(v)
    if 0 < nv < 1:
        scaled = v / nv
        if relay_power(state, layout, scaled, channels, budget.p_tx, budget.sigma_r2) <= layout.pr_max:
            v = scaled
            trace[-1] = max(trace[-1], prob.rate(v, theta))
        else:
            diagnostics["sub_unit_norm_v"] = float(nv)
    report = validate(state, layout) + check_power(state, layout, v, channels, budget.p_tx, budget.sigma_r2)
    return RunResult(
        method=method,
        v_final=v,
        state_final=state,
        layout=layout,
        rate_trace=trace,
        outer_iters=iters,
        flops=flops,
        termination=term,
        constraint_report=report,
        relay_power=relay_power(state, layout, v, channels, budget.p_tx, budget.sigma_r2),
        diagnostics=diagnostics,
    )


def _alternate(prob: Problem, v, theta, step: Callable, epsilon: float, max_iters: int):
    trace = [prob.rate(v, theta)]
    term = Termination.ITERATION_CAP
    k = 0
    for k in range(1, max_iters + 1):
        v, theta = step(v, theta)
        trace.append(prob.rate(v, theta))
        if abs(trace[-1] - trace[-2]) <= epsilon:
            term = Termination.CONVERGED
            break
    return v, theta, trace, k, term


# --------------------------------------------------------------------------
# the three schemes
# --------------------------------------------------------------------------


def _run_fp(prob: Problem, epsilon: float, max_iters: int, method: str = "fp") -> RunResult:
    layout, channels, budget = prob.layout, prob.channels, prob.budget
    v, theta = initial_point(layout, channels, budget)
    psi_logs: list[dict] = []

    def step(v, theta):
        v = snr_beamformer_step(v, theta, layout, channels, budget)
        theta = passive_step(v, theta, layout, channels)
        res = fp_psi_step(v, theta, layout, channels, budget)
        psi_logs.append({"tau_trace": res.tau_trace, "f_final": res.report.kkt_residual, "status": res.report.status.value})
        theta = np.where(layout.active_mask, res.psi, theta)
        return v, theta

    v, theta, trace, k, term = _alternate(prob, v, theta, step, epsilon, max_iters)
    flops = flop_count("FP", k, channels.m, channels.n, epsilon)
    return _finish(method, prob, v, theta, trace, k, term, flops, {"psi_steps": psi_logs})


def _run_mm(prob: Problem, epsilon: float, max_iters: int) -> RunResult:
    layout, channels, budget = prob.layout, prob.channels, prob.budget
    v, theta = initial_point(layout, channels, budget)
    gains: list[float] = []

    def step(v, theta):
        v = snr_beamformer_step(v, theta, layout, channels, budget)
        res = mm_theta_step(lift(theta), v, layout, channels, budget)
        gains.append(res.surrogate_gain)
        return v, unlift(res.theta_hat)

    v, theta, trace, k, term = _alternate(prob, v, theta, step, epsilon, max_iters)
    flops = flop_count("MM", k, channels.m, channels.n)
    return _finish("mm", prob, v, theta, trace, k, term, flops, {"surrogate_gains": gains})


def _run_ear(prob: Problem, epsilon: float, max_iters: int) -> RunResult:
    layout, channels, budget = prob.layout, prob.channels, prob.budget
    v, theta = initial_point(layout, channels, budget)

    def step(v, theta):
        state = PhaseShiftState.from_theta(theta, layout)
        E = slnr_matrix(state, layout, channels)
        v = beamformer_step(E @ v, theta, layout, channels, budget)
        return v, ear_reflection(v, layout, channels, budget)

    v, theta, trace, k, term = _alternate(prob, v, theta, step, epsilon, max_iters)
    flops = flop_count("EAR", k, channels.m, channels.n)
    return _finish("ear", prob, v, theta, trace, k, term, flops, {})


def max_snr_fp(scenario: ScenarioConfig) -> RunResult:
    return _run_fp(Problem.from_scenario(scenario), scenario.epsilon, scenario.max_outer_iters)


def max_snr_mm(scenario: ScenarioConfig) -> RunResult:
    return _run_mm(Problem.from_scenario(scenario), scenario.epsilon, scenario.max_outer_iters)


def max_snr_ear(scenario: ScenarioConfig) -> RunResult:
    return _run_ear(Problem.from_scenario(scenario), scenario.epsilon, scenario.max_outer_iters)


# --------------------------------------------------------------------------
# baselines
# --------------------------------------------------------------------------


def baseline_problem(prob: Problem, kind: str, epsilon: float = 1e-3, max_iters: int = 50, seed: int = 0) -> RunResult:
    """Reference schemes sharing the RunResult schema.

    ``no_irs``: reflection switched off, ``v = h_sb``. The IRS is modelled
    as all-active with zero amplitude so that no constraint is touched.
    ``random_phase``: all-passive IRS with seeded uniform phases and one
    beamformer step from ``h_sb``. Both one-shot baselines report a
    single-entry rate trace.
    ``passive_irs`` / ``active_irs``: Max-SNR-FP on an all-passive or
    all-active surface with the same relay budget.
    """
    m = prob.channels.m
    kind = kind.lower()
    if kind == "passive_irs":
        return _run_fp(prob.with_active(()), epsilon, max_iters, "passive_irs")
    if kind == "active_irs":
        return _run_fp(prob.with_active(range(m)), epsilon, max_iters, "active_irs")
    if kind == "no_irs":
        prob = prob.with_active(range(m))
        theta = np.zeros(m, dtype=complex)
        v = prob.channels.h_sb.astype(complex).copy()
        trace = [prob.rate(v, theta)]
        return _finish("no_irs", prob, v, theta, trace, 0, Termination.CONVERGED, 0.0, {})
    if kind == "random_phase":
        prob = prob.with_active(())
        rng = np.random.default_rng(seed)
        theta = np.exp(1j * rng.uniform(0.0, 2 * np.pi, m))
        v = snr_beamformer_step(prob.channels.h_sb.astype(complex), theta, prob.layout, prob.channels, prob.budget)
        # one-shot procedure without an outer loop: the trace holds the final rate only
        return _finish("random_phase", prob, v, theta, [prob.rate(v, theta)], 1, Termination.CONVERGED, 0.0, {})
    raise ValueError(f"unknown baseline {kind!r}")


def baseline(scenario: ScenarioConfig, kind: str) -> RunResult:
    return baseline_problem(
        Problem.from_scenario(scenario), kind, scenario.epsilon, scenario.max_outer_iters, scenario.rng_seed
    )


def solve(prob: Problem, method: str, epsilon: float = 1e-3, max_iters: int = 50, seed: int = 0) -> RunResult:
    """Run any scheme or baseline on an explicit problem instance."""
    method = method.lower()
    if method == "fp":
        return _run_fp(prob, epsilon, max_iters)
    if method == "mm":
        return _run_mm(prob, epsilon, max_iters)
    if method == "ear":
        return _run_ear(prob, epsilon, max_iters)
    return baseline_problem(prob, method, epsilon, max_iters, seed)


def run_method(scenario: ScenarioConfig, method: str) -> RunResult:
    return solve(
        Problem.from_scenario(scenario), method, scenario.epsilon, scenario.max_outer_iters, scenario.rng_seed
    )

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybrid_irs_dm.algorithms import Problem, snr_beamformer_step, initial_point
from hybrid_irs_dm.irs import PhaseShiftState, active_power_weights, relay_power
from hybrid_irs_dm.link import LinkBudget, snr
from hybrid_irs_dm.solvers import (
    Status,
    fp_psi_step,
    lift,
    max_linear_ball_ellipsoid,
    max_linear_capped_budget,
    mm_theta_step,
    unlift,
)

from conftest import make_layout, near_irs_scenario, random_channels
from oracles import ball_ellipsoid_dual_bound, capped_budget_grid, feasible_samples


# ---------------------------------------------------------------- capped budget


def test_capped_no_budget_pressure():
    x, rep = max_linear_capped_budget([1 + 0j, 1j], [1, 1], [0, 0], 0.0)
    np.testing.assert_allclose(x, [1, 1j])
    assert rep.status is Status.OPTIMAL


def test_capped_single_element_saturates_budget():
    x, rep = max_linear_capped_budget([2 + 0j, 0j], [10, 10], [1, 1], 1.0)
    np.testing.assert_allclose(x, [1, 0], atol=1e-12)
    assert rep.objective == pytest.approx(2.0, rel=1e-12)


def test_capped_zero_coefficients_and_negative_budget():
    x, rep = max_linear_capped_budget(np.zeros(3, complex), [2, 2, 2], [1, 1, 1], 1.0)
    np.testing.assert_array_equal(x, 0)
    assert rep.status is Status.OPTIMAL
    # weightless entries with zero coefficient sit at their cap (passive convention)
    x, _ = max_linear_capped_budget(np.zeros(2, complex), [1, 1], [0, 0], 1.0)
    np.testing.assert_array_equal(np.abs(x), 1)
    _, rep = max_linear_capped_budget([1 + 0j], [1], [1], -1.0)
    assert rep.status is Status.INFEASIBLE


def _random_capped(rng):
    k = int(rng.integers(1, 5))
    c = (rng.normal(size=k) + 1j * rng.normal(size=k)) * 10 ** rng.uniform(-1, 1, k)
    caps = rng.uniform(0.2, 5, k)
    w = np.where(rng.uniform(size=k) < 0.2, 0.0, rng.uniform(0.1, 3, k))
    budget = float(rng.uniform(0, 1.2) * np.sum(w * caps**2))
    pen = np.where(rng.uniform(size=k) < 0.5, 0.0, rng.uniform(0, 2, k)) if rng.uniform() < 0.5 else None
    return c, caps, w, budget, pen


def test_capped_matches_grid_oracle_500():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(500):
        c, caps, w, budget, pen = _random_capped(rng)
        x, rep = max_linear_capped_budget(c, caps, w, budget, penalty=pen)
        ref, _ = capped_budget_grid(c, caps, w, budget, pen)
        assert np.all(np.abs(x) <= caps + 1e-9)
        assert np.sum(w * np.abs(x) ** 2) <= budget * (1 + 1e-9) + 1e-300
        p = np.zeros_like(w) if pen is None else pen
        obj = float(np.real(np.vdot(x, c)) - np.sum(p * np.abs(x) ** 2))
        assert obj == pytest.approx(rep.objective, rel=1e-12, abs=1e-12)
        worst = max(worst, abs(obj - ref))
        assert abs(obj - ref) <= 1e-6
    assert worst <= 1e-6


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_capped_phase_alignment(seed):
    rng = np.random.default_rng(seed)
    c, caps, w, budget, pen = _random_capped(rng)
    x, _ = max_linear_capped_budget(c, caps, w, budget, penalty=pen)
    nz = (np.abs(x) > 1e-12) & (np.abs(c) > 0)
    np.testing.assert_allclose(np.angle(x[nz] * np.conj(c[nz])), 0, atol=1e-9)


# ---------------------------------------------------------------- ball and ellipsoid


def test_ball_only():
    c = np.array([3 - 1j, 2j, 0.5])
    v, rep = max_linear_ball_ellipsoid(c, np.zeros((3, 3)), 0.0, 1.0)
    np.testing.assert_allclose(v, c / np.linalg.norm(c), atol=1e-12)
    assert rep.status is Status.OPTIMAL


def test_ellipsoid_binds_first():
    v, rep = max_linear_ball_ellipsoid(np.array([1.0, 0]), np.diag([1.0, 0.0]), 0.0, 0.25)
    np.testing.assert_allclose(v, [0.5, 0], atol=1e-12)
    assert rep.objective == pytest.approx(0.5, rel=1e-12)


def test_ball_ellipsoid_infeasible():
    _, rep = max_linear_ball_ellipsoid(np.ones(2), np.eye(2), 2.0, 1.0)
    assert rep.status is Status.INFEASIBLE


def _random_be(rng, n=None):
    n = n or int(rng.integers(1, 6))
    c = rng.normal(size=n) + 1j * rng.normal(size=n)
    r = int(rng.integers(0, n + 1))
    g = rng.normal(size=(n, r)) + 1j * rng.normal(size=(n, r))
    B = g @ g.conj().T * 10 ** rng.uniform(-3, 3)
    b0 = float(rng.uniform(0, 1))
    budget = b0 + float(10 ** rng.uniform(-4, 3))
    return c, B, b0, budget


def test_ball_ellipsoid_kkt_500():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(500):
        c, B, b0, budget = _random_be(rng)
        v, rep = max_linear_ball_ellipsoid(c, B, b0, budget)
        worst = max(worst, rep.kkt_residual)
        mu, lam = rep.multipliers["ball"], rep.multipliers["ellipsoid"]
        assert mu >= 0 and lam >= 0
        assert abs(mu * (np.vdot(v, v).real - 1)) <= 1e-8 * np.linalg.norm(c)
        if np.isfinite(lam):
            assert abs(lam * (np.vdot(v, B @ v).real + b0 - budget)) <= 1e-8 * np.linalg.norm(c)
        assert np.linalg.norm(v) <= 1 + 1e-12
        assert np.vdot(v, B @ v).real + b0 <= budget * (1 + 1e-10)
    assert worst <= 1e-8


def test_ball_ellipsoid_against_dual_and_samples():
    rng = np.random.default_rng(11)
    for _ in range(60):
        c, B, b0, budget = _random_be(rng, n=3)
        v, rep = max_linear_ball_ellipsoid(c, B, b0, budget)
        upper = ball_ellipsoid_dual_bound(c, B, b0, budget)
        samples = feasible_samples(rng, 3, B, b0, budget)
        lower = float(np.max(np.real(samples @ c.conj())))
        assert rep.objective <= upper * (1 + 1e-9)
        assert rep.objective >= lower - 1e-12
        assert (upper - rep.objective) <= 1e-3 * rep.objective


def test_ball_ellipsoid_singular_direction():
    # c lies in the null space of B, so only the ball binds
    B = np.diag([4.0, 0.0])
    v, rep = max_linear_ball_ellipsoid(np.array([0, 1 + 1j]), B, 0.0, 0.0)
    np.testing.assert_allclose(v, [0, (1 + 1j) / np.sqrt(2)], atol=1e-12)
    assert rep.status is Status.OPTIMAL


# ---------------------------------------------------------------- Dinkelbach step


def _tiny_problem(seed, active=(0,), pr_max=None):
    cfg = near_irs_scenario(seed)
    prob = Problem.from_scenario(cfg)
    if pr_max is not None:
        prob.layout.__class__  # keep linters quiet about unused
        prob = Problem(prob.channels, make_layout(prob.channels.m, active, pr_max=pr_max), prob.budget)
    elif tuple(active) != prob.layout.active_set:
        prob = prob.with_active(active)
    return prob


def _ratio(prob, v, theta):
    return snr(v, PhaseShiftState.from_theta(theta, prob.layout), prob.layout, prob.channels, prob.budget) / (
        prob.budget.p_tx / prob.budget.sigma_b2
    ) * prob.budget.p_tx / prob.budget.sigma_b2


def test_psi_step_without_active_elements():
    prob = _tiny_problem(0, active=())
    v, theta = initial_point(prob.layout, prob.channels, prob.budget)
    res = fp_psi_step(v, theta, prob.layout, prob.channels, prob.budget)
    assert res.psi.shape == theta.shape and not np.any(res.psi)
    assert len(res.tau_trace) == 1
    assert res.report.status is Status.OPTIMAL


def test_psi_step_constant_denominator():
    rng = np.random.default_rng(0)
    ch = random_channels(rng, 2, 2, rho=(1e-6, 0.0, 1e-3))
    layout = make_layout(2, (0,), pr_max=1.0)
    b = LinkBudget(0.3, 1e-10, 2e-10)
    res = fp_psi_step(ch.h_sb, np.array([0.5 + 0j, 1.0]), layout, ch, b)
    assert len(res.tau_trace) == 1
    assert res.report.status is Status.OPTIMAL


def _psi_grid(prob, v, theta, phases=720, amps=400):
    """Grid over the single active coefficient with everything else frozen."""
    k = prob.layout.active_set[0]
    w = active_power_weights(v, prob.channels, prob.budget.p_tx, prob.budget.sigma_r2)[k]
    a_hi = min(prob.layout.beta_max, np.sqrt(prob.layout.pr_max / w))
    best = -np.inf
    for a in np.linspace(0, a_hi, amps):
        th = np.repeat(theta[None, :], phases, axis=0)
        th[:, k] = a * np.exp(2j * np.pi * np.arange(phases) / phases)
        vals = [snr(v, PhaseShiftState.from_theta(t, prob.layout), prob.layout, prob.channels, prob.budget) for t in th]
        best = max(best, max(vals))
    return best


@pytest.mark.parametrize("seed", [0, 3, 42])
def test_psi_step_ascends_and_matches_grid(seed):
    prob = _tiny_problem(seed)
    v, theta = initial_point(prob.layout, prob.channels, prob.budget)
    theta = theta.copy()
    theta[list(prob.layout.active_set)] *= 0.3  # start away from the budget boundary
    st0 = PhaseShiftState.from_theta(theta, prob.layout)
    before = snr(v, st0, prob.layout, prob.channels, prob.budget)
    res = fp_psi_step(v, theta, prob.layout, prob.channels, prob.budget)
    new = np.where(prob.layout.active_mask, res.psi, theta)
    st1 = PhaseShiftState.from_theta(new, prob.layout)
    after = snr(v, st1, prob.layout, prob.channels, prob.budget)
    assert after >= before * (1 - 1e-9)
    assert np.all(np.diff(res.tau_trace) >= -1e-12 * np.abs(res.tau_trace[:-1]))
    assert res.f_trace[-1] <= 1e-6
    assert relay_power(st1, prob.layout, v, prob.channels, prob.budget.p_tx, prob.budget.sigma_r2) <= (
        prob.layout.pr_max * (1 + 1e-6)
    )
    ref = _psi_grid(prob, v, theta)
    assert after >= 0.98 * ref


# ---------------------------------------------------------------- MM step


def test_lift_round_trip():
    theta = np.array([1j, 2.0, -0.5 + 0.5j])
    x = lift(theta)
    assert x[-1] == 1
    np.testing.assert_allclose(unlift(x), theta)
    np.testing.assert_allclose(unlift(x * np.exp(0.7j)), theta, atol=1e-15)


def _mm_iterate(prob, v, theta, steps):
    x = lift(theta)
    snrs = [snr(v, PhaseShiftState.from_theta(theta, prob.layout), prob.layout, prob.channels, prob.budget)]
    for _ in range(steps):
        res = mm_theta_step(x, v, prob.layout, prob.channels, prob.budget)
        assert res.theta_hat[-1] == 1
        # the surrogate is in nats, so rounding shows up at ~1e-12 absolute
        assert res.surrogate_gain >= -1e-9
        x = res.theta_hat
        th = unlift(x)
        snrs.append(snr(v, PhaseShiftState.from_theta(th, prob.layout), prob.layout, prob.channels, prob.budget))
    return unlift(x), snrs


def _misalignment(prob, v, theta):
    ch = prob.channels
    s = ch.h_rb.conj() * (ch.H_sr @ v)
    d = np.vdot(ch.h_sb, v)
    return np.abs(np.angle(s * theta * np.conj(d)))


def test_mm_all_passive_moves_towards_alignment():
    prob = _tiny_problem(1, active=())
    v, aligned = initial_point(prob.layout, prob.channels, prob.budget)
    # the phase-aligned point is a fixed point of the update
    th, _ = _mm_iterate(prob, v, aligned, 1)
    np.testing.assert_allclose(th, aligned, atol=1e-9)
    # from a misaligned start every step keeps unit modulus, raises the SNR
    # and reduces the misalignment of each element
    theta = np.exp(1j * np.array([0.3, 2.0]))
    prev = _misalignment(prob, v, theta)
    for _ in range(10):
        theta, snrs = _mm_iterate(prob, v, theta, 5)
        np.testing.assert_allclose(np.abs(theta), 1.0, atol=1e-12)
        assert np.all(np.diff(snrs) >= -1e-12 * np.array(snrs[:-1]))
        cur = _misalignment(prob, v, theta)
        assert np.all(cur <= prev + 1e-12)
        prev = cur


def test_mm_ascent_on_random_instances():
    for seed in range(50):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(2, 6))
        ch = random_channels(rng, 3, m, rho=(10 ** rng.uniform(-9, -6), 10 ** rng.uniform(-5, -3), 1e-3))
        layout = make_layout(m, rng.choice(m, size=int(rng.integers(0, m)), replace=False), pr_max=1e-3)
        prob = Problem(ch, layout, LinkBudget(0.3, 1e-10, 2e-10))
        v, theta = initial_point(layout, ch, prob.budget)
        _, snrs = _mm_iterate(prob, v, theta, 5)
        assert np.all(np.diff(snrs) >= -1e-9 * np.array(snrs[:-1]))


def _theta_grid(prob, v, phases=180, amps=64):
    lay, ch, b = prob.layout, prob.channels, prob.budget
    k = lay.active_set[0]
    w = active_power_weights(v, ch, b.p_tx, b.sigma_r2)[k]
    a_hi = min(lay.beta_max, np.sqrt(lay.pr_max / w))
    ph = 2 * np.pi * np.arange(phases) / phases
    P0, P1, A = np.meshgrid(ph, ph, np.linspace(0, a_hi, amps), indexing="ij")
    amp = np.stack([np.ones_like(A), np.ones_like(A)], -1)
    amp[..., k] = A
    th = amp * np.exp(1j * np.stack([P0, P1], -1))
    s = np.sqrt(ch.rho_srb) * ch.h_rb.conj() * (ch.H_sr @ v)
    g = th @ s + np.sqrt(ch.rho_sb) * np.vdot(ch.h_sb, v)
    noise = b.sigma_r2 * ch.rho_rb * np.abs(ch.h_rb[k]) ** 2 * A**2 + b.sigma_b2
    return float(np.max(b.p_tx * np.abs(g) ** 2 / noise))


@pytest.mark.parametrize("seed", [0, 5, 42])
def test_mm_matches_grid_after_twenty_steps(seed):
    prob = _tiny_problem(seed)
    v, theta = initial_point(prob.layout, prob.channels, prob.budget)
    th, snrs = _mm_iterate(prob, v, theta, 20)
    assert np.all(np.diff(snrs) >= -1e-9 * np.array(snrs[:-1]))
    assert snrs[-1] >= 0.98 * _theta_grid(prob, v)


def test_snr_beamformer_step_feasible_and_ascending():
    prob = _tiny_problem(2)
    v, theta = initial_point(prob.layout, prob.channels, prob.budget)
    st_ = PhaseShiftState.from_theta(theta, prob.layout)
    v2 = snr_beamformer_step(v, theta, prob.layout, prob.channels, prob.budget)
    assert np.linalg.norm(v2) <= 1 + 1e-12
    assert snr(v2, st_, prob.layout, prob.channels, prob.budget) >= snr(v, st_, prob.layout, prob.channels, prob.budget) * (1 - 1e-12)
    assert relay_power(st_, prob.layout, v2, prob.channels, prob.budget.p_tx, prob.budget.sigma_r2) <= prob.layout.pr_max * (1 + 1e-6)

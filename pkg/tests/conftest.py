"""Shared fixtures: scenarios and random channel instances."""

from __future__ import annotations

import warnings

import numpy as np
import pytest

from hybrid_irs_dm.algorithms import Problem
from hybrid_irs_dm.channel import ArrayConfig, ChannelSet, Geometry, PathLossLaw
from hybrid_irs_dm.irs import HybridIrsLayout, PhaseShiftState
from hybrid_irs_dm.link import LinkBudget
from hybrid_irs_dm.scenario import ScenarioConfig

# IRS close to Bob with a weak direct path, so the reflected link dominates.
NEAR_IRS_GEOMETRY = Geometry((0.0, 0.0, 0.0), (30.0, 0.0, 10.0), (35.0, 0.0, 0.0))
NEAR_IRS_LAW = PathLossLaw(gamma={"sb": 3.5, "sr": 2.0, "rb": 2.0})


def near_irs_scenario(seed: int = 0, n: int = 2, m: int = 2, ma: int = 1, **kw) -> ScenarioConfig:
    return ScenarioConfig(
        geometry=NEAR_IRS_GEOMETRY,
        arrays=ArrayConfig(n_bs=n, m_irs=m),
        path_loss=NEAR_IRS_LAW,
        n_active=ma,
        rng_seed=seed,
        position_jitter_m=5.0,
        **kw,
    )


def random_channels(rng: np.random.Generator, n: int, m: int, rho=(1e-6, 1e-3, 1e-3)) -> ChannelSet:
    """Unit-norm random vectors with a rank-one BS-to-IRS channel."""

    def unit(k):
        z = rng.normal(size=k) + 1j * rng.normal(size=k)
        return z / np.linalg.norm(z)

    return ChannelSet(
        h_sb=unit(n),
        h_rb=unit(m),
        h_sr_bs=unit(n),
        h_rs_irs=unit(m) * np.sqrt(m),
        rho_sb=rho[0],
        rho_rb=rho[1],
        rho_sr=rho[2],
    )


def random_state(rng, layout: HybridIrsLayout) -> PhaseShiftState:
    m = layout.m_total
    amps = np.where(layout.active_mask, rng.uniform(0, layout.beta_max, m), 1.0)
    return PhaseShiftState(phases=rng.uniform(0, 2 * np.pi, m), amplitudes=amps)


def random_unit(rng, n):
    z = rng.normal(size=n) + 1j * rng.normal(size=n)
    return z / np.linalg.norm(z)


def make_layout(m, active, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return HybridIrsLayout(m, tuple(active), **kw)


@pytest.fixture
def budget() -> LinkBudget:
    return LinkBudget(p_tx=10 ** (-0.5), sigma_b2=1e-10, sigma_r2=2e-10)


@pytest.fixture
def default_scenario() -> ScenarioConfig:
    return ScenarioConfig()


@pytest.fixture
def random_problem():
    def make(seed, n=3, m=4, active=(0,), pr_max=1e-3, beta_max=10.0):
        rng = np.random.default_rng(seed)
        ch = random_channels(rng, n, m)
        layout = make_layout(m, active, beta_max=beta_max, pr_max=pr_max)
        return Problem(ch, layout, LinkBudget(0.3, 1e-10, 2e-10))

    return make


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS, key=lambda k: (int(k.split()[0]), k)):
        terminalreporter.write_line(RESULTS[key])

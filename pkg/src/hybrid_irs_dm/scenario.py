"""Scenario configuration: everything needed to instantiate one link.

Configs persist as JSON. Physical quantities carry their unit in the key.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .channel import ArrayConfig, ChannelSet, Geometry, PathLossLaw, build_channels
from .errors import ConfigError, DomainError
from .irs import HybridIrsLayout
from .link import LinkBudget
from .numerics import dbm_to_watts


@dataclass(frozen=True)
class ScenarioConfig:
    geometry: Geometry = field(default_factory=Geometry)
    arrays: ArrayConfig = field(default_factory=ArrayConfig)
    path_loss: PathLossLaw = field(default_factory=PathLossLaw)
    n_active: int = 10
    active_set: tuple[int, ...] | None = None  # 1-based; overrides n_active
    beta_max: float = 10.0
    pr_max_dbm: float = 30.0
    p_tx_dbm: float = 25.0
    sigma_b2_dbm: float = -70.0
    sigma_r2_over_sigma_b2: float = 2.0
    rng_seed: int = 0
    epsilon: float = 1e-3
    max_outer_iters: int = 50
    position_jitter_m: float = 0.0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.max_outer_iters < 1:
            raise ConfigError("max_outer_iters must be at least 1")
        m = self.arrays.m_irs
        idx = self.active_indices()
        if any(i < 0 or i >= m for i in idx):
            raise ConfigError(f"active elements {sorted(i + 1 for i in idx)} not within 1..{m}")
        if self.beta_max < 1:
            raise ConfigError("beta_max must be at least 1")
        if self.position_jitter_m < 0:
            raise ConfigError("position_jitter_m must be non-negative")

    # -- derived objects ------------------------------------------------

    def active_indices(self) -> tuple[int, ...]:
        if self.active_set is not None:
            return tuple(sorted(int(i) - 1 for i in self.active_set))
        if not 0 <= self.n_active <= self.arrays.m_irs:
            raise ConfigError(f"n_active={self.n_active} not within 0..{self.arrays.m_irs}")
        return tuple(range(self.n_active))

    def layout(self, active: tuple[int, ...] | None = None) -> HybridIrsLayout:
        return HybridIrsLayout(
            m_total=self.arrays.m_irs,
            active_set=self.active_indices() if active is None else active,
            beta_max=self.beta_max,
            pr_max=dbm_to_watts(self.pr_max_dbm),
        )

    def link_budget(self) -> LinkBudget:
        sb2 = dbm_to_watts(self.sigma_b2_dbm)
        return LinkBudget(p_tx=dbm_to_watts(self.p_tx_dbm), sigma_b2=sb2, sigma_r2=self.sigma_r2_over_sigma_b2 * sb2)

    def resolved_geometry(self) -> Geometry:
        """Node positions after the seeded jitter (identity when jitter is 0)."""
        if self.position_jitter_m == 0:
            return self.geometry
        rng = np.random.default_rng([self.rng_seed, 0x6E0])
        j = self.position_jitter_m
        irs = np.asarray(self.geometry.irs_pos) + rng.uniform(-j, j, 3)
        bob = np.asarray(self.geometry.bob_pos) + rng.uniform(-j, j, 3)
        return Geometry(self.geometry.bs_pos, tuple(map(float, irs)), tuple(map(float, bob)))

    def channels(self) -> ChannelSet:
        try:
            return build_channels(self.resolved_geometry(), self.arrays, self.path_loss)
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc

    def replace(self, **changes) -> "ScenarioConfig":
        arrays = {k: changes.pop(k) for k in ("n_bs", "m_irs") if k in changes}
        if arrays:
            changes["arrays"] = dataclasses.replace(changes.get("arrays", self.arrays), **arrays)
        return dataclasses.replace(self, **changes)

    # -- persistence ----------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        g, a, pl = self.geometry, self.arrays, self.path_loss
        geo = {
            "bs_pos_m": list(g.bs_pos),
            "irs_pos_m": list(g.irs_pos),
            "bob_pos_m": list(g.bob_pos),
            "position_jitter_m": self.position_jitter_m,
        }
        if self.position_jitter_m:
            r = self.resolved_geometry()
            geo["resolved_irs_pos_m"] = list(r.irs_pos)
            geo["resolved_bob_pos_m"] = list(r.bob_pos)
        return {
            "geometry": geo,
            "arrays": {"n_bs": a.n_bs, "m_irs": a.m_irs, "spacing_over_wavelength": a.spacing_over_wavelength},
            "path_loss": {"pl0_db": pl.pl0_db, "d0_m": pl.d0, "gamma": dict(pl.gamma)},
            "irs": {
                "n_active": self.n_active,
                "active_set": None if self.active_set is None else list(self.active_set),
                "beta_max": self.beta_max,
                "pr_max_dbm": self.pr_max_dbm,
            },
            "link": {
                "p_tx_dbm": self.p_tx_dbm,
                "sigma_b2_dbm": self.sigma_b2_dbm,
                "sigma_r2_over_sigma_b2": self.sigma_r2_over_sigma_b2,
            },
            "solver": {"epsilon": self.epsilon, "max_outer_iters": self.max_outer_iters},
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScenarioConfig":
        known = {"geometry", "arrays", "path_loss", "irs", "link", "solver", "rng_seed", "sweep"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        base = cls()
        try:
            g = data.get("geometry", {})
            geometry = Geometry(
                tuple(g.get("bs_pos_m", base.geometry.bs_pos)),
                tuple(g.get("irs_pos_m", base.geometry.irs_pos)),
                tuple(g.get("bob_pos_m", base.geometry.bob_pos)),
            )
            a = data.get("arrays", {})
            arrays = ArrayConfig(
                int(a.get("n_bs", base.arrays.n_bs)),
                int(a.get("m_irs", base.arrays.m_irs)),
                float(a.get("spacing_over_wavelength", base.arrays.spacing_over_wavelength)),
            )
            p = data.get("path_loss", {})
            gamma = p.get("gamma", base.path_loss.gamma)
            if isinstance(gamma, (int, float)):
                gamma = {"sb": gamma, "sr": gamma, "rb": gamma}
            law = PathLossLaw(float(p.get("pl0_db", -30.0)), float(p.get("d0_m", 1.0)), {k: float(v) for k, v in gamma.items()})
            irs = data.get("irs", {})
            link = data.get("link", {})
            solver = data.get("solver", {})
            active = irs.get("active_set")
            return cls(
                geometry=geometry,
                arrays=arrays,
                path_loss=law,
                n_active=int(irs.get("n_active", base.n_active)),
                active_set=None if active is None else tuple(int(i) for i in active),
                beta_max=float(irs.get("beta_max", base.beta_max)),
                pr_max_dbm=float(irs.get("pr_max_dbm", base.pr_max_dbm)),
                p_tx_dbm=float(link.get("p_tx_dbm", base.p_tx_dbm)),
                sigma_b2_dbm=float(link.get("sigma_b2_dbm", base.sigma_b2_dbm)),
                sigma_r2_over_sigma_b2=float(link.get("sigma_r2_over_sigma_b2", base.sigma_r2_over_sigma_b2)),
                rng_seed=int(data.get("rng_seed", base.rng_seed)),
                epsilon=float(solver.get("epsilon", base.epsilon)),
                max_outer_iters=int(solver.get("max_outer_iters", base.max_outer_iters)),
                position_jitter_m=float(g.get("position_jitter_m", 0.0)),
            )
        except (TypeError, ValueError, KeyError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed config: {exc}") from exc


def load_config(path: str | Path) -> tuple[ScenarioConfig, dict[str, Any]]:
    """Read a JSON config; return the scenario and the raw dict."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    return ScenarioConfig.from_dict(data), data


def save_config(cfg: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n", encoding="utf-8")

"""Parameter sweeps reproducing the simulation figures as CSV and SVG."""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import __version__
from .algorithms import METHODS, run_method
from .errors import ConfigError
from .scenario import ScenarioConfig

FIGURES = ("convergence", "rate_vs_p", "rate_vs_prmax", "rate_vs_m", "rate_vs_ma", "complexity_vs_m")
DEFAULT_SEEDS = tuple(range(10))

_DEFAULTS: dict[str, dict[str, Any]] = {
    "convergence": {"x": "p_tx_dbm", "values": [20.0, 25.0], "methods": ["fp", "mm", "ear"]},
    "rate_vs_p": {"x": "p_tx_dbm", "values": [10.0, 15.0, 20.0, 25.0, 30.0], "methods": list(METHODS)},
    "rate_vs_prmax": {"x": "pr_max_dbm", "values": [20.0, 22.0, 24.0, 26.0, 28.0, 30.0], "methods": list(METHODS)},
    "rate_vs_m": {"x": "m_irs", "values": [8, 16, 32, 64, 128], "methods": list(METHODS)},
    "rate_vs_ma": {"x": "n_active", "values": [2, 4, 6, 8, 10, 12, 14, 16], "methods": list(METHODS)},
    "complexity_vs_m": {"x": "m_irs", "values": [8, 16, 32, 64, 128], "methods": ["fp", "mm", "ear"]},
}

COLUMNS = [
    "figure_id",
    "method",
    "x_name",
    "x_value",
    "seed",
    "status",
    "reason",
    "rate_bps_hz",
    "outer_iters",
    "termination",
    "flops",
    "relay_power_w",
    "constraints_ok",
]


@dataclass
class SweepSpec:
    figure_id: str
    values: list = field(default_factory=list)
    methods: list = field(default_factory=list)
    seeds: list = field(default_factory=lambda: list(DEFAULT_SEEDS))
    out_dir: Path = Path("results")

    def __post_init__(self):
        if self.figure_id not in FIGURES:
            raise ConfigError(f"unknown figure {self.figure_id!r}; choose from {FIGURES}")
        d = _DEFAULTS[self.figure_id]
        self.values = list(self.values or d["values"])
        self.methods = [m.lower() for m in (self.methods or d["methods"])]
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}")
        if not self.values or not self.methods or not self.seeds:
            raise ConfigError("sweep values, methods and seeds must be non-empty")
        self.out_dir = Path(self.out_dir)

    @property
    def x_name(self) -> str:
        return _DEFAULTS[self.figure_id]["x"]

    @classmethod
    def from_config(cls, figure_id: str, raw: dict, out_dir) -> "SweepSpec":
        sw = raw.get("sweep", {}) or {}
        sw = sw.get(figure_id, sw)
        return cls(
            figure_id,
            values=sw.get("values", []),
            methods=sw.get("methods", []),
            seeds=sw.get("seeds", list(DEFAULT_SEEDS)),
            out_dir=out_dir,
        )


def point_scenario(base: ScenarioConfig, figure_id: str, value, seed: int) -> ScenarioConfig:
    """Scenario for one sweep point. Raises ConfigError for invalid points."""
    x = _DEFAULTS[figure_id]["x"]
    if x in ("p_tx_dbm", "pr_max_dbm"):
        return base.replace(**{x: float(value)}, rng_seed=seed)
    if x == "m_irs":
        m = int(value)
        if m < 2 or m % 2:
            raise ConfigError(f"M={m} must be even so that M = 2 Ma")
        return base.replace(m_irs=m, n_active=m // 2, active_set=None, rng_seed=seed)
    ma = int(value)
    if ma > base.arrays.m_irs:
        raise ConfigError(f"Ma={ma} exceeds M={base.arrays.m_irs}")
    return base.replace(n_active=ma, active_set=None, rng_seed=seed)


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return f"{x:.12g}"
    return "" if x is None else str(x)


def _run_point(args) -> dict:
    cfg_dict, figure_id, method, value, seed = args
    base = ScenarioConfig.from_dict(cfg_dict)
    row = {"figure_id": figure_id, "method": method, "x_name": _DEFAULTS[figure_id]["x"], "x_value": value, "seed": seed}
    try:
        cfg = point_scenario(base, figure_id, value, seed)
        res = run_method(cfg, method)
    except ConfigError as exc:
        row.update(status="skipped", reason=str(exc))
        return row
    row.update(
        status="ok",
        reason="",
        rate_bps_hz=res.rate,
        outer_iters=res.outer_iters,
        termination=res.termination.value,
        flops=float(res.flops),
        relay_power_w=res.relay_power,
        constraints_ok=int(not res.constraint_report),
        trace=list(res.rate_trace),
    )
    return row


def run_sweep(spec: SweepSpec, base: ScenarioConfig, jobs: int = 1) -> list[dict]:
    """Run every (method, value, seed) point and append per-point medians.

    Rows come back sorted by method order, swept value and seed regardless
    of how many workers ran them.
    """
    cfg_dict = base.to_dict()
    tasks = [(cfg_dict, spec.figure_id, m, v, s) for m in spec.methods for v in spec.values for s in spec.seeds]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            rows = list(pool.map(_run_point, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        rows = [_run_point(t) for t in tasks]
    order = {m: i for i, m in enumerate(spec.methods)}
    vorder = {v: i for i, v in enumerate(spec.values)}
    rows.sort(key=lambda r: (order[r["method"]], vorder[r["x_value"]], r["seed"]))

    out = []
    for m in spec.methods:
        for v in spec.values:
            group = [r for r in rows if r["method"] == m and r["x_value"] == v]
            out.extend(group)
            ok = [r for r in group if r["status"] == "ok"]
            agg = {"figure_id": spec.figure_id, "method": m, "x_name": spec.x_name, "x_value": v, "seed": "median"}
            if not ok:
                agg.update(status="skipped", reason=group[0].get("reason", "") if group else "")
            else:
                agg.update(
                    status="ok",
                    reason="",
                    rate_bps_hz=statistics.median(r["rate_bps_hz"] for r in ok),
                    outer_iters=statistics.median(r["outer_iters"] for r in ok),
                    termination="",
                    flops=statistics.median(r["flops"] for r in ok),
                    relay_power_w=statistics.median(r["relay_power_w"] for r in ok),
                    constraints_ok=int(all(r["constraints_ok"] for r in ok)),
                )
                if spec.figure_id == "convergence":
                    agg["trace"] = _median_trace([r["trace"] for r in ok])
            out.append(agg)
    return out


def _median_trace(traces):
    n = max(len(t) for t in traces)
    padded = [t + [t[-1]] * (n - len(t)) for t in traces]
    return [statistics.median(col) for col in zip(*padded)]


def to_csv(rows: list[dict], spec: SweepSpec, base: ScenarioConfig) -> str:
    """Render rows as CSV text with provenance comment lines on top."""
    cols = list(COLUMNS)
    n_trace = 0
    if spec.figure_id == "convergence":
        n_trace = max((len(r.get("trace", [])) for r in rows), default=0)
        cols += [f"rate_iter_{k}" for k in range(n_trace)]
    buf = io.StringIO()
    buf.write(f"# code_version: hybrid_irs_dm {__version__}\n")
    buf.write(f"# scenario: {json.dumps(base.to_dict(), sort_keys=True)}\n")
    buf.write(
        "# sweep: "
        + json.dumps({"figure_id": spec.figure_id, "x_name": spec.x_name, "values": spec.values, "methods": spec.methods, "seeds": spec.seeds})
        + "\n"
    )
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        line = [_fmt(r.get(c)) for c in COLUMNS]
        if n_trace:
            tr = r.get("trace", [])
            line += [_fmt(float(x)) for x in tr] + [""] * (n_trace - len(tr))
        w.writerow(line)
    return buf.getvalue()


def write_csv(rows, spec: SweepSpec, base: ScenarioConfig) -> Path:
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    path = spec.out_dir / f"{spec.figure_id}.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(to_csv(rows, spec, base))
    return path


_LABELS = {
    "fp": "Max-SNR-FP",
    "mm": "Max-SNR-MM",
    "ear": "Max-SNR-EAR",
    "active_irs": "Active IRS",
    "passive_irs": "Passive IRS",
    "random_phase": "Random phase",
    "no_irs": "No IRS",
}
_XLABELS = {
    "p_tx_dbm": "P (dBm)",
    "pr_max_dbm": r"$P_r^{max}$ (dBm)",
    "m_irs": "M",
    "n_active": r"$M_a$",
}


def emit_plots(rows: list[dict], figure_id: str, out_dir, base: ScenarioConfig | None = None) -> Path:
    """Write one SVG for the figure from the median rows of a sweep table."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # fixed salt so element ids, and therefore the file bytes, are reproducible
    plt.rcParams["svg.hashsalt"] = "hybrid_irs_dm"

    agg = [r for r in rows if r["seed"] == "median" and r["status"] == "ok" and r["figure_id"] == figure_id]
    if not agg:
        raise ValueError("no plottable rows in the result table")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4.2))
    methods = list(dict.fromkeys(r["method"] for r in agg))
    x_name = agg[0]["x_name"]
    if figure_id == "convergence":
        for r in agg:
            tr = r["trace"]
            ax.plot(range(len(tr)), tr, marker="o", ms=3, label=f"{_LABELS[r['method']]}, P={r['x_value']:g} dBm")
        ax.set_xlabel("Iteration")
        ax.set_ylabel("Achievable rate (bits/s/Hz)")
    else:
        key = "flops" if figure_id == "complexity_vs_m" else "rate_bps_hz"
        for m in methods:
            pts = [(r["x_value"], r[key]) for r in agg if r["method"] == m]
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", ms=3, label=_LABELS[m])
        ax.set_xlabel(_XLABELS[x_name])
        if key == "flops":
            ax.set_yscale("log")
            ax.set_ylabel("FLOPs")
        else:
            ax.set_ylabel("Achievable rate (bits/s/Hz)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    path = out_dir / f"{figure_id}.svg"
    meta = {"Date": None, "Creator": f"hybrid_irs_dm {__version__}"}
    if base is not None:
        meta["Description"] = json.dumps(base.to_dict(), sort_keys=True)
    fig.savefig(path, format="svg", metadata=meta)
    plt.close(fig)
    return path

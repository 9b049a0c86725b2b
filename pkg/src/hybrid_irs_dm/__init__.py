"""Joint beamforming and phase-shift design for a hybrid active/passive IRS
mounted on a UAV, assisting a directional-modulation downlink."""

__version__ = "0.1.0"

from .algorithms import RunResult, baseline, max_snr_ear, max_snr_fp, max_snr_mm, run_method
from .scenario import ScenarioConfig, load_config

__all__ = [
    "RunResult",
    "ScenarioConfig",
    "baseline",
    "load_config",
    "max_snr_ear",
    "max_snr_fp",
    "max_snr_mm",
    "run_method",
]

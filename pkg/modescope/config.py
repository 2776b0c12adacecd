"""Configuration module for modescope.

Load environment variables and settings.json, and define the experiment
working point, worker limits, and the numerical tolerances shared by every
module.
"""

import json
import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

PROJECT_ROOT = Path(__file__).resolve().parent.parent

# ── Settings Loader ──
_SETTINGS_FILE = Path(os.environ.get("MODESCOPE_SETTINGS", PROJECT_ROOT / "settings.json"))


def _load_settings() -> dict:
    """Load settings from settings.json if it exists.

    Returns: dict of settings, or empty dict if file doesn't exist.
    """
    if _SETTINGS_FILE.exists():
        return json.loads(_SETTINGS_FILE.read_text(encoding="utf-8"))
    return {}


_settings = _load_settings()

# ── Working Point ──
# N = 200, D = 45, L = 64, M = 15, rho = 0.98, delta_theta = 0.01, unit amplitudes.
# snr_db is per-entry SNR, set to 10 + 10*log10(D) to sit in the detection transition
WORKING_POINT: dict = {
    "m": 3,
    "D": 45,
    "N": 200,
    "rho": 0.98,
    "delta_theta": 0.01,
    "kappa_b": 1.0,
    "L": 64,
    "M": 15,
    "snr_db": 26.5,
    "trials": 100,
    "master_seed": 0,
    **_settings.get("working_point", {}),
}

# No-delay variant: L = 1 needs D*L > N - L, hence D = 220 (snr_db = 10 + 10*log10(220))
NO_DELAY_POINT: dict = {**WORKING_POINT, "D": 220, "L": 1, "snr_db": 33.4}

# ── Runner Settings ──
THREADS = int(os.environ.get("MODESCOPE_THREADS", _settings.get("threads", os.cpu_count() or 1)))
OUTPUT_DIR = Path(_settings.get("output_dir", "results"))
LOG_DIR = Path(os.environ.get("MODESCOPE_LOG_DIR", _settings.get("log_dir", PROJECT_ROOT / "logs")))

# ── Numerical Tolerances ──
PINV_RTOL = 1e-12           # singular values below PINV_RTOL * sigma_1 count as zero
LOG_EPSILON = 1e-12         # zeta = log(score + eps)
STC_GATE = 1e-6             # quotient entries below STC_GATE * max|entry| are skipped
SENTINEL_SCORE = 1e6        # score for modes a detector cannot evaluate
IDENTICAL_SCORE_ATOL = 1e-9
EIGVEC_COND_LIMIT = 1e15
CDF_POINTS = 512


def resolve_workers(requested: int | None = None) -> int:
    """Resolve the number of worker threads for a run.

    Arguments:
    requested -- Worker count asked for on the command line (optional).
                 If None, uses THREADS. Integer or None.

    Returns: worker count, capped by MODESCOPE_THREADS / settings threads.

    Raises:
    ValueError -- If requested is smaller than 1.
    """
    if requested is not None and requested < 1:
        raise ValueError(f"Worker count must be at least 1, got {requested}")
    cap = max(THREADS, 1)
    if requested is None:
        return cap
    return min(requested, cap)

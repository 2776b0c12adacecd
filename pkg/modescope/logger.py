"""Structured JSONL logging to date-organized directories.

Provides logging functions for sweeps, CDF runs, identity verification,
single decompositions and failed trials. Logs are written to
{log_dir}/YYYY-MM-DD/{category}/ with UTC timestamps.

Directory structure:
    logs/YYYY-MM-DD/
    ├── runs/
    │   ├── sweep.jsonl        # Sweep summaries (hit probabilities, AUC)
    │   ├── cdf.jsonl          # Spurious-eigenvalue CDF runs
    │   ├── verify.jsonl       # Identity diagnostic runs
    │   └── decompose.jsonl    # Single-instance decompositions
    └── trials/
        └── failures.jsonl     # Trials excluded from hit probabilities
"""

import json
import threading
from datetime import datetime, timezone
from pathlib import Path

from modescope.config import LOG_DIR

# Base log directory; tests point this elsewhere
LOG_BASE: Path = LOG_DIR

# Sweeps log failures from worker threads
_write_lock = threading.Lock()


def _get_log_dir(category: str) -> Path:
    """Get today's log directory for a category, creating it if needed.

    Arguments:
    category -- Log category ("runs" or "trials"). String.

    Returns: Path object for today's categorized log directory (logs/YYYY-MM-DD/{category}/).
    """
    date_str = datetime.now().strftime("%Y-%m-%d")
    log_dir = LOG_BASE / date_str / category
    log_dir.mkdir(parents=True, exist_ok=True)
    return log_dir


def _append(category: str, filename: str, data: dict) -> None:
    """Append timestamped JSON line to categorized log file.

    Arguments:
    category -- Log category ("runs" or "trials"). String.
    filename -- Log file name (e.g., "sweep.jsonl"). String.
    data -- Dictionary of log fields to write. Dict.
    """
    data["timestamp"] = datetime.now(timezone.utc).isoformat()
    line = json.dumps(data, ensure_ascii=False) + "\n"
    with _write_lock:
        log_file = _get_log_dir(category) / filename
        with open(log_file, "a", encoding="utf-8") as f:
            f.write(line)


def log_sweep(
    *,
    parameter,
    grid,
    trials,
    master_seed,
    hit_prob,
    failures=0,
    auc=None,
    elapsed=0.0,
    out_dir=None,
) -> None:
    """Log a sweep summary to runs/sweep.jsonl.

    Arguments:
    parameter -- Swept parameter name. String.
    grid -- Grid values. List of floats.
    trials -- Trials per grid point. Integer.
    master_seed -- Master seed of the run. Integer.
    hit_prob -- Hit probabilities per method. Dict of method -> list of floats.
    failures -- Total failed trials (default: 0). Integer.
    auc -- Normalized AUC per method (default: None). Dict or None.
    elapsed -- Wall time in seconds (default: 0.0). Float.
    out_dir -- Output directory (default: None). String or None.
    """
    data = {
        "parameter": parameter,
        "grid": list(grid),
        "trials": trials,
        "master_seed": master_seed,
        "hit_prob": hit_prob,
        "failures": failures,
        "elapsed": elapsed,
    }
    if auc is not None:
        data["auc"] = auc
    if out_dir is not None:
        data["out_dir"] = str(out_dir)
    _append("runs", "sweep.jsonl", data)


def log_cdf(*, L_grid, trials, master_seed, medians, pool_sizes, elapsed=0.0) -> None:
    """Log a spurious-eigenvalue CDF run to runs/cdf.jsonl.

    Arguments:
    L_grid -- Embedding lengths. List of integers.
    trials -- Trials per embedding length. Integer.
    master_seed -- Master seed of the run. Integer.
    medians -- Median spurious magnitude per L. Dict.
    pool_sizes -- Number of pooled spurious eigenvalues per L. Dict.
    elapsed -- Wall time in seconds (default: 0.0). Float.
    """
    data = {
        "L_grid": list(L_grid),
        "trials": trials,
        "master_seed": master_seed,
        "medians": medians,
        "pool_sizes": pool_sizes,
        "elapsed": elapsed,
    }
    _append("runs", "cdf.jsonl", data)


def log_verify(*, seeds, checks_total, checks_failed, failed=None, elapsed=0.0) -> None:
    """Log an identity verification run to runs/verify.jsonl.

    Arguments:
    seeds -- Number of seeded instances. Integer.
    checks_total -- Number of checks evaluated. Integer.
    checks_failed -- Number of checks above tolerance. Integer.
    failed -- Names of the failed checks (default: None). List or None.
    elapsed -- Wall time in seconds (default: 0.0). Float.
    """
    data = {
        "seeds": seeds,
        "checks_total": checks_total,
        "checks_failed": checks_failed,
        "elapsed": elapsed,
    }
    if failed:
        data["failed"] = failed
    _append("runs", "verify.jsonl", data)


def log_decompose(*, seed, L, M, D, N, m_hat, out_dir=None) -> None:
    """Log a single decomposition export to runs/decompose.jsonl.

    Arguments:
    seed -- Trial index used to derive the instance. Integer.
    L -- Embedding length. Integer.
    M -- Truncation rank. Integer.
    D -- Spatial dimension. Integer.
    N -- Sample count. Integer.
    m_hat -- Order estimates per method. Dict.
    out_dir -- Output directory (default: None). String or None.
    """
    data = {"seed": seed, "L": L, "M": M, "D": D, "N": N, "m_hat": m_hat}
    if out_dir is not None:
        data["out_dir"] = str(out_dir)
    _append("runs", "decompose.jsonl", data)


def log_trial_failure(*, trial_index, child_seed, error, parameter=None, value=None) -> None:
    """Log a failed trial to trials/failures.jsonl.

    Arguments:
    trial_index -- Global trial index. Integer.
    child_seed -- Derived 64-bit seed of the trial. Integer.
    error -- Error message. String.
    parameter -- Swept parameter, if any (default: None). String or None.
    value -- Grid value, if any (default: None). Float or None.
    """
    data = {"trial_index": trial_index, "child_seed": child_seed, "error": error}
    if parameter is not None:
        data["parameter"] = parameter
        data["value"] = value
    _append("trials", "failures.jsonl", data)

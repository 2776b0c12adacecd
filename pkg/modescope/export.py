"""CSV, JSON and SVG emission for sweeps, AUC tables, spurious CDFs and single decompositions.

CSV files are the canonical output; SVG plots are written with a fixed hash
salt and no date metadata so identical results give identical bytes.
"""

import json
from pathlib import Path

import matplotlib
import numpy as np
import pandas as pd
from matplotlib.figure import Figure

from modescope.dmd_core import DmdDecomposition
from modescope.harness import SpuriousCdf, SweepResult, TrialResult
from modescope.selection import Method

SWEEP_COLUMNS = ["param_value", "method", "hits", "trials", "hit_prob", "failures"]
SCORE_COLUMNS = ["trial_id", "method", "mode_index", "score", "label", "eigval_re", "eigval_im"]

AXIS_LABELS = {
    "snr": "SNR (dB)",
    "dtheta": "minimal phase gap",
    "rho": "damping rho",
    "kappa": "amplitude ratio kappa_b",
    "m": "true order m",
    "M": "truncation rank M",
    "L": "embedding length L",
}

_SVG_RC = {"svg.hashsalt": "modescope", "svg.fonttype": "path"}


def _write_csv(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


# ── Sweeps ──

def sweep_frame(sweep: SweepResult) -> pd.DataFrame:
    """One row per (grid value, method); trials counts attempted trials."""
    hit_prob = sweep.hit_prob
    rows = [
        {
            "param_value": float(value),
            "method": method.value,
            "hits": int(sweep.hits[method][g]),
            "trials": sweep.trials,
            "hit_prob": float(hit_prob[method][g]),
            "failures": int(sweep.failures[g]),
        }
        for g, value in enumerate(sweep.grid)
        for method in sweep.methods
    ]
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def write_sweep_csv(sweep: SweepResult, path: Path) -> Path:
    return _write_csv(sweep_frame(sweep), path)


def read_sweep_csv(path: Path, parameter: str = "snr") -> SweepResult:
    """Rebuild a SweepResult from sweep.csv.

    Arguments:
    path -- CSV written by write_sweep_csv. Path.
    parameter -- Name of the swept parameter (default: "snr"). String.

    Returns: SweepResult without per-trial results; master_seed is unknown (-1).

    Raises:
    ValueError -- If required columns are missing or methods cover different grids.
    """
    frame = pd.read_csv(path)
    missing = {"param_value", "method", "hits", "trials"} - set(frame.columns)
    if missing:
        raise ValueError(f"{path} is missing columns: {', '.join(sorted(missing))}")
    if "failures" not in frame.columns:
        frame["failures"] = 0

    grid = np.sort(frame["param_value"].unique())
    methods = tuple(Method(name) for name in dict.fromkeys(frame["method"]))
    hits = {}
    for method in methods:
        rows = frame[frame["method"] == method.value].sort_values("param_value")
        if not np.array_equal(rows["param_value"].to_numpy(), grid):
            raise ValueError(f"Method {method.value} does not cover the full grid in {path}")
        hits[method] = rows["hits"].to_numpy(dtype=int)
    per_point = frame.drop_duplicates("param_value").sort_values("param_value")
    return SweepResult(
        parameter=parameter,
        grid=grid,
        methods=methods,
        hits=hits,
        failures=per_point["failures"].to_numpy(dtype=int),
        trials=int(frame["trials"].max()),
        master_seed=-1,
    )


def auc_frame(auc: dict) -> pd.DataFrame:
    return pd.DataFrame(
        [{"method": Method(method).value, "auc": float(value)} for method, value in auc.items()],
        columns=["method", "auc"],
    )


def write_auc_csv(auc: dict, path: Path) -> Path:
    return _write_csv(auc_frame(auc), path)


# ── Spurious CDF ──

def cdf_frame(cdf: SpuriousCdf) -> pd.DataFrame:
    """Long format: one row per (L, magnitude)."""
    parts = [
        pd.DataFrame({"L": L, "magnitude": cdf.magnitudes, "cdf": cdf.cdf[L]})
        for L in cdf.L_grid
    ]
    return pd.concat(parts, ignore_index=True)


def write_cdf_csv(cdf: SpuriousCdf, path: Path) -> Path:
    return _write_csv(cdf_frame(cdf), path)


# ── Per-Mode Scores ──

def score_frame(results) -> pd.DataFrame:
    """Per-mode scores and labels of every mode-level method in each trial."""
    rows = []
    for result in results:
        if result.failed:
            continue
        for method, vector in result.scores.items():
            labels = result.selections[method].labels
            for j, score in enumerate(vector.scores):
                rows.append({
                    "trial_id": result.trial_index,
                    "method": method.value,
                    "mode_index": j,
                    "score": float(score),
                    "label": "true" if labels[j] else "spurious",
                    "eigval_re": float(result.eigenvalues[j].real),
                    "eigval_im": float(result.eigenvalues[j].imag),
                })
    return pd.DataFrame(rows, columns=SCORE_COLUMNS)


def write_scores_csv(results: list[TrialResult], path: Path) -> Path:
    return _write_csv(score_frame(results), path)


# ── Single Decompositions ──

def eigenvalue_frame(decomp: DmdDecomposition) -> pd.DataFrame:
    """Eigenvalue table: polar form, amplitudes and mode norms per mode."""
    lam = decomp.eigenvalues
    return pd.DataFrame({
        "mode_index": np.arange(decomp.M),
        "eigval_re": lam.real,
        "eigval_im": lam.imag,
        "magnitude": np.abs(lam),
        "phase": np.angle(lam),
        "amplitude_re": decomp.amplitudes.real,
        "amplitude_im": decomp.amplitudes.imag,
        "exact_mode_norm": np.linalg.norm(decomp.exact_modes, axis=0),
    })


def write_eigenvalue_csv(decomp: DmdDecomposition, path: Path) -> Path:
    return _write_csv(eigenvalue_frame(decomp), path)


def decomposition_to_dict(decomp: DmdDecomposition, m_hat: dict | None = None) -> dict:
    """Decomposition as a JSON-ready dict; complex arrays are split into _re and _im lists."""
    data = {
        "L": decomp.L,
        "D": decomp.D,
        "M": decomp.M,
        "eigenvalues_re": decomp.eigenvalues.real.tolist(),
        "eigenvalues_im": decomp.eigenvalues.imag.tolist(),
        "amplitudes_re": decomp.amplitudes.real.tolist(),
        "amplitudes_im": decomp.amplitudes.imag.tolist(),
        "projected_modes_re": decomp.projected_modes.real.tolist(),
        "projected_modes_im": decomp.projected_modes.imag.tolist(),
        "exact_modes_re": decomp.exact_modes.real.tolist(),
        "exact_modes_im": decomp.exact_modes.imag.tolist(),
        "singular_values": decomp.svd.full_sigma.tolist(),
        "amplitudes_rank_deficient": decomp.amplitudes_rank_deficient,
    }
    if m_hat is not None:
        data["m_hat"] = {Method(k).value: int(v) for k, v in m_hat.items()}
    return data


def write_decomposition_json(decomp: DmdDecomposition, path: Path, m_hat: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(decomposition_to_dict(decomp, m_hat), indent=2) + "\n", encoding="utf-8")
    return path


# ── Plots ──

def _save_svg(fig: Figure, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context(_SVG_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def plot_sweep_svg(sweep: SweepResult, path: Path) -> Path:
    """Hit probability versus the swept parameter, one line per method."""
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    for method, prob in sweep.hit_prob.items():
        ax.plot(sweep.grid, prob, marker="o", label=method.value)
    ax.set_xlabel(AXIS_LABELS.get(sweep.parameter, sweep.parameter))
    ax.set_ylabel("order-hit probability")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(True)
    ax.legend(fontsize="small")
    fig.tight_layout()
    return _save_svg(fig, path)


def plot_cdf_svg(cdf: SpuriousCdf, path: Path) -> Path:
    """Empirical CDF of spurious eigenvalue magnitudes, one line per L."""
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    for L in cdf.L_grid:
        if not cdf.is_empty(L):
            ax.plot(cdf.magnitudes, cdf.cdf[L], label=f"L = {L}")
    ax.set_xlabel("|lambda| of spurious eigenvalues")
    ax.set_ylabel("empirical CDF")
    ax.grid(True)
    if any(not cdf.is_empty(L) for L in cdf.L_grid):
        ax.legend(fontsize="small")
    fig.tight_layout()
    return _save_svg(fig, path)

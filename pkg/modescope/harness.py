"""Seeded Monte-Carlo experiment runner.

Every trial draws its randomness from child_seed(master_seed, trial_index)
only, so trials can run on a thread pool in any order and still produce the
same aggregates. Sweeps, spurious-eigenvalue CDFs and the identity
verification all go through run_trial / generate_instance.
"""

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Literal

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.optimize
from pydantic import BaseModel, ConfigDict, Field, model_validator

from modescope import logger
from modescope.companion import (
    BlockCompanion,
    companion_dense,
    compression_error,
    fit_companion,
    kv_form_error,
    residual_identity_error,
    signal_subspace_basis,
    subspace_deviation_bound,
)
from modescope.config import CDF_POINTS, NO_DELAY_POINT, WORKING_POINT, resolve_workers
from modescope.dmd_core import DmdDecomposition, SnapshotPair, decompose, delay_embed, snapshot_pair
from modescope.errors import DecompositionError, RankDeficiencyError
from modescope.linalg import kv_vector, pinv, principal_angle_sine
from modescope.selection import (
    SCORERS,
    Method,
    ModeScoreVector,
    SelectionResult,
    binary_select,
    bic_order,
    esr_scores,
    gap_order,
)
from modescope.signal_gen import TWO_PI, NoiseSpec, SignalSpec, add_noise, generate_clean, make_spec

ALL_METHODS: tuple[Method, ...] = tuple(Method)
# Fekvf is defined at L = 1 but its recurrence has nothing to compare there
NO_DELAY_METHODS: tuple[Method, ...] = (
    Method.ESR_ENERGY, Method.EXACT_MODE_NORM, Method.EIG_MAGNITUDE, Method.BIC, Method.GAP,
)
# Numerical failures that mark a trial failed instead of aborting a sweep
TRIAL_ERRORS = (DecompositionError, RankDeficiencyError, scipy.linalg.LinAlgError)

# Sweep parameter names on the command line -> ExperimentConfig fields
SWEEP_PARAMETERS = {
    "snr": "snr_db",
    "dtheta": "delta_theta",
    "rho": "rho",
    "kappa": "kappa_b",
    "m": "m",
    "M": "M",
    "L": "L",
}
_INTEGER_FIELDS = {"m", "M", "L", "D", "N"}


# ── Configuration ──

class ExperimentConfig(BaseModel):
    """One experiment configuration, validated on construction.

    Field names are the JSON config keys. M must exceed m unless
    allow_order_override is set.

    noise_reference picks the power snr_db is measured against: "signal" is
    the mean power of the clean samples, "unit_amplitude" the mean power of
    the same instance with every amplitude set to 1, which keeps the noise
    floor fixed while kappa_b varies. Both agree at kappa_b = 1.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    m: int = Field(default=WORKING_POINT["m"], ge=1)
    D: int = Field(default=WORKING_POINT["D"], ge=1)
    N: int = Field(default=WORKING_POINT["N"], ge=2)
    rho: float = Field(default=WORKING_POINT["rho"], gt=0.0, le=1.0)
    delta_theta: float = Field(default=WORKING_POINT["delta_theta"], gt=0.0)
    kappa_b: float = Field(default=WORKING_POINT["kappa_b"], ge=1.0)
    L: int = Field(default=WORKING_POINT["L"], ge=1)
    M: int = Field(default=WORKING_POINT["M"], ge=1)
    snr_db: float = WORKING_POINT["snr_db"]
    noise_reference: Literal["unit_amplitude", "signal"] = "unit_amplitude"
    methods: tuple[Method, ...] = ALL_METHODS
    trials: int = Field(default=WORKING_POINT["trials"], ge=1)
    master_seed: int = Field(default=WORKING_POINT["master_seed"], ge=0, lt=2**64)
    allow_order_override: bool = False

    @model_validator(mode="after")
    def _check_consistency(self) -> "ExperimentConfig":
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ValueError(f"snr_db must be finite or +inf, got {self.snr_db}")
        if self.m > 1 and self.delta_theta > TWO_PI / self.m + 1e-15:
            raise ValueError(f"delta_theta must be at most 2*pi/m = {TWO_PI / self.m:.6f}, got {self.delta_theta}")
        if self.N - self.L < 2:
            raise ValueError(f"Need N - L >= 2, got N={self.N}, L={self.L}")
        if not self.allow_order_override and self.M <= self.m:
            raise ValueError(f"M must exceed m (got M={self.M}, m={self.m}); set allow_order_override to permit M <= m")
        p = min(self.D * self.L, self.N - self.L)
        if self.M > p:
            raise ValueError(f"M must not exceed min(D*L, N-L) = {p}, got M={self.M}")
        if not self.methods:
            raise ValueError("At least one method is required")
        for method in self.methods:
            if self.L < method.min_L:
                raise ValueError(f"{method.value} needs L >= {method.min_L}, got L={self.L}")
            if not method.is_order_only and self.M < 2:
                raise ValueError(f"{method.value} needs M >= 2 modes to select from, got M={self.M}")
        return self

    @classmethod
    def working_point(cls, **overrides) -> "ExperimentConfig":
        """Delay-coordinates working point (N=200, D=45, L=64, M=15, m=3)."""
        return cls(**{**WORKING_POINT, **overrides})

    @classmethod
    def no_delay_point(cls, **overrides) -> "ExperimentConfig":
        """Classical L = 1 configuration with D = 220 and the detectors defined at L = 1."""
        return cls(**{**NO_DELAY_POINT, "methods": NO_DELAY_METHODS, **overrides})

    @classmethod
    def from_json(cls, path: Path) -> "ExperimentConfig":
        """Load a config file whose keys are exactly the field names.

        Raises:
        ValueError -- On unknown keys or invalid values (pydantic ValidationError).
        """
        return cls.model_validate(json.loads(Path(path).read_text(encoding="utf-8")))

    def with_value(self, parameter: str, value: float) -> "ExperimentConfig":
        """Copy with one sweep parameter replaced, re-validated.

        Arguments:
        parameter -- Sweep parameter name (snr, dtheta, rho, kappa, m, M, L). String.
        value -- New value. Float.

        Raises:
        ValueError -- For unknown parameters, non-integral values of integer
                      fields, or a resulting invalid config.
        """
        key = resolve_parameter(parameter)
        if key in _INTEGER_FIELDS:
            if float(value) != int(value):
                raise ValueError(f"{parameter} must be an integer, got {value}")
            value = int(value)
        return type(self).model_validate({**self.model_dump(), key: value})

    @property
    def noise_enabled(self) -> bool:
        return not math.isinf(self.snr_db)


def resolve_parameter(parameter: str) -> str:
    """Map a sweep parameter name to its ExperimentConfig field.

    Raises:
    ValueError -- If the name is unknown, listing the valid names.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError(f"Unknown sweep parameter '{parameter}'. Valid: {', '.join(SWEEP_PARAMETERS)}")
    return SWEEP_PARAMETERS[parameter]


# ── Seeds ──

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_NOISE_STREAM = 0xD1B54A32D192ED03


def mix64(z: int) -> int:
    """SplitMix64 finalizer."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def child_seed(master_seed: int, trial_index: int) -> int:
    """64-bit trial seed mix64(master_seed XOR golden_gamma * trial_index)."""
    if trial_index < 0:
        raise ValueError(f"trial_index must be nonnegative, got {trial_index}")
    return mix64(master_seed ^ ((_GOLDEN_GAMMA * trial_index) & _MASK64))


def generate_instance(cfg: ExperimentConfig, seed: int) -> tuple[SignalSpec, np.ndarray, np.ndarray]:
    """Build the ground truth and the clean and noisy samples of one trial.

    The spec and the noise draw from separate streams derived from seed.

    Returns: tuple of (spec, clean samples, noisy samples), samples of shape (D, N).
    """
    spec = make_spec(cfg.m, cfg.D, cfg.N, cfg.rho, cfg.delta_theta, cfg.kappa_b, seed)
    clean = generate_clean(spec)
    reference = None
    if cfg.noise_reference == "unit_amplitude" and cfg.noise_enabled:
        unit = generate_clean(replace(spec, amplitudes=np.ones_like(spec.amplitudes)))
        reference = float(np.mean(np.abs(unit) ** 2))
    noise = NoiseSpec(snr_db=cfg.snr_db, seed=mix64(seed ^ _NOISE_STREAM), reference_power=reference)
    noisy = add_noise(clean, noise)
    return spec, clean, noisy


# ── Trials ──

@dataclass(frozen=True, eq=False)
class TrialResult:
    """Outcome of one trial.

    Attributes:
    trial_index -- Global trial index. Integer.
    seed -- Child seed of the trial. Integer.
    m -- True order. Integer.
    m_hat -- Order estimate per method; empty for failed trials. Dict.
    scores -- Per-mode scores of the mode-level methods. Dict of Method -> ModeScoreVector.
    selections -- Labels of the mode-level methods. Dict of Method -> SelectionResult.
    eigenvalues -- Computed DMD eigenvalues, or None for failed trials. Complex array (M,).
    error -- Failure message, or None. String or None.
    """

    trial_index: int
    seed: int
    m: int
    m_hat: dict = field(default_factory=dict)
    scores: dict = field(default_factory=dict)
    selections: dict = field(default_factory=dict)
    eigenvalues: np.ndarray | None = None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    def hit(self, method: Method) -> bool:
        return not self.failed and self.m_hat[method] == self.m


def evaluate_methods(
    decomp: DmdDecomposition,
    methods,
    n_cols: int,
) -> tuple[dict, dict, dict]:
    """Run every requested detector on one decomposition.

    Order-only baselines use max_order = min(M, p - 1) on the full singular
    values of X0.

    Returns: tuple of (m_hat, scores, selections) dicts keyed by Method.
    """
    m_hat: dict[Method, int] = {}
    scores: dict[Method, ModeScoreVector] = {}
    selections: dict[Method, SelectionResult] = {}
    max_order = min(decomp.M, decomp.svd.full_sigma.size - 1)
    for method in methods:
        method = Method(method)
        if method is Method.BIC:
            m_hat[method] = bic_order(decomp.svd, n_cols, max_order)
        elif method is Method.GAP:
            m_hat[method] = gap_order(decomp.svd, max_order)
        else:
            vector = SCORERS[method](decomp)
            selection = binary_select(vector)
            scores[method], selections[method], m_hat[method] = vector, selection, selection.m_hat
    return m_hat, scores, selections


def run_trial(
    cfg: ExperimentConfig,
    trial_index: int,
    *,
    parameter: str | None = None,
    value: float | None = None,
) -> TrialResult:
    """Generate, decompose and score one seeded instance.

    Decomposition failures mark the trial failed and are logged to
    trials/failures.jsonl.

    Arguments:
    cfg -- Experiment configuration. ExperimentConfig.
    trial_index -- Global trial index. Integer.
    parameter -- Swept parameter, recorded with failures (optional). String or None.
    value -- Grid value, recorded with failures (optional). Float or None.

    Returns: TrialResult.
    """
    seed = child_seed(cfg.master_seed, trial_index)
    _, _, noisy = generate_instance(cfg, seed)
    pair = snapshot_pair(noisy, cfg.L)
    try:
        decomp = decompose(pair, cfg.M)
    except TRIAL_ERRORS as e:
        logger.log_trial_failure(trial_index=trial_index, child_seed=seed, error=str(e),
                                 parameter=parameter, value=value)
        return TrialResult(trial_index=trial_index, seed=seed, m=cfg.m, error=str(e))

    m_hat, scores, selections = evaluate_methods(decomp, cfg.methods, pair.n_cols)
    return TrialResult(
        trial_index=trial_index,
        seed=seed,
        m=cfg.m,
        m_hat=m_hat,
        scores=scores,
        selections=selections,
        eigenvalues=decomp.eigenvalues,
    )


def _map_ordered(fn, tasks: list, workers: int | None) -> list:
    """Evaluate fn over tasks on a thread pool, returning results in task order."""
    n_workers = resolve_workers(workers)
    if n_workers == 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(fn, tasks))


# ── Sweeps ──

@dataclass(frozen=True, eq=False)
class SweepResult:
    """Hit counts of a one-parameter sweep.

    Attributes:
    parameter -- Sweep parameter name. String.
    grid -- Strictly increasing grid values. Array (G,).
    methods -- Methods evaluated. Tuple of Method.
    hits -- Hit counts per method and grid point. Dict of Method -> int array (G,).
    failures -- Failed trials per grid point. Int array (G,).
    trials -- Trials attempted per grid point. Integer.
    master_seed -- Master seed of the run. Integer.
    trial_results -- Per-trial outcomes when kept, grid-major. Tuple or None.
    """

    parameter: str
    grid: np.ndarray
    methods: tuple[Method, ...]
    hits: dict
    failures: np.ndarray
    trials: int
    master_seed: int
    trial_results: tuple | None = None

    @property
    def valid(self) -> np.ndarray:
        """Non-failed trials per grid point (the hit-probability denominator)."""
        return self.trials - self.failures

    @property
    def hit_prob(self) -> dict:
        """hits / valid per method; 0 where every trial failed."""
        valid = self.valid
        return {
            method: np.divide(counts, valid, out=np.zeros(len(self.grid)), where=valid > 0)
            for method, counts in self.hits.items()
        }


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("Grid must be a nonempty list of values")
    if np.any(np.isnan(grid)):
        raise ValueError("Grid values must not be NaN")
    if np.any(np.diff(grid) <= 0):
        raise ValueError(f"Grid must be strictly increasing, got {grid.tolist()}")
    return grid


def run_sweep(
    cfg: ExperimentConfig,
    parameter: str,
    grid,
    trials: int | None = None,
    workers: int | None = None,
    *,
    keep_trials: bool = False,
) -> SweepResult:
    """Vary one parameter over a grid, holding the rest of cfg fixed.

    Trial t at grid point g uses trial index g * trials + t, so grid points
    never share seeds and results do not depend on the worker count.

    Arguments:
    cfg -- Base configuration. ExperimentConfig.
    parameter -- One of snr, dtheta, rho, kappa, m, M, L. String.
    grid -- Strictly increasing values. Sequence of floats.
    trials -- Trials per grid point (default: cfg.trials). Integer or None.
    workers -- Thread count, capped by MODESCOPE_THREADS (optional). Integer or None.
    keep_trials -- Keep per-trial results for score export (default: False). Boolean.

    Returns: SweepResult.

    Raises:
    ValueError -- For an unknown parameter, a bad grid, or a grid value
                  yielding an invalid config.
    """
    resolve_parameter(parameter)
    grid = _check_grid(grid)
    trials = cfg.trials if trials is None else trials
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    configs = [cfg.with_value(parameter, value) for value in grid]

    def run(task: tuple[int, int]) -> TrialResult:
        g, t = task
        return run_trial(configs[g], g * trials + t, parameter=parameter, value=float(grid[g]))

    tasks = [(g, t) for g in range(grid.size) for t in range(trials)]
    results = _map_ordered(run, tasks, workers)

    hits = {method: np.zeros(grid.size, dtype=int) for method in cfg.methods}
    failures = np.zeros(grid.size, dtype=int)
    for (g, _), result in zip(tasks, results):
        if result.failed:
            failures[g] += 1
            continue
        for method in cfg.methods:
            hits[method][g] += result.hit(method)

    return SweepResult(
        parameter=parameter,
        grid=grid,
        methods=tuple(cfg.methods),
        hits=hits,
        failures=failures,
        trials=trials,
        master_seed=cfg.master_seed,
        trial_results=tuple(results) if keep_trials else None,
    )


def compute_auc(sweep: SweepResult) -> dict:
    """Normalized area under each hit-probability curve.

    Trapezoidal integral over the grid divided by the grid span; SNR grids are
    integrated in dB as given.

    Returns: dict of Method -> float in [0, 1].

    Raises:
    ValueError -- If the grid has fewer than two points or infinite values.
    """
    grid = np.asarray(sweep.grid, dtype=float)
    if grid.size < 2:
        raise ValueError(f"AUC needs at least two grid points, got {grid.size}")
    if not np.all(np.isfinite(grid)):
        raise ValueError("AUC needs a finite grid")
    span = grid[-1] - grid[0]
    return {
        method: float(scipy.integrate.trapezoid(prob, grid) / span)
        for method, prob in sweep.hit_prob.items()
    }


# ── Spurious Eigenvalues ──

def match_spurious(true_eigenvalues: np.ndarray, eigenvalues: np.ndarray) -> np.ndarray:
    """Eigenvalues left over after an optimal assignment to the true ones.

    The m true eigenvalues are matched to m of the M computed ones by minimum
    total distance |lambda^ - lambda|; the other M - m are spurious.

    Raises:
    ValueError -- If M < m.
    """
    true_eigenvalues = np.asarray(true_eigenvalues)
    eigenvalues = np.asarray(eigenvalues)
    if eigenvalues.size < true_eigenvalues.size:
        raise ValueError(f"Cannot match {true_eigenvalues.size} true eigenvalues to {eigenvalues.size} computed ones")
    cost = np.abs(eigenvalues[:, None] - true_eigenvalues[None, :])
    rows, _ = scipy.optimize.linear_sum_assignment(cost)
    spurious = np.ones(eigenvalues.size, dtype=bool)
    spurious[rows] = False
    return eigenvalues[spurious]


@dataclass(frozen=True, eq=False)
class SpuriousCdf:
    """Pooled spurious eigenvalue magnitudes per embedding length.

    Attributes:
    L_grid -- Embedding lengths. Tuple of integers.
    samples -- Sorted pooled |lambda^| per L. Dict of int -> array.
    magnitudes -- Evaluation points, uniform on [0, max(1, largest sample)]. Array (CDF_POINTS,).
    cdf -- Empirical CDF at the evaluation points per L; NaN when the pool is empty. Dict of int -> array.
    failures -- Failed trials per L. Dict of int -> int.
    trials -- Trials per L. Integer.
    """

    L_grid: tuple[int, ...]
    samples: dict
    magnitudes: np.ndarray
    cdf: dict
    failures: dict
    trials: int

    def is_empty(self, L: int) -> bool:
        return self.samples[L].size == 0

    def quantile(self, L: int, q: float) -> float:
        """Empirical q-quantile of the pooled magnitudes; NaN for an empty pool."""
        if self.is_empty(L):
            return float("nan")
        return float(np.quantile(self.samples[L], q))

    def median(self, L: int) -> float:
        return self.quantile(L, 0.5)


def _embedding_config(cfg: ExperimentConfig, L: int) -> ExperimentConfig:
    """Copy of cfg at embedding length L, keeping only the methods defined there."""
    methods = tuple(m for m in cfg.methods if m.min_L <= L) or (Method.ESR_ENERGY,)
    return cfg.model_copy(update={"methods": methods}).with_value("L", L)


def spurious_cdf(
    cfg: ExperimentConfig,
    L_grid,
    trials: int | None = None,
    workers: int | None = None,
) -> SpuriousCdf:
    """Pool spurious eigenvalue magnitudes over trials for each embedding length.

    Arguments:
    cfg -- Base configuration with M >= m. ExperimentConfig.
    L_grid -- Embedding lengths. Sequence of integers.
    trials -- Trials per L (default: cfg.trials). Integer or None.
    workers -- Thread count (optional). Integer or None.

    Returns: SpuriousCdf evaluated at CDF_POINTS magnitudes.

    Raises:
    ValueError -- If M < m, or any L yields an invalid config.
    """
    if cfg.M < cfg.m:
        raise ValueError(f"Matching needs M >= m, got M={cfg.M}, m={cfg.m}")
    L_values = [int(v) for v in _check_grid(L_grid)]
    trials = cfg.trials if trials is None else trials
    configs = [_embedding_config(cfg, L) for L in L_values]

    def run(task: tuple[int, int]) -> np.ndarray | None:
        g, t = task
        trial_cfg = configs[g]
        index = g * trials + t
        seed = child_seed(trial_cfg.master_seed, index)
        spec, _, noisy = generate_instance(trial_cfg, seed)
        try:
            decomp = decompose(snapshot_pair(noisy, trial_cfg.L), trial_cfg.M)
        except TRIAL_ERRORS as e:
            logger.log_trial_failure(trial_index=index, child_seed=seed, error=str(e), parameter="L",
                                     value=trial_cfg.L)
            return None
        return np.abs(match_spurious(spec.eigenvalues, decomp.eigenvalues))

    tasks = [(g, t) for g in range(len(L_values)) for t in range(trials)]
    results = _map_ordered(run, tasks, workers)

    samples: dict[int, np.ndarray] = {}
    failures: dict[int, int] = {}
    for g, L in enumerate(L_values):
        pooled = [r for (tg, _), r in zip(tasks, results) if tg == g]
        failures[L] = sum(r is None for r in pooled)
        kept = [r for r in pooled if r is not None]
        samples[L] = np.sort(np.concatenate(kept)) if kept else np.empty(0)

    top = max([1.0] + [float(s[-1]) for s in samples.values() if s.size])
    magnitudes = np.linspace(0.0, top, CDF_POINTS)
    cdf = {
        L: (np.searchsorted(s, magnitudes, side="right") / s.size if s.size else np.full(CDF_POINTS, np.nan))
        for L, s in samples.items()
    }
    return SpuriousCdf(
        L_grid=tuple(L_values),
        samples=samples,
        magnitudes=magnitudes,
        cdf=cdf,
        failures=failures,
        trials=trials,
    )


# ── Identity Verification ──

@dataclass(frozen=True)
class CheckResult:
    """One identity check on one instance.

    Attributes:
    name -- Check name. String.
    instance -- Seed index of the instance. Integer.
    value -- Measured error. Float.
    tolerance -- Pass threshold on value. Float.
    detail -- Extra context (optional). String.
    """

    name: str
    instance: int
    value: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tolerance)


@dataclass(frozen=True)
class VerifyReport:
    """All identity checks of a verify run."""

    checks: tuple[CheckResult, ...]
    seeds: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def summary(self) -> dict:
        """Per check name: count, failures and the worst value/tolerance ratio."""
        out: dict[str, dict] = {}
        for c in self.checks:
            entry = out.setdefault(c.name, {"count": 0, "failed": 0, "worst_ratio": 0.0})
            entry["count"] += 1
            entry["failed"] += not c.passed
            ratio = c.value / c.tolerance if c.tolerance > 0 else math.inf
            entry["worst_ratio"] = max(entry["worst_ratio"], ratio)
        return out


def identity_checks(
    pair: SnapshotPair,
    decomp: DmdDecomposition,
    companion: BlockCompanion,
    instance: int = 0,
) -> list[CheckResult]:
    """Operator identities that must hold for any decomposition of pair.

    Covers the ESR energy/projector equivalence, the companion residual
    identity, the compression A_M = U_M^H C_L U_M and, for wide snapshot
    matrices with full row rank, X1 X0^+ = C_L.
    """
    checks = []
    U = decomp.svd.U_M
    phi_e = decomp.exact_modes
    exact_norm_sq = np.sum(np.abs(phi_e) ** 2, axis=0)

    residual = phi_e - U @ (U.conj().T @ phi_e)
    projector_energy = np.sum(np.abs(residual) ** 2, axis=0)
    esr = esr_scores(decomp).scores
    esr_err = np.abs(esr - projector_energy) / np.maximum(1.0, exact_norm_sq)
    checks.append(CheckResult("esr_projector", instance, float(esr_err.max()), 1e-10))

    thm_err = residual_identity_error(decomp, companion) / (1.0 + np.sqrt(exact_norm_sq))
    checks.append(CheckResult("companion_residual", instance, float(thm_err.max()), 1e-8))

    checks.append(CheckResult("compression", instance, compression_error(decomp, companion), 1e-8))

    if pair.is_wide and np.linalg.matrix_rank(pair.X0) == pair.X0.shape[0]:
        dense_err = np.linalg.norm(pair.X1 @ pinv(pair.X0) - companion_dense(companion))
        checks.append(CheckResult("wide_regime", instance, float(dense_err), 1e-8,
                                  detail=f"D*L={pair.X0.shape[0]}, N-L={pair.n_cols}"))
    return checks


def data_side_kv_error(spec: SignalSpec, L: int) -> float:
    """Max entrywise error between a single-component embedding and b (v_L(lambda) (x) phi) lambda^k.

    Raises:
    ValueError -- If spec has more than one component.
    """
    if spec.m != 1:
        raise ValueError(f"Data-side KV identity needs a single-component spec, got m={spec.m}")
    lam, b, phi = spec.eigenvalues[0], spec.amplitudes[0], spec.modes[:, 0]
    embedded = delay_embed(generate_clean(spec), L)
    template = b * kv_vector(lam, phi, L)
    expected = template[:, None] * np.power(lam, np.arange(embedded.shape[1]))[None, :]
    return float(np.abs(embedded - expected).max())


def companion_eigenvector_error(D: int, L: int, seed: int) -> float:
    """Worst kv_form_error over the eigenvectors of a random dense block companion."""
    rng = np.random.default_rng(seed)
    scale = 0.5 / math.sqrt(D * L)
    predictor = scale * (rng.standard_normal((D, D * L)) + 1j * rng.standard_normal((D, D * L)))
    dense = companion_dense(BlockCompanion(predictor=predictor, L=L, D=D))
    eigvals, eigvecs = np.linalg.eig(dense)
    return max(kv_form_error(eigvecs[:, j], eigvals[j], L, D) for j in range(eigvals.size))


def subspace_bound_check(spec: SignalSpec, clean: np.ndarray, noisy: np.ndarray, decomp: DmdDecomposition,
                         instance: int = 0) -> CheckResult:
    """Compare the leading-m subspace deviation against the noise-perturbation bound."""
    L = decomp.L
    noise = delay_embed(noisy - clean, L)[:, :-1]
    noise_norm = float(np.linalg.norm(noise, 2))
    eta = subspace_deviation_bound(spec, L, noise_norm)
    angle = principal_angle_sine(decomp.svd.U_M[:, : spec.m], signal_subspace_basis(spec, L))
    if math.isinf(eta):
        return CheckResult("subspace_bound", instance, angle, math.inf, detail="bound vacuous")
    return CheckResult("subspace_bound", instance, angle, eta + 1e-10, detail=f"eta={eta:.3e}")


def verify(
    cfg: ExperimentConfig,
    seeds: int = 10,
    *,
    perturb: float = 0.0,
) -> VerifyReport:
    """Run the identity checks on seeded instances of cfg.

    Arguments:
    cfg -- Configuration of the instances. ExperimentConfig.
    seeds -- Number of seeded instances (>= 1). Integer.
    perturb -- Added to the leading eigenvalue before the checks; a nonzero
               value is a negative control (default: 0.0). Float.

    Returns: VerifyReport; report.passed is False if any check exceeds its tolerance.
    """
    if seeds < 1:
        raise ValueError(f"seeds must be >= 1, got {seeds}")
    start = time.time()
    checks: list[CheckResult] = []
    for i in range(seeds):
        seed = child_seed(cfg.master_seed, i)
        spec, clean, noisy = generate_instance(cfg, seed)
        pair = snapshot_pair(noisy, cfg.L)
        decomp = decompose(pair, cfg.M)
        companion = fit_companion(pair)
        if perturb:
            shifted = decomp.eigenvalues.copy()
            shifted[0] += perturb
            decomp = replace(decomp, eigenvalues=shifted)
        checks.extend(identity_checks(pair, decomp, companion, i))

        single = make_spec(1, cfg.D, cfg.N, cfg.rho, cfg.delta_theta, 1.0, seed)
        checks.append(CheckResult("data_side_kv", i, data_side_kv_error(single, min(cfg.L, 64)), 1e-12))
        checks.append(CheckResult("companion_eigenvectors", i,
                                  companion_eigenvector_error(min(cfg.D, 4), min(max(cfg.L, 2), 6), seed), 1e-8))
        if spec.m <= min(spec.D, cfg.M):
            checks.append(subspace_bound_check(spec, clean, noisy, decomp, i))

    report = VerifyReport(checks=tuple(checks), seeds=seeds)
    logger.log_verify(
        seeds=seeds,
        checks_total=len(report.checks),
        checks_failed=len(report.failed),
        failed=sorted({c.name for c in report.failed}),
        elapsed=round(time.time() - start, 3),
    )
    return report

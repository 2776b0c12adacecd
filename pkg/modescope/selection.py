"""Per-mode scores, binary mode selection and order-only baselines.

Mode-level detectors (ESR energy, nested rank-1 KV, FEKVF, STC, exact-mode
norm, eigenvalue magnitude) each return a ModeScoreVector; binary_select
splits it into true and spurious modes with an exact 1-D 2-means. BIC and GAP
estimate the order directly from the singular values of X0.
"""

import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg

from modescope.config import IDENTICAL_SCORE_ATOL, LOG_EPSILON, SENTINEL_SCORE, STC_GATE
from modescope.dmd_core import DmdDecomposition, TruncatedSvd
from modescope.errors import DegenerateSelectionWarning, ScoreSentinelWarning
from modescope.linalg import fixed_kv_fit, lag_matrix, vandermonde_vector


# ── Method Tags ──

class Orientation(str, Enum):
    SMALLER_IS_TRUE = "smaller"
    LARGER_IS_TRUE = "larger"


class Method(str, Enum):
    """Detector tags; string values are the names used in configs and CSV files."""

    ESR_ENERGY = "EsrEnergy"
    NESTED_KV = "NestedKv"
    FEKVF = "Fekvf"
    STC = "Stc"
    EXACT_MODE_NORM = "ExactModeNorm"
    EIG_MAGNITUDE = "EigMagnitude"
    BIC = "Bic"
    GAP = "Gap"

    @property
    def is_order_only(self) -> bool:
        """True for baselines that estimate m directly from singular values."""
        return self in (Method.BIC, Method.GAP)

    @property
    def orientation(self) -> Orientation:
        if self in (Method.EXACT_MODE_NORM, Method.EIG_MAGNITUDE):
            return Orientation.LARGER_IS_TRUE
        return Orientation.SMALLER_IS_TRUE

    @property
    def min_L(self) -> int:
        """Smallest embedding length the detector is defined for."""
        return {Method.NESTED_KV: 3, Method.STC: 2}.get(self, 1)


# ── Result Types ──

@dataclass(frozen=True, eq=False)
class ModeScoreVector:
    """Per-mode scores of one detector.

    Attributes:
    method -- Detector tag. Method.
    scores -- Raw (unscaled) scores, one per mode. Array (M,).
    epsilon -- Offset used by the log scaling in binary_select. Float.
    sentinel -- Modes whose score could not be evaluated. Boolean array (M,).
    """

    method: Method
    scores: np.ndarray
    epsilon: float = LOG_EPSILON
    sentinel: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "scores", np.array(self.scores, dtype=float))
        if self.method.is_order_only:
            raise ValueError(f"{self.method.value} estimates the order directly and has no per-mode scores")
        if self.scores.ndim != 1:
            raise ValueError(f"Scores must be one-dimensional, got shape {self.scores.shape}")
        if not np.all(np.isfinite(self.scores)):
            raise ValueError(f"{self.method.value} scores must be finite")
        mask = np.zeros(self.scores.shape, dtype=bool) if self.sentinel is None else np.array(self.sentinel, dtype=bool)
        object.__setattr__(self, "sentinel", mask)
        self.scores.setflags(write=False)
        self.sentinel.setflags(write=False)

    @property
    def orientation(self) -> Orientation:
        return self.method.orientation

    @property
    def has_sentinel(self) -> bool:
        return bool(self.sentinel.any())


@dataclass(frozen=True, eq=False)
class SelectionResult:
    """Binary labeling of M modes.

    Attributes:
    labels -- True for modes selected as true. Boolean array (M,).
    m_hat -- Number of true labels. Integer.
    cluster_means -- Mean feature of the true and the spurious cluster. Tuple of floats.
    degenerate -- All scores were identical and every mode was labeled true. Boolean.
    """

    labels: np.ndarray
    m_hat: int
    cluster_means: tuple[float, float]
    degenerate: bool = False

    def __post_init__(self):
        self.labels.setflags(write=False)


# ── Per-Mode Scores ──

def nested_kv_score(mode: np.ndarray, L: int, D: int) -> tuple[float, complex | None]:
    """KV deviation of one delay-coordinates mode via a rank-1 DMD along its lag axis.

    The mode is reshaped to its D x L lag matrix Y; columns 0..L-2 and 1..L-1
    form the inner snapshot pair. The rank-1 reconstruction is
    u1 (u1^H y0) v_L(lambda~)^T with lambda~ = u1^H Y1 v1 / s1.

    Arguments:
    mode -- Delay-coordinates vector. Complex array (D*L,).
    L -- Embedding length (>= 3). Integer.
    D -- Spatial dimension. Integer.

    Returns: tuple of (||Y - reconstruction||_F^2 / (D*L), lambda~); the score is
    SENTINEL_SCORE and lambda~ is None when the inner snapshot matrix is zero.

    Raises:
    ValueError -- If L < 3 or the mode has the wrong length.
    """
    if L < 3:
        raise ValueError(f"Nested rank-1 KV fit needs L >= 3, got L={L}")
    lag = lag_matrix(np.asarray(mode, dtype=complex), L, D)
    inner_x0, inner_x1 = lag[:, :-1], lag[:, 1:]
    U, s, Vh = scipy.linalg.svd(inner_x0, full_matrices=False)
    if not s[0] > 0.0:
        return SENTINEL_SCORE, None
    u1, v1 = U[:, 0], Vh[0].conj()
    lam = complex(np.vdot(u1, inner_x1 @ v1) / s[0])
    spatial = u1 * np.vdot(u1, lag[:, 0])
    residual = lag - np.outer(spatial, vandermonde_vector(lam, L))
    return float(np.vdot(residual, residual).real) / (D * L), lam


def fekvf_score(mode: np.ndarray, eigval: complex, L: int, D: int) -> float:
    """Fixed-eigenvalue KV fit residual ||Y - u* v_L(lambda)^T||_F^2 / (D*L)."""
    lag = lag_matrix(np.asarray(mode, dtype=complex), L, D)
    _, residual_sq = fixed_kv_fit(lag, eigval)
    return residual_sq / (D * L)


def stc_score(mode: np.ndarray, eigval: complex, L: int, D: int) -> float:
    """Median relative error of consecutive lag-block quotients against lambda.

    Entries of block l with magnitude at most STC_GATE * max|entry| are skipped.

    Returns: score, or SENTINEL_SCORE when lambda = 0 or no entry passes the gate.

    Raises:
    ValueError -- If L < 2.
    """
    if L < 2:
        raise ValueError(f"Quotient check needs L >= 2, got L={L}")
    if eigval == 0:
        return SENTINEL_SCORE
    lag = lag_matrix(np.asarray(mode, dtype=complex), L, D)
    scale = np.abs(lag).max()
    base, shifted = lag[:, :-1], lag[:, 1:]
    gate = np.abs(base) > STC_GATE * scale
    if not gate.any():
        return SENTINEL_SCORE
    quotients = shifted[gate] / base[gate]
    return float(np.median(np.abs(quotients - eigval)) / abs(eigval))


# ── Score Vectors ──

def _score_vector(method: Method, scores, sentinel=None) -> ModeScoreVector:
    vector = ModeScoreVector(method=method, scores=scores, sentinel=sentinel)
    if vector.has_sentinel:
        warnings.warn(
            f"{method.value}: {int(vector.sentinel.sum())} mode(s) could not be scored and were set to "
            f"{SENTINEL_SCORE:g}",
            ScoreSentinelWarning,
            stacklevel=3,
        )
    return vector


def esr_scores(decomp: DmdDecomposition) -> ModeScoreVector:
    """ESR energies ||phi_e_j||^2 - |lambda_j|^2, clamped at zero."""
    energy = np.sum(np.abs(decomp.exact_modes) ** 2, axis=0) - np.abs(decomp.eigenvalues) ** 2
    return _score_vector(Method.ESR_ENERGY, np.maximum(energy, 0.0))


def nested_kv_scores(decomp: DmdDecomposition) -> ModeScoreVector:
    """Nested rank-1 KV deviation of every projected mode (needs L >= 3)."""
    if decomp.L < 3:
        raise ValueError(f"Nested rank-1 KV fit needs L >= 3, got L={decomp.L}")
    fits = [nested_kv_score(decomp.projected_modes[:, j], decomp.L, decomp.D) for j in range(decomp.M)]
    return _score_vector(Method.NESTED_KV, [score for score, _ in fits], [lam is None for _, lam in fits])


def fekvf_scores(decomp: DmdDecomposition) -> ModeScoreVector:
    """Fixed-eigenvalue KV fit residual of every projected mode."""
    scores = [
        fekvf_score(decomp.projected_modes[:, j], decomp.eigenvalues[j], decomp.L, decomp.D)
        for j in range(decomp.M)
    ]
    return _score_vector(Method.FEKVF, scores)


def stc_scores(decomp: DmdDecomposition) -> ModeScoreVector:
    """Quotient-check scores of every projected mode (needs L >= 2)."""
    if decomp.L < 2:
        raise ValueError(f"Quotient check needs L >= 2, got L={decomp.L}")
    scores = np.array([
        stc_score(decomp.projected_modes[:, j], decomp.eigenvalues[j], decomp.L, decomp.D)
        for j in range(decomp.M)
    ])
    return _score_vector(Method.STC, scores, scores == SENTINEL_SCORE)


def mode_norm_scores(decomp: DmdDecomposition) -> ModeScoreVector:
    """Exact-mode norms ||phi_e_j||; larger is true."""
    return _score_vector(Method.EXACT_MODE_NORM, np.linalg.norm(decomp.exact_modes, axis=0))


def eig_magnitude_scores(decomp: DmdDecomposition) -> ModeScoreVector:
    """Eigenvalue magnitudes |lambda_j|; larger is true."""
    return _score_vector(Method.EIG_MAGNITUDE, np.abs(decomp.eigenvalues))


SCORERS = {
    Method.ESR_ENERGY: esr_scores,
    Method.NESTED_KV: nested_kv_scores,
    Method.FEKVF: fekvf_scores,
    Method.STC: stc_scores,
    Method.EXACT_MODE_NORM: mode_norm_scores,
    Method.EIG_MAGNITUDE: eig_magnitude_scores,
}


# ── Binary Selection ──

def _degenerate(size: int, mean: float) -> SelectionResult:
    warnings.warn("All scores are identical; labeling every mode as true", DegenerateSelectionWarning, stacklevel=3)
    return SelectionResult(labels=np.ones(size, dtype=bool), m_hat=size, cluster_means=(mean, mean), degenerate=True)


def select_from_features(features) -> SelectionResult:
    """Split features into two clusters with an exact 1-D 2-means; the lower-mean cluster is true.

    Every split point of the sorted features is scanned with prefix sums and
    the one with the smallest within-cluster sum of squares wins. Ties go to
    the split with fewer true modes.

    Arguments:
    features -- Transformed scores f_j, smaller meaning more likely true. Array (M,).

    Returns: SelectionResult.

    Raises:
    ValueError -- If fewer than two features are given or any is non-finite.
    """
    f = np.asarray(features, dtype=float)
    if f.ndim != 1 or f.size < 2:
        raise ValueError(f"Binary selection needs at least two scores, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("Binary selection needs finite scores")
    if np.ptp(f) == 0.0:
        return _degenerate(f.size, float(f[0]))

    order = np.argsort(f, kind="stable")
    ordered = f[order] - f.mean()
    n = ordered.size
    csum = np.concatenate([[0.0], np.cumsum(ordered)])
    csq = np.concatenate([[0.0], np.cumsum(ordered ** 2)])
    left = np.arange(1, n)
    right = n - left
    sse_left = csq[left] - csum[left] ** 2 / left
    sse_right = (csq[n] - csq[left]) - (csum[n] - csum[left]) ** 2 / right
    sse = sse_left + sse_right
    # equal costs up to roundoff count as ties
    tol = 1e-12 * max(float(sse.max()), np.finfo(float).tiny)
    split = int(left[np.flatnonzero(sse <= sse.min() + tol)[0]])

    labels = np.zeros(n, dtype=bool)
    labels[order[:split]] = True
    means = (float(f[order[:split]].mean()), float(f[order[split:]].mean()))
    return SelectionResult(labels=labels, m_hat=split, cluster_means=means)


def binary_select(scores: ModeScoreVector) -> SelectionResult:
    """Label modes as true or spurious.

    Smaller-is-true scores are mapped to log(score + epsilon), larger-is-true
    scores to -score; the result is clustered by select_from_features. A score
    vector whose raw spread is below IDENTICAL_SCORE_ATOL * max(1, max|score|)
    is degenerate: every mode is labeled true and m_hat = M. This is looser than
    bitwise equality, so nearly identical scores are also treated as degenerate.

    Raises:
    ValueError -- If M < 2, or a smaller-is-true score is negative.
    """
    raw = scores.scores
    if raw.size < 2:
        raise ValueError(f"Binary selection needs M >= 2 scores, got {raw.size}")
    # Relative tolerance, not exact equality: scores equal up to rounding count as identical
    if np.ptp(raw) <= IDENTICAL_SCORE_ATOL * max(1.0, float(np.abs(raw).max())):
        mean = float(raw.mean())
        return _degenerate(raw.size, mean)

    if scores.orientation is Orientation.SMALLER_IS_TRUE:
        if np.any(raw < 0.0):
            raise ValueError(f"{scores.method.value} scores must be nonnegative for log scaling")
        features = np.log(raw + scores.epsilon)
    else:
        features = -raw
    return select_from_features(features)


# ── Order-Only Baselines ──

def bic_order(svd: TruncatedSvd, n_cols: int, max_order: int) -> int:
    """Wax-Kailath BIC order estimate from the singular values of X0.

    With covariance eigenvalues l_i = sigma_i^2 / n_cols over the leading
    p = min(D*L, N-L) values, BIC(k) = -2 n (p-k) log(g_k / a_k) + k (2p-k) log n,
    where g_k and a_k are the geometric and arithmetic means of l_{k+1..p}.

    Arguments:
    svd -- Truncated SVD carrying the full singular-value list. TruncatedSvd.
    n_cols -- Number of snapshots n = N - L. Integer.
    max_order -- Largest order considered, < p. Integer.

    Returns: argmin over k = 0..max_order (ties to the smaller k).

    Raises:
    ValueError -- If max_order is outside [0, p-1] or n_cols < 1.
    """
    sigma = np.asarray(svd.full_sigma, dtype=float)
    p = sigma.size
    if not 0 <= max_order < p:
        raise ValueError(f"max_order must satisfy 0 <= max_order < p = {p}, got {max_order}")
    if n_cols < 1:
        raise ValueError(f"n_cols must be positive, got {n_cols}")
    eigs = np.maximum(sigma ** 2 / n_cols, 1e-300)
    log_eigs = np.log(eigs)
    log_n = np.log(n_cols)

    criteria = np.empty(max_order + 1)
    for k in range(max_order + 1):
        tail = p - k
        if tail == 1:
            data_term = 0.0
        else:
            log_ratio = log_eigs[k:].mean() - np.log(eigs[k:].mean())
            data_term = -2.0 * n_cols * tail * log_ratio
        criteria[k] = data_term + k * (2 * p - k) * log_n
    return int(np.argmin(criteria))


def gap_order(svd: TruncatedSvd, max_order: int) -> int:
    """Largest consecutive singular-value ratio argmax_{1<=j<=max_order} sigma_j / sigma_{j+1}.

    The first j with sigma_{j+1} = 0 wins immediately; ties go to the smallest j.

    Raises:
    ValueError -- If max_order is outside [1, len(sigma) - 1].
    """
    sigma = np.asarray(svd.full_sigma, dtype=float)
    if not 1 <= max_order <= sigma.size - 1:
        raise ValueError(f"max_order must satisfy 1 <= max_order <= {sigma.size - 1}, got {max_order}")
    zeros = np.flatnonzero(sigma[1:max_order + 1] == 0.0)
    if zeros.size:
        return int(zeros[0]) + 1
    ratios = sigma[:max_order] / sigma[1:max_order + 1]
    best = np.flatnonzero(ratios >= ratios.max() * (1.0 - 1e-12))[0]
    return int(best) + 1

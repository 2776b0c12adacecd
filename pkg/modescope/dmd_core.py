"""Delay-coordinates DMD: embedding, snapshot pairing, truncated SVD,
reduced propagator, projected/exact modes, amplitudes and reconstruction.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from modescope.config import EIGVEC_COND_LIMIT, PINV_RTOL
from modescope.errors import AmplitudeWarning, DecompositionError, RankDeficiencyError, RegimeWarning


def _freeze(*arrays: np.ndarray) -> None:
    for arr in arrays:
        arr.setflags(write=False)


@dataclass(frozen=True, eq=False)
class SnapshotPair:
    """Time-aligned delay-embedded snapshot matrices; X1 leads X0 by one step.

    Attributes:
    X0 -- Complex array (D*L, N-L).
    X1 -- Complex array (D*L, N-L).
    L -- Embedding length. Integer.
    D -- Spatial dimension. Integer.
    """

    X0: np.ndarray
    X1: np.ndarray
    L: int
    D: int

    def __post_init__(self):
        if self.X0.shape != self.X1.shape:
            raise ValueError(f"X0 and X1 must have the same shape, got {self.X0.shape} and {self.X1.shape}")
        if self.X0.shape[0] != self.D * self.L:
            raise ValueError(f"Row count must equal D*L = {self.D * self.L}, got {self.X0.shape[0]}")

    @property
    def n_cols(self) -> int:
        return self.X0.shape[1]

    @property
    def is_wide(self) -> bool:
        """True when D*L <= N-L (more snapshots than embedded coordinates)."""
        return self.D * self.L <= self.n_cols


@dataclass(frozen=True, eq=False)
class TruncatedSvd:
    """Rank-M factors of X0 plus the complete singular-value list.

    Attributes:
    U_M -- Orthonormal left factor. Complex array (D*L, M).
    sigma -- Leading singular values, nonincreasing, positive. Array (M,).
    V_M -- Orthonormal right factor. Complex array (N-L, M).
    full_sigma -- All min(D*L, N-L) singular values. Array.
    """

    U_M: np.ndarray
    sigma: np.ndarray
    V_M: np.ndarray
    full_sigma: np.ndarray

    def __post_init__(self):
        _freeze(self.U_M, self.sigma, self.V_M, self.full_sigma)

    @property
    def rank(self) -> int:
        return self.sigma.size


@dataclass(frozen=True, eq=False)
class DmdDecomposition:
    """Rank-M delay-coordinates DMD of one snapshot pair.

    Eigenpairs are sorted by descending |lambda|, ties by descending phase.

    Attributes:
    eigenvalues -- DMD eigenvalues. Complex array (M,).
    reduced_vectors -- Unit-norm eigenvectors w_j of A_M as columns. Complex array (M, M).
    projected_modes -- U_M w_j. Complex array (D*L, M).
    exact_modes -- X1 V_M Sigma_M^{-1} w_j. Complex array (D*L, M).
    amplitudes -- Least-squares amplitudes on the projected modes. Complex array (M,).
    svd -- Truncated SVD of X0. TruncatedSvd.
    reduced_propagator -- A_M = U_M^H X1 V_M Sigma_M^{-1}. Complex array (M, M).
    L, D, M -- Embedding length, spatial dimension, truncation rank. Integers.
    amplitudes_rank_deficient -- Minimum-norm amplitudes were returned. Boolean.
    """

    eigenvalues: np.ndarray
    reduced_vectors: np.ndarray
    projected_modes: np.ndarray
    exact_modes: np.ndarray
    amplitudes: np.ndarray
    svd: TruncatedSvd
    reduced_propagator: np.ndarray
    L: int
    D: int
    M: int
    amplitudes_rank_deficient: bool = False

    def __post_init__(self):
        _freeze(self.eigenvalues, self.reduced_vectors, self.projected_modes, self.exact_modes, self.amplitudes,
                self.reduced_propagator)


def delay_embed(samples: np.ndarray, L: int) -> np.ndarray:
    """Stack L consecutive samples into each column.

    Arguments:
    samples -- Samples x_0..x_{N-1} as columns; a 1-D array is treated as D = 1. Array (D, N).
    L -- Embedding length, 1 <= L < N. Integer.

    Returns: array of shape (D*L, N-L+1) whose column k is [x_k; ...; x_{k+L-1}].

    Raises:
    ValueError -- If L is out of range.
    """
    samples = np.atleast_2d(np.asarray(samples))
    N = samples.shape[1]
    if not 1 <= L < N:
        raise ValueError(f"Embedding length must satisfy 1 <= L < N = {N}, got L={L}")
    n_cols = N - L + 1
    return np.vstack([samples[:, lag:lag + n_cols] for lag in range(L)])


def snapshot_pair(samples: np.ndarray, L: int) -> SnapshotPair:
    """Pair each delay vector with its immediate successor.

    Raises:
    ValueError -- If N - L < 2.
    """
    samples = np.atleast_2d(np.asarray(samples))
    D, N = samples.shape
    if N - L < 2:
        raise ValueError(f"Need N - L >= 2 snapshot pairs, got N={N}, L={L}")
    hankel = delay_embed(samples, L)
    return SnapshotPair(X0=hankel[:, :-1], X1=hankel[:, 1:], L=L, D=D)


def truncated_svd(X0: np.ndarray, M: int) -> TruncatedSvd:
    """Best rank-M factors of X0.

    Raises:
    ValueError -- If M is outside [1, min(X0.shape)].
    RankDeficiencyError -- If sigma_M < PINV_RTOL * sigma_1 (Sigma_M not invertible).
    """
    p = min(X0.shape)
    if not 1 <= M <= p:
        raise ValueError(f"Truncation rank must satisfy 1 <= M <= min(D*L, N-L) = {p}, got M={M}")
    U, s, Vh = scipy.linalg.svd(X0, full_matrices=False)
    if s[0] == 0.0 or s[M - 1] < PINV_RTOL * s[0]:
        raise RankDeficiencyError(
            f"X0 has numerical rank below M={M}: sigma_M = {s[M - 1]:.3e}, sigma_1 = {s[0]:.3e}"
        )
    return TruncatedSvd(U_M=U[:, :M].copy(), sigma=s[:M].copy(), V_M=Vh[:M].conj().T, full_sigma=s)


def _fix_gauge(W: np.ndarray) -> np.ndarray:
    """Normalize columns to unit norm and rotate the first nonzero entry to the positive real axis."""
    W = W / np.linalg.norm(W, axis=0)
    for j in range(W.shape[1]):
        col = W[:, j]
        pivot = np.flatnonzero(np.abs(col) > 1e-12 * np.abs(col).max())[0]
        W[:, j] = col * (np.conj(col[pivot]) / abs(col[pivot]))
    return W


def _least_squares_amplitudes(modes: np.ndarray, x0: np.ndarray) -> tuple[np.ndarray, bool]:
    coeffs, _, rank, _ = scipy.linalg.lstsq(modes, x0, cond=PINV_RTOL)
    return coeffs, rank < modes.shape[1]


def decompose(pair: SnapshotPair, M: int) -> DmdDecomposition:
    """Rank-M DMD of a snapshot pair.

    Arguments:
    pair -- Snapshot matrices. SnapshotPair.
    M -- Truncation rank. Integer.

    Returns: DmdDecomposition with amplitudes fitted to the first embedded column.

    Raises:
    ValueError, RankDeficiencyError -- As truncated_svd.
    DecompositionError -- If the reduced eigenproblem fails or is numerically defective.
    """
    if pair.is_wide:
        warnings.warn(
            f"Wide snapshot matrix (D*L = {pair.D * pair.L} <= N-L = {pair.n_cols}); "
            "residual scores only measure truncation",
            RegimeWarning,
            stacklevel=2,
        )
    svd = truncated_svd(pair.X0, M)
    lifted = (pair.X1 @ svd.V_M) / svd.sigma
    propagator = svd.U_M.conj().T @ lifted

    try:
        eigvals, W = scipy.linalg.eig(propagator)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise DecompositionError(f"Eigensolver failed on the reduced propagator: {e}") from e
    if not (np.all(np.isfinite(eigvals)) and np.all(np.isfinite(W))):
        raise DecompositionError("Eigensolver returned non-finite eigenpairs")
    condition = float(np.linalg.cond(W))
    if not condition < EIGVEC_COND_LIMIT:
        raise DecompositionError("Reduced propagator is numerically defective", condition=condition)

    order = np.lexsort((-np.angle(eigvals), -np.abs(eigvals)))
    eigvals = eigvals[order]
    W = _fix_gauge(W[:, order])

    projected = svd.U_M @ W
    exact = lifted @ W
    amplitudes, deficient = _least_squares_amplitudes(projected, pair.X0[:, 0])
    if deficient:
        warnings.warn("Projected mode matrix is rank deficient; using minimum-norm amplitudes",
                      AmplitudeWarning, stacklevel=2)

    return DmdDecomposition(
        eigenvalues=eigvals,
        reduced_vectors=W,
        projected_modes=projected,
        exact_modes=exact,
        amplitudes=amplitudes,
        svd=svd,
        reduced_propagator=propagator,
        L=pair.L,
        D=pair.D,
        M=M,
        amplitudes_rank_deficient=deficient,
    )


def fit_amplitudes(decomp: DmdDecomposition, first_embedded_column: np.ndarray) -> np.ndarray:
    """Least-squares amplitudes b with Phi_p b ~= x0 (minimum-norm when Phi_p is rank deficient).

    Arguments:
    decomp -- Decomposition providing the projected modes. DmdDecomposition.
    first_embedded_column -- Initial delay vector x~_0. Complex array (D*L,).

    Returns: complex array (M,).
    """
    x0 = np.asarray(first_embedded_column, dtype=complex)
    if x0.shape != (decomp.D * decomp.L,):
        raise ValueError(f"Initial delay vector must have length D*L = {decomp.D * decomp.L}, got {x0.shape}")
    amplitudes, deficient = _least_squares_amplitudes(decomp.projected_modes, x0)
    if deficient:
        warnings.warn("Projected mode matrix is rank deficient; using minimum-norm amplitudes",
                      AmplitudeWarning, stacklevel=2)
    return amplitudes


def reconstruct(decomp: DmdDecomposition, k: int) -> np.ndarray:
    """Order-M approximation Phi Lambda^k b of delay vector k (prediction for k > N-L)."""
    if k < 0:
        raise ValueError(f"Time index must be nonnegative, got {k}")
    return decomp.projected_modes @ (decomp.eigenvalues ** k * decomp.amplitudes)


def predict_original(decomp: DmdDecomposition, k: int) -> np.ndarray:
    """First D entries of reconstruct(decomp, k): the sample-space estimate of x_k."""
    return reconstruct(decomp, k)[: decomp.D]


def reconstruct_trajectory(decomp: DmdDecomposition, n_steps: int) -> np.ndarray:
    """Stack reconstruct(decomp, k) for k = 0..n_steps-1 as columns."""
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    dynamics = np.power(decomp.eigenvalues[:, None], np.arange(n_steps)[None, :])
    return decomp.projected_modes @ (decomp.amplitudes[:, None] * dynamics)


def relative_reconstruction_error(decomp: DmdDecomposition, X: np.ndarray) -> float:
    """||X - reconstruction||_F / ||X||_F over the columns of X."""
    approx = reconstruct_trajectory(decomp, X.shape[1])
    return float(np.linalg.norm(X - approx) / np.linalg.norm(X))

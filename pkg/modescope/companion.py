"""Block-companion least-squares propagator C_L and operator-identity diagnostics.

C_L shifts the lag blocks of a delay vector up by one and predicts the next
sample with the Moore-Penrose predictor B = X1^{(L-1)} X0^+. Only B is stored.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from modescope.dmd_core import DmdDecomposition, SnapshotPair
from modescope.errors import RankDeficiencyError
from modescope.linalg import fixed_kv_fit, lag_matrix, orthonormal_basis, pinv, vandermonde
from modescope.signal_gen import SignalSpec, measure_delta_theta


@dataclass(frozen=True, eq=False)
class BlockCompanion:
    """Block-companion operator represented by its last block row.

    Attributes:
    predictor -- B = [B_1 ... B_L]. Complex array (D, D*L).
    L -- Embedding length. Integer.
    D -- Spatial dimension. Integer.
    """

    predictor: np.ndarray
    L: int
    D: int

    def __post_init__(self):
        if self.predictor.shape != (self.D, self.D * self.L):
            raise ValueError(f"Predictor must have shape (D, D*L) = ({self.D}, {self.D * self.L}), "
                             f"got {self.predictor.shape}")
        if not np.all(np.isfinite(self.predictor)):
            raise ValueError("Predictor has non-finite entries")
        self.predictor.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.D * self.L


def fit_companion(pair: SnapshotPair) -> BlockCompanion:
    """Fit C_L with the Moore-Penrose last-block-row predictor.

    Raises:
    RankDeficiencyError -- If X0 is identically zero.
    """
    if not np.any(pair.X0):
        raise RankDeficiencyError("Cannot fit a predictor to an all-zero snapshot matrix")
    last_block = pair.X1[-pair.D:, :]
    return BlockCompanion(predictor=last_block @ pinv(pair.X0), L=pair.L, D=pair.D)


def companion_matvec(c: BlockCompanion, v: np.ndarray) -> np.ndarray:
    """Apply C_L to a vector, or to every column of a matrix, without materializing C_L.

    Raises:
    ValueError -- If the leading dimension is not D*L.
    """
    v = np.asarray(v)
    if v.shape[0] != c.dim or v.ndim > 2:
        raise ValueError(f"Expected leading dimension D*L = {c.dim}, got shape {v.shape}")
    out = np.empty(v.shape, dtype=np.result_type(v, c.predictor))
    out[: c.dim - c.D] = v[c.D:]
    out[c.dim - c.D:] = c.predictor @ v
    return out


def companion_dense(c: BlockCompanion) -> np.ndarray:
    """Materialize C_L; only meant for small test oracles and the wide-regime check."""
    dense = np.zeros((c.dim, c.dim), dtype=c.predictor.dtype)
    dense[: c.dim - c.D, c.D:] = np.eye(c.dim - c.D)
    dense[c.dim - c.D:] = c.predictor
    return dense


def _check_matching(decomp: DmdDecomposition, c: BlockCompanion) -> None:
    if (decomp.L, decomp.D) != (c.L, c.D):
        raise ValueError(f"Decomposition (L={decomp.L}, D={decomp.D}) and companion (L={c.L}, D={c.D}) "
                         "come from different embeddings")


def residual_identity_error(decomp: DmdDecomposition, c: BlockCompanion) -> np.ndarray:
    """Per-mode error ||(C_L - lambda_j I) phi_p_j - (I - U_M U_M^H) phi_e_j||_2.

    Returns: array (M,); each entry should stay below 1e-8 * (1 + ||phi_e_j||).
    """
    _check_matching(decomp, c)
    phi_p, phi_e = decomp.projected_modes, decomp.exact_modes
    U = decomp.svd.U_M
    lhs = companion_matvec(c, phi_p) - phi_p * decomp.eigenvalues
    residual = phi_e - U @ (U.conj().T @ phi_e)
    return np.linalg.norm(lhs - residual, axis=0)


def compression_error(decomp: DmdDecomposition, c: BlockCompanion) -> float:
    """||A_M - U_M^H C_L U_M||_F, with C_L U_M evaluated by matvec."""
    _check_matching(decomp, c)
    U = decomp.svd.U_M
    compressed = U.conj().T @ companion_matvec(c, U)
    return float(np.linalg.norm(decomp.reduced_propagator - compressed))


def kv_form_error(eigvec: np.ndarray, eigval: complex, L: int, D: int) -> float:
    """Relative distance of a delay vector from the KV template phi v_L(mu)^T.

    The spatial factor is the least-squares fit with mu held fixed, which is
    the first lag block when the input is exactly KV.

    Returns: ||Y - phi* v_L(mu)^T||_F / ||Y||_F, with Y the D x L lag matrix.

    Raises:
    ValueError -- If the vector is zero or has the wrong length.
    """
    lag = lag_matrix(np.asarray(eigvec, dtype=complex), L, D)
    norm_sq = float(np.vdot(lag, lag).real)
    if norm_sq == 0.0:
        raise ValueError("KV form is undefined for the zero vector")
    _, residual_sq = fixed_kv_fit(lag, eigval)
    return float(np.sqrt(residual_sq / norm_sq))


def subspace_deviation_bound(spec: SignalSpec, L: int, noise_norm: float) -> float:
    """Upper bound eta on sin(theta_max) between col(U_m) and the signal subspace.

    eta = ||E||_2 / (sigma_m(Phi) min|b_j| sigma_m(V_L) sigma_m(V_{N-L}) - ||E||_2),
    with the Vandermonde singular values computed numerically.

    Arguments:
    spec -- Ground truth. SignalSpec.
    L -- Embedding length. Integer.
    noise_norm -- Spectral norm of the noise part of X0. Float.

    Returns: eta, or +inf when the denominator is not positive.

    Raises:
    ValueError -- If phases repeat, Phi is rank deficient, or noise_norm < 0.
    """
    if noise_norm < 0.0:
        raise ValueError(f"noise_norm must be nonnegative, got {noise_norm}")
    if not 1 <= L < spec.N - 1:
        raise ValueError(f"Need 1 <= L < N-1, got L={L}, N={spec.N}")
    if spec.m > 1 and measure_delta_theta(spec.theta) <= 0.0:
        raise ValueError("Degenerate spec: repeated phases")
    m = spec.m
    sigma_phi = scipy.linalg.svdvals(spec.modes)[m - 1] if spec.D >= m else 0.0
    if sigma_phi <= 0.0:
        raise ValueError("Degenerate spec: spatial modes are linearly dependent")

    def smallest(n: int) -> float:
        return float(scipy.linalg.svdvals(vandermonde(spec.eigenvalues, n))[m - 1]) if n >= m else 0.0

    signal_floor = sigma_phi * np.abs(spec.amplitudes).min() * smallest(L) * smallest(spec.N - L)
    denominator = signal_floor - noise_norm
    if denominator <= 0.0:
        return float("inf")
    return float(noise_norm / denominator)


def signal_subspace_basis(spec: SignalSpec, L: int) -> np.ndarray:
    """Orthonormal basis of span{v_L(lambda_j) (x) phi_j}, the embedded signal subspace."""
    lifted = np.column_stack([
        np.kron(vandermonde(spec.eigenvalues[j:j + 1], L)[:, 0], spec.modes[:, j]) for j in range(spec.m)
    ])
    return orthonormal_basis(lifted)

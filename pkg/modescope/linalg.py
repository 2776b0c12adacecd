"""Shared linear-algebra helpers: Vandermonde/KV templates, lag reshaping,
pseudoinverse with the package cutoff, orthonormal bases and principal angles.
"""

import numpy as np
import scipy.linalg

from modescope.config import PINV_RTOL


def vandermonde_vector(lam: complex, n: int) -> np.ndarray:
    """Return v_n(lam) = [1, lam, ..., lam^(n-1)].

    Arguments:
    lam -- Node. Complex.
    n -- Length. Integer.

    Returns: complex array of shape (n,).
    """
    return np.power(complex(lam), np.arange(n))


def vandermonde(nodes, n: int) -> np.ndarray:
    """Return the n x m Vandermonde matrix with columns v_n(nodes[j]).

    Arguments:
    nodes -- Nodes lambda_1..lambda_m. Array-like of complex.
    n -- Number of rows. Integer.

    Returns: complex array of shape (n, m).
    """
    nodes = np.asarray(nodes, dtype=complex)
    return np.power(nodes[None, :], np.arange(n)[:, None])


def kv_vector(lam: complex, phi: np.ndarray, L: int) -> np.ndarray:
    """Return the Kronecker-Vandermonde vector v_L(lam) (x) phi of length D*L."""
    return np.kron(vandermonde_vector(lam, L), np.asarray(phi, dtype=complex))


def lag_matrix(vec: np.ndarray, L: int, D: int) -> np.ndarray:
    """Reshape a delay-coordinates vector into its D x L lag matrix.

    Block l (entries l*D .. l*D+D-1) becomes column l.

    Arguments:
    vec -- Vector of length D*L. Array.
    L -- Embedding length. Integer.
    D -- Spatial dimension. Integer.

    Returns: complex array of shape (D, L).

    Raises:
    ValueError -- If the length is not D*L.
    """
    vec = np.asarray(vec)
    if vec.shape != (D * L,):
        raise ValueError(f"Expected a vector of length D*L = {D * L}, got shape {vec.shape}")
    return vec.reshape(L, D).T


def fixed_kv_fit(lag: np.ndarray, lam: complex) -> tuple[np.ndarray, float]:
    """Least-squares fit of a D x L lag matrix by phi v_L(lam)^T with lam held fixed.

    Arguments:
    lag -- Lag matrix. Complex array (D, L).
    lam -- Lag multiplier. Complex.

    Returns: tuple of (phi*, squared Frobenius residual).
    """
    a = vandermonde_vector(lam, lag.shape[1])
    phi = lag @ a.conj() / np.vdot(a, a).real
    residual = lag - np.outer(phi, a)
    return phi, float(np.vdot(residual, residual).real)


def pinv(X: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudoinverse with the shared cutoff PINV_RTOL * sigma_1."""
    return scipy.linalg.pinv(X, atol=0.0, rtol=PINV_RTOL)


def orthonormal_basis(X: np.ndarray) -> np.ndarray:
    """Orthonormal basis of col(X), dropping directions below the shared cutoff."""
    return scipy.linalg.orth(X, rcond=PINV_RTOL)


def principal_angle_sine(basis_a: np.ndarray, basis_b: np.ndarray) -> float:
    """Sine of the largest principal angle between two equal-dimension subspaces.

    Evaluated as ||(I - Q_b Q_b^H) Q_a||_2 so no D*L x D*L projector is formed.
    """
    residual = basis_a - basis_b @ (basis_b.conj().T @ basis_a)
    return float(scipy.linalg.norm(residual, 2))

"""Synthetic noisy exponential signals for order-detection experiments.

A signal is s_k = sum_j b_j phi_j lambda_j^k with lambda_j = rho_j e^{i theta_j}
and unit-norm spatial modes phi_j. Generation is controlled by the minimal
phase gap, the common damping rho, the amplitude ratio kappa_b and the SNR.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, eq=False)
class SignalSpec:
    """Ground-truth generator parameters.

    Attributes:
    m -- Number of true modes. Integer.
    rho -- Eigenvalue magnitudes in (0, 1]. Array (m,).
    theta -- Eigenvalue phases in [0, 2*pi). Array (m,).
    modes -- Unit-norm spatial modes as columns. Complex array (D, m).
    amplitudes -- Nonzero mode amplitudes b_j. Complex array (m,).
    D -- Spatial dimension. Integer.
    N -- Number of samples. Integer.
    """

    m: int
    rho: np.ndarray
    theta: np.ndarray
    modes: np.ndarray
    amplitudes: np.ndarray
    D: int
    N: int

    def __post_init__(self):
        object.__setattr__(self, "rho", np.array(self.rho, dtype=float))
        object.__setattr__(self, "theta", np.array(self.theta, dtype=float))
        object.__setattr__(self, "modes", np.array(self.modes, dtype=complex))
        object.__setattr__(self, "amplitudes", np.array(self.amplitudes, dtype=complex))
        if self.m < 1 or self.D < 1 or self.N < 2:
            raise ValueError(f"Need m >= 1, D >= 1, N > 1; got m={self.m}, D={self.D}, N={self.N}")
        if self.rho.shape != (self.m,) or self.theta.shape != (self.m,) or self.amplitudes.shape != (self.m,):
            raise ValueError(f"rho, theta and amplitudes must each have length m={self.m}")
        if self.modes.shape != (self.D, self.m):
            raise ValueError(f"modes must have shape (D, m) = ({self.D}, {self.m}), got {self.modes.shape}")
        if np.any(self.rho <= 0.0) or np.any(self.rho > 1.0):
            raise ValueError(f"Eigenvalue magnitudes must lie in (0, 1], got {self.rho.tolist()}")
        if np.any(self.theta < 0.0) or np.any(self.theta >= TWO_PI):
            raise ValueError("Phases must lie in [0, 2*pi)")
        norms = np.linalg.norm(self.modes, axis=0)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError(f"Spatial modes must have unit norm, got norms {norms.tolist()}")
        if np.any(np.abs(self.amplitudes) == 0.0):
            raise ValueError("Amplitudes must be nonzero")
        for arr in (self.rho, self.theta, self.modes, self.amplitudes):
            arr.setflags(write=False)

    @property
    def eigenvalues(self) -> np.ndarray:
        """lambda_j = rho_j e^{i theta_j}."""
        return self.rho * np.exp(1j * self.theta)

    @property
    def kappa_b(self) -> float:
        """Amplitude heterogeneity max|b| / min|b|."""
        mags = np.abs(self.amplitudes)
        return float(mags.max() / mags.min())

    def to_dict(self) -> dict:
        """Serialize to the JSON fixture layout (m, D, N, rho, theta, modes_re, modes_im, amp_re, amp_im)."""
        return {
            "m": self.m,
            "D": self.D,
            "N": self.N,
            "rho": self.rho.tolist(),
            "theta": self.theta.tolist(),
            "modes_re": self.modes.real.tolist(),
            "modes_im": self.modes.imag.tolist(),
            "amp_re": self.amplitudes.real.tolist(),
            "amp_im": self.amplitudes.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SignalSpec":
        """Build a SignalSpec from the JSON fixture layout."""
        modes = np.asarray(data["modes_re"], dtype=float) + 1j * np.asarray(data["modes_im"], dtype=float)
        amplitudes = np.asarray(data["amp_re"], dtype=float) + 1j * np.asarray(data["amp_im"], dtype=float)
        return cls(
            m=int(data["m"]),
            rho=data["rho"],
            theta=data["theta"],
            modes=modes.reshape(int(data["D"]), int(data["m"])),
            amplitudes=amplitudes,
            D=int(data["D"]),
            N=int(data["N"]),
        )

    def save(self, path: Path) -> None:
        """Write the spec as a JSON fixture."""
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "SignalSpec":
        """Read a spec from a JSON fixture."""
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class NoiseSpec:
    """Additive noise parameters.

    Attributes:
    snr_db -- Target SNR in dB; +inf disables noise. Float.
    seed -- 64-bit unsigned seed. Integer.
    real -- Draw real instead of circular complex noise (default: False). Boolean.
    reference_power -- Power the SNR is measured against instead of the clean
                       signal's (optional, > 0). Float or None.
    """

    snr_db: float
    seed: int
    real: bool = field(default=False)
    reference_power: float | None = None

    def __post_init__(self):
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ValueError(f"snr_db must be finite or +inf, got {self.snr_db}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.reference_power is not None and not self.reference_power > 0.0:
            raise ValueError(f"reference_power must be positive, got {self.reference_power}")

    @property
    def enabled(self) -> bool:
        return not math.isinf(self.snr_db)


def make_spec(
    m: int,
    D: int,
    N: int,
    rho_common: float,
    delta_theta: float,
    kappa_b: float,
    seed: int,
) -> SignalSpec:
    """Build a spec with common damping, equally spaced phases and a log-linear amplitude ramp.

    Arguments:
    m -- Number of true modes (>= 1). Integer.
    D -- Spatial dimension (>= 1). Integer.
    N -- Sample count (> 1). Integer.
    rho_common -- Common eigenvalue magnitude in (0, 1]. Float.
    delta_theta -- Minimal circular phase gap in (0, 2*pi/m]; ignored when m = 1. Float.
    kappa_b -- Amplitude ratio max|b| / min|b| (>= 1). Float.
    seed -- Seed for phase offset and spatial modes. Integer.

    Returns: SignalSpec.

    Raises:
    ValueError -- If any parameter is outside its admissible range.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if D < 1:
        raise ValueError(f"D must be >= 1, got {D}")
    if N <= 1:
        raise ValueError(f"N must be > 1, got {N}")
    if not 0.0 < rho_common <= 1.0:
        raise ValueError(f"rho_common must lie in (0, 1], got {rho_common}")
    if m > 1 and not 0.0 < delta_theta <= TWO_PI / m + 1e-15:
        raise ValueError(f"delta_theta must lie in (0, 2*pi/m] = (0, {TWO_PI / m:.6f}] for m={m}, got {delta_theta}")
    if not kappa_b >= 1.0:
        raise ValueError(f"kappa_b must be >= 1, got {kappa_b}")

    rng = np.random.default_rng(seed)
    offset = rng.uniform(0.0, TWO_PI)
    step = delta_theta if m > 1 else 0.0
    theta = np.mod(offset + step * np.arange(m), TWO_PI)
    # np.mod can return TWO_PI itself for values just below a multiple of 2*pi
    theta[theta >= TWO_PI] = 0.0

    if m == 1:
        amplitudes = np.ones(1)
    else:
        amplitudes = kappa_b ** (np.arange(m) / (m - 1))

    raw = rng.standard_normal((D, m)) + 1j * rng.standard_normal((D, m))
    modes = raw / np.linalg.norm(raw, axis=0)

    return SignalSpec(
        m=m,
        rho=np.full(m, float(rho_common)),
        theta=theta,
        modes=modes,
        amplitudes=amplitudes.astype(complex),
        D=D,
        N=N,
    )


def generate_clean(spec: SignalSpec) -> np.ndarray:
    """Evaluate s_k = sum_j b_j phi_j lambda_j^k for k = 0..N-1.

    Returns: complex array of shape (D, N).
    """
    powers = np.power(spec.eigenvalues[:, None], np.arange(spec.N)[None, :])
    return spec.modes @ (spec.amplitudes[:, None] * powers)


def add_noise(clean: np.ndarray, noise: NoiseSpec) -> np.ndarray:
    """Add white Gaussian noise at the requested SNR.

    The per-entry variance is sigma^2 = P_signal / 10^(snr_db / 10), with
    P_signal the mean squared magnitude over all D*N entries, or
    noise.reference_power when set.

    Arguments:
    clean -- Clean samples. Complex array (D, N).
    noise -- Noise parameters. NoiseSpec.

    Returns: noisy samples, same shape; an unmodified copy when noise is disabled.

    Raises:
    ValueError -- If clean is empty, or all-zero with finite SNR.
    """
    clean = np.asarray(clean, dtype=complex)
    if clean.size == 0:
        raise ValueError("Cannot add noise to an empty signal")
    if not noise.enabled:
        return clean.copy()

    power = noise.reference_power or float(np.mean(np.abs(clean) ** 2))
    if power == 0.0:
        raise ValueError("SNR is undefined for an all-zero signal")
    variance = power / 10.0 ** (noise.snr_db / 10.0)

    rng = np.random.default_rng(noise.seed)
    if noise.real:
        perturbation = math.sqrt(variance) * rng.standard_normal(clean.shape)
    else:
        scale = math.sqrt(variance / 2.0)
        perturbation = scale * (rng.standard_normal(clean.shape) + 1j * rng.standard_normal(clean.shape))
    return clean + perturbation


def measure_delta_theta(theta) -> float:
    """Minimal circular pairwise gap min(|t_j - t_k|, 2*pi - |t_j - t_k|).

    Raises:
    ValueError -- If fewer than two phases are given.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.size < 2:
        raise ValueError(f"Need at least two phases, got {theta.size}")
    diff = np.mod(np.abs(theta[:, None] - theta[None, :]), TWO_PI)
    gaps = np.minimum(diff, TWO_PI - diff)
    iu = np.triu_indices(theta.size, k=1)
    return float(gaps[iu].min())

import numpy as np
import pytest

from modescope import logger
from modescope.dmd_core import decompose, snapshot_pair
from modescope.harness import ExperimentConfig, child_seed, generate_instance
from modescope.signal_gen import generate_clean, make_spec


@pytest.fixture(autouse=True)
def log_dir(tmp_path, monkeypatch):
    """Send JSONL logs of every test to a temporary directory."""
    base = tmp_path / "logs"
    monkeypatch.setattr(logger, "LOG_BASE", base)
    return base


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_cfg():
    """Tall-regime configuration (D*L = 96 > N-L = 52) small enough for many trials per test."""
    return ExperimentConfig(m=2, D=12, N=60, L=8, M=6, rho=0.98, delta_theta=0.5, snr_db=20.0, trials=3,
                            master_seed=1)


@pytest.fixture
def wide_cfg():
    """Wide-regime configuration: D*L = 8 <= N-L = 198."""
    return ExperimentConfig(m=3, D=4, N=200, L=2, M=6, delta_theta=0.5, snr_db=20.0,
                            methods=["EsrEnergy", "Fekvf", "Stc", "Bic", "Gap"])


@pytest.fixture(scope="session")
def working_instance():
    """Noisy working-point instance: (spec, clean, noisy, pair, decomposition)."""
    cfg = ExperimentConfig.working_point()
    spec, clean, noisy = generate_instance(cfg, child_seed(cfg.master_seed, 0))
    pair = snapshot_pair(noisy, cfg.L)
    return spec, clean, noisy, pair, decompose(pair, cfg.M)


@pytest.fixture(scope="session")
def noiseless_exact():
    """Clean m = 3 signal decomposed with M = 3, L = 8: (spec, pair, decomposition)."""
    spec = make_spec(3, 45, 200, 0.98, 0.01, 1.0, seed=7)
    pair = snapshot_pair(generate_clean(spec), 8)
    return spec, pair, decompose(pair, 3)

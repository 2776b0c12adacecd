import json
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime

import pytest

from modescope import config, logger


# ── resolve_workers ──

def test_resolve_workers_defaults_to_thread_cap(monkeypatch):
    monkeypatch.setattr(config, "THREADS", 6)
    assert config.resolve_workers() == 6


@pytest.mark.parametrize("requested, expected", [(1, 1), (4, 4), (32, 6)])
def test_resolve_workers_caps_requests(monkeypatch, requested, expected):
    monkeypatch.setattr(config, "THREADS", 6)
    assert config.resolve_workers(requested) == expected


def test_resolve_workers_rejects_zero():
    with pytest.raises(ValueError, match="at least 1"):
        config.resolve_workers(0)


def test_working_point_constants():
    assert config.NO_DELAY_POINT["L"] == 1
    assert config.NO_DELAY_POINT["D"] * config.NO_DELAY_POINT["L"] > (
        config.NO_DELAY_POINT["N"] - config.NO_DELAY_POINT["L"]
    )
    assert config.WORKING_POINT["D"] * config.WORKING_POINT["L"] > config.WORKING_POINT["N"]
    assert config.NO_DELAY_POINT["snr_db"] > config.WORKING_POINT["snr_db"]


# ── JSONL logs ──

def _today(log_dir, category, filename):
    return log_dir / datetime.now().strftime("%Y-%m-%d") / category / filename


def test_log_sweep_appends_lines(log_dir):
    logger.log_sweep(parameter="snr", grid=[0.0, 10.0], trials=5, master_seed=0,
                     hit_prob={"EsrEnergy": [0.2, 1.0]}, auc={"EsrEnergy": 0.6}, out_dir="results/x")
    logger.log_sweep(parameter="rho", grid=[0.9], trials=5, master_seed=0, hit_prob={})
    lines = _today(log_dir, "runs", "sweep.jsonl").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 2
    first, second = (json.loads(line) for line in lines)
    assert first["auc"] == {"EsrEnergy": 0.6}
    assert first["out_dir"] == "results/x"
    assert "auc" not in second and "out_dir" not in second
    assert datetime.fromisoformat(first["timestamp"]).tzinfo is not None


def test_log_verify_omits_empty_failures(log_dir):
    logger.log_verify(seeds=3, checks_total=21, checks_failed=0, failed=[])
    entry = json.loads(_today(log_dir, "runs", "verify.jsonl").read_text(encoding="utf-8"))
    assert entry["checks_total"] == 21
    assert "failed" not in entry


def test_log_trial_failure_goes_to_trials_category(log_dir):
    logger.log_trial_failure(trial_index=7, child_seed=123, error="boom")
    logger.log_trial_failure(trial_index=8, child_seed=456, error="boom", parameter="snr", value=10.0)
    lines = _today(log_dir, "trials", "failures.jsonl").read_text(encoding="utf-8").splitlines()
    first, second = (json.loads(line) for line in lines)
    assert "parameter" not in first
    assert (second["parameter"], second["value"]) == ("snr", 10.0)


def test_concurrent_failures_write_whole_lines(log_dir):
    def write(i):
        logger.log_trial_failure(trial_index=i, child_seed=i, error="x" * 2000, parameter="snr", value=float(i))

    with ThreadPoolExecutor(max_workers=8) as pool:
        list(pool.map(write, range(200)))
    lines = _today(log_dir, "trials", "failures.jsonl").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 200
    assert sorted(json.loads(line)["trial_index"] for line in lines) == list(range(200))


def test_log_cdf_and_decompose(log_dir):
    logger.log_cdf(L_grid=[2, 8], trials=4, master_seed=1, medians={"2": 0.4, "8": 0.6},
                   pool_sizes={"2": 48, "8": 48})
    logger.log_decompose(seed=3, L=8, M=6, D=12, N=60, m_hat={"Bic": 2})
    assert json.loads(_today(log_dir, "runs", "cdf.jsonl").read_text())["pool_sizes"]["8"] == 48
    assert json.loads(_today(log_dir, "runs", "decompose.jsonl").read_text())["m_hat"] == {"Bic": 2}

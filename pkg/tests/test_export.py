import numpy as np
import pandas as pd
import pytest

from modescope.export import (
    SWEEP_COLUMNS,
    decomposition_to_dict,
    eigenvalue_frame,
    plot_cdf_svg,
    read_sweep_csv,
    score_frame,
    sweep_frame,
    write_sweep_csv,
)
from modescope.harness import SpuriousCdf, SweepResult, TrialResult, run_trial
from modescope.selection import Method


def _sweep() -> SweepResult:
    return SweepResult(
        parameter="rho",
        grid=np.array([0.9, 0.95, 0.99]),
        methods=(Method.ESR_ENERGY, Method.BIC),
        hits={Method.ESR_ENERGY: np.array([1, 2, 3]), Method.BIC: np.array([0, 0, 1])},
        failures=np.array([0, 1, 0]),
        trials=3,
        master_seed=5,
    )


def test_sweep_frame_rows():
    frame = sweep_frame(_sweep())
    assert list(frame.columns) == SWEEP_COLUMNS
    row = frame[(frame["param_value"] == 0.95) & (frame["method"] == "EsrEnergy")].iloc[0]
    assert (row["hits"], row["trials"], row["failures"]) == (2, 3, 1)
    assert row["hit_prob"] == pytest.approx(1.0)


def test_read_sweep_csv_restores_counts(tmp_path):
    path = write_sweep_csv(_sweep(), tmp_path / "sweep.csv")
    restored = read_sweep_csv(path, parameter="rho")
    np.testing.assert_array_equal(restored.grid, [0.9, 0.95, 0.99])
    np.testing.assert_array_equal(restored.hits[Method.BIC], [0, 0, 1])
    np.testing.assert_array_equal(restored.failures, [0, 1, 0])
    assert restored.methods == (Method.ESR_ENERGY, Method.BIC)
    assert restored.master_seed == -1


def test_read_sweep_csv_without_failure_column(tmp_path):
    path = tmp_path / "sweep.csv"
    pd.DataFrame({"param_value": [0.0, 5.0], "method": ["Gap", "Gap"], "hits": [1, 4],
                  "trials": [4, 4], "hit_prob": [0.25, 1.0]}).to_csv(path, index=False)
    restored = read_sweep_csv(path)
    np.testing.assert_array_equal(restored.failures, [0, 0])
    np.testing.assert_allclose(restored.hit_prob[Method.GAP], [0.25, 1.0])


def test_read_sweep_csv_rejects_missing_columns(tmp_path):
    path = tmp_path / "sweep.csv"
    pd.DataFrame({"param_value": [0.0], "method": ["Gap"]}).to_csv(path, index=False)
    with pytest.raises(ValueError, match="missing columns: hits, trials"):
        read_sweep_csv(path)


def test_read_sweep_csv_rejects_ragged_grids(tmp_path):
    path = tmp_path / "sweep.csv"
    pd.DataFrame({"param_value": [0.0, 5.0, 0.0], "method": ["Gap", "Gap", "Bic"], "hits": [1, 2, 3],
                  "trials": [4, 4, 4]}).to_csv(path, index=False)
    with pytest.raises(ValueError, match="full grid"):
        read_sweep_csv(path)


def test_score_frame_skips_failed_trials(small_cfg):
    good = run_trial(small_cfg, 0)
    failed = TrialResult(trial_index=1, seed=0, m=2, error="singular")
    frame = score_frame([good, failed])
    assert set(frame["trial_id"]) == {0}
    mode_methods = [m for m in small_cfg.methods if not m.is_order_only]
    assert len(frame) == len(mode_methods) * small_cfg.M
    true_rows = frame[(frame["method"] == "EsrEnergy") & (frame["label"] == "true")]
    assert len(true_rows) == good.m_hat[Method.ESR_ENERGY]


def test_eigenvalue_table_and_dict(working_instance):
    *_, decomp = working_instance
    table = eigenvalue_frame(decomp)
    np.testing.assert_allclose(table["magnitude"], np.abs(decomp.eigenvalues))
    data = decomposition_to_dict(decomp, {Method.BIC: 3})
    assert data["m_hat"] == {"Bic": 3}
    assert len(data["singular_values"]) == min(decomp.D * decomp.L, decomp.svd.V_M.shape[0])
    assert np.array(data["projected_modes_re"]).shape == (decomp.D * decomp.L, decomp.M)


def test_cdf_plot_handles_empty_pools(tmp_path):
    cdf = SpuriousCdf(L_grid=(4,), samples={4: np.empty(0)}, magnitudes=np.linspace(0.0, 1.0, 512),
                      cdf={4: np.full(512, np.nan)}, failures={4: 0}, trials=2)
    path = plot_cdf_svg(cdf, tmp_path / "cdf.svg")
    assert path.read_text().lstrip().startswith("<?xml")

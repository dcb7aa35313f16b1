"""Sweep orchestration, PDP sensitivity and the timing benchmark."""

import csv
import json
from dataclasses import replace

import numpy as np
import pytest

from zpsync import ConfigError, Method, SourceModel, SystemConfig
from zpsync.harness import (
    ExperimentSummary,
    PointResult,
    SweepAxis,
    SweepSpec,
    _perturbed_pdp,
    bench_raet,
    pdp_sensitivity,
    run_sweep,
    write_sweep_csv,
)
from zpsync.config import exponential_pdp


def small_base(**overrides) -> SystemConfig:
    kwargs = dict(
        n_x=32, n_z=9, n_h=4, N=4, source_model=SourceModel.GAUSSIAN_IID,
        to_range=(-10, 10), max_doppler_hz=0.0, ebn0_db=15.0,
        trial_seed=777, mcs_samples=2000,
    )
    kwargs.update(overrides)
    return SystemConfig(**kwargs)


def test_spec_validation():
    base = small_base()
    with pytest.raises(ConfigError):
        SweepSpec(SweepAxis.EBN0, (), 10, (Method.ML_EXHAUSTIVE,), base)
    with pytest.raises(ConfigError):
        SweepSpec(SweepAxis.EBN0, (10.0,), 0, (Method.ML_EXHAUSTIVE,), base)
    with pytest.raises(ConfigError):
        SweepSpec(SweepAxis.EBN0, (10.0,), 10, (), base)
    with pytest.raises(ConfigError):
        SweepSpec(SweepAxis.NUM_TAPS, (2.5,), 10, (Method.ML_EXHAUSTIVE,), base)
    with pytest.raises(ConfigError):
        SweepSpec(SweepAxis.PDP_ALPHA, (1.5,), 10, (Method.ML_EXHAUSTIVE,), base)


def test_point_result_validation():
    with pytest.raises(ValueError):
        PointResult(0.0, Method.ML_EXHAUSTIVE, trials=3, error_counts={0: 2})
    with pytest.raises(ValueError):
        PointResult(0.0, Method.ML_EXHAUSTIVE, trials=2, error_counts={0: 2}, failure="x")


def test_single_trial_is_a_point_mass():
    spec = SweepSpec(
        SweepAxis.EBN0, (30.0,), 1, (Method.ML_EXHAUSTIVE,), small_base()
    )
    row = run_sweep(spec).row(30.0, Method.ML_EXHAUSTIVE)
    assert row.trials == 1
    assert len(row.error_counts) == 1
    assert row.lock_in in (0.0, 1.0)
    assert sum(row.error_pmf.values()) == 1.0


def test_row_statistics_are_consistent():
    spec = SweepSpec(
        SweepAxis.EBN0, (5.0, 15.0), 40,
        (Method.ML_EXHAUSTIVE, Method.TRANSITION_METRIC), small_base(),
    )
    summary = run_sweep(spec)
    assert len(summary.rows) == 4
    for row in summary.rows:
        assert sum(row.error_counts.values()) == row.trials
        assert row.lock_in == row.error_pmf.get(0, 0.0)
        assert row.mse == sum(e * e * p for e, p in row.error_pmf.items())
        assert abs(sum(row.error_pmf.values()) - 1.0) < 1e-12
        assert row.mean_elapsed > 0.0


def test_lock_in_improves_with_snr():
    spec = SweepSpec(
        SweepAxis.EBN0, (0.0, 30.0), 60, (Method.ML_EXHAUSTIVE,), small_base()
    )
    summary = run_sweep(spec)
    assert summary.lock_in(30.0, Method.ML_EXHAUSTIVE) > summary.lock_in(
        0.0, Method.ML_EXHAUSTIVE
    )


def test_csv_schema_and_determinism(tmp_path):
    spec = SweepSpec(
        SweepAxis.DOPPLER, (0.0, 50.0), 12,
        (Method.ML_EXHAUSTIVE, Method.TRANSITION_METRIC), small_base(),
    )
    paths = []
    for run in range(2):
        summary = run_sweep(spec)
        path = tmp_path / f"run{run}.csv"
        write_sweep_csv(summary, path)
        paths.append(path)

    with open(paths[0], newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == [
        "axis_value", "method", "trials", "lock_in", "mse", "pmf_json", "mean_elapsed_s"
    ]
    pmf = json.loads(rows[0]["pmf_json"])
    assert abs(sum(pmf.values()) - 1.0) < 1e-12

    def stable_part(path):
        with open(path, newline="") as fh:
            return [line.rsplit(",", 1)[0] for line in fh]

    # wall-clock is the only column allowed to move between identical runs
    assert stable_part(paths[0]) == stable_part(paths[1])


def test_worker_count_does_not_change_results():
    spec = SweepSpec(
        SweepAxis.EBN0, (10.0,), 16, (Method.ML_EXHAUSTIVE, Method.ML_GOLDEN), small_base()
    )
    serial = run_sweep(spec)
    parallel = run_sweep(spec, workers=3)
    for a, b in zip(serial.rows, parallel.rows):
        assert a.error_counts == b.error_counts
        assert a.method is b.method


def test_method_subset_does_not_shift_trial_streams():
    base = small_base()
    only_ml = SweepSpec(SweepAxis.EBN0, (10.0,), 25, (Method.ML_EXHAUSTIVE,), base)
    with_tm = SweepSpec(
        SweepAxis.EBN0, (10.0,), 25,
        (Method.ML_EXHAUSTIVE, Method.TRANSITION_METRIC), base,
    )
    a = run_sweep(only_ml).row(10.0, Method.ML_EXHAUSTIVE)
    b = run_sweep(with_tm).row(10.0, Method.ML_EXHAUSTIVE)
    assert a.error_counts == b.error_counts


def test_all_method_labels_run():
    methods = tuple(Method)
    spec = SweepSpec(SweepAxis.EBN0, (20.0,), 6, methods, small_base())
    summary = run_sweep(spec)
    assert tuple(r.method for r in summary.rows) == methods
    assert all(sum(r.error_counts.values()) == 6 for r in summary.rows)


def test_invalid_point_becomes_failure_row():
    spec = SweepSpec(
        SweepAxis.NUM_TAPS, (2.0, 25.0), 8, (Method.ML_EXHAUSTIVE,), small_base()
    )
    summary = run_sweep(spec)
    good = summary.row(2.0, Method.ML_EXHAUSTIVE)
    bad = summary.row(25.0, Method.ML_EXHAUSTIVE)
    assert good.failure is None and good.trials == 8
    assert bad.failure is not None and bad.trials == 0
    assert np.isnan(bad.lock_in) and np.isnan(bad.mse)
    assert summary.failures == (bad,)


def test_pdp_alpha_zero_matches_baseline():
    base = small_base()
    methods = (Method.ML_EXHAUSTIVE,)
    baseline = run_sweep(SweepSpec(SweepAxis.EBN0, (base.ebn0_db,), 30, methods, base))
    alpha0 = pdp_sensitivity(SweepSpec(SweepAxis.PDP_ALPHA, (0.0,), 30, methods, base))
    a = baseline.rows[0]
    b = alpha0.rows[0]
    assert a.error_counts == b.error_counts
    assert b.redraws == 0


def test_pdp_alpha_full_mismatch_still_runs():
    spec = SweepSpec(
        SweepAxis.PDP_ALPHA, (1.0,), 20, (Method.ML_EXHAUSTIVE,), small_base()
    )
    row = pdp_sensitivity(spec).rows[0]
    assert row.failure is None
    assert 0.0 <= row.lock_in <= 1.0
    assert row.redraws >= 0

    with pytest.raises(ConfigError):
        pdp_sensitivity(SweepSpec(SweepAxis.EBN0, (10.0,), 5, (Method.ML_EXHAUSTIVE,), small_base()))


class _ForcedRng:
    """uniform() yields an invalid profile first, then a valid one."""

    def __init__(self):
        self.calls = 0

    def uniform(self, lo, hi):
        self.calls += 1
        if self.calls == 1:
            return np.zeros_like(np.asarray(lo))
        return np.asarray(lo) + 0.25 * (np.asarray(hi) - np.asarray(lo))


def test_perturbed_pdp_redraws_invalid_profiles():
    pdp = exponential_pdp(4, 0.5)
    rng = _ForcedRng()
    drawn, redraws = _perturbed_pdp(pdp, 1.0, rng)
    assert redraws == 1
    assert drawn.n_taps == 4
    assert all(v > 0 for v in drawn.variances)


def test_perturbation_stays_within_band():
    pdp = exponential_pdp(4, 0.5)
    rng = np.random.default_rng(5)
    for alpha in (0.25, 0.75):
        for _ in range(50):
            drawn, _ = _perturbed_pdp(pdp, alpha, rng)
            v = np.asarray(drawn.variances)
            ref = np.asarray(pdp.variances)
            assert np.all(v >= ref * (1 - alpha) - 1e-15)
            assert np.all(v <= ref * (1 + alpha) + 1e-15)


def test_bench_raet_structure():
    configs = [
        small_base(n_x=16, to_range=(-6, 6)),
        small_base(n_x=32, to_range=(-6, 6)),
    ]
    rows = bench_raet(configs, L=500, windows=2, repetitions=2, seed=3)
    assert [r.n_x for r in rows] == [16, 32]
    for r in rows:
        assert r.ratio > 0.0
        assert r.theoretical_s > 0.0 and r.mcs_s > 0.0
        assert 0.0 <= r.agreement <= 1.0
        assert r.trials == 4

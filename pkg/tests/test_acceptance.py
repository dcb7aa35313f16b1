"""End-to-end acceptance gate: twelve numbered criteria, one verdict line each.

Each test computes its own measurements at full scale and reports them through
the session `acceptance` fixture, which prints a [C*] PASS/FAIL line after the
run. Trial counts and tolerances are fixed here on purpose; these tests are
slow and meant for the full suite run, not the edit loop.
"""

import math
from time import perf_counter

import numpy as np
import pytest
from scipy.integrate import quad

from oracles import component_pdf_quadrature
from zpsync import (
    Method,
    SourceModel,
    SweepAxis,
    SweepSpec,
    SystemConfig,
    TableMode,
    bench_raet,
    build_pdf_table,
    component_variance,
    correlation_check,
    empirical_moments,
    exponential_pdp,
    is_unimodal,
    ks_distance,
    ml_golden,
    noise_variance_from_ebn0,
    pdp_sensitivity,
    run_sweep,
    sample_received,
    sample_v,
    score_all,
    simulate_reception,
    tap_range,
)

TRIALS = 2000


def _exact_evaluator(cfg, pdp, sigma_w2, m):
    table = build_pdf_table(cfg, pdp, sigma_w2, TableMode.ANALYTIC, grid=False)
    return table.evaluators[table.class_of_index[m]]


def _density_moments(ev):
    def moment(k):
        val, _ = quad(lambda y: y**k * math.exp(ev(y)), -np.inf, np.inf, limit=400)
        return val

    m2 = moment(2)
    return m2, moment(4) / m2**2


def _sweep(axis, points, methods, base, seed, runner=run_sweep):
    spec = SweepSpec(
        axis=axis,
        points=points,
        trials_per_point=TRIALS,
        methods=methods,
        base=base,
        seed=seed,
    )
    return runner(spec)


@pytest.fixture(scope="session")
def sweep_10db():
    """2000 trials at 10 dB shared by the ordering and concentration criteria."""
    return _sweep(
        SweepAxis.EBN0,
        (10.0,),
        (Method.ML_EXHAUSTIVE, Method.MCS_EXHAUSTIVE, Method.TRANSITION_METRIC),
        SystemConfig(),
        seed=51_001,
    )


def test_c1_moment_table(acceptance, cfg_v, pdp_v, sw2_v):
    start = perf_counter()
    draws = sample_received(cfg_v, pdp_v, 1, 1_000_000, np.random.default_rng(11_001)).real
    rep = empirical_moments(draws)
    var_a, kurt_a = _density_moments(_exact_evaluator(cfg_v, pdp_v, sw2_v, 1))
    elapsed = perf_counter() - start
    ok = (
        abs(rep.variance - 0.3206) <= 0.02 * 0.3206
        and abs(rep.kurtosis - 4.53) <= 0.15
        and abs(rep.skewness) < 0.02
        and abs(var_a - 0.3205) <= 5e-4
        and abs(kurt_a - 4.5653) <= 0.01
        and elapsed <= 120.0
    )
    acceptance(
        "C01",
        ok,
        f"1e6 draws: var={rep.variance:.5f} (0.3206 +-2%), kurt={rep.kurtosis:.4f} "
        f"(4.53 +-0.15), |skew|={abs(rep.skewness):.5f} (<0.02); quadrature: "
        f"var={var_a:.5f} (0.3205 +-5e-4), kurt={kurt_a:.4f} (4.5653 +-0.01); "
        f"{elapsed:.0f}s (<=120s)",
    )


def test_c2_pdf_correctness(acceptance, cfg_v, pdp_v, sw2_v):
    lambdas = pdp_v.lambdas(cfg_v.sigma_x2)
    worst_norm = 0.0
    worst_rel = 0.0
    worst_ks = 0.0
    for m in (0, 1, 5, 64, 130):
        ev = _exact_evaluator(cfg_v, pdp_v, sw2_v, m)
        norm, _ = quad(lambda y: math.exp(ev(y)), -np.inf, np.inf, limit=400)
        worst_norm = max(worst_norm, abs(norm - 1.0))

        taps = tap_range(m, cfg_v)
        rates = lambdas[taps.a : taps.b + 1]
        std = math.sqrt(component_variance(taps, pdp_v, cfg_v.sigma_x2, sw2_v))
        y = np.linspace(-5.0 * std, 5.0 * std, 101)
        oracle = np.array([component_pdf_quadrature(v, rates, sw2_v) for v in y])
        rel = np.max(np.abs(np.exp(ev(y)) - oracle) / oracle)
        worst_rel = max(worst_rel, rel)

        rng = np.random.default_rng([12_002, m])
        draws = sample_v(m, pdp_v, rng, cfg=cfg_v, size=1_000_000)
        draws = draws + rng.normal(0.0, math.sqrt(sw2_v / 2.0), 1_000_000)
        ks = ks_distance(draws, lambda v: np.exp(ev(v)))
        worst_ks = max(worst_ks, ks)
    ok = worst_norm <= 1e-6 and worst_rel <= 1e-8 and worst_ks < 0.005
    acceptance(
        "C02",
        ok,
        f"m in {{0,1,5,64,130}}: max |norm-1|={worst_norm:.2e} (<=1e-6), max rel "
        f"err vs convolution oracle={worst_rel:.2e} (<=1e-8, |y|<=5std), max "
        f"KS at 1e6 draws={worst_ks:.5f} (<0.005)",
    )


def test_c3_mcs_convergence(acceptance, cfg_v, pdp_v, sw2_v):
    k_class = None
    ref_ev = _exact_evaluator(cfg_v, pdp_v, sw2_v, 1)
    std = math.sqrt(component_variance(tap_range(1, cfg_v), pdp_v, cfg_v.sigma_x2, sw2_v))
    y = np.linspace(-4.0 * std, 4.0 * std, 321)
    ref = ref_ev(y)
    weights = np.exp(ref)
    weights /= weights.sum()
    mean_w = {}
    mean_u = {}
    for L in (100, 1000, 10_000):
        per_seed_w = []
        per_seed_u = []
        for s in range(20):
            table = build_pdf_table(
                cfg_v, pdp_v, sw2_v, TableMode.MCS,
                rng=np.random.default_rng([13_003, s, L]), mcs_samples=L,
            )
            if k_class is None:
                k_class = table.class_of_index[1]
            err = np.abs(table.evaluators[k_class](y) - ref)
            per_seed_w.append(float(weights @ err))
            per_seed_u.append(float(err.mean()))
        mean_w[L] = float(np.mean(per_seed_w))
        mean_u[L] = float(np.mean(per_seed_u))
    # the 0.05 bound is asserted on the density-weighted mean (the expected
    # per-sample log error); the uniform-grid mean is reported alongside and
    # both readings must shrink strictly with L
    ok = (
        mean_w[10_000] < 0.05
        and mean_w[100] > mean_w[1000] > mean_w[10_000]
        and mean_u[100] > mean_u[1000] > mean_u[10_000]
    )
    acceptance(
        "C03",
        ok,
        f"weighted mean|dlog| L=1e4: {mean_w[10_000]:.4f} (<0.05); weighted by L "
        f"{mean_w[100]:.3f}>{mean_w[1000]:.3f}>{mean_w[10_000]:.3f}; uniform "
        f"{mean_u[100]:.3f}>{mean_u[1000]:.3f}>{mean_u[10_000]:.3f} (20 seeds)",
    )


def test_c4_estimator_ordering(acceptance, sweep_10db):
    ml = sweep_10db.row(10.0, Method.ML_EXHAUSTIVE).lock_in
    mcs = sweep_10db.row(10.0, Method.MCS_EXHAUSTIVE).lock_in
    tm = sweep_10db.row(10.0, Method.TRANSITION_METRIC).lock_in
    low = _sweep(
        SweepAxis.EBN0, (0.0,), (Method.ML_EXHAUSTIVE, Method.GAUSSIAN_ML),
        SystemConfig(), seed=54_004,
    )
    ml0 = low.row(0.0, Method.ML_EXHAUSTIVE).lock_in
    g0 = low.row(0.0, Method.GAUSSIAN_ML).lock_in
    # the Gaussian stand-in here carries the exact per-position variance
    # profile, so its lock-in deficit is small; measured gaps stay near 0.02
    # across -9..+3 dB and the demanded 0.05 margin does not materialize
    ok = ml >= mcs - 0.03 and mcs >= tm + 0.10 and ml0 >= g0 + 0.05
    acceptance(
        "C04",
        ok,
        f"10dB/2000 trials: ml={ml:.4f} >= mcs-{0.03}={mcs - 0.03:.4f}; "
        f"mcs={mcs:.4f} >= tm+{0.10}={tm + 0.10:.4f}; 0dB: ml={ml0:.4f} >= "
        f"gaussian+{0.05}={g0 + 0.05:.4f}",
    )


def test_c5_error_concentration(acceptance, sweep_10db):
    row = sweep_10db.row(10.0, Method.ML_EXHAUSTIVE)
    pmf = row.error_pmf
    wrong = sum(p for e, p in pmf.items() if e != 0)
    near = sum(p for e, p in pmf.items() if e != 0 and abs(e) <= 2)
    frac = 1.0 if wrong == 0.0 else near / wrong
    mse_from_pmf = math.fsum(e * e * p for e, p in pmf.items())
    exact = row.mse == mse_from_pmf
    ok = frac >= 0.90 and exact
    acceptance(
        "C05",
        ok,
        f"ml at 10dB: {frac:.4f} of erroneous estimates within |err|<=2 (>=0.90, "
        f"error mass {wrong:.4f}); mse {row.mse:.6f} == sum e^2*pmf "
        f"{mse_from_pmf:.6f}: {exact}",
    )


def test_c6_doppler_trend(acceptance):
    summary = _sweep(
        SweepAxis.DOPPLER, (0.0, 5.0, 50.0, 100.0), (Method.ML_EXHAUSTIVE,),
        SystemConfig(), seed=56_006,
    )
    locks = [summary.row(f, Method.ML_EXHAUSTIVE).lock_in for f in (0.0, 5.0, 50.0, 100.0)]
    ok = all(b >= a - 0.02 for a, b in zip(locks, locks[1:]))
    acceptance(
        "C06",
        ok,
        "lock-in over f_D {0,5,50,100} Hz at 15dB: "
        + " -> ".join(f"{v:.4f}" for v in locks)
        + " (non-decreasing +-0.02)",
    )


def test_c7_observation_length(acceptance):
    summary = _sweep(
        SweepAxis.NUM_SYMBOLS, (1, 10, 20), (Method.ML_EXHAUSTIVE,),
        SystemConfig(ebn0_db=10.0), seed=57_007,
    )
    l1, l10, l20 = (summary.row(n, Method.ML_EXHAUSTIVE).lock_in for n in (1, 10, 20))
    ok = (l10 - l1) >= 0.1 and (l20 - l10) < (l10 - l1)
    acceptance(
        "C07",
        ok,
        f"10dB: lock-in N=1/10/20 = {l1:.4f}/{l10:.4f}/{l20:.4f}; gain(1->10)="
        f"{l10 - l1:.4f} (>=0.1), gain(10->20)={l20 - l10:.4f} (smaller)",
    )


def test_c8_tap_count_trend(acceptance):
    summary = _sweep(
        SweepAxis.NUM_TAPS, (2, 6, 10), (Method.ML_EXHAUSTIVE,),
        SystemConfig(n_z=20, ebn0_db=10.0), seed=58_008,
    )
    locks = [summary.row(n, Method.ML_EXHAUSTIVE).lock_in for n in (2, 6, 10)]
    ok = all(b <= a + 0.02 for a, b in zip(locks, locks[1:]))
    acceptance(
        "C08",
        ok,
        "lock-in over n_h {2,6,10}, n_z=20, 10dB: "
        + " -> ".join(f"{v:.4f}" for v in locks)
        + " (non-increasing +-0.02)",
    )


def test_c9_pdp_robustness(acceptance):
    summary = _sweep(
        SweepAxis.PDP_ALPHA, (0.0, 0.5, 1.0), (Method.ML_EXHAUSTIVE,),
        SystemConfig(ebn0_db=10.0), seed=59_009, runner=pdp_sensitivity,
    )
    l0, l_half, l_full = (
        summary.row(a, Method.ML_EXHAUSTIVE).lock_in for a in (0.0, 0.5, 1.0)
    )
    ok = (l0 - l_half) <= 0.1 and l_full >= 0.75
    acceptance(
        "C09",
        ok,
        f"10dB ml: lock-in alpha=0/0.5/1 = {l0:.4f}/{l_half:.4f}/{l_full:.4f}; "
        f"drop at 0.5 = {l0 - l_half:.4f} (<=0.1); at 1.0 >= 0.75",
    )


def test_c10_raet(acceptance):
    configs = [
        SystemConfig(
            n_x=n, ebn0_db=10.0, source_model=SourceModel.GAUSSIAN_IID,
        )
        for n in (64, 128, 256)
    ]
    points = bench_raet(configs, L=10_000, windows=12, repetitions=5, seed=2026)
    ratios = [p.ratio for p in points]
    agree = sum(round(p.agreement * p.trials) for p in points)
    total = sum(p.trials for p in points)
    ok = (
        all(r < 1.0 for r in ratios)
        and all(b <= a for a, b in zip(ratios, ratios[1:]))
        and agree / total >= 0.97
    )
    acceptance(
        "C10",
        ok,
        "raet over n_x {64,128,256}: "
        + " -> ".join(f"{r:.3f}" for r in ratios)
        + f" (<1, non-increasing); argmax agreement {agree}/{total}"
        f"={agree / total:.4f} (>=0.97)",
    )


def test_c11_uncorrelated_samples(acceptance, pdp_v):
    cfg = SystemConfig(source_model=SourceModel.GAUSSIAN_IID, ebn0_db=25.0)
    rho_adj = correlation_check(
        cfg, pdp_v, 100, 1, 1_000_000, rng=np.random.default_rng(61_011)
    )
    rho_iq = correlation_check(
        cfg, pdp_v, 100, 0, 1_000_000, rng=np.random.default_rng(61_012), cross_iq=True
    )
    ok = abs(rho_adj) < 0.01 and abs(rho_iq) < 0.01
    acceptance(
        "C11",
        ok,
        f"25dB, 1e6 trials: |corr(y_I[100], y_I[101])|={abs(rho_adj):.5f}, "
        f"|corr(y_I[100], y_Q[100])|={abs(rho_iq):.5f} (both <0.01)",
    )


def test_c12_golden_section_fidelity(acceptance):
    cfg = SystemConfig(ebn0_db=10.0)
    pdp = exponential_pdp(cfg.n_h, 0.5)
    sigma_w2 = noise_variance_from_ebn0(cfg, pdp)
    table = build_pdf_table(cfg, pdp, sigma_w2, TableMode.ANALYTIC)
    trials = 400
    unimodal = exact_on_unimodal = within_budget = agree_all = 0
    for t in range(trials):
        rng = np.random.default_rng([62_012, t])
        true_d = int(rng.integers(cfg.to_range[0], cfg.to_range[1] + 1))
        sim_rng, golden_rng = rng.spawn(2)
        window = simulate_reception(cfg, pdp, true_d, sim_rng)
        scores = score_all(window, table, cfg.d_values)
        est = ml_golden(window, table, golden_rng)
        agree_all += est.d_hat == scores.argmax_d
        within_budget += est.evaluations < 61
        if is_unimodal(scores.log_like):
            unimodal += 1
            exact_on_unimodal += est.d_hat == scores.argmax_d
    ok = exact_on_unimodal == unimodal and within_budget / trials >= 0.95
    note = "vacuous, no unimodal trials" if unimodal == 0 else f"{exact_on_unimodal}/{unimodal}"
    acceptance(
        "C12",
        ok,
        f"{trials} trials at 10dB: exact on unimodal score vectors {note}; "
        f"evals<61 on {within_budget / trials:.4f} (>=0.95); overall argmax "
        f"agreement {agree_all / trials:.4f}",
    )

import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jamdetect import analysis
from jamdetect.detector import DetectorConfig, detect
from jamdetect.errors import InvalidArgument, TrialError
from jamdetect.model import SystemConfig
from jamdetect.montecarlo import (
    Scenario,
    db_to_linear,
    estimates,
    linear_to_db,
    run_trials,
    summarize,
    sweep_antennas,
    sweep_roc,
    trial_statistics,
    validate_pfa_grid,
    wilson_interval,
)

SMALL = SystemConfig(M_r=10, M_w=4, K=8, tau=10, L=2, q=db_to_linear(-10))


@given(n=st.integers(1, 10 ** 6), frac=st.floats(0, 1))
def test_wilson_brackets_rate(n, frac):
    k = int(round(frac * n))
    lo, hi = wilson_interval(k, n)
    assert 0.0 <= lo <= k / n <= hi <= 1.0


def test_db_helpers():
    assert db_to_linear(-17) == pytest.approx(0.0199526, rel=1e-5)
    assert linear_to_db(db_to_linear(-23.5)) == pytest.approx(-23.5)
    assert linear_to_db(0.0) == -math.inf


@pytest.mark.parametrize("workers", [2, 3, 8])
def test_worker_count_does_not_change_results(workers):
    one = trial_statistics(SMALL, True, 5000, seed=3, workers=1)
    many = trial_statistics(SMALL, True, 5000, seed=3, workers=workers)
    assert np.array_equal(one, many)


def test_trial_offsets_address_the_same_trials():
    full = trial_statistics(SMALL, True, 3000, seed=4)
    tail = trial_statistics(SMALL, True, 1000, seed=4, trial_start=2000)
    assert np.array_equal(full[2000:], tail)


@pytest.mark.parametrize("hop", [False, True])
@pytest.mark.parametrize("fixed", [False, True])
def test_kernel_matches_full_model(hop, fixed):
    from jamdetect.detector import sum_row_projections
    from jamdetect.model import simulate_observations

    cfg = SystemConfig(M_r=5, M_w=3, K=4, tau=7, L=3, p=2.0, q=0.3, beta_users=[1, 2, 0.5, 1.5], beta_w=0.8)
    S = trial_statistics(cfg, True, 6, seed=12, pilot_hopping=hop, fixed_jammer=fixed)
    for t in range(6):
        obs = simulate_observations(cfg, True, 12, t, pilot_hopping=hop, fixed_jammer=fixed)
        assert S[t] == pytest.approx(sum_row_projections(obs), rel=1e-11)


def test_h0_raw_estimate_unbiased():
    S = trial_statistics(SMALL, False, 100_000, seed=5)
    raw, _ = estimates(SMALL, S)
    assert abs(raw.mean()) < 3 * raw.std(ddof=1) / math.sqrt(raw.size)


def test_single_trial_rerun_identical():
    sc = Scenario(SMALL, DetectorConfig(threshold_mu_prime=0.1), n_trials=1, seed=77)
    assert run_trials(sc) == run_trials(sc)
    from jamdetect.model import simulate_observations

    a = detect(simulate_observations(SMALL, True, 77), sc.detector, SMALL)
    b = detect(simulate_observations(SMALL, True, 77), sc.detector, SMALL)
    assert a == b


def test_overwhelming_jammer_always_detected():
    cfg = SystemConfig(M_r=100, L=10, q=1.0)
    est = run_trials(Scenario(cfg, DetectorConfig(target_pfa=0.01), n_trials=10_000, seed=1))
    assert est.rate == 1.0


def test_calibration_small_system():
    S = trial_statistics(SMALL, False, 100_000, seed=6)
    _, q_hat = estimates(SMALL, S)
    misses = 0
    for target in (0.01, 0.05, 0.1, 0.3):
        mu = analysis.threshold_for_pfa(target, SMALL.M_r, SMALL.L, SMALL.tau, SMALL.K)
        est = summarize(q_hat, mu)
        lo, hi = wilson_interval(int(round(target * est.n_trials)), est.n_trials)
        misses += not lo <= est.rate <= hi
    assert misses <= 1


def test_jammer_phase_mode_is_irrelevant():
    det = DetectorConfig(target_pfa=0.05)
    a = run_trials(Scenario(SMALL, det, n_trials=40_000, seed=8))
    b = run_trials(Scenario(SMALL, det, n_trials=40_000, seed=8, fixed_jammer=True))
    sigma = math.sqrt(a.sigma ** 2 + b.sigma ** 2)
    assert abs(a.rate - b.rate) < 4 * sigma


def test_pilot_hopping_is_irrelevant():
    det = DetectorConfig(target_pfa=0.05)
    a = run_trials(Scenario(SMALL, det, n_trials=40_000, seed=9))
    b = run_trials(Scenario(SMALL, det, n_trials=40_000, seed=9, pilot_hopping=True))
    assert abs(a.rate - b.rate) < 4 * math.sqrt(a.sigma ** 2 + b.sigma ** 2)


def test_empirical_estimate_invariants():
    est = run_trials(Scenario(SMALL, DetectorConfig(target_pfa=0.2), n_trials=2000, seed=10))
    assert 0 <= est.detections <= est.n_trials
    assert est.ci95_low <= est.rate <= est.ci95_high
    assert est.mean_q_hat >= 0


@pytest.mark.parametrize("kwargs", [dict(n_trials=0), dict(n_trials=1.5), dict(seed=-1), dict(seed=2 ** 64)])
def test_scenario_validation(kwargs):
    with pytest.raises(InvalidArgument):
        Scenario(SMALL, DetectorConfig(threshold_mu_prime=0.1), **kwargs)


def test_trial_errors_carry_index():
    from jamdetect import montecarlo

    def failing(*args, **kwargs):
        raise RuntimeError("boom")

    with pytest.MonkeyPatch.context() as mp:
        mp.setattr(montecarlo, "get_trial_sums", lambda backend=None: failing)
        with pytest.raises(TrialError, match="trial 2048"):
            trial_statistics(SMALL, True, 10, seed=1, trial_start=2048)


def test_pfa_grid_validation():
    assert validate_pfa_grid([0.01, 0.5]) == [0.01, 0.5]
    with pytest.raises(InvalidArgument, match="threshold"):
        validate_pfa_grid([0.1, 0.6])
    with pytest.raises(InvalidArgument):
        validate_pfa_grid([0.0])


def test_sweep_antennas_rows():
    base = Scenario(replace(SMALL, q=db_to_linear(-17)), DetectorConfig(target_pfa=0.01), n_trials=500, seed=2)
    rows = sweep_antennas(base, [10, 40], [(6, 1), (4, 2)])
    assert [(r.K, r.L, r.M_r) for r in rows] == [(6, 1, 10), (6, 1, 40), (4, 2, 10), (4, 2, 40)]
    for r in rows:
        assert r.q_dB == pytest.approx(-17.0)
        assert r.ci_low <= r.pc_empirical <= r.ci_high
        assert r.mu_prime == pytest.approx(analysis.threshold_for_pfa(0.01, r.M_r, r.L, r.tau, r.K))


def test_sweep_antennas_needs_target():
    base = Scenario(SMALL, DetectorConfig(threshold_mu_prime=0.1), n_trials=10)
    with pytest.raises(InvalidArgument):
        sweep_antennas(base, [10], [(6, 1)])


def test_sweep_roc_rows():
    base = Scenario(SMALL, DetectorConfig(target_pfa=0.01), n_trials=2000, seed=3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", analysis.NegativeThresholdWarning)
        rows = sweep_roc(base, [0.01, 0.1, 0.5], [-20, -10])
    assert len(rows) == 6
    # the clean run is shared, so P_FA columns repeat across q
    assert [r.pfa_empirical for r in rows[:3]] == [r.pfa_empirical for r in rows[3:]]
    for a, b in zip(rows[:3], rows[3:]):
        assert b.pc_exact >= a.pc_exact
    assert rows[2].pfa_empirical == 1.0 and rows[2].pc_empirical == 1.0


def test_sweep_roc_rejects_large_grid():
    base = Scenario(SMALL, DetectorConfig(target_pfa=0.01), n_trials=10)
    with pytest.raises(InvalidArgument):
        sweep_roc(base, [0.6], [-17])

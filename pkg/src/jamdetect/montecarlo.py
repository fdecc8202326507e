"""Deterministic Monte Carlo evaluation of the detector.

Trial ``t`` of a scenario draws its L blocks from the streams addressed by
``(seed, t, block, role)``, so a trial's outcome depends on nothing but the
scenario and its index. Trials are cut into fixed-size chunks that may run
on any number of threads; per-trial results are written back in trial
order and reduced afterwards, which keeps every aggregate independent of
the worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from . import analysis
from .detector import DetectorConfig, ml_estimate_from_sum
from .errors import InvalidArgument, TrialError
from .kernel import get_trial_sums
from .model import SystemConfig, make_pilot_book

CHUNK_TRIALS = 1024
Z95 = 1.959963984540054


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value) if value > 0 else -math.inf


@dataclass(frozen=True)
class Scenario:
    system: SystemConfig
    detector: DetectorConfig
    jammer_present: bool = True
    n_trials: int = 100_000
    seed: int = 0
    pilot_hopping: bool = False
    fixed_jammer: bool = False

    def __post_init__(self):
        if int(self.n_trials) != self.n_trials or self.n_trials < 1:
            raise InvalidArgument(f"n_trials must be an integer >= 1, got {self.n_trials!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidArgument(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class EmpiricalEstimate:
    detections: int
    n_trials: int
    rate: float
    ci95_low: float
    ci95_high: float
    mean_q_hat: float

    @property
    def sigma(self) -> float:
        """Binomial standard error of ``rate``."""
        return math.sqrt(self.rate * (1.0 - self.rate) / self.n_trials)


def wilson_interval(successes: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n < 1:
        raise InvalidArgument("wilson interval needs n >= 1")
    phat = successes / n
    denom = 1.0 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4 * n * n)) / denom
    # rounding can push a bound past phat at k = 0 or k = n
    return min(max(0.0, centre - half), phat), max(min(1.0, centre + half), phat)


def trial_statistics(system: SystemConfig, jammer_present: bool, n_trials: int, seed: int, *,
                     trial_start: int = 0, pilot_hopping: bool = False, fixed_jammer: bool = False,
                     workers: int = 1, backend: Optional[str] = None) -> np.ndarray:
    """Per-trial S = sum_l sum_m |y~_m(l)^H 1|^2, in trial order."""
    kernel = get_trial_sums(backend)
    book = make_pilot_book(system.tau).matrix
    book_re = np.ascontiguousarray(book.real)
    book_im = np.ascontiguousarray(book.imag)
    user_amp = np.sqrt(system.tau * system.p * np.asarray(system.beta_users, dtype=float))
    jam_amp = math.sqrt(system.tau * system.q * system.beta_w)
    out = np.empty(n_trials)

    def run(start: int) -> None:
        count = min(CHUNK_TRIALS, n_trials - start)
        try:
            out[start:start + count] = kernel(
                seed, trial_start + start, count, system.M_r, system.M_w, system.K, system.tau,
                system.L, user_amp, jam_amp, bool(jammer_present), bool(fixed_jammer),
                bool(pilot_hopping), book_re, book_im,
            )
        except Exception as exc:  # noqa: BLE001
            raise TrialError(trial_start + start, exc) from exc

    starts = range(0, n_trials, CHUNK_TRIALS)
    if workers <= 1:
        for start in starts:
            run(start)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for future in [pool.submit(run, s) for s in starts]:
                future.result()
    return out


def estimates(system: SystemConfig, S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(raw, clipped) ML estimates for an array of per-trial statistics."""
    return ml_estimate_from_sum(S, system.M_r * system.L, system.n_unused)


def summarize(q_hat: np.ndarray, mu_prime: float) -> EmpiricalEstimate:
    n = int(q_hat.size)
    k = int(np.count_nonzero(q_hat > mu_prime))
    lo, hi = wilson_interval(k, n)
    return EmpiricalEstimate(k, n, k / n, lo, hi, float(np.sum(q_hat) / n))


def run_trials(sc: Scenario, workers: int = 1, backend: Optional[str] = None) -> EmpiricalEstimate:
    """Empirical detection rate of the scenario's detector."""
    det = sc.detector if sc.detector.is_resolved else sc.detector.resolve(sc.system)
    S = trial_statistics(sc.system, sc.jammer_present, sc.n_trials, sc.seed,
                         pilot_hopping=sc.pilot_hopping, fixed_jammer=sc.fixed_jammer,
                         workers=workers, backend=backend)
    _, q_hat = estimates(sc.system, S)
    return summarize(q_hat, det.mu_prime)


def _threshold(det: DetectorConfig, system: SystemConfig, target_pfa: float) -> float:
    inversion = "asymptotic" if det.inversion == "asymptotic" else det.variant
    return analysis.threshold_for_pfa(target_pfa, system.M_r, system.L, system.tau, system.K, inversion)


def _with_users(system: SystemConfig, K: int, **changes) -> SystemConfig:
    betas = set(system.beta_users)
    if len(betas) > 1:
        raise InvalidArgument("changing K needs identical beta_users for all users")
    beta = betas.pop() if betas else 1.0
    return replace(system, K=K, beta_users=(beta,) * K, **changes)


@dataclass
class AntennaRow:
    M_r: int
    K: int
    L: int
    tau: int
    q_dB: float
    target_pfa: float
    mu_prime: float
    pc_empirical: float
    pc_exact: float
    pc_asymp: float
    ci_low: float
    ci_high: float
    n_trials: int
    seed: int
    detections: int = field(default=0, repr=False)


def sweep_antennas(base: Scenario, M_r_list: Iterable[int], kl_list: Iterable[tuple[int, int]],
                   workers: int = 1, backend: Optional[str] = None) -> list[AntennaRow]:
    """Empirical and closed-form P_C over antenna counts and (K, L) pairs.

    The threshold is recomputed for every (M_r, K, L) from the base detector's
    target false-alarm rate.
    """
    if base.detector.target_pfa is None:
        raise InvalidArgument("sweep_antennas needs a detector configured by target_pfa")
    target = base.detector.target_pfa
    variant = analysis.as_variant(base.detector.variant)
    rows = []
    for K, L in kl_list:
        for M_r in M_r_list:
            system = _with_users(base.system, int(K), M_r=int(M_r), L=int(L))
            mu = _threshold(base.detector, system, target)
            S = trial_statistics(system, True, base.n_trials, base.seed, pilot_hopping=base.pilot_hopping,
                                 fixed_jammer=base.fixed_jammer, workers=workers, backend=backend)
            est = summarize(estimates(system, S)[1], mu)
            qt = system.q_tilde
            rows.append(AntennaRow(
                M_r=system.M_r, K=K, L=L, tau=system.tau, q_dB=linear_to_db(system.q),
                target_pfa=target, mu_prime=mu, pc_empirical=est.rate,
                pc_exact=analysis.pc_exact(mu, qt, system.M_r, L, system.tau, K, variant),
                pc_asymp=analysis.pc_asymptotic(mu, qt, system.M_r, L, system.tau, K),
                ci_low=est.ci95_low, ci_high=est.ci95_high, n_trials=base.n_trials, seed=base.seed,
                detections=est.detections,
            ))
    return rows


@dataclass
class RocRow:
    target_pfa: float
    q_dB: float
    mu_prime: float
    pfa_empirical: float
    pc_empirical: float
    pc_exact: float
    pc_asymp: float
    n_trials: int
    seed: int


def validate_pfa_grid(pfa_grid: Sequence[float]) -> list[float]:
    grid = [float(v) for v in pfa_grid]
    for v in grid:
        if not 0.0 < v <= 0.5:
            raise InvalidArgument(
                f"P_FA grid value {v} outside (0, 0.5]: above 0.5 the threshold mu' turns negative, "
                "and the clipped estimate then always exceeds it (both rates are 1)"
            )
    return grid


def sweep_roc(base: Scenario, pfa_grid: Sequence[float], q_list_dB: Sequence[float],
              workers: int = 1, backend: Optional[str] = None) -> list[RocRow]:
    """Empirical ROC points: one clean run and one jammed run per q, all thresholds applied to each."""
    grid = validate_pfa_grid(pfa_grid)
    system0 = base.system
    thresholds = [_threshold(base.detector, system0, t) for t in grid]
    variant = analysis.as_variant(base.detector.variant)
    S0 = trial_statistics(system0, False, base.n_trials, base.seed, pilot_hopping=base.pilot_hopping,
                          fixed_jammer=base.fixed_jammer, workers=workers, backend=backend)
    q0 = estimates(system0, S0)[1]
    rows = []
    for q_db in q_list_dB:
        system = replace(system0, q=db_to_linear(q_db))
        S1 = trial_statistics(system, True, base.n_trials, base.seed, pilot_hopping=base.pilot_hopping,
                              fixed_jammer=base.fixed_jammer, workers=workers, backend=backend)
        q1 = estimates(system, S1)[1]
        qt = system.q_tilde
        for target, mu in zip(grid, thresholds):
            rows.append(RocRow(
                target_pfa=target, q_dB=float(q_db), mu_prime=mu,
                pfa_empirical=summarize(q0, mu).rate,
                pc_empirical=summarize(q1, mu).rate,
                pc_exact=analysis.pc_exact(mu, qt, system.M_r, system.L, system.tau, system.K, variant),
                pc_asymp=analysis.pc_asymptotic(mu, qt, system.M_r, system.L, system.tau, system.K),
                n_trials=base.n_trials, seed=base.seed,
            ))
    return rows

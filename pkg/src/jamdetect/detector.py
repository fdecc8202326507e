"""GLRT jamming detector on the unused-pilot observations.

The statistic is S = sum_l sum_m |y~_m(l)^H 1|^2. The ML estimate of the
effective jamming power is S / (M_r L (tau-K)^2) - 1/(tau-K), clipped at
zero, and the GLRT reduces to comparing that estimate against a threshold
mu' = J^{-1}(2 ln(mu) / (M_r L)) / (tau - K) with J(x) = x - ln(1 + x).
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, InvalidArgument
from .model import SystemConfig, UnusedPilotObservations

REAL_HALVED = "real-halved"
COMPLEX = "complex"

JAMMER_DETECTED = "jammer-detected"
CLEAN = "clean"


def J(x: float) -> float:
    """x - ln(1 + x), evaluated by its series near zero to avoid cancellation."""
    if x < 0:
        raise InvalidArgument(f"J is defined for x >= 0, got {x}")
    if x < 1e-2:
        # sum_k (-1)^k x^k / k for k >= 2
        total, power = 0.0, -x
        for k in range(2, 12):
            power *= -x
            total += power / k
        return total
    return x - math.log1p(x)


def J_inv(y: float, tol: float = 1e-12) -> float:
    """Inverse of J on [0, inf): safeguarded Newton with bisection fallback."""
    if y < 0:
        raise InvalidArgument(f"J^-1 is defined for y >= 0 only, got {y}")
    if y == 0:
        return 0.0
    lo, hi = 0.0, 2.0 * y + 2.0
    while J(hi) < y:
        lo, hi = hi, 2.0 * hi
    x = min(math.sqrt(2.0 * y), hi) if y < 1.0 else y + math.log1p(y)
    if not lo < x < hi:
        x = 0.5 * (lo + hi)
    for _ in range(200):
        f = J(x) - y
        if f == 0:
            return x
        if f > 0:
            hi = x
        else:
            lo = x
        slope = x / (1.0 + x)
        x_new = x - f / slope if slope > 0 else 0.5 * (lo + hi)
        if not lo <= x_new <= hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= tol or hi - lo <= tol:
            return x_new
        x = x_new
    return x


@dataclass(frozen=True)
class DetectorConfig:
    """Threshold source for the detector.

    Exactly one of ``threshold_mu_prime``, ``target_pfa`` and ``mu_log`` is
    set. ``resolve`` turns the latter two into a concrete mu' for a given
    system; ``variant``/``inversion`` select how ``target_pfa`` is inverted.
    """

    threshold_mu_prime: Optional[float] = None
    target_pfa: Optional[float] = None
    mu_log: Optional[float] = None
    variant: str = "consistent"
    inversion: str = "exact"
    _mu_prime: Optional[float] = dataclasses.field(default=None, repr=False, compare=False)

    def __post_init__(self):
        given = [name for name in ("threshold_mu_prime", "target_pfa", "mu_log") if getattr(self, name) is not None]
        if len(given) != 1:
            raise ConfigurationError(
                "exactly one of threshold_mu_prime, target_pfa, mu_log must be set"
                + (f" (got {', '.join(given)})" if given else "")
            )
        if self.target_pfa is not None and not 0.0 < self.target_pfa < 1.0:
            raise ConfigurationError(f"target_pfa must lie in (0, 1), got {self.target_pfa}")
        if self.inversion not in ("exact", "asymptotic"):
            raise ConfigurationError(f"inversion must be 'exact' or 'asymptotic', got {self.inversion!r}")
        if self.threshold_mu_prime is not None:
            object.__setattr__(self, "_mu_prime", float(self.threshold_mu_prime))

    @property
    def is_resolved(self) -> bool:
        return self._mu_prime is not None

    @property
    def mu_prime(self) -> float:
        if self._mu_prime is None:
            raise ConfigurationError("detector threshold is unresolved; call resolve(system) first")
        return self._mu_prime

    def resolve(self, cfg: SystemConfig) -> "DetectorConfig":
        """Copy with mu' computed for ``cfg``'s M_r, L, tau and K."""
        from . import analysis

        if self.threshold_mu_prime is not None:
            value = float(self.threshold_mu_prime)
        elif self.mu_log is not None:
            value = mu_prime_from_mu(self.mu_log, cfg.M_r, cfg.L, cfg.tau, cfg.K)
        else:
            method = "asymptotic" if self.inversion == "asymptotic" else self.variant
            value = analysis.threshold_for_pfa(self.target_pfa, cfg.M_r, cfg.L, cfg.tau, cfg.K, method)
        return dataclasses.replace(self, _mu_prime=value)


@dataclass(frozen=True)
class DetectionReport:
    q_hat: float
    raw_q_hat: float
    statistic_J: Optional[float]
    threshold_mu_prime: float
    decision: str

    @property
    def detected(self) -> bool:
        return self.decision == JAMMER_DETECTED

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def sum_row_projections(obs: UnusedPilotObservations) -> float:
    """S = sum over blocks and antennas of |y~_m(l)^H 1|^2."""
    if not isinstance(obs, UnusedPilotObservations):
        obs = UnusedPilotObservations(obs)
    row_sums = obs.blocks.sum(axis=2)
    return float(np.sum(row_sums.real ** 2 + row_sums.imag ** 2))


def _dims(obs: UnusedPilotObservations, cfg: Optional[SystemConfig]):
    if cfg is not None:
        obs.check_against(cfg)
    return obs.M_r * obs.L, obs.n_unused


def ml_estimate_from_sum(S, n: int, d: int):
    """(raw, clipped) ML estimate from S for n = M_r L rows of d unused pilots; vectorises over S."""
    raw = np.asarray(S, dtype=float) / (n * d * d) - 1.0 / d
    clipped = np.maximum(raw, 0.0)
    if raw.ndim == 0:
        return float(raw), float(clipped)
    return raw, clipped


def ml_estimate(obs: UnusedPilotObservations, cfg: Optional[SystemConfig] = None) -> tuple[float, float]:
    """(raw_q_hat, q_hat) with q_hat = max(raw_q_hat, 0)."""
    n, d = _dims(obs, cfg)
    return ml_estimate_from_sum(sum_row_projections(obs), n, d)


def likelihood_gradient(obs: UnusedPilotObservations, q_tilde: float) -> float:
    """Left-hand side of the ML stationarity equation at ``q_tilde``."""
    n, d = _dims(obs, None)
    S = sum_row_projections(obs)
    a = 1.0 + d * q_tilde
    return n * d / a - S / (a * a)


def log_likelihood(obs: UnusedPilotObservations, q_tilde: float, convention: str = REAL_HALVED) -> float:
    """Log-likelihood of the stacked observations under covariance I + q_tilde 11^T.

    ``real-halved`` is the real-Gaussian form with 1/2 factors and a (2 pi)^(d/2)
    normaliser; ``complex`` is the circular complex Gaussian density. Their
    q-dependent parts differ by a factor of two, so both peak at the same q.
    """
    if q_tilde < 0:
        raise InvalidArgument(f"q_tilde must be nonnegative, got {q_tilde}")
    n, d = _dims(obs, None)
    S = sum_row_projections(obs)
    energy = float(np.sum(obs.blocks.real ** 2 + obs.blocks.imag ** 2))
    a = 1.0 + d * q_tilde
    quad = energy - q_tilde * S / a
    if convention == REAL_HALVED:
        return -0.5 * n * d * math.log(2 * math.pi) - 0.5 * n * math.log(a) - 0.5 * quad
    if convention == COMPLEX:
        return -n * d * math.log(math.pi) - n * math.log(a) - quad
    raise InvalidArgument(f"unknown likelihood convention {convention!r}")


def glrt_log_statistic(obs: UnusedPilotObservations, q_hat: float, cfg: Optional[SystemConfig] = None) -> float:
    """ln of the generalized likelihood ratio evaluated at ``q_hat``."""
    if q_hat < 0:
        raise InvalidArgument(f"q_hat must be nonnegative, got {q_hat}")
    n, d = _dims(obs, cfg)
    S = sum_row_projections(obs)
    a = 1.0 + d * q_hat
    return -0.5 * n * math.log(a) + q_hat * S / (2.0 * a)


def mu_prime_from_mu(mu_log: float, M_r: int, L: int, tau: int, K: int) -> float:
    """Threshold on the estimate equivalent to the GLRT threshold ``mu`` (mu >= 1)."""
    if not mu_log >= 1.0:
        raise InvalidArgument(f"GLRT threshold mu must be >= 1 (ln mu >= 0), got {mu_log}")
    return J_inv(2.0 * math.log(mu_log) / (M_r * L)) / (tau - K)


def decide(q_hat: float, det_cfg: DetectorConfig, *, raw_q_hat: Optional[float] = None,
           n_unused: Optional[int] = None) -> DetectionReport:
    """Declare a jammer iff q_hat > mu'; ties decide for the clean hypothesis."""
    mu = det_cfg.mu_prime
    if q_hat < 0:
        raise InvalidArgument(f"q_hat must be nonnegative, got {q_hat}")
    stat = J(n_unused * q_hat) if n_unused is not None else None
    return DetectionReport(
        q_hat=float(q_hat),
        raw_q_hat=float(q_hat if raw_q_hat is None else raw_q_hat),
        statistic_J=stat,
        threshold_mu_prime=mu,
        decision=JAMMER_DETECTED if q_hat > mu else CLEAN,
    )


def detect(obs: UnusedPilotObservations, det_cfg: DetectorConfig, cfg: Optional[SystemConfig] = None) -> DetectionReport:
    """Estimate, threshold and decide. ``det_cfg`` is resolved against ``cfg`` if needed."""
    if not det_cfg.is_resolved:
        if cfg is None:
            raise ConfigurationError("an unresolved detector threshold needs the system configuration")
        det_cfg = det_cfg.resolve(cfg)
    raw, q_hat = ml_estimate(obs, cfg)
    return decide(q_hat, det_cfg, raw_q_hat=raw, n_unused=obs.n_unused)

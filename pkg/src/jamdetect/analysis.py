"""Closed-form detector performance.

With x = M_r L (tau-K) mu' + M_r L, the false-alarm probability is the
upper tail of a Gamma(M_r L) law at x (``consistent`` variant, CN(0, 1)
model) or at x/2 (``paper`` variant). Under jamming
the argument is divided by 1 + (tau-K) q~. The asymptotic forms are
Gaussian tails with M_r L degrees of freedom.

Because the detector clips the estimate at zero, any mu' < 0 is exceeded
by every estimate; the exact formulas return 1 there unless
``clipped=False`` asks for the raw, unclipped estimator's tail.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Sequence

from .errors import InvalidArgument
from .special import (
    inverse_regularized_upper_gamma,
    q_function,
    q_function_inv,
    regularized_upper_gamma,
)


class Variant(str, Enum):
    PAPER = "paper"
    CONSISTENT = "consistent"


_ALIASES = {
    "paper": Variant.PAPER,
    "paper-exact": Variant.PAPER,
    "consistent": Variant.CONSISTENT,
    "complex-consistent": Variant.CONSISTENT,
}

DEFAULT_VARIANT = Variant.CONSISTENT


def as_variant(variant) -> Variant:
    if isinstance(variant, Variant):
        return variant
    try:
        return _ALIASES[str(variant).lower()]
    except KeyError:
        raise InvalidArgument(f"unknown formula variant {variant!r}; use 'paper' or 'consistent'") from None


class NegativeThresholdWarning(UserWarning):
    """The requested false-alarm rate needs mu' < 0; every decision will fire."""


def q_tilde(q: float, M_w: int, beta_w: float) -> float:
    """Effective jamming power q M_w beta_w."""
    if q < 0:
        raise InvalidArgument(f"jammer power q must be nonnegative, got {q}")
    if not beta_w > 0:
        raise InvalidArgument(f"beta_w must be positive, got {beta_w}")
    return q * M_w * beta_w


def _dims(M_r, L, tau, K):
    if M_r < 1 or L < 1:
        raise InvalidArgument(f"M_r and L must be >= 1 (got M_r={M_r}, L={L})")
    if K >= tau:
        raise InvalidArgument(f"need K < tau (got K={K}, tau={tau})")
    return M_r * L, tau - K


def _gamma_tail(n: int, d: int, mu_prime: float, spread: float, variant, clipped: bool) -> float:
    if clipped and mu_prime < 0:
        return 1.0
    x = n * d * mu_prime + n
    if x <= 0:
        return 1.0
    scale = 2.0 if as_variant(variant) is Variant.PAPER else 1.0
    return regularized_upper_gamma(n, x / (scale * spread))


def pfa_exact(mu_prime: float, M_r: int, L: int, tau: int, K: int,
              variant=DEFAULT_VARIANT, clipped: bool = True) -> float:
    n, d = _dims(M_r, L, tau, K)
    return _gamma_tail(n, d, mu_prime, 1.0, variant, clipped)


def pc_exact(mu_prime: float, q_tilde: float, M_r: int, L: int, tau: int, K: int,
             variant=DEFAULT_VARIANT, clipped: bool = True) -> float:
    if q_tilde < 0:
        raise InvalidArgument(f"q_tilde must be nonnegative, got {q_tilde}")
    n, d = _dims(M_r, L, tau, K)
    return _gamma_tail(n, d, mu_prime, 1.0 + d * q_tilde, variant, clipped)


def pfa_asymptotic(mu_prime: float, M_r: int, L: int, tau: int, K: int) -> float:
    n, d = _dims(M_r, L, tau, K)
    return q_function(math.sqrt(n) * mu_prime * d)


def pc_asymptotic(mu_prime: float, q_tilde: float, M_r: int, L: int, tau: int, K: int) -> float:
    if q_tilde < 0:
        raise InvalidArgument(f"q_tilde must be nonnegative, got {q_tilde}")
    n, d = _dims(M_r, L, tau, K)
    # 1 - Q(z) = Q(-z)
    return q_function(-math.sqrt(n) * (q_tilde - mu_prime) * d / (1.0 + d * q_tilde))


def threshold_for_pfa(target_pfa: float, M_r: int, L: int, tau: int, K: int,
                      variant="consistent") -> float:
    """mu' giving false-alarm probability ``target_pfa``.

    ``variant`` is ``"consistent"`` or ``"paper"`` to invert the matching
    exact formula, or ``"asymptotic"`` for the Gaussian approximation. The
    exact inverse is taken on the unclipped tail; a negative result is
    returned with a :class:`NegativeThresholdWarning`.
    """
    if not 0.0 < target_pfa < 1.0:
        raise InvalidArgument(f"target P_FA must lie in (0, 1), got {target_pfa}")
    n, d = _dims(M_r, L, tau, K)
    if str(variant).lower() == "asymptotic":
        mu = q_function_inv(target_pfa) / (math.sqrt(n) * d)
    else:
        scale = 2.0 if as_variant(variant) is Variant.PAPER else 1.0
        x = scale * inverse_regularized_upper_gamma(n, target_pfa)
        mu = (x - n) / (n * d)
    if mu < 0:
        warnings.warn(
            f"target P_FA={target_pfa} needs mu'={mu:.6g} < 0; the clipped estimate always exceeds it",
            NegativeThresholdWarning,
            stacklevel=2,
        )
    return mu


@dataclass(frozen=True)
class PerformancePoint:
    mu_prime: float
    q_tilde: float
    M_r: int
    L: int
    tau: int
    K: int
    variant: str
    pfa: float
    pc: float
    pfa_asymp: float
    pc_asymp: float

    def as_dict(self) -> dict:
        return asdict(self)


def performance_point(mu_prime: float, q_tilde_value: float, M_r: int, L: int, tau: int, K: int,
                      variant=DEFAULT_VARIANT) -> PerformancePoint:
    v = as_variant(variant)
    return PerformancePoint(
        mu_prime=mu_prime,
        q_tilde=q_tilde_value,
        M_r=M_r,
        L=L,
        tau=tau,
        K=K,
        variant=v.value,
        pfa=pfa_exact(mu_prime, M_r, L, tau, K, v),
        pc=pc_exact(mu_prime, q_tilde_value, M_r, L, tau, K, v),
        pfa_asymp=pfa_asymptotic(mu_prime, M_r, L, tau, K),
        pc_asymp=pc_asymptotic(mu_prime, q_tilde_value, M_r, L, tau, K),
    )


class _Unbounded:
    """Marker for a spectral efficiency that grows without bound."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNBOUNDED"

    def __str__(self):
        return "unbounded"


UNBOUNDED = _Unbounded()


@dataclass(frozen=True)
class SpectralEfficiencyParams:
    """Inputs of the large-M_r spectral efficiency.

    ``weights[i]`` is sum_j |v_w^(j)T alpha_i|^2 for pilot i (length tau);
    users sit on the first K pilots, K = len(beta_users).
    """

    p: float
    q: float
    rho: float
    varrho: float
    beta_users: Sequence[float]
    beta_w: float
    tau: int
    T: int
    M_w: int
    weights: Sequence[float]

    def __post_init__(self):
        if self.T < self.tau:
            raise InvalidArgument(f"T={self.T} must be >= tau={self.tau}")
        if len(self.weights) != self.tau:
            raise InvalidArgument(f"weights must have tau={self.tau} entries, got {len(self.weights)}")
        if any(w < 0 for w in self.weights):
            raise InvalidArgument("jamming weights must be nonnegative")
        if not math.isclose(sum(self.weights), self.M_w, rel_tol=1e-9):
            raise InvalidArgument(f"jamming weights must sum to M_w={self.M_w}, got {sum(self.weights)}")
        if len(self.beta_users) > self.tau:
            raise InvalidArgument("more users than pilots")
        if min(self.p, self.q, self.rho, self.varrho) < 0 or not self.beta_w > 0:
            raise InvalidArgument("powers must be nonnegative and beta_w positive")


def equal_split_weights(M_w: int, tau: int) -> list[float]:
    return [M_w / tau] * tau


@dataclass(frozen=True)
class SpectralEfficiency:
    per_user: list  # float or UNBOUNDED
    total: object  # float or UNBOUNDED

    @property
    def bounded(self) -> bool:
        return self.total is not UNBOUNDED

    def as_dict(self) -> dict:
        conv = lambda v: str(v) if v is UNBOUNDED else v  # noqa: E731
        return {"per_user": [conv(v) for v in self.per_user], "total": conv(self.total)}


def asymptotic_spectral_efficiency(params: SpectralEfficiencyParams) -> SpectralEfficiency:
    """Per-user large-antenna rates in bit/s/Hz and their sum.

    A user whose pilot carries no jamming power, or a jammer with zero
    pilot or data power, leaves the rate unbounded.
    """
    prelog = 1.0 - params.tau / params.T
    per_user = []
    for i, beta in enumerate(params.beta_users):
        w = params.weights[i]
        if w == 0 or params.q == 0 or params.varrho == 0:
            per_user.append(UNBOUNDED)
            continue
        sinr = (params.p / params.q) * (params.rho / params.varrho) * (beta / params.beta_w) ** 2 / (params.M_w * w)
        per_user.append(prelog * math.log2(1.0 + sinr))
    total = UNBOUNDED if any(v is UNBOUNDED for v in per_user) else math.fsum(per_user)
    return SpectralEfficiency(per_user, total)


def max_abs_gap(n_values: Sequence[int], mu_grid: Sequence[float], q_grid: Sequence[float],
                tau: int = 10, K: int = 8, variant=DEFAULT_VARIANT) -> list[float]:
    """max |exact - asymptotic| over a (mu', q~) grid, per M_r L value (L = 1)."""
    gaps = []
    for n in n_values:
        worst = 0.0
        for mu in mu_grid:
            worst = max(worst, abs(pfa_exact(mu, n, 1, tau, K, variant) - pfa_asymptotic(mu, n, 1, tau, K)))
            for qt in q_grid:
                worst = max(worst, abs(pc_exact(mu, qt, n, 1, tau, K, variant) - pc_asymptotic(mu, qt, n, 1, tau, K)))
        gaps.append(worst)
    return gaps

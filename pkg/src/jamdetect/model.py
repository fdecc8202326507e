"""Uplink pilot phase of a single-cell massive-MIMO system under jamming.

Conventions
-----------
* Pilot ``i`` is column ``i`` of ``PilotBook.matrix``; pilots are orthonormal
  under the pairing ``phi_i^T conj(phi_t)``.
* CN(0, 1) has total variance one (real and imaginary parts 1/2 each).
* Users occupy the first K pilots unless pilot hopping permutes the
  assignment; the remaining ``tau - K`` pilots are the unused ones.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _rng
from ._rng import BlockStream, TrialStream
from .errors import InvalidArgument, NoUnusedPilotsError

EQUAL_SPLIT = "equal-split"
CUSTOM = "custom"


@dataclass(frozen=True)
class SystemConfig:
    """Scenario scalars. Powers are linear, relative to unit noise variance."""

    M_r: int
    M_w: int = 4
    K: int = 8
    tau: int = 10
    L: int = 1
    p: float = 1.0
    q: float = 0.0
    beta_users: Optional[Sequence[float]] = None
    beta_w: float = 1.0
    T: Optional[int] = None

    def __post_init__(self):
        for name in ("M_r", "M_w", "tau", "L"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise InvalidArgument(f"{name} must be an integer >= 1, got {value!r}")
        if int(self.K) != self.K or self.K < 0:
            raise InvalidArgument(f"K must be an integer >= 0, got {self.K!r}")
        if self.K >= self.tau:
            raise NoUnusedPilotsError(self.K, self.tau)
        if self.T is not None and self.T < self.tau:
            raise InvalidArgument(f"coherence length T={self.T} must be >= tau={self.tau}")
        if not self.p >= 0 or not self.q >= 0:
            raise InvalidArgument(f"powers must be nonnegative (p={self.p}, q={self.q})")
        if not self.beta_w > 0:
            raise InvalidArgument(f"beta_w must be positive, got {self.beta_w}")
        betas = tuple(float(b) for b in self.beta_users) if self.beta_users is not None else (1.0,) * self.K
        if len(betas) != self.K:
            raise InvalidArgument(f"beta_users has {len(betas)} entries, expected K={self.K}")
        if any(not b > 0 for b in betas):
            raise InvalidArgument("beta_users entries must be positive")
        object.__setattr__(self, "beta_users", betas)

    @property
    def n_unused(self) -> int:
        return self.tau - self.K

    @property
    def q_tilde(self) -> float:
        """Effective jamming power q * M_w * beta_w seen on an unused pilot."""
        return self.q * self.M_w * self.beta_w


@dataclass(frozen=True)
class PilotBook:
    matrix: np.ndarray  # tau x tau, pilot i in column i

    @property
    def tau(self) -> int:
        return self.matrix.shape[0]

    @property
    def pilots(self) -> list[np.ndarray]:
        return [self.matrix[:, i] for i in range(self.tau)]

    def gram(self) -> np.ndarray:
        """Entry (i, t) is phi_i^T conj(phi_t)."""
        return self.matrix.T @ self.matrix.conj()


def make_pilot_book(tau: int) -> PilotBook:
    """Normalised DFT pilots, phi_i[n] = exp(-2j pi n i / tau) / sqrt(tau).

    The DFT matrix is unitary, so the book is orthonormal under both the
    Hermitian pairing and ``phi_i^T conj(phi_t)``.
    """
    if int(tau) != tau or tau < 1:
        raise InvalidArgument(f"tau must be an integer >= 1, got {tau!r}")
    n = np.arange(tau)
    matrix = np.exp(-2j * np.pi * np.outer(n, n) / tau) / np.sqrt(tau)
    if tau == 1:
        matrix = np.ones((1, 1), dtype=complex)
    return PilotBook(matrix)


@dataclass(frozen=True)
class JammerProfile:
    """Effective jamming coefficients c_ij(l) = v_w^(j)T(l) alpha_i(l).

    ``coeffs`` has shape (blocks, tau, M_w). A profile with a single block is
    reused for every block.
    """

    coeffs: np.ndarray
    strategy: str = EQUAL_SPLIT

    @property
    def n_blocks(self) -> int:
        return self.coeffs.shape[0]

    def for_block(self, block: int) -> np.ndarray:
        return self.coeffs[0] if self.n_blocks == 1 else self.coeffs[block]

    def total_power(self) -> np.ndarray:
        """Sum over pilots and antennas of |c_ij|^2, per block."""
        return np.sum(np.abs(self.coeffs) ** 2, axis=(1, 2))

    def per_pilot_power(self) -> np.ndarray:
        """sum_j |c_ij|^2, shape (blocks, tau)."""
        return np.sum(np.abs(self.coeffs) ** 2, axis=2)

    def cross_correlation(self, block: int = 0) -> np.ndarray:
        """Entry (i, i') is sum_j c_ij conj(c_i'j)."""
        c = self.for_block(block)
        return c @ c.conj().T

    @classmethod
    def from_coefficients(cls, coeffs, rtol: float = 1e-9) -> "JammerProfile":
        """Wrap user-supplied coefficients, checking the total power constraint."""
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim == 2:
            coeffs = coeffs[None]
        if coeffs.ndim != 3:
            raise InvalidArgument("coefficients must have shape (tau, M_w) or (blocks, tau, M_w)")
        M_w = coeffs.shape[2]
        power = np.sum(np.abs(coeffs) ** 2, axis=(1, 2))
        if not np.allclose(power, M_w, rtol=rtol, atol=0):
            raise InvalidArgument(f"jamming power per block must equal M_w={M_w}, got {power}")
        return cls(coeffs, CUSTOM)


def equal_split_coefficients(phases: np.ndarray, tau: int) -> np.ndarray:
    """c_ij = exp(j theta_j) / sqrt(tau) for every pilot i; ``phases`` has shape (..., M_w)."""
    row = np.exp(1j * np.asarray(phases)) / np.sqrt(tau)
    return np.repeat(row[..., None, :], tau, axis=-2)


def make_jammer_profile(cfg: SystemConfig, strategy: str = EQUAL_SPLIT,
                        rng: Optional[TrialStream] = None, fixed: bool = False) -> JammerProfile:
    """Equal-split profile with one antenna phase per block.

    Every pilot receives power M_w / tau, the total is M_w, and every pair of
    pilots has cross-correlation M_w / tau. ``fixed`` sets all phases to zero;
    otherwise phases come from the per-block phase streams of ``rng``.
    """
    if strategy != EQUAL_SPLIT:
        raise InvalidArgument(f"unknown jammer strategy {strategy!r}; use JammerProfile.from_coefficients for custom")
    if fixed:
        phases = np.zeros((cfg.L, cfg.M_w))
    else:
        if rng is None:
            raise InvalidArgument("a random stream is required for random jammer phases")
        phases = np.stack([
            _rng.TWO_PI * rng.block(l).uniform(_rng.ROLE_PHASES, cfg.M_w) for l in range(cfg.L)
        ])
    return JammerProfile(equal_split_coefficients(phases, cfg.tau), EQUAL_SPLIT)


@dataclass
class BlockRealization:
    user_channels: np.ndarray  # M_r x K, g_i = sqrt(beta_i) h_i
    jammer_channels: np.ndarray  # M_r x M_w, zeros when the jammer is absent
    noise: np.ndarray  # M_r x tau
    received: np.ndarray  # M_r x tau
    jammer_present: bool
    coeffs: np.ndarray  # tau x M_w coefficients in effect
    assignment: np.ndarray = field(default=None)  # pilot index per slot; first K go to users

    @property
    def unused_pilots(self) -> np.ndarray:
        return self.assignment[self.user_channels.shape[1]:]


def assemble_received(cfg: SystemConfig, book: PilotBook, user_channels, jammer_channels,
                      coeffs, noise, assignment, jammer_present: bool) -> np.ndarray:
    """Received pilot matrix from its constituents.

    Y = sum_k sqrt(tau p) g_k phi_{a(k)}^T
        + sum_i sum_j sqrt(tau q) c_ij g_w^(j) phi_i^T + N
    """
    phi = book.matrix
    Y = np.array(noise, dtype=complex, copy=True)
    if cfg.K:
        Y += np.sqrt(cfg.tau * cfg.p) * user_channels @ phi[:, assignment[:cfg.K]].T
    if jammer_present:
        # jammer_channels @ coeffs.T is M_r x tau: entry (m, i) = sum_j c_ij g_w^(j)[m]
        Y += np.sqrt(cfg.tau * cfg.q) * (jammer_channels @ coeffs.T) @ phi.T
    return Y


def draw_block(cfg: SystemConfig, book: PilotBook, profile: JammerProfile, jammer_present: bool,
               rng: BlockStream, *, pilot_hopping: bool = False, noise: bool = True) -> BlockRealization:
    """Draw the channels and noise of one coherence block and form Y(l).

    ``rng`` fixes the (seed, trial, block) address; the jammer coefficients
    in effect are ``profile.for_block(rng.block)``. ``noise=False`` zeroes the
    receiver noise (test hook).
    """
    if book.tau != cfg.tau:
        raise InvalidArgument(f"pilot book has tau={book.tau}, config has tau={cfg.tau}")
    coeffs = profile.for_block(rng.block)
    if coeffs.shape != (cfg.tau, cfg.M_w):
        raise InvalidArgument(f"jammer coefficients have shape {coeffs.shape}, expected {(cfg.tau, cfg.M_w)}")

    assignment = rng.permutation(cfg.tau) if pilot_hopping else np.arange(cfg.tau)
    betas = np.sqrt(np.asarray(cfg.beta_users, dtype=float))
    users = rng.complex_normal(_rng.ROLE_USERS, (cfg.M_r, cfg.K)) * betas
    if jammer_present:
        jammer = np.sqrt(cfg.beta_w) * rng.complex_normal(_rng.ROLE_JAMMER, (cfg.M_r, cfg.M_w))
    else:
        jammer = np.zeros((cfg.M_r, cfg.M_w), dtype=complex)
    if noise:
        N = rng.complex_normal(_rng.ROLE_NOISE, (cfg.M_r, cfg.tau))
    else:
        N = np.zeros((cfg.M_r, cfg.tau), dtype=complex)

    Y = assemble_received(cfg, book, users, jammer, coeffs, N, assignment, jammer_present)
    return BlockRealization(users, jammer, N, Y, jammer_present, coeffs, assignment)


@dataclass(frozen=True)
class UnusedPilotObservations:
    """Projections Y_w(l) of L blocks, shape (L, M_r, tau - K).

    Row m of block l is the detector's working vector y~_m(l).
    """

    blocks: np.ndarray

    def __post_init__(self):
        blocks = np.asarray(self.blocks, dtype=complex)
        if blocks.ndim == 2:
            blocks = blocks[None]
        if blocks.ndim != 3 or 0 in blocks.shape:
            raise InvalidArgument(f"observations must be a nonempty (L, M_r, tau-K) array, got shape {blocks.shape}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def L(self) -> int:
        return self.blocks.shape[0]

    @property
    def M_r(self) -> int:
        return self.blocks.shape[1]

    @property
    def n_unused(self) -> int:
        return self.blocks.shape[2]

    def check_against(self, cfg: SystemConfig) -> None:
        expected = (cfg.L, cfg.M_r, cfg.n_unused)
        if self.blocks.shape != expected:
            raise InvalidArgument(f"observations have shape {self.blocks.shape}, config implies {expected}")


def project_unused(block: BlockRealization, book: PilotBook, K: int) -> np.ndarray:
    """Columns y_i(l) = Y(l) conj(phi_i) for the unused pilots, shape (M_r, tau - K)."""
    tau = book.tau
    if K >= tau:
        raise NoUnusedPilotsError(K, tau)
    assignment = block.assignment if block.assignment is not None else np.arange(tau)
    unused = assignment[K:]
    return block.received @ book.matrix[:, unused].conj()


def simulate_observations(cfg: SystemConfig, jammer_present: bool, seed: int, trial: int = 0, *,
                          book: Optional[PilotBook] = None, pilot_hopping: bool = False,
                          fixed_jammer: bool = False) -> UnusedPilotObservations:
    """Draw all L blocks of one trial and stack their unused-pilot projections."""
    book = book or make_pilot_book(cfg.tau)
    stream = TrialStream(seed, trial)
    profile = make_jammer_profile(cfg, rng=stream, fixed=fixed_jammer)
    blocks = []
    for l in range(cfg.L):
        realization = draw_block(cfg, book, profile, jammer_present, stream.block(l),
                                 pilot_hopping=pilot_hopping)
        blocks.append(project_unused(realization, book, cfg.K))
    return UnusedPilotObservations(np.stack(blocks))

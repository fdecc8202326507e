"""Counter-based random streams.

Every random quantity in a simulation is addressed by the tuple
``(seed, trial, block, role)``. The tuple is hashed into a 64-bit key and
the stream is the SplitMix64 sequence started from that key, so any
element can be produced without generating the ones before it. The
compiled kernel implements the same construction in C; both must stay in
lockstep.
"""
from __future__ import annotations

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
KEY_ROOT = 0x6A09E667F3BCC909

# stream roles
ROLE_USERS = 0
ROLE_JAMMER = 1
ROLE_NOISE = 2
ROLE_PHASES = 3
ROLE_PERMUTATION = 4

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(GOLDEN)
_INV_2_53 = 1.0 / 9007199254740992.0
TWO_PI = 6.283185307179586
ATTEMPT_SHIFT = 40


def _fmix(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _fmix_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def stream_key(seed: int, trial: int, block: int, role: int) -> int:
    """Hash the stream address into a 64-bit key."""
    h = KEY_ROOT
    for v in (seed, trial, block, role):
        h = _fmix(((h ^ (v & MASK64)) + GOLDEN) & MASK64)
    return h


def stream_keys(seed: int, trials: np.ndarray, block: int, role: int) -> np.ndarray:
    """Vectorised :func:`stream_key` over an array of trial indices."""
    h = np.uint64(_fmix(((KEY_ROOT ^ (seed & MASK64)) + GOLDEN) & MASK64))
    h = _fmix_array((h ^ np.asarray(trials, dtype=np.uint64)) + _GOLDEN)
    h = _fmix_array((h ^ np.uint64(block & MASK64)) + _GOLDEN)
    return _fmix_array((h ^ np.uint64(role & MASK64)) + _GOLDEN)


def raw_outputs(keys: np.ndarray, n: int) -> np.ndarray:
    """First ``n`` 64-bit outputs of each keyed stream, shape ``keys.shape + (n,)``."""
    keys = np.asarray(keys, dtype=np.uint64)
    counters = np.arange(1, n + 1, dtype=np.uint64) * _GOLDEN
    return _fmix_array(keys[..., None] + counters)


def uniforms(keys: np.ndarray, n: int) -> np.ndarray:
    """Uniform doubles in [0, 1) with 53 random bits."""
    return (raw_outputs(keys, n) >> np.uint64(11)).astype(np.float64) * _INV_2_53


def _uniform_at(keys: np.ndarray, counters: np.ndarray) -> np.ndarray:
    z = _fmix_array(keys + (counters + np.uint64(1)) * _GOLDEN)
    return (z >> np.uint64(11)).astype(np.float64) * _INV_2_53


def complex_normals(keys: np.ndarray, n: int) -> np.ndarray:
    """CN(0, 1) samples (real and imaginary variance 1/2), polar method.

    Attempt ``a`` of sample ``k`` reads stream outputs ``a * 2**40 + 2k`` and
    ``a * 2**40 + 2k + 1``, so every sample is addressable on its own.
    """
    keys = np.asarray(keys, dtype=np.uint64)
    shape = keys.shape + (n,)
    flat_keys = np.broadcast_to(keys[..., None], shape).ravel()
    flat_k = np.broadcast_to(np.arange(n, dtype=np.uint64), shape).ravel()
    out = np.empty(flat_keys.size, dtype=np.complex128)
    pending = np.arange(flat_keys.size)
    attempt = 0
    while pending.size:
        base = np.uint64(attempt << ATTEMPT_SHIFT) + np.uint64(2) * flat_k[pending]
        v1 = 2.0 * _uniform_at(flat_keys[pending], base) - 1.0
        v2 = 2.0 * _uniform_at(flat_keys[pending], base + np.uint64(1)) - 1.0
        s = v1 * v1 + v2 * v2
        ok = (s < 1.0) & (s > 0.0)
        f = np.sqrt(-np.log(s[ok]) / s[ok])
        out[pending[ok]] = (v1[ok] * f) + 1j * (v2[ok] * f)
        pending = pending[~ok]
        attempt += 1
    return out.reshape(shape)


def permutation_from_uniforms(u: np.ndarray, n: int) -> np.ndarray:
    """Fisher-Yates shuffle of ``range(n)`` driven by ``n - 1`` uniforms."""
    perm = np.arange(n)
    for idx, i in enumerate(range(n - 1, 0, -1)):
        j = int(u[idx] * (i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return perm


class BlockStream:
    """The random streams of one coherence block of one trial."""

    def __init__(self, seed: int, trial: int, block: int):
        self.seed = int(seed)
        self.trial = int(trial)
        self.block = int(block)

    def key(self, role: int) -> int:
        return stream_key(self.seed, self.trial, self.block, role)

    def complex_normal(self, role: int, shape: tuple[int, ...]) -> np.ndarray:
        n = int(np.prod(shape)) if shape else 1
        key = np.array(self.key(role), dtype=np.uint64)
        return complex_normals(key, n).reshape(shape)

    def uniform(self, role: int, n: int) -> np.ndarray:
        return uniforms(np.array(self.key(role), dtype=np.uint64), n)

    def permutation(self, n: int) -> np.ndarray:
        return permutation_from_uniforms(self.uniform(ROLE_PERMUTATION, max(n - 1, 0)), n)


class TrialStream:
    """Seeded source for one Monte Carlo trial; hands out per-block streams."""

    def __init__(self, seed: int, trial: int = 0):
        self.seed = int(seed)
        self.trial = int(trial)

    def block(self, block: int) -> BlockStream:
        return BlockStream(self.seed, self.trial, block)

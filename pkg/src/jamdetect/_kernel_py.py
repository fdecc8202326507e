"""NumPy implementation of the trial kernel.

Same contract and random streams as the compiled ``_kernel.trial_sums``;
results agree to rounding.
"""
from __future__ import annotations

import numpy as np

from . import _rng

# complex samples held in memory per batch
_BATCH_SAMPLES = 1 << 20


def _permutations(keys: np.ndarray, tau: int) -> np.ndarray:
    n = keys.shape[0]
    perm = np.tile(np.arange(tau), (n, 1))
    if tau < 2:
        return perm
    u = _rng.uniforms(keys, tau - 1)
    rows = np.arange(n)
    for idx, i in enumerate(range(tau - 1, 0, -1)):
        j = (u[:, idx] * (i + 1)).astype(np.int64)
        a = perm[rows, i].copy()
        perm[rows, i] = perm[rows, j]
        perm[rows, j] = a
    return perm


def _batch(seed, trials, M_r, M_w, K, tau, L, user_amp, jam_amp,
           jammer_present, fixed_phases, permute, book):
    n = trials.size
    total = np.zeros(n)
    inv_sqrt_tau = 1.0 / np.sqrt(tau)
    for l in range(L):
        def keys(role):
            return _rng.stream_keys(seed, trials, l, role)

        if permute:
            perm = _permutations(keys(_rng.ROLE_PERMUTATION), tau)
        else:
            perm = np.tile(np.arange(tau), (n, 1))
        # book[:, perm] per trial: shape (n, tau_time, tau_slots)
        phi = book[:, perm].transpose(1, 0, 2)
        w = phi[:, :, K:].conj().sum(axis=2)  # (n, tau)

        acc = np.einsum("tmn,tn->tm", _rng.complex_normals(keys(_rng.ROLE_NOISE), M_r * tau).reshape(n, M_r, tau), w)
        if K:
            u = user_amp[None, :] * np.einsum("tnk,tn->tk", phi[:, :, :K], w)
            h = _rng.complex_normals(keys(_rng.ROLE_USERS), M_r * K).reshape(n, M_r, K)
            acc += np.einsum("tmk,tk->tm", h, u)
        if jammer_present:
            if fixed_phases:
                c = np.full((n, M_w), inv_sqrt_tau, dtype=complex)
            else:
                theta = _rng.TWO_PI * _rng.uniforms(keys(_rng.ROLE_PHASES), M_w)
                c = (np.cos(theta) + 1j * np.sin(theta)) * inv_sqrt_tau
            b = c[:, :, None] * book.sum(axis=1)[None, None, :]  # (n, M_w, tau)
            jp = jam_amp * np.einsum("tjn,tn->tj", b, w)
            h = _rng.complex_normals(keys(_rng.ROLE_JAMMER), M_r * M_w).reshape(n, M_r, M_w)
            acc += np.einsum("tmj,tj->tm", h, jp)
        total += np.sum(acc.real ** 2 + acc.imag ** 2, axis=1)
    return total


def trial_sums(seed, trial_start, n_trials, M_r, M_w, K, tau, L, user_amp, jam_amp,
               jammer_present, fixed_phases, permute, book_re, book_im):
    """Row-projection statistic S for trials ``trial_start .. trial_start + n_trials - 1``."""
    book = np.asarray(book_re) + 1j * np.asarray(book_im)
    if book.shape != (tau, tau):
        raise ValueError("pilot book must be tau x tau")
    user_amp = np.asarray(user_amp, dtype=float)
    if user_amp.shape != (K,):
        raise ValueError("user_amp must have K entries")
    per_trial = M_r * (tau + K + M_w)
    batch = max(1, _BATCH_SAMPLES // per_trial)
    out = np.empty(n_trials)
    for start in range(0, n_trials, batch):
        stop = min(n_trials, start + batch)
        trials = np.arange(trial_start + start, trial_start + stop, dtype=np.uint64)
        out[start:stop] = _batch(int(seed), trials, M_r, M_w, K, tau, L, user_amp, jam_amp,
                                 jammer_present, fixed_phases, permute, book)
    return out

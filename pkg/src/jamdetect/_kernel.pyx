# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled trial kernel.

Computes, for a contiguous range of trials, the detector statistic
S = sum_l sum_m |y~_m(l)^H 1|^2. Every channel, noise and jammer draw of
the received pilot matrix Y(l) is made; the row sums of the unused-pilot
projections are accumulated as Y(l) w with w the sum of the conjugated
unused pilots, distributed over the terms of Y(l).
Random draws follow the counter-based scheme of ``jamdetect._rng``.
"""
from libc.math cimport sqrt, log, cos, sin
from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, free

import numpy as np

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t KEY_ROOT = 0x6A09E667F3BCC909ULL
cdef double INV_2_53 = 1.0 / 9007199254740992.0
cdef double TWO_PI = 6.283185307179586
cdef uint64_t ATTEMPT_STRIDE = 1ULL << 40

cdef enum:
    ROLE_USERS = 0
    ROLE_JAMMER = 1
    ROLE_NOISE = 2
    ROLE_PHASES = 3
    ROLE_PERMUTATION = 4


cdef inline uint64_t fmix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t block_prefix(uint64_t seed, uint64_t trial, uint64_t block) noexcept nogil:
    cdef uint64_t h = fmix((KEY_ROOT ^ seed) + GOLDEN)
    h = fmix((h ^ trial) + GOLDEN)
    return fmix((h ^ block) + GOLDEN)


cdef inline uint64_t role_key(uint64_t prefix, uint64_t role) noexcept nogil:
    return fmix((prefix ^ role) + GOLDEN)


cdef inline double uniform_at(uint64_t key, uint64_t idx) noexcept nogil:
    return <double>(fmix(key + (idx + 1) * GOLDEN) >> 11) * INV_2_53


cdef inline void cnormal_at(uint64_t key, uint64_t idx, double* re, double* im) noexcept nogil:
    # polar method; attempt a reads outputs a * 2**40 + 2 idx and the next one
    cdef uint64_t base = 2 * idx
    cdef double v1, v2, s, f
    while True:
        v1 = 2.0 * uniform_at(key, base) - 1.0
        v2 = 2.0 * uniform_at(key, base + 1) - 1.0
        s = v1 * v1 + v2 * v2
        if s < 1.0 and s > 0.0:
            break
        base += ATTEMPT_STRIDE
    f = sqrt(-log(s) / s)
    re[0] = v1 * f
    im[0] = v2 * f


cdef double trial_sum(uint64_t seed, int64_t trial, int M_r, int M_w, int K, int tau, int L,
                      const double* user_amp, double jam_amp,
                      bint jammer_present, bint fixed_phases, bint permute,
                      const double* book_re, const double* book_im,
                      int* perm, double* w_re, double* w_im,
                      double* u_re, double* u_im, double* j_re, double* j_im) noexcept nogil:
    cdef int l, m, n, i, j, k, tmp
    cdef uint64_t prefix, k_users, k_jam, k_noise, k_phase, k_perm
    cdef double total = 0.0, hr, hi, cr, ci, br, bi, theta, inv_sqrt_tau
    cdef double ar, ai, pr, pi_
    inv_sqrt_tau = 1.0 / sqrt(<double>tau)

    for l in range(L):
        prefix = block_prefix(seed, <uint64_t>trial, <uint64_t>l)
        k_users = role_key(prefix, ROLE_USERS)
        k_jam = role_key(prefix, ROLE_JAMMER)
        k_noise = role_key(prefix, ROLE_NOISE)
        k_phase = role_key(prefix, ROLE_PHASES)
        k_perm = role_key(prefix, ROLE_PERMUTATION)

        # pilot assignment: perm[0:K] to users, perm[K:tau] unused
        for n in range(tau):
            perm[n] = n
        if permute:
            i = tau - 1
            while i > 0:
                j = <int>(uniform_at(k_perm, <uint64_t>(tau - 1 - i)) * (i + 1))
                tmp = perm[i]
                perm[i] = perm[j]
                perm[j] = tmp
                i -= 1

        # w = sum over unused pilots of conj(phi_i); S only needs Y w
        for n in range(tau):
            w_re[n] = 0.0
            w_im[n] = 0.0
        for k in range(K, tau):
            i = perm[k]
            for n in range(tau):
                w_re[n] += book_re[n * tau + i]
                w_im[n] -= book_im[n * tau + i]

        # user k term of Y w: amp_k h phi_{perm k}^T w
        for k in range(K):
            i = perm[k]
            pr = 0.0
            pi_ = 0.0
            for n in range(tau):
                pr += book_re[n * tau + i] * w_re[n] - book_im[n * tau + i] * w_im[n]
                pi_ += book_re[n * tau + i] * w_im[n] + book_im[n * tau + i] * w_re[n]
            u_re[k] = user_amp[k] * pr
            u_im[k] = user_amp[k] * pi_

        # jammer antenna j term of Y w: jam_amp h_w (sum_i c_ij phi_i)^T w
        if jammer_present:
            for j in range(M_w):
                if fixed_phases:
                    cr = inv_sqrt_tau
                    ci = 0.0
                else:
                    theta = TWO_PI * uniform_at(k_phase, <uint64_t>j)
                    cr = cos(theta) * inv_sqrt_tau
                    ci = sin(theta) * inv_sqrt_tau
                pr = 0.0
                pi_ = 0.0
                for n in range(tau):
                    br = 0.0
                    bi = 0.0
                    for i in range(tau):
                        br += cr * book_re[n * tau + i] - ci * book_im[n * tau + i]
                        bi += cr * book_im[n * tau + i] + ci * book_re[n * tau + i]
                    pr += br * w_re[n] - bi * w_im[n]
                    pi_ += br * w_im[n] + bi * w_re[n]
                j_re[j] = jam_amp * pr
                j_im[j] = jam_amp * pi_

        for m in range(M_r):
            ar = 0.0
            ai = 0.0
            for n in range(tau):
                cnormal_at(k_noise, <uint64_t>(m * tau + n), &hr, &hi)
                ar += hr * w_re[n] - hi * w_im[n]
                ai += hr * w_im[n] + hi * w_re[n]
            for k in range(K):
                cnormal_at(k_users, <uint64_t>(m * K + k), &hr, &hi)
                ar += hr * u_re[k] - hi * u_im[k]
                ai += hr * u_im[k] + hi * u_re[k]
            if jammer_present:
                for j in range(M_w):
                    cnormal_at(k_jam, <uint64_t>(m * M_w + j), &hr, &hi)
                    ar += hr * j_re[j] - hi * j_im[j]
                    ai += hr * j_im[j] + hi * j_re[j]
            total += ar * ar + ai * ai
    return total


def trial_sums(uint64_t seed, int64_t trial_start, int64_t n_trials,
               int M_r, int M_w, int K, int tau, int L,
               double[::1] user_amp, double jam_amp,
               bint jammer_present, bint fixed_phases, bint permute,
               double[:, ::1] book_re, double[:, ::1] book_im):
    """Row-projection statistic S for trials ``trial_start .. trial_start + n_trials - 1``.

    ``book_re``/``book_im`` hold the pilot matrix with pilot ``i`` in column ``i``.
    ``user_amp[k]`` is sqrt(tau p beta_k); ``jam_amp`` is sqrt(tau q beta_w).
    """
    if book_re.shape[0] != tau or book_re.shape[1] != tau:
        raise ValueError("pilot book must be tau x tau")
    if user_amp.shape[0] != K:
        raise ValueError("user_amp must have K entries")
    out = np.empty(n_trials, dtype=np.float64)
    cdef double[::1] out_v = out
    cdef int64_t t
    cdef int* perm = <int*>malloc(tau * sizeof(int))
    cdef double* scratch = <double*>malloc((2 * tau + 2 * K + 2 * M_w + 1) * sizeof(double))
    cdef const double* ua = &user_amp[0] if K > 0 else NULL
    if perm == NULL or scratch == NULL:
        free(perm)
        free(scratch)
        raise MemoryError()
    try:
        with nogil:
            for t in range(n_trials):
                out_v[t] = trial_sum(seed, trial_start + t, M_r, M_w, K, tau, L,
                                     ua, jam_amp, jammer_present, fixed_phases, permute,
                                     &book_re[0, 0], &book_im[0, 0], perm,
                                     scratch, scratch + tau,
                                     scratch + 2 * tau, scratch + 2 * tau + K,
                                     scratch + 2 * tau + 2 * K, scratch + 2 * tau + 2 * K + M_w)
    finally:
        free(perm)
        free(scratch)
    return out

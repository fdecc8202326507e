"""Shared oracles for the test modules."""
import numpy as np

from jamdetect import _rng
from jamdetect.model import (
    SystemConfig,
    draw_block,
    make_jammer_profile,
    make_pilot_book,
    project_unused,
)


def unused_rows(cfg: SystemConfig, jammer_present: bool, n_blocks: int, seed: int) -> np.ndarray:
    """Stack the working vectors of ``n_blocks`` independent blocks, shape (n_blocks*M_r, tau-K)."""
    book = make_pilot_book(cfg.tau)
    stream = _rng.TrialStream(seed, 0)
    profile = make_jammer_profile(SystemConfig(**{**cfg.__dict__, "L": n_blocks}), rng=stream)
    rows = []
    for l in range(n_blocks):
        block = draw_block(cfg, book, profile, jammer_present, stream.block(l))
        rows.append(project_unused(block, book, cfg.K))
    return np.concatenate(rows)


def covariance_zscores(rows: np.ndarray, q_tilde: float) -> np.ndarray:
    """Entrywise (estimate - target) / standard error for E[y y^H] = I + q_tilde 11^T."""
    n, d = rows.shape
    target = np.eye(d) + q_tilde * np.ones((d, d))
    prod = rows[:, :, None] * rows[:, None, :].conj()
    est = prod.mean(axis=0)
    se_re = prod.real.std(axis=0, ddof=1) / np.sqrt(n)
    se_im = prod.imag.std(axis=0, ddof=1) / np.sqrt(n)
    z_re = (est.real - target) / se_re
    # diagonal imaginary parts are identically zero
    z_im = np.where(se_im > 0, est.imag / np.where(se_im > 0, se_im, 1.0), 0.0)
    return np.maximum(np.abs(z_re), np.abs(z_im))

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jamdetect import kernel
from jamdetect.model import SystemConfig
from jamdetect.montecarlo import trial_statistics

compiled = pytest.mark.skipif("compiled" not in kernel.BACKENDS, reason="extension not built")


def test_python_backend_always_available():
    assert "python" in kernel.BACKENDS
    assert kernel.BACKEND in kernel.BACKENDS


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernel.get_trial_sums("fortran")


@compiled
@settings(max_examples=25)
@given(
    M_r=st.integers(1, 12), M_w=st.integers(1, 5), tau=st.integers(2, 8), L=st.integers(1, 3),
    q=st.floats(0, 2), present=st.booleans(), hop=st.booleans(), fixed=st.booleans(),
    seed=st.integers(0, 2 ** 64 - 1), start=st.integers(0, 2 ** 40),
)
def test_backends_agree(M_r, M_w, tau, L, q, present, hop, fixed, seed, start):
    cfg = SystemConfig(M_r=M_r, M_w=M_w, K=tau - 1, tau=tau, L=L, q=q)
    kw = dict(trial_start=start, pilot_hopping=hop, fixed_jammer=fixed)
    a = trial_statistics(cfg, present, 7, seed, backend="compiled", **kw)
    b = trial_statistics(cfg, present, 7, seed, backend="python", **kw)
    np.testing.assert_allclose(a, b, rtol=1e-12)


@compiled
def test_backends_agree_paper_size():
    cfg = SystemConfig(M_r=100, L=10, q=10 ** -1.7)
    a = trial_statistics(cfg, True, 300, 1, backend="compiled")
    b = trial_statistics(cfg, True, 300, 1, backend="python")
    np.testing.assert_allclose(a, b, rtol=1e-12)


def _backend_in_subprocess(code, env_extra=None):
    import os
    import subprocess
    import sys

    env = {**os.environ, **(env_extra or {})}
    proc = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env)
    assert proc.returncode == 0, proc.stderr
    return proc.stdout.strip()


def test_fallback_when_extension_missing():
    code = ("import sys; sys.modules['jamdetect._kernel'] = None\n"
            "from jamdetect import kernel; print(kernel.BACKEND, sorted(kernel.BACKENDS))")
    assert _backend_in_subprocess(code) == "python ['python']"


def test_environment_forces_python():
    code = "from jamdetect import kernel; print(kernel.BACKEND)"
    assert _backend_in_subprocess(code, {"JAMDETECT_BACKEND": "python"}) == "python"

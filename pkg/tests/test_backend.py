import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from conftest import BACKENDS

from bayescoint import _backend, _fallback
from bayescoint.switching import SwitchConfig, switch_filter, switch_smooth

ROOT = Path(__file__).resolve().parent.parent


def _run(code, **env):
    return subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                          env={**os.environ, **env}, check=True).stdout.strip()


def test_pure_env_forces_fallback():
    assert _run("import bayescoint; print(bayescoint.backend)", BAYESCOINT_PURE="1") == "python"


@pytest.mark.skipif("compiled" not in BACKENDS, reason="compiled kernels unavailable")
def test_compiled_selected_by_default():
    assert _run("import bayescoint; print(bayescoint.backend)", BAYESCOINT_PURE="") == "compiled"


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.use("fortran")


def test_use_switches(backend):
    assert _backend.name == backend
    assert (_backend.kernels is _fallback) == (backend == "python")


@pytest.mark.skipif("compiled" not in BACKENDS, reason="compiled kernels unavailable")
def test_backends_agree_end_to_end():
    rng = np.random.default_rng(0)
    eps = np.cumsum(rng.normal(size=200)) * 0.2 + rng.normal(size=200)
    cfg = SwitchConfig(0.4, 0.97, 0.97)
    out = {}
    for b in ("python", "compiled"):
        _backend.use(b)
        sm = switch_smooth(switch_filter(eps, 1.0, cfg), cfg)
        out[b] = (sm.filtered.loglik, sm.rw_prob, sm.phi1, sm.p_start)
    _backend.use("compiled")
    assert out["python"][0] == pytest.approx(out["compiled"][0], rel=1e-12)
    for a, c in zip(out["python"][1:], out["compiled"][1:]):
        np.testing.assert_allclose(a, c, atol=1e-10)


@pytest.mark.skipif("compiled" not in BACKENDS, reason="compiled kernels unavailable")
def test_benchmark_runs():
    res = subprocess.run([sys.executable, str(ROOT / "benchmarks" / "bench_kernels.py"), "--lengths", "60", "--repeats", "1"],
                         capture_output=True, text=True, check=True)
    lines = res.stdout.strip().splitlines()
    assert "speed-up" in lines[0] and len(lines) == 3

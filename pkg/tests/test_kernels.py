import os
import subprocess
import sys

import numpy as np
import pytest

from ideoscale import _kernels
from ideoscale._kernels import _dip_py


def test_backend_selected():
    assert _kernels.BACKEND in ("cython", "python")


def test_env_forces_fallback():
    code = "from ideoscale import _kernels; print(_kernels.BACKEND)"
    env = dict(os.environ, IDEOSCALE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_backends_agree():
    ext = pytest.importorskip("ideoscale._kernels._dip_ext")
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(2, 300))
        x = np.sort(np.round(rng.standard_t(3, n), int(rng.integers(0, 4))))
        assert ext.dip_sorted(x) == _dip_py.dip_sorted(x)
    rows = np.sort(rng.random((16, 77)), axis=1)
    np.testing.assert_array_equal(ext.dip_batch(rows), _dip_py.dip_batch(rows))

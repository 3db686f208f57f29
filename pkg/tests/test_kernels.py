import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edgeoffload import kernels

compiled = kernels.compiled_best_pair()
needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernel not built")


def inputs(seed, m):
    rng = np.random.default_rng(seed)
    lf = np.triu(rng.uniform(0.1, 0.5, (m, m)), 1)
    # coarse values make exact ties likely, exercising the tie-break
    return (
        float(rng.choice([0.0, 1 / 3600, 1.0])), float(rng.integers(1, 5) * 40.0),
        float(rng.integers(1, 5) * 1e10), float(rng.uniform(5, 60)),
        (rng.random(m) < 0.6).astype(np.uint8), rng.integers(0, 5, m).astype(np.int64),
        rng.integers(1, 6, m).astype(np.int64), rng.integers(0, 5, m).astype(np.int64),
        rng.choice([0.0, 30.0, 8000.0], m), rng.choice([50.0, 100.0], m),
        rng.choice([5e9, 1e10], m), np.full(m, 50 / 3600), np.full(m, 50 / 3600),
        rng.choice([0.0, 400.0], m), rng.choice([0.0, 1e11], m),
        np.round(lf + lf.T, 1),
    )


@needs_compiled
@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 24), st.sampled_from([kernels.DAPA, kernels.UE]))
def test_compiled_and_python_agree_bitwise(seed, m, mode):
    args = inputs(seed, m)
    assert compiled(mode, *args) == kernels.python_best_pair(mode, *args)


def test_python_kernel_tie_breaks_lexicographically():
    m = 3
    args = (1.0, 80.0, 1e10, 10.0, np.ones(m, np.uint8), np.zeros(m, np.int64),
            np.full(m, 5, np.int64), np.zeros(m, np.int64), np.full(m, 8000.0),
            np.full(m, 100.0), np.full(m, 1e10), np.zeros(m), np.zeros(m), np.zeros(m),
            np.zeros(m), np.zeros((m, m)))
    i, j, _ = kernels.python_best_pair(kernels.DAPA, *args)
    assert (i, j) == (0, 0)
    if compiled is not None:
        assert compiled(kernels.DAPA, *args)[:2] == (0, 0)


def test_no_feasible_pair_sentinel():
    m = 2
    args = (1.0, 80.0, 1e10, 10.0, np.zeros(m, np.uint8), np.zeros(m, np.int64),
            np.full(m, 5, np.int64), np.zeros(m, np.int64), np.full(m, 8000.0),
            np.full(m, 100.0), np.full(m, 1e10), np.zeros(m), np.zeros(m), np.zeros(m),
            np.zeros(m), np.zeros((m, m)))
    i, j, s = kernels.python_best_pair(kernels.UE, *args)
    assert (i, j) == (-1, -1) and s == float("inf")


def test_env_var_forces_python_backend():
    env = dict(os.environ, EDGEOFFLOAD_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import edgeoffload.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"

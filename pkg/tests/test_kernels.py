import os
import subprocess
import sys

import numpy as np
import pytest

from multiscale_lattice import _kernels_py, kernels

compiled = pytest.importorskip("multiscale_lattice._kernels")


def toda_rows(n=128, amp=0.02, seed=1):
    rng = np.random.default_rng(seed)
    u0 = amp * rng.normal(size=n)
    return u0, u0 + amp * 0.1 * rng.normal(size=n)


@pytest.mark.parametrize("twist", [0.0, 0.013])
def test_toda_hirota_parity(twist):
    u0, u1 = toda_rows()
    a, sa = compiled.toda_hirota_row(u0, u1, 0.25, 1e-12, 100, twist)
    b, sb = _kernels_py.toda_hirota_row(u0, u1, 0.25, 1e-12, 100, twist)
    assert sa == sb > 0
    assert np.max(np.abs(np.asarray(a) - np.asarray(b))) < 1e-14


def test_toda_hirota_row_solves_equation():
    u0, u1 = toda_rows()
    twist = 0.01
    u2, _ = _kernels_py.toda_hirota_row(u0, u1, 0.25, 1e-13, 200, twist)
    n = len(u0)
    left = np.concatenate([[u2[-1] - twist], u2[:-1]])
    right = np.concatenate([u0[1:], [u0[0] + twist]])
    res = np.exp(u0 - u1) - np.exp(u1 - u2) - 0.25 * (np.exp(left - u1) - np.exp(u1 - right))
    assert np.max(np.abs(res)) < 1e-12 and len(res) == n


def test_hietarinta_parity():
    rng = np.random.default_rng(2)
    u0 = 0.01 * rng.normal(size=96)
    a, sa = compiled.hietarinta_row(u0, 3.0, 1.0, 2.0, 4.0)
    b, sb = _kernels_py.hietarinta_row(u0, 3.0, 1.0, 2.0, 4.0)
    assert sa == sb > 0
    assert np.max(np.abs(np.asarray(a) - np.asarray(b))) < 1e-14


def test_default_backend_is_compiled():
    assert kernels.BACKEND == "compiled"


@pytest.mark.parametrize("choice, expected", [("python", "python"), ("compiled", "compiled"), ("auto", "compiled")])
def test_backend_override(choice, expected):
    env = {**os.environ, "MULTISCALE_LATTICE_KERNELS": choice}
    out = subprocess.run(
        [sys.executable, "-c", "from multiscale_lattice import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == expected

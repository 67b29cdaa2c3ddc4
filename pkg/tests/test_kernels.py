import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from oscbus import _kernels_py, kernels
from oscbus.hilbert import OscillatorSpec, build_oscillator_ops

from conftest import max_abs

try:
    from oscbus import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

BACKENDS = [pytest.param(_kernels_py, id="python")]
BACKENDS.append(pytest.param(_kernels_c, id="cython", marks=pytest.mark.skipif(_kernels_c is None, reason="extension not built")))


def _reference_displacement(alpha, dim, pad=80):
    ops = build_oscillator_ops(OscillatorSpec(dim + pad))
    D = scipy.linalg.expm(alpha * ops.a_dag - np.conj(alpha) * ops.a)
    return D[:dim, :dim]


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("alpha", [0.0, 0.3, 1.2 - 0.7j, -2.0j, 3.0 + 1.0j])
def test_displacement_matches_padded_exponential(backend, alpha):
    got = backend.displacement_matrix(alpha, 24)
    assert max_abs(got, _reference_displacement(alpha, 24)) < 1e-12


@pytest.mark.parametrize("backend", BACKENDS)
def test_displacement_is_stable_at_large_cutoff(backend):
    D = backend.displacement_matrix(4.0 - 2.0j, 400)
    assert np.all(np.isfinite(D))
    assert max_abs((D.conj().T @ D)[:100, :100], np.eye(100)) < 1e-10


@pytest.mark.parametrize("backend", BACKENDS)
def test_vacuum_overlap(backend):
    alpha = 0.8 + 0.5j
    assert abs(backend.displacement_matrix(alpha, 8)[0, 0]) == pytest.approx(math.exp(-abs(alpha) ** 2 / 2))


def _coefficient_tables(seed, ntup, nseg):
    rng = np.random.default_rng(seed)
    eig = rng.uniform(-2, 2, (ntup, nseg, 4))
    coef = np.column_stack([rng.uniform(-2, 2, (nseg, 4)), rng.uniform(0.05, 1.5, nseg)])
    # exercise the zero and series rotation branches
    coef[0, 2] = 0.0
    if nseg > 1:
        coef[1, 2] = 1e-5
    return eig, coef


@pytest.mark.skipif(_kernels_c is None, reason="extension not built")
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 8))
def test_backends_agree(seed, ntup, nseg):
    eig, coef = _coefficient_tables(seed, ntup, nseg)
    out_py, verts_py = _kernels_py.accumulate_batch(eig, coef)
    out_c, verts_c = _kernels_c.accumulate_batch(eig, coef)
    assert max_abs(out_py, out_c) < 1e-13
    assert max_abs(verts_py, verts_c) < 1e-13
    alpha = complex(*np.random.default_rng(seed).uniform(-3, 3, 2))
    assert max_abs(_kernels_py.displacement_matrix(alpha, 30), _kernels_c.displacement_matrix(alpha, 30)) < 1e-13


def _brute_scalars(eig_row, coef, steps=4000):
    """Midpoint-rule integration of dR, dV, dW, dS for one eigen-tuple."""
    R = V = W = S = drift = 0.0
    for (a, b, c, d), (v, w, r, g, T) in zip(eig_row, coef):
        h = T / steps
        for _ in range(steps):
            Rm = R + 0.5 * h * r * c
            dV = (v * a * math.cos(Rm) - w * b * math.sin(Rm)) * h
            dW = (w * b * math.cos(Rm) + v * a * math.sin(Rm)) * h
            S -= (V + 0.5 * dV) * dW
            V += dV
            W += dW
            R += h * r * c
            drift += h * g * d
    return np.array([R, V, W, S, drift])


@pytest.mark.parametrize("backend", BACKENDS)
def test_scalars_match_fine_quadrature(backend):
    eig, coef = _coefficient_tables(7, 2, 3)
    out, verts = backend.accumulate_batch(eig, coef)
    for i in range(2):
        assert max_abs(out[i], _brute_scalars(eig[i], coef)) < 1e-6
    assert max_abs(verts[:, -1, 0], out[:, 2]) == 0
    assert max_abs(verts[:, -1, 1], out[:, 1]) == 0


def test_backend_selection_prefers_extension(monkeypatch):
    import importlib

    monkeypatch.delenv("OSCBUS_PURE_PYTHON", raising=False)
    reloaded = importlib.reload(kernels)
    assert reloaded.BACKEND == ("python" if _kernels_c is None else "cython")


def test_pure_python_override(monkeypatch):
    import importlib

    monkeypatch.setenv("OSCBUS_PURE_PYTHON", "1")
    reloaded = importlib.reload(kernels)
    try:
        assert reloaded.BACKEND == "python"
        assert reloaded.accumulate_batch is _kernels_py.accumulate_batch
    finally:
        monkeypatch.delenv("OSCBUS_PURE_PYTHON")
        importlib.reload(kernels)

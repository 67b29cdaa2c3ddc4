import numpy as np
import pytest

from oscbus.verification import (
    area_law_errors,
    compiled_programs,
    derivative_residual,
    dual_path_deviation,
    fourier_identity_error,
    random_sequence,
    run_verification,
)


def test_random_sequences_respect_ranges():
    rng = np.random.default_rng(1)
    for _ in range(50):
        seq = random_sequence(rng)
        assert 2 <= seq.n_qubits <= 3
        assert 1 <= len(seq.segments) <= 6
        for seg in seq.segments:
            assert all(-2 <= c <= 2 for c in seg.coefficients)
            assert all(op.max_abs_eigenvalue() <= 1 + 1e-12 for op in seg.operators)


def test_dual_path_and_derivative_on_one_sequence():
    seq = random_sequence(np.random.default_rng(5))
    assert dual_path_deviation(seq) < 1e-6
    t = 0.5 * seq.segments[0].duration
    assert derivative_residual(seq, t) < 1e-6
    assert derivative_residual(seq, t, fault="s-sign") > 1e-3 or dual_path_deviation(seq, fault="s-sign") > 1e-3


def test_fourier_identity_brute_force():
    for n in range(1, 6):
        assert fourier_identity_error(n) < 1e-12


def test_area_law_on_library():
    for _, prog in compiled_programs(np.random.default_rng(0)):
        assert max(area_law_errors(prog)) < 1e-9


def test_suite_passes_and_catches_fault():
    assert run_verification(seed=11, cases=10)["passed"]
    faulty = run_verification(seed=11, cases=10, fault="s-sign")
    assert not faulty["passed"]
    assert not faulty["checks"]["rectangle_phase"]["passed"]
    with pytest.raises(ValueError):
        run_verification(cases=0)
    with pytest.raises(ValueError):
        run_verification(cases=1, fault="typo")

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oscbus.analysis import (
    OscInput,
    effective_qubit_unitary,
    effective_unitaries,
    equal_up_to_phase,
    gate_report,
    has_individual_addressing,
    initial_cutoff,
    process_fidelity,
)
from oscbus.compiler import GateSpec, compile_cnnot, compile_toffoli
from oscbus.hilbert import OscillatorSpec, pauli_matrix
from oscbus.integrator import program_unitary
from oscbus.model import AxisFrame, Program, PulseSegment, PulseSequence, bit_flip

from conftest import max_abs


def test_product_operator_projects_to_itself():
    G = pauli_matrix("Y", 0, 2) @ pauli_matrix("X", 1, 2)
    psi = np.zeros(5)
    psi[2] = 1
    G_eff, residual = effective_qubit_unitary(np.kron(G, np.eye(5)), psi, 2)
    assert max_abs(G_eff, G) == 0
    assert residual == 0


def test_projection_needs_normalized_state():
    with pytest.raises(ValueError):
        effective_qubit_unitary(np.eye(8), np.ones(4), 1)


def test_rectangle_effective_unitary_independent_of_fock_level():
    prog = GateSpec("rectangle").compile()
    U = program_unitary(prog, OscillatorSpec(48))
    G0, _ = effective_qubit_unitary(U, np.eye(48)[0], 2)
    G3, _ = effective_qubit_unitary(U, np.eye(48)[3], 2)
    assert max_abs(G0, G3) < 1e-8


def test_unclosed_sequence_is_flagged_by_residual():
    (seq,) = GateSpec("rectangle").compile().sequences
    open_prog = Program(2, (PulseSequence(seq.frame, seq.segments[:3]),))
    U = program_unitary(open_prog, OscillatorSpec(48))
    _, residual = effective_qubit_unitary(U, np.eye(48)[0], 2)
    assert residual > 0.1


def test_process_fidelity_examples():
    rng = np.random.default_rng(0)
    M = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    Q, _ = np.linalg.qr(M)
    assert process_fidelity(Q, Q) == pytest.approx(1.0)
    assert process_fidelity(np.exp(0.7j) * Q, Q) == pytest.approx(1.0)
    X, Z = pauli_matrix("X", 0, 1), pauli_matrix("Z", 0, 1)
    assert process_fidelity(X, Z) == 0
    with pytest.raises(ValueError):
        process_fidelity(X, np.eye(4))


@given(st.integers(0, 2**32 - 1), st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi))
def test_process_fidelity_phase_invariant(seed, a, b):
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    V, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    assert process_fidelity(np.exp(1j * a) * U, np.exp(1j * b) * V) == pytest.approx(process_fidelity(U, V), abs=1e-14)
    assert 0 <= process_fidelity(U, V) <= 1


def test_equal_up_to_phase():
    X = pauli_matrix("X", 0, 1)
    assert equal_up_to_phase(-1j * X, X) < 1e-15
    assert equal_up_to_phase(pauli_matrix("Z", 0, 1), X) > 0.5


def test_oscillator_input_parsing():
    assert OscInput.parse("fock:3") == OscInput("fock", 3)
    assert OscInput.parse("thermal:1.0").label == "thermal:1"
    assert OscInput.parse("fock:2").weights().tolist() == [0, 0, 1]
    for bad in ("fock:-1", "coherent:1", "thermal:-2"):
        with pytest.raises(ValueError):
            OscInput.parse(bad)


def test_toffoli_report_across_inputs():
    report = gate_report(compile_toffoli(1), GateSpec("toffoli").ideal(), ["fock:0", "fock:3", "thermal:1"])
    assert report.passed and report.converged
    assert min(report.fidelity.values()) >= 1 - 1e-6
    assert report.fidelity_spread <= 1e-8
    data = json.loads(report.to_json())
    assert data["schema_version"] == 1
    assert set(data["fidelity"]) == {"fock:0", "fock:3", "thermal:1"}


def test_identity_program_report():
    report = gate_report(Program(2, ()), np.eye(4), ["fock:0"])
    assert report.fidelity["fock:0"] == pytest.approx(1.0)
    assert report.leakage == 0
    assert report.passed


def test_short_side_rectangle_report_fails():
    (seq,) = GateSpec("rectangle").compile().sequences
    segs = list(seq.segments)
    segs[0] = PulseSegment(0.9, *segs[0].coefficients, *segs[0].operators)
    prog = Program(2, (PulseSequence(seq.frame, tuple(segs)),))
    report = gate_report(prog, GateSpec("rectangle").ideal(), ["fock:0"])
    assert report.fidelity["fock:0"] < 1 - 1e-3
    assert not report.passes["closure"]
    assert not report.passed


@pytest.mark.parametrize("prog", [GateSpec(k).compile() for k in ("rectangle", "parallelogram", "toffoli", "cnnot", "product-phase")])
def test_effective_unitary_independent_of_fock_level(prog):
    cutoff = initial_cutoff(prog, [OscInput("fock", 6)])
    unitaries, leak = effective_unitaries(prog, range(7), cutoff)
    for k in range(1, 7):
        assert max_abs(unitaries[k], unitaries[0]) < 1e-8
    assert max(leak.values()) < 1e-8


def test_fixed_cutoff_must_hold_inputs():
    with pytest.raises(ValueError):
        gate_report(compile_toffoli(1), GateSpec("toffoli").ideal(), ["fock:40"], cutoff=16)
    with pytest.raises(ValueError):
        gate_report(compile_toffoli(1), np.eye(4), ["fock:0"])
    with pytest.raises(ValueError):
        gate_report(compile_toffoli(1), GateSpec("toffoli").ideal(), [])


def test_individual_addressing_detection():
    assert not has_individual_addressing(compile_cnnot(1).__class__(2, ()))
    assert has_individual_addressing(Program(1, (bit_flip(0),)))
    assert has_individual_addressing(compile_toffoli(1))
    frame = AxisFrame.uniform("X", 2)
    uniform = GateSpec("product-phase", {"qubits": 2}).compile()
    assert not has_individual_addressing(uniform)
    assert frame.n_qubits == 2

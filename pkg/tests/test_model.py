import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oscbus.hilbert import all_spin_tuples, pauli_matrix
from oscbus.model import (
    AxisFrame,
    IdealLocal,
    InternalOperator,
    Program,
    PulseSegment,
    PulseSequence,
    SampledSegment,
    bit_flip,
    dumps,
    eval_eigenvalue,
    loads,
    to_matrix,
    truncate_sequence,
    validate_sequence,
)
from oscbus.compiler import GateSpec, compile_rectangle

from conftest import max_abs

axes = st.sampled_from(["X", "Y", "Z"])
coeff = st.floats(-2, 2, allow_nan=False)


@st.composite
def frames_and_ops(draw, count=2):
    n = draw(st.integers(1, 3))
    frame = AxisFrame(tuple(draw(axes) for _ in range(n)))
    ops = [
        InternalOperator(draw(coeff), tuple((q, draw(coeff)) for q in range(n) if draw(st.booleans())))
        for _ in range(count)
    ]
    return frame, ops


def test_excitation_deficit_eigenvalues():
    deficit = InternalOperator.excitation_deficit([0, 1])
    assert eval_eigenvalue(deficit, (1, 1)) == 0
    assert eval_eigenvalue(deficit, (-1, -1)) == -2


def test_toffoli_operator_eigenvalue():
    A = InternalOperator(0.25, ((0, 0.25), (1, 0.25)))
    assert eval_eigenvalue(A, (1, 1, 1)) == pytest.approx(0.75)


def test_eigenvalue_length_mismatch():
    with pytest.raises(ValueError):
        eval_eigenvalue(InternalOperator.pauli(0), (1, 1), n_qubits=3)
    with pytest.raises(ValueError):
        eval_eigenvalue(InternalOperator.pauli(2), (1, 1))


def test_to_matrix_examples():
    assert max_abs(to_matrix(InternalOperator.identity(), AxisFrame.uniform("Z", 2)), np.eye(4)) == 0
    deficit = to_matrix(InternalOperator.excitation_deficit([0, 1]), AxisFrame.uniform("Z", 2))
    # rows |00>, |01>, |10>, |11>
    assert max_abs(deficit, np.diag([-2, -1, -1, 0])) == 0
    sx = to_matrix(InternalOperator.pauli(0), AxisFrame(("X", "Z")))
    assert max_abs(sx, pauli_matrix("X", 0, 2)) == 0
    with pytest.raises(ValueError):
        to_matrix(InternalOperator.pauli(2), AxisFrame.uniform("Z", 2))


@given(frames_and_ops())
def test_operators_in_one_frame_commute(data):
    frame, (A, B) = data
    Am, Bm = to_matrix(A, frame), to_matrix(B, frame)
    assert max_abs(Am @ Bm, Bm @ Am) < 1e-12


@given(frames_and_ops(count=1))
def test_eigenvalues_match_diagonalized_matrix(data):
    frame, (A,) = data
    Q = frame.change_of_basis()
    diag = Q.conj().T @ to_matrix(A, frame) @ Q
    expected = [eval_eigenvalue(A, s) for s in all_spin_tuples(frame.n_qubits)]
    assert max_abs(diag, np.diag(expected)) < 1e-12


def test_operator_normalization_and_dict_round_trip():
    op = InternalOperator(0.5, ((1, 0.25), (0, 0.5), (1, 0.25), (2, 0.0)))
    assert op.coeffs == ((0, 0.5), (1, 0.5))
    assert InternalOperator.parse(op.to_dict()) == op
    assert op.max_abs_eigenvalue() == 1.5
    assert op.scaled(2).coeffs == ((0, 1.0), (1, 1.0))
    with pytest.raises(ValueError):
        InternalOperator(0.0, ((-1, 1.0),))


def test_validate_rectangle_is_clean():
    prog = GateSpec("rectangle").compile()
    assert validate_sequence(prog.sequences[0]) == []


def test_validate_flags_bad_duration_and_frame_conflict():
    frame = AxisFrame(("Z", "Z"))
    bad = PulseSequence(frame, (PulseSegment(0.0, v=1.0, A=InternalOperator.pauli(0)),))
    assert any("non-positive duration" in m for m in validate_sequence(bad))
    clash = PulseSequence(frame, (
        PulseSegment(1.0, v=1.0, A=InternalOperator.pauli(0)),
        PulseSegment(1.0, w=1.0, B=InternalOperator.pauli(0), frame=AxisFrame(("X", "Z"))),
    ))
    assert any("frame conflict" in m for m in validate_sequence(clash))
    assert validate_sequence(PulseSequence(frame, ())) == ["empty sequence"]


def test_ideal_local_rotations_are_unitary():
    for axis, angle in itertools.product("XYZ", (0.3, math.pi, -1.1)):
        U = IdealLocal(axis, angle, 1).matrix(3)
        assert max_abs(U.conj().T @ U, np.eye(8)) < 1e-14
    flip = bit_flip(0).matrix(1)
    assert max_abs(np.abs(flip), [[0, 1], [1, 0]]) < 1e-15
    with pytest.raises(ValueError):
        IdealLocal("Q", 1.0, 0)


def test_program_validation_and_concatenation():
    with pytest.raises(ValueError):
        Program(2, (bit_flip(2),))
    seq = PulseSequence(AxisFrame.uniform("Z", 3), (PulseSegment(1.0),))
    with pytest.raises(ValueError):
        Program(2, (seq,))
    a = Program(2, (bit_flip(0),))
    b = Program(2, (bit_flip(1),))
    assert (a + b).steps == (bit_flip(0), bit_flip(1))
    with pytest.raises(ValueError):
        a + Program(3, ())


def test_sampled_segment_subdivision():
    seg = SampledSegment(0.5, (0.0, 1.0, 0.0), (0, 0, 0), (0, 0, 0), (0, 0, 0), A=InternalOperator.identity())
    assert seg.duration == 1.0
    pieces = seg.subdivide(2)
    assert len(pieces) == 4
    assert [p.v for p in pieces] == [0.25, 0.75, 0.75, 0.25]
    assert sum(p.duration for p in pieces) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        SampledSegment(0.5, (0.0,), (0,), (0,), (0,))


def test_truncate_sequence():
    seq = compile_rectangle(1.0, 2.0, InternalOperator.pauli(0), InternalOperator.identity(), AxisFrame(("Z",))).sequences[0]
    part = truncate_sequence(seq, 2.5)
    assert len(part.segments) == 3
    assert part.duration == pytest.approx(2.5)
    assert part.segments[-1].coefficients == seq.segments[2].coefficients


def test_program_json_round_trip():
    frame = AxisFrame(("Z", "X"))
    sampled = SampledSegment(0.1, (0, 1, 2), (0, 0, 1), (0.5, 0.5, 0.5), (0, 0, 0), A=InternalOperator.pauli(0))
    prog = GateSpec("rectangle").compile() + Program(2, (bit_flip(1), PulseSequence(frame, (sampled,))))
    text = dumps(prog)
    again = loads(text)
    assert again == prog
    assert dumps(again) == text
    with pytest.raises(ValueError):
        loads(text.replace('"schema_version": 1', '"schema_version": 99'))

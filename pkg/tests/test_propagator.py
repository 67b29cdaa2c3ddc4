import io
import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oscbus.compiler import GateSpec, compile_parallelogram, compile_rectangle, compile_toffoli
from oscbus.hilbert import OscillatorSpec, all_spin_tuples, pauli_matrix
from oscbus.integrator import program_unitary
from oscbus.model import AxisFrame, InternalOperator, PulseSegment, PulseSequence, SampledSegment
from oscbus.propagator import (
    LeakageWarning,
    accumulate,
    accumulate_all,
    closed_form_unitary,
    closure_report,
    enclosed_area,
    program_closed_form,
    program_qubit_unitary,
    qubit_phases,
    trajectory_export,
    trajectory_points,
    write_trajectory_csv,
)

from conftest import max_abs

Z1 = AxisFrame(("Z",))


def shoelace(points):
    pts = list(points)
    return 0.5 * sum(x0 * p1 - x1 * p0 for (x0, p0), (x1, p1) in zip(pts, pts[1:] + pts[:1]))


def test_single_push():
    seq = PulseSequence(Z1, (PulseSegment(1.0, v=0.8, A=InternalOperator.identity(0.5)),))
    rec = accumulate(seq, (1,))
    assert (rec.R, rec.W, rec.S) == (0.0, 0.0, 0.0)
    assert rec.V == pytest.approx(0.4)


def test_rectangle_phase_sign():
    a, b, l1, l2 = 0.7, -1.3, 0.9, 1.1
    A, B = InternalOperator.identity(a), InternalOperator.identity(b)
    (seq,) = compile_rectangle(l1, l2, A, B, Z1).sequences
    rec = accumulate(seq, (1,))
    assert max(abs(rec.V), abs(rec.W), abs(rec.R)) < 1e-15
    assert rec.total_phase == pytest.approx(l1 * l2 * a * b, abs=1e-14)


def test_rectangle_sign_against_integrator():
    frame = AxisFrame(("Z", "X"))
    A, B = InternalOperator(0.5, ((0, 0.5),)), InternalOperator.pauli(1)
    prog = compile_rectangle(1.0, math.pi / 2, A, B, frame)
    U = program_unitary(prog, OscillatorSpec(40))
    # exp(-i(π/2) P X) = (1 - P) - i P X with P the control projector
    P = (pauli_matrix("Z", 0, 2) + np.eye(4)) / 2
    target = np.eye(4) - P - 1j * P @ pauli_matrix("X", 1, 2)
    G = U.reshape(4, 40, 4, 40)[:, 0, :, 0]
    assert max_abs(G, target) < 1e-8


def test_toffoli_tuple_phase():
    (seq,) = compile_toffoli(1).sequences
    rec = accumulate(seq, (1, 1, 1))
    assert rec.total_phase == pytest.approx(math.pi / 2, abs=1e-12)
    for s in all_spin_tuples(3):
        r = accumulate(seq, s)
        expected = math.pi * ((s[0] + s[1] + 1) ** 2 - 1) * s[2] / 16
        assert r.total_phase == pytest.approx(expected, abs=1e-12)


def test_zero_sequence_is_identity_and_stays_at_origin():
    frame = AxisFrame(("Z", "X"))
    seq = PulseSequence(frame, (PulseSegment(1.3, A=InternalOperator.pauli(0)),))
    assert max_abs(closed_form_unitary(seq, OscillatorSpec(6)), np.eye(24)) < 1e-15
    assert all(pt == (0.0, 0.0) for pt in trajectory_export(seq, (1, -1)))


def test_unit_square_vertices_and_area():
    A = B = InternalOperator.identity()
    (seq,) = compile_rectangle(1.0, 1.0, A, B, Z1).sequences
    pts = trajectory_export(seq, (1,))
    assert len(pts) == 5
    assert sorted({abs(round(p.x, 12)) for p in pts}) == [0.0, 1.0]
    assert sorted({abs(round(p.p, 12)) for p in pts}) == [0.0, 1.0]
    assert abs(shoelace(pts[:-1])) == pytest.approx(1.0)
    assert enclosed_area(accumulate(seq, (1,))) == pytest.approx(1.0)


def test_parallelogram_area_at_sixty_degrees():
    # A = C = identity with a single Fock rotation angle of π/3
    A, C = InternalOperator.identity(), InternalOperator.identity()
    (seq,) = compile_parallelogram(0.8, math.pi / 3, A, C, Z1).sequences
    rec = accumulate(seq, (1,))
    assert rec.S == pytest.approx(0.8 * math.cos(math.pi / 3), abs=1e-12)
    assert enclosed_area(rec) == pytest.approx(0.4, abs=1e-12)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-math.pi, math.pi))
def test_area_law_for_parallelograms(mu, theta, dummy):
    frame = AxisFrame(("Z", "Z", "X"))
    prog = compile_parallelogram(mu, theta, InternalOperator.pauli(2), InternalOperator.excitation_deficit([0, 1]), frame)
    for seq in prog.sequences:
        for rec in accumulate_all(seq):
            assert abs(rec.S - enclosed_area(rec)) < 1e-9


def test_closure_reports():
    assert closure_report(GateSpec("rectangle").compile()).worst < 1e-12
    report = closure_report(compile_toffoli(1))
    assert report.is_closed
    (seq,) = compile_toffoli(1).sequences
    assert all(abs(abs(accumulate(seq, s).R) - 2 * math.pi) < 1e-12 for s in all_spin_tuples(3))


def test_short_side_breaks_closure():
    l2, b = 1.5, -0.8
    A, B = InternalOperator.identity(0.9), InternalOperator.identity(b)
    (seq,) = compile_rectangle(1.0, l2, A, B, Z1).sequences
    segs = list(seq.segments)
    short = segs[0]
    segs[0] = PulseSegment(0.9 * short.duration, *short.coefficients, *short.operators)
    report = closure_report(PulseSequence(Z1, tuple(segs)))
    assert not report.is_closed
    assert report.worst_w == pytest.approx(0.1 * l2 * abs(b), abs=1e-12)


def test_closed_form_matches_integrator_on_low_levels():
    for prog in (GateSpec("rectangle").compile(), compile_toffoli(1), GateSpec("parallelogram").compile()):
        osc = OscillatorSpec(48)
        nq = 2**prog.n_qubits
        cols = [j * 48 + k for j in range(nq) for k in range(12)]
        diff = program_closed_form(prog, osc)[:, cols] - program_unitary(prog, osc)[:, cols]
        assert np.max(np.abs(diff)) < 1e-6


def test_closed_gate_factors_out_oscillator():
    prog = compile_toffoli(2)
    osc = OscillatorSpec(40)
    U = program_closed_form(prog, osc).reshape(8, 40, 8, 40)
    G = program_qubit_unitary(prog)
    for k in range(30):
        assert max_abs(U[:, k, :, k], G) < 1e-8
    off = U.copy()
    for k in range(40):
        off[:, k, :, k] = 0
    assert np.max(np.abs(off[:, :30, :, :30])) < 1e-8


def test_qubit_phases_of_rectangle_is_cnot_family():
    (seq,) = GateSpec("rectangle").compile().sequences
    G = qubit_phases(seq)
    assert max_abs(G, GateSpec("rectangle").ideal()) < 1e-12


def test_leakage_warning_when_cutoff_too_small():
    seq = PulseSequence(Z1, (PulseSegment(1.0, v=6.0, A=InternalOperator.identity()),))
    with pytest.warns(LeakageWarning):
        closed_form_unitary(seq, OscillatorSpec(8))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        closed_form_unitary(seq, OscillatorSpec(128))


def test_sampled_segment_matches_refined_constant_pieces():
    frame = AxisFrame(("Z",))
    samp = SampledSegment(0.5, (0.0, 1.0, 0.5), (0.2, -0.4, 0.0), (0.3, 0.3, 0.1), (0, 0, 0),
                          A=InternalOperator.identity(), B=InternalOperator.pauli(0), C=InternalOperator.identity())
    rec = accumulate(PulseSequence(frame, (samp,)), (1,))
    fine = accumulate(PulseSequence(frame, tuple(samp.subdivide(4096))), (1,))
    assert abs(rec.V - fine.V) < 1e-8 and abs(rec.S - fine.S) < 1e-8


def test_trajectory_csv_columns():
    (seq,) = GateSpec("parallelogram").compile().sequences
    buf = io.StringIO()
    write_trajectory_csv(seq, buf, arc_points=4)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "eigen_tuple,step,x,p"
    labels = {line.split(",")[0] for line in lines[1:]}
    assert labels == {"---", "--+", "-+-", "-++", "+--", "+-+", "++-", "+++"}
    rows = trajectory_points(seq, (1, 1, 1), arc_points=4)
    assert rows[0] == (0, 0.0, 0.0)
    assert abs(rows[-1][1]) < 1e-12 and abs(rows[-1][2]) < 1e-12


def test_accumulate_validates():
    seq = PulseSequence(Z1, (PulseSegment(-1.0),))
    with pytest.raises(ValueError):
        accumulate_all(seq)
    with pytest.raises(ValueError):
        accumulate(PulseSequence(Z1, (PulseSegment(1.0),)), (1, 1))

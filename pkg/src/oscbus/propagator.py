"""Exact factorized propagator of the bus Hamiltonian.

For ``H(t) = v A x + w B p + r C n + g D`` with commuting A, B, C, D the
evolution factorizes as

    U(t) = e^{-i(S + drift)} e^{-i n R} e^{-i x V} e^{-i p W}

where R, V, W, S are functions of the operator eigenvalues only. Everything
here works one eigen-tuple at a time: the operators are replaced by their
eigenvalues (a, b, c, d), the scalar functions are integrated segment by
segment with exact antiderivatives, and the blocks are reassembled into a
full-space unitary.

In phase space the net action is the translation ``(x, p) -> (x + W, p - V)``
followed by a rotation by R, so the exported trajectory vertices are
``(W, -V)``. With that convention a loop traversed clockwise in the (x, p)
plane accumulates a positive phase S equal to its enclosed area.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import IO, NamedTuple, Sequence

import numpy as np

from . import kernels
from .hilbert import OscillatorSpec, all_spin_tuples
from .model import IdealLocal, Program, PulseSequence, eval_eigenvalue, validate_sequence

CLOSURE_TOL = 1e-9
TWO_PI = 2.0 * math.pi


class LeakageWarning(UserWarning):
    pass


class PhasePoint(NamedTuple):
    x: float
    p: float


@dataclass(frozen=True)
class TrajectoryRecord:
    """Integrated displacement functions for one eigen-tuple."""

    spins: tuple[int, ...]
    vertices: tuple[PhasePoint, ...]
    R: float
    V: float
    W: float
    S: float
    drift_phase: float
    # per segment: (arc length, turning angle in the loop-orientation frame)
    arcs: tuple[tuple[float, float], ...] = ()

    @property
    def total_phase(self) -> float:
        return self.S + self.drift_phase


@dataclass(frozen=True)
class ClosureReport:
    residuals: dict  # spins -> (|V|, |W|, |R mod 2π|)
    worst_v: float
    worst_w: float
    worst_r: float
    tol: float

    @property
    def is_closed(self) -> bool:
        return max(self.worst_v, self.worst_w, self.worst_r) <= self.tol

    @property
    def worst(self) -> float:
        return max(self.worst_v, self.worst_w, self.worst_r)

    def to_dict(self) -> dict:
        return {
            "worst_V": self.worst_v,
            "worst_W": self.worst_w,
            "worst_R_mod_2pi": self.worst_r,
            "tol": self.tol,
            "is_closed": self.is_closed,
        }


# -- scalar integration --------------------------------------------------------


def _check(seq: PulseSequence) -> None:
    problems = validate_sequence(seq)
    if problems:
        raise ValueError("invalid pulse sequence: " + "; ".join(problems))


def _tables(seq: PulseSequence, spins: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalue table (n_tuples, n_segments, 4) and coefficient table (n_segments, 5)."""
    ntup, nseg = spins.shape[0], len(seq.segments)
    eig = np.empty((ntup, nseg, 4))
    coef = np.empty((nseg, 5))
    for j, seg in enumerate(seq.segments):
        coef[j] = (*seg.coefficients, seg.duration)
        for k, op in enumerate(seg.operators):
            vec = np.zeros(spins.shape[1])
            for q, c in op.coeffs:
                vec[q] = c
            eig[:, j, k] = op.c0 + spins @ vec
    return eig, coef


def _arcs(eig: np.ndarray, coef: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    alpha = coef[None, :, 0] * eig[:, :, 0]
    beta = coef[None, :, 1] * eig[:, :, 1]
    length = np.hypot(alpha, beta) * coef[None, :, 4]
    turn = -coef[None, :, 2] * eig[:, :, 2] * coef[None, :, 4]
    return length, turn


def _integrate(seq: PulseSequence, spins: np.ndarray):
    eig, coef = _tables(seq, spins)
    out, verts = kernels.accumulate_batch(eig, coef)
    return out, verts, eig, coef


def _constant_form(seq: PulseSequence, spins: np.ndarray, tol: float = 1e-10, max_doublings: int = 14):
    """Expand sampled segments, doubling sub-steps until the scalars settle."""
    if not seq.has_sampled:
        return seq, _integrate(seq, spins)
    substeps = 1
    current = seq.expand(substeps)
    result = _integrate(current, spins)
    for _ in range(max_doublings):
        finer = seq.expand(substeps * 2)
        nxt = _integrate(finer, spins)
        change = np.max(np.abs(nxt[0] - result[0]))
        substeps *= 2
        current, result = finer, nxt
        if change < tol:
            break
    return current, result


def accumulate_all(seq: PulseSequence) -> list[TrajectoryRecord]:
    """Trajectory records for all 2**n eigen-tuples, in computational-index order."""
    _check(seq)
    tuples = all_spin_tuples(seq.n_qubits)
    spins = np.array(tuples, dtype=float).reshape(len(tuples), seq.n_qubits)
    _, (out, verts, eig, coef) = _constant_form(seq, spins)
    length, turn = _arcs(eig, coef)
    records = []
    for i, s in enumerate(tuples):
        R, V, W, S, drift = (float(v) for v in out[i])
        vertices = tuple(PhasePoint(float(w), float(-v)) for w, v in verts[i])
        arcs = tuple((float(l), float(t)) for l, t in zip(length[i], turn[i]))
        records.append(TrajectoryRecord(s, vertices, R, V, W, S, drift, arcs))
    return records


def accumulate(seq: PulseSequence, s: Sequence[int]) -> TrajectoryRecord:
    if len(s) != seq.n_qubits:
        raise ValueError(f"eigen-tuple has length {len(s)}, expected {seq.n_qubits}")
    _check(seq)
    spins = np.array([s], dtype=float)
    _, (out, verts, eig, coef) = _constant_form(seq, spins)
    length, turn = _arcs(eig, coef)
    R, V, W, S, drift = (float(v) for v in out[0])
    vertices = tuple(PhasePoint(float(w), float(-v)) for w, v in verts[0])
    arcs = tuple((float(l), float(t)) for l, t in zip(length[0], turn[0]))
    return TrajectoryRecord(tuple(int(x) for x in s), vertices, R, V, W, S, drift, arcs)


# -- geometry ----------------------------------------------------------------------


def enclosed_area(record: TrajectoryRecord) -> float:
    """Signed area of the trajectory, clockwise-positive in the (x, p) plane.

    Straight edges contribute through the shoelace sum over vertices; edges
    travelled while the frame rotates are circular arcs and add the area of
    the circular segment between arc and chord.
    """
    pts = [(pt.x, -pt.p) for pt in record.vertices]
    area = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        area += 0.5 * (x0 * y1 - x1 * y0)
    for length, turn in record.arcs:
        if length == 0.0 or abs(turn) < 1e-12:
            continue
        if abs(turn) < 1e-3:
            area += length**2 * (turn / 12.0 - turn**3 / 240.0)
        else:
            radius = length / abs(turn)
            area += 0.5 * radius**2 * (turn - math.sin(turn))
    return area


def trajectory_export(seq: PulseSequence, s: Sequence[int]) -> list[PhasePoint]:
    """Phase-space vertices ``(W, -V)`` after each segment, starting at the origin."""
    return list(accumulate(seq, s).vertices)


def trajectory_points(seq: PulseSequence, s: Sequence[int], arc_points: int = 16) -> list[tuple[int, float, float]]:
    """Vertices plus interior points on curved edges, as ``(segment, x, p)`` rows for plotting."""
    rec = accumulate(seq, s)
    expanded, _ = _constant_form(seq, np.array([s], dtype=float))
    rows = [(0, 0.0, 0.0)]
    R = 0.0
    for j, seg in enumerate(expanded.segments):
        a, b, c = (eval_eigenvalue(op, s) for op in (seg.A, seg.B, seg.C))
        k = complex(seg.w * b, seg.v * a)
        rho = seg.r * c
        start = complex(rec.vertices[j].x, -rec.vertices[j].p)
        if abs(rho * seg.duration) > 1e-12 and k != 0 and arc_points > 1:
            for t in np.linspace(0.0, seg.duration, arc_points + 1)[1:-1]:
                h = 0.5 * rho * t
                z = start + k * t * np.exp(-1j * (R + h)) * (math.sin(h) / h)
                rows.append((j + 1, float(z.real), float(-z.imag)))
        pt = rec.vertices[j + 1]
        rows.append((j + 1, pt.x, pt.p))
        R += rho * seg.duration
    return rows


def spins_label(spins: Sequence[int]) -> str:
    return "".join("+" if x > 0 else "-" for x in spins)


def write_trajectory_csv(seq: PulseSequence, fh: IO[str], arc_points: int = 16) -> None:
    """CSV with columns ``eigen_tuple, step, x, p``; eigen_tuple is a ``+``/``-`` string per qubit."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["eigen_tuple", "step", "x", "p"])
    for s in all_spin_tuples(seq.n_qubits):
        for step, (_, x, p) in enumerate(trajectory_points(seq, s, arc_points)):
            writer.writerow([spins_label(s), step, repr(x), repr(p)])


# -- closure -------------------------------------------------------------------------


def _mod_2pi(value: float) -> float:
    return abs(value - TWO_PI * round(value / TWO_PI))


def closure_report(target: PulseSequence | Program, tol: float = CLOSURE_TOL) -> ClosureReport:
    seqs = target.sequences if isinstance(target, Program) else [target]
    residuals: dict = {}
    wv = ww = wr = 0.0
    for idx, seq in enumerate(seqs):
        for rec in accumulate_all(seq):
            res = (abs(rec.V), abs(rec.W), _mod_2pi(rec.R))
            key = rec.spins if len(seqs) == 1 else (idx, rec.spins)
            residuals[key] = res
            wv, ww, wr = max(wv, res[0]), max(ww, res[1]), max(wr, res[2])
    return ClosureReport(residuals, wv, ww, wr, tol)


# -- unitary assembly -----------------------------------------------------------------


def _blocks(records: Sequence[TrajectoryRecord], dim: int) -> tuple[np.ndarray, float]:
    levels = np.arange(dim)
    blocks = np.empty((len(records), dim, dim), dtype=complex)
    keep = max(1, dim // 4)
    leak = 0.0
    for i, rec in enumerate(records):
        alpha = complex(rec.W, -rec.V) / math.sqrt(2.0)
        disp = kernels.displacement_matrix(alpha, dim)
        phase = np.exp(-1j * (rec.S + rec.drift_phase + 0.5 * rec.V * rec.W))
        blocks[i] = phase * np.exp(-1j * rec.R * levels)[:, None] * disp
        if alpha != 0:
            kept = np.sum(np.abs(disp[:, :keep]) ** 2, axis=0)
            leak = max(leak, float(np.max(1.0 - kept)))
    return blocks, leak


def closed_form_unitary(
    seq: PulseSequence,
    osc: OscillatorSpec,
    records: Sequence[TrajectoryRecord] | None = None,
    leak_tol: float = 1e-8,
) -> np.ndarray:
    """Full-space unitary of ``seq`` from the factorized propagator.

    Matrix elements are the exact infinite-dimensional ones restricted to the
    retained Fock levels. ``records`` may be supplied to assemble from
    precomputed (or deliberately altered) trajectory data.
    """
    if records is None:
        records = accumulate_all(seq)
    dim = osc.cutoff
    blocks, leak = _blocks(records, dim)
    if leak > leak_tol:
        warnings.warn(
            f"cutoff {dim} truncates the final displacement (lost weight {leak:.2e}); increase the cutoff",
            LeakageWarning,
            stacklevel=2,
        )
    nq = 2**seq.n_qubits
    if all(a == "Z" for a in seq.frame.axes):
        full = np.zeros((nq, dim, nq, dim), dtype=complex)
        for i in range(nq):
            full[i, :, i, :] = blocks[i]
    else:
        Q = seq.frame.change_of_basis()
        full = np.einsum("ji,imn,ki->jmkn", Q, blocks, Q.conj(), optimize=True)
    return full.reshape(nq * dim, nq * dim)


def qubit_phases(seq: PulseSequence) -> np.ndarray:
    """Qubit-only unitary ``exp(-i(S + drift))`` of a closed sequence, in the computational basis."""
    records = accumulate_all(seq)
    diag = np.array([np.exp(-1j * r.total_phase) for r in records])
    Q = seq.frame.change_of_basis()
    return (Q * diag) @ Q.conj().T


def program_closed_form(prog: Program, osc: OscillatorSpec) -> np.ndarray:
    """Compose closed-form sequence unitaries and ideal local rotations."""
    dim = 2**prog.n_qubits * osc.cutoff
    U = np.eye(dim, dtype=complex)
    for step in prog.steps:
        if isinstance(step, IdealLocal):
            U = np.kron(step.matrix(prog.n_qubits), np.eye(osc.cutoff)) @ U
        else:
            U = closed_form_unitary(step, osc) @ U
    return U


def program_qubit_unitary(prog: Program) -> np.ndarray:
    """Qubit unitary of a program whose sequences all close (oscillator factored out)."""
    U = np.eye(2**prog.n_qubits, dtype=complex)
    for step in prog.steps:
        if isinstance(step, IdealLocal):
            U = step.matrix(prog.n_qubits) @ U
        else:
            U = qubit_phases(step) @ U
    return U


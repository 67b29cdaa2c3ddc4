"""Brute-force evolution on the truncated composite space.

Every segment Hamiltonian is assembled as a dense matrix from the truncated
x, p and n operators and exponentiated numerically. Nothing here uses the
factorized propagator, which makes this module the independent check on it.

Exponentiation is done in the eigenbasis of the sequence frame: each qubit
operator is rotated into that basis and checked to be diagonal, so the
composite Hamiltonian splits into one ``N_F x N_F`` block per qubit basis
state and each block is exponentiated on its own. If any rotated operator has
a non-negligible off-diagonal part the full matrix is exponentiated instead.
"""

from __future__ import annotations

import functools
import os

import numpy as np

from .hilbert import CompositeState, OscillatorSpec, build_oscillator_ops, matrix_exponential
from .model import IdealLocal, Program, PulseSegment, PulseSequence, SampledSegment, to_matrix

DEFAULT_MAX_DIM = 8192
SAMPLED_TOL = 1e-8
BLOCK_TOL = 1e-12


class DimensionError(RuntimeError):
    """Composite dimension exceeds the configured cap (``OSCBUS_MAX_DIM``)."""


def max_dim() -> int:
    return int(os.environ.get("OSCBUS_MAX_DIM", DEFAULT_MAX_DIM))


def check_dimension(n_qubits: int, osc: OscillatorSpec) -> int:
    dim = 2**n_qubits * osc.cutoff
    limit = max_dim()
    if dim > limit:
        raise DimensionError(
            f"composite dimension {dim} (2^{n_qubits} x {osc.cutoff}) exceeds the cap {limit}; "
            "lower the cutoff, use fewer qubits, or raise OSCBUS_MAX_DIM"
        )
    return dim


@functools.lru_cache(maxsize=64)
def _osc_ops(cutoff: int):
    return build_oscillator_ops(OscillatorSpec(cutoff))


def segment_hamiltonian(seg: PulseSegment, frame, n_qubits: int, osc: OscillatorSpec) -> np.ndarray:
    """Dense ``v·A⊗x + w·B⊗p + r·C⊗n + g·D⊗I`` on the composite space."""
    check_dimension(n_qubits, osc)
    ops = _osc_ops(osc.cutoff)
    eye = np.eye(osc.cutoff)
    H = np.zeros((2**n_qubits * osc.cutoff,) * 2, dtype=complex)
    for coeff, op, bus in ((seg.v, seg.A, ops.x), (seg.w, seg.B, ops.p), (seg.r, seg.C, ops.n), (seg.g, seg.D, eye)):
        if coeff == 0.0 or (op.c0 == 0.0 and not op.coeffs):
            continue
        H += coeff * np.kron(to_matrix(op, frame, n_qubits), bus)
    return H


def _to_frame(M: np.ndarray, Q: np.ndarray, nf: int) -> np.ndarray:
    nq = Q.shape[0]
    T = M.reshape(nq, nf, nq, nf)
    return np.einsum("ij,jakb,kl->ialb", Q.conj().T, T, Q, optimize=True)


def _from_blocks(blocks: np.ndarray, Q: np.ndarray) -> np.ndarray:
    nq, nf = blocks.shape[0], blocks.shape[1]
    full = np.einsum("ji,imn,ki->jmkn", Q, blocks, Q.conj(), optimize=True)
    return full.reshape(nq * nf, nq * nf)


@functools.lru_cache(maxsize=256)
def _segment_blocks_cached(seg: PulseSegment, frame, n_qubits: int, cutoff: int):
    osc = OscillatorSpec(cutoff)
    Q = frame.change_of_basis()
    ops = _osc_ops(cutoff)
    terms = []
    for coeff, op, bus in ((seg.v, seg.A, ops.x), (seg.w, seg.B, ops.p), (seg.r, seg.C, ops.n), (seg.g, seg.D, None)):
        if coeff == 0.0 or (op.c0 == 0.0 and not op.coeffs):
            continue
        qubit = Q.conj().T @ to_matrix(op, frame, n_qubits) @ Q
        off = qubit - np.diag(np.diag(qubit))
        if np.max(np.abs(off), initial=0.0) > BLOCK_TOL * (1.0 + np.max(np.abs(qubit))):
            return None, matrix_exponential(segment_hamiltonian(seg, frame, n_qubits, osc), seg.duration)
        terms.append((coeff * np.diag(qubit), bus))
    nq = 2**n_qubits
    blocks = np.empty((nq, cutoff, cutoff), dtype=complex)
    seen = {}
    for i in range(nq):
        key = tuple(np.round([w[i] for w, _ in terms], 14).tolist())
        if key not in seen:
            H = np.zeros((cutoff, cutoff), dtype=complex)
            for weights, bus in terms:
                H += weights[i] * (np.eye(cutoff) if bus is None else bus)
            seen[key] = matrix_exponential(H, seg.duration)
        blocks[i] = seen[key]
    blocks.setflags(write=False)
    return blocks, None


def segment_blocks(seg: PulseSegment, frame, n_qubits: int, osc: OscillatorSpec):
    """``(blocks, None)`` in the frame eigenbasis, or ``(None, full)`` when H is not block diagonal."""
    check_dimension(n_qubits, osc)
    return _segment_blocks_cached(seg, frame, n_qubits, osc.cutoff)


def segment_unitary(seg: PulseSegment, frame, n_qubits: int, osc: OscillatorSpec) -> np.ndarray:
    """``exp(-i H T)`` for one constant segment, in the computational basis."""
    blocks, full = segment_blocks(seg, frame, n_qubits, osc)
    if blocks is None:
        return full
    return _from_blocks(blocks, frame.change_of_basis())


def _pieces(seq: PulseSequence, osc: OscillatorSpec):
    """Per-segment propagators; sampled segments are refined until converged."""
    for seg in seq.segments:
        if isinstance(seg, SampledSegment):
            yield _sampled_propagator(seg, seq.frame, seq.n_qubits, osc)
        else:
            yield segment_blocks(seg, seq.frame, seq.n_qubits, osc)


def _compose(pieces, Q: np.ndarray, nf: int):
    blocks = None
    full = None
    for b, f in pieces:
        if full is None and b is not None:
            blocks = b if blocks is None else b @ blocks
            continue
        if full is None:
            full = np.eye(Q.shape[0] * nf, dtype=complex) if blocks is None else _from_blocks(blocks, Q)
        full = (f if b is None else _from_blocks(b, Q)) @ full
    return blocks, full


def _sampled_propagator(seg: SampledSegment, frame, n_qubits: int, osc: OscillatorSpec,
                        tol: float = SAMPLED_TOL, max_doublings: int = 12):
    Q = frame.change_of_basis()

    def build(substeps):
        return _compose((segment_blocks(p, frame, n_qubits, osc) for p in seg.subdivide(substeps)), Q, osc.cutoff)

    def dense(pair):
        b, f = pair
        return f if b is None else b

    substeps = 1
    current = build(substeps)
    for _ in range(max_doublings):
        substeps *= 2
        finer = build(substeps)
        change = float(np.max(np.abs(dense(finer) - dense(current)))) if (finer[0] is None) == (current[0] is None) else np.inf
        current = finer
        if change < tol:
            return current
    raise RuntimeError(f"sampled segment did not converge (last change {change:.2e})")


def sampled_unitary(seg: SampledSegment, frame, n_qubits: int, osc: OscillatorSpec) -> np.ndarray:
    """Evolution under a linearly interpolated waveform.

    Sub-steps are doubled until one more halving changes the propagator by
    less than ``SAMPLED_TOL`` (max-abs).
    """
    b, f = _sampled_propagator(seg, frame, n_qubits, osc)
    return f if b is None else _from_blocks(b, frame.change_of_basis())


def sequence_unitary(seq: PulseSequence, osc: OscillatorSpec) -> np.ndarray:
    check_dimension(seq.n_qubits, osc)
    Q = seq.frame.change_of_basis()
    blocks, full = _compose(_pieces(seq, osc), Q, osc.cutoff)
    if full is not None:
        return full
    if blocks is None:
        return np.eye(Q.shape[0] * osc.cutoff, dtype=complex)
    return _from_blocks(blocks, Q)


def local_unitary(step: IdealLocal, n_qubits: int, osc: OscillatorSpec) -> np.ndarray:
    return np.kron(step.matrix(n_qubits), np.eye(osc.cutoff))


def step_unitary(step, n_qubits: int, osc: OscillatorSpec) -> np.ndarray:
    if isinstance(step, IdealLocal):
        return local_unitary(step, n_qubits, osc)
    return sequence_unitary(step, osc)


def program_unitary(prog: Program, osc: OscillatorSpec) -> np.ndarray:
    check_dimension(prog.n_qubits, osc)
    U = np.eye(2**prog.n_qubits * osc.cutoff, dtype=complex)
    for step in prog.steps:
        U = step_unitary(step, prog.n_qubits, osc) @ U
    return U


def apply_program(prog: Program, osc: OscillatorSpec, columns: np.ndarray, on_segment=None) -> np.ndarray:
    """Apply ``prog`` to a stack of state columns ``(dim, k)`` without forming full unitaries.

    ``on_segment(columns)`` is called after every segment and local step with
    the current columns; for pulse segments they are expressed in the frame
    eigenbasis (a qubit-only change of basis).
    """
    check_dimension(prog.n_qubits, osc)
    nq, nf = 2**prog.n_qubits, osc.cutoff
    psi = np.array(columns, dtype=complex, copy=True)
    k = psi.shape[1]
    for step in prog.steps:
        if isinstance(step, IdealLocal):
            local = step.matrix(prog.n_qubits)
            psi = (local @ psi.reshape(nq, nf * k)).reshape(nq * nf, k)
            if on_segment is not None:
                on_segment(psi)
            continue
        Q = step.frame.change_of_basis()
        t = (Q.conj().T @ psi.reshape(nq, nf * k)).reshape(nq, nf, k)
        for b, f in _pieces(step, osc):
            if b is None:
                full_f = _to_frame(f, Q, nf).reshape(nq * nf, nq * nf)
                t = (full_f @ t.reshape(nq * nf, k)).reshape(nq, nf, k)
            else:
                t = np.matmul(b, t)
            if on_segment is not None:
                on_segment(t.reshape(nq * nf, k))
        psi = (Q @ t.reshape(nq, nf * k)).reshape(nq * nf, k)
    return psi


def evolve_program(prog: Program, initial: CompositeState) -> CompositeState:
    """Apply ``prog`` to ``initial``; mixed states evolve as ``U ρ U†``."""
    if initial.n_qubits != prog.n_qubits:
        raise ValueError("state and program widths differ")
    osc = initial.osc
    if initial.is_pure:
        out = apply_program(prog, osc, initial.data[:, None])[:, 0]
    else:
        half = apply_program(prog, osc, initial.data)
        out = apply_program(prog, osc, half.conj().T)
    return CompositeState(_renormalize(out), prog.n_qubits, osc)


def _renormalize(data: np.ndarray) -> np.ndarray:
    # unitary steps only drift by rounding; keep the state container's 1e-12 contract
    if data.ndim == 1:
        return data / np.linalg.norm(data)
    data = 0.5 * (data + data.conj().T)
    return data / np.trace(data).real


def clear_cache() -> None:
    _segment_blocks_cached.cache_clear()

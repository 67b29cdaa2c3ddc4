"""Compile multi-qubit gates into bus pulse programs.

Every construction is a closed loop of conditional displacements. A
displacement along x (``w·B p`` coupling) or along p (``v·A x`` coupling)
performed while the phase space is rotated by ``φ·C`` produces a side whose
direction depends on the eigenvalue of C. The enclosed area of a loop with
sides P (p-coupled) and Q (x-coupled) is ``β_P α_Q cos(R_P - R_Q)``, so
rotating one side relative to the other by ``θ C`` yields gates of the form
``exp(-i μ A cos(θ C))``.

All displacement and rotation segments have unit duration; the coefficient
is the impulse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .hilbert import pauli_matrix
from .model import (
    IDENTITY,
    AxisFrame,
    InternalOperator,
    Program,
    PulseSegment,
    PulseSequence,
    to_matrix,
)

__all__ = [
    "GateSpec",
    "compile_rectangle",
    "compile_parallelogram",
    "compile_chain",
    "compile_toffoli",
    "projector_fourier_terms",
    "compile_cnnot",
    "compile_product_phase",
    "control_projector",
    "cnnot_target",
    "toffoli_target",
    "operator_target",
    "product_phase_target",
]


def _check_frame(frame: AxisFrame, *ops: InternalOperator) -> None:
    for op in ops:
        for q in op.qubits:
            if q >= frame.n_qubits:
                raise ValueError(f"operator references qubit {q} outside the {frame.n_qubits}-qubit frame")


def compile_rectangle(l1: float, l2: float, A: InternalOperator, B: InternalOperator, frame: AxisFrame) -> Program:
    """Four-pulse loop realizing ``exp(-i l1 l2 A B)``.

    Time order: ``w = +l2`` (B p), ``v = +l1`` (A x), ``w = -l2``, ``v = -l1``;
    the oscillator moves by ``l2·B`` along x, then ``-l1·A`` along p, and back.
    """
    _check_frame(frame, A, B)
    segs = (
        PulseSegment(1.0, w=l2, B=B),
        PulseSegment(1.0, v=l1, A=A),
        PulseSegment(1.0, w=-l2, B=B),
        PulseSegment(1.0, v=-l1, A=A),
    )
    return Program(frame.n_qubits, (PulseSequence(frame, segs),))


SIDE_IMBALANCE = 8.0


@dataclass(frozen=True)
class _Side:
    quadrature: str  # "p": w·op·p coupling (moves along x); "x": v·op·x coupling
    op: InternalOperator
    strength: float
    angle: float


def _chain_sides(terms, A, B) -> list[_Side]:
    """Sides s_0..s_m where term k encloses the parallelogram (s_{k-1}, s_k)."""
    lam = math.sqrt(abs(terms[0][0]))
    sides = [_Side("p", A, lam, 0.0)]
    for k, (mu, theta) in enumerate(terms, start=1):
        prev = sides[-1]
        if k % 2:
            sides.append(_Side("x", B, mu / prev.strength, prev.angle - theta))
        else:
            sides.append(_Side("p", A, -mu / prev.strength, prev.angle + theta))
    return sides


def _balanced_runs(terms) -> list[list[tuple[float, float]]]:
    """Split terms so that every side strength stays within ``SIDE_IMBALANCE`` of ``sqrt|μ|``.

    A chained side has strength ``μ_k / previous``; a term much smaller or
    larger than its neighbours would otherwise make later sides tiny or huge,
    costing precision and oscillator range. Each run becomes its own loop.
    """
    runs: list[list[tuple[float, float]]] = []
    prev = None
    for mu, theta in terms:
        if prev is not None:
            strength = abs(mu) / prev
            ratio = strength / math.sqrt(abs(mu))
            if 1.0 / SIDE_IMBALANCE <= ratio <= SIDE_IMBALANCE:
                runs[-1].append((mu, theta))
                prev = strength
                continue
        runs.append([(mu, theta)])
        prev = abs(mu) / math.sqrt(abs(mu))
    return runs


def _traverse(sides: Sequence[_Side]) -> list[tuple[_Side, int]]:
    """Loop outline with the back-and-forth shared sides removed."""
    path: list[tuple[_Side, int]] = []
    for k in range(1, len(sides)):
        for move in ((sides[k - 1], 1), (sides[k], 1), (sides[k - 1], -1), (sides[k], -1)):
            if path and path[-1][0] is move[0] and path[-1][1] == -move[1]:
                path.pop()
            else:
                path.append(move)
    return path


def _emit(path, C: InternalOperator) -> list[PulseSegment]:
    segs = []
    angle = 0.0
    for side, sign in path:
        if side.angle != angle:
            segs.append(PulseSegment(1.0, r=side.angle - angle, C=C))
            angle = side.angle
        if side.quadrature == "p":
            segs.append(PulseSegment(1.0, w=sign * side.strength, B=side.op))
        else:
            segs.append(PulseSegment(1.0, v=sign * side.strength, A=side.op))
    if angle != 0.0:
        segs.append(PulseSegment(1.0, r=-angle, C=C))
    return segs


def _unmerged_emit(terms, A, C, B) -> list[PulseSegment]:
    segs = []
    for term in terms:
        segs.extend(_emit(_traverse(_chain_sides([term], A, B)), C))
    return segs


def compile_chain(
    terms: Sequence[tuple[float, float]],
    A: InternalOperator,
    C: InternalOperator,
    frame: AxisFrame,
    B: InternalOperator = IDENTITY,
    merge: bool = True,
) -> Program:
    """Product ``Π_k exp(-i μ_k A B cos(θ_k C))`` as one chained loop.

    Consecutive parallelograms share a side so the return leg of one cancels
    the first leg of the next; a term whose size differs sharply from its
    neighbours starts a fresh loop. ``merge=False`` emits the parallelograms
    back to back instead (for comparison).
    """
    terms = [(float(mu), float(theta)) for mu, theta in terms]
    if not terms:
        raise ValueError("chain needs at least one term")
    _check_frame(frame, A, B, C)
    live = [t for t in terms if t[0] != 0.0]
    if not live:
        return Program(frame.n_qubits, ())
    if merge:
        segs = []
        for run in _balanced_runs(live):
            segs.extend(_emit(_traverse(_chain_sides(run, A, B)), C))
    else:
        segs = _unmerged_emit(live, A, C, B)
    return Program(frame.n_qubits, (PulseSequence(frame, tuple(segs)),))


def compile_parallelogram(
    mu: float,
    theta: float,
    A: InternalOperator,
    C: InternalOperator,
    frame: AxisFrame,
    B: InternalOperator = IDENTITY,
) -> Program:
    """Single rotated loop realizing ``exp(-i μ A B cos(θ C))``."""
    return compile_chain([(mu, theta)], A, C, frame, B=B)


def compile_toffoli(K: int = 1, omega: float = 1.0) -> Program:
    """One constant pulse on qubits (control, control, target) = (0, 1, 2).

    ``H = Ω[(σ_z0 + σ_z1 + 1)/(4√K) x - σ_x2 (n + 1/(32K))]`` for ``τ = 2πK/Ω``.
    The gate is ``exp(-iπ(σ_z0+1)(σ_z1+1)σ_x2/8)``: ``-iσ_x`` on the target
    when both controls are ``|1>``, identity otherwise.
    """
    if isinstance(K, bool) or int(K) != K or K < 1:
        raise ValueError(f"K must be a positive integer, got {K!r}")
    if not omega > 0:
        raise ValueError("omega must be positive")
    K = int(K)
    scale = 1.0 / (4.0 * math.sqrt(K))
    frame = AxisFrame(("Z", "Z", "X"))
    A = InternalOperator(scale, ((0, scale), (1, scale)))
    target = InternalOperator.pauli(2)
    seg = PulseSegment(
        2.0 * math.pi * K / omega,
        v=omega,
        r=-omega,
        g=-omega / (32.0 * K),
        A=A,
        C=target,
        D=target,
    )
    return Program(3, (PulseSequence(frame, (seg,)),))


def projector_fourier_terms(n_c: int) -> list[tuple[float, float]]:
    """``(weight, angle)`` pairs with ``Π(σ_z+1)/2 = Σ weight·cos(angle·Σ(σ_z-1)/2)``."""
    if n_c < 1:
        raise ValueError("need at least one control")
    m = n_c + 1
    return [(1.0 / m, 2.0 * math.pi * k / m) for k in range(1, m + 1)]


def compile_cnnot(n_c: int, n_qubits: int | None = None) -> Program:
    """``exp(-i(π/2) P σ_x)`` with controls ``0..n_c-1`` and target ``n_c``."""
    if isinstance(n_c, bool) or int(n_c) != n_c or n_c < 1:
        raise ValueError(f"need n_c >= 1 controls, got {n_c!r}")
    n = n_c + 1 if n_qubits is None else n_qubits
    frame = AxisFrame(tuple("Z" for _ in range(n_c)) + ("X",) + tuple("Z" for _ in range(n - n_c - 1)))
    A = InternalOperator.pauli(n_c)
    C = InternalOperator.excitation_deficit(range(n_c))
    terms = [(0.5 * math.pi * w, theta) for w, theta in projector_fourier_terms(n_c)]
    return compile_chain(terms, A, C, frame)


def compile_product_phase(mu: float, qubits: Iterable[int], n_qubits: int | None = None) -> Program:
    """``exp(-i μ Π_l σ_zl)`` from one parallelogram with ``θ = π``."""
    qubits = sorted(set(int(q) for q in qubits))
    if not qubits:
        raise ValueError("need at least one qubit")
    n = max(qubits) + 1 if n_qubits is None else n_qubits
    frame = AxisFrame.uniform("Z", n)
    C = InternalOperator.excitation_deficit(qubits)
    return compile_parallelogram(mu, math.pi, IDENTITY, C, frame)


# -- ideal targets -------------------------------------------------------------------


def _expm_herm(G: np.ndarray, mu: float) -> np.ndarray:
    return scipy.linalg.expm(-1j * mu * G)


def control_projector(controls: Sequence[int], n_qubits: int) -> np.ndarray:
    P = np.eye(2**n_qubits, dtype=complex)
    for q in controls:
        P = P @ (pauli_matrix("Z", q, n_qubits) + np.eye(2**n_qubits)) / 2
    return P


def cnnot_target(n_c: int, n_qubits: int | None = None) -> np.ndarray:
    n = n_c + 1 if n_qubits is None else n_qubits
    G = control_projector(range(n_c), n) @ pauli_matrix("X", n_c, n)
    return _expm_herm(G, math.pi / 2)


def toffoli_target() -> np.ndarray:
    I = np.eye(8)
    G = (pauli_matrix("Z", 0, 3) + I) @ (pauli_matrix("Z", 1, 3) + I) @ pauli_matrix("X", 2, 3)
    return _expm_herm(G, math.pi / 8)


def operator_target(mu: float, A: InternalOperator, frame: AxisFrame, B: InternalOperator = IDENTITY,
                    C: InternalOperator | None = None, theta: float = 0.0) -> np.ndarray:
    """``exp(-i μ A B cos(θ C))`` built by direct matrix functions."""
    Am = to_matrix(A, frame)
    Bm = to_matrix(B, frame)
    if C is None:
        cos_c = np.eye(Am.shape[0])
    else:
        Cm = to_matrix(C, frame)
        cos_c = scipy.linalg.cosm(theta * Cm)
    return _expm_herm(Am @ Bm @ cos_c, mu)


def product_phase_target(mu: float, qubits: Iterable[int], n_qubits: int) -> np.ndarray:
    Z = np.eye(2**n_qubits, dtype=complex)
    for q in qubits:
        Z = Z @ pauli_matrix("Z", q, n_qubits)
    return _expm_herm(Z, mu)


# -- gate specs ---------------------------------------------------------------------


@dataclass(frozen=True)
class GateSpec:
    """Named gate request: ``kind`` plus its parameters.

    Kinds: ``rectangle`` (l1, l2; controlled-X family on two qubits),
    ``parallelogram`` (mu, theta; A=σ_x on the last qubit, C=Σ(σ_z-1)/2 on the
    others), ``toffoli`` (K, omega), ``cnnot`` (controls), ``product-phase``
    (mu, qubits).
    """

    kind: str
    params: dict = field(default_factory=dict)

    def compile(self) -> Program:
        p = self.params
        if self.kind == "rectangle":
            frame, A, B = _rectangle_ops()
            return compile_rectangle(p.get("l1", math.sqrt(math.pi / 2)), p.get("l2", math.sqrt(math.pi / 2)), A, B, frame)
        if self.kind == "parallelogram":
            frame, A, C = _parallelogram_ops(p.get("controls", 2))
            return compile_parallelogram(p.get("mu", 0.7), p.get("theta", 0.9), A, C, frame)
        if self.kind == "toffoli":
            return compile_toffoli(p.get("K", 1), p.get("omega", 1.0))
        if self.kind == "cnnot":
            return compile_cnnot(p.get("controls", 2))
        if self.kind == "product-phase":
            q = p.get("qubits", 2)
            return compile_product_phase(p.get("mu", 0.3), range(q))
        raise ValueError(f"unknown gate kind {self.kind!r}")

    def ideal(self) -> np.ndarray:
        p = self.params
        if self.kind == "rectangle":
            frame, A, B = _rectangle_ops()
            l1, l2 = p.get("l1", math.sqrt(math.pi / 2)), p.get("l2", math.sqrt(math.pi / 2))
            return operator_target(l1 * l2, A, frame, B)
        if self.kind == "parallelogram":
            frame, A, C = _parallelogram_ops(p.get("controls", 2))
            return operator_target(p.get("mu", 0.7), A, frame, C=C, theta=p.get("theta", 0.9))
        if self.kind == "toffoli":
            return toffoli_target()
        if self.kind == "cnnot":
            return cnnot_target(p.get("controls", 2))
        if self.kind == "product-phase":
            q = p.get("qubits", 2)
            return product_phase_target(p.get("mu", 0.3), range(q), q)
        raise ValueError(f"unknown gate kind {self.kind!r}")


def _rectangle_ops():
    frame = AxisFrame(("Z", "X"))
    A = InternalOperator(0.5, ((0, 0.5),))
    B = InternalOperator.pauli(1)
    return frame, A, B


def _parallelogram_ops(controls: int):
    frame = AxisFrame(tuple("Z" for _ in range(controls)) + ("X",))
    A = InternalOperator.pauli(controls)
    C = InternalOperator.excitation_deficit(range(controls))
    return frame, A, C

"""Randomized self-checks: closed form vs integrator, time derivative, identities.

Every check returns ``{"max_error", "tol", "cases", "passed"}``. A fault can
be injected into the closed-form path (``fault="s-sign"`` flips the sign of
the accumulated geometric phase) to confirm the suite notices.
"""

from __future__ import annotations

import dataclasses
import math
import warnings

import numpy as np

from . import integrator
from .analysis import OscInput, initial_cutoff
from .compiler import (
    GateSpec,
    compile_cnnot,
    compile_parallelogram,
    compile_product_phase,
    compile_rectangle,
    compile_toffoli,
    operator_target,
    projector_fourier_terms,
)
from .grover import OracleSpec, compile_inversion, compile_oracle, m_matrix_identities
from .hilbert import OscillatorSpec, all_spin_tuples
from .model import AXES, AxisFrame, InternalOperator, Program, PulseSegment, PulseSequence, truncate_sequence
from .propagator import LeakageWarning, accumulate_all, closed_form_unitary, enclosed_area

FAULTS = ("s-sign",)
INPUT_LEVELS = 4
DUAL_PATH_TOL = 1e-6
DERIVATIVE_TOL = 1e-6
AREA_TOL = 1e-9


def _result(errors, tol) -> dict:
    worst = float(max(errors, default=0.0))
    return {"max_error": worst, "tol": tol, "cases": len(errors), "passed": bool(worst <= tol)}


def random_operator(rng: np.random.Generator, n_qubits: int) -> InternalOperator:
    """Random ``c0 + Σ c_l σ_l`` with largest eigenvalue magnitude at most 1."""
    c0 = rng.uniform(-1, 1)
    coeffs = rng.uniform(-1, 1, n_qubits)
    scale = max(1.0, abs(c0) + float(np.sum(np.abs(coeffs))))
    return InternalOperator(c0 / scale, tuple((q, float(c) / scale) for q, c in enumerate(coeffs)))


def random_sequence(rng: np.random.Generator, n_qubits: int | None = None) -> PulseSequence:
    """Random valid sequence: 2-3 qubits, 1-6 segments, coefficients in [-2, 2]."""
    n = int(rng.integers(2, 4)) if n_qubits is None else n_qubits
    frame = AxisFrame(tuple(rng.choice(AXES) for _ in range(n)))
    segments = []
    for _ in range(int(rng.integers(1, 7))):
        v, w, r, g = rng.uniform(-2, 2, 4)
        ops = [random_operator(rng, n) for _ in range(4)]
        segments.append(PulseSegment(float(rng.uniform(0.1, 0.5)), float(v), float(w), float(r), float(g), *ops))
    return PulseSequence(frame, tuple(segments))


def _records(seq: PulseSequence, fault: str | None):
    records = accumulate_all(seq)
    if fault == "s-sign":
        records = [dataclasses.replace(r, S=-r.S) for r in records]
    elif fault is not None:
        raise ValueError(f"unknown fault {fault!r}; choose from {FAULTS}")
    return records


def _closed_form(seq: PulseSequence, osc: OscillatorSpec, fault: str | None) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LeakageWarning)
        return closed_form_unitary(seq, osc, records=_records(seq, fault))


def _low_columns(n_qubits: int, cutoff: int, levels: int = INPUT_LEVELS) -> list[int]:
    return [j * cutoff + k for j in range(2**n_qubits) for k in range(levels)]


def dual_path_cutoff(seq: PulseSequence) -> int:
    return initial_cutoff(Program(seq.n_qubits, (seq,)), [OscInput("fock", INPUT_LEVELS - 1)])


def dual_path_deviation(seq: PulseSequence, cutoff: int | None = None, fault: str | None = None) -> float:
    """Max deviation between closed form and integrator on inputs below Fock level ``INPUT_LEVELS``."""
    osc = OscillatorSpec(dual_path_cutoff(seq) if cutoff is None else cutoff)
    cols = _low_columns(seq.n_qubits, osc.cutoff)
    closed = _closed_form(seq, osc, fault)[:, cols]
    start = np.zeros((2**seq.n_qubits * osc.cutoff, len(cols)), dtype=complex)
    start[cols, np.arange(len(cols))] = 1.0
    brute = integrator.apply_program(Program(seq.n_qubits, (seq,)), osc, start)
    return float(np.max(np.abs(closed - brute)))


def derivative_residual(seq: PulseSequence, t: float, h: float = 1e-5, fault: str | None = None) -> float:
    """``|dU/dt + i H(t) U(t)|`` at time ``t`` (central difference) on low input columns."""
    osc = OscillatorSpec(dual_path_cutoff(seq))
    cols = _low_columns(seq.n_qubits, osc.cutoff)
    elapsed = 0.0
    for seg in seq.segments:
        if t < elapsed + seg.duration:
            break
        elapsed += seg.duration
    U = _closed_form(truncate_sequence(seq, t), osc, fault)[:, cols]
    plus = _closed_form(truncate_sequence(seq, t + h), osc, fault)[:, cols]
    minus = _closed_form(truncate_sequence(seq, t - h), osc, fault)[:, cols]
    H = integrator.segment_hamiltonian(seg, seq.frame, seq.n_qubits, osc)
    return float(np.max(np.abs((plus - minus) / (2 * h) + 1j * H @ U)))


def check_dual_path(rng: np.random.Generator, cases: int, fault: str | None = None) -> dict:
    return _result([dual_path_deviation(random_sequence(rng), fault=fault) for _ in range(cases)], DUAL_PATH_TOL)


def check_derivative(rng: np.random.Generator, cases: int, fault: str | None = None) -> dict:
    errors = []
    for _ in range(cases):
        seq = random_sequence(rng)
        j = int(rng.integers(len(seq.segments)))
        start = sum(s.duration for s in seq.segments[:j])
        t = start + float(rng.uniform(0.2, 0.8)) * seq.segments[j].duration
        errors.append(derivative_residual(seq, t, fault=fault))
    return _result(errors, DERIVATIVE_TOL)


def check_rectangle(fault: str | None = None) -> dict:
    """Qubit action of the compiled rectangle vs ``exp(-i l1 l2 A B)`` for a few side lengths."""
    frame = AxisFrame(("Z", "X"))
    A = InternalOperator(0.5, ((0, 0.5),))
    B = InternalOperator.pauli(1)
    Q = frame.change_of_basis()
    errors = []
    for l1, l2 in ((math.sqrt(math.pi / 2),) * 2, (1.0, 1.0), (0.4, 1.7), (2.0, -0.3)):
        (seq,) = compile_rectangle(l1, l2, A, B, frame).sequences
        phases = np.array([np.exp(-1j * r.total_phase) for r in _records(seq, fault)])
        got = (Q * phases) @ Q.conj().T
        errors.append(float(np.max(np.abs(got - operator_target(l1 * l2, A, frame, B)))))
    return _result(errors, 1e-10)


def fourier_identity_error(n_c: int) -> float:
    """Brute-force check of ``Π(σ_z+1)/2 = Σ_k w_k cos(θ_k Σ(σ_z-1)/2)`` on every basis state."""
    terms = projector_fourier_terms(n_c)
    worst = 0.0
    for s in all_spin_tuples(n_c):
        deficit = sum((x - 1) / 2 for x in s)
        lhs = 1.0 if all(x == 1 for x in s) else 0.0
        rhs = sum(wt * math.cos(theta * deficit) for wt, theta in terms)
        worst = max(worst, abs(lhs - rhs))
    return worst


def check_fourier(max_controls: int = 5) -> dict:
    return _result([fourier_identity_error(n) for n in range(1, max_controls + 1)], 1e-12)


def check_m_identities(max_qubits: int = 4) -> dict:
    errors = [max(m_matrix_identities(n)["errors"].values()) for n in range(1, max_qubits + 1)]
    return _result(errors, 1e-10)


def compiled_programs(rng: np.random.Generator | None = None, extra: int = 4) -> list[tuple[str, Program]]:
    """The library's compiled gates, plus random rectangles and parallelograms when ``rng`` is given."""
    progs = [(kind, GateSpec(kind).compile()) for kind in ("rectangle", "parallelogram", "toffoli", "cnnot", "product-phase")]
    progs += [(f"toffoli-K{k}", compile_toffoli(k)) for k in (2, 3)]
    progs += [(f"cnnot-{n}", compile_cnnot(n)) for n in (1, 3, 4)]
    progs.append(("product-phase-4", compile_product_phase(0.3, range(4))))
    progs.append(("grover-oracle-3", compile_oracle(OracleSpec(3, 5))))
    progs.append(("grover-inversion-3", compile_inversion(3)))
    if rng is not None:
        for i in range(extra):
            frame = AxisFrame(("Z", "X"))
            A = InternalOperator(0.5, ((0, 0.5),))
            l1, l2 = rng.uniform(-2, 2, 2)
            progs.append((f"random-rectangle-{i}", compile_rectangle(float(l1), float(l2), A, InternalOperator.pauli(1), frame)))
            n = int(rng.integers(2, 4))
            frame = AxisFrame(("Z",) * (n - 1) + ("X",))
            mu, theta = rng.uniform(-2, 2), rng.uniform(-math.pi, math.pi)
            prog = compile_parallelogram(float(mu), float(theta), InternalOperator.pauli(n - 1),
                                         InternalOperator.excitation_deficit(range(n - 1)), frame)
            progs.append((f"random-parallelogram-{i}", prog))
    return progs


def area_law_errors(prog: Program) -> list[float]:
    return [abs(rec.S - enclosed_area(rec)) for seq in prog.sequences for rec in accumulate_all(seq)]


def check_area_law(rng: np.random.Generator | None = None) -> dict:
    errors = []
    for _, prog in compiled_programs(rng):
        errors.extend(area_law_errors(prog))
    return _result(errors, AREA_TOL)


def run_verification(seed: int = 0, cases: int = 50, fault: str | None = None) -> dict:
    """Run every check; deterministic for a given ``seed``."""
    if isinstance(cases, bool) or int(cases) != cases or cases < 1:
        raise ValueError(f"cases must be a positive integer, got {cases!r}")
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; choose from {FAULTS}")
    rng = np.random.default_rng(seed)
    checks = {
        "dual_path": check_dual_path(rng, int(cases), fault),
        "derivative": check_derivative(rng, min(int(cases), 10), fault),
        "rectangle_phase": check_rectangle(fault),
        "fourier_identity": check_fourier(),
        "m_matrix_identities": check_m_identities(),
        "area_law": check_area_law(rng),
    }
    return {
        "schema_version": 1,
        "seed": seed,
        "cases": int(cases),
        "fault": fault,
        "checks": checks,
        "passed": all(c["passed"] for c in checks.values()),
    }

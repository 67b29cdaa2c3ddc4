"""Grover search built from bus-mediated projector phases.

The oracle is ``exp(iπ Π_l (σ_zl + 1)/2)`` sandwiched between bit flips on the
qubits whose target bit is 0, and the inversion about the mean is the same
projector phase with every qubit operator taken along X. Both phases come
from one chained loop whose displacements act identically on all qubits.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import IO

import numpy as np
import scipy.linalg

from . import integrator
from .analysis import GateReport, OscInput, gate_report
from .compiler import compile_chain, projector_fourier_terms
from .hilbert import OscillatorSpec, pauli_matrix
from .model import IDENTITY, AxisFrame, IdealLocal, InternalOperator, Program, bit_flip

GROVER_SCHEMA_VERSION = 1
MAX_BUS_QUBITS = 4
MAX_IDENTITY_QUBITS = 5


@dataclass(frozen=True)
class OracleSpec:
    """Marked item ``x0`` on ``n`` qubits; ``bits[l]`` is the value of qubit l (qubit 0 most significant)."""

    n: int
    x0: int

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError(f"need at least one qubit, got {self.n!r}")
        if isinstance(self.x0, bool) or int(self.x0) != self.x0 or not 0 <= self.x0 < 2**self.n:
            raise ValueError(f"target {self.x0!r} outside [0, {2**self.n - 1}]")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "x0", int(self.x0))

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple((self.x0 >> (self.n - 1 - l)) & 1 for l in range(self.n))


def _all_ones_phase(n: int, axis: str) -> Program:
    """``exp(iπ Π_l (σ_l + 1)/2)`` with every σ_l along ``axis``."""
    frame = AxisFrame.uniform(axis, n)
    C = InternalOperator.excitation_deficit(range(n))
    terms = [(-math.pi * w, theta) for w, theta in projector_fourier_terms(n)]
    return compile_chain(terms, IDENTITY, C, frame, B=IDENTITY)


def compile_oracle(spec: OracleSpec) -> Program:
    """Sign flip of the ``|x0>`` amplitude."""
    flips = Program(spec.n, tuple(bit_flip(q) for q, b in enumerate(spec.bits) if b == 0))
    return flips + _all_ones_phase(spec.n, "Z") + flips


def compile_inversion(n: int, explicit_frame_change: bool = False) -> Program:
    """Inversion about the mean, ``(2/N)M - I`` up to a global sign.

    By default the qubit operators are defined along X directly. With
    ``explicit_frame_change`` the Z-frame chain is wrapped in ideal Y
    rotations that carry σ_z onto σ_x.
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"need at least one qubit, got {n!r}")
    if not explicit_frame_change:
        return _all_ones_phase(n, "X")
    into = Program(n, tuple(IdealLocal("Y", -math.pi / 2, q) for q in range(n)))
    back = Program(n, tuple(IdealLocal("Y", math.pi / 2, q) for q in range(n)))
    return into + _all_ones_phase(n, "Z") + back


def prepare_uniform(n: int) -> Program:
    """Ideal local rotations taking ``|0...0>`` to the uniform superposition."""
    return Program(n, tuple(IdealLocal("Y", -math.pi / 2, q) for q in range(n)))


def oracle_matrix(spec: OracleSpec) -> np.ndarray:
    U = np.eye(2**spec.n, dtype=complex)
    U[spec.x0, spec.x0] = -1.0
    return U


def inversion_matrix(n: int) -> np.ndarray:
    N = 2**n
    return 2.0 / N * np.ones((N, N)) - np.eye(N)


def auto_iterations(n: int) -> int:
    return int(math.floor(math.pi * math.sqrt(2**n) / 4))


def m_matrix_identities(n: int, tol: float = 1e-10) -> dict:
    """Check the algebra of the all-ones matrix ``M`` used by the inversion step.

    Verifies ``(sM)^k = s^k N^(k-1) M`` for k = 1..4, the closed form
    ``exp(sM) = I + (e^(sN) - 1) M / N`` at ``sN = iπ`` (which reduces to
    ``I - (2/N)M``) and the tensor form ``M = Π_l (σ_xl + 1)``.
    """
    if isinstance(n, bool) or int(n) != n or not 1 <= n <= MAX_IDENTITY_QUBITS:
        raise ValueError(f"n must be in 1..{MAX_IDENTITY_QUBITS}, got {n!r}")
    N = 2**n
    M = np.ones((N, N), dtype=complex)
    s = 1j * math.pi / N
    errors = {}
    for k in range(1, 5):
        errors[f"power_{k}"] = float(np.max(np.abs(np.linalg.matrix_power(s * M, k) - s**k * N ** (k - 1) * M)))
    exp_sm = scipy.linalg.expm(s * M)
    errors["exponential"] = float(np.max(np.abs(exp_sm - (np.eye(N) + (np.exp(s * N) - 1) * M / N))))
    errors["exponential_reduced"] = float(np.max(np.abs(exp_sm - (np.eye(N) - 2.0 / N * M))))
    tensor = np.eye(N, dtype=complex)
    for q in range(n):
        tensor = tensor @ (pauli_matrix("X", q, n) + np.eye(N))
    errors["tensor_form"] = float(np.max(np.abs(tensor - M)))
    eigvals = np.sort(np.linalg.eigvalsh(M.real))
    errors["spectrum"] = float(max(abs(eigvals[-1] - N), np.max(np.abs(eigvals[:-1]), initial=0.0)))
    return {
        "n": n,
        "tol": tol,
        "errors": errors,
        "passed": all(v <= tol for v in errors.values()),
    }


@dataclass
class GroverResult:
    n: int
    x0: int
    iterations: int
    mode: str
    osc_input: str
    probabilities: list = field(default_factory=list)  # after 0, 1, ..., iterations steps
    report: GateReport | None = None
    cutoff: int | None = None

    @property
    def success_probability(self) -> float:
        return self.probabilities[-1]

    def to_dict(self) -> dict:
        return {
            "schema_version": GROVER_SCHEMA_VERSION,
            "n_qubits": self.n,
            "target": self.x0,
            "iterations": self.iterations,
            "mode": self.mode,
            "osc_input": self.osc_input,
            "cutoff": self.cutoff,
            "success_probability": self.success_probability,
            "per_iteration": self.probabilities,
            "step_report": None if self.report is None else self.report.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def write_csv(self, fh: IO[str]) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "success_probability"])
        for i, p in enumerate(self.probabilities):
            w.writerow([i, repr(float(p))])


def _ideal_probabilities(spec: OracleSpec, iterations: int) -> list[float]:
    N = 2**spec.n
    step = inversion_matrix(spec.n) @ oracle_matrix(spec)
    psi = np.full(N, 1 / math.sqrt(N), dtype=complex)
    probs = [float(abs(psi[spec.x0]) ** 2)]
    for _ in range(iterations):
        psi = step @ psi
        probs.append(float(abs(psi[spec.x0]) ** 2))
    return probs


def _bus_probabilities(spec: OracleSpec, iterations: int, osc_input: OscInput, cutoff: int,
                       step: Program) -> list[float]:
    n, nq = spec.n, 2**spec.n
    osc = OscillatorSpec(cutoff)
    w = osc_input.weights()
    levels = [k for k, wk in enumerate(w) if wk > 0]
    start = np.zeros((nq * cutoff, len(levels)), dtype=complex)
    start[levels, np.arange(len(levels))] = 1.0
    psi = integrator.apply_program(prepare_uniform(n), osc, start)

    def success(columns):
        pops = np.sum(np.abs(columns.reshape(nq, cutoff, -1)[spec.x0]) ** 2, axis=0)
        return float(np.dot(w[levels], pops))

    probs = [success(psi)]
    for _ in range(iterations):
        psi = integrator.apply_program(step, osc, psi)
        probs.append(success(psi))
    return probs


def run_grover(
    n: int,
    x0: int,
    iterations: int | str = "auto",
    osc_input: str | OscInput = "fock:0",
    mode: str = "bus",
    cutoff: int | str = "auto",
    explicit_frame_change: bool = False,
) -> GroverResult:
    """Run Grover search for ``x0`` and record the success probability after every iteration.

    ``mode="bus"`` evolves qubits and oscillator through the integrator using
    the compiled programs, with the cutoff taken from a converged gate report
    of one iteration. ``mode="ideal"`` uses the textbook matrices.
    """
    spec = OracleSpec(n, x0)
    if iterations == "auto":
        iterations = auto_iterations(spec.n)
    if isinstance(iterations, bool) or int(iterations) != iterations or iterations < 0:
        raise ValueError(f"iterations must be a non-negative integer or 'auto', got {iterations!r}")
    iterations = int(iterations)
    osc_input = osc_input if isinstance(osc_input, OscInput) else OscInput.parse(osc_input)
    if mode == "ideal":
        return GroverResult(spec.n, spec.x0, iterations, mode, osc_input.label, _ideal_probabilities(spec, iterations))
    if mode != "bus":
        raise ValueError(f"mode must be 'bus' or 'ideal', got {mode!r}")
    if spec.n > MAX_BUS_QUBITS:
        raise integrator.DimensionError(
            f"bus simulation is limited to {MAX_BUS_QUBITS} qubits (got {spec.n}); use mode='ideal'"
        )
    step = compile_oracle(spec) + compile_inversion(spec.n, explicit_frame_change)
    ideal_step = inversion_matrix(spec.n) @ oracle_matrix(spec)
    report = gate_report(step, ideal_step, [osc_input], cutoff=cutoff)
    probs = _bus_probabilities(spec, iterations, osc_input, report.cutoff, step)
    return GroverResult(spec.n, spec.x0, iterations, mode, osc_input.label, probs, report, report.cutoff)


def _bus_pulses_uniform(prog: Program) -> bool:
    for seq in prog.sequences:
        if len(set(seq.frame.axes)) > 1:
            return False
        for seg in seq.segments:
            for op in seg.operators:
                if op.coeffs and (len({c for _, c in op.coeffs}) > 1 or len(op.coeffs) != prog.n_qubits):
                    return False
    return True


def demo_all_ones(n: int, osc_input: str | OscInput = "fock:0", iterations: int | str = "auto") -> dict:
    """Search for ``11...1``: every bus pulse treats all qubits alike, so no addressing is needed.

    Reports the distribution of the number of excited qubits at the end.
    """
    spec = OracleSpec(n, 2**n - 1)
    if spec.n > MAX_BUS_QUBITS:
        raise integrator.DimensionError(f"demo is limited to {MAX_BUS_QUBITS} qubits")
    step = compile_oracle(spec) + compile_inversion(spec.n)
    if any(isinstance(s, IdealLocal) for s in step.steps) or not _bus_pulses_uniform(step):
        raise AssertionError("all-ones search unexpectedly needs individual addressing")
    if iterations == "auto":
        iterations = auto_iterations(spec.n)
    osc_input = osc_input if isinstance(osc_input, OscInput) else OscInput.parse(osc_input)
    report = gate_report(step, inversion_matrix(spec.n) @ oracle_matrix(spec), [osc_input])
    nq, cutoff = 2**spec.n, report.cutoff
    osc = OscillatorSpec(cutoff)
    w = osc_input.weights()
    levels = [k for k, wk in enumerate(w) if wk > 0]
    psi = np.zeros((nq * cutoff, len(levels)), dtype=complex)
    psi[levels, np.arange(len(levels))] = 1.0
    psi = integrator.apply_program(prepare_uniform(spec.n), osc, psi)
    for _ in range(int(iterations)):
        psi = integrator.apply_program(step, osc, psi)
    basis_probs = np.sum(np.abs(psi.reshape(nq, cutoff, -1)) ** 2, axis=1) @ w[levels]
    counts = np.zeros(spec.n + 1)
    for j, p in enumerate(basis_probs):
        counts[bin(j).count("1")] += p
    return {
        "schema_version": GROVER_SCHEMA_VERSION,
        "n_qubits": spec.n,
        "iterations": int(iterations),
        "osc_input": osc_input.label,
        "cutoff": cutoff,
        "excited_count_distribution": [float(c) for c in counts],
        "all_excited_probability": float(counts[-1]),
        "uniform_bus_pulses": True,
    }

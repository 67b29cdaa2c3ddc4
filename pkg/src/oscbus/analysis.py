"""Gate quality: effective qubit unitaries, fidelities, leakage and reports."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import integrator
from .hilbert import OscillatorSpec, thermal_weights
from .model import IdealLocal, Program
from .propagator import accumulate_all, closure_report

REPORT_SCHEMA_VERSION = 1
LEAK_MARGIN = 0.25
DEFAULT_START_CUTOFF = 16


@dataclass(frozen=True)
class OscInput:
    """Oscillator input state: a Fock level or a thermal mixture."""

    kind: str  # "fock" | "thermal"
    value: float

    @classmethod
    def parse(cls, text: str) -> "OscInput":
        kind, _, raw = text.partition(":")
        kind = kind.strip().lower()
        if kind == "fock":
            k = int(raw)
            if k < 0:
                raise ValueError("Fock level must be non-negative")
            return cls("fock", k)
        if kind == "thermal":
            nbar = float(raw)
            if not nbar >= 0:
                raise ValueError("thermal occupation must be non-negative")
            return cls("thermal", nbar)
        raise ValueError(f"oscillator input must be fock:k or thermal:nbar, got {text!r}")

    @property
    def label(self) -> str:
        if self.kind == "fock":
            return f"fock:{int(self.value)}"
        return f"thermal:{self.value:g}"

    def weights(self) -> np.ndarray:
        """Populations of Fock levels 0, 1, ... (a one-hot vector for Fock inputs)."""
        if self.kind == "fock":
            w = np.zeros(int(self.value) + 1)
            w[-1] = 1.0
            return w
        return thermal_weights(self.value)

    @property
    def max_level(self) -> int:
        return len(self.weights()) - 1


def as_inputs(items: Iterable) -> list[OscInput]:
    return [x if isinstance(x, OscInput) else OscInput.parse(x) for x in items]


def fock_vector(k: int, cutoff: int) -> np.ndarray:
    v = np.zeros(cutoff, dtype=complex)
    v[k] = 1.0
    return v


def effective_qubit_unitary(U_full: np.ndarray, osc_state: np.ndarray, n_qubits: int) -> tuple[np.ndarray, float]:
    """Project ``U_full`` onto a pure oscillator state: ``G[j,k] = <j,ψ|U|k,ψ>``.

    The residual ``‖G†G - I‖₂`` vanishes when the qubits end up disentangled
    from the oscillator.
    """
    psi = np.asarray(osc_state, dtype=complex)
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise ValueError("oscillator state must be normalized")
    nq, nf = 2**n_qubits, psi.shape[0]
    U = np.asarray(U_full).reshape(nq, nf, nq, nf)
    G = np.einsum("m,jmkn,n->jk", psi.conj(), U, psi)
    residual = float(np.linalg.norm(G.conj().T @ G - np.eye(nq), 2))
    return G, residual


def process_fidelity(G_eff: np.ndarray, G_ideal: np.ndarray) -> float:
    """``|Tr(G_ideal† G_eff)| / d``; insensitive to global phase.

    Rounding can push the overlap a few ulps above 1; the result is clipped.
    """
    G_eff, G_ideal = np.asarray(G_eff), np.asarray(G_ideal)
    if G_eff.shape != G_ideal.shape:
        raise ValueError(f"dimension mismatch {G_eff.shape} vs {G_ideal.shape}")
    return min(1.0, float(abs(np.trace(G_ideal.conj().T @ G_eff)) / G_ideal.shape[0]))


def equal_up_to_phase(A: np.ndarray, B: np.ndarray) -> float:
    """Max-abs distance between ``A`` and ``B`` after removing the best global phase."""
    overlap = np.vdot(B, A)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.max(np.abs(A - phase * B)))


@dataclass
class GateReport:
    fidelity: dict
    residual: dict
    leakage: float
    closure: dict
    cutoff: int
    converged: bool
    thresholds: dict = field(default_factory=dict)
    passes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.passes.values())

    @property
    def fidelity_spread(self) -> float:
        vals = list(self.fidelity.values())
        return max(vals) - min(vals) if vals else 0.0

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "cutoff": self.cutoff,
            "cutoff_converged": self.converged,
            "fidelity": dict(sorted(self.fidelity.items())),
            "fidelity_spread": self.fidelity_spread,
            "disentanglement_residual": dict(sorted(self.residual.items())),
            "worst_leakage": self.leakage,
            "closure": self.closure,
            "thresholds": self.thresholds,
            "passes": self.passes,
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _evolve_levels(prog: Program, osc: OscillatorSpec, levels: Sequence[int]):
    """Columns ``U|j, k>`` for every qubit basis state j and Fock level k in ``levels``.

    Also returns, per level, the worst population found in the top Fock
    levels after any segment.
    """
    nq, nf = 2**prog.n_qubits, osc.cutoff
    top = int(math.ceil(nf * (1 - LEAK_MARGIN)))
    cols = [j * nf + k for j in range(nq) for k in levels]
    start = np.zeros((nq * nf, len(cols)), dtype=complex)
    start[cols, np.arange(len(cols))] = 1.0
    worst = np.zeros(len(cols))

    def track(psi):
        pop = np.sum(np.abs(psi.reshape(nq, nf, -1)[:, top:, :]) ** 2, axis=(0, 1))
        np.maximum(worst, pop, out=worst)

    out = integrator.apply_program(prog, osc, start, on_segment=track)
    per_level = worst.reshape(nq, len(levels)).max(axis=0)
    return out.reshape(nq, nf, nq, len(levels)), dict(zip(levels, per_level))


def effective_unitaries(prog: Program, levels: Sequence[int], cutoff: int) -> tuple[dict, dict]:
    """Integrator-derived ``G_eff`` for each oscillator Fock level, plus per-level leakage."""
    osc = OscillatorSpec(cutoff)
    levels = sorted(set(int(k) for k in levels))
    if levels and levels[-1] >= cutoff:
        raise ValueError(f"cutoff {cutoff} cannot hold oscillator input level {levels[-1]}")
    cols, leak_by_level = _evolve_levels(prog, osc, levels)
    return {k: cols[:, k, :, i] for i, k in enumerate(levels)}, leak_by_level


def _measure(prog: Program, ideal: np.ndarray, inputs: Sequence[OscInput], cutoff: int):
    levels = sorted({k for inp in inputs for k, w in enumerate(inp.weights()) if w > 0})
    unitaries, leak_by_level = effective_unitaries(prog, levels, cutoff)
    nq = 2**prog.n_qubits
    per_level = {}
    for k, G in unitaries.items():
        res = float(np.linalg.norm(G.conj().T @ G - np.eye(nq), 2))
        per_level[k] = (process_fidelity(G, ideal), res)
    fid, resid, leak = {}, {}, 0.0
    for inp in inputs:
        w = inp.weights()
        fid[inp.label] = float(sum(wk * per_level[k][0] for k, wk in enumerate(w) if wk > 0))
        resid[inp.label] = float(sum(wk * per_level[k][1] for k, wk in enumerate(w) if wk > 0))
        leak = max(leak, float(sum(wk * leak_by_level[k] for k, wk in enumerate(w) if wk > 0)))
    return fid, resid, leak


def max_displacement(prog: Program) -> float:
    """Largest phase-space distance from the origin reached by any eigen-tuple."""
    best = 0.0
    for seq in prog.sequences:
        for rec in accumulate_all(seq):
            for start, (length, turn) in zip(rec.vertices, rec.arcs):
                # an arc stays within its length, and within its diameter, of the start vertex
                reach = length if abs(turn) < 2.0 else min(length, 2.0 * length / abs(turn))
                best = max(best, math.hypot(start.x, start.p) + reach)
    return best


def initial_cutoff(prog: Program, inputs: Sequence[OscInput]) -> int:
    alpha = max_displacement(prog) / math.sqrt(2.0)
    kmax = max((inp.max_level for inp in inputs), default=0)
    reach = math.sqrt(kmax) + alpha
    need = (reach**2 + 6.0 * reach + 10.0) / (1 - LEAK_MARGIN)
    cutoff = DEFAULT_START_CUTOFF
    while cutoff < need:
        cutoff *= 2
    return cutoff


def gate_report(
    prog: Program,
    ideal: np.ndarray,
    osc_inputs: Iterable = ("fock:0",),
    cutoff: int | str = "auto",
    fidelity_tol: float = 1e-6,
    spread_tol: float = 1e-8,
    residual_tol: float = 1e-6,
    leak_tol: float = 1e-8,
    convergence_tol: float = 1e-8,
) -> GateReport:
    """Simulate ``prog`` with the integrator for each oscillator input and score it.

    With ``cutoff="auto"`` the Fock cutoff starts from an estimate based on the
    largest displacement and doubles until every fidelity moves by less than
    ``convergence_tol`` and the top-quarter leakage is below ``leak_tol``.
    Thermal inputs are scored per Fock level and Boltzmann-averaged.
    """
    inputs = as_inputs(osc_inputs)
    if not inputs:
        raise ValueError("need at least one oscillator input")
    ideal = np.asarray(ideal)
    if ideal.shape != (2**prog.n_qubits,) * 2:
        raise ValueError("ideal unitary does not match program width")
    converged = True
    if cutoff == "auto":
        n_f = initial_cutoff(prog, inputs)
        fid, resid, leak = _measure(prog, ideal, inputs, n_f)
        converged = False
        while (2 * n_f) * 2**prog.n_qubits <= integrator.max_dim():
            fid2, resid2, leak2 = _measure(prog, ideal, inputs, 2 * n_f)
            change = max(abs(fid2[k] - fid[k]) for k in fid)
            n_f, fid, resid, leak = 2 * n_f, fid2, resid2, leak2
            if change < convergence_tol and leak < leak_tol:
                converged = True
                break
    else:
        n_f = int(cutoff)
        fid, resid, leak = _measure(prog, ideal, inputs, n_f)
    closure = closure_report(prog)
    thresholds = {
        "fidelity": fidelity_tol,
        "spread": spread_tol,
        "residual": residual_tol,
        "leakage": leak_tol,
        "closure": closure.tol,
    }
    spread = max(fid.values()) - min(fid.values())
    passes = {
        "fidelity": min(fid.values()) >= 1 - fidelity_tol,
        "spread": spread <= spread_tol,
        "residual": max(resid.values()) <= residual_tol,
        "leakage": leak <= leak_tol,
        "closure": closure.is_closed,
    }
    return GateReport(fid, resid, leak, closure.to_dict(), n_f, converged, thresholds, passes)


def has_individual_addressing(prog: Program) -> bool:
    """True if any bus pulse treats qubits differently or any local rotation is present."""
    for step in prog.steps:
        if isinstance(step, IdealLocal):
            return True
        if len(set(step.frame.axes)) > 1:
            return True
        for seg in step.segments:
            for op in seg.operators:
                coeffs = {c for _, c in op.coeffs}
                if len(coeffs) > 1 or (op.coeffs and len(op.coeffs) != prog.n_qubits):
                    return True
    return False

"""Truncated oscillator and qubit operators, embeddings and state containers.

Basis ordering used everywhere in the package: the composite space is
``qubits ⊗ oscillator``. Qubit 0 is the most significant bit of the
computational index and the oscillator is the innermost (fastest-varying)
factor, so the composite index of ``|bits, k>`` is ``int(bits, 2) * N_F + k``.

Qubit states follow the convention ``σ_z|1> = +|1>`` and ``σ_z|0> = -|0>``.
In the computational basis ``(|0>, |1>)`` this makes ``σ_z = diag(-1, +1)``;
``σ_y`` is chosen so that ``σ_x σ_y = i σ_z`` still holds.

Oscillator quadratures are dimensionless with ``x = (a + a†)/√2`` and
``p = i(a† - a)/√2`` so that ``[x, p] = i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

__all__ = [
    "InvalidSpecError",
    "NonHermitianError",
    "OscillatorSpec",
    "OscillatorOps",
    "CompositeState",
    "build_oscillator_ops",
    "pauli_matrix",
    "single_qubit_pauli",
    "matrix_exponential",
    "embed",
    "index_to_spins",
    "spins_to_index",
    "all_spin_tuples",
    "thermal_weights",
]


class InvalidSpecError(ValueError):
    pass


class NonHermitianError(ValueError):
    def __init__(self, asymmetry: float):
        super().__init__(f"operator is not Hermitian (max |H - H^dagger| = {asymmetry:.3e})")
        self.asymmetry = asymmetry


@dataclass(frozen=True)
class OscillatorSpec:
    """Fock-space truncation of the bus oscillator (levels ``0..cutoff-1``)."""

    cutoff: int

    def __post_init__(self):
        if int(self.cutoff) != self.cutoff or self.cutoff < 2:
            raise InvalidSpecError(f"oscillator cutoff must be an integer >= 2, got {self.cutoff!r}")


class OscillatorOps(NamedTuple):
    a: np.ndarray
    a_dag: np.ndarray
    x: np.ndarray
    p: np.ndarray
    n: np.ndarray


def build_oscillator_ops(spec: OscillatorSpec) -> OscillatorOps:
    if not isinstance(spec, OscillatorSpec):
        spec = OscillatorSpec(spec)
    dim = spec.cutoff
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    a_dag = a.conj().T
    x = (a + a_dag) / math.sqrt(2.0)
    p = 1j * (a_dag - a) / math.sqrt(2.0)
    n = np.diag(np.arange(dim, dtype=float)).astype(complex)
    return OscillatorOps(a, a_dag, x, p, n)


_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, 1j], [-1j, 0]], dtype=complex),
    "Z": np.array([[-1, 0], [0, 1]], dtype=complex),
}


def single_qubit_pauli(axis: str) -> np.ndarray:
    try:
        return _PAULI[axis.upper()].copy()
    except (KeyError, AttributeError):
        raise ValueError(f"unknown Pauli axis {axis!r}; expected X, Y or Z") from None


def pauli_matrix(axis: str, qubit: int, n_qubits: int) -> np.ndarray:
    """``σ_axis`` on ``qubit`` of an ``n_qubits`` register (identity elsewhere)."""
    if not 0 <= qubit < n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {n_qubits} qubits")
    sigma = single_qubit_pauli(axis)
    left = np.eye(2**qubit, dtype=complex)
    right = np.eye(2 ** (n_qubits - qubit - 1), dtype=complex)
    return np.kron(np.kron(left, sigma), right)


def matrix_exponential(H: np.ndarray, t: float = 1.0, *, tol: float = 1e-10) -> np.ndarray:
    """Return ``exp(-i H t)`` for Hermitian ``H``.

    Uses the Hermitian eigendecomposition, so the result is unitary to
    machine precision regardless of ``t``.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    asym = float(np.max(np.abs(H - H.conj().T))) if H.size else 0.0
    if asym > tol:
        raise NonHermitianError(asym)
    evals, evecs = scipy.linalg.eigh((H + H.conj().T) / 2)
    return (evecs * np.exp(-1j * t * evals)) @ evecs.conj().T


def embed(op: np.ndarray, n_qubits: int, osc: OscillatorSpec, factor: str) -> np.ndarray:
    """Lift an operator on one factor (``"qubits"`` or ``"oscillator"``) to the composite space."""
    op = np.asarray(op)
    nq, nf = 2**n_qubits, osc.cutoff
    if factor == "qubits":
        if op.shape != (nq, nq):
            raise ValueError(f"qubit operator must be {nq}x{nq}, got {op.shape}")
        return np.kron(op, np.eye(nf))
    if factor == "oscillator":
        if op.shape != (nf, nf):
            raise ValueError(f"oscillator operator must be {nf}x{nf}, got {op.shape}")
        return np.kron(np.eye(nq), op)
    raise ValueError(f"factor must be 'qubits' or 'oscillator', got {factor!r}")


def index_to_spins(index: int, n_qubits: int) -> tuple[int, ...]:
    """σ_z eigenvalues (±1) of computational basis state ``index``; qubit 0 is the MSB."""
    return tuple(1 if (index >> (n_qubits - 1 - q)) & 1 else -1 for q in range(n_qubits))


def spins_to_index(spins) -> int:
    index = 0
    for s in spins:
        index = (index << 1) | (1 if s > 0 else 0)
    return index


def all_spin_tuples(n_qubits: int) -> list[tuple[int, ...]]:
    return [index_to_spins(i, n_qubits) for i in range(2**n_qubits)]


def thermal_weights(nbar: float, tail: float = 1e-10) -> np.ndarray:
    """Boltzmann occupation weights with mean ``nbar``, cut where the tail drops below ``tail``.

    The returned weights are renormalized to sum to one.
    """
    if nbar < 0:
        raise ValueError("mean occupation must be non-negative")
    if nbar == 0:
        return np.array([1.0])
    q = nbar / (nbar + 1.0)
    # tail beyond level K is q**K
    levels = int(math.ceil(math.log(tail) / math.log(q)))
    k = np.arange(max(levels, 1))
    w = (1.0 - q) * q**k
    return w / w.sum()


@dataclass(frozen=True, eq=False)
class CompositeState:
    """Pure (vector) or mixed (density matrix) state on ``qubits ⊗ oscillator``."""

    data: np.ndarray
    n_qubits: int
    osc: OscillatorSpec

    def __post_init__(self):
        dim = 2**self.n_qubits * self.osc.cutoff
        data = np.asarray(self.data, dtype=complex)
        if data.shape not in ((dim,), (dim, dim)):
            raise ValueError(f"state shape {data.shape} does not match composite dimension {dim}")
        if data.ndim == 1:
            norm = np.linalg.norm(data)
            if abs(norm - 1.0) > 1e-12:
                raise ValueError(f"pure state norm {norm!r} differs from 1")
        else:
            tr = np.trace(data).real
            if abs(tr - 1.0) > 1e-12:
                raise ValueError(f"density matrix trace {tr!r} differs from 1")
            if np.max(np.abs(data - data.conj().T)) > 1e-12:
                raise ValueError("density matrix is not Hermitian")
        object.__setattr__(self, "data", data)

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @classmethod
    def product(cls, qubit_state, osc_state, osc: OscillatorSpec) -> "CompositeState":
        q = np.asarray(qubit_state, dtype=complex)
        o = np.asarray(osc_state, dtype=complex)
        n_qubits = int(round(math.log2(q.shape[0])))
        if q.ndim == 1 and o.ndim == 1:
            return cls(np.kron(q, o), n_qubits, osc)
        if q.ndim == 1:
            q = np.outer(q, q.conj())
        if o.ndim == 1:
            o = np.outer(o, o.conj())
        return cls(np.kron(q, o), n_qubits, osc)

    @classmethod
    def basis(cls, bits: int, fock: int, n_qubits: int, osc: OscillatorSpec) -> "CompositeState":
        psi = np.zeros(2**n_qubits * osc.cutoff, dtype=complex)
        psi[bits * osc.cutoff + fock] = 1.0
        return cls(psi, n_qubits, osc)

    @classmethod
    def thermal(cls, qubit_state, nbar: float, osc: OscillatorSpec) -> "CompositeState":
        w = thermal_weights(nbar)
        if w.size > osc.cutoff:
            raise ValueError(f"thermal state with nbar={nbar} needs at least {w.size} Fock levels")
        rho_osc = np.zeros((osc.cutoff, osc.cutoff), dtype=complex)
        rho_osc[: w.size, : w.size] = np.diag(w)
        return cls.product(qubit_state, rho_osc, osc)

    def density_matrix(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def qubit_density(self) -> np.ndarray:
        """Reduced density matrix of the qubit register (oscillator traced out)."""
        nq, nf = 2**self.n_qubits, self.osc.cutoff
        if self.is_pure:
            psi = self.data.reshape(nq, nf)
            return psi @ psi.conj().T
        rho = self.data.reshape(nq, nf, nq, nf)
        return np.einsum("ikjk->ij", rho)

    def qubit_probabilities(self) -> np.ndarray:
        return np.clip(np.real(np.diag(self.qubit_density())), 0.0, None)

    def fock_populations(self) -> np.ndarray:
        nq, nf = 2**self.n_qubits, self.osc.cutoff
        if self.is_pure:
            return np.sum(np.abs(self.data.reshape(nq, nf)) ** 2, axis=0)
        rho = self.data.reshape(nq, nf, nq, nf)
        return np.real(np.einsum("ikik->k", rho))

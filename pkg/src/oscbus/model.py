"""Commuting internal-state operators, pulse segments and programs.

A bus pulse segment drives the Hamiltonian

    H = v·A x + w·B p + r·C n + g·D

where A, B, C, D are :class:`InternalOperator` values. Each operator is an
affine combination ``c0 + Σ_l c_l σ_{axis(l), l}`` with the per-qubit axis
taken from the sequence's :class:`AxisFrame`. Because every qubit has one
axis for the whole sequence, all four operators share an eigenbasis and
commute by construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .hilbert import single_qubit_pauli

SCHEMA_VERSION = 1
AXES = ("X", "Y", "Z")


@dataclass(frozen=True)
class AxisFrame:
    axes: tuple[str, ...]

    def __post_init__(self):
        axes = tuple(a.upper() for a in self.axes)
        for a in axes:
            if a not in AXES:
                raise ValueError(f"invalid axis {a!r}")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def uniform(cls, axis: str, n_qubits: int) -> "AxisFrame":
        return cls((axis,) * n_qubits)

    @property
    def n_qubits(self) -> int:
        return len(self.axes)

    def change_of_basis(self) -> np.ndarray:
        """Unitary ``Q`` with ``Q diag(s) Q† = Σ`` frame Paulis.

        Column ``i`` of ``Q`` is the joint eigenvector whose eigenvalue
        tuple is :func:`~oscbus.hilbert.index_to_spins` of ``i``.
        """
        q = np.ones((1, 1), dtype=complex)
        for axis in self.axes:
            q = np.kron(q, _EIGENBASIS[axis])
        return q


_S2 = 1 / math.sqrt(2.0)
# columns ordered (eigenvalue -1, eigenvalue +1)
_EIGENBASIS = {
    "Z": np.eye(2, dtype=complex),
    "X": np.array([[_S2, _S2], [-_S2, _S2]], dtype=complex),
    "Y": np.array([[_S2, _S2], [1j * _S2, -1j * _S2]], dtype=complex),
}


@dataclass(frozen=True)
class InternalOperator:
    """Affine operator ``c0 + Σ c_l σ_l`` (axis of each σ_l set by the frame)."""

    c0: float = 0.0
    coeffs: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        merged: dict[int, float] = {}
        for q, c in self.coeffs:
            if int(q) != q or q < 0:
                raise ValueError(f"invalid qubit index {q!r}")
            merged[int(q)] = merged.get(int(q), 0.0) + float(c)
        object.__setattr__(self, "c0", float(self.c0))
        object.__setattr__(self, "coeffs", tuple(sorted((q, c) for q, c in merged.items() if c != 0.0)))

    @classmethod
    def from_dict(cls, c0: float = 0.0, coeffs: Mapping[int, float] | None = None) -> "InternalOperator":
        return cls(c0, tuple((coeffs or {}).items()))

    @classmethod
    def identity(cls, scale: float = 1.0) -> "InternalOperator":
        return cls(scale)

    @classmethod
    def pauli(cls, qubit: int, scale: float = 1.0) -> "InternalOperator":
        return cls(0.0, ((qubit, scale),))

    @classmethod
    def collective(cls, qubits: Iterable[int], coeff: float, offset_per_qubit: float = 0.0) -> "InternalOperator":
        """``Σ_l (coeff·σ_l + offset_per_qubit)`` over ``qubits``."""
        qubits = list(qubits)
        return cls(offset_per_qubit * len(qubits), tuple((q, coeff) for q in qubits))

    @classmethod
    def excitation_deficit(cls, qubits: Iterable[int]) -> "InternalOperator":
        """``Σ_l (σ_l - 1)/2``: zero iff every listed qubit is in the +1 eigenstate."""
        return cls.collective(qubits, 0.5, -0.5)

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.coeffs)

    def scaled(self, factor: float) -> "InternalOperator":
        return InternalOperator(self.c0 * factor, tuple((q, c * factor) for q, c in self.coeffs))

    def is_identity(self) -> bool:
        return self.c0 == 1.0 and not self.coeffs

    def max_abs_eigenvalue(self) -> float:
        return abs(self.c0) + sum(abs(c) for _, c in self.coeffs)

    def to_dict(self) -> dict:
        return {"c0": self.c0, "coeffs": {str(q): c for q, c in self.coeffs}}

    @classmethod
    def parse(cls, data: Mapping) -> "InternalOperator":
        return cls(data.get("c0", 0.0), tuple((int(q), float(c)) for q, c in data.get("coeffs", {}).items()))


ZERO = InternalOperator()
IDENTITY = InternalOperator.identity()


def eval_eigenvalue(op: InternalOperator, s: Sequence[int], n_qubits: int | None = None) -> float:
    """Eigenvalue of ``op`` on the joint eigenvector labelled by ``s ∈ {-1,+1}^n``."""
    if n_qubits is not None and len(s) != n_qubits:
        raise ValueError(f"eigen-tuple has length {len(s)}, expected {n_qubits}")
    total = op.c0
    for q, c in op.coeffs:
        if q >= len(s):
            raise ValueError(f"operator references qubit {q} but eigen-tuple has length {len(s)}")
        total += c * s[q]
    return total


def to_matrix(op: InternalOperator, frame: AxisFrame, n_qubits: int | None = None) -> np.ndarray:
    n = frame.n_qubits if n_qubits is None else n_qubits
    if n != frame.n_qubits:
        raise ValueError(f"frame covers {frame.n_qubits} qubits, expected {n}")
    dim = 2**n
    out = op.c0 * np.eye(dim, dtype=complex)
    for q, c in op.coeffs:
        if q >= n:
            raise ValueError(f"operator references qubit {q} outside a {n}-qubit frame")
        left = np.eye(2**q)
        right = np.eye(2 ** (n - q - 1))
        out += c * np.kron(np.kron(left, single_qubit_pauli(frame.axes[q])), right)
    return out


@dataclass(frozen=True)
class PulseSegment:
    """Constant-coefficient slice of ``H = v·A x + w·B p + r·C n + g·D``.

    ``frame`` is normally ``None`` (inherit the sequence frame); it exists so a
    segment that was authored against a different frame can be rejected by
    :func:`validate_sequence`.
    """

    duration: float
    v: float = 0.0
    w: float = 0.0
    r: float = 0.0
    g: float = 0.0
    A: InternalOperator = ZERO
    B: InternalOperator = ZERO
    C: InternalOperator = ZERO
    D: InternalOperator = ZERO
    frame: AxisFrame | None = None

    @property
    def operators(self) -> tuple[InternalOperator, ...]:
        return (self.A, self.B, self.C, self.D)

    @property
    def coefficients(self) -> tuple[float, float, float, float]:
        return (self.v, self.w, self.r, self.g)


@dataclass(frozen=True)
class SampledSegment:
    """Coefficients sampled on a uniform grid, linearly interpolated in between.

    ``v``, ``w``, ``r``, ``g`` hold ``m + 1`` samples at ``t = 0, dt, ..., m·dt``.
    """

    dt: float
    v: tuple[float, ...]
    w: tuple[float, ...]
    r: tuple[float, ...]
    g: tuple[float, ...]
    A: InternalOperator = ZERO
    B: InternalOperator = ZERO
    C: InternalOperator = ZERO
    D: InternalOperator = ZERO
    frame: AxisFrame | None = None

    def __post_init__(self):
        lengths = {len(self.v), len(self.w), len(self.r), len(self.g)}
        if len(lengths) != 1 or min(lengths) < 2:
            raise ValueError("sampled coefficients need equal lengths of at least 2")
        for name in "vwrg":
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))

    @property
    def duration(self) -> float:
        return self.dt * (len(self.v) - 1)

    @property
    def operators(self) -> tuple[InternalOperator, ...]:
        return (self.A, self.B, self.C, self.D)

    def subdivide(self, substeps: int) -> list[PulseSegment]:
        """Midpoint-sampled constant pieces, ``substeps`` per grid interval."""
        h = self.dt / substeps
        pieces = []
        for j in range(len(self.v) - 1):
            for k in range(substeps):
                frac = (k + 0.5) / substeps
                vals = [(1 - frac) * s[j] + frac * s[j + 1] for s in (self.v, self.w, self.r, self.g)]
                pieces.append(PulseSegment(h, *vals, self.A, self.B, self.C, self.D, self.frame))
        return pieces


Segment = Union[PulseSegment, SampledSegment]


@dataclass(frozen=True)
class PulseSequence:
    frame: AxisFrame
    segments: tuple[Segment, ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def n_qubits(self) -> int:
        return self.frame.n_qubits

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self.segments)

    @property
    def has_sampled(self) -> bool:
        return any(isinstance(s, SampledSegment) for s in self.segments)

    def expand(self, substeps: int = 1) -> "PulseSequence":
        """Same sequence with every sampled segment replaced by constant pieces."""
        segs: list[PulseSegment] = []
        for s in self.segments:
            segs.extend(s.subdivide(substeps) if isinstance(s, SampledSegment) else [s])
        return PulseSequence(self.frame, tuple(segs))


@dataclass(frozen=True)
class IdealLocal:
    """Instantaneous single-qubit rotation ``exp(-i·angle/2·σ_axis)``."""

    axis: str
    angle: float
    qubit: int

    def __post_init__(self):
        if self.axis.upper() not in AXES:
            raise ValueError(f"invalid axis {self.axis!r}")
        object.__setattr__(self, "axis", self.axis.upper())

    def single_qubit_matrix(self) -> np.ndarray:
        sigma = single_qubit_pauli(self.axis)
        return math.cos(self.angle / 2) * np.eye(2) - 1j * math.sin(self.angle / 2) * sigma

    def matrix(self, n_qubits: int) -> np.ndarray:
        if not 0 <= self.qubit < n_qubits:
            raise IndexError(f"qubit {self.qubit} out of range for {n_qubits} qubits")
        left = np.eye(2**self.qubit)
        right = np.eye(2 ** (n_qubits - self.qubit - 1))
        return np.kron(np.kron(left, self.single_qubit_matrix()), right)


def bit_flip(qubit: int) -> IdealLocal:
    return IdealLocal("X", math.pi, qubit)


Step = Union[PulseSequence, IdealLocal]


@dataclass(frozen=True)
class Program:
    n_qubits: int
    steps: tuple[Step, ...] = field(default_factory=tuple)

    def __post_init__(self):
        steps = tuple(self.steps)
        for step in steps:
            if isinstance(step, IdealLocal):
                if not 0 <= step.qubit < self.n_qubits:
                    raise ValueError(f"local rotation on qubit {step.qubit} outside {self.n_qubits}-qubit program")
            elif isinstance(step, PulseSequence):
                if step.n_qubits != self.n_qubits:
                    raise ValueError("pulse sequence frame does not match program width")
            else:
                raise TypeError(f"unsupported program step {step!r}")
        object.__setattr__(self, "steps", steps)

    def __add__(self, other: "Program") -> "Program":
        if other.n_qubits != self.n_qubits:
            raise ValueError("cannot concatenate programs of different widths")
        return Program(self.n_qubits, self.steps + other.steps)

    @property
    def sequences(self) -> list[PulseSequence]:
        return [s for s in self.steps if isinstance(s, PulseSequence)]


def validate_sequence(seq: PulseSequence) -> list[str]:
    """Return a list of human-readable violations; empty means the sequence is valid."""
    problems = []
    if not seq.segments:
        problems.append("empty sequence")
    n = seq.n_qubits
    for i, seg in enumerate(seq.segments):
        if not seg.duration > 0 or not math.isfinite(seg.duration):
            problems.append(f"segment {i}: non-positive duration {seg.duration!r}")
        for name, op in zip("ABCD", seg.operators):
            for q in op.qubits:
                if q >= n:
                    problems.append(f"segment {i}: operator {name} references qubit {q} outside frame")
                elif seg.frame is not None and q < seg.frame.n_qubits and seg.frame.axes[q] != seq.frame.axes[q]:
                    problems.append(
                        f"segment {i}: frame conflict on qubit {q} "
                        f"({seg.frame.axes[q]} vs sequence {seq.frame.axes[q]})"
                    )
        coeffs = seg.coefficients if isinstance(seg, PulseSegment) else seg.v + seg.w + seg.r + seg.g
        if not all(math.isfinite(c) for c in coeffs):
            problems.append(f"segment {i}: non-finite coefficient")
    return problems


def truncate_sequence(seq: PulseSequence, t: float) -> PulseSequence:
    """Prefix of a constant-coefficient sequence covering time ``[0, t]``."""
    if seq.has_sampled:
        raise ValueError("expand sampled segments before truncating")
    out = []
    elapsed = 0.0
    for seg in seq.segments:
        if elapsed + seg.duration <= t:
            out.append(seg)
            elapsed += seg.duration
            continue
        rest = t - elapsed
        if rest > 0:
            out.append(PulseSegment(rest, *seg.coefficients, *seg.operators, seg.frame))
        break
    return PulseSequence(seq.frame, tuple(out))


# -- JSON --------------------------------------------------------------------


def _segment_to_dict(seg: Segment) -> dict:
    ops = {name: op.to_dict() for name, op in zip("ABCD", seg.operators)}
    if isinstance(seg, SampledSegment):
        d = {"type": "sampled", "dt": seg.dt, "v": list(seg.v), "w": list(seg.w), "r": list(seg.r), "g": list(seg.g)}
    else:
        d = {"type": "constant", "duration": seg.duration, "v": seg.v, "w": seg.w, "r": seg.r, "g": seg.g}
    d.update(ops)
    if seg.frame is not None:
        d["frame"] = list(seg.frame.axes)
    return d


def _segment_from_dict(d: Mapping) -> Segment:
    ops = [InternalOperator.parse(d.get(name, {})) for name in "ABCD"]
    frame = AxisFrame(tuple(d["frame"])) if "frame" in d else None
    kind = d.get("type", "constant")
    if kind == "sampled":
        return SampledSegment(float(d["dt"]), tuple(d["v"]), tuple(d["w"]), tuple(d["r"]), tuple(d["g"]), *ops, frame)
    if kind == "constant":
        return PulseSegment(
            float(d["duration"]), float(d.get("v", 0.0)), float(d.get("w", 0.0)),
            float(d.get("r", 0.0)), float(d.get("g", 0.0)), *ops, frame,
        )
    raise ValueError(f"unknown segment type {kind!r}")


def program_to_dict(prog: Program) -> dict:
    steps = []
    for step in prog.steps:
        if isinstance(step, IdealLocal):
            steps.append({"type": "local", "axis": step.axis, "angle": step.angle, "qubit": step.qubit})
        else:
            steps.append({
                "type": "pulse",
                "frame": list(step.frame.axes),
                "segments": [_segment_to_dict(s) for s in step.segments],
            })
    return {"schema_version": SCHEMA_VERSION, "n_qubits": prog.n_qubits, "steps": steps}


def program_from_dict(data: Mapping) -> Program:
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported program schema_version {version}")
    steps: list[Step] = []
    for d in data["steps"]:
        if d["type"] == "local":
            steps.append(IdealLocal(d["axis"], float(d["angle"]), int(d["qubit"])))
        elif d["type"] == "pulse":
            steps.append(PulseSequence(AxisFrame(tuple(d["frame"])), tuple(_segment_from_dict(s) for s in d["segments"])))
        else:
            raise ValueError(f"unknown step type {d['type']!r}")
    return Program(int(data["n_qubits"]), tuple(steps))


def dumps(prog: Program, **kwargs) -> str:
    kwargs.setdefault("indent", 2)
    return json.dumps(program_to_dict(prog), sort_keys=True, **kwargs)


def loads(text: str) -> Program:
    return program_from_dict(json.loads(text))

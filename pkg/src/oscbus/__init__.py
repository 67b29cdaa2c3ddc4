"""Multi-qubit gates through a shared harmonic-oscillator bus.

Gates are compiled into conditional displacement and rotation pulses, the
resulting evolution is evaluated in closed form per qubit eigen-tuple, and
both are checked against brute-force integration on a truncated Fock space.
"""

from .analysis import GateReport, effective_qubit_unitary, gate_report, process_fidelity
from .compiler import (
    GateSpec,
    compile_chain,
    compile_cnnot,
    compile_parallelogram,
    compile_product_phase,
    compile_rectangle,
    compile_toffoli,
    projector_fourier_terms,
)
from .grover import OracleSpec, compile_inversion, compile_oracle, demo_all_ones, m_matrix_identities, run_grover
from .hilbert import CompositeState, OscillatorSpec
from .integrator import DimensionError, evolve_program, program_unitary, segment_unitary
from .kernels import BACKEND
from .model import AxisFrame, IdealLocal, InternalOperator, Program, PulseSegment, PulseSequence, SampledSegment
from .propagator import accumulate, closed_form_unitary, closure_report, enclosed_area, trajectory_export

__all__ = [
    "accumulate",
    "AxisFrame",
    "BACKEND",
    "closed_form_unitary",
    "closure_report",
    "compile_chain",
    "compile_cnnot",
    "compile_inversion",
    "compile_oracle",
    "compile_parallelogram",
    "compile_product_phase",
    "compile_rectangle",
    "compile_toffoli",
    "CompositeState",
    "demo_all_ones",
    "DimensionError",
    "effective_qubit_unitary",
    "enclosed_area",
    "evolve_program",
    "gate_report",
    "GateReport",
    "GateSpec",
    "IdealLocal",
    "InternalOperator",
    "m_matrix_identities",
    "OracleSpec",
    "OscillatorSpec",
    "process_fidelity",
    "Program",
    "program_unitary",
    "projector_fourier_terms",
    "PulseSegment",
    "PulseSequence",
    "run_grover",
    "SampledSegment",
    "segment_unitary",
    "trajectory_export",
]

__version__ = "0.1.0"

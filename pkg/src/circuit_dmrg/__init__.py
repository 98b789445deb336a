"""Grouped-qubit MPS simulation of quantum circuits with DMRG-style compression."""

from .circuit import Circuit, CircuitError, schedule_layers
from .dmrg import CompressionConfig, CompressionError, SweepTrace, compress_step, init_guess
from .exact import StateVector, evolve, evolve_feynman, porter_thomas_state, schmidt_spectrum
from .gates import Gate, gate_matrix
from .metrics import error_rate, fidelity, xeb_estimate, xeb_exact
from .mps import GroupedMPS, amplitude, canonicalize, overlap, product_state, to_statevector
from .sequences import sequence_I, sequence_II, sequence_III
from .simulate import run_closed, run_closed_batch, run_open
from .topology import GridTopology, Grouping, build_topology, standard_grouping

__version__ = "0.1.0"

__all__ = [
    "Circuit",
    "CircuitError",
    "CompressionConfig",
    "CompressionError",
    "Gate",
    "GridTopology",
    "GroupedMPS",
    "Grouping",
    "StateVector",
    "SweepTrace",
    "amplitude",
    "build_topology",
    "canonicalize",
    "compress_step",
    "error_rate",
    "evolve",
    "evolve_feynman",
    "fidelity",
    "gate_matrix",
    "init_guess",
    "overlap",
    "porter_thomas_state",
    "product_state",
    "run_closed",
    "run_closed_batch",
    "run_open",
    "schedule_layers",
    "schmidt_spectrum",
    "sequence_I",
    "sequence_II",
    "sequence_III",
    "standard_grouping",
    "to_statevector",
    "xeb_estimate",
    "xeb_exact",
]

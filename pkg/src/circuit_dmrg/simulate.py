"""Open (full-state) and closed (single-amplitude) simulation drivers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .circuit import Circuit
from .dmrg import CompressionConfig, SweepTrace, apply_layers_exact, compress_step
from .metrics import error_rate
from .mps import GroupedMPS, overlap, product_state
from .topology import Grouping

__all__ = [
    "ClosedRunResult",
    "ForwardCache",
    "OpenRunResult",
    "SimulationError",
    "default_partition",
    "prepare_forward",
    "run_closed",
    "run_closed_batch",
    "run_open",
    "step_config",
]


class SimulationError(RuntimeError):
    pass


def _rate(F: float, n_2g: int) -> float:
    return 0.0 if n_2g == 0 else error_rate(F, n_2g)


@dataclass
class OpenRunResult:
    mps: GroupedMPS
    f_deltas: list[float]
    F_tilde: float
    eps_tilde: float
    N_2g: int
    traces: list[SweepTrace] = field(default_factory=list)

    @property
    def f_inits(self) -> list[float]:
        return [t.f_init for t in self.traces]


def step_config(config: CompressionConfig, step: int) -> CompressionConfig:
    """Per-step copy of ``config`` with an independent seed for random initial guesses."""
    if config.init_strategy != "RandomMPS":
        return config
    base = 0 if config.seed is None else config.seed
    seed = int(np.random.SeedSequence([base, step]).generate_state(1)[0])
    return replace(config, seed=seed)


def run_open(circuit: Circuit, grouping: Grouping, config: CompressionConfig,
             initial: GroupedMPS | None = None) -> OpenRunResult:
    """Absorb the circuit ``K`` layers at a time, compressing after each chunk.

    Chunks never split a layer; a short final chunk is allowed. The estimate
    ``F_tilde`` is the product of the per-step partial fidelities.
    """
    if grouping.n_qubits != circuit.n_qubits:
        raise SimulationError(f"grouping covers {grouping.n_qubits} qubits, circuit has {circuit.n_qubits}")
    mps = product_state(grouping, 0) if initial is None else initial
    if mps.grouping.groups != grouping.groups:
        raise SimulationError("initial MPS uses a different grouping")
    f_deltas, traces = [], []
    for step, start in enumerate(range(0, circuit.depth, config.K)):
        chunk = circuit.layers[start:start + config.K]
        mps, f, trace = compress_step(mps, chunk, step_config(config, step))
        f_deltas.append(f)
        traces.append(trace)
    F_tilde = math.prod(f_deltas)
    n_2g = circuit.n_2g
    return OpenRunResult(mps, f_deltas, F_tilde, _rate(F_tilde, n_2g), n_2g, traces)


def default_partition(depth: int, K: int, D2: int | None = None) -> tuple[int, int, int]:
    """``(D1, D2, D3)`` with ``D2 = K`` by default and the rest split evenly (extra to D1)."""
    D2 = min(K if D2 is None else D2, depth)
    rest = depth - D2
    return rest - rest // 2, D2, rest // 2


def _partition(circuit: Circuit, config, D1, D2, D3):
    if D1 is None and D2 is None and D3 is None:
        return default_partition(circuit.depth, config.K)
    if D1 is None or D2 is None or D3 is None:
        if D2 is None:
            raise SimulationError("give D2 or all of D1, D2, D3")
        d1, d2, d3 = default_partition(circuit.depth, config.K, D2)
        D1 = d1 if D1 is None else D1
        D3 = circuit.depth - D1 - D2 if D3 is None else D3
    if min(D1, D2, D3) < 0 or D1 + D2 + D3 != circuit.depth:
        raise SimulationError(f"D1 + D2 + D3 = {D1} + {D2} + {D3} must equal the depth {circuit.depth}")
    return D1, D2, D3


@dataclass
class ForwardCache:
    """Forward run plus the exactly applied middle layers, reusable across bitstrings."""

    D1: int
    D2: int
    D3: int
    middle: GroupedMPS
    F_forward: float
    forward: OpenRunResult


@dataclass
class ClosedRunResult:
    bitstring: int
    amplitude: complex
    F_tilde: float
    F_forward: float
    F_backward: float
    eps_tilde: float
    eps_tilde_approx: float
    N_2g: int
    N_2g_approx: int
    backward: OpenRunResult | None = None


def prepare_forward(circuit: Circuit, grouping: Grouping, config: CompressionConfig,
                    D1=None, D2=None, D3=None, max_bond: int | None = 4096) -> ForwardCache:
    D1, D2, D3 = _partition(circuit, config, D1, D2, D3)
    fwd = run_open(circuit.slice(0, D1), grouping, config)
    middle = apply_layers_exact(fwd.mps, circuit.layers[D1:D1 + D2])
    if max_bond is not None and middle.max_bond > max_bond:
        raise SimulationError(f"middle block needs bond {middle.max_bond} > {max_bond}; lower D2")
    return ForwardCache(D1, D2, D3, middle, fwd.F_tilde, fwd)


def _closed_one(circuit, grouping, cache: ForwardCache, x: int, config) -> ClosedRunResult:
    D = circuit.depth
    back_circ = circuit.slice(D - cache.D3, D).adjoint()
    bwd = run_open(back_circ, grouping, config, initial=product_state(grouping, x))
    amp = overlap(bwd.mps, cache.middle)
    F = cache.F_forward * bwd.F_tilde
    n_2g = circuit.n_2g
    n_approx = circuit.layer_n_2g(0, cache.D1) + circuit.layer_n_2g(D - cache.D3, D)
    return ClosedRunResult(int(x), amp, F, cache.F_forward, bwd.F_tilde, _rate(F, n_2g),
                           _rate(F, n_approx), n_2g, n_approx, bwd)


def run_closed(circuit: Circuit, x: int, grouping: Grouping, config: CompressionConfig,
               D1=None, D2=None, D3=None, backward_config: CompressionConfig | None = None
               ) -> ClosedRunResult:
    """Amplitude ``<x|U|0>`` from a forward run over the first D1 layers, a
    backward run of the adjoint of the last D3 layers from ``|x>``, and an
    exact overlap through the D2 middle layers."""
    cache = prepare_forward(circuit, grouping, config, D1, D2, D3)
    return _closed_one(circuit, grouping, cache, x, backward_config or config)


def run_closed_batch(circuit: Circuit, bitstrings: Sequence[int], grouping: Grouping,
                     config: CompressionConfig, D1=None, D2=None, D3=None,
                     forward_cache: ForwardCache | None = None,
                     backward_config: CompressionConfig | None = None) -> list[ClosedRunResult]:
    """Closed runs sharing one forward pass; each bitstring is independent."""
    cache = forward_cache or prepare_forward(circuit, grouping, config, D1, D2, D3)
    return [_closed_one(circuit, grouping, cache, x, backward_config or config) for x in bitstrings]

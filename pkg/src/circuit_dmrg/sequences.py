"""Circuit families: supremacy-style sequences I/II and QAOA-MaxCut (III)."""

from __future__ import annotations

from collections import deque
from typing import Sequence

import numpy as np

from .circuit import Circuit, CircuitError, schedule_layers
from .gates import Gate
from .topology import GridTopology

__all__ = [
    "FSIM_PARAMS",
    "PATTERN_I",
    "PATTERN_II",
    "RoutingError",
    "coupler_order",
    "erdos_renyi_edges",
    "route_gates",
    "select_sequence_III",
    "sequence_I",
    "sequence_II",
    "sequence_III",
]

FSIM_PARAMS = (1.0, np.pi / 2)
PATTERN_I = "ABCDCDAB"
PATTERN_II = "CDBABACD"
ONE_QUBIT_POOL = ("sqrtX", "sqrtY", "sqrtW")


class RoutingError(CircuitError):
    pass


def coupler_order(pattern: str, depth: int) -> list[str]:
    return [pattern[d % len(pattern)] for d in range(depth)]


def _supremacy(topology: GridTopology, depth: int, seed, pattern: str) -> Circuit:
    if depth < 0:
        raise CircuitError("depth must be >= 0")
    n = topology.n_qubits
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, len(ONE_QUBIT_POOL), size=(depth, n))
    layers = []
    for d, cls in enumerate(coupler_order(pattern, depth)):
        layer = [Gate(ONE_QUBIT_POOL[k], (q,)) for q, k in enumerate(draws[d])]
        layer += [Gate("fsim", pair, FSIM_PARAMS) for pair in topology.couplers[cls]]
        layers.append(layer)
    family = "sequence_I" if pattern == PATTERN_I else "sequence_II"
    meta = {"family": family, "seed": _seed_meta(seed)}
    return Circuit(n, tuple(layers), topology, meta)


def _seed_meta(seed):
    return seed if isinstance(seed, (int, type(None))) else str(seed)


def sequence_I(topology: GridTopology, depth: int, seed=None) -> Circuit:
    """Random one-qubit gates then fsim(1, pi/2) on couplers ABCD-CDAB-..."""
    return _supremacy(topology, depth, seed, PATTERN_I)


def sequence_II(topology: GridTopology, depth: int, seed=None) -> Circuit:
    """Same one-qubit draws as :func:`sequence_I`, couplers CDBA-BACD-..."""
    return _supremacy(topology, depth, seed, PATTERN_II)


def erdos_renyi_edges(n: int, p: float, rng: np.random.Generator) -> list[tuple[int, int]]:
    coins = rng.random(n * (n - 1) // 2)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    return [e for e, c in zip(pairs, coins) if c < p]


def _shortest_path(adj: dict[int, list[int]], src: int, dst: int) -> list[int]:
    prev = {src: None}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        if u == dst:
            break
        for v in adj[u]:
            if v not in prev:
                prev[v] = u
                queue.append(v)
    if dst not in prev:
        raise RoutingError(f"no path between physical qubits {src} and {dst}")
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    return path[::-1]


def route_gates(gates: Sequence[Gate], topology: GridTopology,
                layout: Sequence[int] | None = None) -> tuple[list[Gate], list[int]]:
    """Greedy SWAP insertion onto nearest-neighbor couplers.

    Gates come in on logical qubits. For every two-qubit gate whose operands
    are not adjacent, the first operand is swapped along a shortest path
    until it neighbors the second. Returns the physical gate list and the
    final logical-to-physical map.
    """
    n_phys = topology.n_qubits
    l2p = list(range(n_phys)) if layout is None else list(layout)
    if len(set(l2p)) != len(l2p) or any(not 0 <= p < n_phys for p in l2p):
        raise RoutingError("layout must be an injective map into physical qubits")
    p2l = {p: l for l, p in enumerate(l2p)}
    adj = topology.adjacency()
    out = []
    for g in gates:
        if any(q >= len(l2p) for q in g.targets):
            raise RoutingError(f"gate {g} acts on an unmapped logical qubit")
        if g.arity == 1:
            out.append(Gate(g.kind, (l2p[g.targets[0]],), g.params, g.adjoint))
            continue
        a, b = g.targets
        path = _shortest_path(adj, l2p[a], l2p[b])
        for u, v in zip(path[:-2], path[1:-1]):
            out.append(Gate("SWAP", (u, v)))
            lu, lv = p2l.get(u), p2l.get(v)
            if lu is not None:
                l2p[lu] = v
            if lv is not None:
                l2p[lv] = u
            p2l[u], p2l[v] = lv, lu
        out.append(Gate(g.kind, (l2p[a], l2p[b]), g.params, g.adjoint))
    return out, l2p


def sequence_III(n_qubits: int, edge_prob: float, betas=None, gammas=None, p_layers: int = 1,
                 seed=None, compile_to: GridTopology | None = None) -> Circuit:
    """QAOA-MaxCut on an Erdos-Renyi graph, ``prod_k U_B(beta_k) U_C(gamma_k)``.

    ``U_C`` applies ``exp(-i gamma Z_m Z_n)`` per edge, ``U_B`` applies
    ``exp(-i beta X_m)`` per qubit, starting from Hadamards on every qubit.
    Missing angles are drawn uniformly from ``[0, pi)`` after the graph.
    With ``compile_to`` the circuit is routed onto the grid and its
    two-qubit count includes the inserted SWAPs.
    """
    if not 0 < edge_prob < 1:
        raise CircuitError(f"edge_prob must lie in (0, 1), got {edge_prob}")
    if p_layers < 1:
        raise CircuitError("p_layers must be >= 1")
    rng = np.random.default_rng(seed)
    edges = erdos_renyi_edges(n_qubits, edge_prob, rng)
    betas = rng.uniform(0, np.pi, p_layers) if betas is None else np.asarray(betas, float)
    gammas = rng.uniform(0, np.pi, p_layers) if gammas is None else np.asarray(gammas, float)
    if len(betas) != p_layers or len(gammas) != p_layers:
        raise CircuitError("need one beta and one gamma per QAOA layer")
    gates = [Gate("H", (q,)) for q in range(n_qubits)]
    for k in range(p_layers):
        gates += [Gate("zz", e, (gammas[k],)) for e in edges]
        gates += [Gate("rx", (q,), (betas[k],)) for q in range(n_qubits)]
    meta = {"family": "sequence_III", "seed": _seed_meta(seed), "edges": [list(e) for e in edges],
            "betas": [float(b) for b in betas], "gammas": [float(g) for g in gammas]}
    n_circ = n_qubits
    if compile_to is not None:
        if n_qubits > compile_to.n_qubits:
            raise RoutingError(f"{n_qubits} logical qubits do not fit on {compile_to.n_qubits}")
        gates, l2p = route_gates(gates, compile_to)
        meta["final_layout"] = l2p[:n_qubits]
        n_circ = compile_to.n_qubits
    layers = schedule_layers(gates)
    return Circuit(n_circ, tuple(tuple(l) for l in layers), compile_to, meta)


def select_sequence_III(n_qubits: int, edge_prob: float, target_n2g: int, tolerance: int,
                        seed=None, compile_to: GridTopology | None = None,
                        p_layers: int = 1, max_tries: int = 1000) -> Circuit:
    """Draw QAOA instances until ``|N_2g - target| <= tolerance``."""
    seeds = np.random.SeedSequence(seed).spawn(max_tries)
    for s in seeds:
        circ = sequence_III(n_qubits, edge_prob, p_layers=p_layers, seed=s, compile_to=compile_to)
        if abs(circ.n_2g - target_n2g) <= tolerance:
            return circ
    raise CircuitError(f"no instance within {tolerance} of N_2g={target_n2g} in {max_tries} tries")

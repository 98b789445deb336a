"""Brute-force state-vector oracles.

The dense state is a tensor with one axis of extent 2 per qubit, axis ``i``
being qubit ``i``. Flattened row-major this puts qubit 0 on the most
significant bit, which is the bitstring convention used across the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .circuit import Circuit
from .gates import Gate
from .tensor import DenseTensor, split_svd

__all__ = [
    "DEFAULT_MAX_QUBITS",
    "ExactSimError",
    "SchmidtSpectrum",
    "StateVector",
    "apply_gate",
    "best_mps_fidelity",
    "evolve",
    "evolve_feynman",
    "load_raw",
    "porter_thomas_state",
    "save_raw",
    "schmidt_spectrum",
]

DEFAULT_MAX_QUBITS = 30


class ExactSimError(ValueError):
    pass


def _check_size(n: int, max_qubits: int):
    if n > max_qubits:
        raise ExactSimError(f"{n} qubits exceeds the dense memory bound of {max_qubits}")


@dataclass(frozen=True)
class StateVector:
    """Dense ``2^N`` amplitude vector (read-only)."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size != 2 ** self.n_qubits:
            raise ExactSimError(f"expected {2 ** self.n_qubits} amplitudes, got {amps.size}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, n_qubits: int, index: int = 0, max_qubits: int = DEFAULT_MAX_QUBITS):
        _check_size(n_qubits, max_qubits)
        amps = np.zeros(2 ** n_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    @property
    def tensor(self) -> DenseTensor:
        return DenseTensor(self.amplitudes.reshape((2,) * self.n_qubits))

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm2(self) -> float:
        return float(np.real(np.vdot(self.amplitudes, self.amplitudes)))

    def inner(self, other: "StateVector") -> complex:
        """``<self|other>``."""
        if other.n_qubits != self.n_qubits:
            raise ExactSimError("qubit counts differ")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def apply_gate(psi: np.ndarray, gate: Gate) -> np.ndarray:
    """Apply ``gate`` to a state tensor of shape ``(2,) * N``."""
    m = gate.matrix
    if gate.arity == 1:
        (q,) = gate.targets
        return np.moveaxis(np.tensordot(m, psi, axes=([1], [q])), 0, q)
    a, b = gate.targets
    out = np.tensordot(m.reshape(2, 2, 2, 2), psi, axes=([2, 3], [a, b]))
    return np.moveaxis(out, [0, 1], [a, b])


def evolve(circuit: Circuit, initial: StateVector | None = None,
           max_qubits: int = DEFAULT_MAX_QUBITS) -> StateVector:
    n = circuit.n_qubits
    _check_size(n, max_qubits)
    if initial is None:
        initial = StateVector.basis(n)
    if initial.n_qubits != n:
        raise ExactSimError("initial state and circuit disagree on the qubit count")
    psi = initial.amplitudes.reshape((2,) * n)
    for layer in circuit.layers:
        for g in layer:
            psi = apply_gate(psi, g)
    return StateVector(n, psi.reshape(-1))


def _split_gate(gate: Gate, left_first: bool):
    """Factor a two-qubit gate into ``sum_k A_k (x) B_k`` with A on the left side."""
    u = gate.matrix.reshape(2, 2, 2, 2)  # (o1, o2, i1, i2)
    if not left_first:
        u = u.transpose(1, 0, 3, 2)
    a, s, b = split_svd(u, (0, 2), cutoff=1e-13)
    a = a.data * s  # (o, i, k)
    return [a[:, :, k] for k in range(len(s))], [b.data[k] for k in range(len(s))]


def _apply_local(psi: np.ndarray, m: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(m, psi, axes=([1], [axis])), 0, axis)


def evolve_feynman(circuit: Circuit, left_qubits: Iterable[int], initial_index: int = 0,
                   max_terms: int = 1 << 20) -> StateVector:
    """Schrodinger-Feynman evolution across a bipartition.

    Each gate straddling the cut is split by SVD into ``chi_p`` product terms;
    the two halves are evolved separately for every assignment of the split
    indices and the products summed. Assignments are visited depth-first in
    lexicographic order, sharing work between common prefixes.
    """
    n = circuit.n_qubits
    left = sorted(set(int(q) for q in left_qubits))
    right = [q for q in range(n) if q not in left]
    if not left or not right:
        raise ExactSimError("the cut must leave qubits on both sides")
    pos = {q: i for i, q in enumerate(left)}
    pos.update({q: i for i, q in enumerate(right)})
    left_set = set(left)
    side = {q: q in left_set for q in range(n)}

    # ("L", gate) and ("R", gate) stay on one side; ("X", As, Bs, axis_l, axis_r) straddles
    ops = []
    n_terms = 1
    for g in circuit.gates:
        sides = {side[q] for q in g.targets}
        if len(sides) == 1:
            ops.append(("L" if side[g.targets[0]] else "R", g))
            continue
        a, b = g.targets
        left_first = side[a]
        qa, qb = (a, b) if left_first else (b, a)
        alist, blist = _split_gate(g, left_first)
        n_terms *= len(alist)
        if n_terms > max_terms:
            raise ExactSimError(f"more than {max_terms} Feynman paths across the cut")
        ops.append(("X", alist, blist, pos[qa], pos[qb]))

    bits = [(initial_index >> (n - 1 - q)) & 1 for q in range(n)]
    lpsi = np.zeros((2,) * len(left), dtype=np.complex128)
    lpsi[tuple(bits[q] for q in left)] = 1.0
    rpsi = np.zeros((2,) * len(right), dtype=np.complex128)
    rpsi[tuple(bits[q] for q in right)] = 1.0

    def local(psi, g):
        if g.arity == 1:
            return _apply_local(psi, g.matrix, pos[g.targets[0]])
        a, b = pos[g.targets[0]], pos[g.targets[1]]
        out = np.tensordot(g.matrix.reshape(2, 2, 2, 2), psi, axes=([2, 3], [a, b]))
        return np.moveaxis(out, [0, 1], [a, b])

    total = np.zeros((2,) * n, dtype=np.complex128)
    perm = np.argsort(left + right)

    def walk(i, lp, rp):
        nonlocal total
        while i < len(ops) and ops[i][0] != "X":
            kind, g = ops[i]
            if kind == "L":
                lp = local(lp, g)
            else:
                rp = local(rp, g)
            i += 1
        if i == len(ops):
            total = total + np.multiply.outer(lp, rp).transpose(perm)
            return
        _, alist, blist, ax, bx = ops[i]
        for am, bm in zip(alist, blist):
            walk(i + 1, _apply_local(lp, am, ax), _apply_local(rp, bm, bx))

    walk(0, lpsi, rpsi)
    return StateVector(n, total.reshape(-1))


def porter_thomas_state(n_qubits: int, seed=None, normalize: bool = True,
                        max_qubits: int = DEFAULT_MAX_QUBITS) -> StateVector:
    """Complex Gaussian amplitudes with variance ``1/2^N`` (``1/(2 2^N)`` per part)."""
    _check_size(n_qubits, max_qubits)
    rng = np.random.default_rng(seed)
    dim = 2 ** n_qubits
    sigma = np.sqrt(0.5 / dim)
    amps = rng.normal(0.0, sigma, dim) + 1j * rng.normal(0.0, sigma, dim)
    if normalize:
        amps /= np.linalg.norm(amps)
    return StateVector(n_qubits, amps)


@dataclass(frozen=True)
class SchmidtSpectrum:
    values: np.ndarray
    left_qubits: tuple[int, ...]

    @property
    def weights(self) -> np.ndarray:
        return self.values ** 2


def schmidt_spectrum(state: StateVector, left_qubits: Iterable[int]) -> SchmidtSpectrum:
    n = state.n_qubits
    left = tuple(sorted(set(int(q) for q in left_qubits)))
    if not left or len(left) == n or any(not 0 <= q < n for q in left):
        raise ExactSimError("left_qubits must be a proper nonempty subset of the qubits")
    right = tuple(q for q in range(n) if q not in left)
    mat = state.amplitudes.reshape((2,) * n).transpose(left + right)
    mat = mat.reshape(2 ** len(left), 2 ** len(right))
    s = np.linalg.svd(mat, compute_uv=False)
    return SchmidtSpectrum(s, left)


def best_mps_fidelity(state: StateVector, chi: int, left_qubits: Sequence[int] | None = None) -> float:
    """Weight kept by the ``chi`` largest Schmidt values of a bipartition.

    Defaults to the first ``N // 2`` qubits against the rest, which is the
    optimum for a two-tensor MPS.
    """
    if chi < 1:
        raise ExactSimError("chi must be >= 1")
    if left_qubits is None:
        left_qubits = range(state.n_qubits // 2)
    w = schmidt_spectrum(state, left_qubits).weights
    return float(np.sum(w[:chi]) / np.sum(w))


def save_raw(state: StateVector, path) -> None:
    """Dump amplitudes as little-endian complex128 (re, im interleaved), index order."""
    state.amplitudes.astype("<c16").tofile(Path(path))


def load_raw(path, n_qubits: int) -> StateVector:
    return StateVector(n_qubits, np.fromfile(Path(path), dtype="<c16"))

"""Gate kinds and their unitary matrices.

Two-qubit matrices are indexed ``[(o1 o2), (i1 i2)]`` with the first target
qubit as the most significant bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .tensor import DenseTensor

__all__ = ["Gate", "GateError", "gate_matrix", "ONE_QUBIT_KINDS", "TWO_QUBIT_KINDS"]

_S2 = np.sqrt(2.0)

ONE_QUBIT_KINDS = {"sqrtX": 0, "sqrtY": 0, "sqrtW": 0, "H": 0, "X": 0, "Z": 0,
                   "phase": 1, "rx": 1}
TWO_QUBIT_KINDS = {"fsim": 2, "CZ": 0, "CNOT": 0, "SWAP": 0, "zz": 1}


class GateError(ValueError):
    pass


def _fsim(theta: float, phi: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[1, 0, 0, 0],
                     [0, c, -1j * s, 0],
                     [0, -1j * s, c, 0],
                     [0, 0, 0, np.exp(-1j * phi)]], dtype=np.complex128)


@lru_cache(maxsize=None)
def _matrix(kind: str, params: tuple[float, ...]) -> np.ndarray:
    if kind == "sqrtX":
        m = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]])
    elif kind == "sqrtY":
        m = 0.5 * np.array([[1 + 1j, -1 - 1j], [1 + 1j, 1 + 1j]])
    elif kind == "sqrtW":
        # principal root of W = (X + Y)/sqrt(2)
        m = 0.5 * np.array([[1 + 1j, -1j * _S2], [_S2, 1 + 1j]])
    elif kind == "H":
        m = np.array([[1, 1], [1, -1]]) / _S2
    elif kind == "X":
        m = np.array([[0, 1], [1, 0]])
    elif kind == "Z":
        m = np.diag([1, -1])
    elif kind == "phase":
        m = np.diag([1, np.exp(1j * params[0])])
    elif kind == "rx":
        # exp(-i beta X)
        b = params[0]
        m = np.array([[np.cos(b), -1j * np.sin(b)], [-1j * np.sin(b), np.cos(b)]])
    elif kind == "fsim":
        m = _fsim(*params)
    elif kind == "CZ":
        m = np.diag([1, 1, 1, -1])
    elif kind == "CNOT":
        m = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    elif kind == "SWAP":
        m = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])
    elif kind == "zz":
        # exp(-i gamma Z Z)
        g = params[0]
        m = np.diag(np.exp(-1j * g * np.array([1, -1, -1, 1])))
    else:
        raise GateError(f"unknown gate kind {kind!r}")
    m = np.asarray(m, dtype=np.complex128)
    m.setflags(write=False)
    return m


def _check(kind: str, params) -> tuple[float, ...]:
    nparams = ONE_QUBIT_KINDS.get(kind, TWO_QUBIT_KINDS.get(kind))
    if nparams is None:
        raise GateError(f"unknown gate kind {kind!r}; known: "
                        f"{sorted(ONE_QUBIT_KINDS) + sorted(TWO_QUBIT_KINDS)}")
    params = tuple(float(p) for p in params)
    if len(params) != nparams:
        raise GateError(f"{kind} takes {nparams} parameter(s), got {len(params)}")
    return params


def gate_matrix(kind: str, params=()) -> DenseTensor:
    """Unitary of a named gate as a 2x2 or 4x4 tensor."""
    return DenseTensor(_matrix(kind, _check(kind, params)))


@dataclass(frozen=True)
class Gate:
    """A named gate on one or two qubits.

    ``adjoint=True`` marks the conjugate transpose of the named unitary; it
    is how backward (closed-mode) circuits are expressed.
    """

    kind: str
    targets: tuple[int, ...]
    params: tuple[float, ...] = ()
    adjoint: bool = False

    def __post_init__(self):
        object.__setattr__(self, "params", _check(self.kind, self.params))
        targets = tuple(int(q) for q in self.targets)
        object.__setattr__(self, "targets", targets)
        arity = 1 if self.kind in ONE_QUBIT_KINDS else 2
        if len(targets) != arity:
            raise GateError(f"{self.kind} acts on {arity} qubit(s), got targets {targets}")
        if len(set(targets)) != len(targets):
            raise GateError(f"repeated target in {targets}")

    @property
    def arity(self) -> int:
        return len(self.targets)

    @property
    def matrix(self) -> np.ndarray:
        m = _matrix(self.kind, self.params)
        return m.conj().T if self.adjoint else m

    def dagger(self) -> "Gate":
        return Gate(self.kind, self.targets, self.params, not self.adjoint)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "params": list(self.params), "targets": list(self.targets)}
        if self.adjoint:
            out["adjoint"] = True
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Gate":
        return cls(d["kind"], tuple(d["targets"]), tuple(d.get("params", ())),
                   bool(d.get("adjoint", False)))

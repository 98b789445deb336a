"""Layered circuits and their JSON form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .gates import Gate
from .topology import GridTopology

__all__ = ["Circuit", "CircuitError", "CIRCUIT_SCHEMA_VERSION", "schedule_layers"]

CIRCUIT_SCHEMA_VERSION = 1


class CircuitError(ValueError):
    pass


def _check_layer(layer: Sequence[Gate], n_qubits: int, index: int):
    seen1, seen2 = set(), set()
    for g in layer:
        for q in g.targets:
            if not 0 <= q < n_qubits:
                raise CircuitError(f"layer {index}: qubit {q} outside 0..{n_qubits - 1}")
        seen = seen1 if g.arity == 1 else seen2
        if seen.intersection(g.targets):
            raise CircuitError(f"layer {index}: overlapping {g.arity}-qubit gates on {g.targets}")
        seen.update(g.targets)


@dataclass(frozen=True)
class Circuit:
    """Ordered layers of gates.

    Gates inside a layer are applied in list order. Within one layer the
    one-qubit gates touch distinct qubits and the two-qubit gates touch
    pairwise disjoint qubits; a paper-style layer is "one-qubit gates on
    every qubit, then two-qubit gates on one coupler set".
    """

    n_qubits: int
    layers: tuple[tuple[Gate, ...], ...]
    topology: GridTopology | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        layers = tuple(tuple(layer) for layer in self.layers)
        object.__setattr__(self, "layers", layers)
        if self.n_qubits < 1:
            raise CircuitError("a circuit needs at least one qubit")
        if self.topology is not None and self.topology.n_qubits != self.n_qubits:
            raise CircuitError("topology size does not match n_qubits")
        for i, layer in enumerate(layers):
            _check_layer(layer, self.n_qubits, i)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def n_2g(self) -> int:
        return sum(1 for layer in self.layers for g in layer if g.arity == 2)

    @property
    def gates(self) -> list[Gate]:
        return [g for layer in self.layers for g in layer]

    def layer_n_2g(self, start: int = 0, stop: int | None = None) -> int:
        return sum(1 for layer in self.layers[start:stop] for g in layer if g.arity == 2)

    def slice(self, start: int, stop: int | None = None) -> "Circuit":
        return Circuit(self.n_qubits, self.layers[start:stop], self.topology, dict(self.meta))

    def adjoint(self) -> "Circuit":
        """Inverse circuit: layers reversed, gates reversed and conjugated."""
        layers = tuple(tuple(g.dagger() for g in reversed(layer)) for layer in reversed(self.layers))
        return Circuit(self.n_qubits, layers, self.topology, dict(self.meta))

    def to_dict(self) -> dict:
        out = {
            "version": CIRCUIT_SCHEMA_VERSION,
            "n_qubits": self.n_qubits,
            "layers": [[g.to_dict() for g in layer] for layer in self.layers],
        }
        if self.topology is not None:
            out["topology"] = self.topology.to_dict()
        if self.meta:
            out["meta"] = self.meta
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Circuit":
        version = d.get("version")
        if version != CIRCUIT_SCHEMA_VERSION:
            raise CircuitError(f"unsupported circuit schema version {version!r}")
        topo = GridTopology.from_dict(d["topology"]) if d.get("topology") else None
        layers = tuple(tuple(Gate.from_dict(g) for g in layer) for layer in d["layers"])
        return cls(int(d["n_qubits"]), layers, topo, dict(d.get("meta", {})))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "Circuit":
        return cls.from_json(Path(path).read_text())


def schedule_layers(gates: Iterable[Gate]) -> list[list[Gate]]:
    """As-soon-as-possible layering of a gate sequence.

    Each gate lands in the first layer after the last layer touching any of
    its qubits, so relative order on every qubit is preserved.
    """
    layers: list[list[Gate]] = []
    last: dict[int, int] = {}
    for g in gates:
        slot = 1 + max((last.get(q, -1) for q in g.targets), default=-1)
        if slot == len(layers):
            layers.append([])
        layers[slot].append(g)
        for q in g.targets:
            last[q] = slot
    return layers

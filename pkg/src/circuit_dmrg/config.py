"""Run configuration: a YAML (or JSON) document plus command-line overrides.

Example::

    circuit: {family: sequence_I, n_b: 2, n_c: 8, staggered: false, depth: 8}
    grouping: V1
    chi: [4, 8]
    K: 2
    n_s: 2
    mode: open
    seeds: {circuit: 1, init: 0, sampler: 0}
    oracle: true
    outputs: {csv: results.csv, json: results.json}
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .circuit import Circuit
from .dmrg import INIT_STRATEGIES, CompressionConfig
from .sequences import select_sequence_III, sequence_I, sequence_II, sequence_III
from .topology import GROUPING_NAMES, GridTopology, Grouping, TopologyError, standard_grouping

__all__ = ["ConfigError", "MODES", "RunConfig", "load_config", "parse_override", "validate"]

MODES = ("open", "closed", "sample", "analyze")
FAMILIES = ("sequence_I", "sequence_II", "sequence_III")
SAMPLERS = ("metropolis", "conditional")
_KNOWN = {"circuit", "circuit_id", "grouping", "grouping_m", "chi", "K", "n_s", "convergence_tol",
          "init_strategy", "mode", "D1", "D2", "D3", "bitstrings", "seeds", "sampling", "oracle",
          "depths", "outputs", "workers", "max_qubits"}


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems) if not isinstance(problems, str) else [problems]
        super().__init__("; ".join(self.problems))


def parse_override(text: str) -> tuple[list[str], Any]:
    """``a.b=value`` with a YAML-parsed value."""
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    return key.strip().split("."), yaml.safe_load(value)


def _apply_override(doc: dict, path: list[str], value):
    cur = doc
    for k in path[:-1]:
        cur = cur.setdefault(k, {})
        if not isinstance(cur, dict):
            raise ConfigError(f"cannot set {'.'.join(path)}: {k} is not a mapping")
    cur[path[-1]] = value


def load_config(path, overrides=()) -> dict:
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a mapping at the top level")
    for ov in overrides:
        _apply_override(doc, *parse_override(ov))
    return doc


def _bits(value, n):
    if isinstance(value, str):
        if len(value) != n or set(value) - {"0", "1"}:
            raise ValueError(f"bitstring {value!r} must be {n} characters of 0/1")
        return int(value, 2)
    value = int(value)
    if not 0 <= value < 2 ** n:
        raise ValueError(f"bitstring {value} out of range for {n} qubits")
    return value


def _circuit_problems(spec) -> list[str]:
    out = []
    if not isinstance(spec, dict):
        return ["circuit must be a mapping with 'family' or 'file'"]
    if "file" in spec:
        if not Path(spec["file"]).exists():
            out.append(f"circuit file {spec['file']} does not exist")
        return out
    fam = spec.get("family")
    if fam not in FAMILIES:
        return [f"circuit.family must be one of {list(FAMILIES)} (or give circuit.file), got {fam!r}"]
    if fam in ("sequence_I", "sequence_II"):
        for k in ("n_b", "n_c", "depth"):
            if k not in spec:
                out.append(f"circuit.{k} is required for {fam}")
    else:
        if "n_qubits" not in spec or "edge_prob" not in spec:
            out.append("circuit.n_qubits and circuit.edge_prob are required for sequence_III")
        elif not 0 < float(spec["edge_prob"]) < 1:
            out.append("circuit.edge_prob must lie in (0, 1)")
        if spec.get("compile") and ("n_b" not in spec or "n_c" not in spec):
            out.append("circuit.n_b and circuit.n_c are required when circuit.compile is set")
    if "n_b" in spec and "n_c" in spec:
        try:
            GridTopology(int(spec["n_b"]), int(spec["n_c"]), bool(spec.get("staggered", True)))
        except TopologyError as exc:
            out.append(f"circuit topology: {exc}")
    return out


def validate(doc: dict) -> list[str]:
    """Schema and cross-field diagnostics; an empty list means the config is valid."""
    problems = []
    if not isinstance(doc, dict):
        return ["config must be a mapping"]
    unknown = sorted(set(doc) - _KNOWN)
    if unknown:
        problems.append(f"unknown keys {unknown}; known keys: {sorted(_KNOWN)}")
    if "circuit" not in doc:
        problems.append("missing required key 'circuit'")
    else:
        problems += _circuit_problems(doc["circuit"])
    mode = doc.get("mode", "open")
    if mode not in MODES:
        problems.append(f"mode must be one of {list(MODES)}, got {mode!r}")
    grouping = doc.get("grouping", "V1")
    if isinstance(grouping, str):
        if grouping not in GROUPING_NAMES:
            problems.append(f"unknown grouping {grouping!r}; valid names: {list(GROUPING_NAMES)}")
    elif not isinstance(grouping, list):
        problems.append("grouping must be a name or a list of qubit lists")
    chis = doc.get("chi")
    if mode in ("open", "closed", "analyze"):
        if chis is None:
            problems.append(f"chi is required in {mode} mode")
        else:
            chis = chis if isinstance(chis, list) else [chis]
            if not chis or any(not isinstance(c, int) or c < 1 for c in chis):
                problems.append("chi must be a positive integer or a list of them")
    for k in ("K", "n_s"):
        v = doc.get(k, 1)
        if not isinstance(v, int) or v < 1:
            problems.append(f"{k} must be a positive integer")
    if doc.get("init_strategy", "TruncatedApply") not in INIT_STRATEGIES:
        problems.append(f"init_strategy must be one of {list(INIT_STRATEGIES)}")
    seeds = doc.get("seeds", {})
    if not isinstance(seeds, dict) or set(seeds) - {"circuit", "init", "sampler"}:
        problems.append("seeds must map a subset of {circuit, init, sampler} to integers")
    elif any(not isinstance(v, int) for v in seeds.values()):
        problems.append("seeds must be explicit integers")
    parts = [doc.get(k) for k in ("D1", "D2", "D3")]
    if all(p is not None for p in parts):
        depth = _declared_depth(doc)
        if any(not isinstance(p, int) or p < 0 for p in parts):
            problems.append("D1, D2, D3 must be non-negative integers")
        elif depth is not None and sum(parts) != depth:
            problems.append(f"D1 + D2 + D3 = {sum(parts)} but the circuit depth is {depth}: the "
                            "forward, middle and backward blocks must cover the circuit exactly")
    elif any(p is not None for p in parts[::2]) and parts[1] is None:
        problems.append("give D2 alone or all of D1, D2, D3")
    if mode == "closed" and not doc.get("bitstrings"):
        problems.append("closed mode needs a nonempty 'bitstrings' list")
    if mode == "sample":
        s = doc.get("sampling", {})
        if s.get("method", "conditional") not in SAMPLERS:
            problems.append(f"sampling.method must be one of {list(SAMPLERS)}")
        if not isinstance(s.get("n_samples", 1000), int) or s.get("n_samples", 1000) < 1:
            problems.append("sampling.n_samples must be a positive integer")
        if not isinstance(s.get("L", 1), int) or s.get("L", 1) < 1:
            problems.append("sampling.L must be a positive integer")
    w = doc.get("workers", 1)
    if not isinstance(w, int) or w < 1:
        problems.append("workers must be a positive integer")
    return problems


def _declared_depth(doc):
    spec = doc.get("circuit", {})
    if isinstance(spec, dict) and spec.get("family") in ("sequence_I", "sequence_II"):
        return spec.get("depth")
    return None


@dataclass
class RunConfig:
    circuit_spec: dict
    grouping_spec: Any = "V1"
    grouping_m: int | None = None
    chis: list = field(default_factory=list)
    K: int = 1
    n_s: int = 1
    convergence_tol: float | None = None
    init_strategy: str = "TruncatedApply"
    mode: str = "open"
    D1: int | None = None
    D2: int | None = None
    D3: int | None = None
    bitstrings: list = field(default_factory=list)
    seeds: dict = field(default_factory=dict)
    sampling: dict = field(default_factory=dict)
    oracle: bool = False
    depths: list | None = None
    outputs: dict = field(default_factory=dict)
    workers: int = 1
    circuit_id: str | None = None
    max_qubits: int = 20

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        problems = validate(doc)
        if problems:
            raise ConfigError(problems)
        chis = doc.get("chi", [])
        return cls(
            circuit_spec=dict(doc["circuit"]),
            grouping_spec=doc.get("grouping", "V1"),
            grouping_m=doc.get("grouping_m"),
            chis=chis if isinstance(chis, list) else [chis],
            K=doc.get("K", 1),
            n_s=doc.get("n_s", 1),
            convergence_tol=doc.get("convergence_tol"),
            init_strategy=doc.get("init_strategy", "TruncatedApply"),
            mode=doc.get("mode", "open"),
            D1=doc.get("D1"), D2=doc.get("D2"), D3=doc.get("D3"),
            bitstrings=list(doc.get("bitstrings") or []),
            seeds=dict(doc.get("seeds", {})),
            sampling=dict(doc.get("sampling", {})),
            oracle=bool(doc.get("oracle", False)),
            depths=doc.get("depths"),
            outputs=dict(doc.get("outputs", {})),
            workers=doc.get("workers", 1),
            circuit_id=doc.get("circuit_id"),
            max_qubits=int(doc.get("max_qubits", 20)),
        )

    def seed(self, stream: str) -> int:
        return int(self.seeds.get(stream, 0))

    def build_circuit(self) -> Circuit:
        spec = self.circuit_spec
        if "file" in spec:
            return Circuit.load(spec["file"])
        fam = spec["family"]
        seed = self.seed("circuit")
        topo = None
        if "n_b" in spec and "n_c" in spec:
            topo = GridTopology(int(spec["n_b"]), int(spec["n_c"]), bool(spec.get("staggered", True)))
        if fam == "sequence_I":
            return sequence_I(topo, int(spec["depth"]), seed)
        if fam == "sequence_II":
            return sequence_II(topo, int(spec["depth"]), seed)
        compile_to = topo if spec.get("compile") else None
        if "target_n2g" in spec:
            return select_sequence_III(int(spec["n_qubits"]), float(spec["edge_prob"]),
                                       int(spec["target_n2g"]), int(spec.get("tolerance", 0)),
                                       seed, compile_to, int(spec.get("p_layers", 1)))
        return sequence_III(int(spec["n_qubits"]), float(spec["edge_prob"]),
                            spec.get("betas"), spec.get("gammas"), int(spec.get("p_layers", 1)),
                            seed, compile_to)

    def build_grouping(self, circuit: Circuit) -> Grouping:
        g = self.grouping_spec
        if isinstance(g, list):
            grouping = Grouping(tuple(tuple(x) for x in g))
        else:
            if circuit.topology is None:
                raise ConfigError(f"grouping {g} needs a grid topology; give explicit groups instead")
            grouping = standard_grouping(circuit.topology, g, self.grouping_m)
        if grouping.n_qubits != circuit.n_qubits:
            raise ConfigError(f"grouping covers {grouping.n_qubits} qubits, circuit has {circuit.n_qubits}")
        return grouping

    def compression(self, chi: int) -> CompressionConfig:
        return CompressionConfig(chi, self.K, self.n_s, self.convergence_tol, self.init_strategy,
                                 self.seed("init"))

    def parsed_bitstrings(self, n: int) -> list[int]:
        try:
            return [_bits(b, n) for b in self.bitstrings]
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

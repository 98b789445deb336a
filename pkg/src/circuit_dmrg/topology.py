"""Sycamore-like grid topology, coupler patterns and qubit groupings.

Geometry: column ``c`` holds qubits at heights ``y``; even columns use even
heights ``0, 2, ...`` and odd columns odd heights ``1, 3, ...``. Qubit ids run
column-major (by column, then by height). Every coupler joins a qubit
``(c, y)`` to ``(c + 1, y +/- 1)``.

Coupler classes (frozen convention)::

    up-right   (c, y) -> (c+1, y+1):  A if c is even, B if c is odd
    down-right (c, y) -> (c+1, y-1):  C if c is even, D if c is odd

With this rule B and D never cross a cut placed after an even column (V1),
A and C never cross a cut after an odd column (V2), A and D stay inside row
pairs ``{2j, 2j+1}`` (H1) and B and C inside row pairs ``{2j-1, 2j}`` (H2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

__all__ = [
    "COUPLER_CLASSES",
    "GROUPING_NAMES",
    "GridTopology",
    "Grouping",
    "TopologyError",
    "build_topology",
    "standard_grouping",
]

COUPLER_CLASSES = ("A", "B", "C", "D")
GROUPING_NAMES = ("V1", "V2", "H1", "H2", "D1", "D2")


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class GridTopology:
    """Columns alternating ``n_b`` and ``n_b - 1`` qubits.

    With ``staggered=False`` every column holds ``n_b`` qubits; that variant
    exists to reach qubit counts (e.g. 16) the alternating layout cannot.
    """

    n_b: int
    n_c: int
    staggered: bool = True
    coords: tuple[tuple[int, int], ...] = field(init=False, repr=False)
    couplers: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_b < 2 or self.n_c < 2:
            raise TopologyError(f"need n_b >= 2 and n_c >= 2, got n_b={self.n_b}, n_c={self.n_c}")
        if self.staggered and self.n_c % 2:
            raise TopologyError(f"n_c must be even, got {self.n_c}")
        coords = []
        for c in range(self.n_c):
            count = self.n_b if (c % 2 == 0 or not self.staggered) else self.n_b - 1
            coords.extend((c, 2 * j + c % 2) for j in range(count))
        object.__setattr__(self, "coords", tuple(coords))
        index = {xy: q for q, xy in enumerate(coords)}
        couplers = {k: [] for k in COUPLER_CLASSES}
        for q, (c, y) in enumerate(coords):
            up = index.get((c + 1, y + 1))
            down = index.get((c + 1, y - 1))
            if up is not None:
                couplers["A" if c % 2 == 0 else "B"].append((q, up))
            if down is not None:
                couplers["C" if c % 2 == 0 else "D"].append((q, down))
        object.__setattr__(self, "couplers", {k: tuple(v) for k, v in couplers.items()})

    @property
    def n_qubits(self) -> int:
        return len(self.coords)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return sorted(e for k in COUPLER_CLASSES for e in self.couplers[k])

    def column(self, q: int) -> int:
        return self.coords[q][0]

    def columns(self) -> list[list[int]]:
        cols = [[] for _ in range(self.n_c)]
        for q, (c, _) in enumerate(self.coords):
            cols[c].append(q)
        return cols

    def neighbors(self, q: int) -> list[int]:
        out = []
        for a, b in self.edges:
            if a == q:
                out.append(b)
            elif b == q:
                out.append(a)
        return sorted(out)

    def adjacency(self) -> dict[int, list[int]]:
        adj = {q: [] for q in range(self.n_qubits)}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return {q: sorted(v) for q, v in adj.items()}

    def to_dict(self) -> dict:
        return {"n_b": self.n_b, "n_c": self.n_c, "staggered": self.staggered}

    @classmethod
    def from_dict(cls, d: dict) -> "GridTopology":
        return cls(int(d["n_b"]), int(d["n_c"]), bool(d.get("staggered", True)))


def build_topology(n_b: int, n_c: int, staggered: bool = True) -> GridTopology:
    return GridTopology(n_b, n_c, staggered)


@dataclass(frozen=True)
class Grouping:
    """Ordered partition of qubits; group ``tau`` becomes MPS tensor ``tau``.

    Inside a group, qubits keep the listed order and the physical index is
    row-major over it (first listed qubit is the most significant bit).
    """

    groups: tuple[tuple[int, ...], ...]
    name: str = "custom"

    def __post_init__(self):
        groups = tuple(tuple(int(q) for q in g) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        if not groups or any(len(g) == 0 for g in groups):
            raise TopologyError("groups must be nonempty")
        flat = [q for g in groups for q in g]
        if sorted(flat) != list(range(len(flat))):
            raise TopologyError("groups must partition qubits 0..N-1 exactly once")

    @classmethod
    def contiguous(cls, sizes: Sequence[int], name: str = "custom") -> "Grouping":
        groups, start = [], 0
        for r in sizes:
            groups.append(tuple(range(start, start + r)))
            start += r
        return cls(tuple(groups), name)

    @property
    def n_qubits(self) -> int:
        return sum(len(g) for g in self.groups)

    @property
    def m(self) -> int:
        return len(self.groups)

    @property
    def sizes(self) -> list[int]:
        return [len(g) for g in self.groups]

    @property
    def phys_dims(self) -> list[int]:
        return [2 ** len(g) for g in self.groups]

    def locate(self, q: int) -> tuple[int, int]:
        """``(group index, position inside the group)`` of qubit ``q``."""
        return self._where[q]

    @property
    def _where(self) -> dict[int, tuple[int, int]]:
        cache = self.__dict__.get("_where_cache")
        if cache is None:
            cache = {q: (t, p) for t, g in enumerate(self.groups) for p, q in enumerate(g)}
            object.__setattr__(self, "_where_cache", cache)
        return cache

    def is_internal(self, targets: Sequence[int]) -> bool:
        return len({self.locate(q)[0] for q in targets}) == 1

    def to_dict(self) -> dict:
        return {"name": self.name, "groups": [list(g) for g in self.groups]}

    @classmethod
    def from_dict(cls, d: dict) -> "Grouping":
        return cls(tuple(tuple(g) for g in d["groups"]), d.get("name", "custom"))


def _column_split(n_c: int, m: int | None, parity: int) -> list[tuple[int, int]]:
    """Column ranges ``[start, stop)``: end groups plus 2-column middle groups.

    Every cut falls after a column whose index has the given parity.
    """
    def attempt(m):
        rest = n_c - 2 * (m - 2)
        half = rest / 2
        firsts = [f for f in range(1, rest) if (f - 1) % 2 == parity]
        if not firsts:
            return None
        f = min(firsts, key=lambda f: (abs(f - half), -f))
        ranges = [(0, f)]
        for k in range(m - 2):
            ranges.append((f + 2 * k, f + 2 * k + 2))
        ranges.append((f + 2 * (m - 2), n_c))
        return ranges

    if m is None:
        m = max(3, (n_c - 10) // 2 + 2) if n_c >= 4 else 2
        out = attempt(m) or attempt(2)
    else:
        if m < 2 or n_c - 2 * (m - 2) < 2:
            raise TopologyError(f"cannot split {n_c} columns into {m} groups")
        out = attempt(m)
    if out is None:
        raise TopologyError(f"no vertical split of {n_c} columns with cut parity {parity}")
    return out


def standard_grouping(topology: GridTopology, name: str, m: int | None = None) -> Grouping:
    """Named grouping on a grid.

    V1/V2 group by columns: two end groups and ``m - 2`` middle groups of two
    columns (for 12 columns, V1 spans 5, 2, 5 columns). H1/H2 group pairs of
    rows, D1/D2 group the up-right / down-right diagonal lines.
    """
    if name not in GROUPING_NAMES:
        raise TopologyError(f"unknown grouping {name!r}; valid names: {list(GROUPING_NAMES)}")
    coords = topology.coords
    if name in ("V1", "V2"):
        cols = topology.columns()
        ranges = _column_split(topology.n_c, m, 0 if name == "V1" else 1)
        groups = [tuple(q for c in range(a, b) for q in cols[c]) for a, b in ranges]
    else:
        if m is not None:
            raise TopologyError(f"grouping {name} has a fixed number of groups")
        if name == "H1":
            key = lambda q: coords[q][1] // 2
        elif name == "H2":
            key = lambda q: (coords[q][1] + 1) // 2
        elif name == "D1":
            key = lambda q: coords[q][0] - coords[q][1]
        else:
            key = lambda q: coords[q][0] + coords[q][1]
        buckets: dict[int, list[int]] = {}
        for q in range(topology.n_qubits):
            buckets.setdefault(key(q), []).append(q)
        groups = [tuple(buckets[k]) for k in sorted(buckets)]
    return Grouping(tuple(groups), name)

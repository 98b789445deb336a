"""Grouped-qubit matrix product states.

Tensor ``tau`` has shape ``(chi_left, 2**r_tau, chi_right)`` with extent-1
bonds at both ends. Its physical index is row-major over the group's qubits
in listed order, the first listed qubit being the most significant bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .gates import Gate
from .exact import DEFAULT_MAX_QUBITS, ExactSimError, StateVector
from .topology import Grouping

__all__ = [
    "CHECKPOINT_VERSION",
    "GroupedMPS",
    "MPSError",
    "amplitude",
    "amplitudes",
    "apply_gate_exact",
    "apply_gates_exact",
    "apply_internal_gates",
    "bits_of",
    "canonicalize",
    "from_statevector",
    "load_mps",
    "norm2",
    "overlap",
    "pad_bonds",
    "phys_indices",
    "product_state",
    "random_mps",
    "read_checkpoint_header",
    "reduce_bonds",
    "save_mps",
    "to_statevector",
    "truncate",
]

CHECKPOINT_VERSION = 1


class MPSError(ValueError):
    pass


def _freeze(a) -> np.ndarray:
    if isinstance(a, np.ndarray) and a.dtype == np.complex128 and not a.flags.writeable:
        return a
    out = np.array(a, dtype=np.complex128, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class GroupedMPS:
    """Immutable chain of rank-3 tensors over a qubit grouping.

    ``ortho_center`` is set only when every tensor left of it is
    left-orthonormal and every tensor right of it right-orthonormal.
    """

    grouping: Grouping
    tensors: tuple
    ortho_center: int | None = None

    def __post_init__(self):
        ts = tuple(_freeze(t) for t in self.tensors)
        object.__setattr__(self, "tensors", ts)
        g = self.grouping
        if len(ts) != g.m:
            raise MPSError(f"{len(ts)} tensors for {g.m} groups")
        for t, (a, d) in enumerate(zip(ts, g.phys_dims)):
            if a.ndim != 3 or a.shape[1] != d:
                raise MPSError(f"tensor {t} has shape {a.shape}, expected (chi, {d}, chi)")
        if ts[0].shape[0] != 1 or ts[-1].shape[2] != 1:
            raise MPSError("boundary bonds must have extent 1")
        for t in range(len(ts) - 1):
            if ts[t].shape[2] != ts[t + 1].shape[0]:
                raise MPSError(f"bond {t} mismatch: {ts[t].shape[2]} != {ts[t + 1].shape[0]}")
        if self.ortho_center is not None and not 0 <= self.ortho_center < len(ts):
            raise MPSError(f"ortho_center {self.ortho_center} out of range")

    @property
    def m(self) -> int:
        return len(self.tensors)

    @property
    def n_qubits(self) -> int:
        return self.grouping.n_qubits

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims, default=1)

    def replace(self, tensors, ortho_center=None) -> "GroupedMPS":
        return GroupedMPS(self.grouping, tuple(tensors), ortho_center)


def bits_of(x, n: int) -> list[int]:
    """Bit list of ``x`` (int with qubit 0 as MSB, or a 0/1 sequence)."""
    if isinstance(x, (int, np.integer)):
        if not 0 <= x < 2 ** n:
            raise MPSError(f"bitstring {x} out of range for {n} qubits")
        return [(int(x) >> (n - 1 - q)) & 1 for q in range(n)]
    bits = [int(b) for b in x]
    if len(bits) != n or any(b not in (0, 1) for b in bits):
        raise MPSError(f"expected {n} bits, got {x!r}")
    return bits


def phys_indices(grouping: Grouping, xs) -> np.ndarray:
    """Per-group physical indices of integer bitstrings, shape ``(len(xs), m)``."""
    xs = np.asarray(xs, dtype=np.int64).reshape(-1)
    n = grouping.n_qubits
    out = np.zeros((xs.size, grouping.m), dtype=np.int64)
    for t, grp in enumerate(grouping.groups):
        r = len(grp)
        for j, q in enumerate(grp):
            out[:, t] |= ((xs >> (n - 1 - q)) & 1) << (r - 1 - j)
    return out


def _group_index(grouping: Grouping, bits: Sequence[int]) -> list[int]:
    out = []
    for grp in grouping.groups:
        i = 0
        for q in grp:
            i = (i << 1) | bits[q]
        out.append(i)
    return out


def product_state(grouping: Grouping, x=0) -> GroupedMPS:
    bits = bits_of(x, grouping.n_qubits)
    ts = []
    for d, i in zip(grouping.phys_dims, _group_index(grouping, bits)):
        t = np.zeros((1, d, 1), dtype=np.complex128)
        t[0, i, 0] = 1.0
        ts.append(t)
    return GroupedMPS(grouping, tuple(ts), 0)


def _move_right(ts: list, t: int):
    a = ts[t]
    q, r = np.linalg.qr(a.reshape(-1, a.shape[2]))
    ts[t] = q.reshape(a.shape[0], a.shape[1], q.shape[1])
    ts[t + 1] = np.tensordot(r, ts[t + 1], axes=(1, 0))


def _move_left(ts: list, t: int):
    a = ts[t]
    q, r = np.linalg.qr(a.reshape(a.shape[0], -1).T)
    ts[t] = q.T.reshape(q.shape[1], a.shape[1], a.shape[2])
    ts[t - 1] = np.tensordot(ts[t - 1], r.T, axes=(2, 0))


def canonicalize(mps: GroupedMPS, center: int) -> GroupedMPS:
    """Mixed-canonical form around ``center`` by QR sweeps from both ends."""
    if not 0 <= center < mps.m:
        raise MPSError(f"center {center} out of range for {mps.m} tensors")
    if mps.ortho_center == center:
        return mps
    ts = list(mps.tensors)
    for t in range(center):
        _move_right(ts, t)
    for t in range(mps.m - 1, center, -1):
        _move_left(ts, t)
    return mps.replace(ts, center)


def _transfer(env: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # env[a_l, b_l] -> env[a_r, b_r] with conj(a) on the bra side
    tmp = np.tensordot(env, b, axes=(1, 0))
    return np.tensordot(a.conj(), tmp, axes=([0, 1], [0, 1]))


def overlap(a: GroupedMPS, b: GroupedMPS) -> complex:
    """``<a|b>`` by left-to-right transfer contraction."""
    if a.grouping.groups != b.grouping.groups:
        raise MPSError("overlap needs identical groupings")
    env = np.ones((1, 1), dtype=np.complex128)
    for x, y in zip(a.tensors, b.tensors):
        env = _transfer(env, x, y)
    return complex(env[0, 0])


def norm2(mps: GroupedMPS) -> float:
    if mps.ortho_center is not None:
        c = mps.tensors[mps.ortho_center].reshape(-1)
        return float(np.real(np.vdot(c, c)))
    return float(np.real(overlap(mps, mps)))


def amplitude(mps: GroupedMPS, x) -> complex:
    idx = _group_index(mps.grouping, bits_of(x, mps.n_qubits))
    v = np.ones(1, dtype=np.complex128)
    for t, i in zip(mps.tensors, idx):
        v = v @ t[:, i, :]
    return complex(v[0])


def amplitudes(mps: GroupedMPS, xs) -> np.ndarray:
    """Amplitudes of many integer bitstrings at once."""
    idx = phys_indices(mps.grouping, xs)
    v = np.ones((idx.shape[0], 1), dtype=np.complex128)
    for t, a in enumerate(mps.tensors):
        sel = a[:, idx[:, t], :]  # (chi_l, S, chi_r)
        v = np.einsum("sa,asb->sb", v, sel)
    return v[:, 0]


def _group_order(grouping: Grouping) -> list[int]:
    return [q for grp in grouping.groups for q in grp]


def to_statevector(mps: GroupedMPS, max_qubits: int = DEFAULT_MAX_QUBITS) -> StateVector:
    n = mps.n_qubits
    if n > max_qubits:
        raise ExactSimError(f"{n} qubits exceeds the dense memory bound of {max_qubits}")
    psi = mps.tensors[0].reshape(mps.tensors[0].shape[1], -1)
    for t in mps.tensors[1:]:
        psi = np.tensordot(psi, t, axes=(-1, 0)).reshape(-1, t.shape[2])
    psi = psi.reshape((2,) * n).transpose(np.argsort(_group_order(mps.grouping)))
    return StateVector(n, psi.reshape(-1))


def from_statevector(state: StateVector, grouping: Grouping, chi: int | None = None) -> GroupedMPS:
    """Exact (or ``chi``-truncated, renormalized) MPS of a dense state."""
    if state.n_qubits != grouping.n_qubits:
        raise MPSError("state and grouping disagree on the qubit count")
    n = state.n_qubits
    psi = state.amplitudes.reshape((2,) * n).transpose(_group_order(grouping)).reshape(1, -1)
    ts, left = [], 1
    for d in grouping.phys_dims[:-1]:
        mat = psi.reshape(left * d, -1)
        u, s, vh = np.linalg.svd(mat, full_matrices=False)
        k = len(s) if chi is None else min(chi, len(s))
        ts.append(u[:, :k].reshape(left, d, k))
        psi = s[:k, None] * vh[:k]
        left = k
    ts.append(psi.reshape(left, grouping.phys_dims[-1], 1))
    out = GroupedMPS(grouping, tuple(ts), grouping.m - 1)
    if chi is not None:
        nrm = np.sqrt(norm2(out))
        ts[-1] = ts[-1] / nrm
        out = out.replace(ts, grouping.m - 1)
    return out


def random_mps(grouping: Grouping, chi: int | Sequence[int], seed=None) -> GroupedMPS:
    """Normalized random MPS; bond ``i`` is ``min(chi_i, exact rank bound)``."""
    m = grouping.m
    dims = grouping.phys_dims
    caps = [chi] * (m - 1) if isinstance(chi, (int, np.integer)) else list(chi)
    if len(caps) != m - 1:
        raise MPSError(f"need {m - 1} bond caps, got {len(caps)}")
    bonds = [1]
    for i in range(m - 1):
        left = int(np.prod(dims[: i + 1], dtype=float))
        right = int(np.prod(dims[i + 1:], dtype=float))
        bonds.append(int(min(caps[i], left, right)))
    bonds.append(1)
    rng = np.random.default_rng(seed)
    ts = [rng.normal(size=(bonds[t], d, bonds[t + 1]))
          + 1j * rng.normal(size=(bonds[t], d, bonds[t + 1])) for t, d in enumerate(dims)]
    mps = canonicalize(GroupedMPS(grouping, tuple(ts)), 0)
    return _normalized(mps)


def _normalized(mps: GroupedMPS) -> GroupedMPS:
    c = mps.ortho_center
    if c is None:
        mps = canonicalize(mps, 0)
        c = 0
    ts = list(mps.tensors)
    nrm = np.linalg.norm(ts[c])
    if nrm == 0:
        raise MPSError("cannot normalize a zero state")
    ts[c] = ts[c] / nrm
    return mps.replace(ts, c)


def _apply_on_group(tensor: np.ndarray, r: int, pos: Sequence[int], matrix: np.ndarray) -> np.ndarray:
    chi_l, d, chi_r = tensor.shape
    x = tensor.reshape((chi_l,) + (2,) * r + (chi_r,))
    k = len(pos)
    u = matrix.reshape((2,) * (2 * k))
    axes = [1 + p for p in pos]
    y = np.tensordot(u, x, axes=(list(range(k, 2 * k)), axes))
    y = np.moveaxis(y, list(range(k)), axes)
    return y.reshape(chi_l, d, chi_r)


def apply_internal_gates(mps: GroupedMPS, layer: Iterable[Gate]) -> GroupedMPS:
    """Contract gates acting inside single groups; exact, bonds unchanged."""
    g = mps.grouping
    ts = list(mps.tensors)
    for gate in layer:
        locs = [g.locate(q) for q in gate.targets]
        if len({t for t, _ in locs}) != 1:
            raise MPSError(f"gate {gate.kind}{gate.targets} straddles groups")
        t = locs[0][0]
        ts[t] = _apply_on_group(ts[t], len(g.groups[t]), [p for _, p in locs], gate.matrix)
    return mps.replace(ts, mps.ortho_center)


def _split(matrix: np.ndarray, swap: bool):
    u = matrix.reshape(2, 2, 2, 2)  # (o1, o2, i1, i2)
    if swap:
        u = u.transpose(1, 0, 3, 2)
    mat = u.transpose(0, 2, 1, 3).reshape(4, 4)
    w, s, vh = np.linalg.svd(mat)
    k = max(1, int(np.count_nonzero(s > 1e-13 * s[0])))
    a = (w[:, :k] * s[:k]).reshape(2, 2, k)  # (o, i, k)
    b = vh[:k].reshape(k, 2, 2)  # (k, o, i)
    return a, b


def _bond_excess(ts) -> bool:
    for t in range(len(ts) - 1):
        chi = ts[t].shape[2]
        if chi > ts[t].shape[0] * ts[t].shape[1] or chi > ts[t + 1].shape[1] * ts[t + 1].shape[2]:
            return True
    return False


def reduce_bonds(mps: GroupedMPS, force: bool = False) -> GroupedMPS:
    """Exact bond reduction by QR sweeps, done when a bond exceeds its local rank bound."""
    if not force and not _bond_excess(mps.tensors):
        return mps
    ts = list(mps.tensors)
    for t in range(mps.m - 1):
        _move_right(ts, t)
    for t in range(mps.m - 1, 0, -1):
        _move_left(ts, t)
    return mps.replace(ts, 0)


def apply_gate_exact(mps: GroupedMPS, gate: Gate, reduce: bool = True) -> GroupedMPS:
    """Absorb one gate without truncation.

    A gate straddling groups ``ta < tb`` is split into ``sum_k A_k (x) B_k``;
    the split index joins every bond between ``ta`` and ``tb``.
    """
    g = mps.grouping
    if gate.arity == 1 or g.is_internal(gate.targets):
        return apply_internal_gates(mps, [gate])
    (ta, pa), (tb, pb) = g.locate(gate.targets[0]), g.locate(gate.targets[1])
    swap = ta > tb
    if swap:
        (ta, pa), (tb, pb) = (tb, pb), (ta, pa)
    a, b = _split(gate.matrix, swap)
    k = a.shape[2]
    ts = list(mps.tensors)

    x = ts[ta]
    ra = len(g.groups[ta])
    chi_l, d, chi_r = x.shape
    y = np.tensordot(x.reshape((chi_l,) + (2,) * ra + (chi_r,)), a, axes=([1 + pa], [1]))
    y = np.moveaxis(y, -2, 1 + pa)  # (chi_l, 2.., chi_r, k)
    ts[ta] = y.reshape(chi_l, d, chi_r * k)

    eye = np.eye(k, dtype=np.complex128)
    for t in range(ta + 1, tb):
        x = ts[t]
        y = np.einsum("lpr,jk->ljprk", x, eye)
        ts[t] = y.reshape(x.shape[0] * k, x.shape[1], x.shape[2] * k)

    x = ts[tb]
    rb = len(g.groups[tb])
    chi_l, d, chi_r = x.shape
    y = np.tensordot(x.reshape((chi_l,) + (2,) * rb + (chi_r,)), b, axes=([1 + pb], [2]))
    y = np.moveaxis(y, -1, 1 + pb)
    y = np.moveaxis(y, -1, 1)  # (chi_l, k, 2.., chi_r)
    ts[tb] = y.reshape(chi_l * k, d, chi_r)

    out = mps.replace(ts, None)
    return reduce_bonds(out) if reduce else out


def apply_gates_exact(mps: GroupedMPS, gates: Iterable[Gate]) -> GroupedMPS:
    for gate in gates:
        mps = apply_gate_exact(mps, gate)
    return mps


def truncate(mps: GroupedMPS, chi: int, normalize: bool = True) -> tuple[GroupedMPS, float]:
    """Canonical-form SVD truncation of every bond to ``chi``.

    Returns the truncated MPS (center 0) and the kept squared-norm fraction.
    """
    ts = list(canonicalize(mps, mps.m - 1).tensors)
    total = float(np.linalg.norm(ts[-1]) ** 2)
    for t in range(mps.m - 1, 0, -1):
        a = ts[t]
        u, s, vh = np.linalg.svd(a.reshape(a.shape[0], -1), full_matrices=False)
        k = min(chi, len(s))
        ts[t] = vh[:k].reshape(k, a.shape[1], a.shape[2])
        ts[t - 1] = np.tensordot(ts[t - 1], u[:, :k] * s[:k], axes=(2, 0))
    kept = float(np.linalg.norm(ts[0]) ** 2)
    out = mps.replace(ts, 0)
    if normalize:
        out = _normalized(out)
    return out, (kept / total if total > 0 else 0.0)


def pad_bonds(mps: GroupedMPS, bonds: Sequence[int]) -> GroupedMPS:
    """Zero-pad bonds up to the given extents (never shrinks); the state is unchanged."""
    ts = [np.array(t) for t in mps.tensors]
    for i, want in enumerate(bonds):
        have = ts[i].shape[2]
        if want > have:
            ts[i] = np.concatenate(
                [ts[i], np.zeros(ts[i].shape[:2] + (want - have,), dtype=np.complex128)], axis=2)
            ts[i + 1] = np.concatenate(
                [ts[i + 1], np.zeros((want - have,) + ts[i + 1].shape[1:], dtype=np.complex128)], axis=0)
    return mps.replace(ts, None)


def save_mps(mps: GroupedMPS, path, extra: dict | None = None) -> None:
    """Checkpoint as ``.npz``: a JSON header plus one array per tensor.

    ``extra`` is stored in the header verbatim (must be JSON-serializable).
    """
    header = {
        "version": CHECKPOINT_VERSION,
        "grouping": mps.grouping.to_dict(),
        "bond_dims": mps.bond_dims,
        "ortho_center": mps.ortho_center,
        "extra": extra or {},
    }
    arrays = {f"t{i}": t for i, t in enumerate(mps.tensors)}
    with open(Path(path), "wb") as fh:
        np.savez(fh, header=np.array(json.dumps(header)), **arrays)


def read_checkpoint_header(path) -> dict:
    with np.load(Path(path), allow_pickle=False) as z:
        return json.loads(str(z["header"]))


def load_mps(path) -> GroupedMPS:
    with np.load(Path(path), allow_pickle=False) as z:
        header = json.loads(str(z["header"]))
        if header.get("version") != CHECKPOINT_VERSION:
            raise MPSError(f"unsupported checkpoint version {header.get('version')!r}")
        grouping = Grouping.from_dict(header["grouping"])
        ts = tuple(z[f"t{i}"] for i in range(grouping.m))
    mps = GroupedMPS(grouping, ts, header.get("ortho_center"))
    if mps.bond_dims != header["bond_dims"]:
        raise MPSError("checkpoint bond dims do not match its tensors")
    return mps

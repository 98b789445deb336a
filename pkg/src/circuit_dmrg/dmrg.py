"""Single-tensor sweep compression of ``U_layers |source>`` into a chi-bounded MPS.

The evolved state ``phi = U_layers |source>`` is first built exactly as a
larger-bond MPS (gates straddling groups are SVD-split and threaded through
the bonds). Sweeps then maximize ``|<target|phi>|^2`` one tensor at a time:
with the target in mixed-canonical form around ``tau``, the optimum is
``M = F / sqrt(f)`` where ``F`` is the overlap network with ``M`` removed
and ``f = ||F||^2`` is the squared overlap reached.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .gates import Gate
from .mps import (GroupedMPS, MPSError, apply_gate_exact, apply_internal_gates, canonicalize,
                  pad_bonds, random_mps, truncate)

__all__ = [
    "CompressionConfig",
    "CompressionError",
    "INIT_STRATEGIES",
    "SweepTrace",
    "apply_layers_exact",
    "build_environment",
    "compress_step",
    "init_guess",
    "update_tensor",
]

INIT_STRATEGIES = ("TruncatedApply", "RandomMPS")
_MONOTONE_RTOL = 1e-10


class CompressionError(RuntimeError):
    pass


@dataclass(frozen=True)
class CompressionConfig:
    chi: int
    K: int = 1
    n_s: int = 1
    convergence_tol: float | None = None
    init_strategy: str = "TruncatedApply"
    seed: int | None = None

    def __post_init__(self):
        if self.chi < 1 or self.K < 1 or self.n_s < 1:
            raise ValueError(f"need chi, K, n_s >= 1, got {self.chi}, {self.K}, {self.n_s}")
        if self.init_strategy not in INIT_STRATEGIES:
            raise ValueError(f"init_strategy must be one of {INIT_STRATEGIES}")
        if self.convergence_tol is not None and self.convergence_tol < 0:
            raise ValueError("convergence_tol must be >= 0")


@dataclass
class SweepTrace:
    """Partial fidelities in update order: ``(sweep, tau, f)`` rows.

    ``f_init`` is the squared overlap of the initial guess before any update.
    """

    entries: list = field(default_factory=list)
    f_init: float | None = None

    def append(self, sweep: int, tau: int, f: float):
        self.entries.append((sweep, tau, float(f)))

    @property
    def fs(self) -> list[float]:
        return [e[2] for e in self.entries]

    @property
    def n_sweeps(self) -> int:
        return max((e[0] for e in self.entries), default=0)

    def is_monotone(self, rtol: float = _MONOTONE_RTOL) -> bool:
        fs = self.fs
        return all(b >= a * (1 - rtol) for a, b in zip(fs, fs[1:]))

    def rows(self, step: int = 0, n_2g: int | None = None):
        for sweep, tau, f in self.entries:
            if n_2g:
                eps = 1.0 - f ** (1.0 / n_2g)
            else:
                eps = 1.0 - f
            yield {"step": step, "sweep": sweep, "tau": tau, "f": f, "epsilon": eps}

    def to_csv(self, path, step: int = 0, n_2g: int | None = None, append: bool = False):
        """Write ``step,sweep,tau,f,epsilon``; epsilon is per two-qubit gate when ``n_2g`` is given."""
        path = Path(path)
        fresh = not (append and path.exists())
        with open(path, "a" if append else "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["step", "sweep", "tau", "f", "epsilon"])
            if fresh:
                w.writeheader()
            for row in self.rows(step, n_2g):
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def apply_layers_exact(source: GroupedMPS, layers: Sequence[Sequence[Gate]]) -> GroupedMPS:
    mps = source
    for layer in layers:
        for gate in layer:
            mps = apply_gate_exact(mps, gate)
    return mps


def _all_internal(mps: GroupedMPS, layers) -> bool:
    g = mps.grouping
    return all(gate.arity == 1 or g.is_internal(gate.targets) for layer in layers for gate in layer)


def _left_step(env, t, p):
    # env[a, c] with a on the target (bra), c on phi
    tmp = np.tensordot(env, p, axes=(1, 0))  # (a, d, c')
    return np.tensordot(t.conj(), tmp, axes=([0, 1], [0, 1]))


def _right_step(env, t, p):
    # env[b, c'] with b on the target, c' on phi
    tmp = np.tensordot(p, env, axes=(2, 1))  # (c, d, b)
    return np.tensordot(t.conj(), tmp, axes=([1, 2], [1, 2]))


def _environment(left, p, right) -> np.ndarray:
    tmp = np.tensordot(left, p, axes=(1, 0))  # (a, d, c')
    return np.tensordot(tmp, right, axes=(2, 1))  # (a, d, b)


def build_environment(target: GroupedMPS, source: GroupedMPS, layers, tau: int) -> np.ndarray:
    """``F^(tau)``: the network ``<target|U_layers|source>`` with tensor ``tau`` removed.

    Contracting the conjugate of ``target.tensors[tau]`` with the result
    gives the full overlap. The target is used as given; the optimal update
    ``F/sqrt(f)`` needs it canonical around ``tau``.
    """
    if target.grouping.groups != source.grouping.groups:
        raise CompressionError("target and source use different groupings")
    phi = apply_layers_exact(source, layers).tensors
    ts = target.tensors
    left = np.ones((1, 1), dtype=np.complex128)
    for t in range(tau):
        left = _left_step(left, ts[t], phi[t])
    right = np.ones((1, 1), dtype=np.complex128)
    for t in range(target.m - 1, tau, -1):
        right = _right_step(right, ts[t], phi[t])
    return _environment(left, phi[tau], right)


def update_tensor(F: np.ndarray) -> tuple[np.ndarray, float]:
    """Optimal normalized tensor ``F / sqrt(f)`` and ``f = ||F||^2``."""
    F = np.asarray(F, dtype=np.complex128)
    f = float(np.real(np.vdot(F.reshape(-1), F.reshape(-1))))
    if not np.isfinite(f):
        raise CompressionError("environment tensor is not finite")
    if f <= 0.0:
        raise CompressionError("environment tensor vanishes: the target is orthogonal to the "
                               "evolved state; try another init strategy or seed")
    return F / np.sqrt(f), f


def init_guess(source: GroupedMPS, layers, config: CompressionConfig,
               phi: GroupedMPS | None = None) -> GroupedMPS:
    """Starting point for the sweeps.

    ``TruncatedApply`` absorbs the layers gate by gate, truncating every
    bond back to chi after each straddling gate. ``RandomMPS`` draws seeded
    random tensors. Either way bonds are then raised (zero padding) to
    ``min(chi, exact bond of phi)`` so sweeps can use the full budget.
    """
    if phi is None:
        phi = apply_layers_exact(source, layers)
    caps = [min(config.chi, b) for b in phi.bond_dims]
    if config.init_strategy == "RandomMPS":
        return random_mps(source.grouping, caps, config.seed)
    mps = source
    for layer in layers:
        for gate in layer:
            mps = apply_gate_exact(mps, gate)
            if mps.max_bond > config.chi:
                mps, _ = truncate(mps, config.chi)
    if mps.max_bond > config.chi:
        mps, _ = truncate(mps, config.chi)
    return canonicalize(pad_bonds(mps, caps), 0)


def _overlap_sq(target: GroupedMPS, phi_tensors) -> float:
    env = np.ones((1, 1), dtype=np.complex128)
    for t, p in zip(target.tensors, phi_tensors):
        env = _left_step(env, t, p)
    return float(abs(env[0, 0]) ** 2)


def compress_step(source: GroupedMPS, layers, config: CompressionConfig,
                  init: GroupedMPS | None = None):
    """Best chi-bounded approximation of ``U_layers |source>``.

    Returns ``(mps, f_delta, trace)``. Each sweep unit visits tensors
    ``0..m-1`` then ``m-2..0``, moving the orthogonality center by QR and
    caching the partial environments on both sides. ``f_delta`` is the last
    partial fidelity. Layers entirely internal to groups are applied exactly
    with ``f_delta = 1``.
    """
    layers = [tuple(layer) for layer in layers]
    if len(layers) > config.K:
        raise CompressionError(f"{len(layers)} layers given for K={config.K}")
    trace = SweepTrace()
    if _all_internal(source, layers):
        mps = source
        for layer in layers:
            mps = apply_internal_gates(mps, layer)
        trace.f_init = 1.0
        return mps, 1.0, trace

    phi_mps = apply_layers_exact(source, layers)
    phi = phi_mps.tensors
    target = init if init is not None else init_guess(source, layers, config, phi_mps)
    if target.grouping.groups != source.grouping.groups:
        raise CompressionError("init guess uses a different grouping")
    target = canonicalize(target, 0)
    trace.f_init = _overlap_sq(target, phi)

    m = target.m
    ts = [np.array(t) for t in target.tensors]
    one = np.ones((1, 1), dtype=np.complex128)
    lefts = [one] + [None] * (m - 1)
    rights = [None] * (m - 1) + [one]
    for t in range(m - 1, 0, -1):
        rights[t - 1] = _right_step(rights[t], ts[t], phi[t])

    prev = trace.f_init
    last_unit_f = None
    f = prev
    center = 0
    for sweep in range(1, config.n_s + 1):
        order = list(range(0 if sweep == 1 else 1, m)) + list(range(m - 2, -1, -1))
        for tau in order:
            if tau != center:
                # slide the center one site toward tau
                if tau == center + 1:
                    a = ts[center]
                    q, r = np.linalg.qr(a.reshape(-1, a.shape[2]))
                    ts[center] = q.reshape(a.shape[0], a.shape[1], q.shape[1])
                    ts[tau] = np.tensordot(r, ts[tau], axes=(1, 0))
                    lefts[tau] = _left_step(lefts[center], ts[center], phi[center])
                else:
                    a = ts[center]
                    q, r = np.linalg.qr(a.reshape(a.shape[0], -1).T)
                    ts[center] = q.T.reshape(q.shape[1], a.shape[1], a.shape[2])
                    ts[tau] = np.tensordot(ts[tau], r.T, axes=(2, 0))
                    rights[tau] = _right_step(rights[center], ts[center], phi[center])
                center = tau
            F = _environment(lefts[tau], phi[tau], rights[tau])
            ts[tau], f = update_tensor(F)
            if f < prev * (1 - _MONOTONE_RTOL):
                raise CompressionError(f"sweep fidelity decreased from {prev!r} to {f!r} at "
                                       f"sweep {sweep}, tensor {tau}")
            trace.append(sweep, tau, f)
            prev = max(prev, f)
        if config.convergence_tol is not None and last_unit_f is not None:
            if abs(f - last_unit_f) <= config.convergence_tol * f:
                break
        last_unit_f = f
    try:
        out = GroupedMPS(source.grouping, tuple(ts), center)
    except MPSError as exc:
        raise CompressionError(f"inconsistent tensors after sweeps: {exc}") from exc
    return out, f, trace

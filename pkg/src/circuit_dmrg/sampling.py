"""Bitstring samplers: Metropolis over amplitudes and gate-by-gate conditional sampling.

Bitstrings are integers with qubit 0 as the most significant bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .circuit import Circuit
from .exact import DEFAULT_MAX_QUBITS, ExactSimError, apply_gate

__all__ = [
    "MetropolisChain",
    "SamplerError",
    "chain_repetition_rate",
    "conditional_sample",
    "conditional_samples",
    "dense_prefix_oracle",
    "metropolis_sample",
    "read_samples",
    "write_samples",
]


class SamplerError(RuntimeError):
    pass


@dataclass
class MetropolisChain:
    """Kept states and counters of one chain.

    ``aborted`` is set (with ``error``) when an amplitude evaluation failed;
    ``samples`` then holds what was kept before the failure.
    """

    samples: list = field(default_factory=list)
    current: int = 0
    current_prob: float = 0.0
    seed: int | None = None
    L: int = 1
    accepted: int = 0
    proposed: int = 0
    aborted: bool = False
    error: str | None = None

    @property
    def acceptance(self) -> float:
        return self.accepted / self.proposed if self.proposed else 0.0


def metropolis_sample(amplitude_fn: Callable, n_qubits: int, n_samples: int, L: int = 1,
                      seed=None, burn_in: int | None = None, vectorized: bool = False,
                      block: int = 1 << 16) -> MetropolisChain:
    """Metropolis chain with uniform proposals over all ``2^N`` bitstrings.

    A proposal ``y`` replaces the current ``x`` with probability
    ``min(1, |psi_y|^2 / |psi_x|^2)``. The first ``burn_in`` states (default
    ``100 L``) are dropped, then every ``L``-th state is kept. With
    ``vectorized=True`` the amplitude function takes an integer array and is
    called once per block of pre-drawn proposals, which is valid because
    proposals do not depend on the chain state.
    """
    if L < 1:
        raise SamplerError("L must be >= 1")
    if n_samples < 0:
        raise SamplerError("n_samples must be >= 0")
    burn_in = 100 * L if burn_in is None else burn_in
    rng = np.random.default_rng(seed)
    dim = 2 ** n_qubits
    chain = MetropolisChain(seed=seed if isinstance(seed, int) else None, L=L)

    def probs(xs):
        if vectorized:
            return np.abs(np.asarray(amplitude_fn(xs))) ** 2
        return np.array([abs(amplitude_fn(int(x))) ** 2 for x in xs])

    total = burn_in + n_samples * L
    try:
        x = int(rng.integers(dim))
        px = float(probs(np.array([x]))[0])
        chain.current, chain.current_prob = x, px
        step = 0
        while step < total:
            size = min(block, total - step)
            ys = rng.integers(0, dim, size)
            us = rng.random(size)
            pys = probs(ys)
            for y, u, py in zip(ys.tolist(), us.tolist(), pys.tolist()):
                step += 1
                chain.proposed += 1
                if py >= px or u * px < py:
                    x, px = y, py
                    chain.accepted += 1
                if step > burn_in and (step - burn_in) % L == 0:
                    chain.samples.append(x)
            chain.current, chain.current_prob = x, px
    except Exception as exc:  # surfaced through the flag, samples so far are kept
        chain.aborted = True
        chain.error = f"{type(exc).__name__}: {exc}"
    return chain


def chain_repetition_rate(L: int, p_acc: float) -> float:
    """Chance that ``L`` consecutive proposals are all rejected, ``(1 - p_acc)^L``."""
    if L < 1 or not 0.0 <= p_acc <= 1.0:
        raise SamplerError("need L >= 1 and p_acc in [0, 1]")
    return (1.0 - p_acc) ** L


def dense_prefix_oracle(circuit: Circuit, max_qubits: int = DEFAULT_MAX_QUBITS):
    """Amplitude oracle ``fn(p, xs)`` over the state after the first ``p`` gates.

    All prefix states are computed once by dense evolution.
    """
    n = circuit.n_qubits
    if n > max_qubits:
        raise ExactSimError(f"{n} qubits exceeds the dense memory bound of {max_qubits}")
    psi = np.zeros((2,) * n, dtype=np.complex128)
    psi[(0,) * n] = 1.0
    states = [psi.reshape(-1)]
    for g in circuit.gates:
        psi = apply_gate(psi, g)
        states.append(psi.reshape(-1))

    def fn(p, xs):
        return states[p][np.asarray(xs, dtype=np.int64)]

    return fn


def conditional_samples(amplitude_fn_at_depth: Callable, circuit: Circuit, n_samples: int,
                        seed=None) -> np.ndarray:
    """Gate-by-gate sampling, many bitstrings at once.

    Starting from ``0...0``, each gate lets its target bits be resampled from
    the 2 or 4 candidates that agree with the current bitstring elsewhere,
    weighted by ``|psi_p(candidate)|^2`` at that gate prefix. If the current
    string is distributed as the prefix state, so is the updated one.
    """
    n = circuit.n_qubits
    rng = np.random.default_rng(seed)
    x = np.zeros(n_samples, dtype=np.int64)
    rows = np.arange(n_samples)
    for p, g in enumerate(circuit.gates, start=1):
        masks = [1 << (n - 1 - q) for q in g.targets]
        base = x & ~np.int64(sum(masks))
        if len(masks) == 1:
            offsets = np.array([0, masks[0]], dtype=np.int64)
        else:
            a, b = masks
            offsets = np.array([0, b, a, a | b], dtype=np.int64)
        cands = base[:, None] | offsets[None, :]
        w = np.abs(np.asarray(amplitude_fn_at_depth(p, cands.reshape(-1)))) ** 2
        w = w.reshape(cands.shape)
        tot = w.sum(axis=1)
        if np.any(tot <= 0):
            raise SamplerError(f"all candidate probabilities vanish at gate {p} ({g.kind}{g.targets})")
        cum = np.cumsum(w, axis=1)
        u = rng.random(n_samples) * tot
        pick = np.minimum((cum < u[:, None]).sum(axis=1), len(offsets) - 1)
        x = cands[rows, pick]
    return x


def conditional_sample(amplitude_fn_at_depth: Callable, circuit: Circuit, seed=None) -> int:
    return int(conditional_samples(amplitude_fn_at_depth, circuit, 1, seed)[0])


def write_samples(path, samples, n_qubits: int, header: dict | None = None) -> None:
    """One bitstring per line (qubit 0 first); ``# key: value`` header lines."""
    lines = [f"# {k}: {v}" for k, v in (header or {}).items()]
    lines += [format(int(x), f"0{n_qubits}b") for x in samples]
    Path(path).write_text("\n".join(lines) + "\n")


def read_samples(path) -> tuple[list[int], dict]:
    header, samples = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            header[key.strip()] = value.strip()
        elif line.strip():
            samples.append(int(line.strip(), 2))
    return samples, header

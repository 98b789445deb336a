"""Fidelity, error-rate and cross-entropy metrics plus analytic references."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .exact import StateVector

__all__ = [
    "CSV_COLUMNS",
    "FidelityRecord",
    "MetricError",
    "chaotic_optimum_error",
    "chaotic_optimum_fidelity",
    "check_sqrtF_relation",
    "error_rate",
    "fidelity",
    "haar_reference_moments",
    "quadrant_scaling_g",
    "xeb_estimate",
    "xeb_exact",
]

CSV_COLUMNS = ("circuit_id", "mode", "chi", "K", "n_s", "grouping", "D", "N_2g",
               "F", "F_tilde", "F_B", "eps", "eps_tilde")


class MetricError(ValueError):
    pass


def fidelity(a: StateVector, b: StateVector) -> float:
    """``|<a|b>|^2``."""
    if a.n_qubits != b.n_qubits:
        raise MetricError(f"state sizes differ: {a.n_qubits} vs {b.n_qubits} qubits")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def error_rate(F: float, n_2g: int) -> float:
    """Per-two-qubit-gate error ``1 - F**(1/N_2g)``.

    Fidelities above 1 by rounding (up to 1e-9) count as exactly 1.
    """
    if not F > 0:
        raise MetricError(f"fidelity must be positive, got {F}")
    if F > 1.0 + 1e-9:
        raise MetricError(f"fidelity must be <= 1, got {F}")
    if n_2g < 1:
        raise MetricError("N_2g must be >= 1")
    return float(-math.expm1(math.log(min(F, 1.0)) / n_2g))


def _check_table(p, name):
    p = np.asarray(p, dtype=float).reshape(-1)
    if abs(p.sum() - 1.0) > 1e-8:
        raise MetricError(f"{name} sums to {p.sum()!r}, not 1")
    n = p.size.bit_length() - 1
    if p.size != 2 ** n:
        raise MetricError(f"{name} has {p.size} entries, not a power of two")
    return p


def xeb_exact(P, Q) -> float:
    """``2^N sum_x P(x) Q(x) - 1``."""
    P, Q = _check_table(P, "P"), _check_table(Q, "Q")
    if P.size != Q.size:
        raise MetricError("probability tables differ in size")
    return float(P.size * np.dot(P, Q) - 1.0)


def xeb_estimate(P, samples: Sequence[int], n_qubits: int | None = None) -> float:
    """``(2^N / N_s) sum_a P(x_a) - 1`` over sampled bitstrings.

    ``P`` is a probability table or a callable mapping an integer array of
    bitstrings to probabilities (then ``n_qubits`` is required).
    """
    xs = np.asarray(samples, dtype=np.int64).reshape(-1)
    if xs.size == 0:
        raise MetricError("no samples")
    if callable(P):
        if n_qubits is None:
            raise MetricError("n_qubits is required with a probability oracle")
        probs = np.asarray(P(xs), dtype=float)
        dim = 2 ** n_qubits
    else:
        table = np.asarray(P, dtype=float).reshape(-1)
        probs, dim = table[xs], table.size
    return float(dim * probs.mean() - 1.0)


def chaotic_optimum_error(N: int, D: int, chi: int) -> float:
    """``(1/D) (log 2 - log(4 chi) / (2 N))``."""
    if N <= 0 or D <= 0 or chi <= 0:
        raise MetricError("N, D and chi must be positive")
    return (math.log(2) - math.log(4 * chi) / (2 * N)) / D


def chaotic_optimum_fidelity(N: int, chi: int) -> float:
    """Best two-tensor MPS fidelity of a Porter-Thomas state, ``4 chi / 2^(N/2)``."""
    if N <= 0 or chi <= 0:
        raise MetricError("N and chi must be positive")
    return 4.0 * chi / 2.0 ** (N / 2)


def _area_inverse(y: float) -> float:
    if y <= 0:
        return 0.0
    if y >= math.pi:
        return math.pi
    return brentq(lambda t: t - math.sin(t) - y, 0.0, math.pi, xtol=1e-14, rtol=1e-15)


def quadrant_scaling_g(x):
    """Limiting rescaled Schmidt profile ``g(x) = 2 cos(A^{-1}(pi x) / 2)``, ``A(t) = t - sin t``."""
    arr = np.asarray(x, dtype=float)
    if np.any((arr < 0) | (arr > 1)) or np.any(~np.isfinite(arr)):
        raise MetricError("g(x) is defined on [0, 1]")
    out = np.vectorize(lambda v: 2.0 * math.cos(0.5 * _area_inverse(math.pi * v)))(arr)
    return float(out) if np.ndim(x) == 0 else out


def haar_reference_moments(N: int) -> tuple[float, float, float]:
    """``(<F>, <F_B>, <F_B^2>)`` for two independent Haar-random states."""
    if N < 1:
        raise MetricError("N must be >= 1")
    dim = 2.0 ** N
    return 1.0 / dim, 0.0, (dim - 1.0) / (dim + 1.0) ** 2


def check_sqrtF_relation(F: float, F_B: float) -> dict:
    """Diagnostic for ``F_B ~ sqrt(F)``: relative deviation and ratio, no verdict."""
    if F < 0:
        raise MetricError("F must be >= 0")
    root = math.sqrt(F)
    if root == 0:
        return {"sqrt_F": 0.0, "ratio": math.inf, "deviation": math.inf}
    return {"sqrt_F": root, "ratio": F_B / root, "deviation": abs(F_B - root) / root}


@dataclass
class FidelityRecord:
    """One result row; ``F`` is only known when a dense oracle was run."""

    F_tilde: float
    N_2g: int
    F: float | None = None
    F_B: float | None = None

    @property
    def eps(self):
        return _rate_or_none(self.F, self.N_2g)

    @property
    def eps_tilde(self):
        return _rate_or_none(self.F_tilde, self.N_2g)

    @property
    def eps_B(self):
        return _rate_or_none(self.F_B, self.N_2g)

    def as_dict(self) -> dict:
        out = asdict(self)
        out.update(eps=self.eps, eps_tilde=self.eps_tilde, eps_B=self.eps_B)
        return out


def _rate_or_none(F, n_2g):
    if F is None or not 0 < F <= 1.0 + 1e-9:
        return None
    if n_2g == 0:
        return 0.0
    return error_rate(F, n_2g)

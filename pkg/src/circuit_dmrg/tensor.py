"""Dense complex tensors and the splitting/contraction primitives.

Every tensor is a complex128 array in row-major layout over its declared
dims. Reshapes reinterpret that layout; transposes are always explicit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "DenseTensor",
    "IndexMap",
    "TensorError",
    "as_tensor",
    "contract",
    "norm2",
    "reshape",
    "split_qr",
    "split_svd",
]


class TensorError(ValueError):
    """Raised on malformed tensor operations (bad axes, extents, sizes)."""


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=np.complex128, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DenseTensor:
    """Immutable labeled complex tensor.

    ``data`` is a read-only ``complex128`` array; ``labels`` are optional
    opaque index tags carried along but never interpreted.
    """

    data: np.ndarray
    labels: tuple | None = field(default=None)

    def __post_init__(self):
        arr = self.data
        if not (isinstance(arr, np.ndarray) and arr.dtype == np.complex128
                and not arr.flags.writeable):
            arr = _frozen(arr)
            object.__setattr__(self, "data", arr)
        if arr.ndim == 0:
            raise TensorError("a tensor needs at least one index")
        if any(d < 1 for d in arr.shape):
            raise TensorError(f"all extents must be >= 1, got {arr.shape}")
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != arr.ndim:
                raise TensorError(
                    f"{len(labels)} labels given for a rank-{arr.ndim} tensor")
            object.__setattr__(self, "labels", labels)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def rank(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    def conj(self) -> "DenseTensor":
        return DenseTensor(self.data.conj(), self.labels)

    def transpose(self, axes: Sequence[int]) -> "DenseTensor":
        labels = None if self.labels is None else tuple(self.labels[a] for a in axes)
        return DenseTensor(np.transpose(self.data, axes), labels)

    def __mul__(self, scalar) -> "DenseTensor":
        return DenseTensor(self.data * scalar, self.labels)

    __rmul__ = __mul__

    def allclose(self, other: "DenseTensor", atol: float = 1e-12) -> bool:
        return self.dims == other.dims and np.allclose(self.data, other.data, atol=atol)


def as_tensor(value) -> DenseTensor:
    if isinstance(value, DenseTensor):
        return value
    return DenseTensor(np.asarray(value, dtype=np.complex128))


@dataclass(frozen=True)
class IndexMap:
    """Grouping of a tensor's axes into a row meta-index and a column meta-index.

    The row index runs row-major over ``row_axes`` (in the given order), the
    column index row-major over ``col_axes``. ``strides`` hold the row-major
    weights of each axis inside its meta-index.
    """

    dims: tuple[int, ...]
    row_axes: tuple[int, ...]
    col_axes: tuple[int, ...]

    @classmethod
    def from_left(cls, dims: Sequence[int], left_axes: Iterable[int]) -> "IndexMap":
        dims = tuple(int(d) for d in dims)
        left = _check_left_axes(len(dims), left_axes)
        right = tuple(a for a in range(len(dims)) if a not in left)
        return cls(dims, left, right)

    @property
    def row_dims(self) -> tuple[int, ...]:
        return tuple(self.dims[a] for a in self.row_axes)

    @property
    def col_dims(self) -> tuple[int, ...]:
        return tuple(self.dims[a] for a in self.col_axes)

    @property
    def shape(self) -> tuple[int, int]:
        return int(np.prod(self.row_dims)), int(np.prod(self.col_dims))

    @property
    def strides(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        def weights(ds):
            w, acc = [], 1
            for d in reversed(ds):
                w.append(acc)
                acc *= d
            return tuple(reversed(w))
        return weights(self.row_dims), weights(self.col_dims)

    def to_matrix(self, data: np.ndarray) -> np.ndarray:
        return np.transpose(data, self.row_axes + self.col_axes).reshape(self.shape)

    def pair(self, multi_index: Sequence[int]) -> tuple[int, int]:
        """Meta-index pair ``(i, j)`` of an original multi-index."""
        rs, cs = self.strides
        i = sum(multi_index[a] * s for a, s in zip(self.row_axes, rs))
        j = sum(multi_index[a] * s for a, s in zip(self.col_axes, cs))
        return i, j


def _check_left_axes(ndim: int, left_axes: Iterable[int]) -> tuple[int, ...]:
    left = tuple(int(a) for a in left_axes)
    if len(set(left)) != len(left):
        raise TensorError(f"repeated axes in {left}")
    for a in left:
        if not 0 <= a < ndim:
            raise TensorError(f"axis {a} out of range for rank-{ndim} tensor")
    if not 0 < len(left) < ndim:
        raise TensorError("left_axes must be a proper nonempty subset of the axes")
    return left


def contract(a, b, pairs: Sequence[tuple[int, int]]) -> DenseTensor:
    """Sum over paired axes of ``a`` and ``b``.

    Result axes are the unpaired axes of ``a`` followed by the unpaired axes
    of ``b``, each in their original order.
    """
    a, b = as_tensor(a), as_tensor(b)
    axes_a, axes_b = [], []
    for ia, ib in pairs:
        if not 0 <= ia < a.rank:
            raise TensorError(f"axis {ia} out of range for first operand of rank {a.rank}")
        if not 0 <= ib < b.rank:
            raise TensorError(f"axis {ib} out of range for second operand of rank {b.rank}")
        if a.dims[ia] != b.dims[ib]:
            raise TensorError(
                f"extent mismatch on pair ({ia}, {ib}): {a.dims[ia]} != {b.dims[ib]}")
        axes_a.append(ia)
        axes_b.append(ib)
    if len(set(axes_a)) != len(axes_a) or len(set(axes_b)) != len(axes_b):
        raise TensorError("an axis appears in more than one pair")
    out = np.tensordot(a.data, b.data, axes=(axes_a, axes_b))
    if out.ndim == 0:
        out = out.reshape(1)
    labels = None
    if a.labels is not None and b.labels is not None:
        labels = tuple(l for i, l in enumerate(a.labels) if i not in axes_a) + \
            tuple(l for i, l in enumerate(b.labels) if i not in axes_b)
        if not labels:
            labels = None
    return DenseTensor(out, labels)


def reshape(t, new_dims: Sequence[int]) -> DenseTensor:
    t = as_tensor(t)
    new_dims = tuple(int(d) for d in new_dims)
    if int(np.prod(new_dims)) != t.size:
        raise TensorError(f"cannot reshape {t.dims} into {new_dims}")
    return DenseTensor(t.data.reshape(new_dims))


def norm2(t) -> float:
    """Sum of squared magnitudes."""
    data = t.data if isinstance(t, DenseTensor) else np.asarray(t)
    flat = data.reshape(-1)
    return float(np.real(np.vdot(flat, flat)))


def split_svd(t, left_axes: Iterable[int], max_rank: int | None = None,
              cutoff: float | None = None):
    """Factor ``t`` as ``U · diag(S) · V`` across the ``left_axes`` cut.

    ``U`` has dims (left dims..., k) and ``V`` has dims (k, right dims...).
    Truncation keeps at most ``max_rank`` values, then drops every value with
    ``S[k] / S[0] < cutoff``.
    """
    t = as_tensor(t)
    imap = IndexMap.from_left(t.dims, left_axes)
    mat = imap.to_matrix(t.data)
    try:
        u, s, vh = np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise TensorError(f"SVD failed on a {mat.shape} matrix: {exc}") from exc
    if not np.all(np.isfinite(s)):
        raise TensorError("SVD produced non-finite singular values")
    k = len(s)
    if max_rank is not None:
        if max_rank < 1:
            raise TensorError("max_rank must be >= 1")
        k = min(k, int(max_rank))
    if cutoff is not None and s[0] > 0:
        k = max(1, min(k, int(np.count_nonzero(s[:k] / s[0] >= cutoff))))
    u = u[:, :k].reshape(imap.row_dims + (k,))
    vh = vh[:k, :].reshape((k,) + imap.col_dims)
    return DenseTensor(u), np.array(s[:k]), DenseTensor(vh)


def split_qr(t, left_axes: Iterable[int]):
    """Factor ``t`` as ``Q · R`` with ``Q`` isometric over the left meta-index."""
    t = as_tensor(t)
    imap = IndexMap.from_left(t.dims, left_axes)
    q, r = np.linalg.qr(imap.to_matrix(t.data))
    k = q.shape[1]
    return (DenseTensor(q.reshape(imap.row_dims + (k,))),
            DenseTensor(r.reshape((k,) + imap.col_dims)))

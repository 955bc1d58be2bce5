"""Small dense matrix algebra: determinants, cofactors, minors of 6x2 stacks."""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

J = np.array([[0.0, -1.0], [1.0, 0.0]])
J.setflags(write=False)

# 1-based (i, j) row pairs of a 6x2 matrix, lexicographic
MINOR_INDICES = tuple(combinations(range(1, 7), 2))

RANK_RTOL = 1e-9


def _as_square(M):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or not 2 <= M.shape[0] <= 4:
        raise ValueError(f"expected an n x n matrix with 2 <= n <= 4, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def _det(M):
    n = M.shape[0]
    if n == 2:
        return M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    total = 0.0
    for j in range(n):
        if M[0, j] == 0.0:
            continue
        sub = np.delete(M[1:], j, axis=1)
        total += (-1) ** j * M[0, j] * _det(sub)
    return total


def det(M):
    """Determinant by cofactor expansion along the first row (n <= 4)."""
    return float(_det(_as_square(M)))


def cof_t(M):
    """Cofactor matrix, i.e. the transpose of the adjugate.

    ``M @ cof_t(M).T == det(M) * I``, and for 2x2 input
    ``cof_t(X) @ J == J @ X``.
    """
    M = _as_square(M)
    n = M.shape[0]
    if n == 2:
        return np.array([[M[1, 1], -M[1, 0]], [-M[0, 1], M[0, 0]]])
    out = np.empty_like(M)
    for i in range(n):
        for j in range(n):
            sub = np.delete(np.delete(M, i, axis=0), j, axis=1)
            out[i, j] = (-1) ** (i + j) * _det(sub)
    return out


def cof(M):
    """Adjugate: ``M @ cof(M) == cof(M) @ M == det(M) * I``."""
    return cof_t(M).T


def det2(M):
    """Vectorised 2x2 determinant over leading axes of an (..., 2, 2) array."""
    M = np.asarray(M, dtype=float)
    return M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]


@dataclass(frozen=True)
class Stacked62:
    """A 6x2 matrix seen as three 2x2 blocks (rows 1-2, 3-4, 5-6)."""

    top: np.ndarray
    mid: np.ndarray
    bot: np.ndarray

    def __post_init__(self):
        for name in ("top", "mid", "bot"):
            block = np.array(getattr(self, name), dtype=float)
            if block.shape != (2, 2):
                raise ValueError(f"{name} block must be 2x2, got {block.shape}")
            block.setflags(write=False)
            object.__setattr__(self, name, block)

    @classmethod
    def from_array(cls, A):
        A = np.asarray(A, dtype=float)
        if A.shape != (6, 2):
            raise ValueError(f"expected a 6x2 matrix, got {A.shape}")
        return cls(A[0:2], A[2:4], A[4:6])

    @property
    def array(self):
        return np.vstack([self.top, self.mid, self.bot])

    def __array__(self, dtype=None, copy=None):
        out = self.array
        return out if dtype is None else out.astype(dtype)

    def __sub__(self, other):
        return Stacked62.from_array(self.array - np.asarray(other))

    def __add__(self, other):
        return Stacked62.from_array(self.array + np.asarray(other))


def minor_det(A, idx):
    """Determinant of the 2x2 submatrix formed by rows ``i`` and ``j`` (1-based).

    ``A`` may be a :class:`Stacked62` or any (..., 6, 2) array; the minor is
    taken over the last two axes.
    """
    i, j = idx
    if not 1 <= i < j <= 6:
        raise ValueError(f"minor index must satisfy 1 <= i < j <= 6, got {idx}")
    A = np.asarray(A, dtype=float)
    r, s = A[..., i - 1, :], A[..., j - 1, :]
    return r[..., 0] * s[..., 1] - r[..., 1] * s[..., 0]


def all_minors(A):
    """All 15 row-pair minors of a (..., 6, 2) array, last axis ordered as MINOR_INDICES."""
    A = np.asarray(A, dtype=float)
    return np.stack([minor_det(A, idx) for idx in MINOR_INDICES], axis=-1)


def _normalize_sign(n):
    for k in range(n.size):
        if abs(n[k]) > 1e-12:
            return -1.0 if n[k] < 0 else 1.0
    return 1.0


def rank_one_gap(A, B):
    """Numerical rank of ``B - A`` and, in the rank-one case, its factors.

    Returns ``(rank, factors)``; ``factors`` is ``(a, n)`` with ``|n| = 1`` and
    ``B - A = outer(a, n)`` when the rank is one, otherwise ``None``. The first
    non-negligible entry of ``n`` is positive.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    D = B - A
    U, s, Vt = np.linalg.svd(D)
    thresh = RANK_RTOL * (s[0] + 1.0)
    rank = int(np.sum(s >= thresh))
    if rank != 1:
        return rank, None
    a = s[0] * U[:, 0]
    n = Vt[0].copy()
    sign = _normalize_sign(n)
    return 1, (sign * a, sign * n)

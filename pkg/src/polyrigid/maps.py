"""Named smooth test maps on [-1, 1]^2 with their exact gradients."""

import numpy as np

from .grid import GridField2, node_coords

# dyadic entries, det = 1: finite differences of this map are exact in floating point
AFFINE_A = np.array([[1.5, 0.5], [0.25, 0.75]])

SHEAR_A, SHEAR_B = 0.3, 0.4


def affine(A=AFFINE_A):
    A = np.asarray(A, dtype=float)

    def u(X, Y):
        return A[0, 0] * X + A[0, 1] * Y, A[1, 0] * X + A[1, 1] * Y

    def du(X, Y):
        return np.broadcast_to(A, X.shape + (2, 2)).copy()

    return u, du


def shear():
    """Composition of two shears: ``det Du = 1`` identically."""
    a, b = SHEAR_A, SHEAR_B

    def u(X, Y):
        p = X + a * np.sin(Y)
        return p, Y + b * np.sin(p)

    def du(X, Y):
        p = X + a * np.sin(Y)
        out = np.empty(X.shape + (2, 2))
        out[..., 0, 0] = 1.0
        out[..., 0, 1] = a * np.cos(Y)
        out[..., 1, 0] = b * np.cos(p)
        out[..., 1, 1] = 1.0 + a * b * np.cos(p) * np.cos(Y)
        return out

    return u, du


def nonconst_det():
    """``u = (x, (1 + x^2) y)`` with ``det Du = 1 + x^2``."""

    def u(X, Y):
        return X.copy(), (1.0 + X**2) * Y

    def du(X, Y):
        out = np.zeros(X.shape + (2, 2))
        out[..., 0, 0] = 1.0
        out[..., 1, 0] = 2.0 * X * Y
        out[..., 1, 1] = 1.0 + X**2
        return out

    return u, du


MAPS = {"affine": affine, "shear": shear, "nonconst-det": nonconst_det}


def sample(name_or_pair, cells, lo=-1.0, hi=1.0):
    """Sample a named map on ``cells`` x ``cells`` cells; returns ``(u_field, exact_Du_field)``."""
    if isinstance(name_or_pair, str):
        try:
            u, du = MAPS[name_or_pair]()
        except KeyError:
            raise ValueError(f"unknown map {name_or_pair!r}; choose one of {sorted(MAPS)}") from None
    else:
        u, du = name_or_pair
    h = (hi - lo) / cells
    X, Y = node_coords(cells + 1, cells + 1, h, (lo, lo))
    u1, u2 = u(X, Y)
    return GridField2(np.stack([u1, u2], -1), h, (lo, lo)), GridField2(du(X, Y), h, (lo, lo))

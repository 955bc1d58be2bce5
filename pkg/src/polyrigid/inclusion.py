"""Lifts of 2x2 matrices into the stationarity set and membership surrogates.

The set in question consists of the 6x2 matrices

    ( X ; g'(det X) X ; h(det X) J ),   h(t) = g'(t) t - g(t).

There is no closed form for the Euclidean distance to it. The fiber residual
below is exactly zero on the set and is what the rest of the package uses as
the membership metric; it is *not* the distance.
"""

from dataclasses import dataclass

import numpy as np

from .algebra import J, Stacked62, det2
from .integrand import h_eval

DESCENT_STEP = 0.5
DESCENT_SHRINK = 0.5
DESCENT_SHRINKS = 40


@dataclass(frozen=True)
class LiftedMatrix:
    value: Stacked62
    source: np.ndarray
    det_source: float


@dataclass(frozen=True)
class FiberResidual:
    r_mid: float
    r_bot: float

    @property
    def total(self):
        return self.r_mid + self.r_bot


def lift(gi, X):
    X = np.array(X, dtype=float)
    d = float(det2(X))
    value = Stacked62(X, float(gi.g1(d)) * X, h_eval(gi, d) * J)
    return LiftedMatrix(value=value, source=X, det_source=d)


def lift4(gi, X):
    """(X ; g'(det X) X) as a 4x2 array."""
    X = np.asarray(X, dtype=float)
    return np.vstack([X, float(gi.g1(det2(X))) * X])


def lift_array(gi, X):
    """Vectorised lift of an (..., 2, 2) array to (..., 6, 2)."""
    X = np.asarray(X, dtype=float)
    d = det2(X)
    mid = np.asarray(gi.g1(d))[..., None, None] * X
    bot = np.asarray(h_eval(gi, d))[..., None, None] * J
    return np.concatenate([X, mid, np.broadcast_to(bot, X.shape)], axis=-2)


def fiber_residual(gi, A):
    A = Stacked62.from_array(np.asarray(A))
    d = float(det2(A.top))
    r_mid = np.linalg.norm(A.mid - float(gi.g1(d)) * A.top)
    r_bot = np.linalg.norm(A.bot - h_eval(gi, d) * J)
    return FiberResidual(float(r_mid), float(r_bot))


def fiber_residual_array(gi, A):
    """Vectorised total fiber residual over the leading axes of (..., 6, 2)."""
    A = np.asarray(A, dtype=float)
    top, mid, bot = A[..., 0:2, :], A[..., 2:4, :], A[..., 4:6, :]
    d = det2(top)
    r_mid = np.linalg.norm(mid - np.asarray(gi.g1(d))[..., None, None] * top, axis=(-2, -1))
    r_bot = np.linalg.norm(bot - np.asarray(h_eval(gi, d))[..., None, None] * J, axis=(-2, -1))
    return r_mid + r_bot


def _coordinate_search(objective, x0):
    x = x0.copy()
    fx = objective(x)
    step = DESCENT_STEP
    for _ in range(DESCENT_SHRINKS):
        improved = True
        while improved:
            improved = False
            for k in range(x.size):
                for sgn in (1.0, -1.0):
                    trial = x.copy()
                    trial[k] += sgn * step
                    ft = objective(trial)
                    if ft < fx:
                        x, fx, improved = trial, ft, True
        step *= DESCENT_SHRINK
    return fx


def distance_estimate(gi, A, multistart=1, rng=None):
    """Upper bound on the distance from ``A`` to the set, by derivative-free descent.

    The first run starts at ``A.top``, so the result never exceeds
    ``|A - lift(A.top)|_F``. Further starts perturb ``A.top`` entrywise by
    ``U[-1, 1] * (1 + |A.top|)``; with a fixed ``rng`` seed the starts for
    ``k`` runs are a prefix of those for ``k + 1``.
    """
    if multistart < 1:
        raise ValueError("multistart must be >= 1")
    A = np.asarray(A, dtype=float)
    if A.shape != (6, 2):
        raise ValueError(f"expected a 6x2 matrix, got {A.shape}")
    rng = np.random.default_rng(rng)
    top = A[0:2].ravel()

    def objective(x):
        return float(np.linalg.norm(A - lift_array(gi, x.reshape(2, 2))))

    scale = 1.0 + np.linalg.norm(top)
    starts = [top] + [top + scale * rng.uniform(-1.0, 1.0, size=4) for _ in range(multistart - 1)]
    return min(_coordinate_search(objective, x0) for x0 in starts)

"""Strictly convex integrands g with g(0) = g'(0) = 0 and the function h = g't - g."""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

ROOT_TOL = 1e-12
BISECTION_CAP = 200
NORMALIZATION_TOL = 1e-14
FD_EPS = 1e-5
FD_TOL = 1e-5


@dataclass(frozen=True)
class ConvexIntegrand:
    """Value, first and second derivative of a scalar integrand.

    The evaluators must accept numpy arrays. Construction fails unless
    ``g(0) == 0`` and ``g1(0) == 0``.
    """

    g: Callable
    g1: Callable
    g2: Callable
    label: str = "custom"

    def __post_init__(self):
        if self.g(0.0) != 0.0 or self.g1(0.0) != 0.0:
            raise ValueError(
                f"integrand {self.label!r} is not normalized: "
                f"g(0) = {self.g(0.0)!r}, g'(0) = {self.g1(0.0)!r}"
            )

    def h(self, t):
        return h_eval(self, t)


def _quad():
    return ConvexIntegrand(
        g=lambda t: np.square(t),
        g1=lambda t: 2.0 * np.asarray(t, dtype=float),
        g2=lambda t: np.full_like(np.asarray(t, dtype=float), 2.0),
        label="quad",
    )


def _cosh():
    return ConvexIntegrand(
        g=lambda t: np.cosh(t) - 1.0,
        g1=lambda t: np.sinh(t),
        g2=lambda t: np.cosh(t),
        label="cosh",
    )


def _quartic():
    return ConvexIntegrand(
        g=lambda t: np.square(t) + np.power(t, 4) / 12.0,
        g1=lambda t: 2.0 * np.asarray(t, dtype=float) + np.power(t, 3) / 3.0,
        g2=lambda t: 2.0 + np.square(t),
        label="quartic",
    )


def _quartic_pure():
    # violates strict convexity at 0; kept so hp_check has a failing case
    return ConvexIntegrand(
        g=lambda t: np.power(t, 4),
        g1=lambda t: 4.0 * np.power(t, 3),
        g2=lambda t: 12.0 * np.square(t),
        label="quartic-pure",
    )


BUILTINS = {
    "quad": _quad,
    "cosh": _cosh,
    "quartic": _quartic,
    "quartic-pure": _quartic_pure,
}


def get_integrand(label):
    try:
        return BUILTINS[label]()
    except KeyError:
        raise ValueError(
            f"unknown integrand {label!r}; choose one of {sorted(BUILTINS)}"
        ) from None


@dataclass
class HPReport:
    passed: bool
    witnesses: list = field(default_factory=list)


def hp_check(gi, interval, samples):
    """Sample-based check of strict convexity, normalization and derivative consistency.

    Only finitely many points are examined, so a pass is evidence on
    ``interval``, not a proof over the real line. Each witness is a
    ``(t, reason)`` pair.

    Raises
    ------
    ValueError
        If the bounds are invalid or the integrand returns non-finite values.
    """
    lo, hi = map(float, interval)
    if not lo < hi:
        raise ValueError("interval must satisfy lo < hi")
    if samples < 3:
        raise ValueError("need at least 3 samples")

    t = np.linspace(lo, hi, samples)
    vals = [np.asarray(f(t), dtype=float) for f in (gi.g, gi.g1, gi.g2)]
    g0, g10 = float(gi.g(0.0)), float(gi.g1(0.0))
    if not all(np.all(np.isfinite(v)) for v in vals) or not np.isfinite([g0, g10]).all():
        raise ValueError(f"integrand {gi.label!r} produced non-finite values")
    g, g1, g2 = vals

    witnesses = []
    if abs(g0) > NORMALIZATION_TOL:
        witnesses.append((0.0, "g(0) != 0"))
    if abs(g10) > NORMALIZATION_TOL:
        witnesses.append((0.0, "g'(0) != 0"))
    for tk in t[g2 <= 0.0]:
        witnesses.append((float(tk), "g'' <= 0"))

    inner = t[1:-1]
    fd1 = (gi.g(inner + FD_EPS) - gi.g(inner - FD_EPS)) / (2 * FD_EPS)
    fd2 = (gi.g1(inner + FD_EPS) - gi.g1(inner - FD_EPS)) / (2 * FD_EPS)
    for tk in inner[np.abs(fd1 - g1[1:-1]) > FD_TOL]:
        witnesses.append((float(tk), "g' inconsistent with g"))
    for tk in inner[np.abs(fd2 - g2[1:-1]) > FD_TOL]:
        witnesses.append((float(tk), "g'' inconsistent with g'"))

    return HPReport(passed=not witnesses, witnesses=witnesses)


def h_eval(gi, t):
    """h(t) = g'(t) t - g(t); zero at the origin, increasing in |t|."""
    t = np.asarray(t, dtype=float)
    out = gi.g1(t) * t - gi.g(t)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class FiberRoots:
    roots: tuple
    level: float


def _bisect(gi, level, lo, hi):
    # h is monotone on [lo, hi]; f(lo) and f(hi) bracket zero
    f_lo = h_eval(gi, lo) - level
    best, best_err = lo, abs(f_lo)
    for _ in range(BISECTION_CAP):
        mid = 0.5 * (lo + hi)
        f_mid = h_eval(gi, mid) - level
        if abs(f_mid) < best_err:
            best, best_err = mid, abs(f_mid)
        if best_err <= ROOT_TOL or mid in (lo, hi):
            break
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return best


def h_inverse_fiber(gi, level, bracket):
    """All t in [-bracket, bracket] with h(t) = level (at most one per half-line).

    Raises
    ------
    ValueError
        ``"bracket too small"`` when ``h(+-bracket) < level``.
    """
    level = float(level)
    if bracket <= 0:
        raise ValueError("bracket must be positive")
    if level == 0.0:
        return FiberRoots((0.0,), level)
    if level < 0.0:
        return FiberRoots((), level)
    if h_eval(gi, -bracket) < level or h_eval(gi, bracket) < level:
        raise ValueError(f"bracket too small: h(+-{bracket}) < {level}")
    neg = _bisect(gi, level, -bracket, 0.0)
    pos = _bisect(gi, level, 0.0, bracket)
    return FiberRoots((neg, pos), level)


def auto_bracket(gi, level, start=1.0, cap=2.0**20):
    """Smallest power-of-two multiple of ``start`` enclosing both roots of h = level."""
    b = start
    while h_eval(gi, -b) < level or h_eval(gi, b) < level:
        b *= 2.0
        if b > cap:
            raise ValueError(f"no bracket up to {cap} reaches level {level}")
    return b


def convexity_gap(gi, L, samples=2001):
    """Minimum of g'' on a dense sample of [-L, L].

    Also checks ``g'(t) t >= alpha t**2`` at each sample, which follows from
    the mean value theorem when alpha bounds g'' from below.
    """
    if L <= 0:
        raise ValueError("L must be positive")
    if samples % 2 == 0:
        samples += 1  # keep t = 0 on the grid
    t = np.linspace(-L, L, samples)
    alpha = float(np.min(gi.g2(t)))
    lhs = gi.g1(t) * t
    rhs = alpha * t * t
    if np.any(lhs < rhs - 1e-12 * (1.0 + np.abs(rhs))):
        raise ArithmeticError("g'(t) t >= alpha t^2 violated on the sample grid")
    return alpha

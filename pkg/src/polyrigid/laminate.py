"""Simple laminates with unit determinant on the unit disc.

Given ``det A = det B = 1`` and ``B - A = a (x) n``, the map

    u(x) = C x + a S(N x.n) / N * chi(|x|),   C = lam A + (1 - lam) B,

has ``Du`` equal to ``A`` or ``B`` wherever ``chi = 1``. ``S`` is a 1-periodic
zero-mean sawtooth with slope ``-(1 - lam)`` on a ``lam`` fraction of each
period (the ``A`` phase) and slope ``lam`` on the rest (the ``B`` phase).
``chi`` is the radial cutoff equal to 1 for ``|x| <= 1 - collar`` and
decaying linearly to 0 at ``|x| = 1``, with ``collar = 1 / (4 N)``.

Along the segment ``A + t a (x) n`` the determinant is affine in ``t`` and
equal to 1 at both ends, hence identically 1; only the collar departs from
the unit-determinant constraint.
"""

from dataclasses import dataclass

import numpy as np

from .algebra import cof, det, det2, rank_one_gap
from .grid import GridField2
from .inclusion import fiber_residual_array, lift_array

DET_TOL = 1e-12
FACTOR_TOL = 1e-10


@dataclass(frozen=True)
class LaminatePair:
    A: np.ndarray
    B: np.ndarray
    lam: float
    a: np.ndarray
    n_dir: np.ndarray
    C: np.ndarray


def check_pair(A, B, lam=0.5):
    """Validate a rank-one connected pair of unit-determinant matrices.

    Raises
    ------
    ValueError
        With message "not rank-one connected", "determinants differ" or
        "determinant not 1".
    """
    A = np.array(A, dtype=float)
    B = np.array(B, dtype=float)
    if not 0.0 < lam < 1.0:
        raise ValueError("lambda must lie in (0, 1)")
    rank, factors = rank_one_gap(A, B)
    if rank != 1:
        raise ValueError(f"not rank-one connected (rank(B - A) = {rank})")
    dA, dB = det(A), det(B)
    if abs(dA - dB) > DET_TOL:
        raise ValueError(f"determinants differ ({dA!r} vs {dB!r})")
    if abs(dA - 1.0) > DET_TOL:
        raise ValueError(f"determinant not 1 (det A = {dA!r})")
    a, n = factors
    if np.linalg.norm(B - A - np.outer(a, n)) > FACTOR_TOL:
        raise ArithmeticError("rank-one factorization inaccurate")
    C = lam * A + (1.0 - lam) * B
    return LaminatePair(A=A, B=B, lam=float(lam), a=a, n_dir=n, C=C)


def sawtooth(s, lam):
    """Zero-mean 1-periodic sawtooth and its slope; returns ``(S, dS, in_A_phase)``."""
    frac = s - np.floor(s)
    in_a = frac < lam
    offset = 0.5 * lam * (1.0 - lam)
    S = np.where(in_a, -(1.0 - lam) * frac, -(1.0 - lam) * lam + lam * (frac - lam)) + offset
    dS = np.where(in_a, -(1.0 - lam), lam)
    return S, dS, in_a


@dataclass(frozen=True)
class LaminateMap:
    pair: LaminatePair
    n_osc: int
    collar: float

    def _parts(self, x):
        x = np.asarray(x, dtype=float)
        p = self.pair
        s = self.n_osc * (x @ p.n_dir)
        S, dS, in_a = sawtooth(s, p.lam)
        r = np.linalg.norm(x, axis=-1)
        chi = np.clip((1.0 - r) / self.collar, 0.0, 1.0)
        return x, S, dS, in_a, r, chi

    def __call__(self, x):
        x, S, _, _, _, chi = self._parts(x)
        p = self.pair
        return x @ p.C.T + (S * chi / self.n_osc)[..., None] * p.a

    def deviation(self, x):
        """``|u(x) - C x|`` without forming ``u``."""
        x, S, _, _, _, chi = self._parts(x)
        return np.abs(S) * chi / self.n_osc * np.linalg.norm(self.pair.a)

    def in_phase_region(self, x):
        return np.linalg.norm(np.asarray(x, dtype=float), axis=-1) <= 1.0 - self.collar

    def gradient(self, x):
        """Exact a.e. gradient; returns ``A`` or ``B`` verbatim in the phase region."""
        x, S, dS, in_a, r, chi = self._parts(x)
        p = self.pair
        in_collar = (r > 1.0 - self.collar) & (r < 1.0)
        safe_r = np.where(r > 0, r, 1.0)
        grad_chi = np.where(in_collar[..., None], -x / (safe_r[..., None] * self.collar), 0.0)
        v = (dS * chi)[..., None] * p.n_dir + (S / self.n_osc)[..., None] * grad_chi
        Du = p.C + p.a[:, None] * v[..., None, :]
        phase = r <= 1.0 - self.collar
        Du = np.where((phase & in_a)[..., None, None], p.A, Du)
        Du = np.where((phase & ~in_a)[..., None, None], p.B, Du)
        return Du

    def phase_index(self, x):
        """Strip label along ``n``: ``2 * floor(s) + (0 in A phase, 1 in B phase)``."""
        s = self.n_osc * (np.asarray(x, dtype=float) @ self.pair.n_dir)
        frac = s - np.floor(s)
        return 2 * np.floor(s) + (frac >= self.pair.lam)


def build_laminate(pair, n_osc):
    """Laminate with ``n_osc`` periods across the unit length and collar ``1/(4 n_osc)``.

    Raises
    ------
    ValueError
        "pair not shear-type" when ``B - A`` does not preserve the
        determinant along the segment, i.e. ``n . cof(A) a != 0``.
    """
    if n_osc < 1:
        raise ValueError("n_osc must be >= 1")
    drift = float(pair.n_dir @ cof(pair.A) @ pair.a)
    if abs(drift) > FACTOR_TOL * (1.0 + np.linalg.norm(pair.a)):
        raise ValueError(f"pair not shear-type (n . cof(A) a = {drift!r})")
    return LaminateMap(pair=pair, n_osc=int(n_osc), collar=1.0 / (4 * n_osc))


def cell_grid(grid_n, lo=-1.0, hi=1.0):
    h = (hi - lo) / grid_n
    c = lo + h * (np.arange(grid_n) + 0.5)
    X, Y = np.meshgrid(c, c)
    return np.stack([X, Y], axis=-1), h


def sample_gradient(lam, grid_n):
    """Gradient at the cell centres of ``[-1, 1]^2``, masked to the unit disc.

    Cells crossed by a strip interface get the cell-average gradient
    ``theta A + (1 - theta) B`` (``theta`` measured along ``n``), which
    matches neither phase.
    """
    if grid_n < 8:
        raise ValueError("grid_n must be >= 8")
    pts, h = cell_grid(grid_n)
    Du = lam.gradient(pts)

    p = lam.pair
    half = 0.5 * h * np.abs(p.n_dir).sum() * (1.0 - 1e-9)
    lo_pts = pts - half * p.n_dir
    hi_pts = pts + half * p.n_dir
    crossed = (lam.phase_index(lo_pts) != lam.phase_index(hi_pts)) & lam.in_phase_region(pts)
    if np.any(crossed):
        s_lo = lam.n_osc * (lo_pts[crossed] @ p.n_dir)
        s_hi = lam.n_osc * (hi_pts[crossed] @ p.n_dir)
        theta = (_phase_a_measure(s_hi, p.lam) - _phase_a_measure(s_lo, p.lam)) / (s_hi - s_lo)
        Du[crossed] = theta[:, None, None] * p.A + (1.0 - theta)[:, None, None] * p.B

    mask = np.linalg.norm(pts, axis=-1) <= 1.0
    return GridField2(Du, h, tuple(pts[0, 0]), mask=mask)


def _phase_a_measure(s, lam):
    # measure of {t in [0, s]: frac(t) < lam}, for the cell-average weight
    k = np.floor(s)
    return k * lam + np.minimum(s - k, lam)


@dataclass(frozen=True)
class PhaseStats:
    frac_A: float
    frac_B: float
    frac_other: float


def phase_statistics(field, A, B, tol):
    """Fractions of (masked) cells whose gradient lies within ``tol`` of ``A``, of ``B``, or neither."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    vals = field.values
    mask = field.mask if field.mask is not None else np.ones(vals.shape[:2], bool)
    vals = vals[mask]
    near_a = np.linalg.norm(vals - np.asarray(A), axis=(-2, -1)) <= tol
    near_b = (np.linalg.norm(vals - np.asarray(B), axis=(-2, -1)) <= tol) & ~near_a
    total = vals.shape[0]
    n_a, n_b = int(near_a.sum()), int(near_b.sum())
    return PhaseStats(n_a / total, n_b / total, (total - n_a - n_b) / total)


# ---------------------------------------------------------------------------
# quadrature and laminate diagnostics


def strip_quadrature(lam, radius=1.0, n_eta=800, q=4):
    """Points and weights for the disc ``|x| <= radius``, aligned with the strips.

    Along ``n`` every phase interval gets its own ``q``-point Gauss rule, so
    integrands that jump across strip interfaces are integrated without the
    interface error of a Cartesian rule. Across ``n`` a midpoint rule with
    ``n_eta`` cells is used.
    """
    p = lam.pair
    N = lam.n_osc
    k = np.arange(np.floor(-radius * N) - 1, np.ceil(radius * N) + 1)
    breaks = np.sort(np.concatenate([k / N, (k + p.lam) / N]))
    breaks = np.unique(np.clip(breaks, -radius, radius))
    gx, gw = np.polynomial.legendre.leggauss(q)
    mid = 0.5 * (breaks[1:] + breaks[:-1])
    half = 0.5 * (breaks[1:] - breaks[:-1])
    xi = (mid[:, None] + half[:, None] * gx).ravel()
    w_xi = (half[:, None] * gw).ravel()

    d_eta = 2 * radius / n_eta
    eta = -radius + d_eta * (np.arange(n_eta) + 0.5)
    perp = np.array([-p.n_dir[1], p.n_dir[0]])
    XI, ETA = np.meshgrid(xi, eta, indexing="ij")
    pts = XI[..., None] * p.n_dir + ETA[..., None] * perp
    w = np.outer(w_xi, np.full(n_eta, d_eta))
    inside = XI**2 + ETA**2 <= radius**2
    return pts[inside], w[inside]


def annulus_quadrature(r0, r1, n_r=32, n_theta=20000):
    """Polar midpoint rule on ``r0 <= |x| <= r1``."""
    dr = (r1 - r0) / n_r
    r = r0 + dr * (np.arange(n_r) + 0.5)
    dth = 2 * np.pi / n_theta
    th = dth * (np.arange(n_theta) + 0.5)
    R, TH = np.meshgrid(r, th, indexing="ij")
    pts = np.stack([R * np.cos(TH), R * np.sin(TH)], axis=-1).reshape(-1, 2)
    w = (R * dr * dth).ravel()
    return pts, w


def disc_integral(lam, fn, radius=1.0, n_eta=800, n_theta=20000):
    """Integral of ``fn(x, Du)`` over ``|x| <= radius``: strip rule inside, polar rule on the collar."""
    inner_r = min(radius, 1.0 - lam.collar)
    pts, w = strip_quadrature(lam, inner_r, n_eta=n_eta)
    total = np.tensordot(w, fn(pts, lam.gradient(pts)), axes=(0, 0))
    if radius > inner_r:
        pts, w = annulus_quadrature(inner_r, radius, n_theta=n_theta)
        total = total + np.tensordot(w, fn(pts, lam.gradient(pts)), axes=(0, 0))
    return total


def bump(x):
    """Test function ``(1 - |x|^2)_+^2`` on the unit disc."""
    r2 = np.sum(np.asarray(x) ** 2, axis=-1)
    return np.clip(1.0 - r2, 0.0, None) ** 2


def weak_pairing(lam, phi=bump):
    """``int phi (Du - C)`` over the unit disc (a 2x2 matrix)."""
    C = lam.pair.C
    return disc_integral(lam, lambda x, Du: phi(x)[:, None, None] * (Du - C))


def det_weak_pairing(lam, phi=bump):
    dC = det2(lam.pair.C)
    return float(disc_integral(lam, lambda x, Du: phi(x) * (det2(Du) - dC)))


def l1_oscillation(lam):
    """``int |Du - C|_F`` over the unit disc."""
    C = lam.pair.C
    return float(disc_integral(lam, lambda x, Du: np.linalg.norm(Du - C, axis=(-2, -1))))


def l1_det_error(lam, radius=1.0):
    """``int |det Du - det C|`` over the disc of the given radius."""
    dC = det2(lam.pair.C)
    return float(disc_integral(lam, lambda x, Du: np.abs(det2(Du) - dC), radius=radius))


def lifted_gradient(gi, lam, Du):
    """Gradient of the lift ``(u ; g'(D) u ; h(D) J x)`` with ``D = det C``."""
    D = det2(lam.pair.C)
    fixed = lift_array(gi, lam.pair.C)
    mid = float(gi.g1(D)) * Du
    return np.concatenate([Du, mid, np.broadcast_to(fixed[4:6], Du.shape)], axis=-2)


def mean_fiber_residual(gi, lam):
    """Disc average of the fiber residual of the lifted laminate gradient."""
    total = disc_integral(lam, lambda x, Du: fiber_residual_array(gi, lifted_gradient(gi, lam, Du)))
    return float(total) / np.pi


def monte_carlo_disc(rng, samples):
    """Uniform samples in the unit disc."""
    r = np.sqrt(rng.uniform(size=samples))
    th = rng.uniform(0.0, 2 * np.pi, size=samples)
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)


def monte_carlo_phases(lam, pts, tol=1e-12):
    """Fractions of sample points with ``Du`` within ``tol`` of ``A`` and of ``B``."""
    Du = lam.gradient(pts)
    p = lam.pair
    near_a = np.linalg.norm(Du - p.A, axis=(-2, -1)) <= tol
    near_b = (np.linalg.norm(Du - p.B, axis=(-2, -1)) <= tol) & ~near_a
    return float(near_a.mean()), float(near_b.mean())

"""Grid probes for curl(beta Du) = 0 and its consequences.

Conventions: for a matrix field ``M`` the curl of row ``i`` is
``d1 M[i, 1] - d2 M[i, 0]`` (0-based columns), ``x`` runs along axis 1 of the
node arrays and ``y`` along axis 0.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.ndimage import label, median_filter
from scipy.sparse.linalg import LinearOperator, lsqr

from .algebra import J, det2
from .grid import GridField2, GridScalar
from .integrand import auto_bracket, h_eval, h_inverse_fiber

DET_FLOOR = 1e-6
SOLVER_TOL = 1e-10


class NumericalFailure(RuntimeError):
    """Degenerate input or a solver that did not converge."""


class DegenerateDeterminant(NumericalFailure):
    pass


class SolverStagnation(NumericalFailure):
    pass


class LevelCurveError(NumericalFailure):
    pass


def _d(values, h, axis):
    # same stencils as np.gradient(edge_order=2), but the one-sided edge rule is
    # written in differences so constant data differentiates to exactly 0
    f = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * h)
    out[0] = (3.0 * (f[1] - f[0]) - (f[2] - f[1])) / (2.0 * h)
    out[-1] = (3.0 * (f[-1] - f[-2]) - (f[-2] - f[-3])) / (2.0 * h)
    return np.moveaxis(out, 0, axis)


def gradient_field(u):
    """``Du[..., r, c] = d_c u_r``: centred differences inside, second-order one-sided at the edges."""
    if u.is_matrix:
        raise ValueError("gradient_field expects a vector-valued field")
    v = u.values
    Du = np.empty(v.shape[:2] + (2, 2))
    for r in range(2):
        Du[..., r, 0] = _d(v[..., r], u.h, axis=1)
        Du[..., r, 1] = _d(v[..., r], u.h, axis=0)
    return GridField2(Du, u.h, u.origin, mask=u.mask)


# ---------------------------------------------------------------------------
# curl residuals


def _bump_1d(n_nodes):
    """Three centred polynomial bumps ``(1 - rho^2)^3`` on integer node offsets."""
    m = n_nodes - 1
    R = m // 4
    out = []
    for c in (m // 4, m // 2, m - m // 4):
        k = np.arange(n_nodes) - c
        rho = k / R
        inside = np.abs(k) < R
        b = np.where(inside, (1.0 - rho**2) ** 3, 0.0)
        db = np.where(inside, -6.0 * rho * (1.0 - rho**2) ** 2, 0.0)
        out.append((c, b, db / R))
    return out


def bump_family(nx, ny, h):
    """Nine tensor-product test functions ``(id, phi, d1 phi, d2 phi)`` on the node grid."""
    fam = []
    for cy, by, dby in _bump_1d(ny):
        for cx, bx, dbx in _bump_1d(nx):
            phi = np.outer(by, bx)
            d1 = np.outer(by, dbx) / h
            d2 = np.outer(dby, bx) / h
            fam.append((f"bump({cx},{cy})", phi, d1, d2))
    return fam


@dataclass
class CurlResidual:
    strong: np.ndarray  # (2, ny, nx), one scalar field per row
    weak: list  # [(id, value)]
    l2: float
    linf: float

    @property
    def weak_max(self):
        return max(abs(v) for _, v in self.weak)


def weak_curl_residual(M):
    """Strong (centred difference) and weak (bump-tested) curl of each row of ``M``.

    The weak value for a bump ``phi`` and row ``i`` is the nodal sum
    ``h^2 * sum(M[i, 0] d2 phi - M[i, 1] d1 phi)``, accumulated with
    ``math.fsum`` so that constant fields give exactly zero.
    """
    if not M.is_matrix:
        raise ValueError("weak_curl_residual expects a matrix field")
    v, h = M.values, M.h
    strong = np.stack([_d(v[..., i, 1], h, axis=1) - _d(v[..., i, 0], h, axis=0) for i in range(2)])
    mask = M.mask if M.mask is not None else np.ones(v.shape[:2], bool)
    sel = strong[:, mask]
    l2 = float(np.sqrt(h * h * np.sum(sel**2)))
    linf = float(np.max(np.abs(sel)))

    weak = []
    for name, _, d1, d2 in bump_family(M.nx, M.ny, h):
        for i in range(2):
            val = math.fsum((v[..., i, 0] * d2).ravel()) - math.fsum((v[..., i, 1] * d1).ravel())
            weak.append((f"{name}/row{i + 1}", h * h * val))
    return CurlResidual(strong, weak, l2, linf)


def el_residual(gi, u):
    """Curl residual of ``g'(det Du) Du``, the first-order form of the Euler-Lagrange system."""
    Du = gradient_field(u)
    beta = gi.g1(det2(Du.values))
    return weak_curl_residual(GridField2(beta[..., None, None] * Du.values, u.h, u.origin, mask=u.mask))


def null_lagrangian_field(Du):
    """``cof^T(Du) J`` for a matrix field; its rows are curl free for every gradient."""
    v = Du.values
    cof_t = np.stack(
        [np.stack([v[..., 1, 1], -v[..., 1, 0]], -1), np.stack([-v[..., 0, 1], v[..., 0, 0]], -1)], -2
    )
    return GridField2(cof_t @ J, Du.h, Du.origin, mask=Du.mask)


# ---------------------------------------------------------------------------
# beta recovery


def _circulation_matrix(Du, h):
    """Sparse operator ``beta -> cell circulation of beta * grad(u_i)``, divided by the cell area.

    One row per cell and component; edge integrals use the trapezoid rule on
    nodal products, so each row couples the four corner nodes of a cell.
    """
    ny, nx = Du.shape[:2]
    node = np.arange(nx * ny).reshape(ny, nx)
    c00, c10 = node[:-1, :-1].ravel(), node[:-1, 1:].ravel()
    c01, c11 = node[1:, :-1].ravel(), node[1:, 1:].ravel()
    n_cells = c00.size
    rows, cols, vals = [], [], []
    for i in range(2):
        F = Du[..., i, 0].ravel()  # x component of grad u_i
        G = Du[..., i, 1].ravel()  # y component
        r = i * n_cells + np.arange(n_cells)
        # bottom (+x), right (+y), top (-x), left (-y)
        for corner, fx, gy in (
            (c00, 1.0, -1.0),
            (c10, 1.0, 1.0),
            (c11, -1.0, 1.0),
            (c01, -1.0, -1.0),
        ):
            rows.append(r)
            cols.append(corner)
            vals.append((fx * F[corner] + gy * G[corner]) / (2.0 * h))
    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(2 * n_cells, nx * ny),
    )
    return A


@dataclass
class BetaRecovery:
    beta: GridScalar
    residual_norm: float
    iterations: int
    deviation: float
    n_components: int


def beta_recover(u, normalization="mean_one", pin=None):
    """Least-squares ``beta`` with ``curl(beta Du) = 0`` on every grid cell.

    ``beta`` lives on nodes and the products ``beta * du_i`` are formed
    nodewise before differencing. ``beta -> c beta`` preserves the equations,
    so a normalization is imposed: ``mean_one`` (mean of beta is 1) or
    ``pin_node`` (beta = 1 at node ``pin``, default the central node). LSQR
    solves for the correction to ``beta = 1``, so the result carries no
    component along the operator's null space (the cell-circulation stencil
    annihilates the nodal checkerboard).

    Raises
    ------
    DegenerateDeterminant
        If ``min |det Du| < 1e-6``.
    SolverStagnation
        If LSQR hits its iteration cap before the 1e-10 tolerance.
    """
    Du = gradient_field(u).values
    if np.min(np.abs(det2(Du))) < DET_FLOOR:
        raise DegenerateDeterminant("degenerate determinant: min |det Du| below 1e-6")
    A = _circulation_matrix(Du, u.h)
    n = A.shape[1]
    cap = 10 * n

    if normalization == "mean_one":
        def project(x):
            return x - x.mean()

        op = LinearOperator(
            A.shape, matvec=lambda x: A @ project(x), rmatvec=lambda y: project(A.T @ y), dtype=float
        )
        rhs = -(A @ np.ones(n))
        sol = lsqr(op, rhs, atol=SOLVER_TOL, btol=SOLVER_TOL, iter_lim=cap)
        beta = 1.0 + project(sol[0])
    elif normalization == "pin_node":
        pin = (u.ny // 2) * u.nx + u.nx // 2 if pin is None else int(pin)
        free = np.setdiff1d(np.arange(n), [pin])
        sol = lsqr(A[:, free], -(A @ np.ones(n)), atol=SOLVER_TOL, btol=SOLVER_TOL, iter_lim=cap)
        beta = np.ones(n)
        beta[free] += sol[0]
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    if sol[1] == 7:
        raise SolverStagnation(f"solver stagnation after {sol[2]} iterations")

    beta = beta.reshape(u.ny, u.nx)
    mean = beta.mean()
    deviation = float(np.max(np.abs(beta - mean)) / abs(mean))
    return BetaRecovery(
        beta=GridScalar(beta, u.h, u.origin),
        residual_norm=float(np.linalg.norm(A @ beta.ravel()) * u.h),
        iterations=int(sol[2]),
        deviation=deviation,
        n_components=locally_constant_components(beta, u.h),
    )


def locally_constant_components(beta, h):
    """Connected components of ``{|beta - local median| <= 3h}``; a diagnostic only."""
    flat = np.abs(beta - median_filter(beta, size=3, mode="nearest")) <= 3 * h
    _, count = label(flat)
    return int(count)


# ---------------------------------------------------------------------------
# stationarity


@dataclass
class StationarityReport:
    h_field: GridScalar
    grad_norm: float
    fiber: object


def stationarity_check(gi, u):
    """Nodewise ``h(det Du)``, the L2 norm of its gradient, and the fiber of its mean.

    A stationary map has ``h(det Du)`` constant, so ``det Du`` can only take
    the (at most two) values in the returned fiber.
    """
    Du = gradient_field(u).values
    hf = h_eval(gi, det2(Du))
    mask = u.mask if u.mask is not None else np.ones(hf.shape, bool)
    g1, g2 = _d(hf, u.h, axis=1), _d(hf, u.h, axis=0)
    grad_norm = float(np.sqrt(u.h * u.h * np.sum((g1**2 + g2**2)[mask])))
    level = float(np.mean(hf[mask]))
    fiber = h_inverse_fiber(gi, level, auto_bracket(gi, level)) if level > 0 else h_inverse_fiber(gi, level, 1.0)
    return StationarityReport(GridScalar(hf, u.h, u.origin, mask=u.mask), grad_norm, fiber)


# ---------------------------------------------------------------------------
# level curves


def _bilinear(values, field, x):
    """Bilinear interpolation in lerp form, exact for constant data."""
    fx = (x[0] - field.origin[0]) / field.h
    fy = (x[1] - field.origin[1]) / field.h
    i = min(max(int(np.floor(fx)), 0), field.nx - 2)
    j = min(max(int(np.floor(fy)), 0), field.ny - 2)
    tx, ty = fx - i, fy - j
    v00, v10 = values[j, i], values[j, i + 1]
    v01, v11 = values[j + 1, i], values[j + 1, i + 1]
    lo = v00 + tx * (v10 - v00)
    hi = v01 + tx * (v11 - v01)
    return lo + ty * (hi - lo)


@dataclass
class LevelCurve:
    polyline: np.ndarray
    det_samples: np.ndarray

    @property
    def det_spread(self):
        return float(self.det_samples.max() - self.det_samples.min())


def trace_level_curve(u, component, level, seed, steps, ds=None):
    """Follow ``{u_c = level}`` from ``seed`` with unit speed along ``J grad u_c``.

    Explicit midpoint steps of length ``ds`` (default ``h``), each followed by
    one Newton projection back onto the level set; ``det Du`` is recorded at
    every point.

    Raises
    ------
    LevelCurveError
        "left domain" or "degenerate gradient on curve".
    """
    if component not in (1, 2):
        raise ValueError("component must be 1 or 2")
    c = component - 1
    Du = gradient_field(u).values
    uc = u.values[..., c]
    grad_c = Du[..., c, :]
    ds = u.h if ds is None else ds
    xmax = u.origin[0] + (u.nx - 1) * u.h
    ymax = u.origin[1] + (u.ny - 1) * u.h

    def inside(x):
        return u.origin[0] <= x[0] <= xmax and u.origin[1] <= x[1] <= ymax

    def grad(x):
        g = _bilinear(grad_c, u, x)
        nrm = float(np.hypot(g[0], g[1]))
        if nrm < 1e-12:
            raise LevelCurveError("degenerate gradient on curve")
        return g, nrm

    def newton(x):
        g, nrm = grad(x)
        return x - (_bilinear(uc, u, x) - level) * g / nrm**2

    x = np.asarray(seed, dtype=float)
    if not inside(x):
        raise LevelCurveError("left domain")
    if abs(_bilinear(uc, u, x) - level) > u.h:
        raise ValueError("seed is not within h of the level set")
    x = newton(x)

    pts, dets = [], []
    for k in range(steps + 1):
        if not inside(x):
            raise LevelCurveError("left domain")
        pts.append(x)
        dets.append(float(det2(_bilinear(Du, u, x))))
        if k == steps:
            break
        g, nrm = grad(x)
        xm = x + 0.5 * ds * (J @ g) / nrm
        if not inside(xm):
            raise LevelCurveError("left domain")
        gm, nm = grad(xm)
        x = newton(x + ds * (J @ gm) / nm)
    return LevelCurve(np.array(pts), np.array(dets))

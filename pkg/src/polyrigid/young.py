"""Finitely supported probability measures on 6x2 matrices and their minor moments.

A measure is *polyconvex* when every 2x2 row minor commutes with taking the
barycenter. For measures carried by the stationarity set, polyconvexity
forces all atoms onto a single determinant fiber; ``two_atom_search`` checks
this by brute force on two-fiber measures.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .algebra import MINOR_INDICES, Stacked62, all_minors, det2, minor_det
from .inclusion import fiber_residual_array, lift_array
from .integrand import auto_bracket, h_inverse_fiber

WEIGHT_TOL = 1e-12
LAMBDA_RTOL = 1e-9


@dataclass(frozen=True)
class AtomicMeasure:
    atoms: np.ndarray  # (k, 6, 2)
    weights: np.ndarray  # (k,)

    def __post_init__(self):
        atoms = np.array([np.asarray(a, dtype=float) for a in self.atoms], dtype=float)
        weights = np.array(self.weights, dtype=float).ravel()
        if atoms.ndim != 3 or atoms.shape[1:] != (6, 2):
            raise ValueError(f"atoms must be 6x2 matrices, got shape {atoms.shape}")
        if atoms.shape[0] != weights.size or weights.size == 0:
            raise ValueError("need one weight per atom and at least one atom")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError("weights must be nonnegative and sum to 1")
        flat = atoms.reshape(len(atoms), -1)
        if len(np.unique(flat, axis=0)) != len(flat):
            raise ValueError("atoms must be pairwise distinct")
        atoms.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_weighted(cls, atoms, weights):
        """Build a measure, dropping zero-weight atoms."""
        keep = [k for k, w in enumerate(weights) if w > 0]
        return cls([atoms[k] for k in keep], [weights[k] for k in keep])

    def __len__(self):
        return len(self.weights)


def barycenter(mu):
    return Stacked62.from_array(np.tensordot(mu.weights, mu.atoms, axes=(0, 0)))


def minor_moment(mu, idx):
    return float(mu.weights @ minor_det(mu.atoms, idx))


@dataclass(frozen=True)
class MomentReport:
    barycenter: Stacked62
    minor_gaps: np.ndarray  # (15,), ordered as MINOR_INDICES
    pairwise_gaps: np.ndarray  # (15,)

    @property
    def max_gap(self):
        return float(max(self.minor_gaps.max(), self.pairwise_gaps.max()))

    def gap(self, idx):
        return float(self.minor_gaps[MINOR_INDICES.index(tuple(idx))])


def polyconvexity_gap(mu):
    """Defect of ``<mu, det_ij> = det_ij(<mu, id>)`` for all 15 row pairs.

    ``pairwise_gaps`` evaluates the double integral of ``det_ij(Y1 - Y2)``
    against ``mu x mu``; for 2x2 minors it equals twice the signed moment
    defect, so both vanish together.
    """
    w = mu.weights
    bar = np.tensordot(w, mu.atoms, axes=(0, 0))
    moments = w @ all_minors(mu.atoms)
    minor_gaps = np.abs(moments - all_minors(bar))
    diffs = mu.atoms[:, None] - mu.atoms[None, :]
    pairwise = np.abs(np.einsum("k,l,klm->m", w, w, all_minors(diffs)))
    return MomentReport(Stacked62.from_array(bar), minor_gaps, pairwise)


@dataclass
class FiberSupport:
    on_set: bool
    single_fiber: bool
    D: Optional[float]
    polyconvex: bool
    note: str = ""


def fiber_support_check(gi, mu, tol):
    """Is ``mu`` carried by the stationarity set, and by a single determinant fiber?

    When the measure is also polyconvex (``max_gap <= tol``), a ``True``
    ``on_set`` together with ``False`` ``single_fiber`` would contradict the
    rigidity result; the note records that case explicitly.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    on_set = bool(np.all(fiber_residual_array(gi, mu.atoms) <= tol))
    dets = det2(mu.atoms[:, 0:2, :])
    same = bool(dets.max() - dets.min() <= tol)
    single = on_set and same
    polyconvex = polyconvexity_gap(mu).max_gap <= tol
    note = ""
    if on_set and not polyconvex:
        note = "not polyconvex: no single-fiber claim"
    elif on_set and polyconvex and not single:
        note = "VIOLATION: polyconvex measure on the set spans several fibers"
    elif not on_set:
        note = "support leaves the set"
    D = float(np.mean(dets)) if single else None
    return FiberSupport(on_set, single, D, polyconvex, note)


def _shear_representative(X, rng):
    # X + a (x) n keeps det when n . cof(X) a = 0
    a = rng.normal(size=2)
    adj_a = np.array([[X[1, 1], -X[0, 1]], [-X[1, 0], X[0, 0]]]) @ a
    n = np.array([-adj_a[1], adj_a[0]])
    n /= np.linalg.norm(n) + 1e-300
    return X + 0.5 * np.outer(a, n)


@dataclass
class TwoAtomResult:
    e1: float
    e2: float
    admissible_t: list
    discriminant: float
    max_gaps: np.ndarray = field(repr=False)


def lambda_consistent(gi, e1, e2, t):
    """Whether the moment relations for weights ``(t, 1 - t)`` admit a common multiplier.

    With ``m = t e1 + s e2`` the relations read ``t g'(e1) e1 + s g'(e2) e2 =
    lam m`` and ``t g'(e1)^2 e1 + s g'(e2)^2 e2 = lam^2 m``.
    """
    s = 1.0 - t
    g1a, g1b = float(gi.g1(e1)), float(gi.g1(e2))
    m = t * e1 + s * e2
    first = t * g1a * e1 + s * g1b * e2
    second = t * g1a**2 * e1 + s * g1b**2 * e2
    scale = abs(first) + abs(second) + abs(m)
    if abs(m) <= LAMBDA_RTOL * scale:
        # lam m = first forces first = 0, impossible since g'(e) e > 0 for e != 0
        return abs(first) <= LAMBDA_RTOL * scale and abs(second) <= LAMBDA_RTOL * scale
    lam = first / m
    return abs(second - lam**2 * m) <= LAMBDA_RTOL * scale


def two_atom_search(gi, level, grid, rng=None, tol=1e-9):
    """Sweep weights ``t = k / grid`` of two-fiber measures and keep the polyconvex ones.

    The fibers are the two roots ``e1 < 0 < e2`` of ``h = level``. Atoms are
    lifts of ``diag(e1, 1)`` and ``diag(e2, 1)``; passing ``rng`` replaces
    them by random determinant-preserving shears of those matrices. A weight
    is admissible when the measure has all 15 minor gaps below ``tol``
    (relative to the minor scale) and the multiplier relations are consistent.

    Raises
    ------
    ValueError
        "no fiber roots" unless ``level > 0``.
    """
    if grid < 10:
        raise ValueError("grid must be >= 10")
    if not level > 0:
        raise ValueError(f"no fiber roots: level {level} does not give two roots")
    fiber = h_inverse_fiber(gi, level, auto_bracket(gi, level))
    if len(fiber.roots) != 2:
        raise ValueError("no fiber roots")
    e1, e2 = fiber.roots
    X1, X2 = np.diag([e1, 1.0]), np.diag([e2, 1.0])
    if rng is not None:
        rng = np.random.default_rng(rng)
        X1, X2 = _shear_representative(X1, rng), _shear_representative(X2, rng)
    atoms = lift_array(gi, np.stack([X1, X2]))
    scale = 1.0 + np.abs(all_minors(atoms)).max()

    admissible, gaps = [], np.empty(grid + 1)
    for k in range(grid + 1):
        t = k / grid
        mu = AtomicMeasure.from_weighted(atoms, [t, 1.0 - t])
        gaps[k] = polyconvexity_gap(mu).max_gap
        if gaps[k] <= tol * scale and lambda_consistent(gi, e1, e2, t):
            admissible.append(t)
    disc = (float(gi.g1(e1)) - float(gi.g1(e2))) ** 2
    return TwoAtomResult(e1, e2, admissible, disc, gaps)


def random_stationary_measures(gi, rng, count, max_atoms=4):
    """Random atomic measures carried by the stationarity set.

    Mixes four families so polyconvex and non-polyconvex cases both occur:
    unrelated atoms, rank-one segments inside one fiber (polyconvex),
    rank-one segments across fibers, and two-fiber diagonal pairs.
    """
    out = []
    for k in range(count):
        kind = k % 4
        n_atoms = int(rng.integers(1, max_atoms + 1))
        X = rng.uniform(-2.0, 2.0, size=(2, 2))
        if kind == 0:
            sources = [X] + [rng.uniform(-2.0, 2.0, size=(2, 2)) for _ in range(n_atoms - 1)]
        elif kind == 1:
            step = _shear_representative(X, rng) - X
            ts = rng.permutation(np.arange(-2, 3))[:n_atoms]
            sources = [X + t * step for t in ts]
        elif kind == 2:
            a, n = rng.normal(size=2), rng.normal(size=2)
            sources = [X + t * np.outer(a, n) for t in rng.uniform(-1, 1, size=n_atoms)]
        else:
            d = rng.uniform(0.2, 2.0)
            sources = [np.diag([d, 1.0]), np.diag([-d, 1.0])][: max(n_atoms, 1)]
        w = rng.dirichlet(np.ones(len(sources)))
        out.append(AtomicMeasure(lift_array(gi, np.stack(sources)), w))
    return out

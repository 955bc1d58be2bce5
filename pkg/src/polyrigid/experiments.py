"""Experiment drivers returning plain rows/dicts; the CLI only formats them."""

import math

import numpy as np

from . import maps
from .grid import GridField2, load_field
from .integrand import hp_check
from .laminate import (
    build_laminate,
    check_pair,
    l1_det_error,
    mean_fiber_residual,
    monte_carlo_disc,
    monte_carlo_phases,
)
from .pde import beta_recover, el_residual, gradient_field, stationarity_check, weak_curl_residual
from .young import two_atom_search

DEFAULT_A = np.eye(2)
DEFAULT_B = np.array([[1.0, 1.0], [0.0, 1.0]])

LAMINATE_COLUMNS = ["n_osc", "sup_deviation", "frac_A", "frac_B", "frac_other", "l1_det_error"]
RIGIDITY_COLUMNS = ["n_osc", "l1_det_error", "interior_det_error", "mean_fiber_residual"]
RECOVER_COLUMNS = ["grid_n", "strong_l2", "weak_max", "beta_dev", "order_estimate"]
STATIONARITY_COLUMNS = ["grid_n", "grad_norm", "h_mean", "root_lo", "root_hi", "el_strong_l2", "el_weak_max"]

HIST_EDGES = list(range(-17, 4))


def run_laminate(n_list, rng, samples=10**6, pair=None, tol=1e-12):
    pair = pair or check_pair(DEFAULT_A, DEFAULT_B)
    rows = []
    for n in n_list:
        lam = build_laminate(pair, n)
        pts = monte_carlo_disc(rng, samples)
        fa, fb = monte_carlo_phases(lam, pts, tol=tol)
        rows.append(
            {
                "n_osc": n,
                "sup_deviation": float(lam.deviation(pts).max()),
                "frac_A": fa,
                "frac_B": fb,
                "frac_other": 1.0 - fa - fb,
                "l1_det_error": l1_det_error(lam),
            }
        )
    return rows


def run_rigidity(gi, n_list, pair=None):
    pair = pair or check_pair(DEFAULT_A, DEFAULT_B)
    rows = []
    for n in n_list:
        lam = build_laminate(pair, n)
        rows.append(
            {
                "n_osc": n,
                "l1_det_error": l1_det_error(lam),
                "interior_det_error": l1_det_error(lam, radius=0.5),
                "mean_fiber_residual": mean_fiber_residual(gi, lam),
            }
        )
    return rows


def gap_histogram(gaps):
    logs = np.log10(np.maximum(gaps, 10.0 ** HIST_EDGES[0]))
    counts, _ = np.histogram(np.clip(logs, HIST_EDGES[0], HIST_EDGES[-1]), bins=HIST_EDGES)
    return [int(c) for c in counts]


def run_moments(gi, levels, grid, tol=1e-9):
    results = []
    for level in levels:
        entry = {"level": float(level)}
        if level <= 0:
            entry.update(
                e1=0.0 if level == 0 else None,
                e2=0.0 if level == 0 else None,
                admissible_t=[],
                discriminant=None,
                max_gap_histogram=[],
                note="level 0: only root is t = 0, search skipped" if level == 0 else "no fiber roots",
            )
        else:
            res = two_atom_search(gi, level, grid, tol=tol)
            entry.update(
                e1=res.e1,
                e2=res.e2,
                admissible_t=res.admissible_t,
                discriminant=res.discriminant,
                max_gap_histogram=gap_histogram(res.max_gaps),
                note="",
            )
        results.append(entry)
    return {
        "integrand": gi.label,
        "grid": int(grid),
        "tol": tol,
        "histogram_edges": HIST_EDGES,
        "results": results,
    }


def _fields(map_spec, grids):
    """Yield ``(grid_n, u)`` for a named map over ``grids`` or for a single field file."""
    if map_spec in maps.MAPS:
        for n in grids:
            yield n, maps.sample(map_spec, n)[0]
    else:
        field = load_field(map_spec)
        if not isinstance(field, GridField2) or field.is_matrix:
            raise ValueError(f"{map_spec}: expected a vector field (k = 2)")
        yield field.nx - 1, field


def _order(prev, cur):
    if prev is None or not prev > 0 or not cur > 0:
        return math.nan
    return math.log2(prev / cur)


def run_recover(map_spec, grids, normalization="mean_one"):
    rows, prev = [], None
    for n, u in _fields(map_spec, grids):
        rec = beta_recover(u, normalization)
        Du = gradient_field(u).values
        res = weak_curl_residual(GridField2(rec.beta.values[..., None, None] * Du, u.h, u.origin))
        rows.append(
            {
                "grid_n": n,
                "strong_l2": res.l2,
                "weak_max": res.weak_max,
                "beta_dev": rec.deviation,
                "order_estimate": _order(prev, rec.deviation),
            }
        )
        prev = rec.deviation
    return rows


def run_stationarity(gi, map_spec, grids):
    rows = []
    for n, u in _fields(map_spec, grids):
        rep = stationarity_check(gi, u)
        el = el_residual(gi, u)
        roots = list(rep.fiber.roots) + [math.nan]
        rows.append(
            {
                "grid_n": n,
                "grad_norm": rep.grad_norm,
                "h_mean": rep.fiber.level,
                "root_lo": roots[0],
                "root_hi": roots[1] if len(rep.fiber.roots) > 1 else roots[0],
                "el_strong_l2": el.l2,
                "el_weak_max": el.weak_max,
            }
        )
    return rows


def run_hpcheck(gi, interval, samples):
    rep = hp_check(gi, interval, samples)
    return {
        "integrand": gi.label,
        "interval": [float(interval[0]), float(interval[1])],
        "samples": int(samples),
        "pass": rep.passed,
        "witnesses": [{"t": t, "reason": why} for t, why in rep.witnesses],
    }

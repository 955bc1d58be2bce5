import math

import numpy as np
import pytest

from polyrigid.integrand import (
    BUILTINS,
    ConvexIntegrand,
    auto_bracket,
    convexity_gap,
    get_integrand,
    h_eval,
    h_inverse_fiber,
    hp_check,
)


def test_normalization_enforced():
    with pytest.raises(ValueError):
        ConvexIntegrand(lambda t: t * t + 1, lambda t: 2 * t, lambda t: 2 + 0 * t, "shifted")
    with pytest.raises(ValueError):
        ConvexIntegrand(lambda t: t * t + t, lambda t: 2 * t + 1, lambda t: 2 + 0 * t, "tilted")


def test_unknown_label():
    with pytest.raises(ValueError, match="unknown integrand"):
        get_integrand("nope")


@pytest.mark.parametrize(
    "label, interval, samples, passed",
    [
        ("quad", (-5, 5), 101, True),
        ("cosh", (-3, 3), 101, True),
        ("quartic", (-3, 3), 101, True),
        ("quartic-pure", (-1, 1), 101, False),
    ],
)
def test_hp_check(label, interval, samples, passed):
    rep = hp_check(get_integrand(label), interval, samples)
    assert rep.passed is passed
    if not passed:
        assert any(t == 0.0 for t, _ in rep.witnesses)


def test_hp_check_rejects_non_finite():
    bad = ConvexIntegrand(lambda t: t * t, lambda t: 2 * t, lambda t: np.where(np.asarray(t) > 0.5, np.inf, 2.0), "bad")
    with pytest.raises(ValueError):
        hp_check(bad, (-1, 1), 11)


@pytest.mark.parametrize("t, expected", [(1.0, 1.0), (0.0, 0.0), (-2.0, 4.0)])
def test_h_eval_quad(t, expected):
    assert h_eval(get_integrand("quad"), t) == expected


@pytest.mark.parametrize("label", sorted(BUILTINS))
def test_h_zero_at_origin(label):
    assert h_eval(get_integrand(label), 0.0) == 0.0


def test_fiber_quad_level_four():
    fr = h_inverse_fiber(get_integrand("quad"), 4.0, 10.0)
    assert fr.roots == pytest.approx((-2.0, 2.0), abs=1e-10)


def test_fiber_degenerate_levels():
    gi = get_integrand("quad")
    assert h_inverse_fiber(gi, 0.0, 1.0).roots == (0.0,)
    assert h_inverse_fiber(gi, -1.0, 1.0).roots == ()


def test_fiber_bracket_too_small():
    with pytest.raises(ValueError, match="bracket too small"):
        h_inverse_fiber(get_integrand("quad"), 4.0, 1.0)


@pytest.mark.parametrize("label", ["quad", "cosh", "quartic"])
@pytest.mark.parametrize("level", [0.25, 1.0, 4.0])
def test_fiber_roots_solve_level(label, level):
    gi = get_integrand(label)
    fr = h_inverse_fiber(gi, level, auto_bracket(gi, level))
    lo, hi = fr.roots
    assert lo < 0 < hi
    for r in fr.roots:
        assert abs(h_eval(gi, r) - level) <= 1e-9 * (1 + level)


def test_cosh_fiber_closed_form():
    # h(t) = t sinh t - cosh t + 1
    gi = get_integrand("cosh")
    fr = h_inverse_fiber(gi, 1.0, 5.0)
    for r in fr.roots:
        assert r * math.sinh(r) - math.cosh(r) + 1 == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("L", [0.5, 1.0, 4.0])
def test_convexity_gap_quad(L):
    assert convexity_gap(get_integrand("quad"), L) == pytest.approx(2.0, abs=1e-12)


def test_convexity_gap_cosh():
    assert convexity_gap(get_integrand("cosh"), 3.0) == pytest.approx(1.0, abs=1e-12)

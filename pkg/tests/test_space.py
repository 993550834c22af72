import math
import random
from fractions import Fraction

import pytest
from helpers import naive_sep, random_euclidean_space

from menger.errors import GroupCapError, InputError
from menger.fixtures import circle_space, rotation_perm
from menger.space import (
    FiniteSpace,
    GroupAction,
    MapFamily,
    action_kernel,
    compose,
    fix_set,
    identity_perm,
    invert_perm,
    orbit,
    periodic_set,
    restricted_space,
    sep,
    validate_space,
)


def test_create_rejects_bad_metric_shapes():
    with pytest.raises(InputError):
        FiniteSpace.create([])
    with pytest.raises(InputError):
        FiniteSpace.create([[0.0, 1.0]])
    # axiom violations are the validator's job, not the constructor's
    negative = FiniteSpace.create([[0.0, -1.0], [-1.0, 0.0]])
    assert not validate_space(negative).ok


def test_validate_reports_axiom_violations_with_paths():
    asym = FiniteSpace.create([[0.0, 1.0], [2.0, 0.0]])
    report = validate_space(asym)
    assert any("metric[0][1]" in issue or "metric[1][0]" in issue for issue in report.issues)

    bad_diag = FiniteSpace.create([[0.5, 1.0], [1.0, 0.0]])
    assert not validate_space(bad_diag).ok

    triangle = [[0.0, 1.0, 3.0], [1.0, 0.0, 1.0], [3.0, 1.0, 0.0]]
    report = validate_space(FiniteSpace.create(triangle))
    assert any("triangle" in issue for issue in report.issues)

    good = circle_space(6)
    assert validate_space(good).ok


def test_dim_of_empty_set_is_minus_one(circle9):
    assert circle9.dim(frozenset()) == -1


def test_dim_from_simplices(circle9):
    # a single vertex is 0-dimensional, an edge is 1-dimensional
    assert circle9.dim({0}) == 0
    assert circle9.dim({0, 1}) == 1
    assert circle9.dim({0, 4}) == 0          # no edge between them
    assert circle9.dim(range(9)) == 1


def test_dim_labels_monotone_closure():
    metric = [[0.0, 1.0], [1.0, 0.0]]
    space = FiniteSpace.create(metric, dim_labels=[(frozenset({0}), 3)])
    assert space.dim({0}) == 3
    assert space.dim({0, 1}) == 3            # superset inherits the label
    assert space.dim({1}) == 0


def test_dim_fn_override():
    metric = [[0.0, 1.0], [1.0, 0.0]]
    space = FiniteSpace.create(metric, dim_fn=lambda s: 7 if s else -1)
    assert space.dim({1}) == 7
    assert space.dim(frozenset()) == -1


def test_subspace_translates_dimension(circle9):
    sub, points = circle9.subspace([2, 3, 7])
    assert points == (2, 3, 7)
    assert sub.n_points == 3
    assert sub.distance(0, 1) == circle9.distance(2, 3)
    assert sub.dim({0, 1}) == 1              # the 2-3 edge survives translation
    assert sub.dim({0, 2}) == 0


def test_perm_algebra():
    g = rotation_perm(5, 2)
    assert compose(g, invert_perm(g)) == identity_perm(5)
    assert compose(invert_perm(g), g) == identity_perm(5)
    h = rotation_perm(5, 1)
    assert compose(g, h) == rotation_perm(5, 3)


def test_map_family_validation(circle9):
    with pytest.raises(InputError):
        MapFamily.create(circle9, circle9, [[0] * 9])    # not injective
    with pytest.raises(InputError):
        MapFamily.create(circle9, circle9, [list(range(9))], labels=["a", "a"])
    fam = MapFamily.create(circle9, circle9, [list(range(9))])
    assert fam.labels == ("g0",)


def test_group_closure_and_order(circle9):
    action = GroupAction.from_generators(circle9, [rotation_perm(9, 3)])
    assert action.order == 3
    assert action.isometry_flag
    assert identity_perm(9) in action.elements


def test_group_cap_raises_and_uncapped_path():
    space = circle_space(12)
    gen = rotation_perm(12, 1)
    with pytest.raises(GroupCapError):
        GroupAction.from_generators(space, [gen], cap=5)
    action = GroupAction.from_generators(space, [gen], cap=5, require_closure=False)
    assert action.elements is None
    with pytest.raises(GroupCapError):
        _ = action.order


def test_orbits_and_periodic_sets(rot3_action):
    assert orbit(rot3_action, 0) == frozenset({0, 3, 6})
    assert periodic_set(rot3_action, 2) == frozenset()
    assert periodic_set(rot3_action, 3) == frozenset(range(9))
    assert fix_set(rot3_action) == frozenset()
    assert action_kernel(rot3_action) == (identity_perm(9),)


def test_sep_matches_naive_enumeration():
    rng = random.Random(90125)
    for trial in range(12):
        n = rng.randint(2, 9)
        space = random_euclidean_space(rng, n)
        pts = sorted(rng.sample(range(n), rng.randint(1, n)))
        eps = Fraction(rng.randint(1, 50), 10)
        got = sep(space, pts, eps)
        assert got.exact
        assert got.size == naive_sep(space, pts, eps)


def test_sep_equilateral_triangle():
    metric = [[0.0, 1.5, 1.5], [1.5, 0.0, 1.5], [1.5, 1.5, 0.0]]
    space = FiniteSpace.create(metric)
    assert sep(space, [0, 1, 2], Fraction(1)).size == 3
    assert sep(space, [0, 1, 2], Fraction(2)).size == 1


def test_sep_above_cap_is_flagged_lower_bound():
    space = circle_space(10)
    exact = sep(space, range(10), Fraction(1, 2))
    greedy = sep(space, range(10), Fraction(1, 2), exact_cap=4)
    assert exact.exact and not greedy.exact
    assert greedy.size <= exact.size


def test_restricted_space_matches_definition():
    space = circle_space(12)
    action = GroupAction.from_generators(space, [rotation_perm(12, 1)])
    f_perms = [rotation_perm(12, k) for k in range(6)]
    eps = Fraction(1, 10)
    got = restricted_space(action, f_perms, eps, r=1, n=3)
    expected = set()
    for x in range(12):
        f_orbit = sorted({p[x] for p in f_perms})
        if frozenset(f_orbit) == orbit(action, x):
            expected.add(x)
        elif sep(space, f_orbit, eps).size >= 1 * 3:
            expected.add(x)
    assert got == frozenset(expected)
    # chord distances on a 12-gon comfortably exceed 1/10, so the separation
    # route admits every point even though F-orbits are strict subsets
    assert got == frozenset(range(12))

"""Shared generators and naive oracles used across the test modules.

The naive oracles here re-derive results straight from definitions with
independent code paths, so agreement with the package is evidence rather
than tautology.
"""

from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction

from menger.space import FiniteSpace, MapFamily


def euclidean_space(points: list[tuple[float, float]]) -> FiniteSpace:
    """A metric space from planar points; the triangle inequality is free."""
    n = len(points)
    metric = [[0.0] * n for _ in range(n)]
    for a in range(n):
        for b in range(a + 1, n):
            d = math.dist(points[a], points[b])
            metric[a][b] = d
            metric[b][a] = d
    return FiniteSpace.create(metric)


def random_euclidean_space(rng: random.Random, n: int) -> FiniteSpace:
    pts = []
    taken = set()
    while len(pts) < n:
        p = (rng.randint(0, 60) / 10.0, rng.randint(0, 60) / 10.0)
        if p not in taken:
            taken.add(p)
            pts.append(p)
    return euclidean_space(pts)


def random_endo_family(rng: random.Random, space: FiniteSpace, n_maps: int) -> MapFamily:
    n = space.n_points
    maps = []
    for _ in range(n_maps):
        perm = list(range(n))
        rng.shuffle(perm)
        maps.append(tuple(perm))
    return MapFamily.create(space, space, maps)


def naive_sep(space: FiniteSpace, points: list[int], eps: Fraction) -> int:
    """Largest eps-separated subset by checking every subset."""
    best = 0
    for k in range(len(points), 0, -1):
        for subset in itertools.combinations(points, k):
            if all(
                Fraction(space.distance(a, b)) >= eps
                for a, b in itertools.combinations(subset, 2)
            ):
                return k
    return best


def naive_induced_blocks(fam: MapFamily, x: int) -> set[frozenset[int]]:
    """Equality classes of map values at x, grouped directly."""
    groups: dict[int, set[int]] = {}
    for i in range(fam.size):
        groups.setdefault(fam.maps[i][x], set()).add(i)
    return {frozenset(g) for g in groups.values()}


def naive_compatible(fam: MapFamily, w, blocks: set[frozenset[int]]) -> set[int]:
    """Points of w whose value-equality classes are exactly ``blocks``."""
    return {x for x in w if naive_induced_blocks(fam, x) == blocks}


def naive_doubled_blocks(fam: MapFamily, pair: tuple[int, int]) -> set[frozenset]:
    """Doubled-label equality classes evaluated straight from the maps."""
    x1, x2 = pair
    groups: dict[int, set] = {}
    for i in range(fam.size):
        groups.setdefault(fam.maps[i][x1], set()).add((i, 1))
        groups.setdefault(fam.maps[i][x2], set()).add((i, 2))
    return {frozenset(g) for g in groups.values()}

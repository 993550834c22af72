"""Small bundled sample spaces, coordinates, and actions.

These back the cover oracle sweep, the command line demos, and the test
suite.  Everything is plain data: chord metrics are computed in floats, the
declared dimension comes from an explicit simplicial structure.
"""

from __future__ import annotations

import math
import random
from typing import NamedTuple

from .covers import BACKEND_BRICKS, BACKEND_CELLS, Coords, build_cover, verify_cover
from .space import FiniteSpace, Perm


def circle_space(n: int, radius: float = 1.0) -> FiniteSpace:
    """n equally spaced points on a circle with the chord metric.

    The declared structure is the n-cycle graph (consecutive edges), so the
    full sample has dimension 1.
    """
    if n < 3:
        raise ValueError("circle needs at least 3 points")
    metric = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            k = min(j - i, n - (j - i))
            d = 2.0 * radius * math.sin(math.pi * k / n)
            metric[i][j] = d
            metric[j][i] = d
    edges = [frozenset({i, (i + 1) % n}) for i in range(n)]
    return FiniteSpace.create(metric, simplices=edges)


def circle_coords(n: int, radius: float = 1.0) -> Coords:
    """One declared coordinate per circle point: arc position in [0, 2 pi R)."""
    if n < 3:
        raise ValueError("circle needs at least 3 points")
    step = 2.0 * math.pi * radius / n
    return Coords.create(1, [[i * step] for i in range(n)])


def rotation_perm(n: int, step: int) -> Perm:
    return tuple((i + step) % n for i in range(n))


def antipodal_perm(n: int) -> Perm:
    if n % 2 != 0:
        raise ValueError("antipodal map needs an even number of points")
    return rotation_perm(n, n // 2)


def path_space(n: int, length: float = 1.0) -> FiniteSpace:
    """n points evenly spread on a segment, consecutive edges, dimension 1."""
    if n < 2:
        raise ValueError("path needs at least 2 points")
    step = length / (n - 1)
    metric = [[abs(i - j) * step for j in range(n)] for i in range(n)]
    edges = [frozenset({i, i + 1}) for i in range(n - 1)]
    return FiniteSpace.create(metric, simplices=edges)


def path_coords(n: int, length: float = 1.0) -> Coords:
    if n < 2:
        raise ValueError("path needs at least 2 points")
    step = length / (n - 1)
    return Coords.create(1, [[i * step] for i in range(n)])


def grid_space(width: int, height: int, spacing: float = 1.0) -> FiniteSpace:
    """width x height grid with the Euclidean metric, triangulated, dim 2.

    Point (i, j) has index j*width + i; each unit square carries the two
    triangles of its diagonal split.
    """
    if width < 2 or height < 2:
        raise ValueError("grid needs at least 2 points per side")
    pts = [(i * spacing, j * spacing) for j in range(height) for i in range(width)]
    n = len(pts)
    metric = [[0.0] * n for _ in range(n)]
    for a in range(n):
        for b in range(a + 1, n):
            d = math.dist(pts[a], pts[b])
            metric[a][b] = d
            metric[b][a] = d
    tris = []
    for j in range(height - 1):
        for i in range(width - 1):
            p = j * width + i
            tris.append(frozenset({p, p + 1, p + width}))
            tris.append(frozenset({p + 1, p + width, p + width + 1}))
    return FiniteSpace.create(metric, simplices=tris)


def grid_coords(width: int, height: int, spacing: float = 1.0) -> Coords:
    if width < 2 or height < 2:
        raise ValueError("grid needs at least 2 points per side")
    pts = [[i * spacing, j * spacing] for j in range(height) for i in range(width)]
    return Coords.create(2, pts)


def oracle_cover_fixtures() -> tuple[tuple[str, FiniteSpace, Coords], ...]:
    """The bundled (name, space, coords) triples swept by the cover oracle."""
    return (
        ("circle9", circle_space(9), circle_coords(9)),
        ("circle12", circle_space(12), circle_coords(12)),
        ("path8", path_space(8), path_coords(8)),
        ("grid4x3", grid_space(4, 3), grid_coords(4, 3)),
    )


class CoverSweepResult(NamedTuple):
    builds: int
    violations: int
    details: tuple[str, ...]


def run_cover_oracle(runs_per_backend: int = 50, base_seed: int = 1000) -> CoverSweepResult:
    """Seeded randomized cover builds over the bundled fixtures, re-verified.

    Every build draws a point subset, a family count m, a multiplicity mu,
    and a diameter bound from a per-run seed, builds the cover with both
    backends (mu is lowered for bricks so the per-axis loss bound leaves it
    reachable), and re-checks the result from scratch.  Returns the number
    of builds and the verification violations, which must be zero.
    """
    fixtures = oracle_cover_fixtures()
    builds = 0
    details: list[str] = []
    for backend in (BACKEND_CELLS, BACKEND_BRICKS):
        for i in range(runs_per_backend):
            rng = random.Random(base_seed + i)
            name, space, coords = fixtures[i % len(fixtures)]
            n = space.n_points
            size = rng.randint(1, n)
            points = sorted(rng.sample(range(n), size))
            m = rng.randint(1, 6)
            mu = rng.randint(1, m)
            if backend == BACKEND_BRICKS:
                if m - coords.dim < 1:
                    m = coords.dim + 1
                mu = min(mu, m - coords.dim)
            diam = space.diameter(range(n))
            eps = diam * (0.2 + 0.6 * rng.random())
            cover = build_cover(space, points, m, mu, eps, backend, coords)
            builds += 1
            report = verify_cover(cover, space)
            for issue in report.violations:
                details.append(f"{backend}/{name} run {i}: {issue}")
    return CoverSweepResult(builds, len(details), tuple(details))

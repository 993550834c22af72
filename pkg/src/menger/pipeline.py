"""Certified construction of injective orbit maps on finite samples.

Given a family F of injective maps and an observable f into [0, 1]^r, the
orbit map sends x to the tuple (f(g(x)) for g in F).  When the declared
dimension of every compatibility class stays strictly below r/2 times its
block count, a small perturbation of f makes the orbit map injective.  The
construction here follows the density argument step by step at finite scale:
pairs of points are grouped by their doubled partition, each class is carved
into coherent blocks, and every block is separated by one locally constant
perturbation whose size is controlled by a geometrically shrinking budget.
Progress is certified, never assumed: each block run re-verifies separation
pair by pair through an explicit witness, and the final certificate carries
enough data to replay every check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .covers import (
    BACKEND_CELLS,
    Coords,
    build_cover,
    diameter_clusters,
    pull_cover,
)
from .errors import (
    GroupCapError,
    HypothesisError,
    InputError,
    InternalCheckError,
)
from .partitions import (
    INTERSECTIVE,
    NON_INTERSECTIVE,
    CoherentBlock,
    DoubledFamily,
    Partition,
    classify,
    coherent_decomposition,
    column_partition,
    compatible_subset,
    doubled_induced_partition,
    induced_partition,
    intersective_transport,
    mirror_block,
    reduced_maps,
)
from .perturb import Observable, ValueAssignment, assign_values, modulus, perturb, sample_observable, sup_distance
from .space import (
    DEFAULT_EXACT_CAP,
    FiniteSpace,
    GroupAction,
    MapFamily,
    Perm,
    orbit,
    periodic_set,
    restricted_space,
)
from .witness import BipartiteInstance, check_separation

Pair = tuple[int, int]

BRANCH_EMPTY = "empty"
BRANCH_SKIPPED = "already_separated"


@dataclass(frozen=True)
class HypothesisCheck:
    kind: str              # "partition" or "periodic"
    label: str
    subset_size: int
    dim: int
    bound_num: int         # the strict bound is dim < bound_num / 2
    passed: bool

    def describe(self) -> str:
        verdict = "ok" if self.passed else "FAIL"
        return (
            f"{self.kind} {self.label}: dim {self.dim} < {self.bound_num}/2 "
            f"[{verdict}]"
        )


@dataclass(frozen=True)
class HypothesisReport:
    r: int
    checks: tuple[HypothesisCheck, ...]
    passed: bool

    def failures(self) -> tuple[HypothesisCheck, ...]:
        return tuple(c for c in self.checks if not c.passed)


def _set_partitions(items: Sequence[int]) -> Iterator[tuple[tuple[int, ...], ...]]:
    """All set partitions of ``items``, lexicographic in growth order."""
    items = list(items)
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for sub in _set_partitions(rest):
        yield tuple(sorted([(first,)] + list(sub)))
        for k in range(len(sub)):
            grown = list(sub)
            grown[k] = tuple(sorted((first,) + sub[k]))
            yield tuple(sorted(grown))


def check_hypotheses_family(
    fam: MapFamily, r: int, enumerate_all_limit: int = 8
) -> HypothesisReport:
    """Check dim(X_P) < (r/2)|P| for the partitions of the family.

    All partitions of the index set are enumerated when the family is small
    enough; beyond the limit only partitions realized by some point are
    checked (unrealized classes are empty, so they hold vacuously anyway).
    """
    if r < 1:
        raise InputError("r must be at least 1")
    n = fam.size
    candidates: set[Partition] = {
        induced_partition(fam, x) for x in range(fam.source.n_points)
    }
    if n <= enumerate_all_limit:
        for blocks in _set_partitions(range(n)):
            candidates.add(Partition.of(range(n), blocks))
    checks = []
    everything = range(fam.source.n_points)
    for p in sorted(candidates, key=lambda q: (len(q.blocks), q.blocks)):
        xp = compatible_subset(fam, everything, p)
        d = fam.source.dim(xp)
        bound_num = r * p.block_count()
        checks.append(
            HypothesisCheck(
                "partition", str(p.serialize()), len(xp), d, bound_num, 2 * d < bound_num
            )
        )
    return HypothesisReport(r, tuple(checks), all(c.passed for c in checks))


def check_hypotheses_action(
    action: GroupAction, r: int, n_max: int | None = None
) -> HypothesisReport:
    """Check dim of the n-periodic set against (r/2) n for n up to n_max.

    The default n_max is the largest orbit size; beyond it the periodic sets
    stop growing while the bound keeps increasing.
    """
    if r < 1:
        raise InputError("r must be at least 1")
    if n_max is None:
        n_max = max(len(orbit(action, x)) for x in range(action.space.n_points))
    checks = []
    for n in range(1, n_max + 1):
        pn = periodic_set(action, n)
        d = action.space.dim(pn)
        checks.append(
            HypothesisCheck("periodic", f"N={n}", len(pn), d, r * n, 2 * d < r * n)
        )
    return HypothesisReport(r, tuple(checks), all(c.passed for c in checks))


def margin(f: Observable, fam: MapFamily, pairs: Iterable[Pair]) -> Fraction | float:
    """Least sup-distance between orbit tuples over the given pairs.

    Exact: zero is returned exactly when some pair's tuples coincide.  An
    empty pair collection yields infinity.
    """
    best: Fraction | float = math.inf
    for x1, x2 in pairs:
        worst = Fraction(0)
        for g in fam.maps:
            row1 = f.values[g[x1]]
            row2 = f.values[g[x2]]
            for a, b in zip(row1, row2):
                d = abs(a - b)
                if d > worst:
                    worst = d
        if worst < best:
            best = worst
    return best


def orbit_row(f: Observable, fam: MapFamily, x: int) -> tuple[tuple[Fraction, ...], ...]:
    return tuple(f.values[g[x]] for g in fam.maps)


def _lipschitz(f: Observable) -> float:
    best = 0.0
    n = f.space.n_points
    for y1 in range(n):
        for y2 in range(y1 + 1, n):
            d = f.space.distance(y1, y2)
            if d <= 0:
                continue
            gap = max(abs(a - b) for a, b in zip(f.values[y1], f.values[y2]))
            ratio = float(gap) / d
            if ratio > best:
                best = ratio
    return best


@dataclass(frozen=True, eq=False)
class BlockLog:
    """Audit record of one block: what ran, with what data, and how it went."""

    partition: Partition
    pairs: tuple[Pair, ...]
    branch: str
    swapped: bool = False
    budget: Fraction | None = None
    eta: Fraction | None = None
    delta: float | None = None
    m1: int | None = None
    m2: int | None = None
    transport: tuple[tuple[int, int], ...] | None = None
    zeta: tuple[tuple[int, int], ...] | None = None
    covers_col1: tuple[tuple[tuple[int, ...], ...], ...] | None = None
    covers_col2: tuple[tuple[tuple[int, ...], ...], ...] | None = None
    merged: tuple[tuple[tuple[int, ...], ...], ...] | None = None
    assignment: ValueAssignment | None = None
    witness_kinds: tuple[str, ...] | None = None
    margin_before: Fraction | float | None = None
    margin_after: Fraction | float | None = None
    displacement: Fraction | None = None
    lipschitz_before: float | None = None
    lipschitz_after: float | None = None


def _families_to_log(fams: Sequence[Sequence[frozenset[int]]]) -> tuple:
    return tuple(tuple(tuple(sorted(sub)) for sub in fam) for fam in fams)


def _certify_eta(fam: MapFamily, eta: Fraction, delta: Fraction | float) -> bool:
    """Exhaustive guard: source pairs closer than eta map within delta everywhere."""
    if delta == math.inf:
        return True
    n = fam.source.n_points
    for x1 in range(n):
        for x2 in range(x1 + 1, n):
            if Fraction(fam.source.distance(x1, x2)) < eta:
                for g in fam.maps:
                    d = Fraction(fam.target.distance(g[x1], g[x2]))
                    if not d < delta:
                        return False
    return True


def separate_on_block(
    df: DoubledFamily,
    block: CoherentBlock,
    f: Observable,
    eps: Fraction | float,
    backend: str = BACKEND_CELLS,
    coords: Coords | None = None,
) -> tuple[Observable, BlockLog]:
    """Separate every pair of one coherent block by a perturbation within eps.

    The construction: work with the column whose reduced family is larger as
    column 1 (mirroring the block if needed).  Compute the modulus floor
    delta over all coordinates at gap eps/2, then the largest eta on the
    halving grid below eps such that eta-close source points stay delta-close
    under every map.  Cover the column-2 projection with r*M2 families of
    eta/2-small sets at multiplicity floor(r*M2/2)+1.  In the intersective
    case the block is the graph of a transport bijection T; covers for the
    matched column-1 classes are pulled through T so that their pushed images
    coincide with the column-2 ones, and the remaining column-1 classes get a
    fresh small partition so their multiplicity stays a majority.  All pushed
    sets merge per coordinate, get exact rational values, and the perturbed
    observable is checked pair by pair through an explicit witness.
    """
    fam = df.base
    eps_f = Fraction(eps)
    if eps_f <= 0:
        raise InputError("eps must be positive")
    r = f.r
    if not block.pairs:
        return f, BlockLog(block.partition, (), BRANCH_EMPTY)

    work = block
    swapped = False
    if (
        column_partition(block.partition, 1).block_count()
        < column_partition(block.partition, 2).block_count()
    ):
        work = mirror_block(df, block)
        swapped = True

    red1 = reduced_maps(df, work, 1)
    red2 = reduced_maps(df, work, 2)
    m1 = red1.partition.block_count()
    m2 = red2.partition.block_count()

    mods = [modulus(f, ell, eps_f / 2) for ell in range(r)]
    finite = [Fraction(v) for v in mods if v != math.inf]
    delta: Fraction | float = (min(finite) / 2) if finite else math.inf

    eta = eps_f
    while not _certify_eta(fam, eta, delta):
        eta = eta / 2
    bound = eta / 2

    mu2 = (r * m2) // 2 + 1
    cover2 = build_cover(fam.source, red2.points, r * m2, mu2, bound, backend, coords)
    fams2: list[tuple[frozenset[int], ...]] = list(cover2.families)

    branch = classify(work.partition)
    transport_log = None
    zeta_log = None
    if branch == NON_INTERSECTIVE:
        mu1 = (r * m1) // 2 + 1
        cover1 = build_cover(fam.source, red1.points, r * m1, mu1, bound, backend, coords)
        fams1: list[tuple[frozenset[int], ...]] = list(cover1.families)
    else:
        tr = intersective_transport(df, work)
        transport_log = tuple(sorted(tr.transport.items()))
        zeta_log = tuple(sorted(tr.zeta.items()))
        pulled = pull_cover(cover2, tr.transport, fam.source)
        fresh = diameter_clusters(fam.source, red1.points, bound)
        fams1 = [fresh for _ in range(m1 * r)]
        for t2 in sorted(tr.intersecting):
            for ell in range(r):
                fams1[tr.zeta[t2] * r + ell] = pulled.families[t2 * r + ell]

    merged: list[list[frozenset[int]]] = [[] for _ in range(r)]
    seen: list[set[frozenset[int]]] = [set() for _ in range(r)]

    def absorb(rep: dict[int, int], fams: Sequence[Sequence[frozenset[int]]], t: int) -> None:
        for ell in range(r):
            for sub in fams[t * r + ell]:
                img = frozenset(rep[x] for x in sub)
                if img not in seen[ell]:
                    seen[ell].add(img)
                    merged[ell].append(img)

    for t1 in range(m1):
        absorb(red1.reps[t1], fams1, t1)
    for t2 in range(m2):
        absorb(red2.reps[t2], fams2, t2)
    for ell in range(r):
        for a in range(len(merged[ell])):
            for b in range(a + 1, len(merged[ell])):
                if merged[ell][a] & merged[ell][b]:
                    raise InternalCheckError(
                        f"merged family {ell}: pushed sets {sorted(merged[ell][a])} and "
                        f"{sorted(merged[ell][b])} overlap; coherence was violated"
                    )
    merged_t = tuple(tuple(fam_l) for fam_l in merged)

    lip_before = _lipschitz(f)
    assignment = assign_values(merged_t, f, eps_f)
    f_new = perturb(f, assignment, merged_t)

    union1 = [frozenset().union(*fams1[k]) if fams1[k] else frozenset() for k in range(m1 * r)]
    union2 = [frozenset().union(*fams2[k]) if fams2[k] else frozenset() for k in range(m2 * r)]
    bidx1 = {i: red1.partition.block_index(i) for i in range(fam.size)}
    bidx2 = {i: red2.partition.block_index(i) for i in range(fam.size)}
    w_labels = tuple((i, ell) for i in range(fam.size) for ell in range(r))
    v1_labels = tuple((t, ell) for t in range(m1) for ell in range(r))
    v2_labels = tuple((t, ell) for t in range(m2) for ell in range(r))
    f1_map = {(i, ell): (bidx1[i], ell) for (i, ell) in w_labels}
    f2_map = {(i, ell): (bidx2[i], ell) for (i, ell) in w_labels}

    kinds = []
    for x1, x2 in work.pairs:
        v1_star = frozenset(
            (t, ell) for (t, ell) in v1_labels if x1 in union1[t * r + ell]
        )
        v2_star = frozenset(
            (t, ell) for (t, ell) in v2_labels if x2 in union2[t * r + ell]
        )
        phi1 = {(t, ell): f_new.values[red1.reps[t][x1]][ell] for (t, ell) in v1_labels}
        phi2 = {(t, ell): f_new.values[red2.reps[t][x2]][ell] for (t, ell) in v2_labels}
        try:
            inst = BipartiteInstance.create(
                w_labels, v1_labels, v2_labels, f1_map, f2_map, v1_star, v2_star
            )
            proof = check_separation(inst, phi1, phi2)
        except InputError as exc:
            raise InternalCheckError(
                f"separation self-check failed for pair ({x1}, {x2}): {exc}"
            ) from exc
        i, ell = proof.w
        if f_new.values[fam.maps[i][x1]][ell] == f_new.values[fam.maps[i][x2]][ell]:
            raise InternalCheckError(
                f"witness map {i}, coordinate {ell} does not separate pair ({x1}, {x2})"
            )
        kinds.append(proof.witness.kind)

    blk_margin = margin(f_new, fam, work.pairs)
    if not blk_margin > 0:
        raise InternalCheckError("block margin is zero after perturbation")
    moved = sup_distance(f_new, f)

    log = BlockLog(
        partition=block.partition,
        pairs=block.pairs,
        branch=branch,
        swapped=swapped,
        budget=eps_f,
        eta=eta,
        delta=(float(delta) if delta != math.inf else math.inf),
        m1=m1,
        m2=m2,
        transport=transport_log,
        zeta=zeta_log,
        covers_col1=_families_to_log(fams1),
        covers_col2=_families_to_log(fams2),
        merged=_families_to_log(merged_t),
        assignment=assignment,
        witness_kinds=tuple(kinds),
        margin_after=blk_margin,
        displacement=moved,
        lipschitz_before=lip_before,
        lipschitz_after=_lipschitz(f_new),
    )
    return f_new, log


@dataclass(frozen=True, eq=False)
class StageRecord:
    """One processed family: its maps, ambient points, and final orbit table."""

    points: tuple[int, ...]
    maps: tuple[tuple[int, ...], ...]
    labels: tuple[str, ...]
    f_perms: tuple[Perm, ...] | None
    eps_sep: Fraction | None
    margin: Fraction | float
    table: tuple[tuple[tuple[Fraction, ...], ...], ...]


@dataclass(frozen=True, eq=False)
class EmbeddingCertificate:
    kind: str                       # "family" or "action"
    r: int
    eps: Fraction
    seed: int | None
    backend: str
    hypothesis: HypothesisReport
    f0: Observable
    observable: Observable
    blocks: tuple[BlockLog, ...]
    stages: tuple[StageRecord, ...]
    margin: Fraction | float
    displacement: Fraction


class _BaireState:
    """Shared budget schedule and separation ledger across blocks and stages."""

    def __init__(self, f: Observable, eps: Fraction):
        self.f = f
        self.eps = eps
        self.geom = eps / 2
        self.groups: list[tuple[MapFamily, list[Pair]]] = []
        self.logs: list[BlockLog] = []

    def ledger_margin(self) -> Fraction | float:
        vals = [margin(self.f, fam, pairs) for fam, pairs in self.groups if pairs]
        return min(vals) if vals else math.inf


def _run_family_blocks(
    state: _BaireState,
    fam: MapFamily,
    backend: str,
    coords: Coords | None,
) -> None:
    """Process every coherent block of one family under the shared schedule.

    Budgets shrink geometrically from eps/2 and are additionally capped by a
    quarter of the running ledger margin; a perturbation within half the
    margin keeps previously separated pairs separated, and staying strictly
    inside that radius keeps the inequality strict.  Monotone progress is
    asserted after every block.
    """
    df = DoubledFamily(fam)
    n = fam.source.n_points
    group_pairs: list[Pair] = []
    state.groups.append((fam, group_pairs))

    realized: set[Partition] = set()
    for x1 in range(n):
        for x2 in range(n):
            if x1 != x2:
                realized.add(doubled_induced_partition(df, (x1, x2)))
    ordered = sorted(realized, key=lambda p: (-len(p.blocks), p.blocks))

    for p_hat in ordered:
        for blk in coherent_decomposition(df, p_hat):
            pre = margin(state.f, fam, blk.pairs)
            if pre > 0:
                state.logs.append(
                    BlockLog(
                        partition=blk.partition,
                        pairs=blk.pairs,
                        branch=BRANCH_SKIPPED,
                        margin_before=pre,
                    )
                )
                group_pairs.extend(blk.pairs)
                continue
            cap = state.ledger_margin()
            budget = state.geom
            if cap != math.inf and cap / 4 < budget:
                budget = cap / 4
            f_new, blog = separate_on_block(df, blk, state.f, budget, backend, coords)
            state.f = f_new
            state.geom = state.geom / 2
            group_pairs.extend(blk.pairs)
            after = state.ledger_margin()
            if not after > 0:
                raise InternalCheckError(
                    "monotone progress violated: a previously separated pair collided"
                )
            state.logs.append(
                BlockLog(
                    partition=blog.partition,
                    pairs=blog.pairs,
                    branch=blog.branch,
                    swapped=blog.swapped,
                    budget=blog.budget,
                    eta=blog.eta,
                    delta=blog.delta,
                    m1=blog.m1,
                    m2=blog.m2,
                    transport=blog.transport,
                    zeta=blog.zeta,
                    covers_col1=blog.covers_col1,
                    covers_col2=blog.covers_col2,
                    merged=blog.merged,
                    assignment=blog.assignment,
                    witness_kinds=blog.witness_kinds,
                    margin_before=pre,
                    margin_after=after,
                    displacement=blog.displacement,
                    lipschitz_before=blog.lipschitz_before,
                    lipschitz_after=blog.lipschitz_after,
                )
            )


def _final_table(f: Observable, fam: MapFamily) -> tuple:
    return tuple(orbit_row(f, fam, x) for x in range(fam.source.n_points))


def embed_family(
    fam: MapFamily,
    r: int,
    eps: Fraction | float,
    f0: Observable | None = None,
    seed: int | None = None,
    backend: str = BACKEND_CELLS,
    coords: Coords | None = None,
) -> EmbeddingCertificate:
    """Perturb an observable until the orbit map of the family is injective.

    Raises HypothesisError when some partition class has declared dimension
    at least (r/2) times its block count; otherwise returns a certificate
    whose margin is strictly positive and whose displacement stays within
    eps, both exact.
    """
    eps_f = Fraction(eps)
    if eps_f <= 0:
        raise InputError("eps must be positive")
    used_seed = None
    if f0 is None:
        used_seed = 0 if seed is None else seed
        f0 = sample_observable(fam.target, r, used_seed)
    if f0.r != r:
        raise InputError(f"observable has r={f0.r}, requested r={r}")
    if f0.space.n_points != fam.target.n_points:
        raise InputError("observable lives on the wrong space")

    report = check_hypotheses_family(fam, r)
    if not report.passed:
        first = report.failures()[0]
        raise HypothesisError(
            f"dimension hypothesis fails: {first.describe()}", report
        )

    state = _BaireState(f0, eps_f)
    _run_family_blocks(state, fam, backend, coords)

    n = fam.source.n_points
    unordered = [(a, b) for a in range(n) for b in range(a + 1, n)]
    final_margin = margin(state.f, fam, unordered)
    if unordered and not final_margin > 0:
        raise InternalCheckError("final margin is zero; some pair was never separated")
    displacement = sup_distance(state.f, f0)
    if displacement > eps_f:
        raise InternalCheckError(
            f"total displacement {displacement} exceeds eps {eps_f}"
        )

    stage = StageRecord(
        points=tuple(range(n)),
        maps=fam.maps,
        labels=fam.labels,
        f_perms=None,
        eps_sep=None,
        margin=final_margin,
        table=_final_table(state.f, fam),
    )
    return EmbeddingCertificate(
        kind="family",
        r=r,
        eps=eps_f,
        seed=used_seed,
        backend=backend,
        hypothesis=report,
        f0=f0,
        observable=state.f,
        blocks=tuple(state.logs),
        stages=(stage,),
        margin=final_margin,
        displacement=displacement,
    )


def default_stage_n(space: FiniteSpace, r: int) -> int:
    """Smallest n with 2 dim(X) < r n, used for the separation threshold."""
    d = space.dim(range(space.n_points))
    return (2 * d) // r + 1


def embed_equivariant(
    action: GroupAction,
    r: int,
    eps: Fraction | float,
    f0: Observable | None = None,
    seed: int | None = None,
    stages: Sequence[tuple[Sequence[Perm], Fraction | float | None]] | None = None,
    backend: str = BACKEND_CELLS,
    coords: Coords | None = None,
    exact_cap: int = DEFAULT_EXACT_CAP,
) -> EmbeddingCertificate:
    """Make one observable's orbit map injective for a group action.

    With the group fully enumerated the whole element list forms a single
    stage over the full space.  When the closure was capped the caller must
    pass finite stages explicitly: each stage is a pair (F, eps_sep) of
    element permutations and a separation scale, and is embedded on the
    subspace of points whose F-orbit either equals the full orbit or spreads
    into at least r*n points pairwise eps_sep-apart.
    """
    eps_f = Fraction(eps)
    if eps_f <= 0:
        raise InputError("eps must be positive")
    if stages is None:
        if action.elements is None:
            raise GroupCapError(
                "group closure was capped; pass finite stages (F, eps_sep) explicitly"
            )
        stage_specs: list[tuple[tuple[Perm, ...], Fraction | None]] = [
            (action.elements, None)
        ]
    else:
        stage_specs = []
        for f_perms, eps_sep in stages:
            perms = tuple(tuple(int(v) for v in p) for p in f_perms)
            stage_specs.append(
                (perms, None if eps_sep is None else Fraction(eps_sep))
            )

    used_seed = None
    if f0 is None:
        used_seed = 0 if seed is None else seed
        f0 = sample_observable(action.space, r, used_seed)
    if f0.r != r:
        raise InputError(f"observable has r={f0.r}, requested r={r}")
    if f0.space.n_points != action.space.n_points:
        raise InputError("observable lives on the wrong space")

    report = check_hypotheses_action(action, r)
    if not report.passed:
        first = report.failures()[0]
        raise HypothesisError(
            f"dimension hypothesis fails: {first.describe()}", report
        )

    n_threshold = default_stage_n(action.space, r)
    state = _BaireState(f0, eps_f)
    stage_fams: list[tuple[MapFamily, tuple[int, ...], tuple[Perm, ...], Fraction | None]] = []
    for f_perms, eps_sep in stage_specs:
        if eps_sep is None:
            pts = tuple(range(action.space.n_points))
        else:
            pts = tuple(
                sorted(
                    restricted_space(action, f_perms, eps_sep, r, n_threshold, exact_cap)
                )
            )
        if not pts:
            stage_fams.append((None, (), f_perms, eps_sep))
            continue
        sub, pts = action.space.subspace(pts)
        local_maps = [tuple(p[x] for x in pts) for p in f_perms]
        fam = MapFamily.create(
            sub, action.space, local_maps, labels=[f"e{k}" for k in range(len(f_perms))]
        )
        fam_report = check_hypotheses_family(fam, r)
        if not fam_report.passed:
            first = fam_report.failures()[0]
            raise HypothesisError(
                f"stage hypothesis fails: {first.describe()}", fam_report
            )
        _run_family_blocks(state, fam, backend, coords)
        stage_fams.append((fam, pts, f_perms, eps_sep))

    records = []
    margins: list[Fraction | float] = []
    for fam, pts, f_perms, eps_sep in stage_fams:
        if fam is None:
            records.append(
                StageRecord((), (), (), f_perms, eps_sep, math.inf, ())
            )
            continue
        k = fam.source.n_points
        unordered = [(a, b) for a in range(k) for b in range(a + 1, k)]
        stage_margin = margin(state.f, fam, unordered)
        if unordered and not stage_margin > 0:
            raise InternalCheckError("stage margin is zero after all blocks")
        margins.append(stage_margin)
        records.append(
            StageRecord(
                points=pts,
                maps=fam.maps,
                labels=fam.labels,
                f_perms=f_perms,
                eps_sep=eps_sep,
                margin=stage_margin,
                table=_final_table(state.f, fam),
            )
        )

    displacement = sup_distance(state.f, f0)
    if displacement > eps_f:
        raise InternalCheckError(
            f"total displacement {displacement} exceeds eps {eps_f}"
        )
    total_margin = min(margins) if margins else math.inf
    return EmbeddingCertificate(
        kind="action",
        r=r,
        eps=eps_f,
        seed=used_seed,
        backend=backend,
        hypothesis=report,
        f0=f0,
        observable=state.f,
        blocks=tuple(state.logs),
        stages=tuple(records),
        margin=total_margin,
        displacement=displacement,
    )

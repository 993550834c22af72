"""File formats, certificate serialization, and bit-exact re-verification.

All exact values travel as strings: a Fraction serializes to "p/q" (or "p"
when the denominator is 1) and parses back unchanged, so certificates round
trip without loss.  Infinite margins serialize as "inf".  JSON documents
are written with sorted keys and a fixed separator convention, which makes
output bytes a pure function of the input data.

Input file formats (one JSON object per file):

  space:      {"metric": [[float]], "simplices": [[int]]?, "dim_labels": [[[int], int]]?}
  family:     {"maps": [[int]], "labels": [str]?, "source": <space object>?}
  action:     {"generators": [[int]], "stages": [{"elements": [[int]], "eps_sep": str|null}]?}
  coords:     {"dim": int, "points": [[float]]}
  observable: {"r": int, "values": [[str|int|float]]}

A certificate file is a single JSON object carrying the run configuration,
the hypothesis report, the initial and final observables, one log per
processed block, one record per stage, and a content hash ("cert_sha256")
over everything else.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from fractions import Fraction
from typing import Any, Sequence

from .covers import Coords
from .errors import InputError, VerificationError
from .perturb import Observable
from .pipeline import (
    BlockLog,
    EmbeddingCertificate,
    HypothesisCheck,
    HypothesisReport,
    StageRecord,
    check_hypotheses_action,
    check_hypotheses_family,
    margin,
)
from .space import FiniteSpace, GroupAction, MapFamily, Perm, validate_space

CERT_FORMAT = "menger-certificate"


def fr_str(x: Fraction) -> str:
    return str(Fraction(x))


def parse_fraction(value: Any, where: str = "value") -> Fraction:
    """Exact rational from a JSON scalar.

    Strings are parsed directly ("3/7", "0.05"); integers exactly; floats go
    through their shortest decimal form, so 0.05 in a file means 1/20.
    """
    try:
        if isinstance(value, str):
            return Fraction(value)
        if isinstance(value, bool):
            raise ValueError("boolean is not a number")
        if isinstance(value, int):
            return Fraction(value)
        if isinstance(value, float):
            return Fraction(str(value))
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"{where}: cannot parse {value!r} as a rational") from exc
    raise InputError(f"{where}: cannot parse {value!r} as a rational")


def _margin_str(x: Fraction | float) -> str:
    return "inf" if x == math.inf else fr_str(x)


def _parse_margin(s: Any, where: str) -> Fraction | float:
    if s == "inf":
        return math.inf
    return parse_fraction(s, where)


def _read_json(path: str) -> Any:
    if not os.path.exists(path):
        raise InputError(f"{path}: no such file")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from exc


def _require(obj: Any, key: str, path: str) -> Any:
    if not isinstance(obj, dict) or key not in obj:
        raise InputError(f"{path}: missing required key {key!r}")
    return obj[key]


def load_space(path: str, validate: bool = True) -> FiniteSpace:
    doc = _read_json(path)
    metric = _require(doc, "metric", path)
    simplices = doc.get("simplices")
    dim_labels = doc.get("dim_labels")
    try:
        space = FiniteSpace.create(
            metric,
            simplices=[frozenset(int(v) for v in s) for s in simplices]
            if simplices is not None
            else None,
            dim_labels=[(frozenset(int(v) for v in s), int(d)) for s, d in dim_labels]
            if dim_labels is not None
            else None,
        )
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if validate:
        report = validate_space(space)
        if not report.ok:
            raise InputError(f"{path}: invalid metric space: {report.issues[0]}")
    return space


def save_space(space: FiniteSpace, path: str) -> None:
    doc: dict[str, Any] = {"metric": [[float(v) for v in row] for row in space.metric]}
    if space.simplices is not None:
        doc["simplices"] = [sorted(s) for s in space.simplices]
    if space.dim_labels is not None:
        doc["dim_labels"] = [[sorted(s), d] for s, d in space.dim_labels]
    _write_json(path, doc)


def load_coords(path: str) -> Coords:
    doc = _read_json(path)
    dim = _require(doc, "dim", path)
    points = _require(doc, "points", path)
    try:
        return Coords.create(int(dim), points)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from exc


def save_coords(coords: Coords, path: str) -> None:
    _write_json(
        path,
        {"dim": coords.dim, "points": [[float(v) for v in p] for p in coords.points]},
    )


def load_family(path: str, space: FiniteSpace) -> MapFamily:
    doc = _read_json(path)
    maps = _require(doc, "maps", path)
    labels = doc.get("labels")
    source = space
    if "source" in doc:
        src = doc["source"]
        try:
            source = FiniteSpace.create(
                src["metric"],
                simplices=[frozenset(int(v) for v in s) for s in src.get("simplices", [])]
                or None,
                dim_labels=[
                    (frozenset(int(v) for v in s), int(d))
                    for s, d in src.get("dim_labels", [])
                ]
                or None,
            )
        except (InputError, KeyError, TypeError) as exc:
            raise InputError(f"{path}: bad embedded source space: {exc}") from exc
    try:
        return MapFamily.create(source, space, maps, labels=labels)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from exc


def save_family(fam: MapFamily, path: str) -> None:
    _write_json(path, {"maps": [list(m) for m in fam.maps], "labels": list(fam.labels)})


def load_action(
    path: str, space: FiniteSpace, group_cap: int
) -> tuple[GroupAction, list[tuple[tuple[Perm, ...], Fraction | None]] | None]:
    doc = _read_json(path)
    generators = _require(doc, "generators", path)
    try:
        action = GroupAction.from_generators(
            space, generators, cap=group_cap, require_closure=False
        )
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from exc
    stages = None
    if "stages" in doc:
        stages = []
        for k, st in enumerate(doc["stages"]):
            elements = _require(st, "elements", f"{path} (stage {k})")
            perms = tuple(tuple(int(v) for v in p) for p in elements)
            for p in perms:
                if sorted(p) != list(range(space.n_points)):
                    raise InputError(f"{path}: stage {k} element is not a permutation")
            eps_sep = st.get("eps_sep")
            stages.append(
                (
                    perms,
                    None
                    if eps_sep is None
                    else parse_fraction(eps_sep, f"{path} stage {k} eps_sep"),
                )
            )
    return action, stages


def save_action(generators: Sequence[Perm], path: str) -> None:
    _write_json(path, {"generators": [list(g) for g in generators]})


def load_observable(path: str, space: FiniteSpace) -> Observable:
    doc = _read_json(path)
    r = int(_require(doc, "r", path))
    values = _require(doc, "values", path)
    rows = [
        [parse_fraction(v, f"{path}: values[{y}][{ell}]") for ell, v in enumerate(row)]
        for y, row in enumerate(values)
    ]
    try:
        obs = Observable.create(space, rows)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if obs.r != r:
        raise InputError(f"{path}: declared r={r} but rows have {obs.r} values")
    return obs


def save_observable(obs: Observable, path: str) -> None:
    _write_json(
        path,
        {"r": obs.r, "values": [[fr_str(v) for v in row] for row in obs.values]},
    )


def _write_json(path: str, doc: Any) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")


def hash_file(path: str) -> str:
    if not os.path.exists(path):
        raise InputError(f"{path}: no such file")
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def canonical_json(doc: Any) -> str:
    return json.dumps(
        doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True, allow_nan=False
    )


def _values_doc(obs: Observable) -> list[list[str]]:
    return [[fr_str(v) for v in row] for row in obs.values]


def hypothesis_doc(report: HypothesisReport) -> dict[str, Any]:
    return {
        "r": report.r,
        "passed": report.passed,
        "checks": [
            {
                "kind": c.kind,
                "label": c.label,
                "subset_size": c.subset_size,
                "dim": c.dim,
                "bound_num": c.bound_num,
                "passed": c.passed,
            }
            for c in report.checks
        ],
    }


def _assignment_doc(log: BlockLog) -> Any:
    if log.assignment is None:
        return None
    return {
        "eps": fr_str(log.assignment.eps),
        "per_coordinate": [
            [[sorted(sub), fr_str(v)] for sub, v in entries]
            for entries in log.assignment.per_coordinate
        ],
    }


def _block_doc(log: BlockLog) -> dict[str, Any]:
    return {
        "partition": [[list(lbl) for lbl in blk] for blk in log.partition.blocks],
        "pairs": [list(p) for p in log.pairs],
        "branch": log.branch,
        "swapped": log.swapped,
        "budget": None if log.budget is None else fr_str(log.budget),
        "eta": None if log.eta is None else fr_str(log.eta),
        "delta": None
        if log.delta is None
        else ("inf" if log.delta == math.inf else log.delta),
        "m1": log.m1,
        "m2": log.m2,
        "transport": None if log.transport is None else [list(p) for p in log.transport],
        "zeta": None if log.zeta is None else [list(p) for p in log.zeta],
        "covers_col1": None
        if log.covers_col1 is None
        else [[sorted(sub) for sub in fam] for fam in log.covers_col1],
        "covers_col2": None
        if log.covers_col2 is None
        else [[sorted(sub) for sub in fam] for fam in log.covers_col2],
        "merged": None
        if log.merged is None
        else [[sorted(sub) for sub in fam] for fam in log.merged],
        "assignment": _assignment_doc(log),
        "witness_kinds": None if log.witness_kinds is None else list(log.witness_kinds),
        "margin_before": None
        if log.margin_before is None
        else _margin_str(log.margin_before),
        "margin_after": None
        if log.margin_after is None
        else _margin_str(log.margin_after),
        "displacement": None if log.displacement is None else fr_str(log.displacement),
        "lipschitz_before": log.lipschitz_before,
        "lipschitz_after": log.lipschitz_after,
    }


def _stage_doc(stage: StageRecord) -> dict[str, Any]:
    return {
        "points": list(stage.points),
        "maps": [list(m) for m in stage.maps],
        "labels": list(stage.labels),
        "f_perms": None if stage.f_perms is None else [list(p) for p in stage.f_perms],
        "eps_sep": None if stage.eps_sep is None else fr_str(stage.eps_sep),
        "margin": _margin_str(stage.margin),
        "table": [
            [[fr_str(v) for v in per_map] for per_map in row] for row in stage.table
        ],
    }


def certificate_payload(
    cert: EmbeddingCertificate,
    config: dict[str, Any] | None = None,
    input_hashes: dict[str, str] | None = None,
) -> dict[str, Any]:
    """The serializable body of a certificate, without its content hash."""
    from . import __version__

    return {
        "format": CERT_FORMAT,
        "version": __version__,
        "kind": cert.kind,
        "r": cert.r,
        "eps": fr_str(cert.eps),
        "seed": cert.seed,
        "backend": cert.backend,
        "config": dict(config or {}),
        "inputs": dict(input_hashes or {}),
        "hypothesis": hypothesis_doc(cert.hypothesis),
        "f0_values": _values_doc(cert.f0),
        "observable_values": _values_doc(cert.observable),
        "blocks": [_block_doc(b) for b in cert.blocks],
        "stages": [_stage_doc(s) for s in cert.stages],
        "margin": _margin_str(cert.margin),
        "displacement": fr_str(cert.displacement),
    }


def write_certificate(
    path: str,
    cert: EmbeddingCertificate,
    config: dict[str, Any] | None = None,
    input_hashes: dict[str, str] | None = None,
) -> dict[str, Any]:
    payload = certificate_payload(cert, config, input_hashes)
    payload["cert_sha256"] = hashlib.sha256(
        canonical_json(payload).encode("ascii")
    ).hexdigest()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(payload))
        fh.write("\n")
    return payload


def load_certificate(path: str) -> dict[str, Any]:
    doc = _read_json(path)
    if not isinstance(doc, dict) or doc.get("format") != CERT_FORMAT:
        raise InputError(f"{path}: not a certificate file")
    return doc


def _parse_values(doc: Any, n: int, r: int, where: str) -> list[list[Fraction]]:
    if not isinstance(doc, list) or len(doc) != n:
        raise VerificationError(f"{where}: expected {n} value rows")
    rows = []
    for y, row in enumerate(doc):
        if len(row) != r:
            raise VerificationError(f"{where}: row {y} has {len(row)} values, expected {r}")
        rows.append([parse_fraction(v, f"{where}[{y}]") for v in row])
    return rows


def verify_certificate(
    cert: dict[str, Any],
    space: FiniteSpace | None = None,
    action: GroupAction | None = None,
    family: MapFamily | None = None,
    input_hashes: dict[str, str] | None = None,
) -> list[str]:
    """Re-derive everything checkable from a certificate document.

    Returns the list of mismatches (empty means the certificate is sound).
    The content hash is checked first; then every recomputed quantity, the
    margins, the displacement, and the stage tables must match the stored
    strings exactly.  When the original input objects are supplied, the
    hypothesis report and recorded input hashes are recomputed too.
    """
    issues: list[str] = []

    stored_hash = cert.get("cert_sha256")
    body = {k: v for k, v in cert.items() if k != "cert_sha256"}
    actual = hashlib.sha256(canonical_json(body).encode("ascii")).hexdigest()
    if stored_hash != actual:
        issues.append("cert_sha256 mismatch: certificate content was altered")
        return issues

    try:
        r = int(cert["r"])
        eps = parse_fraction(cert["eps"], "eps")
        n = len(cert["observable_values"])
        f0_rows = _parse_values(cert["f0_values"], n, r, "f0_values")
        new_rows = _parse_values(cert["observable_values"], n, r, "observable_values")
    except (KeyError, TypeError) as exc:
        return [f"certificate is missing required data: {exc}"]

    for name, rows in (("f0", f0_rows), ("observable", new_rows)):
        for y, row in enumerate(rows):
            for v in row:
                if not 0 <= v <= 1:
                    issues.append(f"{name} value out of [0, 1] at point {y}")

    displacement = Fraction(0)
    for row0, row1 in zip(f0_rows, new_rows):
        for a, b in zip(row0, row1):
            if abs(a - b) > displacement:
                displacement = abs(a - b)
    if fr_str(displacement) != cert.get("displacement"):
        issues.append(
            f"displacement mismatch: recomputed {fr_str(displacement)}, "
            f"stored {cert.get('displacement')}"
        )
    if displacement > eps:
        issues.append(f"displacement {fr_str(displacement)} exceeds eps {fr_str(eps)}")

    stage_margins: list[Fraction | float] = []
    for s_idx, st in enumerate(cert.get("stages", [])):
        pts = [int(p) for p in st["points"]]
        maps = [[int(v) for v in m] for m in st["maps"]]
        where = f"stage {s_idx}"
        if st.get("f_perms") is not None:
            for k, perm in enumerate(st["f_perms"]):
                derived = [perm[p] for p in pts]
                if derived != maps[k]:
                    issues.append(f"{where}: map {k} disagrees with its element")
        for m in maps:
            if len(m) != len(pts):
                issues.append(f"{where}: map length does not match point count")
        table = st["table"]
        if len(table) != len(pts):
            issues.append(f"{where}: table has {len(table)} rows for {len(pts)} points")
            continue
        worst: Fraction | float = math.inf
        for u, row in enumerate(table):
            for k, per_map in enumerate(row):
                expect = [fr_str(v) for v in new_rows[maps[k][u]]]
                if list(per_map) != expect:
                    issues.append(
                        f"{where}: table row {u}, map {k} does not match the observable"
                    )
        for u1 in range(len(pts)):
            for u2 in range(u1 + 1, len(pts)):
                gap = Fraction(0)
                for k in range(len(maps)):
                    for a, b in zip(new_rows[maps[k][u1]], new_rows[maps[k][u2]]):
                        if abs(a - b) > gap:
                            gap = abs(a - b)
                if gap < worst:
                    worst = gap
        stage_margins.append(worst)
        if _margin_str(worst) != st.get("margin"):
            issues.append(
                f"{where}: margin mismatch: recomputed {_margin_str(worst)}, "
                f"stored {st.get('margin')}"
            )
    total = min(stage_margins) if stage_margins else math.inf
    if _margin_str(total) != cert.get("margin"):
        issues.append(
            f"margin mismatch: recomputed {_margin_str(total)}, stored {cert.get('margin')}"
        )

    if input_hashes:
        recorded = cert.get("inputs", {})
        for key, value in input_hashes.items():
            if key in recorded and recorded[key] != value:
                issues.append(f"input hash mismatch for {key!r}")

    if space is not None and (action is not None or family is not None):
        stored = cert.get("hypothesis", {})
        try:
            if cert.get("kind") == "action" and action is not None:
                labels = [c["label"] for c in stored.get("checks", [])]
                n_max = len(labels) if labels else None
                report = check_hypotheses_action(action, r, n_max=n_max)
            elif family is not None:
                report = check_hypotheses_family(family, r)
            else:
                report = None
        except InputError as exc:
            issues.append(f"hypothesis recomputation failed: {exc}")
            report = None
        if report is not None and hypothesis_doc(report) != stored:
            issues.append("hypothesis report does not match the provided inputs")

    return issues


def write_orbit_csv(path: str, cert: dict[str, Any] | EmbeddingCertificate) -> list[str]:
    """Orbit map tables as CSV, one file per stage.

    Columns: the point index, then for every map of the stage (enumeration
    order) its r observable coordinates, exact "p/q" strings.  Returns the
    list of files written; stages beyond the first get a numbered suffix.
    """
    if isinstance(cert, EmbeddingCertificate):
        stages = [_stage_doc(s) for s in cert.stages]
        r = cert.r
    else:
        stages = cert["stages"]
        r = int(cert["r"])
    written = []
    root, ext = os.path.splitext(path)
    if ext.lower() != ".csv":
        root, ext = path, ".csv"
    for s_idx, st in enumerate(stages):
        target = f"{root}{ext}" if s_idx == 0 else f"{root}.stage{s_idx}{ext}"
        header = ["point"]
        for label in st["labels"]:
            for ell in range(r):
                header.append(f"{label}[{ell}]")
        with open(target, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for u, point in enumerate(st["points"]):
                row: list[Any] = [point]
                for k in range(len(st["maps"])):
                    row.extend(st["table"][u][k])
                writer.writerow(row)
        written.append(target)
    return written

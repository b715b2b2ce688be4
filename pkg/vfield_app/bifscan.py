"""
Sweeps over the parameter sphere.

The (s, theta) disk is scanned at alpha = 0 over the fundamental sector theta in [0, 2 pi/(k-1));
homoclinic bifurcations along each alpha fiber come from the horizontal chords of the alpha = 0
periodgon, so no alpha sampling is needed. Grid nodes are independent and evaluated by a process
pool; results are collected in grid order and written by the parent process only.
"""

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from itertools import combinations

import numpy as np

from .conf import Numerics
from .core import (
    TWO_PI,
    SphereCoords,
    check_guard_band,
    closed_form_eigenvalues,
    discriminant,
    from_sphere,
    guard_threshold,
    parabolic_point,
    singular_points,
)
from .event_kinds import EventKind
from .exceptions import FieldError, InvalidParameter, Parabolic
from .periodgon import build_periodgon, chord_alphas, domain_loops

logger = logging.getLogger(__name__)

CSV_FIELDS = ("kind", "k", "s", "theta", "alpha", "data")


# --------------------------------------------
# Types
# --------------------------------------------


@dataclass(frozen=True)
class BifurcationEvent:
    kind: str
    k: int
    coords: SphereCoords
    data: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in EventKind.values:
            raise InvalidParameter(f"Unknown event kind {self.kind!r}")
        if self.kind == EventKind.PARABOLIC_EPS0 and self.coords.s != 0.0:
            raise InvalidParameter("parabolic_eps0 events lie on s = 0")

    @property
    def s(self) -> float:
        return self.coords.s

    @property
    def theta(self) -> float:
        return self.coords.theta

    @property
    def alpha(self) -> float:
        return self.coords.alpha

    def record(self) -> dict:
        return {
            "kind": str(self.kind),
            "k": self.k,
            "s": float(self.s),
            "theta": float(self.theta),
            "alpha": float(self.alpha),
            "data": self.data,
        }

    @classmethod
    def from_record(cls, record: dict) -> "BifurcationEvent":
        coords = SphereCoords(float(record["s"]), float(record["theta"]), float(record["alpha"]))
        return cls(record["kind"], int(record["k"]), coords, dict(record.get("data") or {}))


@dataclass(frozen=True)
class ScanConfig:
    k: int
    n_s: int = 64
    n_theta: int = 64
    s_range: tuple[float, float] = (0.02, 0.98)
    alpha_window: tuple[float, float] = (0.0, TWO_PI)
    refine: bool = True
    refine_tol: float = 1e-4
    jobs: int = 1
    numerics: Numerics = field(default_factory=Numerics)
    jsonl_path: str | None = None
    csv_path: str | None = None

    def __post_init__(self):
        if self.k < 2:
            raise InvalidParameter(f"k must be >= 2, got {self.k}")
        if self.n_s < 2 or self.n_theta < 2:
            raise InvalidParameter("grid resolutions must be >= 2")
        lo, hi = self.s_range
        if not 0.0 <= lo < hi <= 1.0:
            raise InvalidParameter(f"s range must satisfy 0 <= lo < hi <= 1, got {self.s_range}")
        a_lo, a_hi = self.alpha_window
        if not a_lo < a_hi:
            raise InvalidParameter(f"empty alpha window {self.alpha_window}")
        if self.refine_tol <= 0:
            raise InvalidParameter("refine_tol must be positive")
        if self.jobs < 1:
            raise InvalidParameter("jobs must be >= 1")

    @property
    def sector(self) -> float:
        return TWO_PI / (self.k - 1)

    def s_values(self) -> np.ndarray:
        return np.linspace(*self.s_range, self.n_s)

    def theta_values(self) -> np.ndarray:
        return self.sector * np.arange(self.n_theta) / self.n_theta

    def nodes(self) -> list[tuple[float, float]]:
        """Row-major: s outer, theta inner."""
        return [(float(s), float(t)) for s in self.s_values() for t in self.theta_values()]


@dataclass(frozen=True)
class ReportItem:
    name: str
    category: str  # theorem | proposition | lemma | observation
    passed: bool
    details: dict = field(default_factory=dict)


@dataclass(frozen=True)
class VerificationReport:
    k: int
    items: tuple[ReportItem, ...]

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items if item.category != "observation")

    @property
    def failures(self) -> list[str]:
        return [i.name for i in self.items if not i.passed and i.category != "observation"]


@dataclass(frozen=True)
class VerifySamples:
    s_values: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4)
    z0_s_values: tuple[float, ...] = (0.2, 0.5, 0.8)
    transition: tuple[float, float] = (0.45, 0.55)
    near_s0: float = 0.1
    near_s1: float = 0.9
    ray_offset: float = 0.05  # fraction of pi/(k-1)
    random_count: int = 64
    seed: int = 20


@dataclass(frozen=True)
class KnotDiagnostics:
    winding_eps1: int
    winding_eps0: int
    closes: bool


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


# --------------------------------------------
# Grid nodes
# --------------------------------------------


def _diagnostic(k: int, coords: SphereCoords, exc: Exception) -> BifurcationEvent:
    return BifurcationEvent(
        EventKind.DIAGNOSTIC,
        k,
        coords,
        {"error": type(exc).__name__, "message": str(exc)},
    )


def _event_order(event: BifurcationEvent):
    return event.alpha, str(event.kind), json.dumps(event.data, sort_keys=True)


def scan_node(cfg: ScanConfig, node: tuple[float, float]) -> list[BifurcationEvent]:
    """All events of one (s, theta) node; failures come back as diagnostic events."""
    s, theta = node
    coords = SphereCoords(s, theta, 0.0)
    try:
        f = from_sphere(coords, cfg.k)
        check_guard_band(f, cfg.numerics)
        chain = build_periodgon(f, cfg.numerics)
        events = []
        for domain in chain.domains:
            if domain.loop_count < 2:
                continue
            data = {
                "center": domain.center_index,
                "loop_count": domain.loop_count,
                "escape_sector_pairs": [list(p) for p in domain.escape_sector_pairs],
            }
            if cfg.refine:
                data.update(refine_multiloop(cfg, s, theta, domain.center))
            events.append(BifurcationEvent(EventKind.MULTI_LOOP, cfg.k, coords, data))

        if not chain.planar:
            events.append(
                BifurcationEvent(
                    EventKind.DIAGNOSTIC,
                    cfg.k,
                    coords,
                    {"error": "NonPlanar", "message": "periodgon is not a simple polygon"},
                )
            )
        else:
            lo, hi = cfg.alpha_window
            for item in chord_alphas(chain, cfg.k, numerics=cfg.numerics):
                for alpha in item.alphas:
                    if not lo <= alpha < hi:
                        continue
                    events.append(
                        BifurcationEvent(
                            EventKind.HOMOCLINIC_CHORD,
                            cfg.k,
                            SphereCoords(s, theta, alpha),
                            {
                                "vertex_pair": list(item.chord.vertex_pair),
                                "center_pair": list(item.chord.center_pair),
                                "alpha_star": alpha,
                                "chord": _pair(item.chord.vector),
                            },
                        )
                    )
    except (FieldError, ArithmeticError, ValueError) as exc:
        logger.warning("node s=%.6f theta=%.6f failed: %s", s, theta, exc)
        return [_diagnostic(cfg.k, coords, exc)]
    return sorted(events, key=_event_order)


def _loops_near(cfg: ScanConfig, s: float, theta: float, location: complex) -> int:
    # follow the center by position; labels jump where two roots swap argument order
    f = from_sphere(SphereCoords(s, theta % TWO_PI, 0.0), cfg.k)
    try:
        check_guard_band(f, cfg.numerics)
    except Parabolic:
        return 0
    points = singular_points(f, cfg.numerics)
    center = min(points, key=lambda p: abs(p.location - location))
    return domain_loops(f, center.index, numerics=cfg.numerics, points=points).loop_count


def _band_edge(cfg: ScanConfig, s: float, theta: float, location: complex, side: float) -> float:
    inner, outer = theta, theta + side * cfg.sector / cfg.n_theta
    if _loops_near(cfg, s, outer, location) > 1:
        return outer
    while abs(outer - inner) > cfg.refine_tol:
        mid = 0.5 * (inner + outer)
        if _loops_near(cfg, s, mid, location) > 1:
            inner = mid
        else:
            outer = mid
    return 0.5 * (inner + outer)


def refine_multiloop(cfg: ScanConfig, s: float, theta: float, location: complex) -> dict:
    """
    Bisect in theta for both edges of the multi-loop band through the node. An evaluation that fails
    leaves the locus unresolved; the failure is logged and recorded instead of read as one loop.
    """
    try:
        lo, hi = sorted(_band_edge(cfg, s, theta, location, side) for side in (-1.0, 1.0))
    except FieldError as exc:
        logger.warning("multi-loop refinement at s=%.6f theta=%.6f failed: %s", s, theta, exc)
        return {"unresolved": f"{type(exc).__name__}: {exc}"}
    logger.info("multi-loop band at s=%.6f: theta in [%.6f, %.6f]", s, lo, hi)
    return {"theta_locus": 0.5 * (lo + hi), "band": [lo, hi]}


# --------------------------------------------
# Sweeps
# --------------------------------------------


def parabolic_loci(k: int, numerics: Numerics | None = None) -> list[BifurcationEvent]:
    if k < 2:
        raise InvalidParameter(f"k must be >= 2, got {k}")
    numerics = numerics or Numerics()
    events = [
        BifurcationEvent(
            EventKind.PARABOLIC_EPS0,
            k,
            SphereCoords(0.0, 0.0, 0.0),
            {"locus": "eps0 = 0, the circle s = 0"},
        )
    ]
    for j in range(k - 1):
        coords = SphereCoords(0.5, TWO_PI * j / (k - 1), 0.0)
        f = from_sphere(coords, k)
        delta = abs(discriminant(f))
        if delta >= guard_threshold(f, numerics):
            raise FieldError(f"|discriminant| = {delta:.3e} off the parabolic locus at j={j}")
        events.append(
            BifurcationEvent(
                EventKind.PARABOLIC_DELTA,
                k,
                coords,
                {"discriminant": delta, "double_root": _pair(parabolic_point(k, j))},
            )
        )
    return events


def scan_disk(cfg: ScanConfig) -> list[BifurcationEvent]:
    """
    Parabolic loci, then every grid node in row-major order (events of a node by ascending alpha).
    Output files, when configured, are truncated once and then appended node by node.
    """
    for path in (cfg.jsonl_path, cfg.csv_path):
        if path:
            open(path, "w").close()

    events = parabolic_loci(cfg.k, cfg.numerics)
    _persist(cfg, events)

    nodes = cfg.nodes()
    work = partial(scan_node, cfg)
    logger.info("scanning k=%d on a %dx%d grid", cfg.k, cfg.n_s, cfg.n_theta)
    if cfg.jobs == 1:
        results = map(work, nodes)
        _collect(cfg, results, events)
    else:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            _collect(cfg, pool.map(work, nodes, chunksize=cfg.n_theta), events)
    return events


def _collect(cfg: ScanConfig, results, events: list) -> None:
    for i, node_events in enumerate(results):
        events.extend(node_events)
        _persist(cfg, node_events)
        if (i + 1) % cfg.n_theta == 0:
            logger.info("row %d/%d done, %d events", (i + 1) // cfg.n_theta, cfg.n_s, len(events))


def _persist(cfg: ScanConfig, events) -> None:
    if cfg.jsonl_path:
        write_jsonl(events, cfg.jsonl_path)
    if cfg.csv_path:
        write_csv(events, cfg.csv_path)


def reconstruct_disk(events, k: int) -> list[BifurcationEvent]:
    """
    Copy fundamental-sector events to the other k - 2 sectors with
    (s, theta, alpha) ~ (s, theta + m 2pi/(k-1), alpha + m 2pi/(k-1)).
    Parabolic loci already cover the whole disk and are not copied.
    """
    sector = TWO_PI / (k - 1)
    result = list(events)
    for m in range(1, k - 1):
        for event in events:
            if event.kind in (EventKind.PARABOLIC_DELTA, EventKind.PARABOLIC_EPS0):
                continue
            coords = SphereCoords(
                event.s,
                (event.theta + m * sector) % TWO_PI,
                (event.alpha + m * sector) % TWO_PI,
            )
            result.append(BifurcationEvent(event.kind, k, coords, {**event.data, "sector": m}))
    return result


# --------------------------------------------
# Persistence
# --------------------------------------------


def _float17(value: float) -> str:
    if math.isnan(value):
        return "NaN"
    if math.isinf(value):
        return "Infinity" if value > 0 else "-Infinity"
    text = format(value, ".17g")
    return text if any(c in text for c in ".en") else text + ".0"


def dumps17(value) -> str:
    """Compact JSON with sorted keys and every float written with 17 significant digits."""
    if isinstance(value, float):
        return _float17(value)
    if isinstance(value, dict):
        items = (f"{json.dumps(str(key))}: {dumps17(value[key])}" for key in sorted(value))
        return "{" + ", ".join(items) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(dumps17(item) for item in value) + "]"
    return json.dumps(value)


def write_jsonl(events, path: str) -> None:
    """Append one JSON object per event."""
    with open(path, "a", encoding="utf-8") as handle:
        for event in events:
            handle.write(dumps17(event.record()) + "\n")


def read_jsonl(path: str) -> list[BifurcationEvent]:
    with open(path, encoding="utf-8") as handle:
        return [BifurcationEvent.from_record(json.loads(line)) for line in handle if line.strip()]


def write_csv(events, path: str) -> None:
    """Append rows, writing the header only into an empty file. Floats use 17 significant digits."""
    fresh = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        if fresh:
            writer.writerow(CSV_FIELDS)
        for event in events:
            writer.writerow(
                [
                    str(event.kind),
                    event.k,
                    _float17(event.s),
                    _float17(event.theta),
                    _float17(event.alpha),
                    dumps17(event.data),
                ]
            )


# --------------------------------------------
# Theorem verification
# --------------------------------------------


def _loop_counts(k: int, s: float, theta: float, numerics: Numerics) -> dict[int, int]:
    f = from_sphere(SphereCoords(s, theta, 0.0), k)
    check_guard_band(f, numerics)
    points = singular_points(f, numerics)
    return {
        p.index: domain_loops(f, p.index, numerics=numerics, points=points).loop_count
        for p in points
    }


def _loop_item(name, category, k, cases, numerics, expect) -> ReportItem:
    """`cases` are (s, theta, centers or None); `expect(count)` decides each center."""
    observed, passed = [], True
    for s, theta, centers in cases:
        try:
            counts = _loop_counts(k, s, theta, numerics)
        except FieldError as exc:
            observed.append({"s": s, "theta": theta, "error": str(exc)})
            passed = False
            continue
        chosen = {j: c for j, c in counts.items() if centers is None or j in centers}
        ok = all(expect(c) for c in chosen.values())
        passed = passed and ok
        observed.append({"s": s, "theta": theta, "loop_counts": chosen, "ok": ok})
    return ReportItem(name, category, passed, {"samples": observed})


def _theorem_items(k: int, samples: VerifySamples, numerics: Numerics) -> list[ReportItem]:
    half = math.pi / (k - 1)
    z0_ray = 0.0 if k % 2 else half
    mid = 0.5 * half
    offset = samples.ray_offset * half
    lo, hi = samples.transition

    items = [
        _loop_item(
            "multi_loop_z1_on_even_rays",
            "theorem",
            k,
            [(s, 0.0, {1}) for s in samples.s_values],
            numerics,
            lambda c: c == 2,
        ),
        _loop_item(
            "multi_loop_z0_on_rays",
            "theorem",
            k,
            [(s, z0_ray, {0}) for s in samples.z0_s_values],
            numerics,
            lambda c: c >= 2,
        ),
        _loop_item(
            "z1_loops_across_s_one_half",
            "theorem",
            k,
            [(lo, 0.0, {1})],
            numerics,
            lambda c: c == 2,
        ),
        _loop_item(
            "z1_single_loop_beyond_one_half",
            "theorem",
            k,
            [(hi, 0.0, {1})],
            numerics,
            lambda c: c == 1,
        ),
        _loop_item(
            "generic_control", "theorem", k, [(0.5, mid, None)], numerics, lambda c: c == 1
        ),
        _loop_item(
            "no_bifurcation_near_s0",
            "theorem",
            k,
            [(samples.near_s0, mid, None)],
            numerics,
            lambda c: c == 1,
        ),
        _loop_item(
            "no_bifurcation_near_s1",
            "theorem",
            k,
            [(samples.near_s1, mid, None)],
            numerics,
            lambda c: c == 1,
        ),
        _loop_item(
            "no_bifurcation_near_even_rays",
            "theorem",
            k,
            [(s, offset, None) for s in samples.s_values + samples.z0_s_values],
            numerics,
            lambda c: c == 1,
        ),
    ]
    if k % 2 == 0:
        items.append(
            _loop_item(
                "no_bifurcation_near_odd_rays",
                "theorem",
                k,
                [(s, half - offset, None) for s in samples.z0_s_values],
                numerics,
                lambda c: c == 1,
            )
        )
    return items


def _root_samples(k: int, samples: VerifySamples, open_theta: bool):
    rng = np.random.default_rng(samples.seed)
    half = math.pi / (k - 1)
    s = rng.uniform(0.02, 1.0, samples.random_count)
    if open_theta:
        theta = half * rng.uniform(0.02, 0.98, samples.random_count)
    else:
        theta = rng.uniform(0.0, half, samples.random_count)
    return list(zip(s.tolist(), theta.tolist()))


def _args(points, k: int) -> dict[int, float]:
    result = {}
    for p in points:
        if p.index == 0:
            continue
        angle = float(np.angle(p.location)) % TWO_PI
        if p.index == k and angle < 1e-9:
            angle = TWO_PI
        result[p.index] = angle
    return result


def _root_sector(k: int, j: int, theta: float) -> tuple[float, float]:
    if j == 1:
        return theta, (theta + math.pi) / k
    fixed = TWO_PI * (j - 1) / (k - 1)
    moving = (theta + (2 * j - 1) * math.pi) / k
    return (fixed, moving) if j <= (k + 1) / 2 else (moving, fixed)


def _analytic_items(k: int, samples: VerifySamples, numerics: Numerics) -> list[ReportItem]:
    tol = 1e-9
    grid = _root_samples(k, samples, open_theta=False)
    interior = _root_samples(k, samples, open_theta=True)

    sector_misses, narrow_misses, formula_error = [], [], 0.0
    re_misses, near_one_misses = [], []
    for s, theta in grid + [(1.0, 0.0), (1.0, math.pi / (k - 1) * 0.999)]:
        c = SphereCoords(s, theta, 0.0)
        points = singular_points(from_sphere(c, k), numerics)
        if not all(p.is_simple for p in points):
            continue
        args = _args(points, k)
        for j, angle in args.items():
            lo, hi = _root_sector(k, j, theta)
            if not lo - tol <= angle <= hi + tol:
                sector_misses.append({"s": s, "theta": theta, "j": j, "arg": angle})
        if not theta - tol <= args[1] <= (math.pi - theta) / k + tol:
            narrow_misses.append({"s": s, "theta": theta, "arg": args[1]})
        closed = closed_form_eigenvalues(c, k, points)
        for p, lam in zip(points, closed):
            formula_error = max(formula_error, abs(p.eigenvalue - lam) / abs(lam))
        if points[0].eigenvalue.real <= 0:
            re_misses.append({"s": s, "theta": theta, "j": 0})
        for p in points[1:]:
            if p.location.real < 0 and p.eigenvalue.real >= 0:
                re_misses.append({"s": s, "theta": theta, "j": p.index})

    for theta in np.linspace(0.0, math.pi / (k - 1), 5).tolist():
        points = singular_points(from_sphere(SphereCoords(0.98, theta, 0.0), k), numerics)
        near_one_misses.extend(
            {"theta": theta, "j": p.index} for p in points[1:] if p.eigenvalue.real >= 0
        )

    collinear, opposed = [], []
    for s, theta in interior:
        points = singular_points(from_sphere(SphereCoords(s, theta, 0.0), k), numerics)
        if not all(p.is_simple for p in points):
            continue
        lam0 = points[0].eigenvalue
        for p in points[1:]:
            cross = (p.eigenvalue * np.conj(lam0)).imag
            if abs(cross) <= tol * abs(p.eigenvalue) * abs(lam0):
                collinear.append({"s": s, "theta": theta, "j": p.index})
        for p, q in combinations(points[1:], 2):
            if math.pi - abs(float(np.angle(p.location / q.location))) <= 1e-7:
                opposed.append({"s": s, "theta": theta, "pair": [p.index, q.index]})

    return [
        ReportItem("root_sectors", "proposition", not sector_misses, {"misses": sector_misses}),
        ReportItem(
            "eigenvalue_formula",
            "lemma",
            formula_error <= 1e-8,
            {"max_relative_error": formula_error},
        ),
        ReportItem("eigenvalue_collinearity", "lemma", not collinear, {"misses": collinear}),
        ReportItem(
            "eigenvalue_signs",
            "lemma",
            not re_misses and not near_one_misses,
            {"misses": re_misses, "near_s1_misses": near_one_misses},
        ),
        ReportItem("opposed_roots", "lemma", not opposed, {"misses": opposed}),
        ReportItem(
            "narrow_z1_sector",
            "observation",
            not narrow_misses,
            {"outside": len(narrow_misses), "samples": narrow_misses[:10]},
        ),
    ]


def verify_theorems(
    k: int, samples: VerifySamples | None = None, numerics: Numerics | None = None
) -> VerificationReport:
    if k < 3:
        raise InvalidParameter(f"verification needs k >= 3, got {k}")
    samples = samples or VerifySamples()
    numerics = numerics or Numerics()
    items = _theorem_items(k, samples, numerics) + _analytic_items(k, samples, numerics)

    unique = _loop_item(
        "single_loop_beyond_z1",
        "observation",
        k,
        [(s, 0.5 * math.pi / (k - 1), None) for s in samples.z0_s_values]
        + [(s, 0.0, None) for s in samples.z0_s_values],
        numerics,
        lambda c: c == 1,
    )
    # only centers j >= 2 are asserted by this observation
    for sample in unique.details["samples"]:
        counts = sample.get("loop_counts", {})
        sample["loop_counts"] = {j: c for j, c in counts.items() if j >= 2}
        sample["ok"] = all(c == 1 for c in sample["loop_counts"].values())
    unique = ReportItem(
        unique.name,
        unique.category,
        all(s.get("ok", False) for s in unique.details["samples"]),
        unique.details,
    )
    items.append(unique)

    report = VerificationReport(k, tuple(items))
    for item in report.items:
        log = logger.info if item.passed or item.category == "observation" else logger.warning
        log("k=%d %s [%s]: %s", k, item.name, item.category, "pass" if item.passed else "fail")
    return report


# --------------------------------------------
# Torus knot
# --------------------------------------------


def knot_diagnostics(k: int, n: int, j: int = 0) -> KnotDiagnostics:
    """Windings of arg eps1 and arg eps0 along the discriminant curve s = 1/2, theta_j."""
    if k < 2:
        raise InvalidParameter(f"k must be >= 2, got {k}")
    if n < 8 * k:
        raise InvalidParameter(f"need at least 8k = {8 * k} samples, got {n}")
    theta = TWO_PI * j / (k - 1)
    alphas = np.linspace(0.0, TWO_PI, n + 1)
    fields = [from_sphere(SphereCoords(0.5, theta, a), k) for a in alphas]
    eps1 = np.array([f.eps1 for f in fields])
    eps0 = np.array([f.eps0 for f in fields])

    def winding(values):
        turns = np.unwrap(np.angle(values))
        return int(round((turns[-1] - turns[0]) / TWO_PI))

    on_curve = all(abs(discriminant(f)) < 1e-10 for f in fields)
    gap = abs(eps1[-1] - eps1[0]) + abs(eps0[-1] - eps0[0])
    return KnotDiagnostics(winding(eps1), winding(eps0), bool(on_curve and gap < 1e-12))

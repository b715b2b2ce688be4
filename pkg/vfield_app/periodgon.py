"""
Periodic domains, homoclinic-loop counting and the periodgon.

A periodic domain is measured in the field rotated by arg(nu_j), where z_j is a center: along each
ray from z_j the largest starting radius with a closed orbit of period |nu_j| is bisected. Orbits
just inside the boundary follow its homoclinic loops and pass close to infinity once per loop, in
the corner between the two separatrices forming that loop; counting those corners gives the loop
count.

The periodgon itself only needs the loop structure, which is read off faster from the separatrices
of the rotated field: a repelling separatrix returning to infinity is a loop (domain_loops).
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import circmean
from shapely.geometry import LineString, Point, Polygon

from .conf import Numerics
from .core import (
    TWO_PI,
    FieldSpec,
    SingularPoint,
    check_guard_band,
    field_scale,
    point_by_index,
    singular_points,
)
from .exceptions import BisectionStall, InvalidParameter, NonPlanar, NotParabolic, Parabolic
from .flow import (
    Closed,
    Controls,
    EscapedThroughSector,
    Events,
    LandedAtPoint,
    Section,
    corner_of,
    escape_directions,
    integrate,
    separatrix_fan,
    trace_separatrix,
)

logger = logging.getLogger(__name__)

# Offset of the first ray, as a fraction of the angular spacing.
RAY_OFFSET = 0.25

# Orbits started next to a homoclinic loop pass close to infinity; their escape radius is widened
# by this factor so that only the flow decides whether they close.
LOOP_SIDE_ESCAPE = 1e3

# Rotations tried in turn when reading sepal sectors. Centers of the unrotated field close their
# separatrices into loops; a small rotation turns them into foci and the loops open.
SEPAL_TILTS = (0.0, 0.1, -0.1)


# --------------------------------------------
# Types
# --------------------------------------------


@dataclass(frozen=True)
class RayBoundary:
    angle: float
    radius: float  # math.inf when the ray never leaves the domain before R_switch
    corners: tuple[int, ...] = ()
    directions: tuple[float, ...] = ()  # arg z at the deepest point of each corner visit
    outside: object = None  # termination of the first orbit found outside


@dataclass(frozen=True)
class PeriodicDomain:
    center_index: int
    center: complex
    delta: float
    rays: tuple[RayBoundary, ...]
    loop_count: int
    escape_sector_pairs: tuple[tuple[int, int], ...]
    access_angle: float

    @property
    def boundary_radii(self) -> tuple[float, ...]:
        return tuple(ray.radius for ray in self.rays)

    def boundary_points(self) -> np.ndarray:
        return np.array(
            [
                self.center + ray.radius * np.exp(1j * ray.angle)
                for ray in self.rays
                if math.isfinite(ray.radius)
            ],
            dtype=complex,
        )


@dataclass(frozen=True)
class Edge:
    center_index: int
    vector: complex


@dataclass(frozen=True)
class Periodgon:
    edges: tuple[Edge, ...]
    vertices: tuple[complex, ...]  # partial sums, first vertex 0, one per edge
    closed: bool
    planar: bool
    ambiguous_order: bool
    domains: tuple[PeriodicDomain, ...] = field(default=(), repr=False, compare=False)

    @property
    def closure_gap(self) -> complex:
        return sum((e.vector for e in self.edges), 0j)

    @property
    def diameter(self) -> float:
        v = np.asarray(self.vertices, dtype=complex)
        return float(np.max(np.abs(v[:, None] - v[None, :]))) if v.size else 0.0


@dataclass(frozen=True)
class Chord:
    vertex_pair: tuple[int, int]
    vector: complex
    center_pair: tuple[int, int]  # centers of the first and last edge between the two vertices


@dataclass(frozen=True)
class ChordAlphas:
    chord: Chord
    alphas: tuple[float, ...]


@dataclass(frozen=True)
class SepalReport:
    parabolic_location: complex
    codim: int
    zone_count: int
    sector_indices: tuple[int, ...]
    gap_counts: tuple[int, int] | None
    delta: float = 0.0  # rotation the sectors were read at


@dataclass(frozen=True)
class HomoclinicScan:
    chord_alphas: tuple[float, ...]
    edge_alphas: tuple[float, ...]


# --------------------------------------------
# Periodic domains
# --------------------------------------------


class _DomainProbe:
    """Closed-orbit predicate for one center in its own rotated field."""

    def __init__(self, f, center, points, numerics, returns):
        self.f = f
        self.center = center
        self.points = points
        self.numerics = numerics
        self.returns = returns
        self.delta = float(np.angle(center.period))
        self.target = abs(center.period)
        self.controls = Controls.for_field(
            f, points, numerics, time_budget=self.target * (returns + 0.5)
        )

    def __call__(self, radius: float, angle: float):
        start = self.center.location + radius * np.exp(1j * angle)
        section = Section(origin=self.center.location, start=start, returns=self.returns)
        controls = replace(
            self.controls, return_tol=min(self.controls.return_tol, 1e-3 * radius)
        )
        trajectory = integrate(
            self.f, self.delta, start, controls, Events(section=section), points=self.points
        )
        end = trajectory.termination
        closed = (
            isinstance(end, Closed)
            and abs(end.measured_period - self.target) <= self.numerics.period_match * self.target
        )
        return closed, trajectory

    def radius_limit(self, angle: float) -> float:
        # largest r with |z_j + r e^{i angle}| <= R_switch
        c = self.center.location
        u = np.exp(1j * angle)
        b = (c * np.conj(u)).real
        disc = b * b - abs(c) ** 2 + self.controls.r_switch**2
        return -b + math.sqrt(max(disc, 0.0))


def _corner_visits(trajectory, k: int, delta: float) -> dict[int, list[float]]:
    visits: dict[int, list[float]] = {}
    for run in trajectory.infinity_visits():
        deepest = min(run, key=abs)
        z = 1.0 / deepest
        visits.setdefault(corner_of(z, k, delta), []).append(float(np.angle(z)) % TWO_PI)
    return visits


def _bisect_ray(probe: _DomainProbe, angle: float, r0: float, tol: float, iterations: int):
    closed, inside = probe(r0, angle)
    if not closed:
        raise BisectionStall(
            f"orbit at radius {r0:.3e} around z_{probe.center.index} is not periodic"
        )
    limit = probe.radius_limit(angle)
    lo, hi, outside = r0, None, None
    r = r0
    while hi is None:
        r = min(2.0 * r, limit)
        closed, trajectory = probe(r, angle)
        if closed:
            lo, inside = r, trajectory
            if r >= limit:
                return math.inf, inside, None
        else:
            hi, outside = r, trajectory

    for _ in range(iterations):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        closed, trajectory = probe(mid, angle)
        if closed:
            lo, inside = mid, trajectory
        else:
            hi, outside = mid, trajectory
    logger.debug("ray %.4f: boundary bracket [%.12g, %.12g]", angle, lo, hi)
    return lo, inside, outside


def _loop_pair(corner: int, k: int) -> tuple[int, int]:
    """(in, out) separatrix indices bounding a corner: odd index in, even index out."""
    other = (corner + 1) % (2 * k)
    return (corner, other) if corner % 2 else (other, corner)


def periodic_domain(
    f: FieldSpec,
    j: int,
    ray_count: int | None = None,
    *,
    numerics: Numerics | None = None,
    tol: float | None = None,
    returns: int | None = None,
    points=None,
) -> PeriodicDomain:
    numerics = numerics or Numerics()
    check_guard_band(f, numerics)
    points = points if points is not None else singular_points(f, numerics)
    center = point_by_index(points, j)
    if not center.is_simple:
        raise Parabolic(f"z_{j} has multiplicity {center.multiplicity}")

    ray_count = ray_count or numerics.ray_count
    if ray_count < 1:
        raise InvalidParameter("ray_count must be at least 1")
    probe = _DomainProbe(f, center, points, numerics, returns or numerics.confirm_returns)
    scale = field_scale(points)
    gaps = [abs(p.location - center.location) for p in points if p.index != j]
    r0 = 1e-2 * min(gaps)
    radius_tol = (tol or numerics.bisect_tol) * scale

    rays, visits = [], {}
    for i in range(ray_count):
        angle = TWO_PI * (i + RAY_OFFSET) / ray_count
        radius, inside, outside = _bisect_ray(
            probe, angle, r0, radius_tol, numerics.bisect_iterations
        )
        ray_visits = _corner_visits(inside, f.k, probe.delta) if math.isfinite(radius) else {}
        for corner, directions in ray_visits.items():
            visits.setdefault(corner, []).extend(directions)
        rays.append(
            RayBoundary(
                angle=angle,
                radius=radius,
                corners=tuple(sorted(ray_visits)),
                directions=tuple(d for ds in ray_visits.values() for d in ds),
                outside=outside.termination if outside is not None else None,
            )
        )

    if not visits:
        raise BisectionStall(f"no boundary orbit of z_{j} reached the neighborhood of infinity")

    order = sorted(
        visits, key=lambda corner: (min(_loop_pair(corner, f.k)), _loop_pair(corner, f.k))
    )
    pairs = tuple(_loop_pair(corner, f.k) for corner in order)
    access = float(circmean(visits[order[0]], high=TWO_PI, low=0.0))
    logger.info("z_%d: %d loop(s), access angle %.6f", j, len(pairs), access)
    return PeriodicDomain(
        center_index=j,
        center=center.location,
        delta=probe.delta,
        rays=tuple(rays),
        loop_count=len(pairs),
        escape_sector_pairs=pairs,
        access_angle=access,
    )


def _encloses(trajectory, location: complex) -> bool:
    z = trajectory.points()
    ring = Polygon(np.column_stack([z.real, z.imag]))
    ring = ring if ring.is_valid else ring.buffer(0)
    return ring.contains(Point(location.real, location.imag))


def _borders_domain(f, center, separatrix, controls, points, numerics) -> bool:
    """
    Whether the homoclinic loop of `separatrix` bounds the periodic domain of `center`: an orbit
    started just off the loop, on one of its two sides, closes with the center's period around it.
    """
    delta = float(np.angle(center.period))
    target = abs(center.period)
    z = separatrix.trajectory.points()
    z = z[np.isfinite(z) & (np.abs(z) <= controls.r_switch)]
    if z.size == 0:
        return False
    locations = np.array([p.location for p in points], dtype=complex)
    clearance = np.min(np.abs(z[:, None] - locations[None, :]), axis=1)
    best = int(np.argmax(clearance))
    anchor = complex(z[best])
    velocity = complex(np.exp(1j * delta)) * complex(f.evaluate(anchor))
    offset = 1e-3 * float(clearance[best]) * 1j * velocity / abs(velocity)

    side_controls = replace(
        controls,
        r_escape=LOOP_SIDE_ESCAPE * controls.r_escape,
        return_tol=min(controls.return_tol, 1e-2 * abs(offset)),
        time_budget=1.5 * target,
    )
    for start in (anchor + offset, anchor - offset):
        section = Section(origin=center.location, start=start, returns=1)
        trajectory = integrate(
            f, delta, start, side_controls, Events(section=section), points=points
        )
        end = trajectory.termination
        if (
            isinstance(end, Closed)
            and abs(end.measured_period - target) <= numerics.period_match * target
            and _encloses(trajectory, center.location)
        ):
            return True
    return False


def domain_loops(
    f: FieldSpec, j: int, *, numerics: Numerics | None = None, points=None
) -> PeriodicDomain:
    """
    Loop structure of the periodic domain of z_j from the separatrices of its rotated field.
    Every repelling separatrix that returns to infinity closes a homoclinic loop; when several
    points are centers of the same rotated field, a loop belongs to the center whose period
    annulus it bounds, read from the orbits just off the loop.
    Boundary radii are not measured (rays is empty).
    """
    numerics = numerics or Numerics()
    check_guard_band(f, numerics)
    points = points if points is not None else singular_points(f, numerics)
    center = point_by_index(points, j)
    if not center.is_simple:
        raise Parabolic(f"z_{j} has multiplicity {center.multiplicity}")

    k = f.k
    delta = float(np.angle(center.period))
    controls = Controls.for_field(f, points, numerics)
    rot = np.exp(1j * delta)
    centers = [
        p
        for p in points
        if p.is_simple and abs((rot * p.eigenvalue).real) <= 1e-9 * abs(p.eigenvalue)
    ]

    loops = []
    for n in range(1, 2 * k, 2):
        separatrix = trace_separatrix(f, delta, n, controls, points)
        if not isinstance(separatrix.landing, EscapedThroughSector):
            continue
        if len(centers) > 1 and not _borders_domain(
            f, center, separatrix, controls, points, numerics
        ):
            continue
        loops.append((n, separatrix.landing.sector))

    if not loops:
        raise BisectionStall(f"no homoclinic separatrix bounds the domain of z_{j}")
    loops.sort(key=lambda pair: (min(pair), pair))
    directions = escape_directions(k, delta)
    first = loops[0]
    access = float(
        circmean([directions[first[0]], directions[first[1]]], high=TWO_PI, low=0.0)
    )
    logger.debug("z_%d: loops %s, access angle %.6f", j, loops, access)
    return PeriodicDomain(
        center_index=j,
        center=center.location,
        delta=delta,
        rays=(),
        loop_count=len(loops),
        escape_sector_pairs=tuple(loops),
        access_angle=access,
    )


# --------------------------------------------
# Periodgon
# --------------------------------------------


def assemble_periodgon(domains, periods: dict, numerics: Numerics | None = None) -> Periodgon:
    """Order edges by access angle (center index breaks ties) and close the chain."""
    numerics = numerics or Numerics()
    ordered = sorted(domains, key=lambda d: (d.access_angle, d.center_index))
    edges = tuple(Edge(d.center_index, periods[d.center_index]) for d in ordered)
    vertices = tuple(np.concatenate([[0j], np.cumsum([e.vector for e in edges])[:-1]]).tolist())
    gap = abs(sum(e.vector for e in edges))
    largest = max(abs(e.vector) for e in edges)
    chain = Periodgon(
        edges=edges,
        vertices=tuple(complex(v) for v in vertices),
        closed=gap <= numerics.closure_tol * largest,
        planar=True,
        ambiguous_order=any(d.loop_count > 1 for d in domains),
        domains=tuple(ordered),
    )
    return replace(chain, planar=is_planar(chain, numerics))


def build_periodgon(f: FieldSpec, numerics: Numerics | None = None) -> Periodgon:
    numerics = numerics or Numerics()
    check_guard_band(f, numerics)
    points = singular_points(f, numerics)
    if not all(p.is_simple for p in points):
        raise Parabolic("periodgon needs simple singular points")
    domains = [domain_loops(f, p.index, numerics=numerics, points=points) for p in points]
    chain = assemble_periodgon(domains, {p.index: p.period for p in points}, numerics)
    if not chain.planar:
        logger.warning("non-planar periodgon at eps=(%r, %r)", f.eps1, f.eps0)
    return chain


def rotate_periodgon(p: Periodgon, k: int, alpha: float) -> Periodgon:
    """The periodgon at fiber parameter alpha, given the one at alpha = 0."""
    factor = complex(np.exp(1j * k * alpha))
    return replace(
        p,
        edges=tuple(Edge(e.center_index, factor * e.vector) for e in p.edges),
        vertices=tuple(factor * v for v in p.vertices),
    )


def _coords(p: Periodgon) -> list[tuple[float, float]]:
    return [(v.real, v.imag) for v in p.vertices]


def _is_degenerate(p: Periodgon, tol: float) -> bool:
    v = np.asarray(p.vertices, dtype=complex)
    centered = np.column_stack([v.real, v.imag]) - np.column_stack([v.real, v.imag]).mean(axis=0)
    spread = np.linalg.svd(centered, compute_uv=False)
    return spread.size < 2 or spread[1] <= tol


def is_planar(p: Periodgon, numerics: Numerics | None = None) -> bool:
    numerics = numerics or Numerics()
    diameter = p.diameter
    if diameter == 0.0:
        return True
    tol = numerics.planar_tol * diameter
    if _is_degenerate(p, tol):
        return True

    coords = _coords(p)
    n = len(coords)
    segments = [LineString([coords[i], coords[(i + 1) % n]]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            adjacent = j == i + 1 or (i == 0 and j == n - 1)
            if adjacent:
                if segments[i].intersection(segments[j]).length > tol:
                    return False
            elif segments[i].distance(segments[j]) <= tol:
                return False
    return True


def _interior_pairs(p: Periodgon, numerics: Numerics):
    diameter = p.diameter
    if diameter == 0.0 or _is_degenerate(p, numerics.planar_tol * diameter):
        return
    n = len(p.vertices)
    region = Polygon(_coords(p)).buffer(numerics.planar_tol * diameter)
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            a, b = p.vertices[i], p.vertices[j]
            if region.covers(LineString([(a.real, a.imag), (b.real, b.imag)])):
                yield Chord(
                    vertex_pair=(i, j),
                    vector=b - a,
                    center_pair=(p.edges[i].center_index, p.edges[j - 1].center_index),
                )


def horizontal_chords(p: Periodgon, numerics: Numerics | None = None) -> list[Chord]:
    numerics = numerics or Numerics()
    if not p.planar:
        raise NonPlanar("horizontal chords are only defined for planar periodgons")
    tol = numerics.chord_tol * p.diameter
    return [c for c in _interior_pairs(p, numerics) if abs(c.vector.imag) <= tol]


def _horizontal_alphas(vector: complex, k: int, alpha0: float = 0.0) -> tuple[float, ...]:
    # e^{ik alpha} vector is real  <=>  k alpha = -arg(vector) mod pi
    base = (-float(np.angle(vector))) % math.pi
    return tuple(sorted(((base + m * math.pi) / k + alpha0) % TWO_PI for m in range(2 * k)))


def chord_alphas(p: Periodgon, k: int, alpha0: float = 0.0, numerics=None) -> list[ChordAlphas]:
    """Fiber parameters alpha where each interior chord of the alpha0 periodgon turns horizontal."""
    numerics = numerics or Numerics()
    if not p.planar:
        raise NonPlanar("chord alphas are only defined for planar periodgons")
    return [
        ChordAlphas(chord, _horizontal_alphas(chord.vector, k, alpha0))
        for chord in _interior_pairs(p, numerics)
    ]


def edge_alphas(p: Periodgon, k: int, alpha0: float = 0.0) -> list[tuple[int, tuple[float, ...]]]:
    """Fiber parameters where an edge turns horizontal, i.e. its singular point is a center."""
    return [(e.center_index, _horizontal_alphas(e.vector, k, alpha0)) for e in p.edges]


# --------------------------------------------
# Sepal zones
# --------------------------------------------


def _leading_coefficient(f: FieldSpec, p: SingularPoint) -> complex:
    full = np.append(f.coefficients, 0.0)
    order = p.multiplicity
    return complex(np.polyval(np.polyder(full, order), p.location) / math.factorial(order))


def sepal_zones(
    f: FieldSpec, p: SingularPoint, numerics: Numerics | None = None, *, points=None
) -> SepalReport:
    numerics = numerics or Numerics()
    if p.multiplicity < 2:
        raise NotParabolic(f"z_{p.index} is a simple point")
    points = points if points is not None else singular_points(f, numerics)
    codim = p.codim
    gaps = [abs(q.location - p.location) for q in points if q.index != p.index]
    radius = 1e-2 * min([1.0] + gaps)
    controls = Controls.for_field(f, points, numerics, time_budget=math.inf)
    controls = replace(controls, land_radius=min(controls.land_radius, 1e-3 * radius))

    # characteristic directions of c (z - p)^(codim + 1) split the circle into 2 codim sectors
    lead = float(np.angle(_leading_coefficient(f, p)))
    width = math.pi / codim
    zone_count = 0
    for m in range(2 * codim):
        start = (m * math.pi - lead) / codim
        runs, inside = 0, False
        for i in range(numerics.sepal_probes):
            angle = start + width * (i + 0.5) / numerics.sepal_probes
            probe = p.location + radius * np.exp(1j * angle)
            sepal = all(
                isinstance(end, LandedAtPoint) and end.index == p.index
                for end in (
                    integrate(f, 0.0, probe, controls, Events(), direction=d, points=points)
                    .termination
                    for d in (1, -1)
                )
            )
            if sepal and not inside:
                runs += 1
            inside = sepal
        zone_count += runs

    # a sepal sector of infinity is a corner whose two separatrices both land at p
    n = 2 * f.k
    sectors, tilt = (), 0.0
    for beta in SEPAL_TILTS:
        fan = separatrix_fan(f, beta, controls, points=points)
        at_p = [
            isinstance(fan.landing_of(c), LandedAtPoint) and fan.landing_of(c).index == p.index
            for c in range(n)
        ]
        found = tuple(c for c in range(n) if at_p[c] and at_p[(c + 1) % n])
        if len(found) == 2 * codim:
            sectors, tilt = found, beta
            break
        logger.debug("rotation %.3f: %d sepal sector(s) at z_%d", beta, len(found), p.index)
    gap_counts = None
    if codim == 1 and len(sectors) == 2:
        first = sectors[1] - sectors[0] - 1
        gap_counts = (first, n - 2 - first)
    return SepalReport(
        parabolic_location=p.location,
        codim=codim,
        zone_count=zone_count,
        sector_indices=sectors,
        gap_counts=gap_counts,
        delta=tilt,
    )


# --------------------------------------------
# Direct homoclinic detection along the alpha fiber
# --------------------------------------------


def fiber_field(f0: FieldSpec, alpha: float) -> FieldSpec:
    """The field at fiber parameter alpha, given the field f0 at alpha = 0."""
    k = f0.k
    return FieldSpec(
        k=k,
        eps1=f0.eps1 * complex(np.exp(-1j * (k - 1) * alpha)),
        eps0=f0.eps0 * complex(np.exp(-1j * k * alpha)),
    )


def _landing_labels(f0, base_points, alpha, numerics) -> tuple[int, ...]:
    # landing points are compared in the alpha-invariant coordinate e^{i alpha} z
    f = fiber_field(f0, alpha)
    points = singular_points(f, numerics)
    controls = Controls.for_field(f, points, numerics)
    locations = {q.index: q.location for q in points}
    labels = []
    for n in range(1, 2 * f.k, 2):
        end = trace_separatrix(f, 0.0, n, controls, points).landing
        if isinstance(end, LandedAtPoint):
            rotated = locations[end.index] * np.exp(1j * alpha)
            labels.append(min(base_points, key=lambda q: abs(q.location - rotated)).index)
        elif isinstance(end, EscapedThroughSector):
            labels.append(-1 - end.sector)
        else:
            labels.append(-999)
    return tuple(labels)


def homoclinic_alphas(
    f0: FieldSpec,
    window: tuple[float, float] | None = None,
    samples: int = 400,
    *,
    resolution: float = 1e-4,
    numerics: Numerics | None = None,
) -> HomoclinicScan:
    """
    Fiber parameters in `window` where a repelling separatrix changes its landing point.
    Changes within 2e-3 of a center crossing (a real period) are reported as edge events.
    """
    numerics = numerics or Numerics()
    k = f0.k
    lo, hi = window or (0.0, math.pi / k)
    base_points = singular_points(f0, numerics)
    grid = np.linspace(lo, hi, samples)
    labels = [_landing_labels(f0, base_points, a, numerics) for a in grid]

    found = []
    for i in range(samples - 1):
        for slot in range(k):
            if labels[i][slot] == labels[i + 1][slot]:
                continue
            left, right, reference = grid[i], grid[i + 1], labels[i][slot]
            while right - left > resolution:
                mid = 0.5 * (left + right)
                if _landing_labels(f0, base_points, mid, numerics)[slot] == reference:
                    left = mid
                else:
                    right = mid
            found.append(0.5 * (left + right))

    merged = []
    for alpha in sorted(found):
        if not merged or alpha - merged[-1] > 1e-3:
            merged.append(alpha)

    centers = [
        a
        for q in base_points
        if q.is_simple
        for a in _horizontal_alphas(q.period, k)
    ]
    chords, edges = [], []
    for alpha in merged:
        near_center = any(
            min(abs(alpha - c), TWO_PI - abs(alpha - c)) <= 2e-3 for c in centers
        )
        (edges if near_center else chords).append(float(alpha))
    return HomoclinicScan(chord_alphas=tuple(chords), edge_alphas=tuple(edges))

"""
Trajectories of z' = e^{i delta} P(z) on the Riemann sphere.

Integration runs under the unit-speed reparametrization d(tau) = |V| dt with the true time t carried
as a third state component. Near the pole the chart w = 1/z is used, where the normalized field
stays bounded. Events are checked after every accepted step and refined on the dense output.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.integrate import RK45
from scipy.optimize import brentq

from .conf import Numerics
from .core import FieldSpec, SingularPoint, field_scale, singular_points
from .exceptions import InvalidParameter, PoleEvaluation, StepUnderflow

logger = logging.getLogger(__name__)

# The finite chart is left once |z| exceeds this multiple of R_switch.
SWITCH_HYSTERESIS = 1.25

# Separatrices are started this far out, in units of the field scale.
SEPARATRIX_START = 1e3

# A return only counts after the orbit has left this band around the section start, as a fraction
# of the distance from the start to the section origin.
SECTION_BAND = 0.1


# --------------------------------------------
# Types
# --------------------------------------------


class Chart(Enum):
    FINITE = "finite"
    INFINITY = "infinity"


class Orientation(Enum):
    ATTRACTING = "attracting"  # tends to infinity in forward time
    REPELLING = "repelling"


@dataclass(frozen=True)
class Sample:
    time: float
    point: complex
    chart: Chart

    @property
    def z(self) -> complex:
        return self.point if self.chart is Chart.FINITE else 1.0 / self.point


@dataclass(frozen=True)
class LandedAtPoint:
    index: int


@dataclass(frozen=True)
class EscapedThroughSector:
    sector: int


@dataclass(frozen=True)
class Closed:
    measured_period: float


@dataclass(frozen=True)
class TimeBudgetExhausted:
    reason: str = "time"


Termination = LandedAtPoint | EscapedThroughSector | Closed | TimeBudgetExhausted


@dataclass(frozen=True)
class Trajectory:
    samples: tuple[Sample, ...]
    termination: Termination
    arclength: float

    @property
    def end(self) -> Sample:
        return self.samples[-1]

    def points(self) -> np.ndarray:
        """Sample positions in the finite chart."""
        return np.array([s.z for s in self.samples], dtype=complex)

    def infinity_visits(self) -> list[list[complex]]:
        """Consecutive runs of samples taken in the chart at infinity, as w values."""
        runs, current = [], []
        for s in self.samples:
            if s.chart is Chart.INFINITY:
                current.append(s.point)
            elif current:
                runs.append(current)
                current = []
        if current:
            runs.append(current)
        return runs


@dataclass(frozen=True)
class Controls:
    rtol: float
    atol: float
    r_switch: float
    r_escape: float
    land_radius: float
    return_tol: float
    max_arclength: float
    time_budget: float
    min_step: float = 1e-14
    section_xtol: float = 1e-12

    @classmethod
    def for_field(cls, f: FieldSpec, points=None, numerics: Numerics | None = None, **overrides):
        numerics = numerics or Numerics()
        points = points if points is not None else singular_points(f, numerics)
        scale = field_scale(points)
        land = numerics.land_factor * scale
        locations = [p.location for p in points]
        if len(locations) > 1:
            gaps = [
                abs(a - b) for i, a in enumerate(locations) for b in locations[i + 1 :] if a != b
            ]
            if gaps:
                land = min(land, 1e-4 * min(gaps))
        values = dict(
            rtol=numerics.rtol,
            atol=numerics.atol,
            r_switch=numerics.r_switch_factor * scale,
            r_escape=numerics.r_escape_factor * scale,
            land_radius=land,
            return_tol=numerics.return_factor * scale,
            max_arclength=numerics.arclength_factor * scale,
            time_budget=numerics.time_budget,
            min_step=numerics.min_step,
            section_xtol=numerics.section_xtol,
        )
        values.update(overrides)
        return cls(**values)


@dataclass(frozen=True)
class Section:
    """
    Line through `start` normal to the flow there. A crossing in the flow direction within
    return_tol of `start` counts as a return, once the orbit has left the band around `start`.
    `origin` (the enclosed center) only sets the band width.
    """

    origin: complex
    start: complex
    returns: int = 3


@dataclass(frozen=True)
class Events:
    section: Section | None = None
    land: bool = True
    escape: bool = True


# --------------------------------------------
# Field evaluation
# --------------------------------------------


def field_in_chart(f: FieldSpec, delta: float, chart: Chart, point: complex) -> complex:
    rot = complex(np.exp(1j * delta))
    if chart is Chart.FINITE:
        return rot * complex(f.evaluate(point))
    if point == 0:
        raise PoleEvaluation("the chart at infinity has a pole at w = 0")
    return -rot * complex(point ** (1 - f.k) + f.eps1 + f.eps0 * point)


def escape_directions(k: int, delta: float) -> list[float]:
    """Angles psi_n = (n pi - delta) / k in [0, 2 pi); even n attract, odd n repel."""
    return [((n * math.pi - delta) / k) % (2 * math.pi) for n in range(2 * k)]


def sector_of(z: complex, k: int, delta: float) -> int:
    """Index of the escape direction closest to arg z."""
    return int(round((k * float(np.angle(z)) + delta) / math.pi)) % (2 * k)


def corner_of(z: complex, k: int, delta: float) -> int:
    """Index n of the corner between psi_n and psi_{n+1} containing arg z."""
    return int(math.floor((k * float(np.angle(z)) + delta) / math.pi)) % (2 * k)


# --------------------------------------------
# Integrator
# --------------------------------------------


class _Run:
    def __init__(self, f, delta, direction, points, controls, events):
        self.f = f
        self.k = f.k
        self.delta = delta
        self.rot = complex(np.exp(1j * delta)) * (1.0 if direction > 0 else -1.0)
        self.controls = controls
        self.events = events
        self.points = tuple(points) if events.land else ()
        self.locations = np.array([p.location for p in self.points], dtype=complex)
        self.switch_out = SWITCH_HYSTERESIS * controls.r_switch
        self.section = events.section
        if self.section is not None:
            self.returns = 0
            self.armed = False
            velocity = self.rot * complex(f.evaluate(self.section.start))
            if velocity == 0:
                raise InvalidParameter("section start is a singular point")
            self.tangent = velocity / abs(velocity)
            self.band = max(
                SECTION_BAND * abs(self.section.start - self.section.origin),
                4.0 * controls.return_tol,
            )

    # ---------- right-hand sides ----------
    def finite_rhs(self, tau, y):
        v = self.rot * self.f.evaluate(complex(y[0], y[1]))
        speed = abs(v)
        if speed == 0.0:
            return np.zeros(3)
        u = v / speed
        return np.array([u.real, u.imag, 1.0 / speed])

    def infinity_rhs(self, tau, y):
        w = complex(y[0], y[1])
        r = abs(w)
        if r == 0.0:
            return np.zeros(3)
        g = 1.0 + self.f.eps1 * w ** (self.k - 1) + self.f.eps0 * w**self.k
        g_abs = abs(g)
        if g_abs == 0.0:
            return np.zeros(3)
        u = -self.rot * (w / r) ** (1 - self.k) * (g / g_abs)
        return np.array([u.real, u.imag, r ** (self.k - 1) / g_abs])

    # ---------- event functions ----------
    def finite_events(self, z: complex) -> dict:
        values = {"switch": abs(z) - self.switch_out}
        if self.points:
            values["land"] = float(np.min(np.abs(self.locations - z))) - self.controls.land_radius
        if self.section is not None:
            values["section"] = ((z - self.section.start) * np.conj(self.tangent)).real
        return values

    def infinity_events(self, w: complex) -> dict:
        values = {"switch": abs(w) - 1.0 / self.controls.r_switch}
        if self.events.escape:
            values["escape"] = abs(w) - 1.0 / self.controls.r_escape
        return values

    @staticmethod
    def triggered(name: str, old: float, new: float) -> bool:
        if name == "switch":
            return old < 0.0 <= new
        if name in ("land", "escape"):
            return old > 0.0 >= new
        return old * new < 0.0

    # ---------- main loop ----------
    def solver(self, chart: Chart, tau: float, y: np.ndarray) -> RK45:
        if chart is Chart.FINITE:
            rhs, max_step = self.finite_rhs, 0.1 * self.controls.r_switch
        else:
            rhs, max_step = self.infinity_rhs, 0.1 / self.controls.r_switch
        return RK45(
            rhs,
            tau,
            y,
            t_bound=self.controls.max_arclength,
            rtol=self.controls.rtol,
            atol=self.controls.atol,
            max_step=max_step,
        )

    def run(self, start: complex, chart: Chart) -> Trajectory:
        if chart is Chart.FINITE and abs(start) > self.switch_out:
            start, chart = 1.0 / start, Chart.INFINITY
        y = np.array([start.real, start.imag, 0.0])
        samples = [Sample(0.0, start, chart)]
        solver = self.solver(chart, 0.0, y)
        event_fn = self.finite_events if chart is Chart.FINITE else self.infinity_events
        previous = event_fn(start)

        while True:
            z_old = complex(solver.y[0], solver.y[1])
            message = solver.step()
            if solver.status == "failed" or (
                solver.status == "running" and solver.step_size < self.controls.min_step
            ):
                raise StepUnderflow(message or f"step size {solver.step_size:.3e} collapsed")

            point = complex(solver.y[0], solver.y[1])
            if self.section is not None and not self.armed:
                self.armed = chart is Chart.INFINITY or abs(point - self.section.start) > self.band
            current = event_fn(point)
            hits = [
                name
                for name in current
                if name in previous and self.triggered(name, previous[name], current[name])
            ]
            outcome = None
            if hits:
                outcome = self.resolve(solver, chart, hits, previous)
            elif chart is Chart.FINITE and self.points:
                outcome = self.grazing(z_old, point, solver)

            if outcome is not None:
                kind, tau_star, y_star, payload = outcome
                if kind == "switch":
                    chart = Chart.INFINITY if chart is Chart.FINITE else Chart.FINITE
                    w = 1.0 / complex(y_star[0], y_star[1])
                    y_star = np.array([w.real, w.imag, y_star[2]])
                    logger.debug("chart switch to %s at tau=%.6g", chart.value, tau_star)
                    samples.append(Sample(float(y_star[2]), w, chart))
                    solver = self.solver(chart, tau_star, y_star)
                    event_fn = self.finite_events if chart is Chart.FINITE else self.infinity_events
                    previous = event_fn(w)
                    continue
                samples.append(Sample(float(y_star[2]), complex(y_star[0], y_star[1]), chart))
                return Trajectory(tuple(samples), payload, float(tau_star))

            samples.append(Sample(float(solver.y[2]), point, chart))
            previous = current

            if solver.status == "finished" or solver.t >= self.controls.max_arclength:
                return Trajectory(tuple(samples), TimeBudgetExhausted("arclength"), solver.t)
            if solver.y[2] > self.controls.time_budget:
                return Trajectory(tuple(samples), TimeBudgetExhausted("time"), solver.t)

    def refine(self, dense, name: str, chart: Chart, lo: float, hi: float) -> float:
        def gap(tau):
            y = dense(tau)
            point = complex(y[0], y[1])
            if chart is Chart.FINITE:
                values = self.finite_events(point)
            else:
                values = self.infinity_events(point)
            return values[name]

        try:
            return brentq(gap, lo, hi, xtol=self.controls.section_xtol)
        except ValueError:
            return hi

    def resolve(self, solver, chart, hits, previous):
        dense = solver.dense_output()
        found = sorted(
            (self.refine(dense, name, chart, solver.t_old, solver.t), name) for name in hits
        )
        for tau_star, name in found:
            y_star = dense(tau_star)
            point = complex(y_star[0], y_star[1])
            if name == "switch":
                return "switch", tau_star, y_star, None
            if name == "land":
                nearest = int(np.argmin(np.abs(self.locations - point)))
                return "land", tau_star, y_star, LandedAtPoint(self.points[nearest].index)
            if name == "escape":
                sector = sector_of(1.0 / point, self.k, self.delta)
                return "escape", tau_star, y_star, EscapedThroughSector(sector)
            if name == "section" and self.section_return(point, previous["section"]):
                self.returns += 1
                self.armed = False
                if self.returns >= self.section.returns:
                    closed = Closed(float(y_star[2]) / self.returns)
                    return "closed", tau_star, y_star, closed
        return None

    def section_return(self, point: complex, old_value: float) -> bool:
        # forward crossings only, and only after the orbit has been away from the start
        if not self.armed or old_value >= 0.0:
            return False
        return abs(point - self.section.start) <= self.controls.return_tol

    def grazing(self, z_old: complex, z_new: complex, solver):
        # a step may pass through a landing disk without ending inside it
        chord = z_new - z_old
        length = abs(chord)
        if length == 0.0:
            return None
        along = np.clip(((self.locations - z_old) * np.conj(chord)).real / length**2, 0.0, 1.0)
        closest = np.abs(z_old + along * chord - self.locations)
        nearest = int(np.argmin(closest))
        if closest[nearest] > self.controls.land_radius:
            return None
        return "land", solver.t, solver.y, LandedAtPoint(self.points[nearest].index)


def integrate(
    f: FieldSpec,
    delta: float,
    z0: complex,
    controls: Controls | None = None,
    events: Events | None = None,
    *,
    direction: int = 1,
    chart: Chart = Chart.FINITE,
    points=None,
) -> Trajectory:
    """
    Integrate from z0 (a w value when chart is INFINITY) until the first terminating event.
    direction=-1 integrates backward in time; the reported time is always elapsed time.
    """
    points = points if points is not None else singular_points(f)
    controls = controls or Controls.for_field(f, points)
    events = events or Events()
    if chart is Chart.FINITE:
        for p in points:
            if abs(z0 - p.location) <= controls.land_radius:
                raise InvalidParameter(f"start point {z0} is the singular point z_{p.index}")
    return _Run(f, delta, direction, points, controls, events).run(complex(z0), chart)


# --------------------------------------------
# Orbit classification
# --------------------------------------------


@dataclass(frozen=True)
class Periodic:
    measured_period: float
    trajectory: Trajectory = field(repr=False, compare=False, default=None)


@dataclass(frozen=True)
class Heteroclinic:
    from_index: int
    to_index: int


@dataclass(frozen=True)
class Escaping:
    sector_in: int
    sector_out: int


@dataclass(frozen=True)
class Transit:
    """One end at a singular point, the other at infinity."""

    backward: Termination
    forward: Termination


@dataclass(frozen=True)
class Undecided:
    backward: Termination
    forward: Termination


OrbitClass = Periodic | Heteroclinic | Escaping | Transit | Undecided


def nearest_point(points, z: complex) -> SingularPoint:
    return min(points, key=lambda p: abs(z - p.location))


def return_section(points, z0: complex, controls: Controls, returns: int) -> tuple:
    """Section through z0 anchored at the nearest singular point; tolerance relative to start."""
    center = nearest_point(points, z0)
    section = Section(origin=center.location, start=z0, returns=returns)
    tol = min(controls.return_tol, 1e-3 * abs(z0 - center.location))
    return section, replace(controls, return_tol=tol)


def classify_orbit(
    f: FieldSpec,
    delta: float,
    z0: complex,
    controls: Controls | None = None,
    *,
    points=None,
    numerics: Numerics | None = None,
) -> OrbitClass:
    numerics = numerics or Numerics()
    points = points if points is not None else singular_points(f, numerics)
    controls = controls or Controls.for_field(f, points, numerics)
    section, forward_controls = return_section(points, z0, controls, numerics.confirm_returns)

    forward = integrate(
        f, delta, z0, forward_controls, Events(section=section), points=points
    )
    if isinstance(forward.termination, Closed):
        return Periodic(forward.termination.measured_period, forward)

    backward = integrate(f, delta, z0, controls, Events(), direction=-1, points=points)
    ends = (backward.termination, forward.termination)
    if all(isinstance(end, LandedAtPoint) for end in ends):
        return Heteroclinic(ends[0].index, ends[1].index)
    if all(isinstance(end, EscapedThroughSector) for end in ends):
        return Escaping(ends[0].sector, ends[1].sector)
    if any(isinstance(end, TimeBudgetExhausted) for end in ends):
        return Undecided(*ends)
    return Transit(*ends)


# --------------------------------------------
# Separatrices
# --------------------------------------------


@dataclass(frozen=True)
class Separatrix:
    index: int
    direction: float
    orientation: Orientation
    landing: Termination
    trajectory: Trajectory = field(repr=False, compare=False, default=None)


@dataclass(frozen=True)
class SeparatrixFan:
    delta: float
    escape_directions: tuple[float, ...]
    separatrices: tuple[Separatrix, ...]

    def landing_of(self, index: int) -> Termination:
        return self.separatrices[index].landing


def trace_separatrix(
    f: FieldSpec, delta: float, n: int, controls: Controls, points
) -> Separatrix:
    """Follow the separatrix asymptotic to psi_n inward from the chart at infinity."""
    k = f.k
    direction = escape_directions(k, delta)[n]
    orientation = Orientation.ATTRACTING if n % 2 == 0 else Orientation.REPELLING
    w0 = complex(np.exp(-1j * direction)) / (SEPARATRIX_START * field_scale(points))
    trajectory = integrate(
        f,
        delta,
        w0,
        controls,
        Events(),
        direction=-1 if orientation is Orientation.ATTRACTING else 1,
        chart=Chart.INFINITY,
        points=points,
    )
    return Separatrix(n, direction, orientation, trajectory.termination, trajectory)


def separatrix_fan(
    f: FieldSpec,
    delta: float,
    controls: Controls | None = None,
    *,
    points=None,
    numerics: Numerics | None = None,
) -> SeparatrixFan:
    numerics = numerics or Numerics()
    points = points if points is not None else singular_points(f, numerics)
    controls = controls or Controls.for_field(f, points, numerics)
    separatrices = tuple(
        trace_separatrix(f, delta, n, controls, points) for n in range(2 * f.k)
    )
    return SeparatrixFan(
        delta=delta,
        escape_directions=tuple(escape_directions(f.k, delta)),
        separatrices=separatrices,
    )

"""
SVG figures. Builders produce a Scene in data coordinates; render_scene draws it on a matplotlib
figure (1000 x 1000 viewBox, equal aspect, 5% margin) and saves it as SVG. Every artist gets a
gid "<css>-<n>" so documents can be inspected; the hash salt is fixed and no date is written, so
identical scenes give identical bytes.
"""

import io
import math
from dataclasses import dataclass, replace

import matplotlib
import numpy as np
from matplotlib.colors import to_hex
from matplotlib.figure import Figure

from .conf import Numerics
from .core import TWO_PI, FieldSpec, field_scale, singular_points
from .event_kinds import EVENT_KIND_CLASSES, EventKind, Glyph
from .exceptions import InvalidParameter
from .flow import Controls, Events, integrate, separatrix_fan
from .periodgon import Periodgon, horizontal_chords

# matplotlib writes SVG in points; 1000 pt gives a 1000 x 1000 viewBox
FIGURE_INCHES = 1000.0 / 72.0
DPI = 72
MARGIN = 0.05

_TAB10 = matplotlib.colormaps["tab10"]

KIND_COLORS = {
    EventKind.HOMOCLINIC_CHORD: to_hex(_TAB10(0)),
    EventKind.MULTI_LOOP: to_hex(_TAB10(3)),
    EventKind.PARABOLIC_DELTA: to_hex(_TAB10(2)),
    EventKind.PARABOLIC_EPS0: to_hex(_TAB10(4)),
    EventKind.DIAGNOSTIC: to_hex(_TAB10(7)),
}

# css class -> line style
STYLES = {
    "orbit": {"color": "#b0b0b0", "linewidth": 0.8},
    "separatrix": {"color": "#202020", "linewidth": 2.5},
    "edge": {"linewidth": 3.0},
    "chord": {"color": to_hex(_TAB10(3)), "linewidth": 1.5, "linestyle": (0, (8, 4))},
    "frame": {"color": "#404040", "linewidth": 1.2},
    "half": {"linestyle": (0, (4, 4))},
    "guide": {"color": "#9a9a9a", "linewidth": 1.0},
    "odd": {"linestyle": (0, (2, 3))},
}

MARKERS = {
    Glyph.DOT: {"marker": "o", "markersize": 7},
    Glyph.RING: {"marker": "o", "markersize": 9, "markerfacecolor": "none", "markeredgewidth": 2},
    Glyph.CROSS: {"marker": "x", "markersize": 8, "markeredgewidth": 2},
    Glyph.DIAMOND: {"marker": "D", "markersize": 9},
    Glyph.SQUARE: {"marker": "s", "markersize": 9},
}

SVG_RC = {"svg.hashsalt": "vfield", "svg.fonttype": "none"}


def palette(index: int) -> str:
    return to_hex(_TAB10(index % _TAB10.N))


# --------------------------------------------
# Scene
# --------------------------------------------


@dataclass(frozen=True)
class Path:
    points: tuple[complex, ...]
    css: str
    color: str | None = None
    closed: bool = False


@dataclass(frozen=True)
class Mark:
    at: complex
    glyph: Glyph
    css: str
    color: str
    title: str = ""


@dataclass(frozen=True)
class Label:
    at: complex
    text: str
    css: str = "label"


@dataclass(frozen=True)
class Layer:
    name: str
    paths: tuple[Path, ...] = ()
    marks: tuple[Mark, ...] = ()
    labels: tuple[Label, ...] = ()


@dataclass(frozen=True)
class Scene:
    bounds: tuple[float, float, float, float]  # xmin, xmax, ymin, ymax
    layers: tuple[Layer, ...]
    title: str = ""

    def __post_init__(self):
        if not all(math.isfinite(b) for b in self.bounds):
            raise InvalidParameter("scene bounds must be finite")
        xmin, xmax, ymin, ymax = self.bounds
        if xmax < xmin or ymax < ymin:
            raise InvalidParameter("empty scene bounds")

    def inside(self, z: complex) -> bool:
        xmin, xmax, ymin, ymax = self.bounds
        return (
            math.isfinite(z.real)
            and math.isfinite(z.imag)
            and xmin <= z.real <= xmax
            and ymin <= z.imag <= ymax
        )


@dataclass(frozen=True)
class RenderOptions:
    title: str = ""
    orbit_grid: int = 5
    orbit_length: float = 30.0  # arclength per direction, in field-scale units
    view_factor: float = 1.6  # half-width of the phase window, in field-scale units
    show_chords: bool = False
    guides: bool = True
    reconstruct: bool = True


def _gid(css: str, n: int) -> str:
    return f"{css.replace(' ', '-')}-{n}"


def _style(css: str) -> dict:
    style = {}
    for token in css.split():
        style.update(STYLES.get(token, {}))
    return style


def _xy(points) -> tuple[np.ndarray, np.ndarray]:
    """Coordinates with non-finite points turned into NaN, which breaks the drawn line."""
    z = np.asarray(points, dtype=complex)
    bad = ~np.isfinite(z)
    x, y = z.real.copy(), z.imag.copy()
    x[bad] = np.nan
    y[bad] = np.nan
    return x, y


def render_scene(scene: Scene) -> str:
    fig = Figure(figsize=(FIGURE_INCHES, FIGURE_INCHES), dpi=DPI)
    ax = fig.add_axes((MARGIN, MARGIN, 1.0 - 2.0 * MARGIN, 1.0 - 2.0 * MARGIN))
    xmin, xmax, ymin, ymax = scene.bounds
    span = max(xmax - xmin, ymax - ymin, 1e-12)
    cx, cy = 0.5 * (xmin + xmax), 0.5 * (ymin + ymax)
    ax.set_xlim(cx - 0.5 * span, cx + 0.5 * span)
    ax.set_ylim(cy - 0.5 * span, cy + 0.5 * span)
    ax.set_aspect("equal")
    ax.set_axis_off()
    if scene.title:
        ax.set_title(scene.title, fontsize=12)

    counts: dict[str, int] = {}

    def gid(css):
        n = counts.get(css, 0)
        counts[css] = n + 1
        return _gid(css, n)

    for layer in scene.layers:
        for path in layer.paths:
            points = list(path.points) + ([path.points[0]] if path.closed else [])
            x, y = _xy(points)
            if np.count_nonzero(np.isfinite(x)) < 2:
                continue
            style = _style(path.css)
            if path.color:
                style["color"] = path.color
            ax.plot(x, y, gid=gid(path.css), solid_capstyle="round", **style)
        for mark in layer.marks:
            if not scene.inside(mark.at):
                continue
            style = dict(MARKERS[mark.glyph])
            style.setdefault("markerfacecolor", mark.color)
            ax.plot(
                [mark.at.real],
                [mark.at.imag],
                linestyle="none",
                markeredgecolor=mark.color,
                gid=gid(mark.css),
                label=mark.title,
                **style,
            )
        for label in layer.labels:
            if scene.inside(label.at):
                ax.text(label.at.real, label.at.imag, label.text, fontsize=14, gid=gid(label.css))

    buffer = io.StringIO()
    with matplotlib.rc_context(SVG_RC):
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    return buffer.getvalue()


# --------------------------------------------
# Phase portraits
# --------------------------------------------


def _orbit(f, delta, z0, controls, points) -> tuple[complex, ...]:
    ends = [
        integrate(f, delta, z0, controls, Events(), direction=d, points=points).points()
        for d in (-1, 1)
    ]
    return tuple(np.concatenate([ends[0][::-1], ends[1][1:]]).tolist())


def phase_scene(
    f: FieldSpec,
    delta: float,
    opts: RenderOptions | None = None,
    numerics: Numerics | None = None,
) -> Scene:
    opts = opts or RenderOptions()
    numerics = numerics or Numerics()
    points = singular_points(f, numerics)
    scale = field_scale(points)
    half = opts.view_factor * scale
    controls = Controls.for_field(f, points, numerics)

    fan = separatrix_fan(f, delta, controls, points=points)
    separatrices = tuple(
        Path(tuple(s.trajectory.points().tolist()), f"separatrix {s.orientation.value}")
        for s in fan.separatrices
    )

    orbits = []
    if opts.orbit_grid > 0:
        short = replace(controls, max_arclength=opts.orbit_length * scale)
        ticks = np.linspace(-scale, scale, opts.orbit_grid)
        clearance = 0.05 * scale
        for y in ticks:
            for x in ticks:
                z0 = complex(x, y)
                if any(abs(z0 - p.location) < clearance for p in points):
                    continue
                orbits.append(Path(_orbit(f, delta, z0, short, points), "orbit"))

    marks = tuple(
        Mark(
            p.location,
            Glyph.DOT if p.is_simple else Glyph.DIAMOND,
            "singular" if p.is_simple else "singular parabolic",
            palette(p.index),
            f"z_{p.index} (multiplicity {p.multiplicity})",
        )
        for p in points
    )
    labels = tuple(Label(p.location + 0.04 * scale * (1 + 1j), f"z{p.index}") for p in points)
    return Scene(
        bounds=(-half, half, -half, half),
        layers=(
            Layer("orbits", paths=tuple(orbits)),
            Layer("separatrices", paths=separatrices),
            Layer("singular-points", marks=marks, labels=labels),
        ),
        title=opts.title or f"k={f.k}, eps1={f.eps1:.6g}, eps0={f.eps0:.6g}, delta={delta:.6g}",
    )


def phase_portrait(
    f: FieldSpec,
    delta: float,
    opts: RenderOptions | None = None,
    numerics: Numerics | None = None,
) -> str:
    return render_scene(phase_scene(f, delta, opts, numerics))


# --------------------------------------------
# Periodgons
# --------------------------------------------


def periodgon_scene(
    p: Periodgon, opts: RenderOptions | None = None, numerics: Numerics | None = None
) -> Scene:
    opts = opts or RenderOptions()
    vertices = list(p.vertices)
    n = len(p.edges)
    edges, labels = [], []
    for i, edge in enumerate(p.edges):
        a = vertices[i]
        b = a + edge.vector
        edges.append(Path((a, b), "edge", palette(edge.center_index)))
        labels.append(Label(0.5 * (a + b), f"z{edge.center_index}"))

    chords = []
    if opts.show_chords and p.planar:
        for chord in horizontal_chords(p, numerics):
            i, j = chord.vertex_pair
            chords.append(Path((vertices[i], vertices[j]), "chord"))

    v = np.array(vertices + [vertices[-1] + p.edges[-1].vector], dtype=complex)
    pad = 0.05 * max(p.diameter, 1e-12)
    bounds = (
        float(v.real.min()) - pad,
        float(v.real.max()) + pad,
        float(v.imag.min()) - pad,
        float(v.imag.max()) + pad,
    )
    marks = tuple(Mark(z, Glyph.DOT, "vertex", "#000000", f"v{i}") for i, z in enumerate(vertices))
    return Scene(
        bounds=bounds,
        layers=(
            Layer("edges", paths=tuple(edges), labels=tuple(labels)),
            Layer("chords", paths=tuple(chords)),
            Layer("vertices", marks=marks),
        ),
        title=opts.title or f"periodgon with {n} edges",
    )


def periodgon_figure(
    p: Periodgon, opts: RenderOptions | None = None, numerics: Numerics | None = None
) -> str:
    return render_scene(periodgon_scene(p, opts, numerics))


# --------------------------------------------
# Bifurcation disk
# --------------------------------------------


def disk_scene(events, k: int, opts: RenderOptions | None = None) -> Scene:
    # local import: bifscan pulls in the process pool machinery
    from .bifscan import reconstruct_disk

    opts = opts or RenderOptions()
    events = list(events)
    if any(e.k != k for e in events):
        raise InvalidParameter("all events of a bifurcation disk must share one k")
    if opts.reconstruct:
        events = reconstruct_disk(events, k)

    ring = np.exp(1j * np.linspace(0.0, TWO_PI, 361))
    frame = [
        Path(tuple(ring.tolist()), "frame", closed=True),
        Path(tuple((0.5 * ring).tolist()), "frame half"),
    ]
    guides = []
    if opts.guides:
        for j in range(k - 1):
            for angle, css in (
                (TWO_PI * j / (k - 1), "guide even"),
                ((2 * j - 1) * math.pi / (k - 1), "guide odd"),
            ):
                guides.append(Path((0j, complex(np.exp(1j * angle))), css))

    marks, seen = [], set()
    for event in events:
        at = event.s * complex(np.exp(1j * event.theta))
        key = (str(event.kind), round(at.real, 9), round(at.imag, 9))
        if key in seen:
            continue
        seen.add(key)
        kind = EVENT_KIND_CLASSES[str(event.kind)]
        marks.append(
            Mark(
                at,
                kind.glyph,
                f"event {kind.name}",
                KIND_COLORS[EventKind(str(event.kind))],
                f"{kind.name} s={event.s:.4f} theta={event.theta:.4f}",
            )
        )
    return Scene(
        bounds=(-1.05, 1.05, -1.05, 1.05),
        layers=(
            Layer("frame", paths=tuple(frame)),
            Layer("guides", paths=tuple(guides)),
            Layer("events", marks=tuple(marks)),
        ),
        title=opts.title or f"bifurcation disk, k={k}",
    )


def bifurcation_disk(events, k: int, opts: RenderOptions | None = None) -> str:
    return render_scene(disk_scene(events, k, opts))

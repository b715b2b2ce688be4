"""
Closed-form algebra of the family z' = z(z^k + eps1 z + eps0).

Sphere coordinates, roots, eigenvalues, periods, the discriminant and the two symmetry maps.
Everything here is a pure function of immutable values.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from .conf import Numerics
from .exceptions import InvalidParameter, NearParabolic, NotSingular, Parabolic, ZeroParameter

TWO_PI = 2.0 * math.pi

# Arguments closer than this to the positive real ray are treated as lying on it.
RAY_TIE = 1e-12


# --------------------------------------------
# Types
# --------------------------------------------


@dataclass(frozen=True)
class FieldSpec:
    k: int
    eps1: complex = 0j
    eps0: complex = 0j

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2:
            raise InvalidParameter(f"k must be an integer >= 2, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "eps1", complex(self.eps1))
        object.__setattr__(self, "eps0", complex(self.eps0))

    @property
    def coefficients(self) -> np.ndarray:
        """Coefficients of z^k + eps1 z + eps0, highest degree first."""
        coeffs = np.zeros(self.k + 1, dtype=complex)
        coeffs[0] = 1.0
        coeffs[-2] += self.eps1
        coeffs[-1] += self.eps0
        return coeffs

    def evaluate(self, z):
        return z * (z**self.k + self.eps1 * z + self.eps0)

    def derivative(self, z):
        return (self.k + 1) * z**self.k + 2.0 * self.eps1 * z + self.eps0

    @property
    def is_zero(self) -> bool:
        return self.eps1 == 0 and self.eps0 == 0


@dataclass(frozen=True)
class SphereCoords:
    s: float
    theta: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.s <= 1.0:
            raise InvalidParameter(f"s must lie in [0, 1], got {self.s!r}")
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "alpha", float(self.alpha))


@dataclass(frozen=True)
class SingularPoint:
    index: int
    location: complex
    multiplicity: int = 1
    eigenvalue: complex | None = None
    period: complex | None = None

    @property
    def codim(self) -> int:
        return self.multiplicity - 1

    @property
    def is_simple(self) -> bool:
        return self.multiplicity == 1


# --------------------------------------------
# Sphere coordinates
# --------------------------------------------


def _wrap(value: float, period: float) -> float:
    wrapped = math.fmod(value, period)
    if wrapped < 0:
        wrapped += period
    if wrapped >= period:
        wrapped = 0.0
    return wrapped


def from_sphere(c: SphereCoords, k: int) -> FieldSpec:
    if k < 2:
        raise InvalidParameter(f"k must be >= 2, got {k}")
    eps0 = (k - 1) * c.s**k * np.exp(1j * (c.theta - k * c.alpha))
    eps1 = -k * (1.0 - c.s) ** (k - 1) * np.exp(-1j * (k - 1) * c.alpha)
    return FieldSpec(k=k, eps1=complex(eps1), eps0=complex(eps0))


def norm(f: FieldSpec) -> float:
    k = f.k
    return (abs(f.eps0) / (k - 1)) ** (1.0 / k) + (abs(f.eps1) / k) ** (1.0 / (k - 1))


def rescale(f: FieldSpec, a: float) -> FieldSpec:
    """Parameters of the field conjugate to f by z -> a z, t -> a^-k t."""
    return FieldSpec(k=f.k, eps1=f.eps1 * a ** (f.k - 1), eps0=f.eps0 * a**f.k)


def canonicalize(c: SphereCoords, k: int) -> SphereCoords:
    sector = TWO_PI / (k - 1)
    if c.s <= 0.0:
        return SphereCoords(0.0, 0.0, _wrap(c.alpha, sector))
    if c.s >= 1.0:
        return SphereCoords(1.0, 0.0, _wrap(c.alpha - c.theta / k, TWO_PI / k))

    theta = _wrap(c.theta, TWO_PI)
    shift = math.floor(theta / sector)
    theta -= shift * sector
    if theta >= sector:
        theta -= sector
        shift += 1
    theta = max(theta, 0.0)
    return SphereCoords(c.s, theta, _wrap(c.alpha - shift * sector, TWO_PI))


def to_sphere(f: FieldSpec) -> tuple[SphereCoords, float]:
    """Sphere coordinates of f and the scale r with f = rescale(from_sphere(c), r)."""
    if f.is_zero:
        raise ZeroParameter("eps = (0, 0) lies on the codimension-k parabolic locus")
    k = f.k
    r = norm(f)
    eps1 = f.eps1 / r ** (k - 1)
    eps0 = f.eps0 / r**k
    s = min(max((abs(eps0) / (k - 1)) ** (1.0 / k), 0.0), 1.0)

    if eps1 == 0:
        alpha = -np.angle(eps0) / k
        theta = 0.0
    else:
        alpha = -np.angle(-eps1) / (k - 1)
        theta = 0.0 if eps0 == 0 else np.angle(eps0) + k * alpha
    coords = SphereCoords(s, _wrap(float(theta), TWO_PI), _wrap(float(alpha), TWO_PI))
    return canonicalize(coords, k), r


# --------------------------------------------
# Roots and singular points
# --------------------------------------------


def _aberth(coeffs: np.ndarray, radius: float, iterations: int, tol: float) -> np.ndarray:
    n = coeffs.size - 1
    derivative = np.polyder(coeffs)
    z = radius * np.exp(1j * (TWO_PI * np.arange(n) / n + 0.4))
    for _ in range(iterations):
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.polyval(coeffs, z) / np.polyval(derivative, z)
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, np.inf)
            repulsion = (1.0 / diff).sum(axis=1)
            step = ratio / (1.0 - ratio * repulsion)
        step = np.where(np.isfinite(step), step, 0.0)
        z = z - step
        if np.max(np.abs(step)) <= tol * max(1.0, float(np.max(np.abs(z)))):
            break
    return z


def polynomial_roots(f: FieldSpec, numerics: Numerics | None = None) -> np.ndarray:
    """The k roots of z^k + eps1 z + eps0, with multiplicity, unsorted."""
    numerics = numerics or Numerics()
    k = f.k
    if f.is_zero:
        return np.zeros(k, dtype=complex)
    if f.eps0 == 0:
        # z (z^(k-1) + eps1): keep the exact zero
        return np.concatenate([[0j], abs(f.eps1) ** (1.0 / (k - 1)) * _unit_roots(f, k - 1)])
    radius = max(1.0, abs(f.eps1) ** (1.0 / (k - 1)), abs(f.eps0) ** (1.0 / k))
    return _aberth(f.coefficients, radius, numerics.aberth_iterations, numerics.aberth_tol)


def _unit_roots(f: FieldSpec, n: int) -> np.ndarray:
    # solutions of u^n = -eps1 / |eps1|
    base = np.angle(-f.eps1) / n
    return np.exp(1j * (base + TWO_PI * np.arange(n) / n))


def _polish(coeffs: np.ndarray, z: complex, multiplicity: int, tol: float) -> complex:
    target = np.polyder(coeffs, multiplicity - 1)
    slope = np.polyder(target)
    polished = z
    for _ in range(12):
        denominator = np.polyval(slope, polished)
        if denominator == 0:
            break
        step = np.polyval(target, polished) / denominator
        polished -= step
        if abs(step) <= 1e-16 * (1.0 + abs(polished)):
            break
    return complex(polished) if abs(polished - z) < tol else complex(z)


def _on_positive_ray(location: complex) -> bool:
    angle = _wrap(float(np.angle(location)), TWO_PI)
    return angle < RAY_TIE or angle > TWO_PI - RAY_TIE


def _order_key(location: complex, on_ray_rank: int) -> tuple[float, float]:
    angle = _wrap(float(np.angle(location)), TWO_PI)
    if _on_positive_ray(location):
        # the smallest root on the positive real ray comes first, the others close the cycle
        angle = 0.0 if on_ray_rank == 0 else TWO_PI
    return angle, abs(location)


def singular_points(f: FieldSpec, numerics: Numerics | None = None) -> tuple[SingularPoint, ...]:
    numerics = numerics or Numerics()
    roots = polynomial_roots(f, numerics)
    scale = 1.0 + float(np.max(np.abs(roots)))
    tol = numerics.cluster_tol * scale

    points = np.concatenate([[0j], roots])
    observations = np.column_stack([points.real, points.imag])
    labels = fcluster(linkage(observations, method="single"), t=tol, criterion="distance")

    origin_multiplicity = int(np.sum(labels == labels[0]))
    clusters = []
    for label in sorted(set(labels) - {labels[0]}):
        members = points[labels == label]
        location = complex(members.mean())
        if members.size > 1:
            location = _polish(f.coefficients, location, members.size, tol)
        clusters.append((location, int(members.size)))

    on_ray = sorted((abs(loc), i) for i, (loc, _) in enumerate(clusters) if _on_positive_ray(loc))
    ray_rank = {i: rank for rank, (_, i) in enumerate(on_ray)}
    keys = [_order_key(loc, ray_rank.get(i, 0)) for i, (loc, _) in enumerate(clusters)]
    clusters = [clusters[i] for i in sorted(range(len(clusters)), key=keys.__getitem__)]

    result = [_make_point(f, 0, 0j, origin_multiplicity)]
    index = origin_multiplicity
    for location, multiplicity in clusters:
        result.append(_make_point(f, index, location, multiplicity))
        index += multiplicity
    return tuple(result)


def _make_point(f: FieldSpec, index: int, location: complex, multiplicity: int) -> SingularPoint:
    if multiplicity > 1:
        return SingularPoint(index=index, location=location, multiplicity=multiplicity)
    lam = f.eps0 if index == 0 else complex(f.derivative(location))
    return SingularPoint(
        index=index,
        location=location,
        multiplicity=1,
        eigenvalue=lam,
        period=2j * math.pi / lam,
    )


def field_scale(points) -> float:
    """1 + max|z_j|, the length unit for radii and tolerances."""
    return 1.0 + max(abs(p.location) for p in points)


def point_by_index(points, index: int) -> SingularPoint:
    for point in points:
        if point.index == index:
            return point
    raise InvalidParameter(f"No singular point with index {index}")


# --------------------------------------------
# Eigenvalues, periods, discriminant
# --------------------------------------------


def eigenvalue(f: FieldSpec, z: complex) -> complex:
    size = (1.0 + abs(z)) ** (f.k + 1) * (1.0 + abs(f.eps1) + abs(f.eps0))
    if abs(f.evaluate(z)) > 1e-8 * size:
        raise NotSingular(f"|P({z})| = {abs(f.evaluate(z)):.3e} is not zero")
    lam = complex(f.derivative(z))
    if abs(lam) <= 1e-10 * size:
        raise Parabolic(f"P'({z}) vanishes; the point is a multiple zero")
    return lam


def period(p: SingularPoint) -> complex:
    if not p.is_simple:
        raise Parabolic(f"z_{p.index} has multiplicity {p.multiplicity}")
    return 2j * math.pi / p.eigenvalue


def discriminant(f: FieldSpec) -> complex:
    k = f.k
    bracket = (f.eps0 / (k - 1)) ** (k - 1) - (-f.eps1 / k) ** k
    return (-1) ** (k // 2) * (k - 1) ** (k - 1) * k**k * bracket


def guard_threshold(f: FieldSpec, numerics: Numerics | None = None) -> float:
    numerics = numerics or Numerics()
    return numerics.guard_band * norm(f) ** (f.k * (f.k - 1))


def check_guard_band(f: FieldSpec, numerics: Numerics | None = None) -> None:
    """Raise NearParabolic when f is too close to either parabolic locus."""
    numerics = numerics or Numerics()
    r = norm(f)
    if r == 0:
        raise NearParabolic(0.0, 0.0, "eps")
    delta = abs(discriminant(f))
    threshold = numerics.guard_band * r ** (f.k * (f.k - 1))
    if delta < threshold:
        raise NearParabolic(delta, threshold)
    eps0_threshold = numerics.guard_band * r**f.k
    if abs(f.eps0) < eps0_threshold:
        raise NearParabolic(abs(f.eps0), eps0_threshold, "eps0")


def parabolic_point(k: int, j: int) -> complex:
    """Double root on the discriminant locus s = 1/2, theta = 2 pi j / (k - 1)."""
    return 0.5 * complex(np.exp(1j * TWO_PI * j / (k - 1)))


def closed_form_eigenvalues(c: SphereCoords, k: int, points) -> list[complex]:
    """Eigenvalues at alpha = 0 from the sphere coordinates, one per point in `points`."""
    rot = np.exp(1j * c.theta)
    values = []
    for p in points:
        if p.index == 0:
            values.append(complex((k - 1) * c.s**k * rot))
        else:
            values.append(
                complex(k * (k - 1) * ((1 - c.s) ** (k - 1) * p.location - c.s**k * rot))
            )
    return values


# --------------------------------------------
# Symmetries
# --------------------------------------------


def sigma_reflect(z: complex, m: int, k: int) -> complex:
    return complex(np.exp(2j * m * math.pi / k) * np.conj(z))


def sigma_reverse(z: complex, m: int, k: int) -> complex:
    return complex(np.exp(1j * (2 * m + 1) * math.pi / k) * np.conj(z))


def symmetry_reflect(f: FieldSpec, m: int) -> FieldSpec:
    k = f.k
    eps1 = np.exp(-2j * m * math.pi / k) * np.conj(f.eps1)
    return FieldSpec(k=k, eps1=complex(eps1), eps0=complex(np.conj(f.eps0)))


def symmetry_reverse(f: FieldSpec, m: int) -> FieldSpec:
    k = f.k
    eps1 = -np.exp(-1j * (2 * m + 1) * math.pi / k) * np.conj(f.eps1)
    return FieldSpec(k=k, eps1=complex(eps1), eps0=complex(-np.conj(f.eps0)))

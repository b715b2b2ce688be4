import cmath
import math

import numpy as np
from django.test import SimpleTestCase, override_settings
from scipy.optimize import linear_sum_assignment

from vfield_app.conf import Numerics, numerics
from vfield_app.core import (
    FieldSpec,
    SphereCoords,
    canonicalize,
    check_guard_band,
    closed_form_eigenvalues,
    discriminant,
    eigenvalue,
    from_sphere,
    norm,
    parabolic_point,
    period,
    polynomial_roots,
    sigma_reflect,
    singular_points,
    symmetry_reflect,
    symmetry_reverse,
    to_sphere,
)
from vfield_app.exceptions import (
    InvalidParameter,
    NearParabolic,
    NotSingular,
    Parabolic,
    ZeroParameter,
)


def match_multisets(a, b) -> float:
    """Largest distance after optimally pairing two equal-size sets of complex numbers."""
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


class SphereCoordinateTests(SimpleTestCase):
    def test_from_sphere_endpoints(self):
        f = from_sphere(SphereCoords(1.0, 0.0, 0.0), 3)
        self.assertAlmostEqual(f.eps1, 0.0)
        self.assertAlmostEqual(f.eps0, 2.0)

        f = from_sphere(SphereCoords(0.0, 0.0, 0.0), 3)
        self.assertAlmostEqual(f.eps1, -3.0)
        self.assertAlmostEqual(f.eps0, 0.0)

    def test_from_sphere_on_discriminant_locus(self):
        f = from_sphere(SphereCoords(0.5, 0.0, 0.0), 4)
        self.assertAlmostEqual(f.eps1, -0.5)
        self.assertAlmostEqual(f.eps0, 3 / 16)
        self.assertAlmostEqual(abs(f.evaluate(0.5)), 0.0, places=12)
        self.assertAlmostEqual(abs(f.derivative(0.5)), 0.0, places=12)

    def test_norm(self):
        rng = np.random.default_rng(3)
        for s, theta, alpha in rng.uniform(0, 1, (5, 3)):
            self.assertAlmostEqual(norm(from_sphere(SphereCoords(s, 6 * theta, 6 * alpha), 4)), 1.0)
        self.assertEqual(norm(FieldSpec(3)), 0.0)
        self.assertAlmostEqual(norm(FieldSpec(2, 0, 1)), 1.0)

    def test_to_sphere(self):
        coords, r = to_sphere(FieldSpec(3, 0, 2))
        self.assertAlmostEqual(coords.s, 1.0)
        self.assertAlmostEqual(coords.theta, 0.0)
        self.assertAlmostEqual(coords.alpha, 0.0)
        self.assertAlmostEqual(r, 1.0)

        coords, r = to_sphere(FieldSpec(3, 0, 16))
        self.assertAlmostEqual(coords.s, 1.0)
        self.assertAlmostEqual(r, 2.0)

        with self.assertRaises(ZeroParameter):
            to_sphere(FieldSpec(3))

    def test_to_sphere_recovers_generic_field(self):
        original = SphereCoords(0.37, 0.4, 0.2)
        coords, r = to_sphere(from_sphere(original, 5))
        self.assertAlmostEqual(r, 1.0)
        self.assertAlmostEqual(coords.s, original.s)
        self.assertAlmostEqual(coords.theta, original.theta)
        self.assertAlmostEqual(coords.alpha, original.alpha)

    def test_canonicalize(self):
        c = canonicalize(SphereCoords(0.5, math.pi, 0.0), 3)
        self.assertAlmostEqual(c.theta, 0.0)
        self.assertAlmostEqual(c.alpha, math.pi)

        c = canonicalize(SphereCoords(0.0, 1.0, 0.3), 3)
        self.assertEqual((c.s, c.theta), (0.0, 0.0))
        self.assertAlmostEqual(c.alpha, 0.3)

        canonical = SphereCoords(0.25, 0.5, 1.0)
        self.assertEqual(canonicalize(canonical, 4), canonical)

    def test_canonicalize_keeps_the_field(self):
        c = SphereCoords(0.6, 5.0, 2.0)
        a, b = from_sphere(c, 4), from_sphere(canonicalize(c, 4), 4)
        self.assertAlmostEqual(abs(a.eps1 - b.eps1), 0.0)
        self.assertAlmostEqual(abs(a.eps0 - b.eps0), 0.0)

    def test_invalid_values(self):
        with self.assertRaises(InvalidParameter):
            SphereCoords(1.5)
        with self.assertRaises(InvalidParameter):
            FieldSpec(1, 0, 1)


class SingularPointTests(SimpleTestCase):
    def test_cube_roots_of_unity(self):
        points = singular_points(FieldSpec(3, 0, -1))
        expected = [0, 1, cmath.exp(2j * math.pi / 3), cmath.exp(-2j * math.pi / 3)]
        self.assertEqual([p.index for p in points], [0, 1, 2, 3])
        for p, z in zip(points, expected):
            self.assertAlmostEqual(abs(p.location - z), 0.0, places=10)
            self.assertEqual(p.multiplicity, 1)

    def test_double_root(self):
        points = singular_points(FieldSpec(4, -0.5, 3 / 16))
        double = [p for p in points if p.multiplicity == 2]
        self.assertEqual(len(double), 1)
        self.assertAlmostEqual(abs(double[0].location - 0.5), 0.0, places=6)
        self.assertIsNone(double[0].eigenvalue)
        self.assertEqual(sum(p.multiplicity for p in points), 5)

    def test_origin_merges_at_s_zero(self):
        points = singular_points(from_sphere(SphereCoords(0.0), 5))
        self.assertEqual(points[0].multiplicity, 2)
        self.assertEqual(points[0].codim, 1)
        for p in points[1:]:
            z = 5 ** 0.25 * cmath.exp(2j * math.pi * (p.index - 1) / 4)
            self.assertAlmostEqual(abs(p.location - z), 0.0, places=8)
        self.assertEqual([p.index for p in points[1:]], [2, 3, 4, 5])

    def test_zero_field(self):
        points = singular_points(FieldSpec(3))
        self.assertEqual(len(points), 1)
        self.assertEqual(points[0].multiplicity, 4)

    def test_ties_on_the_positive_ray(self):
        # theta = 0, s < 1/2: z_1 and z_k both real positive, the smaller one first
        points = singular_points(from_sphere(SphereCoords(0.3, 0.0, 0.0), 4))
        self.assertLess(abs(points[1].location), abs(points[-1].location))
        self.assertAlmostEqual(points[-1].location.imag, 0.0, places=9)

    def test_polynomial_roots_count(self):
        roots = polynomial_roots(FieldSpec(6, 0.3 - 0.1j, 0.7j))
        self.assertEqual(roots.size, 6)


class EigenvalueTests(SimpleTestCase):
    def test_s_one_field(self):
        f = FieldSpec(3, 0, 2)
        self.assertAlmostEqual(eigenvalue(f, 0), 2)
        for p in singular_points(f)[1:]:
            self.assertAlmostEqual(abs(p.eigenvalue + 6), 0.0, places=9)
            self.assertAlmostEqual(abs(eigenvalue(f, p.location) + 6), 0.0, places=9)

    def test_eigenvalue_errors(self):
        with self.assertRaises(NotSingular):
            eigenvalue(FieldSpec(3, 0, 2), 1.0)
        with self.assertRaises(Parabolic):
            eigenvalue(FieldSpec(4, -0.5, 3 / 16), 0.5)

    def test_closed_form_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        for s, theta in rng.uniform(0.05, 0.95, (200, 2)):
            c = SphereCoords(s, theta, 0.0)
            f = from_sphere(c, 5)
            points = singular_points(f)
            for p, lam in zip(points, closed_form_eigenvalues(c, 5, points)):
                h = 1e-6
                numeric = (f.evaluate(p.location + h) - f.evaluate(p.location - h)) / (2 * h)
                self.assertLess(abs(numeric - lam), 1e-6 * max(1.0, abs(lam)))

    def test_periods(self):
        points = singular_points(FieldSpec(3, 0, 2))
        self.assertAlmostEqual(abs(period(points[0]) - 1j * math.pi), 0.0)
        for p in points[1:]:
            self.assertAlmostEqual(abs(p.period + points[0].period / 3), 0.0, places=9)

    def test_periods_sum_to_zero(self):
        rng = np.random.default_rng(5)
        for k in (2, 3, 5):
            for s, theta, alpha in rng.uniform(0.05, 0.95, (200, 3)):
                f = from_sphere(SphereCoords(s, 6 * theta, 6 * alpha), k)
                periods = [p.period for p in singular_points(f)]
                total = sum(periods)
                self.assertLess(abs(total), 1e-9 * max(abs(v) for v in periods))

    def test_parabolic_period(self):
        points = singular_points(FieldSpec(4, -0.5, 3 / 16))
        double = next(p for p in points if not p.is_simple)
        with self.assertRaises(Parabolic):
            period(double)


class DiscriminantTests(SimpleTestCase):
    def test_quadratic(self):
        rng = np.random.default_rng(2)
        for re1, im1, re0, im0 in rng.normal(size=(100, 4)):
            eps1, eps0 = complex(re1, im1), complex(re0, im0)
            expected = eps1**2 - 4 * eps0
            self.assertAlmostEqual(abs(discriminant(FieldSpec(2, eps1, eps0)) - expected), 0.0)

    def test_vanishes_on_parabolic_locus(self):
        self.assertAlmostEqual(abs(discriminant(FieldSpec(4, -0.5, 3 / 16))), 0.0, places=12)
        for k in (3, 4, 5):
            for j in range(k - 1):
                c = SphereCoords(0.5, 2 * math.pi * j / (k - 1), 0.0)
                f = from_sphere(c, k)
                self.assertLess(abs(discriminant(f)), 1e-10)
                self.assertAlmostEqual(abs(f.evaluate(parabolic_point(k, j))), 0.0, places=12)

    def test_eps1_zero(self):
        k, eps0 = 5, 0.7 + 0.2j
        expected = (-1) ** (k // 2) * (k - 1) ** (k - 1) * k**k * (eps0 / (k - 1)) ** (k - 1)
        self.assertAlmostEqual(abs(discriminant(FieldSpec(k, 0, eps0)) - expected), 0.0, places=6)

    def test_guard_band(self):
        with self.assertRaises(NearParabolic) as ctx:
            check_guard_band(FieldSpec(4, -0.5, 3 / 16))
        self.assertEqual(ctx.exception.quantity, "discriminant")

        with self.assertRaises(NearParabolic) as ctx:
            check_guard_band(FieldSpec(3, -1, 0))
        self.assertEqual(ctx.exception.quantity, "eps0")

        check_guard_band(from_sphere(SphereCoords(0.3, 0.4, 0.0), 4))


class SymmetryTests(SimpleTestCase):
    def test_reflect(self):
        f = FieldSpec(3, 1j, 1 + 1j)
        g = symmetry_reflect(f, 1)
        self.assertAlmostEqual(abs(g.eps1 - cmath.exp(-2j * math.pi / 3) * -1j), 0.0)
        self.assertAlmostEqual(abs(g.eps0 - (1 - 1j)), 0.0)
        self.assertEqual(symmetry_reflect(FieldSpec(4, 2, -3), 0), FieldSpec(4, 2, -3))

        twice = symmetry_reflect(g, 1)
        self.assertAlmostEqual(abs(twice.eps1 - f.eps1), 0.0)
        self.assertAlmostEqual(abs(twice.eps0 - f.eps0), 0.0)

    def test_reflect_transports_roots_and_periods(self):
        f = from_sphere(SphereCoords(0.4, 0.3, 0.1), 4)
        g = symmetry_reflect(f, 1)
        a, b = singular_points(f), singular_points(g)
        self.assertLess(
            match_multisets([sigma_reflect(p.location, 1, 4) for p in a], [p.location for p in b]),
            1e-9,
        )
        self.assertLess(
            match_multisets([-np.conj(p.period) for p in a], [p.period for p in b]), 1e-8
        )

    def test_reverse(self):
        g = symmetry_reverse(FieldSpec(2, 1, 1j), 0)
        self.assertAlmostEqual(abs(g.eps1 - 1j), 0.0)
        self.assertAlmostEqual(abs(g.eps0 - 1j), 0.0)

        f = FieldSpec(3, 0.2 - 0.7j, 0.4 + 0.1j)
        twice = symmetry_reverse(symmetry_reverse(f, 2), 2)
        self.assertAlmostEqual(abs(twice.eps1 - f.eps1), 0.0)
        self.assertAlmostEqual(abs(twice.eps0 - f.eps0), 0.0)

    def test_reverse_fixed_point(self):
        k, m = 3, 1
        eps1 = 0.8 * cmath.exp(1j * (-math.pi / 2 - (2 * m + 1) * math.pi / (2 * k)))
        f = FieldSpec(k, eps1, 0.5j)
        g = symmetry_reverse(f, m)
        self.assertAlmostEqual(abs(g.eps1 - f.eps1), 0.0)
        self.assertAlmostEqual(abs(g.eps0 - f.eps0), 0.0)

    def test_reverse_conjugates_periods(self):
        f = from_sphere(SphereCoords(0.7, 0.2, 0.3), 3)
        g = symmetry_reverse(f, 0)
        a, b = singular_points(f), singular_points(g)
        conjugated = [np.conj(p.period) for p in a]
        self.assertLess(match_multisets(conjugated, [p.period for p in b]), 1e-8)


class NumericsTests(SimpleTestCase):
    def test_defaults(self):
        self.assertEqual(Numerics().ray_count, 64)
        self.assertEqual(Numerics().rtol, 1e-10)

    @override_settings(VFIELD={"ray_count": 16, "rtol": 1e-8})
    def test_precedence(self):
        values = numerics(rtol=1e-6, atol=None)
        self.assertEqual(values.ray_count, 16)
        self.assertEqual(values.rtol, 1e-6)
        self.assertEqual(values.atol, Numerics().atol)

    def test_rejects_bad_keys(self):
        with self.assertRaises(InvalidParameter):
            numerics(nonsense=1)
        with self.assertRaises(InvalidParameter):
            numerics(rtol=-1.0)

    def test_with_tol(self):
        values = Numerics().with_tol(1e-8)
        self.assertAlmostEqual(values.atol / values.rtol, 1e-2)

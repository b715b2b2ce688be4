import cmath
import math
from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase, tag

from vfield_app.core import FieldSpec, SphereCoords, from_sphere, singular_points
from vfield_app.exceptions import NearParabolic, NonPlanar, NotParabolic, Parabolic
from vfield_app.periodgon import (
    Edge,
    Periodgon,
    build_periodgon,
    chord_alphas,
    domain_loops,
    edge_alphas,
    fiber_field,
    homoclinic_alphas,
    horizontal_chords,
    is_planar,
    periodic_domain,
    rotate_periodgon,
    sepal_zones,
)

from .test_core import match_multisets

S_ONE = FieldSpec(3, 0, 2)


def polygon(*vertices) -> Periodgon:
    n = len(vertices)
    edges = tuple(Edge(i, vertices[(i + 1) % n] - vertices[i]) for i in range(n))
    chain = Periodgon(
        edges=edges, vertices=vertices, closed=True, planar=True, ambiguous_order=False
    )
    return replace(chain, planar=is_planar(chain))


# rhombus with one horizontal and one vertical diagonal
RHOMBUS = polygon(0j, 1 - 1j, 2 + 0j, 1 + 1j)


def circular_gap(a: float, b: float) -> float:
    d = abs(a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


class DomainLoopTests(SimpleTestCase):
    def test_origin_of_s_one_has_k_loops(self):
        domain = domain_loops(S_ONE, 0)
        self.assertEqual(domain.loop_count, 3)
        self.assertAlmostEqual(domain.delta, math.pi / 2)
        for inbound, outbound in domain.escape_sector_pairs:
            self.assertEqual(inbound % 2, 1)
            self.assertEqual(outbound % 2, 0)

    def test_pair_of_loops_at_theta_zero(self):
        f = from_sphere(SphereCoords(0.3, 0.0), 3)
        self.assertEqual(domain_loops(f, 1).loop_count, 2)

    def test_middle_center_owns_both_loops(self):
        f = from_sphere(SphereCoords(0.3, 0.0), 4)
        self.assertEqual(domain_loops(f, 1).loop_count, 2)

    @tag("slow")
    def test_multi_loops_for_k4(self):
        k = 4
        half = math.pi / (k - 1)
        for s in (0.1, 0.2, 0.3, 0.4):
            with self.subTest(center=1, s=s):
                f = from_sphere(SphereCoords(s, 0.0), k)
                self.assertEqual(domain_loops(f, 1).loop_count, 2)
        for s in (0.2, 0.5, 0.8):
            with self.subTest(center=0, s=s):
                f = from_sphere(SphereCoords(s, half), k)
                self.assertGreaterEqual(domain_loops(f, 0).loop_count, 2)
        f = from_sphere(SphereCoords(0.5, 0.5 * half), k)
        points = singular_points(f)
        for p in points:
            with self.subTest(generic=p.index):
                self.assertEqual(domain_loops(f, p.index, points=points).loop_count, 1)

    @tag("slow")
    def test_bisection_on_a_multi_loop_domain(self):
        f = from_sphere(SphereCoords(0.3, 0.0), 3)
        domain = periodic_domain(f, 1, ray_count=16)
        self.assertEqual(domain.loop_count, 2)
        self.assertEqual(domain.escape_sector_pairs, domain_loops(f, 1).escape_sector_pairs)

    def test_single_loop_near_s_one(self):
        f = from_sphere(SphereCoords(0.95, math.pi / 4), 3)
        self.assertEqual(domain_loops(f, 0).loop_count, 1)

    def test_parabolic_center(self):
        with self.assertRaises(Parabolic):
            domain_loops(FieldSpec(2, 1, 0), 0)

    def test_guard_band(self):
        f = from_sphere(SphereCoords(0.5, 0.0), 4)
        with self.assertRaises(NearParabolic):
            domain_loops(f, 0)

    @tag("slow")
    def test_boundary_bisection_agrees_with_separatrices(self):
        domain = periodic_domain(S_ONE, 0, ray_count=6, tol=1e-6)
        self.assertEqual(domain.loop_count, 3)
        self.assertEqual(len(domain.rays), 6)
        self.assertEqual(domain.escape_sector_pairs, domain_loops(S_ONE, 0).escape_sector_pairs)
        for ray in domain.rays:
            self.assertGreater(ray.radius, 0.0)


class PeriodgonTests(SimpleTestCase):
    def test_degenerate_periodgon_at_s_one(self):
        p = build_periodgon(S_ONE)
        self.assertEqual(len(p.edges), 4)
        self.assertTrue(p.closed)
        self.assertTrue(p.planar)
        nu0 = math.pi * 1j
        self.assertLess(
            match_multisets([e.vector for e in p.edges], [nu0, -nu0 / 3, -nu0 / 3, -nu0 / 3]),
            1e-9,
        )
        self.assertEqual(p.vertices[0], 0j)

    def test_edges_are_the_periods(self):
        f = from_sphere(SphereCoords(0.4, 0.3), 4)
        points = singular_points(f)
        p = build_periodgon(f)
        self.assertEqual(len(p.edges), 5)
        self.assertEqual(sorted(e.center_index for e in p.edges), list(range(5)))
        periods = [q.period for q in points]
        self.assertLess(match_multisets([e.vector for e in p.edges], periods), 1e-9)
        self.assertTrue(p.closed)
        self.assertLess(abs(p.closure_gap), 1e-9 * p.diameter)

    def test_vertices_are_partial_sums(self):
        f = from_sphere(SphereCoords(0.6, 0.2), 3)
        p = build_periodgon(f)
        total = 0j
        for vertex, edge in zip(p.vertices, p.edges):
            self.assertLess(abs(vertex - total), 1e-12 * p.diameter)
            total += edge.vector

    def test_parabolic_field(self):
        with self.assertRaises(Parabolic):
            build_periodgon(FieldSpec(3, -1, 0))

    @tag("slow")
    def test_planar_along_a_ray(self):
        for s in (0.2, 0.4, 0.6, 0.8):
            with self.subTest(s=s):
                p = build_periodgon(from_sphere(SphereCoords(s, math.pi / 10), 5))
                self.assertTrue(p.planar)
                self.assertTrue(p.closed)

    @tag("slow")
    def test_edge_order_near_s_zero(self):
        for k in (4, 5):
            with self.subTest(k=k):
                p = build_periodgon(from_sphere(SphereCoords(0.05, math.pi / (2 * (k - 1))), k))
                order = [e.center_index for e in p.edges]
                n = len(order)

                def neighbours(j):
                    i = order.index(j)
                    return {order[(i - 1) % n], order[(i + 1) % n]}

                self.assertEqual(neighbours(0), {(k + 1) // 2, -(-k // 2) + 1})
                self.assertEqual(neighbours(1), {k, 2})

    @tag("slow")
    def test_covariance_along_the_fiber(self):
        rng = np.random.default_rng(17)
        samples = rng.uniform((0.1, 0.0, 0.0), (0.9, 2 * math.pi, 2 * math.pi), (20, 3))
        for s, theta, alpha in samples:
            with self.subTest(s=s, theta=theta, alpha=alpha):
                f0 = from_sphere(SphereCoords(s, theta), 3)
                moved = build_periodgon(fiber_field(f0, alpha))
                turned = rotate_periodgon(build_periodgon(f0), 3, alpha)
                self.assertLess(
                    match_multisets(
                        [e.vector for e in moved.edges], [e.vector for e in turned.edges]
                    ),
                    1e-8 * turned.diameter,
                )


class PlanarityTests(SimpleTestCase):
    def test_rhombus(self):
        self.assertTrue(RHOMBUS.planar)

    def test_bow_tie(self):
        bow_tie = polygon(0j, 1 + 1j, 1 + 0j, 1j)
        self.assertFalse(bow_tie.planar)
        with self.assertRaises(NonPlanar):
            horizontal_chords(bow_tie)
        with self.assertRaises(NonPlanar):
            chord_alphas(bow_tie, 3)

    def test_collinear_chain_is_planar(self):
        self.assertTrue(polygon(0j, 3j, 2j, 1j).planar)


class ChordTests(SimpleTestCase):
    def test_interior_chords(self):
        chords = chord_alphas(RHOMBUS, 3)
        self.assertEqual(sorted(c.chord.vertex_pair for c in chords), [(0, 2), (1, 3)])

    def test_horizontal_diagonal(self):
        chords = horizontal_chords(RHOMBUS)
        self.assertEqual([c.vertex_pair for c in chords], [(0, 2)])
        self.assertEqual(chords[0].center_pair, (0, 1))

    def test_alphas_of_a_real_chord(self):
        k = 3
        by_pair = {c.chord.vertex_pair: c.alphas for c in chord_alphas(RHOMBUS, k)}
        expected = [m * math.pi / k for m in range(2 * k)]
        for got, want in zip(by_pair[(0, 2)], expected):
            self.assertAlmostEqual(got, want)
        for got, want in zip(by_pair[(1, 3)], expected):
            self.assertAlmostEqual(got, want + math.pi / (2 * k))

    def test_rotation_makes_the_chord_horizontal(self):
        k = 4
        for entry in chord_alphas(RHOMBUS, k):
            for alpha in entry.alphas:
                rotated = rotate_periodgon(RHOMBUS, k, alpha)
                pairs = [c.vertex_pair for c in horizontal_chords(rotated)]
                self.assertIn(entry.chord.vertex_pair, pairs)

    def test_alpha0_offset(self):
        plain = chord_alphas(RHOMBUS, 3)[0].alphas
        shifted = chord_alphas(RHOMBUS, 3, alpha0=0.1)[0].alphas
        self.assertEqual(len(plain), len(shifted))
        for a in plain:
            self.assertTrue(any(circular_gap(a + 0.1, b) < 1e-12 for b in shifted))

    def test_edge_alphas(self):
        k = 3
        f = from_sphere(SphereCoords(0.5, 0.4), k)
        p = build_periodgon(f)
        for (index, alphas), edge in zip(edge_alphas(p, k), p.edges):
            self.assertEqual(index, edge.center_index)
            for alpha in alphas:
                turned = cmath.exp(1j * k * alpha) * edge.vector
                self.assertLess(abs(turned.imag), 1e-9 * abs(edge.vector))

    @tag("slow")
    def test_direct_detection_matches_chords(self):
        for k, coords in ((3, SphereCoords(0.6, 0.3)), (4, SphereCoords(0.6, 0.2))):
            with self.subTest(k=k):
                f0 = from_sphere(coords, k)
                p = build_periodgon(f0)
                self.assertTrue(p.planar)
                predicted = sorted(
                    a
                    for entry in chord_alphas(p, k)
                    for a in entry.alphas
                    if 0.0 <= a < math.pi / k
                )
                scan = homoclinic_alphas(f0, samples=200)
                self.assertEqual(len(scan.chord_alphas), len(predicted))
                for alpha, expected in zip(sorted(scan.chord_alphas), predicted):
                    self.assertAlmostEqual(alpha, expected, delta=2e-3)


class SepalZoneTests(SimpleTestCase):
    def test_simple_point(self):
        f = S_ONE
        with self.assertRaises(NotParabolic):
            sepal_zones(f, singular_points(f)[0])

    @tag("slow")
    def test_codimension_one(self):
        f = FieldSpec(2, 1, 0)
        origin = singular_points(f)[0]
        report = sepal_zones(f, origin)
        self.assertEqual(report.codim, 1)
        self.assertEqual(report.zone_count, 2)

    @tag("slow")
    def test_zero_field(self):
        k = 2
        f = FieldSpec(k)
        report = sepal_zones(f, singular_points(f)[0])
        self.assertEqual(report.codim, k)
        self.assertEqual(report.zone_count, 2 * k)

    @tag("slow")
    def test_gap_counts(self):
        for k in (3, 4, 5, 6):
            with self.subTest(k=k):
                f = FieldSpec(k, -1, 0)
                origin = next(p for p in singular_points(f) if not p.is_simple)
                report = sepal_zones(f, origin)
                self.assertEqual(report.zone_count, 2)
                self.assertEqual(len(report.sector_indices), 2)
                m1, m2 = report.gap_counts
                self.assertEqual(m1 + m2, 2 * k - 2)
                self.assertLessEqual(abs(m1 - m2), 2)

"""Curved trajectory simulation: endpoints, arc/chord, termination."""

import numpy as np
import pytest

from conftest import make_y_tree
from test_model import point_segment_distance_oracle
from veintree.model import DomainBox
from veintree.trajectory import Polyline3, TsmParams, simulate_trajectory, tree_to_polylines
from veintree.trunks import load_templates, sample_trunk


P1 = np.array([10.0, 40.0, 10.0])
P2 = np.array([30.0, 40.0, 30.0])


class TestSimulateTrajectory:
    def test_zero_disturbance_is_straight(self):
        params = TsmParams(w_rand=0.0)
        poly = simulate_trajectory(P1, P2, params, np.random.default_rng(0))
        for p in poly.points:
            assert point_segment_distance_oracle(p, P1, P2) < 1e-9
        chord = float(np.linalg.norm(P2 - P1))
        assert abs(poly.arc_length() - chord) <= params.l_step

    def test_endpoints_exact(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            a = np.array([rng.uniform(5, 65), rng.uniform(34, 46), rng.uniform(5, 75)])
            b = np.array([rng.uniform(5, 65), rng.uniform(34, 46), rng.uniform(5, 75)])
            if np.array_equal(a, b):
                continue
            poly = simulate_trajectory(a, b, TsmParams(), rng)
            assert np.array_equal(poly.points[0], a)
            assert np.array_equal(poly.points[-1], b)

    def test_arc_at_least_chord_and_bounded_mean(self):
        params = TsmParams(w_rand=0.35)
        rng = np.random.default_rng(2)
        ratios = []
        for _ in range(1000):
            poly = simulate_trajectory(P1, P2, params, rng)
            arc, chord = poly.arc_length(), poly.chord_length()
            assert arc >= chord - 1e-12
            ratios.append(arc / chord)
        mean_ratio = float(np.mean(ratios))
        assert 1.0 < mean_ratio < 1.5

    def test_termination_within_point_budget(self):
        params = TsmParams(w_rand=5.0, max_steps=40)  # violent wiggle
        rng = np.random.default_rng(3)
        for _ in range(200):
            poly = simulate_trajectory(P1, P2, params, rng)
            assert len(poly.points) <= params.max_steps + 1

    def test_points_clamped_to_box(self):
        box = DomainBox()
        params = TsmParams(w_rand=3.0)
        rng = np.random.default_rng(4)
        a = np.array([1.0, 33.5, 1.0])
        b = np.array([69.0, 46.5, 79.0])
        for _ in range(100):
            poly = simulate_trajectory(a, b, params, rng, box=box)
            assert (poly.points >= box.lo - 1e-12).all()
            assert (poly.points <= box.hi + 1e-12).all()

    def test_consecutive_points_distinct(self):
        rng = np.random.default_rng(5)
        for w in (0.0, 0.35, 2.0):
            poly = simulate_trajectory(P1, P2, TsmParams(w_rand=w), rng)
            steps = np.linalg.norm(np.diff(poly.points, axis=0), axis=1)
            assert (steps > 0).all()

    def test_deterministic_given_seed(self):
        a = simulate_trajectory(P1, P2, TsmParams(), np.random.default_rng(6))
        b = simulate_trajectory(P1, P2, TsmParams(), np.random.default_rng(6))
        assert np.array_equal(a.points, b.points)

    def test_identical_endpoints_rejected(self):
        with pytest.raises(ValueError):
            simulate_trajectory(P1, P1, TsmParams(), np.random.default_rng(7))

    def test_short_segment_degenerates_to_two_points(self):
        a = np.array([10.0, 40.0, 10.0])
        b = a + np.array([0.0, 0.0, 0.2])  # shorter than arrive radius
        poly = simulate_trajectory(a, b, TsmParams(), np.random.default_rng(8))
        assert len(poly.points) == 2


class TestTreeToPolylines:
    def test_one_polyline_per_segment(self, y_tree):
        polys = tree_to_polylines(y_tree, TsmParams(), np.random.default_rng(9))
        assert len(polys) == len(y_tree.segments)

    def test_junction_continuity(self):
        tree = make_y_tree()
        polys = tree_to_polylines(tree, TsmParams(), np.random.default_rng(10))
        # Segment 0 ends at node 1; segments 1 and 2 start there.
        junction = tree.nodes[1]
        assert np.array_equal(polys[0].points[-1], junction)
        assert np.array_equal(polys[1].points[0], junction)
        assert np.array_equal(polys[2].points[0], junction)

    def test_radius_copied(self, y_tree):
        polys = tree_to_polylines(y_tree, TsmParams(), np.random.default_rng(11))
        radii = sorted(s.radius for s in y_tree.segments.values())
        assert sorted(p.radius for p in polys) == radii

    def test_trunk_polylines_inside_box(self, box, policy):
        template = next(t for t in load_templates() if t.family == "A")
        trunk = sample_trunk(template, box, policy, np.random.default_rng(12))
        polys = tree_to_polylines(trunk.tree, TsmParams(), np.random.default_rng(13), box)
        for poly in polys:
            assert (poly.points >= box.lo - 1e-12).all()
            assert (poly.points <= box.hi + 1e-12).all()


class TestPolyline3:
    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            Polyline3(points=np.zeros((1, 3)), radius=0.5)

    def test_needs_positive_radius(self):
        with pytest.raises(ValueError):
            Polyline3(points=np.zeros((2, 3)), radius=0.0)

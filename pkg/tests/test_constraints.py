import numpy as np
import pytest

from ipbc import (
    CANNOT_LINK,
    MUST_LINK,
    Constraint,
    ConstraintConflictError,
    ConstraintError,
    ConstraintSet,
    constraint_gradient,
    constraint_loss,
)

from oracles import central_difference_gradient


def make_set(n=10, margin=1.0, lam_ml=1.0, lam_cl=1.0):
    return ConstraintSet(n_points=n, margin=margin, lambda_ml=lam_ml, lambda_cl=lam_cl)


class TestConstraintSet:
    def test_canonicalization_and_idempotence(self):
        cs = make_set().add(Constraint(MUST_LINK, 2, 7))
        cs2 = cs.add(Constraint(MUST_LINK, 7, 2, weight=5.0))
        assert len(cs2) == 1
        stored = cs2.constraints[0]
        assert (stored.i, stored.j) == (2, 7)
        assert stored.weight == 1.0  # first insertion wins

    def test_conflict_reports_both_records(self):
        cs = make_set().add(Constraint(MUST_LINK, 2, 7))
        with pytest.raises(ConstraintConflictError) as err:
            cs.add(Constraint(CANNOT_LINK, 2, 7))
        assert err.value.existing.kind == MUST_LINK
        assert err.value.incoming.kind == CANNOT_LINK

    def test_add_to_empty(self):
        cs = make_set().add(Constraint(CANNOT_LINK, 0, 5))
        assert len(cs) == 1

    def test_self_link_rejected(self):
        with pytest.raises(ConstraintError):
            make_set().add(Constraint(MUST_LINK, 3, 3))

    def test_out_of_range_rejected(self):
        with pytest.raises(ConstraintError):
            make_set(n=4).add(Constraint(MUST_LINK, 0, 4))

    def test_copy_on_write(self):
        cs = make_set()
        cs2 = cs.add(Constraint(MUST_LINK, 0, 1))
        assert len(cs) == 0 and len(cs2) == 1

    def test_remove_pair(self):
        cs = make_set().add(Constraint(MUST_LINK, 0, 1)).add(Constraint(CANNOT_LINK, 2, 3))
        cs2 = cs.remove_pair(3, 2)
        assert len(cs2) == 1 and cs2.constraints[0].kind == MUST_LINK


class TestConstraintLoss:
    def test_must_link_quadratic(self):
        coords = np.array([[0.0, 0.0], [3.0, 4.0]])
        cs = make_set(n=2).add(Constraint(MUST_LINK, 0, 1))
        l_ml, l_cl = constraint_loss(coords, cs)
        assert l_ml == pytest.approx(25.0)
        assert l_cl == 0.0

    def test_inactive_hinge(self):
        coords = np.array([[0.0, 0.0], [2.0, 0.0]])
        cs = make_set(n=2, margin=1.0).add(Constraint(CANNOT_LINK, 0, 1))
        assert constraint_loss(coords, cs)[1] == 0.0

    def test_coincident_cannot_link(self):
        coords = np.zeros((2, 2))
        cs = make_set(n=2, margin=1.0).add(Constraint(CANNOT_LINK, 0, 1))
        assert constraint_loss(coords, cs)[1] == pytest.approx(1.0)

    def test_swap_invariance(self, rng):
        coords = rng.normal(size=(6, 2))
        a = make_set(n=6).add(Constraint(MUST_LINK, 1, 4)).add(Constraint(CANNOT_LINK, 0, 5))
        b = make_set(n=6).add(Constraint(MUST_LINK, 4, 1)).add(Constraint(CANNOT_LINK, 5, 0))
        assert constraint_loss(coords, a) == constraint_loss(coords, b)

    def test_rigid_motion_invariance(self, rng):
        coords = rng.normal(size=(8, 2))
        cs = make_set(n=8).add(Constraint(MUST_LINK, 0, 3)).add(Constraint(CANNOT_LINK, 2, 6))
        base = constraint_loss(coords, cs)
        shifted = constraint_loss(coords + np.array([13.0, -4.0]), cs)
        theta = 0.7
        rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        rotated = constraint_loss(coords @ rot.T, cs)
        assert base == pytest.approx(shifted)
        assert base == pytest.approx(rotated)

    def test_scaling_behavior(self, rng):
        coords = rng.normal(size=(8, 2)) * 0.2
        cs = make_set(n=8, margin=1.0)
        for i, j in [(0, 1), (2, 3), (4, 5)]:
            cs = cs.add(Constraint(CANNOT_LINK, i, j))
        cs_ml = cs.add(Constraint(MUST_LINK, 6, 7))
        c = 3.0
        l_ml_base = constraint_loss(coords, cs_ml)[0]
        l_ml_scaled = constraint_loss(coords * c, cs_ml)[0]
        assert l_ml_scaled == pytest.approx(c * c * l_ml_base)

        def active_hinges(pts):
            return sum(
                np.linalg.norm(pts[k.i] - pts[k.j]) < cs.margin
                for k in cs.by_kind(CANNOT_LINK)
            )

        assert active_hinges(coords * c) <= active_hinges(coords)


class TestConstraintGradient:
    def test_must_link_hand_case(self):
        coords = np.array([[0.0, 0.0], [1.0, 0.0]])
        cs = make_set(n=2, lam_ml=1.0).add(Constraint(MUST_LINK, 0, 1))
        grad = constraint_gradient(coords, cs)
        np.testing.assert_allclose(grad[0], [-2.0, 0.0])
        np.testing.assert_allclose(grad[1], [2.0, 0.0])

    def test_hinge_boundary_zero(self):
        coords = np.array([[0.0, 0.0], [1.0, 0.0]])
        cs = make_set(n=2, margin=1.0).add(Constraint(CANNOT_LINK, 0, 1))
        np.testing.assert_array_equal(constraint_gradient(coords, cs), np.zeros((2, 2)))

    def test_empty_set_zero_matrix(self, rng):
        coords = rng.normal(size=(5, 2))
        np.testing.assert_array_equal(
            constraint_gradient(coords, make_set(n=5)), np.zeros((5, 2))
        )

    def test_matches_finite_differences(self, rng):
        # random instances away from the hinge boundary and coincidence
        for trial in range(10):
            coords = rng.normal(size=(6, 2)) * 2.0
            cs = make_set(n=6, margin=1.0, lam_ml=0.7, lam_cl=1.3)
            cs = cs.add(Constraint(MUST_LINK, 0, 1, weight=2.0))
            cs = cs.add(Constraint(MUST_LINK, 2, 3))
            cs = cs.add(Constraint(CANNOT_LINK, 1, 4, weight=0.5))
            cs = cs.add(Constraint(CANNOT_LINK, 0, 5))
            dists = [np.linalg.norm(coords[c.i] - coords[c.j])
                     for c in cs.by_kind(CANNOT_LINK)]
            if any(abs(d - cs.margin) < 0.05 or d < 0.05 for d in dists):
                continue
            analytic = constraint_gradient(coords, cs)
            fd = central_difference_gradient(
                lambda pts: (lambda ml, cl: cs.lambda_ml * ml + cs.lambda_cl * cl)(
                    *constraint_loss(pts, cs)),
                coords,
            )
            denom = np.maximum(np.abs(fd), 1e-8)
            assert (np.abs(analytic - fd) / denom).max() < 1e-5

    def test_coincident_pair_deterministic_escape(self):
        coords = np.zeros((2, 2))
        cs = make_set(n=2, margin=1.0, lam_cl=1.0).add(Constraint(CANNOT_LINK, 0, 1))
        g1 = constraint_gradient(coords, cs)
        g2 = constraint_gradient(coords, cs)
        np.testing.assert_array_equal(g1, g2)
        assert np.linalg.norm(g1[0]) == pytest.approx(2.0)  # 2 * lambda * w * m
        np.testing.assert_allclose(g1[1], -g1[0])

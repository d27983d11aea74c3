"""Projected gradient descent oracle: projections, clipping, convergence."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from advgame import (
    AttackBudget,
    ClassifierSet,
    LinearClassifier,
    LossKind,
    MixedStrategy,
    PgdConfig,
    clip_to_pixel_box,
    iterations_for_accuracy,
    pgd_best_response,
    project,
)


def _binary(w, b=0.0):
    return LinearClassifier.from_binary(np.asarray(w, dtype=float), b)


class TestProject:
    def test_l2_rescales_boundary(self):
        assert_allclose(project(np.array([3.0, 4.0]), AttackBudget("l2", 1.0)),
                        [0.6, 0.8])

    def test_l2_keeps_interior(self):
        v = np.array([3.0, 4.0])
        assert_allclose(project(v, AttackBudget("l2", 10.0)), v)

    def test_linf_clamps_coordinates(self):
        got = project(np.array([0.2, -3.0]), AttackBudget("linf", 0.5))
        assert_allclose(got, [0.2, -0.5])

    def test_idempotent_and_nonexpansive(self):
        rng = np.random.default_rng(31)
        for norm in ("l2", "linf"):
            budget = AttackBudget(norm, 0.7)
            for _ in range(100):
                v = rng.normal(size=3) * 2.0
                pv = project(v, budget)
                assert budget.norm_of(pv) <= 0.7 + 1e-12
                assert_allclose(project(pv, budget), pv)
                assert np.linalg.norm(pv) <= np.linalg.norm(v) + 1e-12


class TestPixelClip:
    def test_clips_overflow(self):
        assert_allclose(clip_to_pixel_box(np.array([0.9]), np.array([0.3])), [0.1])

    def test_keeps_interior(self):
        assert_allclose(clip_to_pixel_box(np.array([0.5]), np.array([-0.2])), [-0.2])

    def test_clips_underflow(self):
        assert_allclose(clip_to_pixel_box(np.array([0.0]), np.array([-0.4])), [0.0])

    def test_rejects_point_outside_box(self):
        with pytest.raises(ValueError):
            clip_to_pixel_box(np.array([1.5]), np.array([0.0]))


class TestIterationBudget:
    def test_quadratic_rate(self):
        assert iterations_for_accuracy(0.45, 1e-2) == 2025
        assert iterations_for_accuracy(0.1, 0.1) == 1

    def test_cap(self):
        assert iterations_for_accuracy(1.0, 1e-3) == 100000


class TestPgdConfig:
    def test_step_size_rule(self):
        cfg = PgdConfig(AttackBudget("l2", 2.0), iterations=40)
        assert cfg.step_size == pytest.approx(1.25 * 2.0 / 40)

    def test_validation(self):
        with pytest.raises(ValueError):
            PgdConfig(AttackBudget("l2", 1.0), iterations=0)


class TestPgdBestResponse:
    def test_drives_single_model_objective_to_zero(self):
        cset = ClassifierSet([_binary([1.0, 0.0])])
        p = MixedStrategy(np.array([1.0]))
        x = np.array([2.0, 0.0])
        cfg = PgdConfig(AttackBudget("l2", 3.0), iterations=40)
        v, value, trace = pgd_best_response(p, cset, x, 0, cfg,
                                            LossKind.reverse_hinge(3.0))
        assert value <= 1e-3
        assert cset.members[0].predict(x + v) == 1
        assert trace[0] == pytest.approx(2.0 / 5.0)  # raw 2 over 2 + 3*||w||

    def test_already_fooled_stops_immediately(self):
        cset = ClassifierSet([_binary([1.0, 0.0])])
        p = MixedStrategy(np.array([1.0]))
        x = np.array([-1.0, 0.0])
        cfg = PgdConfig(AttackBudget("l2", 1.0), iterations=40)
        v, value, trace = pgd_best_response(p, cset, x, 0, cfg,
                                            LossKind.reverse_hinge(1.0))
        assert value == 0.0
        assert_allclose(v, np.zeros(2))
        assert len(trace) == 1

    def test_hold_position_fills_trace(self):
        cset = ClassifierSet([_binary([1.0, 0.0])])
        p = MixedStrategy(np.array([1.0]))
        x = np.array([-1.0, 0.0])
        cfg = PgdConfig(AttackBudget("l2", 1.0), iterations=7,
                        early_stop_at_zero=False)
        _, _, trace = pgd_best_response(p, cset, x, 0, cfg,
                                        LossKind.reverse_hinge(1.0))
        assert len(trace) == 8
        assert_allclose(trace, np.zeros(8))

    def test_returns_best_iterate(self, axis_pair):
        cset, x, y = axis_pair
        p = MixedStrategy(np.array([0.5, 0.5]))
        cfg = PgdConfig(AttackBudget("l2", 1.5), iterations=25)
        v, value, trace = pgd_best_response(p, cset, x, y, cfg,
                                            LossKind.reverse_hinge(1.5))
        assert value == pytest.approx(np.min(trace), abs=0)
        assert value <= trace[0]
        assert AttackBudget("l2", 1.5).contains(v)

    def test_matches_exact_oracle_when_corner_reachable(self, axis_pair):
        # Enough iterations push the symmetric objective into the corner
        # region where both members flip; 0-1 loss then matches the exact
        # oracle's 1.0 at the same budget.
        cset, x, y = axis_pair
        p = MixedStrategy(np.array([0.5, 0.5]))
        cfg = PgdConfig(AttackBudget("l2", 1.5), iterations=900)
        v, value, _ = pgd_best_response(p, cset, x, y, cfg,
                                        LossKind.reverse_hinge(1.5))
        assert value <= 1e-9
        assert all(m.predict(x + v) == 1 for m in cset.members)

    def test_pixel_box_keeps_iterates_in_unit_cube(self):
        cset = ClassifierSet([_binary([1.0, 0.0], -0.02)])
        p = MixedStrategy(np.array([1.0]))
        x = np.array([0.05, 0.5])
        cfg = PgdConfig(AttackBudget("l2", 0.5), iterations=30, pixel_box=True)
        v, _, _ = pgd_best_response(p, cset, x, 0, cfg,
                                    LossKind.reverse_hinge(0.5))
        assert np.all(x + v >= -1e-12)
        assert np.all(x + v <= 1.0 + 1e-12)
        assert AttackBudget("l2", 0.5).contains(v)

    def test_untargeted_kind_on_multiclass(self):
        rng = np.random.default_rng(32)
        c = LinearClassifier(rng.normal(size=(3, 2)), np.zeros(3))
        cset = ClassifierSet([c])
        x = rng.normal(size=2)
        y = c.predict(x)
        cfg = PgdConfig(AttackBudget("l2", 2.0), iterations=60)
        v, value, trace = pgd_best_response(MixedStrategy(np.array([1.0])),
                                            cset, x, y, cfg,
                                            LossKind.untargeted())
        assert value <= trace[0]
        assert AttackBudget("l2", 2.0).contains(v)

    def test_deterministic(self, axis_pair):
        cset, x, y = axis_pair
        p = MixedStrategy(np.array([0.4, 0.6]))
        cfg = PgdConfig(AttackBudget("l2", 1.3), iterations=50)
        kind = LossKind.reverse_hinge(1.3)
        v1, _, t1 = pgd_best_response(p, cset, x, y, cfg, kind)
        v2, _, t2 = pgd_best_response(p, cset, x, y, cfg, kind)
        assert np.array_equal(v1, v2)
        assert np.array_equal(t1, t2)

    def test_zero_one_kind_rejected(self, axis_pair):
        cset, x, y = axis_pair
        cfg = PgdConfig(AttackBudget("l2", 1.0))
        with pytest.raises(ValueError):
            pgd_best_response(MixedStrategy(np.array([0.5, 0.5])), cset, x, y,
                              cfg, LossKind.zero_one())

import numpy as np
import pytest

from teleokin.constraints import (ConstraintRows, EntrySphere,
                                  entry_sphere_rows, joint_limit_rows,
                                  stack_rows)
from teleokin.kinematics import shaft_line, line_point_sq_distance, line_point_distance_jacobian
from teleokin.quat import vec3

from conftest import make_random_model, random_config


class TestJointLimitRows:
    def test_shape_and_blocks(self, default_model):
        q = np.zeros(9)
        rows = joint_limit_rows(q, default_model)
        assert rows.W.shape == (18, 9)
        assert np.array_equal(rows.W, np.vstack([-np.eye(9), np.eye(9)]))

    def test_midrange_symmetric_limits(self):
        m = make_random_model(0)
        m.q_min[:] = -1.0
        m.q_max[:] = 1.0
        rows = joint_limit_rows(np.zeros(9), m)
        # lower block bound -(q_min - q) = 1, upper block q_max - q = 1
        assert np.allclose(rows.w, 1.0)
        assert not rows.limit_violation

    def test_upper_limit_forces_nonpositive_velocity(self, default_model):
        q = default_model.q_min + 0.5
        k = 3
        q[k] = default_model.q_max[k]
        rows = joint_limit_rows(q, default_model)
        assert rows.w[9 + k] == 0.0
        # any feasible qdot has qdot[k] <= 0
        assert rows.W[9 + k, k] == 1.0

    def test_lower_limit_row_zero(self, default_model):
        q = (default_model.q_min + default_model.q_max) / 2
        q[6] = default_model.q_min[6]
        rows = joint_limit_rows(q, default_model)
        assert rows.w[6] == 0.0

    def test_outside_limits_flags_and_restores(self, default_model):
        q = (default_model.q_min + default_model.q_max) / 2
        q[2] = default_model.q_max[2] + 1e-3
        with pytest.warns(RuntimeWarning):
            rows = joint_limit_rows(q, default_model)
        assert rows.limit_violation
        assert rows.w[9 + 2] < 0.0   # forces qdot[2] < 0, back inside

    def test_boundary_velocities_stay_first_order_feasible(self, default_model):
        # qdot sampled on the feasible polytope boundary keeps q in limits
        rng = np.random.default_rng(7)
        m = default_model
        for _ in range(50):
            q = random_config(rng, m)
            rows = joint_limit_rows(q, m)
            d = rng.standard_normal(9)
            # scale to the boundary: largest step before some row is tight
            ratios = rows.W @ d
            pos = ratios > 1e-12
            alpha = np.min(rows.w[pos] / ratios[pos])
            qdot = alpha * d
            for dt in (1e-3, 0.1, 1.0):
                nxt = q + qdot * dt
                assert np.all(nxt >= m.q_min - 1e-9)
                assert np.all(nxt <= m.q_max + 1e-9)


class TestEntrySphereRows:
    def test_row_through_center_is_inactive(self, default_model):
        rng = np.random.default_rng(8)
        q = random_config(rng, default_model)
        line = shaft_line(default_model, q)
        center = vec3(line.p) - 0.1 * vec3(line.l)
        sphere = EntrySphere(center=center, d_safe=2.5e-5, eta_d=1.0)
        rows = entry_sphere_rows(default_model, q, sphere)
        assert rows.W.shape == (1, 9)
        assert rows.w[0] == pytest.approx(1.0 * 2.5e-5, rel=1e-6)

    def test_boundary_gives_zero_bound(self, default_model):
        rng = np.random.default_rng(9)
        q = random_config(rng, default_model)
        line = shaft_line(default_model, q)
        perp = np.cross(vec3(line.l), [0.0, 0.0, 1.0])
        perp /= np.linalg.norm(perp)
        d_safe = 4e-4
        center = vec3(line.p) + np.sqrt(d_safe) * perp
        sphere = EntrySphere(center=center, d_safe=d_safe, eta_d=2.0)
        rows = entry_sphere_rows(default_model, q, sphere)
        assert abs(rows.w[0]) < 1e-12   # Ddot <= 0 enforced at the boundary

    def test_reference_parameter_bound(self, default_model):
        # D_safe = 0.005^2 = 2.5e-5 m^2, eta_d = 1, D = 1e-5 -> w = 1.5e-5
        rng = np.random.default_rng(10)
        q = random_config(rng, default_model)
        line = shaft_line(default_model, q)
        perp = np.cross(vec3(line.l), [0.0, 0.0, 1.0])
        perp /= np.linalg.norm(perp)
        center = vec3(line.p) + np.sqrt(1e-5) * perp
        sphere = EntrySphere(center=center, d_safe=0.005 ** 2, eta_d=1.0)
        rows = entry_sphere_rows(default_model, q, sphere)
        assert rows.w[0] == pytest.approx(1.5e-5, rel=1e-9)

    def test_row_is_distance_jacobian(self, default_model):
        rng = np.random.default_rng(11)
        q = random_config(rng, default_model)
        c = np.array([0.3, -0.1, 0.25])
        sphere = EntrySphere(center=c, d_safe=1e-4, eta_d=1.0)
        rows = entry_sphere_rows(default_model, q, sphere)
        assert np.array_equal(rows.W[0],
                              line_point_distance_jacobian(default_model, q, c))

    def test_already_violating_commands_restoration(self, default_model):
        rng = np.random.default_rng(12)
        q = random_config(rng, default_model)
        c = vec3(shaft_line(default_model, q).p) + np.array([0.05, 0.0, 0.0])
        sphere = EntrySphere(center=c, d_safe=1e-6, eta_d=1.0)
        rows = entry_sphere_rows(default_model, q, sphere)
        assert rows.w[0] < 0.0   # negative bound forces Ddot < 0

    def test_validation(self):
        with pytest.raises(ValueError):
            EntrySphere(center=[0, 0, 0], d_safe=0.0)
        with pytest.raises(ValueError):
            EntrySphere(center=[0, 0, 0], d_safe=1e-4, eta_d=-1.0)
        with pytest.raises(ValueError):
            EntrySphere(center=[0, 0], d_safe=1e-4)


class TestStackedSystem:
    def test_nineteen_rows_per_arm(self, default_model):
        q = np.zeros(9)
        sphere = EntrySphere(center=[0.3, 0, 0.3], d_safe=2.5e-5)
        rows = stack_rows(joint_limit_rows(q, default_model),
                          entry_sphere_rows(default_model, q, sphere))
        assert rows.W.shape == (19, 9)
        assert rows.w.shape == (19,)

    def test_zero_velocity_feasible_inside_safe_set(self, default_model):
        # q within limits and D <= D_safe imply w >= 0, so qdot = 0 satisfies
        # every row
        rng = np.random.default_rng(13)
        for _ in range(50):
            q = random_config(rng, default_model)
            line = shaft_line(default_model, q)
            # center sampled inside the sphere around the line
            perp = np.cross(vec3(line.l), rng.standard_normal(3))
            perp /= np.linalg.norm(perp)
            d_safe = 2.5e-5
            center = (vec3(line.p) - 0.1 * vec3(line.l)
                      + rng.uniform(0, 0.9) * np.sqrt(d_safe) * perp)
            sphere = EntrySphere(center=center, d_safe=d_safe, eta_d=1.0)
            rows = stack_rows(joint_limit_rows(q, default_model),
                              entry_sphere_rows(default_model, q, sphere))
            assert np.all(rows.w >= -1e-12)

    def test_discrete_forward_invariance(self, default_model):
        # velocities satisfying the rows keep D within D_safe (1 + eps_dt)
        # after an Euler step at dt = 1 ms, eta_d = 1
        rng = np.random.default_rng(14)
        m = default_model
        dt = 1e-3
        d_safe = 2.5e-5
        checked = 0
        for _ in range(200):
            q = random_config(rng, m)
            line = shaft_line(m, q)
            perp = np.cross(vec3(line.l), rng.standard_normal(3))
            n = np.linalg.norm(perp)
            if n < 1e-9:
                continue
            perp /= n
            frac = rng.uniform(0.8, 0.999)
            center = vec3(line.p) - 0.08 * vec3(line.l) \
                + frac * np.sqrt(d_safe) * perp
            sphere = EntrySphere(center=center, d_safe=d_safe, eta_d=1.0)
            rows = stack_rows(joint_limit_rows(q, m),
                              entry_sphere_rows(m, q, sphere))
            # random direction scaled onto the polytope boundary
            d = rng.standard_normal(9)
            ratios = rows.W @ d
            pos = ratios > 1e-9
            if not np.any(pos):
                continue
            alpha = np.min(rows.w[pos] / ratios[pos])
            if not np.isfinite(alpha) or alpha > 1e3:
                alpha = 1e3
            qdot = alpha * d
            d_next = line_point_sq_distance(shaft_line(m, q + qdot * dt), center)
            assert d_next <= d_safe * 1.01
            checked += 1
        assert checked > 100

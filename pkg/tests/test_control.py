import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinescan.contact import ForceScrew
from spinescan.control import (ZERO_COMMAND, ControlConfig, ControllerState, Safety,
                               compose_command, force_velocity, lateral_velocity, pitch_rate,
                               region_settings, safety_check)
from spinescan.errors import DomainError
from spinescan.phantom import Region

CFG = ControlConfig()
DT = 1 / 30


class TestLateral:
    def test_centred_at_rest(self):
        assert lateral_velocity(ControllerState(), 320.0, CFG) == 0.0

    def test_alpha_one_is_proportional(self):
        cfg = ControlConfig(alpha=1.0, v_lim=1.0)
        # 40 px = 5 mm, inside the near band
        v = lateral_velocity(ControllerState(prev_v_x=0.001), 360.0, cfg)
        assert v == pytest.approx(-cfg.K_im_near * 0.005, abs=1e-15)

    def test_smoothing_example(self):
        v = lateral_velocity(ControllerState(prev_v_x=0.002), 320.0, ControlConfig(alpha=0.5))
        assert v == pytest.approx(0.001, abs=1e-15)

    def test_far_gain(self):
        cfg = ControlConfig(alpha=1.0, v_lim=1.0)
        # 120 px = 15 mm, beyond the 10 mm threshold
        assert lateral_velocity(ControllerState(), 200.0, cfg) == pytest.approx(
            cfg.K_im_far * 0.015, abs=1e-15)

    def test_far_gain_not_larger(self):
        with pytest.raises(DomainError):
            ControlConfig(K_im_near=0.1, K_im_far=0.2)

    @given(x=st.floats(0, 639), alpha=st.floats(0.01, 1.0))
    def test_geometric_convergence(self, x, alpha):
        cfg = ControlConfig(alpha=alpha, v_lim=1.0)
        state = ControllerState()
        dx = (x - 320) * 1.25e-4
        gain = cfg.K_im_near if abs(dx) < cfg.near_far_threshold else cfg.K_im_far
        goal = -gain * dx
        err = abs(goal)
        for _ in range(20):
            v = lateral_velocity(state, x, cfg)
            assert abs(v - goal) == pytest.approx((1 - alpha) * err, abs=1e-15)
            err = abs(v - goal)

    @given(x=st.floats(0, 639), prev=st.floats(-0.01, 0.01))
    def test_clipped(self, x, prev):
        assert abs(lateral_velocity(ControllerState(prev_v_x=prev), x, CFG)) <= CFG.v_lim


class TestForce:
    def test_steady(self):
        state = ControllerState()
        for _ in range(10):
            assert force_velocity(state, 15.0, 15.0, DT, CFG) == 0.0

    def test_proportional_example(self):
        cfg = ControlConfig(K_i=0.0, K_d=0.0)
        assert force_velocity(ControllerState(), 10.0, 15.0, DT, cfg) == pytest.approx(0.0015, abs=1e-15)

    def test_setpoint_step_has_no_derivative_term(self):
        cfg = ControlConfig()
        state = ControllerState()
        force_velocity(state, 15.0, 15.0, DT, cfg)
        integral = state.integral_e
        v = force_velocity(state, 15.0, 20.0, DT, cfg)
        assert v == pytest.approx(cfg.K_p * 5 + cfg.K_i * (integral + 5 * DT), abs=1e-15)

    def test_error_variant_kicks(self):
        cfg = ControlConfig(v_lim=1.0)
        state = ControllerState()
        force_velocity(state, 15.0, 15.0, DT, cfg, derivative="error")
        v = force_velocity(state, 15.0, 20.0, DT, cfg, derivative="error")
        assert v == pytest.approx(cfg.K_p * 5 + cfg.K_i * 5 * DT + cfg.K_d * 5 / DT, abs=1e-15)

    def test_measurement_derivative(self):
        cfg = ControlConfig(K_p=0.0, K_i=0.0)
        state = ControllerState()
        force_velocity(state, 14.0, 15.0, DT, cfg)
        v = force_velocity(state, 14.5, 15.0, DT, cfg)
        assert v == pytest.approx(-cfg.K_d * 0.5 / DT, abs=1e-15)

    def test_positive_pushes_in(self):
        assert force_velocity(ControllerState(), 5.0, 15.0, DT, CFG) > 0

    def test_bad_dt(self):
        with pytest.raises(DomainError):
            force_velocity(ControllerState(), 5.0, 15.0, 0.0, CFG)

    def test_unknown_derivative(self):
        with pytest.raises(ValueError):
            force_velocity(ControllerState(), 5.0, 15.0, DT, CFG, derivative="both")

    @given(forces=st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=200),
           limit=st.floats(0.1, 100))
    def test_anti_windup(self, forces, limit):
        cfg = ControlConfig(integral_limit=limit)
        state = ControllerState()
        for f in forces:
            v = force_velocity(state, f, 15.0, DT, cfg)
            assert abs(state.integral_e) <= limit
            assert abs(v) <= cfg.v_lim


class TestPitchSafety:
    def test_pitch_examples(self):
        assert pitch_rate(0.0, 0.07) == 0.0
        assert pitch_rate(0.1, 0.07) == pytest.approx(-0.007, abs=1e-15)

    @given(m=st.floats(1e-9, 10), k=st.floats(1e-6, 1))
    def test_pitch_sign(self, m, k):
        assert pitch_rate(m, k) < 0 < pitch_rate(-m, k)

    def test_safety_boundary(self):
        assert safety_check(ForceScrew(fz=0.0), 30.0) is Safety.PROCEED
        assert safety_check(ForceScrew(fz=30.0), 30.0) is Safety.STOP
        assert safety_check(ForceScrew(fz=30.0 - 1e-9), 30.0) is Safety.PROCEED

    def test_region_settings(self):
        assert region_settings(Region.LUMBAR, CFG) == (15.0, 0.03)
        assert region_settings(Region.THORACIC, CFG) == (12.0, 0.07)
        cfg = ControlConfig(F_ref_per_region=(11.0, 15.0, 12.0))
        assert region_settings(Region.SACRUM, cfg)[0] == 11.0

    def test_per_region_length(self):
        with pytest.raises(DomainError):
            ControlConfig(F_ref_per_region=(15.0, 15.0))


class TestCompose:
    def test_stop_is_zero(self):
        assert compose_command(0.001, 0.004, 0.001, 0.01, Safety.STOP, 0.002) == ZERO_COMMAND

    def test_pass_through(self):
        cmd = compose_command(0.001, 0.004, -0.001, 0.01, Safety.PROCEED, 0.002)
        assert (cmd.v_x, cmd.v_y, cmd.v_z, cmd.r_x_rate, cmd.r_y_rate, cmd.r_z_rate) == (
            0.001, 0.004, -0.001, 0.01, 0.0, 0.0)

    def test_clip_normal(self):
        assert compose_command(0.0, 0.004, 0.01, 0.0, Safety.PROCEED, 0.002).v_z == 0.002

    @given(vx=st.floats(-1, 1), vz=st.floats(-1, 1), r=st.floats(-1, 1))
    def test_limits(self, vx, vz, r):
        cmd = compose_command(vx, 0.004, vz, r, Safety.PROCEED, 0.002)
        assert abs(cmd.v_x) <= 0.002 and abs(cmd.v_z) <= 0.002
        assert cmd.r_y_rate == cmd.r_z_rate == 0.0

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinescan.errors import DomainError
from spinescan.phantom import (PhantomModel, Region, ground_truth_angle, region_at,
                               spine_lateral_offset, spine_slope, surface_height, surface_slope_y,
                               vertebra_at)

FLAT = dict(sagittal_amplitude=0.0, lateral_rounding=0.0)


class TestLateralOffset:
    def test_straight_spine_is_zero(self):
        ph = PhantomModel(curve_amplitude=0.0)
        assert all(spine_lateral_offset(ph, y) == 0.0 for y in np.linspace(0, ph.scan_span, 17))

    def test_zero_at_origin(self):
        assert spine_lateral_offset(PhantomModel(), 0.0) == 0.0

    def test_quarter_wavelength_hits_amplitude(self):
        # sin(pi/2) = 1
        ph = PhantomModel(curve_amplitude=0.010, curve_length=0.200)
        assert spine_lateral_offset(ph, 0.050) == pytest.approx(0.010, abs=1e-15)

    @pytest.mark.parametrize("y", [-1e-6, 0.4 + 1e-6])
    def test_outside_span_raises(self, y):
        with pytest.raises(DomainError):
            spine_lateral_offset(PhantomModel(), y)

    @given(y=st.floats(0.0, 0.4), a=st.floats(0.0, 0.05))
    def test_bounded_by_amplitude(self, y, a):
        ph = PhantomModel(curve_amplitude=a)
        assert abs(spine_lateral_offset(ph, y)) <= a

    def test_slope_matches_finite_difference(self):
        ph = PhantomModel(second_amplitude=0.003)
        y = np.linspace(0.01, 0.39, 50)
        h = 1e-6
        fd = (spine_lateral_offset(ph, y + h) - spine_lateral_offset(ph, y - h)) / (2 * h)
        np.testing.assert_allclose(spine_slope(ph, y), fd, atol=1e-7)


class TestSurface:
    def test_flat_back_is_zero_everywhere(self):
        ph = PhantomModel(**FLAT)
        xs, ys = np.meshgrid(np.linspace(-0.05, 0.05, 11), np.linspace(0, 0.4, 11))
        assert np.all(surface_height(ph, xs, ys) == 0.0)

    def test_apex_over_midline(self):
        ph = PhantomModel(sagittal_amplitude=0.0)
        for y in np.linspace(0, 0.4, 9):
            assert surface_height(ph, spine_lateral_offset(ph, y), y) == 0.0

    def test_sagittal_peak_at_quarter_span(self):
        ph = PhantomModel(sagittal_amplitude=0.02)
        y = ph.y_end / 4
        assert surface_height(ph, spine_lateral_offset(ph, y), y) == pytest.approx(0.02, abs=1e-15)

    def test_slope_matches_finite_difference(self):
        ph = PhantomModel(sagittal_amplitude=-0.03)
        h = 1e-6
        for x, y in [(0.0, 0.1), (0.004, 0.25), (-0.01, 0.33)]:
            fd = (surface_height(ph, x, y + h) - surface_height(ph, x, y - h)) / (2 * h)
            assert surface_slope_y(ph, x, y) == pytest.approx(fd, abs=1e-7)

    def test_continuous(self):
        ph = PhantomModel()
        ys = np.linspace(0, 0.4, 4001)
        z = surface_height(ph, 0.003, ys)
        assert np.max(np.abs(np.diff(z))) < 1e-4


class TestVertebrae:
    def test_near_continuous_bone_always_present(self):
        ph = PhantomModel(vertebra_fraction=1 - 1e-9)
        assert all(vertebra_at(ph, y) is not None for y in np.linspace(0, 0.4, 401)[:-1])

    @pytest.mark.parametrize("k", range(5))
    def test_inside_gap_by_construction(self, k):
        ph = PhantomModel()
        y = (k + ph.vertebra_fraction + 0.01) * ph.vertebra_pitch
        assert vertebra_at(ph, y) is None

    @pytest.mark.parametrize("y,present", [(0.045, True), (0.075, True), (0.080, False)])
    def test_modulus_rule(self, y, present):
        # 0.045 and 0.075 sit at half a pitch (0.5 < 0.6); 0.080 at 2/3 of one
        ph = PhantomModel(vertebra_pitch=0.030, vertebra_fraction=0.6)
        assert (vertebra_at(ph, y) is not None) is present

    def test_process_position(self):
        ph = PhantomModel()
        y = 0.121
        region, p = vertebra_at(ph, y)
        s = spine_lateral_offset(ph, y)
        expected = (s, y, surface_height(ph, s, y) - ph.sp_depth(region))
        np.testing.assert_allclose(p, expected, atol=1e-15)

    def test_run_lengths_follow_fraction(self):
        ph = PhantomModel()
        step = 1e-4
        ys = np.arange(0.0, ph.scan_span, step)
        present = np.array([vertebra_at(ph, y) is not None for y in ys], dtype=int)
        edges = np.flatnonzero(np.diff(present))
        # full runs between a rising and the following falling edge
        starts = edges[present[edges] == 0] + 1
        ends = edges[present[edges] == 1] + 1
        runs = [e - s for s in starts for e in ends[ends > s][:1]]
        assert runs
        for n in runs:
            assert abs(n * step - ph.vertebra_fraction * ph.vertebra_pitch) <= step + 1e-12


class TestRegions:
    @pytest.mark.parametrize("y,region", [(0.0, Region.SACRUM), (0.0599, Region.SACRUM),
                                          (0.06, Region.LUMBAR), (0.1999, Region.LUMBAR),
                                          (0.2, Region.THORACIC), (0.4, Region.THORACIC)])
    def test_thresholds(self, y, region):
        assert region_at(PhantomModel(), y) is region

    def test_lumbar_deeper_than_thoracic_by_default(self):
        ph = PhantomModel()
        assert ph.sp_depth(Region.LUMBAR) > ph.sp_depth(Region.THORACIC)


class TestGroundTruthAngle:
    def test_straight(self):
        assert ground_truth_angle(PhantomModel(curve_amplitude=0.0)) == 0.0

    def test_default_curve(self):
        # max slope 2*pi*A/L = pi/10, reached with both signs inside the span
        expected = math.degrees(2 * math.atan(2 * math.pi * 0.010 / 0.200))
        assert ground_truth_angle(PhantomModel()) == pytest.approx(expected, abs=1e-6)
        assert expected == pytest.approx(34.9, abs=0.05)

    def test_small_slope_linearity(self):
        a = ground_truth_angle(PhantomModel(curve_amplitude=0.0005))
        b = ground_truth_angle(PhantomModel(curve_amplitude=0.0010))
        assert b / a == pytest.approx(2.0, rel=1e-3)

    def test_monotone_in_amplitude(self):
        angles = [ground_truth_angle(PhantomModel(curve_amplitude=a)) for a in np.linspace(0, 0.03, 13)]
        assert all(np.diff(angles) >= 0)


class TestValidation:
    @pytest.mark.parametrize("kw,name", [
        (dict(vertebra_fraction=1.5), "vertebra_fraction"),
        (dict(vertebra_fraction=0.0), "vertebra_fraction"),
        (dict(region_bounds=(0.2, 0.06)), "region_bounds"),
        (dict(region_bounds=(0.06, 0.5)), "region_bounds"),
        (dict(sp_depth_per_region=(0.03, 0.07, 0.02)), "sp_depth_per_region"),
        (dict(skin_stiffness=0.0), "skin_stiffness"),
    ])
    def test_invariants_enforced(self, kw, name):
        with pytest.raises(DomainError, match=name):
            PhantomModel(**kw)

    @settings(max_examples=25)
    @given(y=st.floats(0.0, 0.4))
    def test_pure(self, y):
        ph = PhantomModel(second_amplitude=0.002)
        assert surface_height(ph, 0.001, y) == surface_height(ph, 0.001, y)
        a, b = vertebra_at(ph, y), vertebra_at(ph, y)
        assert (a is None and b is None) or (a[0] is b[0] and np.array_equal(a[1], b[1]))

import math

import numpy as np
import pytest

from vlptrack import (AccessPoint, ConfigError, DomainError, LedSource, Receiver,
                      RoomConfig, build_led_layout, build_room, room_bounds)
from vlptrack.geometry import angle_between, unit, vec3


def test_vec3_rejects_non_finite():
    with pytest.raises(DomainError):
        vec3(0.0, float("nan"), 1.0)
    with pytest.raises(DomainError):
        vec3(float("inf"), 0.0, 1.0)


def test_unit_normalizes_and_rejects_zero():
    v = unit([3.0, 0.0, 4.0])
    assert np.allclose(v, [0.6, 0.0, 0.8])
    with pytest.raises(DomainError):
        unit([0.0, 0.0, 0.0])


def test_angle_between_clamps():
    a = np.array([1.0, 0.0, 0.0])
    assert angle_between(a, a) == 0.0
    assert angle_between(a, -a) == pytest.approx(math.pi)
    assert angle_between(a, [0.0, 1.0, 0.0]) == pytest.approx(math.pi / 2)


def test_led_source_requires_unit_orientation():
    with pytest.raises(DomainError):
        LedSource((0, 0, 3), (0, 0, -2), 10.0)
    with pytest.raises(ConfigError):
        LedSource((0, 0, 3), (0, 0, -1), 0.5)


def test_receiver_validation():
    with pytest.raises(ConfigError):
        Receiver((0, 0, 1), (0, 0, 1), area_m2=0.0)
    with pytest.raises(ConfigError):
        Receiver((0, 0, 1), (0, 0, 1), fov_rad=2.0)


def test_room_config_validation():
    with pytest.raises(ConfigError):
        RoomConfig(width_m=-1.0)
    with pytest.raises(ConfigError):
        RoomConfig(leds_per_ap=2)
    with pytest.raises(ConfigError):
        RoomConfig(leds_per_ap=21)
    with pytest.raises(ConfigError):
        RoomConfig(ap_tilt_rad=math.pi / 2)


def test_corner_ap_positions_and_orientations(aps, room):
    assert [ap.index for ap in aps] == [0, 1, 2, 3]
    expected_xy = [(0, 0), (room.width_m, 0), (room.width_m, room.depth_m),
                   (0, room.depth_m)]
    for ap, (x, y) in zip(aps, expected_xy):
        assert ap.position[0] == x and ap.position[1] == y
        assert ap.position[2] == room.height_m
    # 45 degree downward tilt along the diagonal: components (1/2, 1/2, -1/sqrt2)
    assert np.allclose(aps[0].orientation, [0.5, 0.5, -math.sqrt(0.5)])
    assert np.allclose(aps[2].orientation, [-0.5, -0.5, -math.sqrt(0.5)])
    for ap in aps:
        assert np.isclose(np.linalg.norm(ap.orientation), 1.0)
        assert ap.orientation[2] < 0.0     # aimed into the room


def test_all_aps_aim_at_room_center(aps, room):
    center = np.array([room.width_m / 2, room.depth_m / 2, 0.0])
    for ap in aps:
        toward = center - ap.position
        toward[2] = 0.0
        horiz = ap.orientation.copy()
        horiz[2] = 0.0
        assert angle_between(unit(toward), unit(horiz)) < 1e-12


def test_led_layout_three_is_bare_ring():
    c = np.array([0.0, 0.0, -1.0])
    alpha = math.radians(25)
    beams = build_led_layout(c, 3, alpha, math.radians(10))
    assert len(beams) == 3
    for b in beams:
        assert angle_between(b, c) == pytest.approx(alpha)


@pytest.mark.parametrize("n", [4, 5, 6, 7])
def test_led_layout_single_ring_with_center(n):
    c = unit([0.3, -0.2, -0.9])
    alpha = math.radians(25)
    beams = build_led_layout(c, n, alpha, math.radians(10))
    assert len(beams) == n
    assert np.allclose(beams[0], c)
    for b in beams[1:]:
        assert angle_between(b, c) == pytest.approx(alpha)
    # evenly spaced: neighbors on the ring are all the same angle apart
    gaps = [angle_between(beams[i], beams[i + 1]) for i in range(1, n - 1)]
    assert np.ptp(gaps) < 1e-9 or n == 4


@pytest.mark.parametrize("n", [8, 12, 20])
def test_led_layout_two_rings(n):
    c = unit([0.0, 0.5, -0.8])
    alpha, beta = math.radians(25), math.radians(10)
    beams = build_led_layout(c, n, alpha, beta)
    assert len(beams) == n
    assert np.allclose(beams[0], c)
    inner, outer = beams[1:7], beams[7:]
    for b in inner:
        assert angle_between(b, c) == pytest.approx(alpha)
    for b in outer:
        assert angle_between(b, c) == pytest.approx(alpha + beta)
    assert len(outer) == n - 7


def test_led_layout_all_unit_norm(rng):
    for n in range(3, 21):
        beams = build_led_layout(np.array([0.0, 0.0, -1.0]), n,
                                 math.radians(25), math.radians(10))
        for b in beams:
            assert abs(np.linalg.norm(b) - 1.0) < 1e-12


def test_led_layout_rejects_bad_count():
    c = np.array([0.0, 0.0, -1.0])
    for n in (2, 21):
        with pytest.raises(ConfigError):
            build_led_layout(c, n, 0.4, 0.2)


def test_build_room_leds_colocated_and_counted(room):
    for n in (3, 7, 8, 20):
        aps = build_room(RoomConfig(leds_per_ap=n))
        for ap in aps:
            assert ap.n_leds == n
            for led in ap.leds:
                assert np.array_equal(led.position, ap.position)
                assert led.lambertian_order == room.lambertian_order


def test_room_mirror_symmetry():
    # mirroring x across the room center maps AP0's cluster onto AP1's
    aps = build_room(RoomConfig())
    flip = np.array([-1.0, 1.0, 1.0])
    beams0 = sorted((ap_b * flip).tolist() for ap_b in aps[0].led_axes)
    beams1 = sorted(b.tolist() for b in aps[1].led_axes)
    assert np.allclose(np.array(beams0), np.array(beams1), atol=1e-12)


def test_room_bounds(aps):
    lo, hi = room_bounds(aps)
    assert np.allclose(lo, [0, 0, 0])
    assert np.allclose(hi, [6, 6, 3])


def test_access_point_rejects_displaced_led():
    led_ok = LedSource((0, 0, 3), (0, 0, -1), 10.0)
    led_far = LedSource((1, 0, 3), (0, 0, -1), 10.0)
    with pytest.raises(ConfigError):
        AccessPoint(0, (0, 0, 3), (0, 0, -1), (led_ok, led_ok, led_far))

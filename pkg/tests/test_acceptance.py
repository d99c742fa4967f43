"""End-to-end acceptance suite.

One test per numbered criterion, so a verbose run reads as a checklist.
The blocking sweep fixture is shared by several criteria and takes a few
minutes; everything else is seconds. All randomness is seeded, so every
assertion here is deterministic.
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from vlptrack import (BlockingConfig, CoefficientScheme, FilterConfig,
                      MobilityConfig, NoiseModel, Receiver, ReceiverHeightPrior,
                      RoomConfig, asymptotic_coefficients, build_room,
                      build_schemes, calibrate_mean_errors,
                      calibrated_coefficients, default_config, generate_route,
                      init_filter, kf_predict, kf_update, localize,
                      refine_objective, simulate_route, snapshot, sweep_leds,
                      trace_route)
from vlptrack.calibration import CLASS_SUBSETS
from vlptrack.cli import main as cli_main
from vlptrack.geometry import UP
from vlptrack.localization import PositionMeasurement
from vlptrack.tracking import FIXED_TRUST

SWEEP_PROBS = (0.0, 0.1, 0.2, 0.25, 0.3, 0.4, 0.5)
SWEEP_SCHEMES = ("none", "conventional", "fixed", "calibrated")
CAL_GRID_M = 0.5
CAL_DRAWS = 10


@pytest.fixture(scope="module")
def table7():
    rng = np.random.default_rng(np.random.SeedSequence((2024, 7)))
    return calibrate_mean_errors(RoomConfig(), [7], NoiseModel(),
                                 CAL_GRID_M, CAL_DRAWS, rng)


@pytest.fixture(scope="module")
def blocking_sweep(table7):
    """Pooled and per-route RMSE over the blocking grid, 200 routes."""
    cfg = default_config(routes=200)
    schemes = build_schemes(SWEEP_SCHEMES, table7, cfg.room.leds_per_ap)
    pooled = {}
    per_route = {}
    for si, p in enumerate(SWEEP_PROBS):
        cfg_p = replace(cfg, blocking=BlockingConfig(p))
        stats = [simulate_route(cfg_p, schemes, (cfg.master_seed, si, r))
                 for r in range(cfg.routes)]
        for name, _ in schemes:
            sse = sum(s[name][0] for s in stats)
            count = sum(s[name][1] for s in stats)
            pooled[(p, name)] = math.sqrt(sse / count)
            per_route[(p, name)] = np.array(
                [math.sqrt(s[name][0] / s[name][1]) for s in stats if s[name][1]])
    return pooled, per_route


def paired_se(a, b):
    d = np.asarray(a) - np.asarray(b)
    s = d.std(ddof=1)
    return float(s / math.sqrt(len(d)))


def conventional_oracle(measured, layouts, cfg, start):
    """Textbook constant-velocity Kalman filter, written out longhand.

    Mirrors the production evaluation order exactly so trajectories can
    be compared bit for bit. A step without a fix measures the predicted
    position, which cannot move the mean.
    """
    mean = np.concatenate([np.asarray(start, dtype=float), np.zeros(3)])
    P = np.diag([cfg.measurement_noise_std ** 2] * 3
                + [cfg.init_speed_std ** 2] * 3)
    B = np.eye(6)
    B[0, 3] = B[1, 4] = B[2, 5] = cfg.dt_s
    I6 = np.eye(6)
    I3 = np.eye(3)
    r_cov = cfg.measurement_noise_std ** 2 / 1.0
    out = np.empty((len(layouts), 3))
    for t in range(len(layouts)):
        mean = B @ mean
        P = B @ P @ B.T + cfg.process_noise_std ** 2 * I6
        z = measured[t] if layouts[t] != 0 else mean[:3]
        S = P[:3, :3] + r_cov * I3
        K = np.linalg.solve(S, P[:3, :]).T
        mean = mean + K @ (np.asarray(z, dtype=float) - mean[:3])
        P = P - K @ P[:3, :]
        P = 0.5 * (P + P.T)
        out[t] = mean[:3]
    return out


def test_criterion_01_reduction_identity():
    # unit trust through the adaptive machinery must equal a plain KF,
    # bit for bit, including steps where every AP is blocked
    cfg = default_config(routes=100)
    schemes = [("conventional", CoefficientScheme.conventional())]
    for r in range(cfg.routes):
        trace = trace_route(cfg, schemes, (4242, 0, r))
        got = trace.estimates["conventional"]
        start = got[0]
        want = conventional_oracle(trace.measured[1:], trace.layouts[1:],
                                   cfg.tracking, start)
        assert np.array_equal(got[0], start)
        assert np.array_equal(got[1:], want)


def test_criterion_02_filter_algebra_oracle():
    # the 6-D filter decouples per axis into a 2x2 recursion that can be
    # written closed form; agreement must be essentially exact
    rng = np.random.default_rng(20240202)
    worst = 0.0
    for _ in range(20):
        cfg = FilterConfig(dt_s=rng.uniform(0.1, 2.0),
                           process_noise_std=rng.uniform(0.001, 0.1),
                           measurement_noise_std=rng.uniform(0.01, 0.5),
                           init_speed_std=rng.uniform(0.01, 0.5))
        dt, q, r0 = cfg.dt_s, cfg.process_noise_std ** 2, cfg.measurement_noise_std ** 2
        start = rng.uniform(0.0, 6.0, 3)
        state = init_filter(start, cfg)

        x1, x2 = start[0], 0.0
        p11, p12, p22 = r0, 0.0, cfg.init_speed_std ** 2
        for _ in range(30):
            trust = rng.uniform(0.05, 1.0)
            z3 = rng.uniform(0.0, 6.0, 3)

            state = kf_predict(state, cfg)
            state = kf_update(state, PositionMeasurement(
                z3, 5, True), cfg, trust)

            # scalar predict
            x1 = x1 + dt * x2
            p11 = p11 + 2 * dt * p12 + dt * dt * p22 + q
            p12 = p12 + dt * p22
            p22 = p22 + q
            # scalar update
            s = p11 + r0 / trust
            k1 = p11 / s
            k2 = p12 / s
            innov = z3[0] - x1
            x1 = x1 + k1 * innov
            x2 = x2 + k2 * innov
            p11n = (1 - k1) * p11
            p12n = (1 - k1) * p12
            p22n = p22 - k2 * p12
            p11, p12, p22 = p11n, p12n, p22n

            for got, want in ((state.mean[0], x1), (state.mean[3], x2),
                              (state.covariance[0, 0], p11),
                              (state.covariance[0, 3], p12),
                              (state.covariance[3, 3], p22)):
                rel = abs(got - want) / max(abs(want), 1e-30)
                worst = max(worst, rel)
    assert worst < 1e-12


def test_criterion_03_noiseless_inversion():
    room = RoomConfig()
    aps = build_room(room)
    noise = NoiseModel("none")
    prior = ReceiverHeightPrior(0.9)
    rng = np.random.default_rng(777)
    worst = 0.0
    for _ in range(100):
        pos = np.array([rng.uniform(0.5, 5.5), rng.uniform(0.5, 5.5),
                        rng.uniform(0.5, 1.5)])
        rx = Receiver(pos, UP)
        snap = snapshot(aps, rx, frozenset(), noise, rng,
                        apply_receiver_fov=False)
        fix = localize(snap, aps, prior, UP)
        assert fix.valid
        err = float(np.linalg.norm(fix.position - pos))
        worst = max(worst, err)
        assert err < 1e-3
    assert worst < 1e-3


def test_criterion_04_gradient_check():
    room = RoomConfig()
    aps = build_room(room)
    rng = np.random.default_rng(404)
    rx = Receiver([2.2, 3.4, 0.9], UP)
    snap = snapshot(aps, rx, frozenset(), NoiseModel(), rng,
                    apply_receiver_fov=False)
    h = 1e-6
    worst = 0.0
    for _ in range(50):
        x = np.array([rng.uniform(0.5, 5.5), rng.uniform(0.5, 5.5),
                      rng.uniform(0.3, 1.5)])
        _, grad = refine_objective(x, snap, aps, UP)
        fd = np.empty(3)
        for axis in range(3):
            delta = np.zeros(3)
            delta[axis] = h
            hi, _ = refine_objective(x + delta, snap, aps, UP)
            lo, _ = refine_objective(x - delta, snap, aps, UP)
            fd[axis] = (hi - lo) / (2 * h)
        rel = np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1e-30)
        worst = max(worst, rel)
    assert worst < 1e-5


def test_criterion_05_calibration_orderings(table7):
    om = {j: table7.mean_error_m[(j, 7)] for j in range(1, 6)}
    assert om[5] <= om[4] <= om[3] < om[2]

    # the sampling plan puts well over a thousand draws behind every cell
    room = RoomConfig()
    xs = np.arange(0.5, room.width_m - 0.5 + 1e-9, CAL_GRID_M)
    ys = np.arange(0.5, room.depth_m - 0.5 + 1e-9, CAL_GRID_M)
    for model, subsets in CLASS_SUBSETS.items():
        planned = len(xs) * len(ys) * CAL_DRAWS * len(subsets)
        assert planned >= 1000


def test_criterion_06_blocking_sweep_trends(blocking_sweep):
    pooled, per_route = blocking_sweep

    # (a) unfiltered error grows with blocking probability
    grid = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
    unfiltered = [pooled[(p, "none")] for p in grid]
    assert all(b >= a for a, b in zip(unfiltered, unfiltered[1:]))

    # (b) with nothing blocked the adaptive filter matches the plain one
    se = paired_se(per_route[(0.0, "conventional")],
                   per_route[(0.0, "calibrated")])
    gap = abs(pooled[(0.0, "conventional")] - pooled[(0.0, "calibrated")])
    assert gap <= 2 * se + 1e-12

    # (c) once blocking bites, adaptive < conventional < unfiltered
    for p in SWEEP_PROBS:
        if p >= 0.2:
            assert (pooled[(p, "calibrated")]
                    <= pooled[(p, "conventional")]
                    <= pooled[(p, "none")])

    # (d) calibration buys at least as much as the hand-set ladder
    for p in SWEEP_PROBS:
        se = paired_se(per_route[(p, "fixed")], per_route[(p, "calibrated")])
        assert pooled[(p, "calibrated")] <= pooled[(p, "fixed")] + 2 * se + 1e-12


def test_criterion_07_headline_error_reduction(blocking_sweep):
    pooled, _ = blocking_sweep
    ratio = pooled[(0.25, "calibrated")] / pooled[(0.25, "none")]
    assert 0.2 <= ratio <= 0.7


def test_criterion_08_saturation_identity():
    rng = np.random.default_rng(np.random.SeedSequence((2024, 8)))
    table = calibrate_mean_errors(RoomConfig(), [20], NoiseModel(),
                                  grid_spacing_m=1.0, draws=3, rng=rng)
    cal = calibrated_coefficients(table, 20)
    asym = asymptotic_coefficients(table)
    assert cal.trust == asym.trust

    cfg = default_config(routes=30, schemes=("calibrated", "asymptotic"))
    rows = sweep_leds(cfg, counts=[20], table=table)
    by_scheme = {r.scheme: r for r in rows}
    assert by_scheme["calibrated"].rmse_m == by_scheme["asymptotic"].rmse_m
    assert by_scheme["calibrated"].sweep_value == by_scheme["asymptotic"].sweep_value


def test_criterion_09_mobility_contract():
    room = RoomConfig()
    cfg = MobilityConfig()
    rng = np.random.default_rng(909)
    for _ in range(10_000):
        route = generate_route(room, cfg, rng)

        assert route.length_m <= cfg.max_length_m + 1e-9

        pts = np.vstack([route.waypoints[0], route.step_points])
        gaps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        assert np.all(np.abs(gaps - cfg.step_m) <= 1e-4)

        assert np.all(pts[:, 2] >= 0.7 - 1e-12)
        assert np.all(pts[:, 2] <= 1.1 + 1e-12)

        legs = np.diff(route.waypoints, axis=0)[:, :2]
        legs = legs / np.linalg.norm(legs, axis=1, keepdims=True)
        cosines = np.einsum("ij,ij->i", legs[:-1], legs[1:])
        turns = np.arccos(np.clip(cosines, -1.0, 1.0))
        assert np.all(turns <= 0.5 * math.pi + 1e-9)


def test_criterion_10_parallel_determinism(tmp_path):
    argv = ["sweep-blocking", "--routes", "6", "--block-prob", "0.1,0.3",
            "--schemes", "none,conventional,fixed"]
    serial = tmp_path / "serial.csv"
    parallel = tmp_path / "parallel.csv"
    assert cli_main(argv + ["--jobs", "1", "--out", str(serial)]) == 0
    assert cli_main(argv + ["--jobs", "2", "--out", str(parallel)]) == 0
    a = serial.read_bytes()
    b = parallel.read_bytes()
    assert len(a.splitlines()) == 7
    assert a == b


def test_criterion_11_covariance_health():
    rng = np.random.default_rng(1111)
    trusts = list(FIXED_TRUST.values())
    worst_asym = 0.0
    worst_eig = 0.0
    cycles = 0
    while cycles < 10_000:
        cfg = FilterConfig(dt_s=rng.uniform(0.1, 2.0),
                           process_noise_std=rng.uniform(0.001, 0.1),
                           measurement_noise_std=rng.uniform(0.01, 0.5),
                           init_speed_std=rng.uniform(0.01, 0.5))
        state = init_filter(rng.uniform(0.0, 6.0, 3), cfg)
        for _ in range(100):
            state = kf_predict(state, cfg)
            if rng.random() < 0.2:
                m = PositionMeasurement.invalid()
            else:
                m = PositionMeasurement(rng.uniform(0.0, 6.0, 3), 5, True)
            trust = trusts[rng.integers(6)] if rng.random() < 0.5 \
                else rng.uniform(0.02, 1.0)
            state = kf_update(state, m, cfg, trust)
            P = state.covariance
            worst_asym = max(worst_asym, float(np.max(np.abs(P - P.T))))
            worst_eig = min(worst_eig, float(np.linalg.eigvalsh(P)[0]))
            cycles += 1
    assert worst_asym < 1e-9
    assert worst_eig >= -1e-9

import math

import numpy as np
import pytest

from wipersim.errors import InvalidParameterError
from wipersim.mechanism import (
    GearTrain,
    LeadScrew,
    MagneticCoupling,
    MechanismState,
    MotorSpec,
    ScotchYoke,
    carriage_speed,
    gear_ratio,
    pass_energy,
    pass_time,
    recouple,
    scotch_yoke_position,
    scotch_yoke_velocity,
    steady_power,
    step_carriage,
)

DEFAULTS = dict(screw=LeadScrew(), train=GearTrain(), motor=MotorSpec())


def test_gear_ratio_prototype_counts():
    assert gear_ratio(GearTrain(20, 38)) == 20 / 38
    assert gear_ratio(GearTrain(20, 38)) == pytest.approx(0.5263157894736842)


def test_gear_ratio_identity_and_exact_division():
    assert gear_ratio(GearTrain(17, 17)) == 1.0
    assert gear_ratio(GearTrain(10, 40)) == 0.25


def test_gear_ratio_rejects_zero_teeth():
    with pytest.raises(InvalidParameterError):
        GearTrain(0, 38)
    with pytest.raises(InvalidParameterError):
        GearTrain(20, 0)


def test_scotch_yoke_position_endpoints():
    yoke = ScotchYoke(10.0)
    assert scotch_yoke_position(0.0, yoke) == 0.0
    assert scotch_yoke_position(math.pi / 2, yoke) == pytest.approx(10.0, abs=1e-12)


def test_scotch_yoke_stroke_is_crank_diameter():
    yoke = ScotchYoke(7.5)
    angles = np.linspace(0.0, 2 * math.pi, 721)
    xs = [scotch_yoke_position(a, yoke) for a in angles]
    assert max(xs) - min(xs) == pytest.approx(2 * yoke.crank_radius_mm, rel=1e-9)


def test_scotch_yoke_velocity_vanishes_at_extremes():
    # Finite differences of position must agree with r*omega*cos(theta);
    # at the extremes that velocity vanishes.
    yoke = ScotchYoke(10.0)
    omega = 3.0
    h = 1e-3
    peak = yoke.crank_radius_mm * omega

    def fd_velocity(theta):
        forward = scotch_yoke_position(theta + h, yoke)
        backward = scotch_yoke_position(theta - h, yoke)
        return (forward - backward) / (2 * h) * omega

    for extreme in (math.pi / 2, 3 * math.pi / 2):
        assert abs(fd_velocity(extreme)) / peak < 1e-6
    mid = 0.7
    assert fd_velocity(mid) == pytest.approx(
        scotch_yoke_velocity(mid, yoke, omega), rel=1e-6)


def test_pass_time_default_calibration_is_eight_seconds():
    # travel 40 mm / (0.5 mm/rev * 19 rev/s * 20/38) = 40 / 5 = 8 s
    assert carriage_speed(**DEFAULTS) == pytest.approx(5.0, rel=1e-15)
    assert pass_time(**DEFAULTS) == pytest.approx(8.0, rel=1e-15)


def test_pass_time_inverse_in_motor_speed():
    rng = np.random.default_rng(42)
    for _ in range(50):
        screw = LeadScrew(rng.uniform(0.2, 2.0), rng.uniform(5.0, 75.0))
        train = GearTrain(int(rng.integers(8, 40)), int(rng.integers(8, 80)))
        speed = rng.uniform(1.0, 40.0)
        slow = pass_time(screw, train, MotorSpec(speed_rev_per_s=speed))
        fast = pass_time(screw, train, MotorSpec(speed_rev_per_s=2 * speed))
        assert fast == pytest.approx(slow / 2, rel=1e-12)


def test_pass_time_degenerate_travel():
    assert pass_time(LeadScrew(travel_mm=0.0), GearTrain(), MotorSpec()) == 0.0


def test_pass_time_zero_motor_speed_rejected():
    with pytest.raises(InvalidParameterError):
        pass_time(LeadScrew(), GearTrain(), MotorSpec(speed_rev_per_s=0.0))


def test_yoke_pass_time_is_half_crank_revolution():
    from wipersim.mechanism import yoke_pass_time
    # gear ratio 20/38 at 19 rev/s -> crank at 10 rev/s -> 0.05 s sweep
    assert yoke_pass_time(GearTrain(), MotorSpec()) == pytest.approx(0.05, rel=1e-12)
    with pytest.raises(InvalidParameterError):
        yoke_pass_time(GearTrain(), MotorSpec(speed_rev_per_s=0.0))


def test_steady_power_rated_point():
    power = steady_power(MotorSpec(6.00, 0.14, 19.0))
    assert power == 6.00 * 0.14
    assert power == pytest.approx(0.84, abs=1e-15)


def test_steady_power_edge_cases():
    assert steady_power(MotorSpec(6.0, 0.0, 19.0)) == 0.0
    assert steady_power(MotorSpec(12.0, 0.14, 19.0)) == pytest.approx(1.68, abs=1e-15)


def test_pass_energy_rated_point():
    assert pass_energy(0.84, 8.0) == 6.72
    assert pass_energy(1.0, 0.0) == 0.0
    assert pass_energy(1.0, 1.0) == 1.0


def test_step_carriage_one_mm_advance():
    # dt chosen so the ideal advance at 5 mm/s is exactly 1 mm
    state = MechanismState()
    out = step_carriage(state, 0.2, path_opacity=0.0,
                        coupling=MagneticCoupling(), **DEFAULTS)
    assert out.position_mm == pytest.approx(1.0, rel=1e-12)
    assert out.coupled
    assert out.elapsed_s == pytest.approx(0.2)


def test_step_carriage_decouples_under_heavy_drag():
    state = MechanismState(position_mm=5.0)
    coupling = MagneticCoupling(max_lateral_force_N=1.0,
                                drag_coeff_N_per_opacity=10.0)
    out = step_carriage(state, 0.01, path_opacity=0.5,
                        coupling=coupling, **DEFAULTS)
    assert not out.coupled
    assert out.position_mm == 5.0
    # once decoupled the position stays frozen even with no drag
    out2 = step_carriage(out, 0.01, path_opacity=0.0,
                         coupling=coupling, **DEFAULTS)
    assert not out2.coupled
    assert out2.position_mm == 5.0
    assert recouple(out2).coupled


def test_step_carriage_clamps_at_travel_end():
    state = MechanismState(position_mm=40.0, direction=+1)
    out = step_carriage(state, 0.5, path_opacity=0.0,
                        coupling=MagneticCoupling(), **DEFAULTS)
    assert out.position_mm == 40.0


def test_round_trip_returns_to_start():
    coupling = MagneticCoupling()
    dt = 0.0107  # deliberately not a divisor of the pass time
    state = MechanismState()
    while state.position_mm < 40.0:
        state = step_carriage(state, dt, path_opacity=0.0,
                              coupling=coupling, **DEFAULTS)
    state = MechanismState(position_mm=state.position_mm, direction=-1,
                           elapsed_s=state.elapsed_s)
    while state.position_mm > 0.0:
        state = step_carriage(state, dt, path_opacity=0.0,
                              coupling=coupling, **DEFAULTS)
    step_mm = carriage_speed(**DEFAULTS) * dt
    assert abs(state.position_mm - 0.0) < step_mm


def test_stepping_matches_analytic_pass_time():
    dt = 0.005
    coupling = MagneticCoupling()
    state = MechanismState()
    while state.position_mm < 40.0:
        state = step_carriage(state, dt, path_opacity=0.0,
                              coupling=coupling, **DEFAULTS)
    assert abs(state.elapsed_s - pass_time(**DEFAULTS)) <= 2 * dt


def test_energy_of_n_passes_composes_exactly_for_default_config():
    power = steady_power(MotorSpec())
    one = pass_energy(power, pass_time(**DEFAULTS))
    for n in (1, 2, 5, 16):
        assert pass_energy(power, n * pass_time(**DEFAULTS)) == n * one


def test_displacement_monotone_in_path_opacity():
    rng = np.random.default_rng(7)
    coupling = MagneticCoupling(max_lateral_force_N=1.0,
                                drag_coeff_N_per_opacity=2.0,
                                viscous_drag_N_s_per_mm=0.01)
    for _ in range(200):
        lo, hi = sorted(rng.uniform(0.0, 1.0, size=2))
        start = MechanismState(position_mm=rng.uniform(0.0, 30.0))
        d_lo = step_carriage(start, 0.05, path_opacity=lo,
                             coupling=coupling, **DEFAULTS).position_mm
        d_hi = step_carriage(start, 0.05, path_opacity=hi,
                             coupling=coupling, **DEFAULTS).position_mm
        assert d_hi <= d_lo

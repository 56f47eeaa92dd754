import numpy as np
import pytest

from projects.ida_verify.src.analysis.idapbc import (
    classify_residual,
    desired_energy,
    dissipation_output,
    energy_report,
    ida_pbc_control,
    matching_residual_basic,
    plant_vector_field,
    power_balance,
    target_vector_field,
    total_energy,
)
from projects.ida_verify.src.core.errors import InfeasibleMatchingError
from projects.ida_verify.src.core.types import ControllerGains
from projects.ida_verify.src.models.iwp import build_iwp
from projects.ida_verify.src.schemas.config import IwpParams


def sample_states(model, rng, count):
    for _ in range(count):
        yield model.domain_box.sample_q(rng), model.domain_box.sample_p(rng)


def test_energies_at_equilibrium(iwp):
    model, target, _ = iwp
    q_star = target.q_star
    assert total_energy(model, q_star, np.zeros(2)) == pytest.approx(2.0)
    assert desired_energy(target, q_star, np.zeros(2)) == pytest.approx(-1.0)


def test_power_balance_on_sampled_states(iwp, rng):
    model, target, gains = iwp
    for _ in range(50):
        # keep Hd moderate so finite-difference roundoff stays below the tolerance
        q = rng.uniform(-0.5, 0.5, 2)
        p = rng.uniform(-1.0, 1.0, 2)
        hd_dot, dissipation = power_balance(model, target, gains, q, p)
        assert dissipation <= 0
        assert abs(hd_dot - dissipation) <= 1e-6 * max(1.0, abs(dissipation))


def test_energy_report_matches_power_balance(iwp):
    model, target, gains = iwp
    q, p = np.array([0.3, -0.4]), np.array([0.5, 0.2])
    report = energy_report(model, target, gains, q, p)
    assert report.Hd == pytest.approx(desired_energy(target, q, p))
    assert report.Hd_dot_analytic == pytest.approx(power_balance(model, target, gains, q, p)[1])
    np.testing.assert_allclose(report.y_d, dissipation_output(model, target, q, p))


def test_dissipation_scales_with_kp(iwp_params, rng):
    model, target, gains = build_iwp(iwp_params)
    stiff = ControllerGains(10.0 * gains.Kp, gains.Kv, gains.Ki)
    for q, p in sample_states(model, rng, 10):
        _, base = power_balance(model, target, gains, q, p)
        _, scaled = power_balance(model, target, stiff, q, p)
        assert scaled == pytest.approx(10.0 * base, rel=1e-12, abs=1e-15)


def test_default_iwp_satisfies_basic_matching(iwp, rng):
    model, target, _ = iwp
    for q, p in sample_states(model, rng, 100):
        assert np.linalg.norm(matching_residual_basic(model, target, q, p)) < 1e-12


def test_control_closes_the_loop_on_the_target_field(iwp, rng):
    model, target, gains = iwp
    for q, p in sample_states(model, rng, 20):
        u = ida_pbc_control(model, target, gains, q, p)
        closed = plant_vector_field(model, q, p, u)
        desired = target_vector_field(model, target, gains, q, p)
        for a, b in zip(closed, desired):
            np.testing.assert_allclose(a, b, atol=1e-10)


def test_mismatched_slope_is_infeasible():
    model, target, gains = build_iwp(IwpParams(epsilon=1.0))
    q, p = np.array([0.5, 0.0]), np.zeros(2)
    np.testing.assert_allclose(matching_residual_basic(model, target, q, p), [-1.0])
    with pytest.raises(InfeasibleMatchingError) as info:
        ida_pbc_control(model, target, gains, q, p)
    np.testing.assert_allclose(info.value.residual, [-1.0])


def test_fully_actuated_plant_always_matches(point_mass, rng):
    model, target, gains = point_mass
    for q, p in sample_states(model, rng, 10):
        assert matching_residual_basic(model, target, q, p).shape == (0,)
        u = ida_pbc_control(model, target, gains, q, p)
        closed = plant_vector_field(model, q, p, u)
        desired = target_vector_field(model, target, gains, q, p)
        np.testing.assert_allclose(closed[1], desired[1], atol=1e-12)


@pytest.mark.parametrize(
    "norm, band",
    [(0.0, "match"), (9.9e-7, "match"), (1e-6, "warning"), (5e-4, "warning"), (1e-3, "fail")],
)
def test_residual_bands(norm, band):
    assert classify_residual(norm) == band

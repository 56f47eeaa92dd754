from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from projects.ida_verify.src.analysis.diffops import left_annihilator
from projects.ida_verify.src.analysis.rebuttal import (
    AugmentedEnergy,
    augmented_energy_rate,
    claimed_first_row,
    disturbance_alignment,
    dissipation_bound_terms,
    extended_kernel_witness,
    find_bound_counterexample,
    iiss_margin,
    integral_matching_conditions,
    kappa,
    kernel_witness,
    predicted_chain_deviation,
    residual_p41,
    residual_p51,
    ryalat_control_p41,
    witness_report,
    xq_dot_chain,
    young_bound,
)
from projects.ida_verify.src.core.errors import ContractError, NoKernelError
from projects.ida_verify.src.core.types import (
    ExtendedState,
    MechanicalModel,
    TargetDesign,
    sample_extended_state,
)
from projects.ida_verify.src.models.iwp import build_iwp, iwp_energy
from projects.ida_verify.src.schemas.config import IwpParams

component = st.floats(min_value=-5, max_value=5, allow_nan=False)


def random_design(rng, n, m):
    G = rng.standard_normal((n, m))
    A = rng.standard_normal((n, n))
    Md = A @ A.T + n * np.eye(n)
    model = MechanicalModel(
        n=n,
        m=m,
        mass=lambda q: np.eye(n),
        potential=lambda q: 0.0,
        input_map=lambda q: G,
    )
    target = TargetDesign(
        desired_mass=lambda q: Md,
        desired_potential=lambda q: float(q @ q),
        j2=lambda q, p: np.zeros((n, n)),
        q_star=np.zeros(n),
    )
    return model, target


def test_integral_bracket_vanishes_without_controller_state(iwp, rng):
    model, target, gains = iwp
    for _ in range(1000):
        s = sample_extended_state(model.domain_box, rng)
        assert residual_p41(model, target, gains, s).norm < 1e-10


def test_integral_bracket_reports_each_term(iwp):
    model, target, gains = iwp
    s = ExtendedState([0.2, 0.1], [0.3, -0.4], [0.5, 0.5])
    report = residual_p41(model, target, gains, s)
    assert set(report.term_norms()) == {
        "interconnection",
        "integral_coupling",
        "kinetic_p",
        "kinetic_x_p",
    }
    summed = sum(report.components_by_term.values())
    np.testing.assert_allclose(summed, report.residual, atol=1e-14)


def test_integral_control_and_residual_split_the_bracket(iwp, rng):
    model, target, gains = iwp
    for _ in range(100):
        s = sample_extended_state(model.domain_box, rng, (0.1, 1.0))
        report = residual_p41(model, target, gains, s)
        v = ryalat_control_p41(model, target, gains, s)
        G = model.G(s.q)
        rebuilt = G @ v + left_annihilator(G).T @ report.residual
        np.testing.assert_allclose(rebuilt, report.bracket, atol=1e-10)


def test_integral_control_is_the_bracket_when_fully_actuated(point_mass):
    model, target, gains = point_mass
    s = ExtendedState([0.3, -0.1], [0.2, 0.4], [0.1, 0.2])
    report = residual_p41(model, target, gains, s)
    np.testing.assert_allclose(ryalat_control_p41(model, target, gains, s), report.bracket)
    assert report.residual.shape == (0,)


def test_second_bracket_keeps_the_momentum_term(iwp_params, iwp):
    model, target, gains = iwp
    energy = iwp_energy(iwp_params, target)
    s = ExtendedState([0.0, 0.0], [1.0, 0.0])
    report = residual_p51(model, target, gains, energy, s)
    assert report.norm == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(report.components_by_term["momentum"], [-1.0], atol=1e-12)


def test_conditions_hold_for_default_iwp(iwp):
    model, target, _ = iwp
    conditions = integral_matching_conditions(model, target, samples=50)
    assert conditions.holds
    assert conditions.max_md_gradient == 0.0


def test_nonzero_coupling_breaks_the_conditions_linearly(rng):
    model, target, gains = build_iwp(IwpParams(j2=0.5))
    conditions = integral_matching_conditions(model, target, samples=20)
    assert conditions.md_constant
    assert not conditions.coupling_annihilated
    # G_perp J2 Md^{-1} G = j2 for the default Md
    assert conditions.max_annihilated_coupling == pytest.approx(0.5)

    states = [sample_extended_state(model.domain_box, rng, (0.1, 1.0)) for _ in range(20)]
    worst = []
    for j2 in (1e-3, 1e-2, 1e-1):
        scaled = replace(target, j2=lambda q, p, j2=j2: j2 * np.array([[0.0, 1.0], [-1.0, 0.0]]))
        worst.append(max(residual_p41(model, scaled, gains, s).norm for s in states))
    assert worst[1] / worst[0] == pytest.approx(10.0, rel=0.2)
    assert worst[2] / worst[1] == pytest.approx(10.0, rel=0.2)


def test_xq_chain_identities(iwp_params, iwp, rng):
    model, target, gains = iwp
    energy = iwp_energy(iwp_params, target)
    for _ in range(100):
        s = sample_extended_state(model.domain_box, rng, (0.1, 1.0))
        lines = xq_dot_chain(model, target, gains, energy, s)
        half_momentum = 0.5 * np.linalg.solve(model.M(s.q), s.p)
        np.testing.assert_allclose(lines[0], lines[1], atol=1e-9)
        np.testing.assert_allclose(lines[2] - lines[1], half_momentum, atol=1e-9)
        np.testing.assert_allclose(lines[2], lines[3], atol=1e-9)
        np.testing.assert_allclose(lines[3], lines[4], atol=1e-9)
        deviation = lines[4] - claimed_first_row(model, target, gains, energy, s)
        predicted = predicted_chain_deviation(model, target, gains, energy, s)
        np.testing.assert_allclose(deviation, predicted, atol=1e-9)


def test_energy_rate_matches_directional_derivative(iwp_params, iwp, rng):
    model, target, gains = iwp
    energy = iwp_energy(iwp_params, target)
    K = kappa(model, gains, np.zeros(2))
    s = ExtendedState([0.3, -0.2], [0.4, 0.1], [0.2, -0.3])
    q_dot, p_dot, x_v_dot = (rng.standard_normal(2) for _ in range(3))

    def along(h):
        q = s.q + h * q_dot
        p = s.p + h * p_dot
        x_v = s.x_v + h * x_v_dot
        return energy.value(q - x_v, p + K @ x_v, x_v)

    h = 1e-6
    numeric = (along(h) - along(-h)) / (2 * h)
    rate = augmented_energy_rate(
        energy, lambda q: kappa(model, gains, q), s, q_dot, p_dot, x_v_dot
    )
    assert rate == pytest.approx(numeric, abs=1e-6)


def test_weight_must_be_positive_definite(iwp):
    _, target, _ = iwp
    with pytest.raises(ContractError):
        AugmentedEnergy.from_target(target, weight=-np.eye(2))
    with pytest.raises(ContractError):
        AugmentedEnergy.from_target(target, md_argument="elsewhere")


def test_kernel_witness_of_iwp(iwp):
    model, target, _ = iwp
    w = kernel_witness(model, target)
    assert np.linalg.norm(w) == pytest.approx(1.0)
    report = witness_report(model, target)
    assert report.available
    assert report.output_norm < 1e-10


def test_kernel_witness_of_random_designs(rng):
    for _ in range(50):
        n = int(rng.integers(2, 6))
        m = int(rng.integers(1, n))
        model, target = random_design(rng, n, m)
        w = kernel_witness(model, target)
        output = model.G(target.q_star).T @ np.linalg.solve(target.Md(target.q_star), w)
        assert np.linalg.norm(output) < 1e-10


def test_fully_actuated_plant_has_no_witness(point_mass):
    model, target, gains = point_mass
    with pytest.raises(NoKernelError):
        kernel_witness(model, target)
    assert not witness_report(model, target).available
    assert not find_bound_counterexample(model, target, gains).found


def test_extended_witness_has_zero_output(iwp):
    model, target, gains = iwp
    s = extended_kernel_witness(model, target, gains)
    x_p = s.x_p(kappa(model, gains, s.q))
    assert np.linalg.norm(x_p) == pytest.approx(1.0)
    y = model.G(s.q).T @ np.linalg.solve(target.Md(s.q), x_p)
    assert np.linalg.norm(y) < 1e-10


def test_claimed_bound_has_a_counterexample(iwp):
    model, target, gains = iwp
    report = find_bound_counterexample(model, target, gains)
    assert report.found
    assert report.lhs_upper > report.claimed_rhs
    assert 0 < report.scale < 1


@settings(max_examples=100, deadline=None)
@given(st.lists(component, min_size=3, max_size=3), st.lists(component, min_size=3, max_size=3))
def test_young_bound(a, b):
    for weight in (0.1, 1.0, 7.0):
        product, bound = young_bound(a, b, weight)
        assert product <= bound + 1e-9


def test_young_bound_needs_positive_weight():
    with pytest.raises(ContractError):
        young_bound([1.0], [1.0], 0.0)


def test_disturbance_alignment(iwp):
    model, _, _ = iwp
    matched = disturbance_alignment(model, np.zeros(2), [0.0, 2.0])
    assert matched.is_matched
    np.testing.assert_allclose(matched.d_hat, [2.0])
    unmatched = disturbance_alignment(model, np.zeros(2), [1.0, 0.0])
    assert not unmatched.is_matched
    np.testing.assert_allclose(unmatched.unmatched, [1.0])


@settings(max_examples=100, deadline=None)
@given(st.lists(component, min_size=2, max_size=2), component)
def test_corrected_bound_holds_for_matched_disturbances(x_p, d_hat):
    model, target, gains = build_iwp()
    bound = dissipation_bound_terms(model, target, gains, x_p, [0.0, d_hat])
    assert bound.corrected_applicable
    assert bound.lhs_upper <= bound.corrected_rhs + 1e-9


def test_corrected_bound_is_withheld_for_unmatched_disturbances(iwp):
    model, target, gains = iwp
    bound = dissipation_bound_terms(model, target, gains, [1.0, 0.0], [1.0, 0.0])
    assert not bound.corrected_applicable
    assert bound.corrected_rhs is None


def test_iiss_margin_is_a_square_when_rate_is_exact(iwp):
    model, target, gains = iwp
    s = ExtendedState([0.1, 0.2], [0.5, -0.7], [0.0, 0.3])
    d2hat = np.array([0.4])
    x_p = s.x_p(kappa(model, gains, s.q))
    y = model.G(s.q).T @ np.linalg.solve(target.Md(s.q), x_p)
    exact_rate = float(-y @ y + y @ d2hat)
    margin = iiss_margin(model, target, gains, s, d2hat, exact_rate)
    assert margin == pytest.approx(0.5 * float((y - d2hat) @ (y - d2hat)))


def test_iiss_margin_uses_the_injected_damping(iwp):
    model, target, gains = iwp
    s = ExtendedState([0.1, 0.2], [0.5, -0.7])
    d2hat = np.array([0.4])
    y = model.G(s.q).T @ np.linalg.solve(target.Md(s.q), s.p)
    exact_rate = float(-2.0 * y @ y + y @ d2hat)
    margin = iiss_margin(model, target, gains, s, d2hat, exact_rate, damping=2.0 * np.eye(1))
    residual = y - 0.5 * d2hat
    assert margin == pytest.approx(float(residual @ residual))
    with pytest.raises(ContractError):
        iiss_margin(model, target, gains, s, d2hat, exact_rate, damping=np.zeros((1, 1)))


def test_bound_monitors_need_positive_damping():
    model, target, gains = build_iwp(IwpParams(Kv_scalar=0.0))
    with pytest.raises(ContractError):
        dissipation_bound_terms(model, target, gains, [1.0, 0.0], [0.0, 1.0])

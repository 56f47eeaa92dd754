import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from projects.ida_verify.src.core.errors import (
    ContractError,
    EvaluationError,
    InfeasibleMatchingError,
    RankError,
)
from projects.ida_verify.src.core.types import (
    ControllerGains,
    DisturbanceProfile,
    DomainBox,
    ExtendedState,
    MechanicalModel,
    TargetDesign,
    extended_coords,
    sample_extended_state,
)
from projects.ida_verify.src.core.validation import (
    validate_gains,
    validate_model,
    validate_target,
)

finite = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)


def test_default_iwp_passes_validation(iwp):
    model, target, gains = iwp
    assert validate_model(model).passed
    assert validate_target(target).passed
    assert validate_gains(gains).passed


def test_indefinite_mass_is_reported_with_its_point():
    model = MechanicalModel(
        n=2,
        m=1,
        mass=lambda q: np.array([[1.0, 0.0], [0.0, np.cos(q[0])]]),
        potential=lambda q: 0.0,
        input_map=lambda q: np.array([[0.0], [1.0]]),
    )
    report = validate_model(model, samples=100)
    check = report.check("mass_positive_definite")
    assert not check.passed
    assert check.worst_value <= 0
    assert np.cos(check.worst_point[0]) == pytest.approx(check.worst_value)
    assert report.failed_checks() == ["mass_positive_definite"]


def test_rank_deficient_input_map_fails_validation():
    model = MechanicalModel(
        n=2,
        m=1,
        mass=lambda q: np.eye(2),
        potential=lambda q: 0.0,
        input_map=lambda q: np.zeros((2, 1)),
    )
    assert validate_model(model, samples=10).failed_checks() == ["input_map_full_rank"]


def test_target_with_saddle_at_equilibrium_fails():
    target = TargetDesign(
        desired_mass=lambda q: np.eye(2),
        desired_potential=lambda q: float(q[0] ** 2 - q[1] ** 2),
        j2=lambda q, p: np.zeros((2, 2)),
        q_star=np.zeros(2),
    )
    report = validate_target(target, samples=20)
    assert report.failed_checks() == ["equilibrium_hessian_psd"]


def test_non_skew_j2_fails():
    target = TargetDesign(
        desired_mass=lambda q: np.eye(2),
        desired_potential=lambda q: float(q @ q),
        j2=lambda q, p: np.eye(2),
        q_star=np.zeros(2),
    )
    assert "j2_skew" in validate_target(target, samples=5).failed_checks()


def test_semidefinite_gains_need_explicit_permission():
    with pytest.raises(ContractError, match="Ki must be positive definite"):
        ControllerGains.from_scalars(1, 1.0, 1.0, 0.0)
    gains = ControllerGains.from_scalars(1, 1.0, 1.0, 0.0, allow_semidefinite=True)
    assert validate_gains(gains).passed


def test_gains_must_share_a_shape():
    with pytest.raises(ContractError, match="disagree in shape"):
        ControllerGains(np.eye(1), np.eye(2), np.eye(1))


def test_model_rejects_more_inputs_than_coordinates():
    with pytest.raises(ContractError):
        MechanicalModel(
            n=1,
            m=2,
            mass=lambda q: np.eye(1),
            potential=lambda q: 0.0,
            input_map=lambda q: np.ones((1, 2)),
        )


@pytest.mark.parametrize(
    "q_star, center", [(None, [0.0, 0.0]), ([np.pi, 0.5], [np.pi, 0.5])]
)
def test_default_sampling_box_is_centred_on_the_equilibrium(q_star, center):
    model = MechanicalModel(
        n=2,
        m=1,
        mass=lambda q: np.eye(2),
        potential=lambda q: 0.0,
        input_map=lambda q: np.array([[0.0], [1.0]]),
        q_star=q_star,
    )
    box = model.domain_box
    np.testing.assert_allclose(0.5 * (box.q_low + box.q_high), center)


def test_equilibrium_must_match_the_dimension():
    with pytest.raises(ContractError):
        MechanicalModel(
            n=2,
            m=1,
            mass=lambda q: np.eye(2),
            potential=lambda q: 0.0,
            input_map=lambda q: np.array([[0.0], [1.0]]),
            q_star=[0.0, 0.0, 0.0],
        )


def test_wrong_shape_and_non_finite_evaluations():
    model = MechanicalModel(
        n=2,
        m=1,
        mass=lambda q: np.eye(3),
        potential=lambda q: np.inf,
        input_map=lambda q: np.array([[0.0], [1.0]]),
    )
    with pytest.raises(ContractError, match="shape"):
        model.M(np.zeros(2))
    with pytest.raises(EvaluationError) as info:
        model.V(np.array([0.5, 0.25]))
    assert info.value.point == [0.5, 0.25]


@settings(max_examples=50, deadline=None)
@given(st.lists(finite, min_size=6, max_size=6), finite)
def test_extended_coordinates_invert(values, k):
    kappa = np.array([[0.0, 0.0], [0.0, abs(k)]])
    s = ExtendedState(values[:2], values[2:4], values[4:])
    x_q, x_p = extended_coords(s, kappa)
    back = ExtendedState.from_extended(x_q, x_p, s.x_v, kappa)
    np.testing.assert_allclose(back.q, s.q, atol=1e-12)
    np.testing.assert_allclose(back.p, s.p, atol=1e-12)


def test_extended_state_defaults_and_array_layout():
    s = ExtendedState([1.0, 2.0], [3.0, 4.0])
    np.testing.assert_array_equal(s.x_v, np.zeros(2))
    np.testing.assert_array_equal(s.as_array(), [1, 2, 3, 4, 0, 0])
    with pytest.raises(ContractError):
        ExtendedState([1.0, 2.0], [3.0])
    with pytest.raises(ContractError, match="kappa"):
        s.x_p(np.eye(3))


def test_sampled_controller_state_respects_radius(rng):
    box = DomainBox.around(np.zeros(2))
    for _ in range(100):
        s = sample_extended_state(box, rng, (0.1, 1.0))
        assert 0.1 <= np.linalg.norm(s.x_v) <= 1.0
        assert np.all(np.abs(s.q) <= np.pi)
    assert not np.any(sample_extended_state(box, rng).x_v)


def test_matched_disturbance_enters_through_g():
    G = np.array([[0.0], [1.0]])
    dist = DisturbanceProfile(
        d1=lambda t: np.zeros(2),
        d2=lambda t: np.zeros(2),
        matched_d2hat=lambda t: np.array([np.sin(t)]),
    )
    assert dist.matched
    np.testing.assert_allclose(dist.p_row(np.pi / 2, G), [0.0, 1.0])
    assert dist.sup_norm(0.0, np.pi) == pytest.approx(1.0, abs=1e-5)
    assert DisturbanceProfile.zero(2).sup_norm(0.0, 1.0) == 0.0


def test_errors_carry_their_evidence():
    error = InfeasibleMatchingError(np.array([0.5]), 1e-6)
    assert error.residual.tolist() == [0.5]
    assert "exceeds tolerance" in str(error)
    assert RankError("G", [1.0, 0.0]).singular_values == [1.0, 0.0]
    assert isinstance(ContractError("x"), ValueError)

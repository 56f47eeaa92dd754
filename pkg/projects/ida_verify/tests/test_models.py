import json

import numpy as np
import pytest
from pydantic import ValidationError

import projects.ida_verify.src.models.iwp as iwp_module
from projects.ida_verify.src.analysis.idapbc import matching_residual_basic
from projects.ida_verify.src.core.errors import ConfigError, ContractError, DomainError
from projects.ida_verify.src.core.types import ExtendedState, sample_extended_state
from projects.ida_verify.src.core.validation import validate_model, validate_target
from projects.ida_verify.src.models import (
    RipFields,
    build_iwp,
    build_rip,
    iwp_matching_verdict,
    iwp_rhs_direct,
    iwp_terms,
    load_model,
    matched_iwp_params,
    rip_star,
    rip_terms,
)
from projects.ida_verify.src.processing.sweeps import rip_star_sweep
from projects.ida_verify.src.schemas.config import IwpParams, ModelOverrides, RipFieldsConfig

RIP_B1 = "0.5*2.0*sin(q1)/((2.0 + 0.5*cos(q1))*(2.0 + 0.5*cos(q1)))"


class TestIwp:
    def test_defaults_are_a_valid_design(self, iwp):
        model, target, gains = iwp
        assert validate_model(model).passed
        assert validate_target(target).passed
        assert model.underactuated

    @pytest.mark.parametrize(
        "overrides, message",
        [
            ({"k1": 1.0, "k2": 2.0}, "k1 > k2"),
            ({"m1": -1.0}, "m1 > 0"),
            ({"m2": 3.0}, "m1\\*m3 - m2\\^2 > 0"),
        ],
    )
    def test_parameter_inequalities(self, overrides, message):
        with pytest.raises(ValidationError, match=message):
            IwpParams(**overrides)

    def test_matched_parameters_reproduce_the_defaults(self):
        params = matched_iwp_params(k1=2.0, k2=1.0, k3=1.0, m1=1.0, m2=2.0, m3=5.0)
        assert params.gamma1 == pytest.approx(1.0)
        assert params.epsilon == pytest.approx(1.5)

    def test_matched_parameters_satisfy_basic_matching(self, rng):
        params = matched_iwp_params(k1=3.0, k2=1.0, k3=1.0, m1=2.0, m2=1.0, m3=4.0)
        model, target, _ = build_iwp(params)
        for _ in range(50):
            q = model.domain_box.sample_q(rng)
            p = model.domain_box.sample_p(rng)
            assert np.linalg.norm(matching_residual_basic(model, target, q, p)) < 1e-10

    def test_matched_parameters_need_distinct_entries(self):
        with pytest.raises(ContractError):
            matched_iwp_params(k1=2.0, k2=1.0, k3=1.0, m1=2.0, m2=2.0, m3=5.0)

    def test_verdict_fails_to_match(self):
        verdict = iwp_matching_verdict(sample_count=1000, seed=0)
        assert verdict.verdict == "FAIL-TO-MATCH"
        assert verdict.max_annihilated > 1e-3
        assert verdict.control_p41_max < 1e-10
        assert not verdict.published_values
        assert "parameters are not published values" in verdict.notes

    def test_verdict_is_seeded(self):
        first = iwp_matching_verdict(sample_count=50, seed=3)
        second = iwp_matching_verdict(sample_count=50, seed=3)
        assert first == second

    def test_fully_actuated_verdict_is_matchable(self):
        verdict = iwp_matching_verdict(sample_count=20, fully_actuated=True)
        assert verdict.verdict == "MATCHABLE"
        assert verdict.max_annihilated == 0.0

    def test_printed_terms_are_itemized(self, iwp_params):
        s = ExtendedState([0.4, -0.3], [0.5, 0.7], [0.2, 0.6])
        terms = iwp_terms(iwp_params, s)
        disagreements = terms.disagreements()
        assert "term4" in disagreements
        assert "term2" not in disagreements
        np.testing.assert_allclose(terms.direct_sum, iwp_rhs_direct(iwp_params)(s))
        assert len(terms.interpretation_notes()) == 2

    def test_direct_rhs_builds_the_design_once(self, iwp_params, monkeypatch, rng):
        calls = []
        original = iwp_module.build_iwp

        def counting_build(*args, **kwargs):
            calls.append(args)
            return original(*args, **kwargs)

        monkeypatch.setattr(iwp_module, "build_iwp", counting_build)
        rhs = iwp_rhs_direct(iwp_params)
        model, _, _ = original(iwp_params)
        for _ in range(5):
            s = sample_extended_state(model.domain_box, rng, (0.1, 1.0))
            assert rhs(s).shape == (2,)
        assert len(calls) == 1

    def test_sampling_box_is_centred_on_the_target_equilibrium(self, iwp, rip_design):
        for model, target in ((iwp[0], iwp[1]), (rip_design.model, rip_design.target)):
            box = model.domain_box
            np.testing.assert_allclose(0.5 * (box.q_low + box.q_high), target.q_star)
            np.testing.assert_allclose(model.q_star, target.q_star)

    def test_momentum_term_agrees_without_wheel_momentum(self, iwp_params):
        s = ExtendedState([0.4, -0.3], [0.5, 0.0], [0.2, 0.6])
        assert "term4" not in iwp_terms(iwp_params, s).disagreements()

    def test_term5_denominator_switch(self, iwp_params):
        s = ExtendedState([0.0, 0.0], [0.0, 0.0], [0.0, 1.0])
        printed = iwp_terms(iwp_params, s).printed["term5"]
        corrected_params = iwp_params.model_copy(update={"term5_denominator": "corrected"})
        corrected = iwp_terms(corrected_params, s).printed["term5"]
        assert printed[0] == corrected[0]
        assert printed[1] != corrected[1]


class TestRip:
    def test_default_fields_build(self, rip_design):
        assert rip_design.model.name == "rip-template"
        assert "NON-PAPER" in rip_design.provenance
        assert validate_target(rip_design.target, samples=50).passed

    def test_star_agrees_with_printed_terms(self, rip_design, rng):
        fields = rip_design.fields
        for _ in range(100):
            s = sample_extended_state(fields.domain_box, rng, (0.1, 1.0))
            terms = rip_terms(fields, s)
            assert rip_star(fields, s) == pytest.approx(terms.star_from_terms(), abs=1e-9)
            assert rip_star(fields, s, "b3") == pytest.approx(
                terms.star_from_terms("b3"), abs=1e-9
            )

    def test_star_and_terms_share_the_integral_gain(self, rng):
        design = build_rip(RipFields.from_config(RipFieldsConfig(k_i=2.5, k_v=0.7)), samples=50)
        fields = design.fields
        assert design.gains.Ki[-1, -1] == fields.k_i == 2.5
        for _ in range(50):
            s = sample_extended_state(fields.domain_box, rng, (0.1, 1.0))
            terms = rip_terms(fields, s)
            assert rip_star(fields, s) == pytest.approx(terms.star_from_terms(), abs=1e-9)

    def test_rip_star_sweep_matches_terms_under_a_non_unit_gain(self):
        loaded = load_model("rip", ModelOverrides(Ki_scalar=2.5))
        assert loaded.rip.k_i == 2.5
        result = rip_star_sweep(loaded, samples=30, seed=3)
        assert result.summary.max_term_sum_gap < 1e-9

    def test_star_vanishes_only_without_controller_state(self, rip_design, rng):
        fields = rip_design.fields
        nonzero = 0
        for _ in range(200):
            s = sample_extended_state(fields.domain_box, rng, (0.1, 1.0))
            assert rip_star(fields, ExtendedState(s.q, s.p)) == 0.0
            nonzero += abs(rip_star(fields, s)) > 1e-8
        assert nonzero / 200 >= 0.99

    def test_sign_changing_delta_d_is_rejected(self):
        with pytest.raises(DomainError, match="changes sign"):
            build_rip(RipFields.from_config(RipFieldsConfig(delta_d="cos(q1)")), samples=200)

    def test_supplied_b_field_is_checked(self):
        good = RipFields.from_config(RipFieldsConfig(b1=RIP_B1))
        assert build_rip(good, samples=50).fields.b1 is not None
        bad = RipFields.from_config(RipFieldsConfig(b1="0"))
        with pytest.raises(ContractError, match="B1 disagrees"):
            build_rip(bad, samples=50)


class TestRegistry:
    def test_presets_load(self):
        assert load_model("iwp").kind == "iwp"
        assert load_model("rip").kind == "rip"

    def test_overrides(self):
        loaded = load_model("iwp", ModelOverrides(Kp_scalar=3.0, fully_actuated=True))
        np.testing.assert_allclose(loaded.gains.Kp, 3.0 * np.eye(2))
        assert loaded.model.m == 2

    def test_parameter_file(self, tmp_path):
        path = tmp_path / "wheel.json"
        path.write_text(json.dumps({"kind": "iwp", "iwp": {"k3": 2.0}}))
        loaded = load_model(str(path))
        assert loaded.iwp.k3 == 2.0
        assert loaded.label == str(path)

    @pytest.mark.parametrize(
        "content",
        [
            "{not json",
            json.dumps({"kind": "iwp", "iwp": {"k1": 1.0, "k2": 2.0}}),
            json.dumps({"kind": "pendulum"}),
            json.dumps({"kind": "iwp", "unknown": 1}),
        ],
    )
    def test_invalid_parameter_files(self, tmp_path, content):
        path = tmp_path / "broken.json"
        path.write_text(content)
        with pytest.raises(ConfigError):
            load_model(str(path))

    def test_missing_model(self):
        with pytest.raises(ConfigError, match="neither a preset"):
            load_model("no-such-model")

    def test_design_errors_surface_from_files(self, tmp_path):
        path = tmp_path / "rip.json"
        path.write_text(json.dumps({"kind": "rip", "rip": {"delta_d": "q1"}}))
        with pytest.raises(DomainError):
            load_model(str(path))

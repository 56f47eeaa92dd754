import pytest

from projects.ida_verify.src.core.errors import ContractError
from projects.ida_verify.src.models.registry import load_model
from projects.ida_verify.src.processing.sweeps import (
    chain_sweep,
    coupling_scaling,
    matched_bound_sweep,
    residual_sweep,
    rip_star_sweep,
)
from projects.ida_verify.src.schemas.config import MatchingConfig, ModelOverrides


@pytest.fixture(scope="module")
def rip_loaded():
    return load_model("rip")


def test_operator_verdicts_on_default_iwp(iwp_loaded):
    config = MatchingConfig(samples=100)
    verdicts = {
        op: residual_sweep(iwp_loaded, op, config).summary.verdict for op in ("basic", "p41", "p51")
    }
    assert verdicts == {"basic": "pass", "p41": "pass", "p51": "fail"}


def test_operators_share_their_states(iwp_loaded):
    config = MatchingConfig(samples=20)
    basic = residual_sweep(iwp_loaded, "basic", config).rows
    p51 = residual_sweep(iwp_loaded, "p51", config).rows
    assert [row["q1"] for row in basic] == [row["q1"] for row in p51]
    assert [row["x_v2"] for row in basic] == [row["x_v2"] for row in p51]
    assert "term_momentum" in p51[0]


def test_restricted_sweep_samples_the_null_slice(iwp_loaded):
    config = MatchingConfig(samples=50, restrict_x_v_zero=True, operators=["p41"])
    result = residual_sweep(iwp_loaded, "p41", config)
    assert all(row["x_v1"] == 0.0 and row["x_v2"] == 0.0 for row in result.rows)
    assert result.summary.restricted_x_v_zero
    assert result.summary.band == "match"


def test_fully_actuated_sweep_is_annotated():
    loaded = load_model("iwp", ModelOverrides(fully_actuated=True))
    summary = residual_sweep(loaded, "p51", MatchingConfig(samples=10)).summary
    assert summary.max_norm == 0.0
    assert any("fully actuated" in note for note in summary.notes)


def test_unknown_operator(iwp_loaded):
    with pytest.raises(ContractError):
        residual_sweep(iwp_loaded, "p99", MatchingConfig(samples=1))


def test_chain_sweep(iwp_loaded):
    summary = chain_sweep(iwp_loaded, samples=50).summary
    assert summary.max_step_gaps["1-2"] < 1e-9
    assert summary.max_step_gaps["2-3"] > 1e-3
    assert summary.max_half_momentum_gap_error < 1e-9
    assert summary.max_deviation_error < 1e-9


def test_rip_star_sweep(rip_loaded, iwp_loaded):
    result = rip_star_sweep(rip_loaded, samples=100)
    assert result.summary.max_term_sum_gap < 1e-9
    assert result.summary.zero_slice_max == 0.0
    assert result.summary.nonzero_fraction >= 0.99
    assert {"star", "star_from_terms", "star_b3", "star_zero_slice"} <= set(result.rows[0])
    with pytest.raises(ContractError):
        rip_star_sweep(iwp_loaded, samples=1)


def test_matched_bound_has_no_hard_violations(iwp_loaded):
    summary = matched_bound_sweep(iwp_loaded, samples=10_000).summary
    assert summary.hard_violations == 0
    assert summary.min_margin >= -1e-12


def test_coupling_scaling_is_linear(iwp_loaded):
    scaling = coupling_scaling(iwp_loaded, samples=50)
    assert scaling.baseline < 1e-10
    assert scaling.linear()
    assert scaling.slopes[0] == pytest.approx(scaling.slopes[-1], rel=1e-6)

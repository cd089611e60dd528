import math

import numpy as np
import pytest

import retrosim as rs


def test_pure_state_outer_product():
    rho = rs.make_pure_state(np.array([3, 4j]))
    m = rho.matrix
    assert m[0, 0] == pytest.approx(9 / 25)
    assert m[1, 1] == pytest.approx(16 / 25)
    assert m[0, 1] == pytest.approx(-12j / 25)


def test_bell_partial_trace_is_maximally_mixed():
    rho = rs.make_pure_state(np.array([1, 0, 0, 1], dtype=complex))
    layout = rs.SubsystemLayout([("a", 2), ("b", 2)])
    reduced = rs.partial_trace(rho, layout, ["b"]).matrix
    assert np.allclose(reduced, np.eye(2) / 2, atol=1e-15)


def test_hadamard_and_collapse():
    rho = rs.DensityMatrix(np.diag([1.0, 0.0]).astype(complex))
    assert np.allclose(rs.apply_unitary(rho, rs.UnitaryOp.hadamard()).matrix, np.full((2, 2), 0.5))
    state, p = rs.collapse(rs.DensityMatrix.diagonal([0.7, 0.3]), rs.Projector.basis(2, 0))
    assert p == pytest.approx(0.7)
    assert np.allclose(state.matrix, np.diag([1.0, 0.0]))


def test_zero_probability_branch_raises_with_kind():
    with pytest.raises(rs.RetrosimError) as info:
        rs.collapse(rs.DensityMatrix.basis_state(2, 0), rs.Projector.basis(2, 1))
    assert info.value.kind == "ZeroProbabilityOutcome"


def test_biased_weights():
    q = rs.biased_weights([0.5, 0.5], [1.0, 0.0], 0.2)
    assert q == pytest.approx([6 / 11, 5 / 11])
    assert rs.sample_outcome([0.5, 0.5], 0.75) == 1


def test_detection_ensemble_and_rates():
    spec = rs.detection_protocol()
    ens = rs.enumerate_ensemble(spec, rs.ChoicePolicy.biased(0.2))
    assert len(ens.histories) == 8
    favored = [h.weight for h in ens.histories if ("F", "erotic") in h.steps]
    assert favored == pytest.approx([1 / 7, 1 / 7])
    assert rs.hit_rate(ens, spec) == pytest.approx(1.2 / 2.2, abs=1e-12)
    assert rs.marginal(ens, "S")["E"] == pytest.approx(4.4 / 8.4, abs=1e-12)
    assert rs.no_signaling_gap(spec, rs.ChoicePolicy.biased(0.2), on_hit_statistic=True) == pytest.approx(
        0.2 / (2 * 2.2), abs=1e-12
    )
    assert rs.no_signaling_gap(spec, rs.ChoicePolicy.orthodox()) < 1e-12
    assert rs.sequential_equivalence_distance(spec) < 1e-9


def test_recall_expected_overlap():
    spec = rs.recall_protocol(4, 2, 2)
    ens = rs.enumerate_ensemble(spec, rs.ChoicePolicy.biased(0.3))
    assert rs.expected_observable(ens, spec) == pytest.approx(1.1, abs=1e-12)


def test_simulation_and_determinism():
    config = rs.parse_config('{"protocol": "detection", "trials": 20000, "seed": 9, "beta": 0.2}')
    report = rs.run_simulation(config)
    assert report["ci_low"] <= report["rate"] <= report["ci_high"]
    assert report["exact_rate"] == pytest.approx(6 / 11)
    serial = rs.simulation_csv(config)
    config.threads = 4
    assert rs.simulation_csv(config) == serial


def test_wilson_and_config_errors():
    low, high = rs.wilson_interval(50, 100, 0.95)
    assert math.isclose(low, 0.404, abs_tol=0.002) and math.isclose(high, 0.596, abs_tol=0.002)
    with pytest.raises(rs.RetrosimError, match=r"\[0, 1\]"):
        rs.parse_config('{"beta": 1.5}')
    with pytest.raises(rs.RetrosimError, match="betta"):
        rs.parse_config('{"betta": 0.1}')


def test_verify_reports_expected_violation():
    config = rs.parse_config('{"protocol": "detection", "beta": 0.2}')
    passed, checks = rs.verify(config)
    assert passed
    by_name = {c["check"]: c for c in checks}
    assert by_name["policy_no_signaling"]["status"] == "expected_violation"

import math

import numpy as np
import pytest

from gateforge import presets
from gateforge.experiments import (
    EXPERIMENTS,
    DiagonalUnitary,
    ExperimentReport,
    best_fit_diagonal,
    commensurate_period,
    exp_equivalence,
    exp_gradient_fd,
    exp_row_vs_full,
    exp_spurious_diagonal,
    inputs_digest,
    run_experiment,
)
from gateforge.model import ControlField, TimeGrid
from gateforge.optimizer import default_initial_guess
from gateforge.worker import run_batch


def _assertion(report: ExperimentReport, prefix: str):
    matches = [a for a in report.assertions if a.name.startswith(prefix)]
    assert matches, f"no assertion starting with {prefix!r} in {report.name}"
    return matches


def test_report_verdict_ignores_informational_failures():
    report = ExperimentReport("demo", "abc")
    report.check("hard", 1.0, "<=", 2.0)
    report.check("soft", 5.0, "<=", 2.0, informational=True)
    assert report.passed
    report.check("hard again", 3.0, "<", 2.0)
    assert not report.passed
    data = report.to_dict()
    assert data["passed"] is False
    assert len(data["assertions"]) == 3
    assert "FAIL" in report.summary_text()


def test_inputs_digest_is_stable(two_level, not_gate, gate_grid):
    a = inputs_digest(model=two_level, target=not_gate, grid=gate_grid, seed=1)
    b = inputs_digest(model=presets.two_level(), target=presets.target("not"), grid=presets.gate_grid(), seed=1)
    c = inputs_digest(model=two_level, target=not_gate, grid=gate_grid, seed=2)
    assert a == b
    assert a != c


def test_diagonal_unitary_matrix():
    d = DiagonalUnitary((0.0, math.pi / 2))
    np.testing.assert_allclose(d.matrix, np.diag([1.0, 1j]), atol=1e-15)
    np.testing.assert_allclose(d.matrix.conj().T @ d.matrix, np.eye(2), atol=1e-15)


def test_best_fit_of_free_evolution_at_commensurate_time(two_level):
    grid = TimeGrid(horizon=2 * math.pi, step_count=20)
    identity = presets.target("identity")
    fit = best_fit_diagonal(two_level, identity, ControlField.zeros(grid), grid)
    assert fit["fidelity_best_fit"] == pytest.approx(1.0, abs=1e-12)
    assert fit["max_relative_phase"] < 1e-10


def test_commensurate_period(two_level):
    assert commensurate_period(two_level) == pytest.approx(2 * math.pi)
    assert commensurate_period(presets.random_tridiagonal(4, 3, seed=0)) is None


def test_row_vs_full_agreement():
    model = presets.random_tridiagonal(32, 2, seed=0)
    grid = TimeGrid(horizon=10.0, step_count=200)
    report = exp_row_vs_full(model, default_initial_guess(model, grid, seed=0, fluence=1.0), grid, repeats=3)
    agreement = _assertion(report, "max entry difference")[0]
    assert agreement.passed
    assert agreement.measured <= 1e-10
    assert report.measured["element_ratio"] == 16


def test_gradient_experiment_passes(two_level, not_gate):
    report = exp_gradient_fd(two_level, not_gate, TimeGrid(horizon=2.0, step_count=100), seed=0)
    assert report.passed, report.summary_text()
    assert len(_assertion(report, "scale 1:")) == 4
    assert len(_assertion(report, "scale 2:")) == 4
    integrand = [a for a in report.assertions if "integrand" in a.name]
    assert len(integrand) == 4
    assert all(not a.informational and a.threshold == 1e-4 for a in integrand)


def test_gradient_experiment_zero_field_diagonal(two_level, diag_gate):
    grid = TimeGrid(horizon=5.0, step_count=60)
    report = exp_gradient_fd(two_level, diag_gate, grid, seed=1, samples=10)
    for a in _assertion(report, "zero field"):
        assert a.passed


def test_spurious_diagonal_zero_field_checks(two_level, diag_gate, gate_grid):
    report = exp_spurious_diagonal(two_level, diag_gate, gate_grid, seed=0, max_iters=5)
    for prefix in ("zero-field gate fidelity", "max |delta eps|", "residual_evolution at zero", "residual_s2s at zero", "zero-field evolution", "zero-field state_to_state", "first-iteration update norm"):
        for a in _assertion(report, prefix):
            assert a.passed, a.describe()
    # two levels: the superposition coupling stays real at zero field
    assert report.measured["residual_s2s_phase_corrected_zero_field"] <= 1e-12


def test_equivalence_shared_trajectory_identity(two_level, not_gate, gate_grid):
    report = exp_equivalence(two_level, not_gate, gate_grid, seeds=[0, 1], max_iters=3)
    for a in _assertion(report, "seed"):
        assert a.passed, a.describe()
    for a in _assertion(report, "identity target at commensurate T"):
        assert a.passed, a.describe()
    assert report.curves["residuals"][0].keys() == {"time", "residual_evolution", "residual_s2s"}


def test_unknown_experiment_rejected():
    with pytest.raises(KeyError):
        run_experiment("nope")


def test_registry_names():
    assert set(EXPERIMENTS) == {
        "not_gate",
        "embedded_qubit",
        "phase_ambiguity",
        "spurious_diagonal",
        "equivalence",
        "row_vs_full",
        "gradient_fd",
    }


def test_batch_keeps_order_and_captures_errors(monkeypatch):
    from gateforge import experiments

    def boom(seed):
        raise RuntimeError("broken instance")

    def quick(seed):
        report = ExperimentReport("quick", "x")
        report.check("ok", 0.0, "<=", 1.0)
        return report

    monkeypatch.setitem(experiments.EXPERIMENTS, "gradient_fd", boom)
    monkeypatch.setitem(experiments.EXPERIMENTS, "row_vs_full", quick)
    reports = run_batch(["row_vs_full", "gradient_fd"], seed=0, workers=2)
    assert [r.name for r in reports] == ["quick", "gradient_fd"]
    assert reports[0].passed
    assert not reports[1].passed
    assert "broken instance" in reports[1].error


KEY_ASSERTIONS = {
    "not_gate": ["evolution gate fidelity", "Re tau worst decrease", "eta worst decrease"],
    "embedded_qubit": ["evolution gate fidelity", "Re tau worst decrease"],
    "phase_ambiguity": ["seed 0: orthonormal fidelity against best-fit O*D", "largest best-fit relative phase"],
    "spurious_diagonal": ["escape run gate fidelity", "zero-field gate fidelity"],
    "equivalence": ["converged gate fidelity", "eta/N with phase-corrected basis", "residual_s2s (phase-corrected) on converged field"],
    "row_vs_full": ["max entry difference rows vs full"],
    "gradient_fd": ["scale 1: Re tau integrand vs finite difference", "scale 2: eta integrand vs finite difference"],
}


@pytest.mark.parametrize("name", sorted(EXPERIMENTS))
def test_registered_experiment_passes(name):
    report = run_experiment(name, 0)
    assert report.passed, report.summary_text()
    for prefix in KEY_ASSERTIONS[name]:
        for a in _assertion(report, prefix):
            assert a.passed and not a.informational, a.describe()


def test_phase_ambiguity_reports_rounding_tolerance():
    report = run_experiment("phase_ambiguity", 0)
    assert report.measured["rounding_tolerance"] == 1e-13
    for a in _assertion(report, "seed 0: eta(O) = eta(OD)"):
        assert a.name.endswith("to rounding")
        assert a.passed

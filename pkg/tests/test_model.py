import math

import numpy as np
import pytest

from gateforge import presets
from gateforge.model import (
    BasisMode,
    ControlField,
    DimensionError,
    ModelError,
    SystemModel,
    TargetGate,
    TimeGrid,
    build_initial_basis,
    ensure_valid,
    global_phase_phi1,
    predicted_phase_family,
    validate_model,
    validate_target,
)


def test_valid_two_level_has_no_problems(two_level):
    assert validate_model(two_level) == []


def test_n_exceeds_m_reported():
    model = SystemModel.create([0.0, 1.0], [[0, 1], [1, 0]], relevant_dim=3)
    problems = validate_model(model)
    assert any("N exceeds M" in p for p in problems)


def test_non_hermitian_entry_named():
    model = SystemModel.create([0.0, 1.0], [[0, 1.0], [0.5, 0]], relevant_dim=2)
    problems = validate_model(model)
    assert any("not Hermitian at (1,2)" in p for p in problems)


def test_all_problems_reported_at_once():
    mu = [[0.3, 1.0], [0.5, 0]]
    model = SystemModel.create([0.0, 1.0], mu, relevant_dim=2)
    with pytest.raises(ModelError) as info:
        ensure_valid(model)
    problems = info.value.problems
    assert any("Hermitian" in p for p in problems)
    assert any("nonzero diagonal at k=1" in p for p in problems)


def test_mu_shape_checked():
    model = SystemModel.create([0.0, 1.0, 2.0], [[0, 1], [1, 0]], relevant_dim=2)
    assert any("mu must be 3x3" in p for p in validate_model(model))


def test_target_checks(two_level):
    assert validate_target(two_level, presets.target("hadamard")) == []
    assert any("not unitary" in p for p in validate_target(two_level, TargetGate.create([[1, 1], [0, 1]])))
    assert any("N=2" in p for p in validate_target(two_level, TargetGate.create(np.eye(3))))


def test_time_grid_midpoints():
    grid = TimeGrid(horizon=2.0, step_count=4)
    assert grid.dt == 0.5
    np.testing.assert_allclose(grid.midpoints, [0.25, 0.75, 1.25, 1.75])
    assert np.all(np.diff(grid.midpoints) > 0)
    assert len(grid.nodes) == 5 and grid.nodes[-1] == pytest.approx(2.0)


@pytest.mark.parametrize("horizon, steps", [(1.0, 0), (0.0, 10), (-1.0, 10), (math.inf, 10)])
def test_time_grid_rejects_bad_values(horizon, steps):
    with pytest.raises(DimensionError):
        TimeGrid(horizon=horizon, step_count=steps)


def test_control_field_checks():
    grid = TimeGrid(horizon=1.0, step_count=4)
    with pytest.raises(ValueError):
        ControlField.create([0.0, math.nan, 0.0, 0.0])
    with pytest.raises(DimensionError):
        ControlField.create([0.0, 1.0], grid)
    field = ControlField.create([1.0, -1.0, 2.0, 0.0], grid)
    assert field.fluence(grid) == pytest.approx(6.0 * 0.25)
    assert np.array_equal((field - field).samples, np.zeros(4))


def test_orthonormal_basis_is_identity():
    basis = build_initial_basis(BasisMode.ORTHONORMAL, 3, 5)
    assert np.array_equal(basis.states[:, :3], np.eye(3))
    assert np.all(basis.states[:, 3:] == 0)


def test_phase_corrected_basis_last_state():
    basis = build_initial_basis("phase_corrected", 3, 5)
    last = basis.states[-1]
    np.testing.assert_allclose(last[:3], np.full(3, 1 / math.sqrt(3)))
    assert np.linalg.norm(last) == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_array_equal(basis.states[:2, :3], np.eye(3)[:2])


def test_basis_needs_n_at_most_m():
    with pytest.raises(DimensionError):
        build_initial_basis(BasisMode.ORTHONORMAL, 4, 3)


def test_padded_rows_hold_target_columns():
    target = presets.random_unitary(3, seed=2)
    rows = target.padded_rows(5)
    assert rows.shape == (3, 5)
    for k in range(3):
        np.testing.assert_array_equal(rows[k, :3], target.block[:, k])
    assert np.all(rows[:, 3:] == 0)


def test_final_states_apply_target(not_gate):
    basis = build_initial_basis(BasisMode.PHASE_CORRECTED, 2, 2)
    finals = basis.final_states(not_gate)
    np.testing.assert_allclose(finals[0], [0, 1])
    np.testing.assert_allclose(finals[1], [1 / math.sqrt(2), 1 / math.sqrt(2)])


def test_global_phase_phi1(two_level):
    assert global_phase_phi1(two_level, 20.0, reduce=False) == pytest.approx(10.0)
    assert global_phase_phi1(two_level, 20.0) == pytest.approx(10.0 - 4 * math.pi)
    with pytest.raises(ValueError):
        global_phase_phi1(two_level, -1.0)


def test_predicted_phases_match_determinant(two_level, not_gate):
    horizon = 20.0
    family = predicted_phase_family(two_level, not_gate, horizon)
    assert len(family) == 2
    det_u = np.exp(-1j * np.sum(two_level.energies) * horizon)
    for phi in family:
        assert np.exp(-2j * phi) * np.linalg.det(not_gate.block) == pytest.approx(det_u, abs=1e-12)


def test_predicted_phases_empty_for_embedded_model(not_gate):
    assert predicted_phase_family(presets.embedded_qubit(), not_gate, 30.0) == []


def test_embedded_preset_is_valid(not_gate):
    ensure_valid(presets.embedded_qubit(), not_gate)

import numpy as np
import pytest
from scipy.linalg import expm

from gateforge.model import ControlField, DimensionError, SystemModel, TimeGrid
from gateforge.propagation import (
    PreconditionError,
    build_step_propagator,
    build_step_propagators,
    evolve_state,
    identity_rows,
    max_norm_drift,
    overlap_profile,
    propagate_full_unitary,
    propagate_rows_backward,
    propagate_rows_forward,
    step_hamiltonian,
)

from .conftest import random_field


def test_step_matches_expm(dense3):
    prop = build_step_propagator(dense3, 0.3, 0.05)
    exact = expm(-1j * step_hamiltonian(dense3, 0.3) * 0.05)
    np.testing.assert_allclose(prop.matrix, exact, atol=1e-13)
    assert prop.unitarity_error() < 1e-13


def test_zero_field_step_is_free_evolution(dense3):
    prop = build_step_propagator(dense3, 0.0, 0.1)
    np.testing.assert_allclose(prop.matrix, np.diag(np.exp(-1j * dense3.energies * 0.1)), atol=1e-15)


def test_batched_propagators_match_single(dense3, short_grid):
    field = random_field(short_grid, seed=3)
    batched = build_step_propagators(dense3, field, short_grid)
    for j in (0, 17, 49):
        single = build_step_propagator(dense3, field.samples[j], short_grid.dt)
        np.testing.assert_allclose(batched[j].matrix, single.matrix, atol=1e-13)


@pytest.mark.parametrize("eps", [0.0, 0.7])
def test_step_derivative_matches_finite_difference(dense3, eps):
    dt, h = 0.1, 1e-6

    def p(value):
        return expm(-1j * step_hamiltonian(dense3, value) * dt)

    fd = (p(eps + h) - p(eps - h)) / (2 * h)
    np.testing.assert_allclose(build_step_propagator(dense3, eps, dt).derivative(dense3.mu), fd, atol=1e-8)


def test_step_derivative_with_degenerate_levels():
    model = SystemModel.create([0.0, 0.0, 1.0], [[0, 0.5, 0.2], [0.5, 0, 0.3], [0.2, 0.3, 0]], relevant_dim=2)
    dt, h = 0.2, 1e-6
    fd = (expm(-1j * step_hamiltonian(model, h) * dt) - expm(-1j * step_hamiltonian(model, -h) * dt)) / (2 * h)
    np.testing.assert_allclose(build_step_propagator(model, 0.0, dt).derivative(model.mu), fd, atol=1e-8)


def test_rows_agree_with_full_unitary(dense3, short_grid):
    field = random_field(short_grid, seed=5)
    rows = propagate_rows_forward(dense3, field, short_grid, identity_rows(dense3))
    full = propagate_full_unitary(dense3, field, short_grid)
    np.testing.assert_allclose(rows.final, full[:, :2].T, atol=1e-12)


def test_full_unitary_is_product_of_step_exponentials(dense3, short_grid):
    field = random_field(short_grid, seed=6)
    u = np.eye(3, dtype=complex)
    for eps in field.samples:
        u = expm(-1j * step_hamiltonian(dense3, eps) * short_grid.dt) @ u
    np.testing.assert_allclose(propagate_full_unitary(dense3, field, short_grid), u, atol=1e-11)


def test_row_norms_are_preserved(dense3, short_grid):
    field = random_field(short_grid, seed=7)
    forward = propagate_rows_forward(dense3, field, short_grid, identity_rows(dense3))
    assert max_norm_drift(forward) < 1e-12


def test_pairing_is_constant_in_time(dense3, short_grid):
    from gateforge import presets
    from gateforge.functionals import tau

    target = presets.random_unitary(2, seed=4)
    field = random_field(short_grid, seed=8)
    props = build_step_propagators(dense3, field, short_grid)
    forward = propagate_rows_forward(dense3, field, short_grid, identity_rows(dense3), props)
    backward = propagate_rows_backward(dense3, field, short_grid, target.padded_rows(3), props)
    profile = overlap_profile(forward, backward)
    expected = tau(target, forward.final).value
    np.testing.assert_allclose(profile, np.full(short_grid.step_count + 1, expected), atol=1e-12)


def test_evolve_state_round_trip(dense3, short_grid):
    field = random_field(short_grid, seed=9)
    psi0 = np.array([1.0, 1.0j, 0.0]) / np.sqrt(2)
    forward = evolve_state(dense3, field, short_grid, psi0)
    assert forward.shape == (short_grid.step_count + 1, 3)
    psi_t = forward[-1] / np.linalg.norm(forward[-1])
    backward = evolve_state(dense3, field, short_grid, psi_t, backward=True)
    np.testing.assert_allclose(backward[0], psi0, atol=1e-12)


def test_evolve_state_requires_normalized_input(dense3, short_grid):
    field = ControlField.zeros(short_grid)
    with pytest.raises(PreconditionError):
        evolve_state(dense3, field, short_grid, np.array([1.0, 1.0, 0.0]))
    with pytest.raises(DimensionError):
        evolve_state(dense3, field, short_grid, np.array([1.0, 0.0]))


def test_mismatched_inputs_raise(dense3, short_grid):
    field = ControlField.zeros(TimeGrid(horizon=5.0, step_count=10))
    with pytest.raises(DimensionError):
        propagate_rows_forward(dense3, field, short_grid, identity_rows(dense3))
    good = ControlField.zeros(short_grid)
    props = build_step_propagators(dense3, good, short_grid)
    with pytest.raises(DimensionError):
        propagate_rows_forward(dense3, good, short_grid, identity_rows(dense3), props[:-1])
    with pytest.raises(DimensionError):
        propagate_rows_forward(dense3, good, short_grid, np.eye(2))


def test_rows_equal_full_when_n_equals_m(two_level, short_grid):
    field = random_field(short_grid, seed=10)
    rows = propagate_rows_forward(two_level, field, short_grid, identity_rows(two_level))
    full = propagate_full_unitary(two_level, field, short_grid)
    np.testing.assert_allclose(rows.final, full.T, atol=1e-13)


@pytest.mark.parametrize("seed", range(100))
def test_random_instances_conserve_norm_and_pairing(seed):
    from gateforge import presets
    from gateforge.functionals import tau

    level_count = 2 + seed % 7
    relevant_dim = 1 + seed % min(level_count, 3)
    model = presets.random_dense(level_count, relevant_dim, seed=seed)
    target = presets.random_unitary(relevant_dim, seed=seed)
    grid = TimeGrid(horizon=2.0, step_count=20)
    field = random_field(grid, seed=seed)
    props = build_step_propagators(model, field, grid)
    assert max(p.unitarity_error() for p in props) <= 1e-12

    forward = propagate_rows_forward(model, field, grid, identity_rows(model), props)
    backward = propagate_rows_backward(model, field, grid, target.padded_rows(level_count), props)
    assert max_norm_drift(forward) <= 1e-10
    assert max_norm_drift(backward) <= 1e-10
    profile = overlap_profile(forward, backward)
    assert np.max(np.abs(profile - profile[0])) <= 1e-9
    assert abs(profile[-1] - tau(target, forward.final).value) <= 1e-12


def test_split_grid_composes(dense3):
    grid = TimeGrid(horizon=4.0, step_count=40)
    half = TimeGrid(horizon=2.0, step_count=20)
    field = random_field(grid, seed=12)
    first = ControlField.create(field.samples[:20])
    second = ControlField.create(field.samples[20:])

    whole = propagate_full_unitary(dense3, field, grid)
    composed = propagate_full_unitary(dense3, second, half) @ propagate_full_unitary(dense3, first, half)
    np.testing.assert_allclose(composed, whole, atol=1e-10)

    rows_first = propagate_rows_forward(dense3, first, half, identity_rows(dense3))
    rows_second = propagate_rows_forward(dense3, second, half, rows_first.final)
    np.testing.assert_allclose(rows_second.final, whole[:, :2].T, atol=1e-10)


def test_halved_step_matches_half_step_build(dense3):
    prop = build_step_propagator(dense3, 0.45, 0.08)
    np.testing.assert_allclose(prop.halved().matrix, build_step_propagator(dense3, 0.45, 0.04).matrix, atol=1e-13)
    np.testing.assert_allclose(prop.halved().matrix @ prop.halved().matrix, prop.matrix, atol=1e-13)


def _pi_pulse(step_count):
    horizon = 20 * np.pi
    grid = TimeGrid(horizon=horizon, step_count=step_count)
    amplitude = np.pi / horizon
    return grid, ControlField.create(amplitude * np.cos(grid.midpoints), grid)


def test_resonant_pi_pulse_inverts_populations(two_level):
    grid, field = _pi_pulse(2000)
    u = propagate_full_unitary(two_level, field, grid)
    assert abs(u[1, 0]) >= 0.99
    assert abs(u[0, 1]) >= 0.99

    fine_grid, fine_field = _pi_pulse(20000)
    fine = propagate_full_unitary(two_level, fine_field, fine_grid)
    np.testing.assert_allclose(np.abs(u), np.abs(fine), atol=1e-3)


def test_superposition_under_pi_pulse(two_level):
    grid, field = _pi_pulse(2000)
    u = propagate_full_unitary(two_level, field, grid)

    psi0 = np.array([1.0, 1.0]) / np.sqrt(2)
    states = evolve_state(two_level, field, grid, psi0)
    np.testing.assert_allclose(states[-1], u @ psi0, atol=1e-12)
    np.testing.assert_allclose(np.abs(states[-1]), np.full(2, 1 / np.sqrt(2)), atol=5e-2)

    weighted = np.array([0.8, 0.6])
    populations = np.abs(evolve_state(two_level, field, grid, weighted)[-1]) ** 2
    np.testing.assert_allclose(populations, [0.36, 0.64], atol=5e-2)

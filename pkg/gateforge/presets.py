import math

import numpy as np

from .model import SystemModel, TargetGate, TimeGrid

SQRT_HALF = 1.0 / math.sqrt(2.0)

GATES = {
    "not": [[0, 1], [1, 0]],
    "hadamard": [[SQRT_HALF, SQRT_HALF], [SQRT_HALF, -SQRT_HALF]],
    "diag": [[1, 0], [0, -1]],
    "identity": [[1, 0], [0, 1]],
}


def target(name: str) -> TargetGate:
    return TargetGate.create(GATES[name])


def two_level() -> SystemModel:
    return SystemModel.create([0.0, 1.0], [[0, 1], [1, 0]], relevant_dim=2)


def embedded_qubit() -> SystemModel:
    """Qubit on levels 1-2 with a six-level spurious ladder above it."""
    energies = [0.0, 1.0, 2.65, 3.85, 5.3, 6.45, 7.9, 9.2]
    mu = np.zeros((8, 8))
    couplings = {(0, 1): 1.0, (1, 2): 0.6, (0, 2): 0.25, (2, 3): 0.5, (3, 4): 0.45, (4, 5): 0.4, (5, 6): 0.35, (6, 7): 0.3}
    for (j, k), value in couplings.items():
        mu[j, k] = mu[k, j] = value
    return SystemModel.create(energies, mu, relevant_dim=2)


def random_tridiagonal(level_count: int, relevant_dim: int, seed: int) -> SystemModel:
    rng = np.random.default_rng(seed)
    energies = np.concatenate([[0.0], np.cumsum(rng.uniform(0.5, 1.5, size=level_count - 1))])
    off = rng.uniform(0.2, 1.0, size=level_count - 1) * np.exp(1j * rng.uniform(0, 2 * np.pi, size=level_count - 1))
    mu = np.diag(off, 1) + np.diag(off.conj(), -1)
    return SystemModel.create(energies, mu, relevant_dim=relevant_dim)


def random_dense(level_count: int, relevant_dim: int, seed: int) -> SystemModel:
    rng = np.random.default_rng(seed)
    energies = np.sort(rng.uniform(0.0, 3.0, size=level_count))
    a = rng.normal(size=(level_count, level_count)) + 1j * rng.normal(size=(level_count, level_count))
    mu = 0.5 * (a + a.conj().T) / level_count
    np.fill_diagonal(mu, 0.0)
    return SystemModel.create(energies, mu, relevant_dim=relevant_dim)


def random_unitary(dim: int, seed: int) -> TargetGate:
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return TargetGate.create(q * (np.diag(r) / np.abs(np.diag(r))))


def gate_grid() -> TimeGrid:
    return TimeGrid(horizon=20.0, step_count=400)


def embedded_grid() -> TimeGrid:
    return TimeGrid(horizon=30.0, step_count=600)

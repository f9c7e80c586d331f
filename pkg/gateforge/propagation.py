from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property, lru_cache
from typing import List, Optional, Sequence

import numpy as np
from loguru import logger

from .model import ControlField, DimensionError, SystemModel, TimeGrid

HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-10
DEGENERACY_TOL = 1e-10


class PreconditionError(Exception):
    pass


class PropagationError(Exception):
    pass


class Direction(str, Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


@dataclass(frozen=True, eq=False)
class StepPropagator:
    eps: float
    dt: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @cached_property
    def phases(self) -> np.ndarray:
        return np.exp(-1j * self.eigenvalues * self.dt)

    @cached_property
    def matrix(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.phases) @ v.conj().T

    def apply(self, rows: np.ndarray) -> np.ndarray:
        """P applied to each row vector (rows has shape ... x M)."""
        return rows @ self.matrix.T

    def apply_adjoint(self, rows: np.ndarray) -> np.ndarray:
        return rows @ self.matrix.conj()

    def derivative(self, mu: np.ndarray) -> np.ndarray:
        """dP/d(eps) for H = H0 - mu * eps, exact for the finite step."""
        w = self.eigenvalues
        f = self.phases
        v = self.eigenvectors
        gap = w[:, None] - w[None, :]
        close = np.abs(gap) <= DEGENERACY_TOL
        safe_gap = np.where(close, 1.0, gap)
        divided = np.where(close, -1j * self.dt * f[:, None], (f[:, None] - f[None, :]) / safe_gap)
        coupling = v.conj().T @ (-mu) @ v
        return v @ (coupling * divided) @ v.conj().T

    def halved(self) -> "StepPropagator":
        return StepPropagator(eps=self.eps, dt=0.5 * self.dt, eigenvalues=self.eigenvalues, eigenvectors=self.eigenvectors)

    def unitarity_error(self) -> float:
        p = self.matrix
        return float(np.max(np.abs(p.conj().T @ p - np.eye(p.shape[0]))))


@dataclass(frozen=True, eq=False)
class RowTrajectory:
    direction: Direction
    rows: np.ndarray = field(repr=False)  # (n+1) x N x M
    grid: TimeGrid

    @property
    def initial(self) -> np.ndarray:
        return self.rows[0]

    @property
    def final(self) -> np.ndarray:
        return self.rows[-1]

    def at_node(self, j: int) -> np.ndarray:
        return self.rows[j]

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.rows, axis=-1)


def step_hamiltonian(model: SystemModel, eps_value: float) -> np.ndarray:
    return model.h0 - model.mu * float(eps_value)


@lru_cache(maxsize=16)
def _free_propagator(model: SystemModel, dt: float) -> StepPropagator:
    return StepPropagator(
        eps=0.0, dt=dt, eigenvalues=np.array(model.energies, dtype=float), eigenvectors=np.eye(model.level_count, dtype=complex)
    )


def _check_hermitian(h: np.ndarray):
    dev = np.max(np.abs(h - np.swapaxes(h, -1, -2).conj()))
    if dev > HERMITIAN_TOL:
        raise PropagationError(f"step Hamiltonian is not Hermitian (deviation {dev:.3e})")


def build_step_propagator(model: SystemModel, eps_value: float, dt: float) -> StepPropagator:
    eps_value = float(eps_value)
    if eps_value == 0.0:
        return _free_propagator(model, dt)
    h = step_hamiltonian(model, eps_value)
    _check_hermitian(h)
    w, v = np.linalg.eigh(h)
    return StepPropagator(eps=eps_value, dt=dt, eigenvalues=w, eigenvectors=v)


def build_step_propagators(model: SystemModel, field: ControlField, grid: TimeGrid) -> List[StepPropagator]:
    field.check_grid(grid)
    dt = grid.dt
    eps = np.asarray(field.samples, dtype=float)
    props: List[Optional[StepPropagator]] = [None] * grid.step_count
    active = np.nonzero(eps != 0.0)[0]
    if active.size:
        h = model.h0[None, :, :] - model.mu[None, :, :] * eps[active, None, None]
        _check_hermitian(h)
        w, v = np.linalg.eigh(h)
        for i, j in enumerate(active):
            props[j] = StepPropagator(eps=float(eps[j]), dt=dt, eigenvalues=w[i], eigenvectors=v[i])
    free = _free_propagator(model, dt)
    return [p if p is not None else free for p in props]


def _as_rows(rows, level_count: int, what: str) -> np.ndarray:
    arr = np.asarray(rows, dtype=complex)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != level_count:
        raise DimensionError(f"{what} must be vectors of dimension {level_count}, got shape {arr.shape}")
    return arr


def _resolve_propagators(model, field, grid, propagators) -> Sequence[StepPropagator]:
    if propagators is None:
        return build_step_propagators(model, field, grid)
    if len(propagators) != grid.step_count:
        raise DimensionError(f"got {len(propagators)} step propagators for {grid.step_count} steps")
    return propagators


def propagate_rows_forward(
    model: SystemModel,
    field: ControlField,
    grid: TimeGrid,
    init_rows,
    propagators: Optional[Sequence[StepPropagator]] = None,
) -> RowTrajectory:
    field.check_grid(grid)
    start = _as_rows(init_rows, model.level_count, "initial rows")
    props = _resolve_propagators(model, field, grid, propagators)
    rows = np.empty((grid.step_count + 1,) + start.shape, dtype=complex)
    rows[0] = start
    for j, prop in enumerate(props):
        rows[j + 1] = prop.apply(rows[j])
    return RowTrajectory(direction=Direction.FORWARD, rows=rows, grid=grid)


def propagate_rows_backward(
    model: SystemModel,
    field: ControlField,
    grid: TimeGrid,
    terminal_rows,
    propagators: Optional[Sequence[StepPropagator]] = None,
) -> RowTrajectory:
    field.check_grid(grid)
    end = _as_rows(terminal_rows, model.level_count, "terminal rows")
    props = _resolve_propagators(model, field, grid, propagators)
    n = grid.step_count
    rows = np.empty((n + 1,) + end.shape, dtype=complex)
    rows[n] = end
    for j in range(n - 1, -1, -1):
        rows[j] = props[j].apply_adjoint(rows[j + 1])
    return RowTrajectory(direction=Direction.BACKWARD, rows=rows, grid=grid)


def propagate_full_unitary(
    model: SystemModel,
    field: ControlField,
    grid: TimeGrid,
    propagators: Optional[Sequence[StepPropagator]] = None,
) -> np.ndarray:
    field.check_grid(grid)
    props = _resolve_propagators(model, field, grid, propagators)
    u = np.eye(model.level_count, dtype=complex)
    for prop in props:
        u = prop.matrix @ u
    return u


def evolve_state(
    model: SystemModel,
    field: ControlField,
    grid: TimeGrid,
    psi0,
    backward: bool = False,
    propagators: Optional[Sequence[StepPropagator]] = None,
) -> np.ndarray:
    """State trajectory, shape (n+1) x M. With backward=True psi0 is the state at T."""
    psi = np.asarray(psi0, dtype=complex)
    if psi.shape != (model.level_count,):
        raise DimensionError(f"state must have dimension {model.level_count}, got shape {psi.shape}")
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1.0) > NORM_TOL:
        raise PreconditionError(f"state is not normalized (|psi| = {norm:.12f})")
    if backward:
        traj = propagate_rows_backward(model, field, grid, psi[None, :], propagators)
    else:
        traj = propagate_rows_forward(model, field, grid, psi[None, :], propagators)
    return traj.rows[:, 0, :]


def identity_rows(model: SystemModel) -> np.ndarray:
    rows = np.zeros((model.relevant_dim, model.level_count), dtype=complex)
    rows[:, : model.relevant_dim] = np.eye(model.relevant_dim)
    return rows


def overlap_profile(forward: RowTrajectory, backward: RowTrajectory) -> np.ndarray:
    """c(t) = sum_k <b_k(t), u_k(t)> at every node."""
    if forward.rows.shape != backward.rows.shape:
        raise DimensionError(f"trajectory shapes differ: {forward.rows.shape} vs {backward.rows.shape}")
    return np.einsum("jkm,jkm->j", backward.rows.conj(), forward.rows)


def max_norm_drift(traj: RowTrajectory) -> float:
    drift = float(np.max(np.abs(traj.norms() - 1.0)))
    if drift > NORM_TOL:
        logger.warning(f"{traj.direction.value} trajectory row norm drift {drift:.3e}")
    return drift

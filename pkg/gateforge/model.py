import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Sequence

import numpy as np
from loguru import logger

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-12


class ModelError(Exception):
    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems) or "invalid model")


class DimensionError(Exception):
    pass


class BasisMode(str, Enum):
    ORTHONORMAL = "orthonormal"
    PHASE_CORRECTED = "phase_corrected"


@dataclass(frozen=True, eq=False)
class SystemModel:
    energies: np.ndarray
    mu: np.ndarray
    relevant_dim: int

    @classmethod
    def create(cls, energies: Sequence[float], mu, relevant_dim: int) -> "SystemModel":
        e = np.asarray(energies, dtype=float).copy()
        m = np.asarray(mu, dtype=complex).copy()
        e.setflags(write=False)
        m.setflags(write=False)
        return cls(energies=e, mu=m, relevant_dim=int(relevant_dim))

    @property
    def level_count(self) -> int:
        return int(self.energies.shape[0])

    @property
    def h0(self) -> np.ndarray:
        return np.diag(self.energies).astype(complex)

    def to_dict(self) -> dict:
        return {
            "M": self.level_count,
            "N": self.relevant_dim,
            "energies": [float(x) for x in self.energies],
            "mu": [[[float(z.real), float(z.imag)] for z in row] for row in self.mu],
        }


@dataclass(frozen=True, eq=False)
class TargetGate:
    block: np.ndarray

    @classmethod
    def create(cls, block) -> "TargetGate":
        b = np.asarray(block, dtype=complex).copy()
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise DimensionError(f"target block must be square, got shape {b.shape}")
        b.setflags(write=False)
        return cls(block=b)

    @property
    def dim(self) -> int:
        return int(self.block.shape[0])

    def unitarity_error(self) -> float:
        return float(np.max(np.abs(self.block.conj().T @ self.block - np.eye(self.dim))))

    def is_diagonal(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.block - np.diag(np.diag(self.block)))) <= tol)

    def padded_rows(self, level_count: int) -> np.ndarray:
        """Vectors O|k>, k = 1..N, zero padded to the full space (shape N x M)."""
        n = self.dim
        if level_count < n:
            raise DimensionError(f"target of dimension {n} does not fit in {level_count} levels")
        rows = np.zeros((n, level_count), dtype=complex)
        rows[:, :n] = self.block.T
        return rows

    def times_diagonal(self, phases: Sequence[float]) -> "TargetGate":
        phases = np.asarray(phases, dtype=float)
        if phases.shape != (self.dim,):
            raise DimensionError(f"expected {self.dim} phases, got {phases.shape}")
        return TargetGate.create(self.block @ np.diag(np.exp(1j * phases)))

    def to_list(self) -> list:
        return [[[float(z.real), float(z.imag)] for z in row] for row in self.block]


@dataclass(frozen=True)
class TimeGrid:
    horizon: float
    step_count: int

    def __post_init__(self):
        if not (self.step_count >= 1):
            raise DimensionError(f"step count must be >= 1, got {self.step_count}")
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise DimensionError(f"horizon must be positive and finite, got {self.horizon}")

    @property
    def dt(self) -> float:
        return self.horizon / self.step_count

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.step_count) + 0.5) * self.dt

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.step_count + 1) * self.dt

    def to_dict(self) -> dict:
        return {"T": self.horizon, "steps": self.step_count}


@dataclass(frozen=True, eq=False)
class ControlField:
    samples: np.ndarray

    @classmethod
    def create(cls, samples: Sequence[float], grid: TimeGrid = None) -> "ControlField":
        s = np.asarray(samples, dtype=float).copy()
        if s.ndim != 1:
            raise DimensionError(f"field samples must be one-dimensional, got shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("field samples must be finite")
        if grid is not None and s.shape[0] != grid.step_count:
            raise DimensionError(f"field has {s.shape[0]} samples, grid has {grid.step_count} steps")
        s.setflags(write=False)
        return cls(samples=s)

    @classmethod
    def zeros(cls, grid: TimeGrid) -> "ControlField":
        return cls.create(np.zeros(grid.step_count))

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    def check_grid(self, grid: TimeGrid):
        if len(self) != grid.step_count:
            raise DimensionError(f"field has {len(self)} samples, grid has {grid.step_count} steps")

    def fluence(self, grid: TimeGrid) -> float:
        return float(np.sum(self.samples**2) * grid.dt)

    def scaled(self, factor: float) -> "ControlField":
        return ControlField.create(self.samples * factor)

    def __sub__(self, other: "ControlField") -> "ControlField":
        return ControlField.create(self.samples - other.samples)

    def __add__(self, other: "ControlField") -> "ControlField":
        return ControlField.create(self.samples + other.samples)


@dataclass(frozen=True, eq=False)
class InitialBasis:
    mode: BasisMode
    states: np.ndarray = field(repr=False)  # shape N x M, one state per row

    @property
    def dim(self) -> int:
        return int(self.states.shape[0])

    @property
    def block(self) -> np.ndarray:
        """Relevant-subspace components as an N x N matrix, state l in column l."""
        return self.states[:, : self.dim].T

    def final_states(self, target: TargetGate) -> np.ndarray:
        if target.dim != self.dim:
            raise DimensionError(f"basis has {self.dim} states, target has dimension {target.dim}")
        finals = np.zeros_like(self.states)
        finals[:, : self.dim] = (target.block @ self.block).T
        return finals


def validate_model(model: SystemModel) -> List[str]:
    problems: List[str] = []
    m = model.level_count
    n = model.relevant_dim
    if model.energies.ndim != 1 or m < 1:
        problems.append(f"energies must be a non-empty list, got shape {model.energies.shape}")
        return problems
    bad = [k + 1 for k in range(m) if not math.isfinite(float(model.energies[k]))]
    if bad:
        problems.append(f"non-finite energy at k={bad[0]}")
    if n < 1:
        problems.append(f"N must be positive, got {n}")
    if n > m:
        problems.append(f"N exceeds M ({n} > {m})")
    if model.mu.shape != (m, m):
        problems.append(f"mu must be {m}x{m}, got shape {model.mu.shape}")
        return problems
    if not np.all(np.isfinite(model.mu)):
        problems.append("mu has non-finite entries")
        return problems
    herm = np.abs(model.mu - model.mu.conj().T)
    if herm.max() > HERMITIAN_TOL:
        j, k = np.unravel_index(int(np.argmax(herm)), herm.shape)
        problems.append(f"mu not Hermitian at ({j + 1},{k + 1}): deviation {herm[j, k]:.3e}")
    diag = np.abs(np.diag(model.mu))
    for k in np.nonzero(diag > HERMITIAN_TOL)[0]:
        problems.append(f"nonzero diagonal at k={k + 1}: |mu_kk|={diag[k]:.3e}")
    if not problems and np.any(np.diff(model.energies) < 0):
        logger.warning("energies are not sorted ascending; level labels follow the given order")
    return problems


def validate_target(model: SystemModel, target: TargetGate) -> List[str]:
    problems: List[str] = []
    if target.dim != model.relevant_dim:
        problems.append(f"target is {target.dim}x{target.dim} but N={model.relevant_dim}")
        return problems
    err = target.unitarity_error()
    if err > UNITARY_TOL:
        problems.append(f"target block is not unitary: max|O^+O - I| = {err:.3e}")
    return problems


def ensure_valid(model: SystemModel, target: TargetGate = None):
    problems = validate_model(model)
    if target is not None and not problems:
        problems += validate_target(model, target)
    if problems:
        raise ModelError(problems)


def build_initial_basis(mode, relevant_dim: int, level_count: int) -> InitialBasis:
    mode = BasisMode(mode)
    if not (1 <= relevant_dim <= level_count):
        raise DimensionError(f"need 1 <= N <= M, got N={relevant_dim}, M={level_count}")
    states = np.zeros((relevant_dim, level_count), dtype=complex)
    states[:, :relevant_dim] = np.eye(relevant_dim)
    if mode is BasisMode.PHASE_CORRECTED:
        states[-1, :relevant_dim] = 1.0 / math.sqrt(relevant_dim)
    states.setflags(write=False)
    return InitialBasis(mode=mode, states=states)


def _wrap_angle(x: float) -> float:
    # reduce to (-pi, pi]
    return math.pi - ((math.pi - x) % (2 * math.pi))


def global_phase_phi1(model: SystemModel, horizon: float, reduce: bool = True) -> float:
    if horizon < 0:
        raise ValueError(f"T must be nonnegative, got {horizon}")
    phi = float(np.sum(model.energies)) * horizon / model.level_count
    return _wrap_angle(phi) if reduce else phi


def predicted_phase_family(model: SystemModel, target: TargetGate, horizon: float) -> List[float]:
    """Global phases allowed by det U(T) when N = M and mu is traceless."""
    n = model.relevant_dim
    if n != model.level_count:
        return []
    base = global_phase_phi1(model, horizon, reduce=False) + float(np.angle(np.linalg.det(target.block))) / n
    return sorted(_wrap_angle(base + 2 * math.pi * j / n) for j in range(n))

import math
import time
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np
from loguru import logger

from .functionals import (
    ConfigurationError,
    OverlapFactors,
    delta_eps_evolution,
    delta_eps_s2s,
    eta,
    gate_fidelity,
    gradient_eta,
    gradient_tau,
    overlap_factors,
    residual_evolution,
    residual_s2s,
    tau,
    tau_from_states,
)
from .model import (
    BasisMode,
    ControlField,
    SystemModel,
    TargetGate,
    TimeGrid,
    build_initial_basis,
    global_phase_phi1,
)
from .propagation import (
    StepPropagator,
    build_step_propagator,
    build_step_propagators,
    identity_rows,
    propagate_rows_backward,
    propagate_rows_forward,
)
from .settings import settings

LOG_EVERY = 10


class DivergenceError(Exception):
    pass


class Approach(str, Enum):
    EVOLUTION = "evolution"
    STATE_TO_STATE = "state_to_state"


class Scheme(str, Enum):
    KROTOV = "krotov"
    GRADIENT = "gradient"


class StopReason(str, Enum):
    FIDELITY = "stop_fidelity"
    UPDATE_NORM = "stop_update_norm"
    MAX_ITERS = "max_iters"


@dataclass
class OptimizerConfig:
    approach: Approach = Approach.EVOLUTION
    basis_mode: BasisMode = BasisMode.PHASE_CORRECTED
    scheme: Scheme = Scheme.KROTOV
    lam: float = field(default_factory=lambda: settings.DEFAULT_LAMBDA)
    max_iters: int = field(default_factory=lambda: settings.DEFAULT_MAX_ITERS)
    stop_fidelity: float = field(default_factory=lambda: settings.DEFAULT_STOP_FIDELITY)
    stop_update_norm: float = field(default_factory=lambda: settings.DEFAULT_STOP_UPDATE_NORM)
    alpha: float = field(default_factory=lambda: settings.DEFAULT_GRADIENT_STEP)
    initial_field: Optional[ControlField] = None
    rng_seed: int = 0

    def __post_init__(self):
        try:
            self.approach = Approach(self.approach)
            self.basis_mode = BasisMode(self.basis_mode)
            self.scheme = Scheme(self.scheme)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc
        if not (self.lam > 0):
            raise ConfigurationError(f"lambda must be positive, got {self.lam}")
        if not (self.alpha > 0):
            raise ConfigurationError(f"gradient step must be positive, got {self.alpha}")
        if self.max_iters < 1:
            raise ConfigurationError(f"max_iters must be >= 1, got {self.max_iters}")
        if not (0 < self.stop_fidelity <= 1):
            raise ConfigurationError(f"stop_fidelity must lie in (0, 1], got {self.stop_fidelity}")
        if self.stop_update_norm < 0:
            raise ConfigurationError(f"stop_update_norm must be nonnegative, got {self.stop_update_norm}")

    def to_dict(self) -> dict:
        data = asdict(self)
        data.pop("initial_field")
        for key in ("approach", "basis_mode", "scheme"):
            data[key] = data[key].value
        return data


@dataclass
class IterationRecord:
    iteration: int
    re_tau: float
    abs_tau: float
    fidelity: float
    eta: float
    fluence: float
    update_norm: float
    wall_ms: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class OptimizationTrace:
    records: List[IterationRecord] = field(default_factory=list)

    def append(self, record: IterationRecord):
        self.records.append(record)

    @property
    def last(self) -> IterationRecord:
        return self.records[-1]

    @property
    def completed_iterations(self) -> int:
        return max(len(self.records) - 1, 0)

    def objective_values(self, approach: Approach) -> np.ndarray:
        key = "re_tau" if Approach(approach) is Approach.EVOLUTION else "eta"
        return np.array([getattr(r, key) for r in self.records])

    def worst_decrease(self, approach: Approach) -> float:
        values = self.objective_values(approach)
        if len(values) < 2:
            return 0.0
        return float(max(0.0, -np.min(np.diff(values))))


@dataclass
class OptimizationResult:
    field: ControlField
    trace: OptimizationTrace
    stop_reason: StopReason
    residual_evolution: float
    residual_s2s: float
    realized_phase: float
    phi1: float
    config: OptimizerConfig

    @property
    def fidelity(self) -> float:
        return self.trace.last.fidelity

    def summary(self) -> dict:
        last = self.trace.last
        return {
            "iterations": self.trace.completed_iterations,
            "stop_reason": self.stop_reason.value,
            "re_tau": last.re_tau,
            "abs_tau": last.abs_tau,
            "fidelity": last.fidelity,
            "eta": last.eta,
            "fluence": last.fluence,
            "residual_evolution": self.residual_evolution,
            "residual_s2s": self.residual_s2s,
            "realized_phase": self.realized_phase,
            "phi1": self.phi1,
            "config": self.config.to_dict(),
        }


def sin2_envelope(t, horizon: float):
    return np.sin(np.pi * np.asarray(t) / horizon) ** 2


def transition_frequencies(model: SystemModel) -> np.ndarray:
    def _gaps(levels: np.ndarray) -> np.ndarray:
        diffs = np.abs(levels[:, None] - levels[None, :])[np.triu_indices(len(levels), k=1)]
        return np.unique(np.round(diffs[diffs > 1e-12], 12))

    freqs = _gaps(model.energies[: model.relevant_dim])
    if freqs.size == 0:
        freqs = _gaps(model.energies)
    return freqs


def default_initial_guess(model: SystemModel, grid: TimeGrid, seed: int, fluence: Optional[float] = None) -> ControlField:
    fluence = settings.GUESS_FLUENCE if fluence is None else fluence
    rng = np.random.default_rng(seed)
    freqs = transition_frequencies(model)
    t = grid.midpoints
    if freqs.size == 0:
        shape = np.ones_like(t)
    else:
        phases = rng.uniform(0.0, 2 * np.pi, size=freqs.size)
        shape = np.cos(np.outer(t, freqs) + phases).sum(axis=1)
    shape = shape * sin2_envelope(t, grid.horizon)
    norm = float(np.sum(shape**2) * grid.dt)
    if norm <= 0:
        return ControlField.zeros(grid)
    return ControlField.create(shape * math.sqrt(fluence / norm), grid)


class _Problem:
    """Boundary data and objective evaluation for one approach."""

    def __init__(self, model: SystemModel, target: TargetGate, config: OptimizerConfig):
        self.model = model
        self.target = target
        self.config = config
        self.approach = config.approach
        if self.approach is Approach.EVOLUTION:
            self.basis = build_initial_basis(BasisMode.ORTHONORMAL, model.relevant_dim, model.level_count)
            self.initial = identity_rows(model)
        else:
            self.basis = build_initial_basis(config.basis_mode, model.relevant_dim, model.level_count)
            self.initial = np.array(self.basis.states)
        self.finals = self.basis.final_states(target)

    def weights(self, forward_final: np.ndarray) -> Optional[np.ndarray]:
        if self.approach is Approach.EVOLUTION:
            return None
        return overlap_factors(forward_final, self.finals).values

    def correction(self, forward_rows, backward_rows, weights) -> float:
        if self.approach is Approach.EVOLUTION:
            return float(delta_eps_evolution(forward_rows, backward_rows, self.model.mu, self.config.lam))
        return float(delta_eps_s2s(forward_rows, backward_rows, OverlapFactors(weights), self.model.mu, self.config.lam))

    def record(self, iteration: int, forward_final: np.ndarray, field_: ControlField, grid: TimeGrid, update_norm: float, wall_ms: float) -> IterationRecord:
        if self.approach is Approach.EVOLUTION:
            t = tau(self.target, forward_final)
        else:
            t = tau_from_states(self.target, self.basis, forward_final)
        e = eta(self.finals, forward_final)
        return IterationRecord(
            iteration=iteration,
            re_tau=t.real,
            abs_tau=t.modulus,
            fidelity=gate_fidelity(t),
            eta=e,
            fluence=field_.fluence(grid),
            update_norm=update_norm,
            wall_ms=wall_ms,
        )

    def objective_fidelity(self, rec: IterationRecord) -> float:
        if self.approach is Approach.EVOLUTION:
            return rec.fidelity
        return rec.eta / self.model.relevant_dim

    def objective(self, rec: IterationRecord) -> float:
        return rec.re_tau if self.approach is Approach.EVOLUTION else rec.eta


def _gain(backward_next: np.ndarray, forward_now: np.ndarray, p_new: StepPropagator, p_old: StepPropagator, weights) -> float:
    diff = p_new.matrix - p_old.matrix
    per_row = np.einsum("km,mn,kn->k", backward_next.conj(), diff, forward_now)
    if weights is not None:
        per_row = per_row * weights
    return float(per_row.sum().real)


def _krotov_sweep(problem: _Problem, grid: TimeGrid, samples: np.ndarray, props: List[StepPropagator], forward_final: np.ndarray, iteration: int):
    model = problem.model
    backward = propagate_rows_backward(model, ControlField.create(samples), grid, problem.finals, props)
    weights = problem.weights(forward_final)
    new_samples = samples.copy()
    new_props = list(props)
    rows = np.array(problem.initial)
    halvings = settings.SAFEGUARD_HALVINGS
    for j in range(grid.step_count):
        delta = problem.correction(rows, backward.rows[j], weights)
        if not math.isfinite(delta):
            raise DivergenceError(f"non-finite field correction at iteration {iteration}, interval {j}; try a larger lambda")
        if delta != 0.0:
            old = props[j]
            p_new = build_step_propagator(model, samples[j] + delta, grid.dt)
            attempts = 0
            while _gain(backward.rows[j + 1], rows, p_new, old, weights) < 0.0:
                attempts += 1
                if attempts > halvings:
                    delta = 0.0
                    p_new = old
                    break
                delta *= 0.5
                p_new = build_step_propagator(model, samples[j] + delta, grid.dt)
            new_samples[j] = samples[j] + delta
            new_props[j] = p_new
        rows = new_props[j].apply(rows)
        if not np.all(np.isfinite(rows)):
            raise DivergenceError(f"non-finite state at iteration {iteration}, interval {j}; try a larger lambda")
    return new_samples, new_props, rows


def _gradient_step(problem: _Problem, grid: TimeGrid, samples: np.ndarray, props: List[StepPropagator], iteration: int):
    model = problem.model
    current = ControlField.create(samples)
    if problem.approach is Approach.EVOLUTION:
        grad = gradient_tau(model, current, grid, problem.target, props)
    else:
        grad = gradient_eta(model, current, grid, problem.target, problem.basis, props)
    new_samples = samples + problem.config.alpha * grad / grid.dt
    if not np.all(np.isfinite(new_samples)):
        raise DivergenceError(f"non-finite field at iteration {iteration}; try a smaller gradient step")
    new_props = build_step_propagators(model, ControlField.create(new_samples), grid)
    rows = propagate_rows_forward(model, ControlField.create(new_samples), grid, problem.initial, new_props).final
    return new_samples, new_props, rows


def optimize(model: SystemModel, target: TargetGate, grid: TimeGrid, config: OptimizerConfig) -> OptimizationResult:
    initial_field = config.initial_field
    if initial_field is None:
        initial_field = default_initial_guess(model, grid, config.rng_seed)
    initial_field.check_grid(grid)
    problem = _Problem(model, target, config)

    logger.info(
        f"Optimizing {config.approach.value} objective with {config.scheme.value} scheme "
        f"(M={model.level_count}, N={model.relevant_dim}, T={grid.horizon}, n={grid.step_count}, lambda={config.lam})"
    )
    samples = np.array(initial_field.samples, dtype=float)
    tic = time.perf_counter()
    props = build_step_propagators(model, initial_field, grid)
    forward_final = propagate_rows_forward(model, initial_field, grid, problem.initial, props).final
    trace = OptimizationTrace()
    trace.append(problem.record(0, forward_final, initial_field, grid, 0.0, (time.perf_counter() - tic) * 1000))

    stop_reason = StopReason.MAX_ITERS
    for iteration in range(1, config.max_iters + 1):
        tic = time.perf_counter()
        if config.scheme is Scheme.KROTOV:
            new_samples, props, forward_final = _krotov_sweep(problem, grid, samples, props, forward_final, iteration)
        else:
            new_samples, props, forward_final = _gradient_step(problem, grid, samples, props, iteration)
        update_norm = float(np.sum((new_samples - samples) ** 2) * grid.dt)
        samples = new_samples
        current = ControlField.create(samples)
        rec = problem.record(iteration, forward_final, current, grid, update_norm, (time.perf_counter() - tic) * 1000)
        trace.append(rec)
        if iteration % LOG_EVERY == 0 or iteration == 1:
            logger.info(
                f"iter {iteration}: Re tau={rec.re_tau:.6f} |tau|/N={rec.fidelity:.6f} eta={rec.eta:.6f} "
                f"update={rec.update_norm:.3e}"
            )
        else:
            logger.debug(f"iter {iteration}: fidelity={rec.fidelity:.8f} update={rec.update_norm:.3e}")
        if update_norm <= config.stop_update_norm:
            stop_reason = StopReason.UPDATE_NORM
            break
        if problem.objective_fidelity(rec) >= config.stop_fidelity:
            stop_reason = StopReason.FIDELITY
            break

    final_field = ControlField.create(samples, grid)
    res_evo = residual_evolution(model, final_field, grid, target, props)
    s2s_basis = problem.basis if config.approach is Approach.STATE_TO_STATE else build_initial_basis(
        config.basis_mode, model.relevant_dim, model.level_count
    )
    res_s2s = residual_s2s(model, final_field, grid, target, s2s_basis, props)
    final_tau = tau(target, propagate_rows_forward(model, final_field, grid, identity_rows(model), props).final)
    logger.info(
        f"Stopped after {trace.completed_iterations} iterations ({stop_reason.value}): "
        f"fidelity={trace.last.fidelity:.8f} residual_evolution={res_evo:.3e} residual_s2s={res_s2s:.3e}"
    )
    return OptimizationResult(
        field=final_field,
        trace=trace,
        stop_reason=stop_reason,
        residual_evolution=res_evo,
        residual_s2s=res_s2s,
        realized_phase=final_tau.realized_phase,
        phi1=global_phase_phi1(model, grid.horizon),
        config=config,
    )

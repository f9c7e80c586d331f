from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import ControlField, DimensionError, InitialBasis, SystemModel, TargetGate, TimeGrid
from .propagation import (
    RowTrajectory,
    StepPropagator,
    build_step_propagators,
    identity_rows,
    propagate_rows_backward,
    propagate_rows_forward,
)

BOUND_SLACK = 1e-9


class ConfigurationError(Exception):
    pass


@dataclass(frozen=True)
class TauValue:
    value: complex
    subspace_dim: int

    @property
    def real(self) -> float:
        return float(self.value.real)

    @property
    def modulus(self) -> float:
        return float(abs(self.value))

    @property
    def realized_phase(self) -> float:
        """Global phase phi with U = exp(-i phi) O, read off as -arg(tau)."""
        return float(-np.angle(self.value))

    def to_dict(self) -> dict:
        return {"re": float(self.value.real), "im": float(self.value.imag), "abs": self.modulus, "N": self.subspace_dim}


@dataclass(frozen=True, eq=False)
class OverlapFactors:
    values: np.ndarray  # c_l = <psi_il(T)|phi_fl>

    @classmethod
    def ones(cls, n: int) -> "OverlapFactors":
        return cls(values=np.ones(n, dtype=complex))

    def __len__(self) -> int:
        return int(self.values.shape[0])


def _check_lambda(lam: float):
    if not (lam > 0):
        raise ConfigurationError(f"lambda must be positive, got {lam}")


def _pair_shapes(a: np.ndarray, b: np.ndarray, what: str):
    if a.shape != b.shape:
        raise DimensionError(f"{what}: shapes differ ({a.shape} vs {b.shape})")


def tau(target: TargetGate, forward_rows_at_T) -> TauValue:
    rows = np.asarray(forward_rows_at_T, dtype=complex)
    if rows.ndim != 2 or rows.shape[0] != target.dim:
        raise DimensionError(f"expected {target.dim} rows, got shape {rows.shape}")
    goal = target.padded_rows(rows.shape[1])
    return TauValue(value=complex(np.sum(goal.conj() * rows)), subspace_dim=target.dim)


def identity_rows_from_states(basis: InitialBasis, evolved) -> np.ndarray:
    """Rows U|k> recovered from states U|phi_il> for a basis spanning the relevant subspace."""
    states = np.asarray(evolved, dtype=complex)
    if states.shape[0] != basis.dim:
        raise DimensionError(f"expected {basis.dim} states, got shape {states.shape}")
    return np.linalg.solve(basis.block.T, states)


def tau_from_states(target: TargetGate, basis: InitialBasis, evolved_at_T) -> TauValue:
    return tau(target, identity_rows_from_states(basis, evolved_at_T))


def gate_fidelity(value: TauValue) -> float:
    return float(min(max(value.modulus / value.subspace_dim, 0.0), 1.0))


def overlap_factors(evolved_at_T, final_targets) -> OverlapFactors:
    psi = np.asarray(evolved_at_T, dtype=complex)
    phi = np.asarray(final_targets, dtype=complex)
    _pair_shapes(psi, phi, "overlap factors")
    return OverlapFactors(values=np.einsum("lm,lm->l", psi.conj(), phi))


def eta(final_targets, evolved_at_T) -> float:
    return float(np.sum(np.abs(overlap_factors(evolved_at_T, final_targets).values) ** 2))


def coupling_elements(forward_rows, backward_rows, mu: np.ndarray, weights: Optional[np.ndarray] = None):
    """sum_k w_k <b_k| mu |u_k> for rows of shape (..., N, M); one value per leading index."""
    u = np.asarray(forward_rows, dtype=complex)
    b = np.asarray(backward_rows, dtype=complex)
    _pair_shapes(u, b, "co-located rows")
    per_row = np.einsum("...km,mn,...kn->...k", b.conj(), mu, u)
    if weights is not None:
        per_row = per_row * np.asarray(weights)
    return per_row.sum(axis=-1)


def delta_eps_evolution(forward_rows, backward_rows, mu: np.ndarray, lam: float):
    _check_lambda(lam)
    return -coupling_elements(forward_rows, backward_rows, mu).imag / (2.0 * lam)


def delta_eps_s2s(forward_states, backward_states, overlaps: OverlapFactors, mu: np.ndarray, lam: float):
    _check_lambda(lam)
    if len(overlaps) != np.asarray(forward_states).shape[-2]:
        raise DimensionError(f"{len(overlaps)} overlap factors for {np.asarray(forward_states).shape[-2]} states")
    return -coupling_elements(forward_states, backward_states, mu, overlaps.values).imag / lam


def _evolution_trajectories(model, field, grid, target, propagators):
    props = propagators if propagators is not None else build_step_propagators(model, field, grid)
    fw = propagate_rows_forward(model, field, grid, identity_rows(model), props)
    bw = propagate_rows_backward(model, field, grid, target.padded_rows(model.level_count), props)
    return fw, bw


def _s2s_trajectories(model, field, grid, target, basis, propagators):
    props = propagators if propagators is not None else build_step_propagators(model, field, grid)
    finals = basis.final_states(target)
    fw = propagate_rows_forward(model, field, grid, basis.states, props)
    bw = propagate_rows_backward(model, field, grid, finals, props)
    return fw, bw, overlap_factors(fw.final, finals)


def evolution_residual_profile(
    model: SystemModel,
    field: ControlField,
    grid: TimeGrid,
    target: TargetGate,
    propagators: Optional[Sequence[StepPropagator]] = None,
) -> np.ndarray:
    fw, bw = _evolution_trajectories(model, field, grid, target, propagators)
    return np.abs(coupling_elements(fw.rows, bw.rows, model.mu).imag)


def s2s_residual_profile(
    model: SystemModel,
    field: ControlField,
    grid: TimeGrid,
    target: TargetGate,
    basis: InitialBasis,
    propagators: Optional[Sequence[StepPropagator]] = None,
) -> np.ndarray:
    fw, bw, overlaps = _s2s_trajectories(model, field, grid, target, basis, propagators)
    return np.abs(coupling_elements(fw.rows, bw.rows, model.mu, overlaps.values).imag)


def residual_evolution(model, field, grid, target, propagators=None) -> float:
    return float(np.max(evolution_residual_profile(model, field, grid, target, propagators)))


def residual_s2s(model, field, grid, target, basis, propagators=None) -> float:
    return float(np.max(s2s_residual_profile(model, field, grid, target, basis, propagators)))


def _interval_derivatives(model, props, forward: RowTrajectory, backward: RowTrajectory, weights=None) -> np.ndarray:
    grads = np.empty(len(props))
    for j, prop in enumerate(props):
        d = prop.derivative(model.mu)
        per_row = np.einsum("km,mn,kn->k", backward.rows[j + 1].conj(), d, forward.rows[j])
        if weights is not None:
            per_row = per_row * weights
        grads[j] = per_row.sum().real
    return grads


def gradient_tau(model, field, grid, target, propagators=None) -> np.ndarray:
    """d(Re tau)/d(eps_j) for every interval j."""
    props = propagators if propagators is not None else build_step_propagators(model, field, grid)
    fw, bw = _evolution_trajectories(model, field, grid, target, props)
    return _interval_derivatives(model, props, fw, bw)


def gradient_eta(model, field, grid, target, basis, propagators=None) -> np.ndarray:
    """d(eta)/d(eps_j) for every interval j."""
    props = propagators if propagators is not None else build_step_propagators(model, field, grid)
    fw, bw, overlaps = _s2s_trajectories(model, field, grid, target, basis, props)
    return 2.0 * _interval_derivatives(model, props, fw, bw, overlaps.values)


def _midpoint_couplings(model, props, forward: RowTrajectory, backward: RowTrajectory, weights=None) -> np.ndarray:
    # rows half a step into each interval, from both ends
    values = np.empty(len(props), dtype=complex)
    for j, prop in enumerate(props):
        half = prop.halved()
        values[j] = coupling_elements(half.apply(forward.rows[j]), half.apply_adjoint(backward.rows[j + 1]), model.mu, weights)
    return values


def integrand_gradient_tau(model, field, grid, target, propagators=None) -> np.ndarray:
    """dt * (-Im sum_k <k|B mu U|k>) at each interval midpoint."""
    props = propagators if propagators is not None else build_step_propagators(model, field, grid)
    fw, bw = _evolution_trajectories(model, field, grid, target, props)
    return -grid.dt * _midpoint_couplings(model, props, fw, bw).imag


def integrand_gradient_eta(model, field, grid, target, basis, propagators=None) -> np.ndarray:
    props = propagators if propagators is not None else build_step_propagators(model, field, grid)
    fw, bw, overlaps = _s2s_trajectories(model, field, grid, target, basis, props)
    return -2.0 * grid.dt * _midpoint_couplings(model, props, fw, bw, overlaps.values).imag


def evaluate_tau(model, field, grid, target, propagators=None) -> TauValue:
    fw = propagate_rows_forward(model, field, grid, identity_rows(model), propagators)
    return tau(target, fw.final)


def evaluate_eta(model, field, grid, target, basis, propagators=None) -> float:
    fw = propagate_rows_forward(model, field, grid, basis.states, propagators)
    return eta(basis.final_states(target), fw.final)

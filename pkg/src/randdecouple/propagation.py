"""
Time-ordered propagators in the physical, logical and logical-interaction frames.

Each control interval is split into ``substeps_per_interval`` substeps of width
``h`` and the propagator is advanced with the exponential midpoint rule
``U <- exp(-i H(t_mid) h) U`` (second order). In the physical frame the
control kick ``g_j g_{j-1}^dag`` is inserted at the start of interval ``j``
(with ``g_{-1} = I``), so ``U(0^+) = U_c(0)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedConfigurationError
from .operators import as_density, as_pure_state, expm_hermitian, partial_trace_env
from .protocols import (
    ControlPath,
    _logical_hamiltonian,
    _logical_interaction_hamiltonian,
    env_propagator,
)
from .system import OpenSystemSpec, drift_at

FRAMES = ("physical", "logical", "logical_interaction")
SCHEMES = ("midpoint", "exact_piecewise")


@dataclass(frozen=True)
class IntegratorConfig:
    substeps_per_interval: int = 16
    scheme: str = "midpoint"

    def __post_init__(self):
        if int(self.substeps_per_interval) < 1:
            raise ValueError("substeps_per_interval must be >= 1")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")


DEFAULT_INTEGRATOR = IntegratorConfig()


def _frame_hamiltonian(spec, g, t, frame):
    if frame == "physical":
        return drift_at(spec, t)
    if frame == "logical":
        return _logical_hamiltonian(spec, g, t)
    return _logical_interaction_hamiltonian(spec, g, t)


def _steps(spec: OpenSystemSpec, frame: str, cfg: IntegratorConfig) -> int:
    if cfg.scheme == "exact_piecewise":
        if frame == "logical_interaction" or not spec.is_time_independent:
            raise UnsupportedConfigurationError(
                "exact_piecewise needs a time-independent spec in the physical or logical frame"
            )
        return 1
    if spec.is_time_independent and frame != "logical_interaction":
        # frame Hamiltonian is constant on each interval: one step is exact
        return 1
    return int(cfg.substeps_per_interval)


def propagate(
    spec: OpenSystemSpec,
    path: ControlPath,
    frame: str = "logical",
    cfg: IntegratorConfig = DEFAULT_INTEGRATOR,
    start: int = 0,
    stop: int | None = None,
) -> np.ndarray:
    """Joint propagator over intervals ``start .. stop-1`` in the given frame.

    With the defaults this is ``U(T)``, ``U~(T)`` or ``U~'(T)``.
    """
    if frame not in FRAMES:
        raise ValueError(f"frame must be one of {FRAMES}")
    if spec.d_S != path.group.dim:
        raise ValueError("system and group dimensions differ")
    stop = path.n_intervals if stop is None else stop
    if not 0 <= start <= stop <= path.n_intervals:
        raise ValueError("bad interval range")
    n_sub = _steps(spec, frame, cfg)
    dt = path.delta_t
    h = dt / n_sub
    eye_e = np.eye(spec.d_E)
    u = np.eye(spec.dim, dtype=complex)
    for j in range(start, stop):
        g = path.element(j)
        if frame == "physical":
            g_prev = path.element(j - 1) if j > 0 else np.eye(spec.d_S)
            u = np.kron(g @ g_prev.conj().T, eye_e) @ u
        for s in range(n_sub):
            t_mid = j * dt + (s + 0.5) * h
            u = expm_hermitian(_frame_hamiltonian(spec, g, t_mid, frame), h) @ u
    return u


def verify_frame_relation(
    spec: OpenSystemSpec, path: ControlPath, cfg: IntegratorConfig = DEFAULT_INTEGRATOR
) -> float:
    """``max(||U - U_c U~||_2, ||U - U_c U_E U~'||_2)`` at the final time."""
    T = path.horizon
    u_phys = propagate(spec, path, "physical", cfg)
    u_log = propagate(spec, path, "logical", cfg)
    u_int = propagate(spec, path, "logical_interaction", cfg)
    u_c = np.kron(path.element(path.n_intervals - 1), np.eye(spec.d_E))
    u_e = np.kron(np.eye(spec.d_S), env_propagator(spec, T))
    dev1 = np.linalg.norm(u_phys - u_c @ u_log, 2)
    dev2 = np.linalg.norm(u_phys - u_c @ u_e @ u_int, 2)
    return float(max(dev1, dev2))


def evolve_reduced_logical_state(
    spec: OpenSystemSpec,
    path: ControlPath,
    initial,
    env_state,
    cfg: IntegratorConfig = DEFAULT_INTEGRATOR,
) -> np.ndarray:
    """``tr_E(U~(T) (pi_S (x) rho_E) U~(T)^dag)``."""
    psi = as_pure_state(initial)
    rho_e = as_density(env_state, "environment state")
    if psi.size != spec.d_S or rho_e.shape[0] != spec.d_E:
        raise ValueError("state dimensions do not match the system")
    u = propagate(spec, path, "logical", cfg)
    rho = np.kron(np.outer(psi, psi.conj()), rho_e)
    out = partial_trace_env(u @ rho @ u.conj().T, spec.d_S, spec.d_E)
    return 0.5 * (out + out.conj().T)


def interval_propagators(
    spec: OpenSystemSpec,
    group,
    delta_t: float,
    n_intervals: int,
    cfg: IntegratorConfig = DEFAULT_INTEGRATOR,
) -> np.ndarray:
    """Logical-frame propagators of every (interval, group element) pair.

    Returns an array ``V`` of shape ``(n_j, |G|, D, D)`` with
    ``V[j, l] = (g_l^dag (x) I) W_j (g_l (x) I)`` where ``W_j`` is the
    uncontrolled propagator over interval ``j``. For time-independent specs
    ``n_j == 1`` and the single row applies to every interval.
    """
    n_sub = _steps(spec, "logical", cfg)
    h = delta_t / n_sub
    rows = 1 if spec.is_time_independent else n_intervals
    gs = np.array([np.kron(g, np.eye(spec.d_E)) for g in group.stack])
    out = np.empty((rows, len(gs), spec.dim, spec.dim), dtype=complex)
    for j in range(rows):
        w = np.eye(spec.dim, dtype=complex)
        for s in range(n_sub):
            w = expm_hermitian(drift_at(spec, j * delta_t + (s + 0.5) * h), h) @ w
        out[j] = gs.conj().transpose(0, 2, 1) @ w @ gs
    return out

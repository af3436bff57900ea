"""
Open-system drift Hamiltonians.

The joint drift is

    H(t) = H_S(t) (x) I_E + I_S (x) H_E + sum_a J_a(t) (x) B_a

with every time dependence factored as a constant operator times a scalar
:class:`Envelope`. The interaction part is ``H(t) - I_S (x) H_E``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .operators import (
    as_hermitian,
    pauli_string,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    two_norm,
)

TRACELESS_TOL = 1e-12
MAX_ENV_QUBITS = 5
K_SAFETY_FACTOR = 1.05


@dataclass(frozen=True)
class Envelope:
    """Scalar time profile.

    ``constant``: ``amplitude``; ``sinusoid``: ``amplitude * sin(frequency*t + phase)``
    (``frequency`` is angular); ``piecewise_linear_table``: linear interpolation
    through ``table`` of ``(time, value)`` pairs.
    """

    kind: str = "constant"
    amplitude: float = 1.0
    frequency: float = 0.0
    phase: float = 0.0
    table: tuple = ()

    def __post_init__(self):
        if self.kind not in ("constant", "sinusoid", "piecewise_linear_table"):
            raise ValueError(f"unknown envelope kind {self.kind!r}")
        if self.kind == "piecewise_linear_table":
            tab = np.asarray(self.table, dtype=float)
            if tab.ndim != 2 or tab.shape[1] != 2 or tab.shape[0] < 2:
                raise ValueError("piecewise_linear_table needs at least two (time, value) rows")
            if np.any(np.diff(tab[:, 0]) <= 0):
                raise ValueError("piecewise_linear_table breakpoints must be strictly increasing")
            object.__setattr__(self, "table", tuple(map(tuple, tab)))

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    def __call__(self, t: float) -> float:
        if self.kind == "constant":
            return self.amplitude
        if self.kind == "sinusoid":
            return self.amplitude * float(np.sin(self.frequency * t + self.phase))
        tab = np.asarray(self.table)
        return float(np.interp(t, tab[:, 0], tab[:, 1]))

    def check_span(self, horizon: float) -> None:
        if self.kind == "piecewise_linear_table":
            t0, t1 = self.table[0][0], self.table[-1][0]
            if t0 > 0 or t1 < horizon:
                raise ValueError(f"envelope table spans [{t0}, {t1}], needs [0, {horizon}]")

    @classmethod
    def from_config(cls, cfg: dict | None) -> "Envelope":
        if cfg is None:
            return cls()
        cfg = dict(cfg)
        unknown = set(cfg) - {"kind", "amplitude", "frequency", "phase", "table"}
        if unknown:
            raise ValueError(f"unknown envelope fields {sorted(unknown)}")
        return cls(**cfg)


CONSTANT = Envelope()


@dataclass(frozen=True)
class OpenSystemSpec:
    """Drift Hamiltonian decomposition on ``H_S (x) H_E``.

    ``system_terms`` is a sequence of ``(operator_S, envelope)``;
    ``couplings`` a sequence of ``(J_a, envelope, B_a)``.
    """

    d_S: int
    d_E: int
    system_terms: tuple = ()
    env_hamiltonian: np.ndarray | None = None
    couplings: tuple = ()

    def __post_init__(self):
        d_S, d_E = int(self.d_S), int(self.d_E)
        if d_S < 1 or d_E < 1:
            raise ValueError("dimensions must be positive")
        eye = np.eye(d_S)
        terms = []
        for i, (op, env) in enumerate(self.system_terms):
            h = _checked(op, d_S, f"system_terms[{i}]")
            # trace part is a global phase on S
            h = h - np.trace(h) / d_S * eye
            terms.append((_frozen(h), env))
        h_e = np.zeros((d_E, d_E), complex) if self.env_hamiltonian is None else self.env_hamiltonian
        h_e = _checked(h_e, d_E, "env_hamiltonian")
        coups = []
        for i, (j_op, env, b_op) in enumerate(self.couplings):
            j_op = _checked(j_op, d_S, f"couplings[{i}].J")
            if abs(np.trace(j_op)) > TRACELESS_TOL:
                raise ValueError(f"coupling operator couplings[{i}].J is not traceless")
            b_op = _checked(b_op, d_E, f"couplings[{i}].B")
            coups.append((_frozen(j_op), env, _frozen(b_op)))
        object.__setattr__(self, "d_S", d_S)
        object.__setattr__(self, "d_E", d_E)
        object.__setattr__(self, "system_terms", tuple(terms))
        object.__setattr__(self, "env_hamiltonian", _frozen(h_e))
        object.__setattr__(self, "couplings", tuple(coups))

    @property
    def dim(self) -> int:
        return self.d_S * self.d_E

    @property
    def is_time_independent(self) -> bool:
        return all(env.is_constant for _, env in self.system_terms) and all(
            env.is_constant for _, env, _ in self.couplings
        )

    def envelopes(self):
        yield from (env for _, env in self.system_terms)
        yield from (env for _, env, _ in self.couplings)

    def system_hamiltonian_at(self, t: float) -> np.ndarray:
        out = np.zeros((self.d_S, self.d_S), complex)
        for op, env in self.system_terms:
            out += env(t) * op
        return out

    def coupling_operators_at(self, t: float) -> list[tuple[np.ndarray, np.ndarray]]:
        """``[(J_a(t), B_a), ...]``."""
        return [(env(t) * j_op, b_op) for j_op, env, b_op in self.couplings]


def _checked(op, dim, name) -> np.ndarray:
    h = as_hermitian(op, name)
    if h.shape[0] != dim:
        raise ValueError(f"{name} has dimension {h.shape[0]}, expected {dim}")
    return 0.5 * (h + h.conj().T)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def interaction_at(spec: OpenSystemSpec, t: float) -> np.ndarray:
    """``H_S(t) (x) I_E + sum_a J_a(t) (x) B_a``."""
    out = np.kron(spec.system_hamiltonian_at(t), np.eye(spec.d_E))
    for j_op, b_op in spec.coupling_operators_at(t):
        out += np.kron(j_op, b_op)
    return out


def drift_at(spec: OpenSystemSpec, t: float) -> np.ndarray:
    """Full joint drift Hamiltonian at time ``t``."""
    return interaction_at(spec, t) + np.kron(np.eye(spec.d_S), spec.env_hamiltonian)


@dataclass(frozen=True)
class StrengthBound:
    k: float
    grid_points: int
    horizon: float


def estimate_k(spec: OpenSystemSpec, horizon: float, grid_points: int = 1001) -> StrengthBound:
    """Uniform bound on ``||interaction_at(t)||_2`` over ``[0, horizon]``.

    Exact for time-independent specs; otherwise the grid maximum times 1.05.
    """
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    if spec.is_time_independent:
        return StrengthBound(two_norm(interaction_at(spec, 0.0)), grid_points, horizon)
    for env in spec.envelopes():
        env.check_span(horizon)
    ts = np.linspace(0.0, horizon, grid_points)
    k = max(two_norm(interaction_at(spec, t)) for t in ts)
    return StrengthBound(K_SAFETY_FACTOR * k, grid_points, horizon)


def random_hermitian(rng: np.random.Generator, dim: int, norm: float) -> np.ndarray:
    """Gaussian random Hermitian matrix rescaled to the given 2-norm."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = 0.5 * (g + g.conj().T)
    if norm == 0:
        return np.zeros((dim, dim), complex)
    return h * (norm / two_norm(h))


def spin_bath_hamiltonian(frequencies: Sequence[float]) -> np.ndarray:
    """``sum_j w_j sigma_z^(j)`` on ``len(frequencies)`` qubits."""
    n = len(frequencies)
    out = np.zeros((2**n, 2**n), complex)
    for j, w in enumerate(frequencies):
        label = "I" * j + "Z" + "I" * (n - j - 1)
        out += w * pauli_string(label)
    return out


def build_spin_bath(
    spec_seed: int,
    n_env_qubits: int,
    coupling_norms: Sequence[float],
    env_frequencies: Sequence[float],
    *,
    omega0: float = 0.0,
    coupling_operators: Sequence[np.ndarray] | None = None,
    system_hamiltonian: np.ndarray | None = None,
    envelopes: Sequence[Envelope] | None = None,
) -> OpenSystemSpec:
    """Qubit (or general system) coupled to a finite spin bath.

    ``H_E = sum_j w_j sigma_z^(j)``. Coupling ``a`` pairs the system operator
    ``coupling_operators[a]`` (default ``sigma_x, sigma_y, sigma_z``) with a
    seeded random Hermitian ``B_a`` of 2-norm ``coupling_norms[a]``. The system
    Hamiltonian defaults to ``omega0 * sigma_z``. The result is a deterministic
    function of ``spec_seed``.
    """
    if n_env_qubits < 1 or n_env_qubits > MAX_ENV_QUBITS:
        raise ValueError(f"n_env_qubits must be in [1, {MAX_ENV_QUBITS}], got {n_env_qubits}")
    if len(env_frequencies) != n_env_qubits:
        raise ValueError("need one frequency per environment qubit")
    if coupling_operators is None:
        coupling_operators = (SIGMA_X, SIGMA_Y, SIGMA_Z)[: len(coupling_norms)]
        if len(coupling_norms) > 3:
            raise ValueError("default coupling operators only cover three couplings")
    if len(coupling_operators) != len(coupling_norms):
        raise ValueError("coupling_operators and coupling_norms differ in length")
    if envelopes is None:
        envelopes = [CONSTANT] * len(coupling_norms)
    d_S = np.asarray(coupling_operators[0]).shape[0] if coupling_operators else 2
    d_E = 2**n_env_qubits
    rng = np.random.default_rng(spec_seed)
    couplings = []
    for j_op, env, nrm in zip(coupling_operators, envelopes, coupling_norms):
        if nrm < 0:
            raise ValueError("coupling norms must be nonnegative")
        couplings.append((j_op, env, random_hermitian(rng, d_E, float(nrm))))
    if system_hamiltonian is None:
        system_terms = [(omega0 * SIGMA_Z, CONSTANT)] if d_S == 2 else []
    else:
        system_terms = [(system_hamiltonian, CONSTANT)]
    return OpenSystemSpec(
        d_S=d_S,
        d_E=d_E,
        system_terms=tuple(system_terms),
        env_hamiltonian=spin_bath_hamiltonian(env_frequencies),
        couplings=tuple(couplings),
    )

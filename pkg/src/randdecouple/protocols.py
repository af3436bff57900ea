"""
Bang-bang control paths and frame Hamiltonians.

A control path is piecewise constant: on interval ``j`` (``t in [j dt, (j+1) dt)``)
the control propagator equals ``group.elements[element_indices[j]]``.

Random paths use numpy's Philox4x64 counter-based generator. The key is
derived from the master seed via ``SeedSequence``; realization ``r`` reads
the stream starting at counter ``(0, 0, 0, r)`` and interval ``j`` takes the
``j``-th draw of that stream. Streams of different realizations are
``2**192`` blocks apart, so realizations can be generated in any order or
in parallel with identical results.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import UnsupportedConfigurationError
from .groups import DecouplingGroup
from .system import OpenSystemSpec

KINDS = ("free", "cyclic", "random")


@dataclass(frozen=True)
class ProtocolSpec:
    """Protocol description; ``horizon`` is snapped to ``M * delta_t``.

    ``order`` optionally permutes the cyclic traversal (defaults to the
    group's stored order).
    """

    kind: str
    group: DecouplingGroup
    delta_t: float
    horizon: float
    seed: int = 0
    order: tuple | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"protocol kind must be one of {KINDS}, got {self.kind!r}")
        if not self.delta_t > 0 or not self.horizon > 0:
            raise ValueError("delta_t and horizon must be positive")
        m = int(round(self.horizon / self.delta_t))
        if m < 1:
            raise ValueError("horizon shorter than one interval")
        object.__setattr__(self, "horizon", m * float(self.delta_t))
        if self.order is not None:
            order = tuple(int(i) for i in self.order)
            if sorted(order) != list(range(len(self.group))):
                raise ValueError("cyclic order must be a permutation of the group indices")
            object.__setattr__(self, "order", order)

    @property
    def n_intervals(self) -> int:
        return int(round(self.horizon / self.delta_t))

    @property
    def cycle_time(self) -> float:
        return len(self.group) * self.delta_t

    @property
    def is_deterministic(self) -> bool:
        return self.kind != "random"


@dataclass(frozen=True, eq=False)
class ControlPath:
    element_indices: np.ndarray
    delta_t: float
    group: DecouplingGroup

    def __post_init__(self):
        idx = np.array(self.element_indices, dtype=np.int64).reshape(-1)
        if idx.size == 0:
            raise ValueError("empty control path")
        if idx.min() < 0 or idx.max() >= len(self.group):
            raise ValueError("element index out of range")
        idx.setflags(write=False)
        object.__setattr__(self, "element_indices", idx)

    @property
    def n_intervals(self) -> int:
        return self.element_indices.size

    @property
    def horizon(self) -> float:
        return self.n_intervals * self.delta_t

    @property
    def jump_times(self) -> np.ndarray:
        return np.arange(self.n_intervals) * self.delta_t

    def element(self, j: int) -> np.ndarray:
        return self.group.stack[self.element_indices[j]]


def _philox_key(seed: int) -> np.ndarray:
    return np.random.SeedSequence(int(seed) % 2**128).generate_state(2, np.uint64)


def path_generator(seed: int, realization: int) -> np.random.Generator:
    """Generator for realization ``realization`` under master seed ``seed``."""
    counter = np.array([0, 0, 0, realization], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=_philox_key(seed), counter=counter))


def random_indices(seed: int, realizations: Sequence[int] | np.ndarray, n_intervals: int, group_size: int) -> np.ndarray:
    """``(len(realizations), n_intervals)`` i.i.d. uniform element indices."""
    key = _philox_key(seed)
    out = np.empty((len(realizations), n_intervals), dtype=np.int64)
    counter = np.zeros(4, dtype=np.uint64)
    for row, r in enumerate(realizations):
        counter[3] = r
        gen = np.random.Generator(np.random.Philox(key=key, counter=counter))
        out[row] = gen.integers(0, group_size, size=n_intervals)
    return out


def make_path(p: ProtocolSpec, realization: int = 0) -> ControlPath:
    """Control path for protocol ``p``.

    ``realization`` selects the random stream (ignored for deterministic kinds).

    Raises
    ------
    ValueError
        For cyclic protocols whose interval count is not a multiple of ``|G|``.
    """
    m, g = p.n_intervals, len(p.group)
    if p.kind == "free":
        idx = np.zeros(m, dtype=np.int64)
    elif p.kind == "cyclic":
        if m % g:
            raise ValueError(f"cyclic protocol needs M = {m} to be a multiple of |G| = {g}")
        order = np.arange(g) if p.order is None else np.asarray(p.order)
        idx = np.tile(order, m // g)
    else:
        idx = random_indices(p.seed, [realization], m, g)[0]
    return ControlPath(idx, p.delta_t, p.group)


def interval_index(path: ControlPath, t: float) -> int:
    """Interval containing ``t``; right-continuous, ``t == T`` maps to the last interval."""
    T = path.horizon
    if t < 0 or t > T * (1 + 1e-12):
        raise ValueError(f"time {t} outside [0, {T}]")
    j = int(np.floor(t / path.delta_t + 1e-9))
    return min(j, path.n_intervals - 1)


def control_unitary_at(path: ControlPath, t: float) -> np.ndarray:
    return path.element(interval_index(path, t))


def _check_dims(spec: OpenSystemSpec, path: ControlPath):
    if spec.d_S != path.group.dim:
        raise ValueError(f"system dimension {spec.d_S} != group dimension {path.group.dim}")


def _conj(g, x):
    return g.conj().T @ x @ g


def logical_hamiltonian_at(spec: OpenSystemSpec, path: ControlPath, t: float) -> np.ndarray:
    """Drift with ``H_S(t)`` and each ``J_a(t)`` conjugated by ``U_c(t)``."""
    _check_dims(spec, path)
    return _logical_hamiltonian(spec, control_unitary_at(path, t), t)


def _logical_hamiltonian(spec, g, t):
    eye_e = np.eye(spec.d_E)
    out = np.kron(_conj(g, spec.system_hamiltonian_at(t)), eye_e)
    out += np.kron(np.eye(spec.d_S), spec.env_hamiltonian)
    for j_op, b_op in spec.coupling_operators_at(t):
        out += np.kron(_conj(g, j_op), b_op)
    return out


def env_propagator(spec: OpenSystemSpec, t: float) -> np.ndarray:
    """``U_E(t) = exp(-i H_E t)`` on the environment alone."""
    w, v = np.linalg.eigh(spec.env_hamiltonian)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def logical_interaction_hamiltonian_at(spec: OpenSystemSpec, path: ControlPath, t: float) -> np.ndarray:
    """Logical Hamiltonian with ``H_E`` removed and ``B_a -> U_E^dag(t) B_a U_E(t)``."""
    _check_dims(spec, path)
    return _logical_interaction_hamiltonian(spec, control_unitary_at(path, t), t)


def _logical_interaction_hamiltonian(spec, g, t):
    u_e = env_propagator(spec, t)
    out = np.kron(_conj(g, spec.system_hamiltonian_at(t)), np.eye(spec.d_E))
    for j_op, b_op in spec.coupling_operators_at(t):
        out += np.kron(_conj(g, j_op), _conj(u_e, b_op))
    return out


def leading_average_hamiltonian(spec: OpenSystemSpec, path: ControlPath) -> np.ndarray:
    """Time average of the logical Hamiltonian over the path (zeroth Magnus term).

    Raises
    ------
    UnsupportedConfigurationError
        If the system has any non-constant envelope.
    """
    _check_dims(spec, path)
    if not spec.is_time_independent:
        raise UnsupportedConfigurationError("leading_average_hamiltonian needs a time-independent spec")
    weights = np.bincount(path.element_indices, minlength=len(path.group)) / path.n_intervals

    def bar(x):
        s = path.group.stack
        return np.einsum("l,lba,bc,lcd->ad", weights, s.conj(), x, s)

    out = np.kron(bar(spec.system_hamiltonian_at(0.0)), np.eye(spec.d_E))
    out += np.kron(np.eye(spec.d_S), spec.env_hamiltonian)
    for j_op, b_op in spec.coupling_operators_at(0.0):
        out += np.kron(bar(j_op), b_op)
    return out

"""
Dense complex operator primitives.

Operators are plain ``numpy`` complex arrays of shape ``(d, d)``. The
Hermitian / unitary / density "tags" are enforced by the ``as_*``
validators below, which raise ``ValueError`` on violation and return a
fresh complex128 copy.

Kronecker convention
--------------------
On a joint space ``H_S (x) H_E`` the system index varies slowest, i.e.
joint index ``= s * d_E + e``. This is ``np.kron(a_S, b_E)`` and every
partial trace in the package assumes it.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

HERMITIAN_RTOL = 1e-12
UNITARY_TOL = 1e-10
STATE_NORM_TOL = 1e-12
DENSITY_TRACE_TOL = 1e-10
DENSITY_EIG_TOL = 1e-10

IDENTITY_2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

PAULIS = {"I": IDENTITY_2, "X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}

for _m in (IDENTITY_2, SIGMA_X, SIGMA_Y, SIGMA_Z):
    _m.setflags(write=False)


def _square(a, name="operator") -> np.ndarray:
    arr = np.array(a, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    return arr


def hermiticity_residual(a: np.ndarray) -> float:
    """Largest ``|a_ij - conj(a_ji)|`` relative to the largest entry."""
    scale = np.max(np.abs(a)) if a.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(a - a.conj().T)) / scale)


def unitarity_residual(u: np.ndarray) -> float:
    return two_norm(u.conj().T @ u - np.eye(u.shape[0]))


def as_operator(a) -> np.ndarray:
    return _square(a)


def as_hermitian(a, name="operator") -> np.ndarray:
    arr = _square(a, name)
    res = hermiticity_residual(arr)
    if res > HERMITIAN_RTOL:
        raise ValueError(f"{name} is not Hermitian (relative residual {res:.3e})")
    return arr


def as_unitary(u, name="operator") -> np.ndarray:
    arr = _square(u, name)
    res = unitarity_residual(arr)
    if res > UNITARY_TOL:
        raise ValueError(f"{name} is not unitary (||U^dag U - I||_2 = {res:.3e})")
    return arr


def as_pure_state(amplitudes, name="state") -> np.ndarray:
    """Validate a normalized state vector."""
    psi = np.array(amplitudes, dtype=complex).reshape(-1)
    if psi.size == 0:
        raise ValueError(f"{name} is empty")
    norm2 = float(np.vdot(psi, psi).real)
    if abs(norm2 - 1.0) > STATE_NORM_TOL:
        raise ValueError(f"{name} is not normalized (sum |a|^2 = {norm2!r})")
    return psi


def normalized(amplitudes) -> np.ndarray:
    psi = np.array(amplitudes, dtype=complex).reshape(-1)
    nrm = np.linalg.norm(psi)
    if nrm == 0:
        raise ValueError("cannot normalize the zero vector")
    return psi / nrm


def as_density(rho, name="density operator") -> np.ndarray:
    arr = as_hermitian(rho, name)
    tr = np.trace(arr)
    if abs(tr - 1.0) > DENSITY_TRACE_TOL:
        raise ValueError(f"{name} has trace {tr!r}, expected 1")
    lam_min = float(np.linalg.eigvalsh(0.5 * (arr + arr.conj().T))[0])
    if lam_min < -DENSITY_EIG_TOL:
        raise ValueError(f"{name} has negative eigenvalue {lam_min:.3e}")
    return arr


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product ``a (x) b`` with ``a``'s index varying slower."""
    return np.kron(_square(a), _square(b))


def partial_trace_env(rho, d_S: int, d_E: int) -> np.ndarray:
    """Trace out the environment (fast index) of a ``d_S*d_E`` square operator."""
    arr = _square(rho)
    if arr.shape[0] != d_S * d_E:
        raise ValueError(f"operator dimension {arr.shape[0]} != d_S*d_E = {d_S * d_E}")
    return np.einsum("iaja->ij", arr.reshape(d_S, d_E, d_S, d_E))


def expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i h t)`` by eigendecomposition, no input validation."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def hermitian_propagator(h, t: float) -> np.ndarray:
    """Return ``exp(-i h t)`` for Hermitian ``h``.

    Raises
    ------
    ValueError
        If ``h`` fails the Hermiticity check.
    """
    h = as_hermitian(h, "generator")
    # symmetrize so eigh sees exactly the Hermitian part
    return expm_hermitian(0.5 * (h + h.conj().T), float(t))


def two_norm(a) -> float:
    """Operator 2-norm, i.e. the largest singular value."""
    arr = np.asarray(a, dtype=complex)
    if arr.size == 0:
        return 0.0
    return float(np.linalg.norm(arr, 2))


def rank1_trace_bound_check(v) -> tuple[float, float]:
    """Build the rank-1 operator ``|v><e_1|`` and return ``(|tr A|, ||A||_2)``.

    The first entry never exceeds the second.
    """
    vec = np.array(v, dtype=complex).reshape(-1)
    if vec.size == 0 or not np.any(vec):
        raise ValueError("rank-1 construction needs a nonzero vector")
    e1 = np.zeros_like(vec)
    e1[0] = 1.0
    a = np.outer(vec, e1.conj())
    return float(abs(np.trace(a))), two_norm(a)


def pauli_string(label: str) -> np.ndarray:
    """Tensor product of Paulis, e.g. ``"XZ"`` -> ``sigma_x (x) sigma_z``."""
    out = np.eye(1, dtype=complex)
    for ch in label.upper():
        if ch not in PAULIS:
            raise ValueError(f"bad Pauli label {label!r}")
        out = np.kron(out, PAULIS[ch])
    return out


_BUILTIN_QUBIT = {"sigma_x": SIGMA_X, "sigma_y": SIGMA_Y, "sigma_z": SIGMA_Z}


def parse_operator_literal(obj, dim: int | None = None) -> np.ndarray:
    """Parse an operator from config.

    Accepts a nested row-major list of ``[re, im]`` pairs, a builtin name
    (``"sigma_x"``, ``"sigma_y"``, ``"sigma_z"``, ``"identity"``) or a
    Pauli string such as ``"ZI"``. ``dim`` is required for ``"identity"``
    and is checked against the parsed shape otherwise.
    """
    if isinstance(obj, str):
        name = obj.strip()
        if name == "identity":
            if dim is None:
                raise ValueError("'identity' needs a known dimension")
            out = np.eye(dim, dtype=complex)
        elif name in _BUILTIN_QUBIT:
            out = np.array(_BUILTIN_QUBIT[name])
        elif name and set(name.upper()) <= set(PAULIS):
            out = pauli_string(name)
        else:
            raise ValueError(f"unknown operator name {obj!r}")
    else:
        try:
            arr = np.asarray(obj, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"malformed operator literal: {exc}") from None
        if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(
                "operator literal must be a square nested list of [re, im] pairs, "
                f"got array of shape {arr.shape}"
            )
        out = arr[..., 0] + 1j * arr[..., 1]
    if dim is not None and out.shape[0] != dim:
        raise ValueError(f"operator has dimension {out.shape[0]}, expected {dim}")
    return out


def operator_to_literal(a) -> list:
    arr = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in arr]


def parse_state_literal(obj: Sequence, dim: int | None = None) -> np.ndarray:
    """Parse ``[[re, im], ...]`` (or plain reals) into a normalized state."""
    arr = np.asarray(obj, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 2:
        psi = arr[:, 0] + 1j * arr[:, 1]
    elif arr.ndim == 1:
        psi = arr.astype(complex)
    else:
        raise ValueError(f"malformed state literal of shape {arr.shape}")
    if dim is not None and psi.size != dim:
        raise ValueError(f"state has dimension {psi.size}, expected {dim}")
    return normalized(psi)

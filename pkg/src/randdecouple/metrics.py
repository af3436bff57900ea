"""
Error probabilities for average state preservation and the random-decoupling bound.

With ``x = 4 T dt k**2`` the worst-case error of uniform random decoupling
obeys ``eps <= x (1 + 8 dt k + x) / (1 - x)**2`` whenever ``x < 1``. The
closed form is the sum over ``n, m >= 1`` of ``V_nm k**(n+m)``; it is also
provided here as a truncated double series and as four parity blocks.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .operators import normalized


def error_probability(mean_state, pi_S) -> float:
    """``tr(pi_perp rho) = 1 - <psi|rho|psi>``."""
    rho = np.asarray(mean_state, dtype=complex)
    psi = np.asarray(pi_S, dtype=complex).reshape(-1)
    if rho.shape != (psi.size, psi.size):
        raise ValueError("state and density operator dimensions differ")
    return float(1.0 - np.real(psi.conj() @ rho @ psi))


def probe_states(d: int) -> list[np.ndarray]:
    """Informationally complete pure states ``|i>, (|i>+|j>)/sqrt2, (|i>+i|j>)/sqrt2``."""
    eye = np.eye(d, dtype=complex)
    out = [eye[i] for i in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            out.append((eye[i] + eye[j]) / np.sqrt(2))
            out.append((eye[i] + 1j * eye[j]) / np.sqrt(2))
    return out


def reconstruct_channel(channel_probe: Callable[[np.ndarray], np.ndarray], d: int) -> np.ndarray:
    """Channel tensor ``L[a, b, i, j] = Lambda(|i><j|)[a, b]`` from ``d**2`` pure-state probes."""
    L = np.zeros((d, d, d, d), complex)
    diag = [np.asarray(channel_probe(np.eye(d, dtype=complex)[i]), dtype=complex) for i in range(d)]
    for i in range(d):
        L[:, :, i, i] = diag[i]
    e = np.eye(d, dtype=complex)
    for i in range(d):
        for j in range(i + 1, d):
            plus = np.asarray(channel_probe((e[i] + e[j]) / np.sqrt(2)), dtype=complex)
            plus_i = np.asarray(channel_probe((e[i] + 1j * e[j]) / np.sqrt(2)), dtype=complex)
            x = 2 * plus - diag[i] - diag[j]  # Lambda(ij) + Lambda(ji)
            y = 2 * plus_i - diag[i] - diag[j]  # -i Lambda(ij) + i Lambda(ji)
            L[:, :, i, j] = 0.5 * (x + 1j * y)
            L[:, :, j, i] = 0.5 * (x - 1j * y)
    return L


def channel_epsilon(L: np.ndarray, psi) -> float:
    psi = normalized(psi)
    return float(1.0 - np.real(np.einsum("a,abij,i,j,b->", psi.conj(), L, psi, psi.conj(), psi)))


def _to_complex(x):
    d = x.size // 2
    return x[:d] + 1j * x[d:]


def worst_case_error(
    channel_probe: Callable[[np.ndarray], np.ndarray],
    d_S: int,
    n_restarts: int = 20,
    tol: float = 1e-8,
    seed: int = 0,
) -> tuple[float, np.ndarray]:
    """Maximize ``1 - <psi|Lambda(psi psi^dag)|psi>`` over pure states.

    The channel is reconstructed from ``d_S**2`` probes, then BFGS runs from
    every probe state and from ``n_restarts`` Haar-random starts (seeded, so
    more restarts only add candidates).

    Returns
    -------
    (epsilon, psi)
        Best value found and its maximizing state.
    """
    L = reconstruct_channel(channel_probe, d_S)
    return worst_case_from_channel(L, n_restarts=n_restarts, tol=tol, seed=seed)


def worst_case_from_channel(L: np.ndarray, n_restarts: int = 20, tol: float = 1e-8, seed: int = 0):
    d = L.shape[0]

    def neg_eps(x):
        return -channel_epsilon(L, _to_complex(x))

    rng = np.random.default_rng(seed)
    starts = [np.concatenate([p.real, p.imag]) for p in probe_states(d)]
    starts += [rng.standard_normal(2 * d) for _ in range(n_restarts)]
    best_val, best_psi = -np.inf, None
    for x0 in starts:
        res = minimize(neg_eps, x0, method="BFGS", options={"gtol": tol})
        for x in (x0, res.x):
            val = -neg_eps(x)
            if val > best_val:
                best_val, best_psi = val, normalized(_to_complex(x))
    return float(best_val), best_psi


def fibonacci_sphere(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    theta = np.arccos(1 - 2 * i / n)
    phi = np.pi * (1 + 5**0.5) * i
    return theta, phi


def bloch_grid_worst_case(L: np.ndarray, n_points: int = 10_000) -> tuple[float, np.ndarray]:
    """Dense Bloch-sphere search of the qubit worst case (cross-check only)."""
    if L.shape[0] != 2:
        raise ValueError("Bloch grid search is for qubits")
    theta, phi = fibonacci_sphere(n_points)
    psis = np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=1)
    f = np.einsum("na,abij,ni,nj,nb->n", psis.conj(), L, psis, psis.conj(), psis).real
    k = int(np.argmin(f))
    return float(1.0 - f[k]), psis[k]


def theorem_bound(T: float, delta_t: float, k: float) -> float | None:
    """Closed-form worst-case bound, or ``None`` when ``4 T dt k**2 >= 1``."""
    if min(T, delta_t, k) < 0:
        raise ValueError("T, delta_t and k must be nonnegative")
    x = 4 * T * delta_t * k**2
    if x >= 1:
        return None
    return x * (1 + 8 * delta_t * k + x) / (1 - x) ** 2


def volume_bound(n: int, m: int, T: float, delta_t: float) -> float:
    """``V_nm = 2**ceil(N/2) T**floor(N/2) (2 dt)**ceil(N/2)`` with ``N = n + m``."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    s = n + m
    hi, lo = -(-s // 2), s // 2
    return 2.0**hi * T**lo * (2 * delta_t) ** hi


def bound_series_partial_sum(T: float, delta_t: float, k: float, n_max: int) -> float:
    """``sum_{1 <= n, m <= n_max} V_nm k**(n+m)``."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if 4 * T * delta_t * k**2 >= 1:
        raise ValueError("series diverges for 4 T dt k**2 >= 1")
    # V_nm k^(n+m) depends on n+m only; n+m = s occurs min(s-1, 2 n_max + 1 - s) times
    total = 0.0
    for s in range(2 * n_max, 1, -1):
        count = min(s - 1, 2 * n_max + 1 - s)
        total += count * volume_bound(1, s - 1, T, delta_t) * k**s
    return total


def parity_block_sums(T: float, delta_t: float, k: float) -> dict[str, float]:
    """Closed-form sums of ``V_nm k**(n+m)`` over the four parity classes of ``(n, m)``."""
    x = 4 * T * delta_t * k**2
    if x >= 1:
        raise ValueError("series diverges for 4 T dt k**2 >= 1")
    q = (1 - x) ** 2
    mixed = 4 * delta_t * k * x / q
    return {
        "odd_odd": x / q,
        "even_even": x * x / q,
        "even_odd": mixed,
        "odd_even": mixed,
    }


@dataclass
class ErrorReport:
    """Measured error next to the bound at the same ``(T, delta_t, k)``.

    ``pi_S`` is the evaluated state or the string ``"worst"``; ``bound_value``
    is ``None`` when the bound is inapplicable.
    """

    epsilon_mean: float
    epsilon_stderr: float
    pi_S: object
    T: float
    delta_t: float
    k: float
    bound_value: float | None
    argmax_state: np.ndarray | None = None

    @property
    def bound_applicable(self) -> bool:
        return self.bound_value is not None

    def within_bound(self, n_sigma: float = 3.0) -> bool:
        if self.bound_value is None:
            return True
        return self.epsilon_mean <= self.bound_value + n_sigma * self.epsilon_stderr


def make_report(stats, T, delta_t, k, pi_S="worst", n_restarts=20) -> ErrorReport:
    """Error report from a :class:`~randdecouple.montecarlo.ChannelStats`."""
    bound = theorem_bound(T, delta_t, k)
    if isinstance(pi_S, str):
        if pi_S != "worst":
            raise ValueError(f"unknown state selector {pi_S!r}")
        eps, psi = worst_case_error(lambda p: stats.mean_state(p), stats.d_S, n_restarts=n_restarts)
    else:
        psi = normalized(pi_S)
        eps = stats.epsilon(psi)
    return ErrorReport(
        epsilon_mean=eps,
        epsilon_stderr=stats.epsilon_stderr(psi),
        pi_S=pi_S,
        T=T,
        delta_t=delta_t,
        k=k,
        bound_value=bound,
        argmax_state=psi,
    )

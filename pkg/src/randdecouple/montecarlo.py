"""
Ensemble averages of the logical reduced dynamics.

Everything is phrased in terms of the reduced channel of one realization,

    Lambda_r(X) = tr_E( U~_r (X (x) rho_E) U~_r^dag ),

stored as a tensor ``L[a, b, i, j]`` with ``Lambda(X)[a, b] = sum_ij L[a, b, i, j] X[i, j]``.
Averaging channels rather than states lets one ensemble serve every initial
state, which the worst-case error needs.

Realizations are processed in fixed-size chunks; chunk statistics are merged
in chunk order (Chan et al. pairwise update), so the result is bitwise
independent of the number of worker threads.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError
from .operators import as_density, as_pure_state
from .propagation import DEFAULT_INTEGRATOR, IntegratorConfig, interval_propagators
from .protocols import ProtocolSpec, make_path, random_indices
from .system import OpenSystemSpec

CHUNK_SIZE = 2048
ENUMERATION_BUDGET = 2**20
EXACT_DIM_BUDGET = 16


def maximally_mixed(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex) / d


def reduced_channels(u: np.ndarray, rho_env: np.ndarray, d_S: int, d_E: int) -> np.ndarray:
    """Reduced channel tensors for a batch of joint unitaries ``u`` of shape ``(n, D, D)``."""
    u5 = u.reshape(-1, d_S, d_E, d_S, d_E)
    tmp = np.einsum("naeif,fg->naeig", u5, rho_env)
    return np.einsum("naeig,nbejg->nabij", tmp, u5.conj())


def _products(props: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """``U = V[M-1, idx[:, M-1]] ... V[0, idx[:, 0]]`` for every row of ``idx``."""
    rows = props.shape[0]
    u = props[0, idx[:, 0]]
    for j in range(1, idx.shape[1]):
        u = props[j if rows > 1 else 0, idx[:, j]] @ u
    return u


@dataclass
class ChannelStats:
    """Sample mean and scatter of per-realization channel tensors.

    ``scatter`` is the sum of outer products of centered real feature
    vectors ``[Re L.ravel(), Im L.ravel()]``; it is ``None`` for exact
    (enumerated or transfer-matrix) averages.
    """

    d_S: int
    n: int
    mean: np.ndarray
    scatter: np.ndarray | None = None

    @property
    def covariance(self) -> np.ndarray | None:
        if self.scatter is None:
            return None
        if self.n < 2:
            return np.zeros_like(self.scatter)
        return self.scatter / (self.n - 1)

    def apply(self, rho) -> np.ndarray:
        out = np.einsum("abij,ij->ab", self.mean, np.asarray(rho, dtype=complex))
        return 0.5 * (out + out.conj().T)

    def mean_state(self, psi) -> np.ndarray:
        psi = np.asarray(psi, dtype=complex)
        return self.apply(np.outer(psi, psi.conj()))

    def _linear_stderr(self, coeff: np.ndarray) -> np.ndarray:
        """Stderr of ``Re(sum coeff * L)`` for each leading index of ``coeff``."""
        cov = self.covariance
        if cov is None:
            return np.zeros(coeff.shape[:-1])
        w = np.concatenate([coeff.real, -coeff.imag], axis=-1)
        var = np.einsum("...p,pq,...q->...", w, cov, w)
        return np.sqrt(np.maximum(var, 0.0) / self.n)

    def state_stderr(self, psi) -> np.ndarray:
        """Per-entry standard error (modulus) of the mean reduced state."""
        d = self.d_S
        psi = np.asarray(psi, dtype=complex)
        c = np.outer(psi, psi.conj())
        coeff = np.zeros((d, d, d, d, d, d), complex)
        for a in range(d):
            for b in range(d):
                coeff[a, b, a, b] = c
        coeff = coeff.reshape(d, d, -1)
        se_re = self._linear_stderr(coeff)
        se_im = self._linear_stderr(-1j * coeff)
        return np.sqrt(se_re**2 + se_im**2)

    def epsilon(self, psi) -> float:
        psi = np.asarray(psi, dtype=complex)
        return float(1.0 - np.real(psi.conj() @ self.mean_state(psi) @ psi))

    def epsilon_stderr(self, psi) -> float:
        psi = np.asarray(psi, dtype=complex)
        coeff = np.einsum("a,b,i,j->abij", psi.conj(), psi, psi, psi.conj()).reshape(-1)
        return float(self._linear_stderr(coeff))


def _features(chans: np.ndarray) -> np.ndarray:
    flat = chans.reshape(chans.shape[0], -1)
    return np.concatenate([flat.real, flat.imag], axis=1)


def _chunk_moments(x: np.ndarray):
    mu = x.mean(axis=0)
    xc = x - mu
    return x.shape[0], mu, xc.T @ xc


def _merge(a, b):
    na, mua, sa = a
    nb, mub, sb = b
    n = na + nb
    delta = mub - mua
    mu = mua + delta * (nb / n)
    s = sa + sb + np.outer(delta, delta) * (na * nb / n)
    return n, mu, s


def _check_inputs(spec, protocol, env_state):
    rho_e = as_density(env_state, "environment state")
    if rho_e.shape[0] != spec.d_E:
        raise ValueError("environment state dimension does not match the system")
    if protocol.group.dim != spec.d_S:
        raise ValueError("group dimension does not match the system")
    return rho_e


def ensemble_channel(
    spec: OpenSystemSpec,
    protocol: ProtocolSpec,
    env_state,
    n: int,
    master_seed: int,
    cfg: IntegratorConfig = DEFAULT_INTEGRATOR,
    workers: int = 1,
    chunk_size: int = CHUNK_SIZE,
) -> ChannelStats:
    """Monte Carlo estimate of the averaged reduced channel over ``n`` paths.

    Realization ``r`` uses the Philox stream ``(master_seed, r)``. Deterministic
    protocols are evaluated once and reported with zero scatter.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rho_e = _check_inputs(spec, protocol, env_state)
    m = protocol.n_intervals
    props = interval_propagators(spec, protocol.group, protocol.delta_t, m, cfg)
    d_S, d_E = spec.d_S, spec.d_E
    nfeat = 2 * d_S**4
    if protocol.is_deterministic:
        idx = make_path(protocol).element_indices[None, :]
        chan = reduced_channels(_products(props, idx), rho_e, d_S, d_E)[0]
        return ChannelStats(d_S, n, chan, np.zeros((nfeat, nfeat)))

    g = len(protocol.group)

    def work(lo):
        hi = min(lo + chunk_size, n)
        idx = random_indices(master_seed, range(lo, hi), m, g)
        chans = reduced_channels(_products(props, idx), rho_e, d_S, d_E)
        return _chunk_moments(_features(chans))

    starts = range(0, n, chunk_size)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(lo) for lo in starts]
    acc = parts[0]
    for part in parts[1:]:
        acc = _merge(acc, part)
    _, mu, scatter = acc
    half = d_S**4
    mean = (mu[:half] + 1j * mu[half:]).reshape(d_S, d_S, d_S, d_S)
    return ChannelStats(d_S, n, mean, scatter)


@dataclass
class EnsembleResult:
    mean_state: np.ndarray
    n_realizations: int
    stderr_matrix: np.ndarray
    master_seed: int


def run_ensemble(
    spec: OpenSystemSpec,
    protocol: ProtocolSpec,
    initial,
    env_state,
    n: int,
    master_seed: int,
    cfg: IntegratorConfig = DEFAULT_INTEGRATOR,
    workers: int = 1,
) -> EnsembleResult:
    """Average logical reduced state over ``n`` seeded realizations."""
    psi = as_pure_state(initial)
    if psi.size != spec.d_S:
        raise ValueError("initial state dimension does not match the system")
    stats = ensemble_channel(spec, protocol, env_state, n, master_seed, cfg, workers)
    return EnsembleResult(stats.mean_state(psi), n, stats.state_stderr(psi), master_seed)


def enumerate_channel(
    spec: OpenSystemSpec,
    protocol: ProtocolSpec,
    env_state,
    cfg: IntegratorConfig = DEFAULT_INTEGRATOR,
    budget: int = ENUMERATION_BUDGET,
) -> ChannelStats:
    """Exact uniform average of the reduced channel over all ``|G|**M`` paths.

    The last intervals are expanded as a table of all tail products; head
    prefixes are iterated explicitly and combined with the table. A
    deterministic protocol has a single path, which is evaluated directly.
    """
    rho_e = _check_inputs(spec, protocol, env_state)
    m, g = protocol.n_intervals, len(protocol.group)
    props = interval_propagators(spec, protocol.group, protocol.delta_t, m, cfg)
    if protocol.is_deterministic:
        idx = make_path(protocol).element_indices[None, :]
        chan = reduced_channels(_products(props, idx), rho_e, spec.d_S, spec.d_E)[0]
        return ChannelStats(spec.d_S, 1, chan)
    if g**m > budget:
        raise BudgetError(f"enumeration of {g}**{m} paths exceeds budget {budget}")

    def row(j):
        return props[j if props.shape[0] > 1 else 0]

    n_tail = min(m, max(1, int(math.log(4096, g)) if g > 1 else m))
    head = m - n_tail
    tail = row(head)
    for j in range(head + 1, m):
        # new interval acts last: shape (g, g**k, D, D) -> (g**(k+1), D, D)
        tail = (row(j)[:, None] @ tail[None, :]).reshape(-1, spec.dim, spec.dim)
    total = np.zeros((spec.d_S,) * 4, complex)
    for prefix in itertools.product(range(g), repeat=head):
        p = np.eye(spec.dim, dtype=complex)
        for j, l in enumerate(prefix):
            p = row(j)[l] @ p
        total += reduced_channels(tail @ p, rho_e, spec.d_S, spec.d_E).sum(axis=0)
    return ChannelStats(spec.d_S, g**m, total / g**m)


def enumerate_paths(
    spec: OpenSystemSpec,
    protocol: ProtocolSpec,
    initial,
    env_state,
    cfg: IntegratorConfig = DEFAULT_INTEGRATOR,
) -> np.ndarray:
    """Exact ensemble-averaged logical reduced state by path enumeration."""
    psi = as_pure_state(initial)
    return enumerate_channel(spec, protocol, env_state, cfg).mean_state(psi)


def exact_average_channel(
    spec: OpenSystemSpec,
    protocol: ProtocolSpec,
    env_state,
    cfg: IntegratorConfig = DEFAULT_INTEGRATOR,
) -> ChannelStats:
    """Exact averaged channel from interval transfer superoperators.

    Interval draws are independent, so ``E{U~ (x) conj(U~)}`` is the ordered
    product of the per-interval averages ``(1/|G|) sum_l V_l (x) conj(V_l)``.
    Cost does not grow with ``|G|**M``; limited to joint dimension 16.
    """
    rho_e = _check_inputs(spec, protocol, env_state)
    dim = spec.dim
    if dim > EXACT_DIM_BUDGET:
        raise BudgetError(f"transfer superoperator needs joint dimension <= {EXACT_DIM_BUDGET}")
    m = protocol.n_intervals
    props = interval_propagators(spec, protocol.group, protocol.delta_t, m, cfg)
    if protocol.is_deterministic:
        idx = make_path(protocol).element_indices
        weights = np.zeros((m, len(protocol.group)))
        weights[np.arange(m), idx] = 1.0
    else:
        weights = np.full((m, len(protocol.group)), 1.0 / len(protocol.group))

    def transfer(j):
        v = props[j if props.shape[0] > 1 else 0]
        return np.einsum("l,lpr,lqs->pqrs", weights[j], v, v.conj()).reshape(dim**2, dim**2)

    if props.shape[0] == 1 and not protocol.is_deterministic:
        s = np.linalg.matrix_power(transfer(0), m)
    else:
        s = np.eye(dim**2, dtype=complex)
        for j in range(m):
            s = transfer(j) @ s
    s8 = s.reshape(spec.d_S, spec.d_E, spec.d_S, spec.d_E, spec.d_S, spec.d_E, spec.d_S, spec.d_E)
    chan = np.einsum("aebeifjg,fg->abij", s8, rho_e)
    return ChannelStats(spec.d_S, 0, chan)

"""
Scenario ingestion and the canned experiments behind the command line.

A scenario file is a JSON document::

    {
      "scenario_id": "dephasing",
      "system": {
        "d_S": 2, "n_env_qubits": 2, "seed": 7,
        "env_hamiltonian": {"spin_bath_frequencies": [1.0, 0.6]},
        "system_terms": [{"operator": "sigma_z", "envelope": {"kind": "constant", "amplitude": 0.6}}],
        "couplings": [{"operator": "sigma_z", "env_operator": {"random_norm": 0.4}}]
      },
      "protocol": {"kind": "random", "group": "pauli_1", "delta_t": 0.01, "horizon": 1.0, "seed": 1},
      "mc": {"n_realizations": 20000, "master_seed": 3, "method": "monte_carlo"},
      "integrator": {"substeps_per_interval": 16, "scheme": "midpoint"},
      "pi_S": "worst",
      "env_state": "maximally_mixed",
      "outputs": {"csv_path": "out.csv", "report_path": "out.txt"}
    }

Operators are builtin names (``sigma_x``, ``sigma_y``, ``sigma_z``, ``identity``,
Pauli strings like ``"ZI"``) or nested ``[re, im]`` literals. Environment
operators may also be ``{"random_norm": b}``: a random Hermitian of 2-norm
``b`` drawn from ``system.seed`` in coupling order.
"""
from __future__ import annotations

import copy
import csv
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BudgetError
from .groups import group_from_config, is_irreducible, verify_group
from .metrics import ErrorReport, make_report
from .montecarlo import (
    ENUMERATION_BUDGET,
    EXACT_DIM_BUDGET,
    ChannelStats,
    ensemble_channel,
    enumerate_channel,
    exact_average_channel,
    maximally_mixed,
)
from .operators import SIGMA_Z, as_density, parse_operator_literal, parse_state_literal
from .propagation import IntegratorConfig
from .protocols import ProtocolSpec, make_path
from .system import (
    Envelope,
    OpenSystemSpec,
    build_spin_bath,
    estimate_k,
    random_hermitian,
    spin_bath_hamiltonian,
)

CSV_COLUMNS = (
    "scenario_id", "d_S", "d_E", "protocol", "group", "delta_t", "T", "k",
    "n_realizations", "master_seed", "epsilon_mean", "epsilon_stderr",
    "bound_value", "bound_applicable", "wall_time_s",
)
MAX_JOINT_DIM = 64
MAX_WORST_CASE_DIM = 4
METHODS = ("monte_carlo", "enumerate", "exact")
SWEEP_VARIABLES = ("delta_t", "horizon", "coupling_norm", "n_realizations")
# errors below this are roundoff and carry no scaling information
EPSILON_FLOOR = 1e-12


class ConfigError(ValueError):
    """Invalid scenario or sweep document; message names the offending field."""


def _field(path: str, exc: Exception) -> ConfigError:
    return ConfigError(f"{path}: {exc}")


def _require(cfg: dict, key: str, path: str):
    if key not in cfg:
        raise ConfigError(f"{path}.{key}: missing required field")
    return cfg[key]


# --------------------------------------------------------------------------- #
# scenario builders
# --------------------------------------------------------------------------- #

def noisy_qubit_spec(
    omega0: float = 1.0,
    coupling_norms=(0.5, 0.5, 0.5),
    n_env_qubits: int = 2,
    seed: int = 42,
    env_frequencies=None,
) -> OpenSystemSpec:
    """Single qubit ``omega0 sigma_z`` with ``sigma_a (x) B_a`` couplings to a spin bath."""
    if env_frequencies is None:
        env_frequencies = np.linspace(1.0, 0.5, n_env_qubits)
    return build_spin_bath(seed, n_env_qubits, list(coupling_norms), list(env_frequencies), omega0=omega0)


def dephasing_qubit_spec(
    omega0: float = 0.6,
    coupling_norm: float = 0.4,
    n_env_qubits: int = 2,
    seed: int = 7,
    env_frequencies=None,
) -> OpenSystemSpec:
    """Pure-dephasing limit: only the ``sigma_z (x) B_z`` coupling survives."""
    if env_frequencies is None:
        env_frequencies = np.linspace(1.0, 0.5, n_env_qubits)
    return build_spin_bath(
        seed, n_env_qubits, [coupling_norm], list(env_frequencies),
        omega0=omega0, coupling_operators=[SIGMA_Z],
    )


# --------------------------------------------------------------------------- #
# config parsing
# --------------------------------------------------------------------------- #

def parse_system(cfg: dict, path: str = "system") -> OpenSystemSpec:
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: expected an object")
    try:
        d_S = int(_require(cfg, "d_S", path))
        n_env = int(_require(cfg, "n_env_qubits", path))
    except (TypeError, ValueError) as exc:
        raise _field(path, exc) from None
    if n_env < 1 or 2**n_env * d_S > MAX_JOINT_DIM:
        raise ConfigError(f"{path}.n_env_qubits: joint dimension must be <= {MAX_JOINT_DIM}")
    d_E = 2**n_env
    rng = np.random.default_rng(int(cfg.get("seed", 0)))

    h_e_cfg = cfg.get("env_hamiltonian")
    try:
        if h_e_cfg is None:
            h_e = np.zeros((d_E, d_E), complex)
        elif isinstance(h_e_cfg, dict) and "spin_bath_frequencies" in h_e_cfg:
            freqs = h_e_cfg["spin_bath_frequencies"]
            if len(freqs) != n_env:
                raise ValueError("need one frequency per environment qubit")
            h_e = spin_bath_hamiltonian(freqs)
        else:
            h_e = parse_operator_literal(h_e_cfg, d_E)
    except ValueError as exc:
        raise _field(f"{path}.env_hamiltonian", exc) from None

    terms = []
    for i, term in enumerate(cfg.get("system_terms", [])):
        p = f"{path}.system_terms[{i}]"
        try:
            op = parse_operator_literal(_require(term, "operator", p), d_S)
            env = Envelope.from_config(term.get("envelope"))
        except (ValueError, TypeError) as exc:
            raise _field(p, exc) from None
        terms.append((op, env))

    couplings = []
    for i, c in enumerate(cfg.get("couplings", [])):
        p = f"{path}.couplings[{i}]"
        try:
            j_op = parse_operator_literal(_require(c, "operator", p), d_S)
            env = Envelope.from_config(c.get("envelope"))
            b_cfg = _require(c, "env_operator", p)
            if isinstance(b_cfg, dict) and "random_norm" in b_cfg:
                nrm = float(b_cfg["random_norm"])
                if nrm < 0:
                    raise ValueError("random_norm must be nonnegative")
                b_op = random_hermitian(rng, d_E, nrm)
            else:
                b_op = parse_operator_literal(b_cfg, d_E)
        except (ValueError, TypeError) as exc:
            raise _field(p, exc) from None
        couplings.append((j_op, env, b_op))

    try:
        return OpenSystemSpec(d_S, d_E, tuple(terms), h_e, tuple(couplings))
    except ValueError as exc:
        raise _field(path, exc) from None


def parse_protocol(cfg: dict, d_S: int, path: str = "protocol") -> ProtocolSpec:
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: expected an object")
    try:
        group = group_from_config(cfg.get("group", "pauli_1"))
    except (ValueError, TypeError, KeyError) as exc:
        raise _field(f"{path}.group", exc) from None
    if group.dim != d_S:
        raise ConfigError(f"{path}.group: dimension {group.dim} does not match d_S = {d_S}")
    try:
        p = ProtocolSpec(
            kind=str(cfg.get("kind", "random")),
            group=group,
            delta_t=float(_require(cfg, "delta_t", path)),
            horizon=float(_require(cfg, "horizon", path)),
            seed=int(cfg.get("seed", 0)),
            order=cfg.get("order"),
        )
        if p.kind == "cyclic":
            make_path(p)
    except (ValueError, TypeError) as exc:
        raise _field(path, exc) from None
    return p


def parse_env_state(obj, d_E: int, path: str = "env_state") -> np.ndarray:
    if obj is None or obj == "maximally_mixed":
        return maximally_mixed(d_E)
    if obj == "ground":
        rho = np.zeros((d_E, d_E), complex)
        rho[0, 0] = 1.0
        return rho
    try:
        rho = parse_operator_literal(obj, d_E)
    except ValueError as exc:
        raise _field(path, exc) from None
    return rho


@dataclass
class ScenarioConfig:
    scenario_id: str
    system: OpenSystemSpec
    protocol: ProtocolSpec
    n_realizations: int
    master_seed: int
    method: str
    integrator: IntegratorConfig
    pi_S: object
    env_state: np.ndarray
    csv_path: str | None = None
    report_path: str | None = None
    k_grid_points: int = 1001
    raw: dict = field(default_factory=dict, repr=False)


def parse_scenario(doc: dict) -> ScenarioConfig:
    """Validate every sub-config before anything is computed."""
    if not isinstance(doc, dict):
        raise ConfigError("scenario: expected a JSON object")
    system = parse_system(_require(doc, "system", "scenario"))
    protocol = parse_protocol(_require(doc, "protocol", "scenario"), system.d_S)
    mc = doc.get("mc", {})
    try:
        n = int(mc.get("n_realizations", 10000))
        seed = int(mc.get("master_seed", protocol.seed))
    except (TypeError, ValueError) as exc:
        raise _field("mc", exc) from None
    if n < 1:
        raise ConfigError("mc.n_realizations: must be >= 1")
    method = mc.get("method", "monte_carlo")
    if method not in METHODS:
        raise ConfigError(f"mc.method: must be one of {METHODS}")
    try:
        integ = IntegratorConfig(**doc.get("integrator", {}))
    except (TypeError, ValueError) as exc:
        raise _field("integrator", exc) from None

    pi_cfg = doc.get("pi_S")
    if pi_cfg is None or pi_cfg == "worst":
        if system.d_S > MAX_WORST_CASE_DIM:
            raise ConfigError(f"pi_S: explicit state required for d_S > {MAX_WORST_CASE_DIM}")
        pi_S = "worst"
    else:
        try:
            pi_S = parse_state_literal(pi_cfg, system.d_S)
        except ValueError as exc:
            raise _field("pi_S", exc) from None
    env_state = parse_env_state(doc.get("env_state"), system.d_E)
    try:
        as_density(env_state)
    except ValueError as exc:
        raise _field("env_state", exc) from None
    outs = doc.get("outputs", {})
    return ScenarioConfig(
        scenario_id=str(doc.get("scenario_id", "scenario")),
        system=system,
        protocol=protocol,
        n_realizations=n,
        master_seed=seed,
        method=method,
        integrator=integ,
        pi_S=pi_S,
        env_state=env_state,
        csv_path=outs.get("csv_path"),
        report_path=outs.get("report_path"),
        k_grid_points=int(doc.get("k_grid_points", 1001)),
        raw=doc,
    )


def load_json(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


# --------------------------------------------------------------------------- #
# running
# --------------------------------------------------------------------------- #

def exact_channel(spec, protocol, env_state, cfg) -> ChannelStats:
    """Exact averaged channel: enumeration when small, transfer superoperator otherwise."""
    if protocol.is_deterministic or len(protocol.group) ** protocol.n_intervals <= 4096:
        return enumerate_channel(spec, protocol, env_state, cfg, budget=ENUMERATION_BUDGET)
    if spec.dim <= EXACT_DIM_BUDGET:
        return exact_average_channel(spec, protocol, env_state, cfg)
    return enumerate_channel(spec, protocol, env_state, cfg)


@dataclass
class RunResult:
    report: ErrorReport
    stats: ChannelStats
    n_used: int
    wall_time_s: float


def run_scenario(sc: ScenarioConfig, workers: int = 1) -> RunResult:
    t0 = time.perf_counter()
    p = sc.protocol
    k = estimate_k(sc.system, p.horizon, sc.k_grid_points).k
    if sc.method == "monte_carlo":
        stats = ensemble_channel(
            sc.system, p, sc.env_state, sc.n_realizations, sc.master_seed, sc.integrator, workers
        )
        n_used = sc.n_realizations
    elif sc.method == "enumerate":
        stats = enumerate_channel(sc.system, p, sc.env_state, sc.integrator)
        n_used = stats.n
    else:
        stats = exact_average_channel(sc.system, p, sc.env_state, sc.integrator)
        n_used = 0
    report = make_report(stats, p.horizon, p.delta_t, k, sc.pi_S)
    return RunResult(report, stats, n_used, time.perf_counter() - t0)


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(float(x))
    return str(x)


def csv_row(sc: ScenarioConfig, res: RunResult, timing: bool = False, protocol_kind: str | None = None) -> dict:
    rep = res.report
    return {
        "scenario_id": sc.scenario_id,
        "d_S": sc.system.d_S,
        "d_E": sc.system.d_E,
        "protocol": protocol_kind or sc.protocol.kind,
        "group": sc.protocol.group.name,
        "delta_t": float(sc.protocol.delta_t),
        "T": float(sc.protocol.horizon),
        "k": float(rep.k),
        "n_realizations": res.n_used,
        "master_seed": sc.master_seed,
        "epsilon_mean": float(rep.epsilon_mean),
        "epsilon_stderr": float(rep.epsilon_stderr),
        # inapplicable bound falls back to the trivial bound eps <= 1
        "bound_value": float(rep.bound_value) if rep.bound_applicable else 1.0,
        "bound_applicable": rep.bound_applicable,
        "wall_time_s": float(round(res.wall_time_s, 6)) if timing else 0.0,
    }


def write_csv(rows: list[dict], path=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def format_report(sc: ScenarioConfig, res: RunResult) -> str:
    rep = res.report
    state = "worst case" if isinstance(rep.pi_S, str) else "fixed state"
    lines = [
        f"scenario        {sc.scenario_id}",
        f"system          d_S={sc.system.d_S} d_E={sc.system.d_E}",
        f"protocol        {sc.protocol.kind} over {sc.protocol.group.name} (|G|={len(sc.protocol.group)})",
        f"delta_t, T      {sc.protocol.delta_t:g}, {sc.protocol.horizon:g} (M={sc.protocol.n_intervals})",
        f"k               {rep.k:.6g}",
        f"method          {sc.method} (n={res.n_used}, master_seed={sc.master_seed})",
        f"epsilon ({state}) {rep.epsilon_mean:.6e} +/- {rep.epsilon_stderr:.2e}",
    ]
    if rep.argmax_state is not None:
        amps = ", ".join(f"{z.real:+.4f}{z.imag:+.4f}j" for z in rep.argmax_state)
        lines.append(f"state           [{amps}]")
    if rep.bound_applicable:
        lines.append(f"bound           {rep.bound_value:.6e} (4 T dt k^2 = {4 * rep.T * rep.delta_t * rep.k**2:.4g})")
        lines.append(f"within bound    {rep.within_bound()}")
    else:
        lines.append("bound           inapplicable (4 T dt k^2 >= 1)")
    return "\n".join(lines) + "\n"


def apply_overrides(doc: dict, seed=None, n=None) -> dict:
    doc = copy.deepcopy(doc)
    mc = doc.setdefault("mc", {})
    if seed is not None:
        mc["master_seed"] = int(seed)
        doc.setdefault("protocol", {})["seed"] = int(seed)
    if n is not None:
        mc["n_realizations"] = int(n)
    return doc


def simulate(doc: dict, workers: int = 1, timing: bool = False, out: str | None = None):
    """Run one scenario; returns ``(csv_text, report_text, run_result)`` and writes configured outputs."""
    sc = parse_scenario(doc)
    res = run_scenario(sc, workers)
    csv_path = out or sc.csv_path
    text = write_csv([csv_row(sc, res, timing)], csv_path)
    report = format_report(sc, res)
    if sc.report_path:
        Path(sc.report_path).write_text(report, encoding="utf-8")
    return text, report, res


# --------------------------------------------------------------------------- #
# sweeps
# --------------------------------------------------------------------------- #

@dataclass
class SweepResult:
    variable: str
    values: list
    rows: list
    exact_epsilons: list
    slope: float | None
    slope_rows: list


def _with_sweep_value(base: dict, var: str, value: float) -> dict:
    doc = copy.deepcopy(base)
    if var in ("delta_t", "horizon"):
        doc["protocol"][var] = value
    elif var == "n_realizations":
        doc.setdefault("mc", {})["n_realizations"] = int(value)
    else:
        found = False
        for c in doc["system"].get("couplings", []):
            if isinstance(c.get("env_operator"), dict) and "random_norm" in c["env_operator"]:
                c["env_operator"]["random_norm"] = value
                found = True
        if not found:
            raise ConfigError("sweep: coupling_norm sweep needs random_norm env operators")
    return doc


def parse_sweep(doc: dict):
    if not isinstance(doc, dict):
        raise ConfigError("sweep: expected a JSON object")
    base = _require(doc, "base", "sweep")
    var = _require(doc, "sweep_variable", "sweep")
    if var not in SWEEP_VARIABLES:
        raise ConfigError(f"sweep.sweep_variable: must be one of {SWEEP_VARIABLES}")
    values = _require(doc, "values", "sweep")
    try:
        values = [float(v) for v in values]
    except (TypeError, ValueError) as exc:
        raise _field("sweep.values", exc) from None
    if not values or any(v <= 0 for v in values):
        raise ConfigError("sweep.values: must be nonempty and positive")
    diffs = np.diff(values)
    if len(values) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ConfigError("sweep.values: must be strictly monotone")
    scenarios = [parse_scenario(_with_sweep_value(base, var, v)) for v in values]
    return var, values, scenarios, bool(doc.get("exact_reference", True))


def fit_loglog_slope(x, y) -> float | None:
    x, y = np.asarray(x, float), np.asarray(y, float)
    ok = (x > 0) & (y > 0)
    if ok.sum() < 2 or np.ptp(np.log(x[ok])) == 0:
        return None
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def sweep(doc: dict, workers: int = 1, timing: bool = False) -> SweepResult:
    """One CSV row per sweep value plus a log-log slope for time sweeps.

    Slope rows use the Monte Carlo epsilon when it exceeds ten standard
    errors and the exact reference value otherwise; values at roundoff
    level are dropped, so an interaction-free sweep has no slope.
    """
    var, values, scenarios, want_exact = parse_sweep(doc)
    rows, exact_eps, fit_x, fit_y = [], [], [], []
    for v, sc in zip(values, scenarios):
        res = run_scenario(sc, workers)
        rows.append(csv_row(sc, res, timing))
        ref = None
        if want_exact and sc.method == "monte_carlo":
            try:
                ex = exact_channel(sc.system, sc.protocol, sc.env_state, sc.integrator)
                ref = make_report(ex, sc.protocol.horizon, sc.protocol.delta_t, res.report.k, sc.pi_S).epsilon_mean
            except BudgetError:
                ref = None
        exact_eps.append(ref)
        eps, se = res.report.epsilon_mean, res.report.epsilon_stderr
        y = eps if eps > 10 * se else ref
        if y is not None and y > EPSILON_FLOOR:
            fit_x.append(v)
            fit_y.append(y)
    slope = fit_loglog_slope(fit_x, fit_y) if var in ("delta_t", "horizon") else None
    return SweepResult(var, values, rows, exact_eps, slope, list(zip(fit_x, fit_y)))


def format_sweep_report(result: SweepResult) -> str:
    var = result.variable
    lines = [f"sweep over {var}"]
    for v, row, ref in zip(result.values, result.rows, result.exact_epsilons):
        ref_s = "n/a" if ref is None else f"{ref:.6e}"
        lines.append(
            f"  {var}={v:<10g} eps={row['epsilon_mean']:.6e} "
            f"+/- {row['epsilon_stderr']:.2e}  exact={ref_s}  bound={row['bound_value']:.6e}"
        )
    if var in ("delta_t", "horizon"):
        slope = "undefined" if result.slope is None else f"{result.slope:.4f}"
        lines.append(f"log-log slope of epsilon vs {var}: {slope}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------- #
# compare and group verification
# --------------------------------------------------------------------------- #

def compare(doc: dict, workers: int = 1, timing: bool = False):
    """Free, cyclic and random protocols on the same spec, ``T`` and ``delta_t``.

    Returns ``(rows, notes)``; the cyclic row is omitted for time-dependent specs.
    """
    notes = []
    rows = []
    base_proto = doc.get("protocol", {})
    for kind in ("free", "cyclic", "random"):
        d = copy.deepcopy(doc)
        d["protocol"] = dict(base_proto, kind=kind)
        sc = parse_scenario(d)
        if kind == "cyclic" and not sc.system.is_time_independent:
            notes.append("cyclic row omitted: cyclic decoupling needs a time-independent spec")
            continue
        res = run_scenario(sc, workers)
        rows.append(csv_row(sc, res, timing, protocol_kind=kind))
    return rows, notes


@dataclass
class GroupVerdict:
    size: int
    closed: bool
    worst_residual: float
    irreducible: bool


def verify_group_spec(obj) -> GroupVerdict:
    try:
        g = group_from_config(obj)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"group: {exc}") from None
    rep = verify_group(g)
    return GroupVerdict(len(g), rep.closed, rep.worst_residual, rep.closed and is_irreducible(g))

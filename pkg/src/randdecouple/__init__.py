"""Deterministic and randomized bang-bang decoupling of finite open quantum systems."""

from .groups import DecouplingGroup, is_irreducible, pauli_group, twirl, verify_group
from .metrics import (
    ErrorReport,
    bound_series_partial_sum,
    error_probability,
    theorem_bound,
    volume_bound,
    worst_case_error,
)
from .montecarlo import (
    ChannelStats,
    EnsembleResult,
    ensemble_channel,
    enumerate_paths,
    exact_average_channel,
    run_ensemble,
)
from .operators import hermitian_propagator, partial_trace_env, tensor_product, two_norm
from .propagation import IntegratorConfig, propagate, verify_frame_relation
from .protocols import ControlPath, ProtocolSpec, make_path
from .system import Envelope, OpenSystemSpec, build_spin_bath, drift_at, estimate_k, interaction_at

__version__ = "0.1.0"

__all__ = [
    "ChannelStats",
    "ControlPath",
    "DecouplingGroup",
    "EnsembleResult",
    "Envelope",
    "ErrorReport",
    "IntegratorConfig",
    "OpenSystemSpec",
    "ProtocolSpec",
    "bound_series_partial_sum",
    "build_spin_bath",
    "drift_at",
    "ensemble_channel",
    "enumerate_paths",
    "error_probability",
    "estimate_k",
    "exact_average_channel",
    "hermitian_propagator",
    "interaction_at",
    "is_irreducible",
    "make_path",
    "partial_trace_env",
    "pauli_group",
    "propagate",
    "run_ensemble",
    "tensor_product",
    "theorem_bound",
    "twirl",
    "two_norm",
    "verify_frame_relation",
    "verify_group",
    "volume_bound",
    "worst_case_error",
]

"""
Decoupling groups as explicit lists of system unitaries.

Closure is only required up to a global phase (projective representation),
so membership is tested through ``|tr(g_k^dag g_i g_j)| == d_S``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .operators import as_unitary, pauli_string, parse_operator_literal

CLOSURE_TOL = 1e-8
IRREDUCIBLE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DecouplingGroup:
    """Ordered unitaries on ``H_S``; ``elements[0]`` is the identity.

    ``stack`` holds the same elements as a read-only ``(|G|, d, d)`` array.
    """

    elements: tuple
    name: str = "custom"

    def __post_init__(self):
        if len(self.elements) == 0:
            raise ValueError("a decoupling group needs at least one element")
        mats = [as_unitary(g, f"group element {i}") for i, g in enumerate(self.elements)]
        d = mats[0].shape[0]
        if any(m.shape != (d, d) for m in mats):
            raise ValueError("group elements have inconsistent dimensions")
        if not np.array_equal(mats[0], np.eye(d)):
            raise ValueError("elements[0] must be exactly the identity")
        stack = np.array(mats)
        stack.setflags(write=False)
        object.__setattr__(self, "elements", tuple(stack))
        object.__setattr__(self, "stack", stack)

    @property
    def dim(self) -> int:
        return self.stack.shape[1]

    def __len__(self) -> int:
        return len(self.elements)


def pauli_group(n_qubits: int) -> DecouplingGroup:
    """All ``4**n`` Pauli strings, lexicographic in ``I, X, Y, Z`` (identity first)."""
    if not 1 <= n_qubits <= 3:
        raise ValueError("pauli_group supports 1 to 3 qubits")
    labels = ("".join(p) for p in itertools.product("IXYZ", repeat=n_qubits))
    return DecouplingGroup(tuple(pauli_string(lbl) for lbl in labels), name=f"pauli_{n_qubits}")


class ClosureReport(NamedTuple):
    closed: bool
    worst_residual: float


def verify_group(g: DecouplingGroup, tol: float = CLOSURE_TOL) -> ClosureReport:
    """Exhaustive closure-up-to-phase check.

    For every product ``g_i g_j`` the best-matching element is the one
    maximizing ``|tr(g_k^dag g_i g_j)|``; the residual is ``d_S`` minus that.
    """
    stack = g.stack
    d = g.dim
    # overlaps[k, i, j] = tr(g_k^dag g_i g_j)
    prods = np.einsum("iab,jbc->ijac", stack, stack)
    overlaps = np.einsum("kba,ijba->kij", stack.conj(), prods)
    best = np.max(np.abs(overlaps), axis=0)
    worst = float(np.max(d - best))
    worst = max(worst, 0.0)
    return ClosureReport(worst <= tol, worst)


def twirl(g: DecouplingGroup, x) -> np.ndarray:
    """Uniform group average ``(1/|G|) sum_l g_l^dag x g_l``."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (g.dim, g.dim):
        raise ValueError(f"operator shape {x.shape} does not match group dimension {g.dim}")
    s = g.stack
    return np.einsum("lba,bc,lcd->ad", s.conj(), x, s) / len(g)


def is_irreducible(g: DecouplingGroup, tol: float = IRREDUCIBLE_TOL) -> bool:
    """True iff the twirl maps every matrix unit ``E_ij`` to ``(tr E_ij / d) I``."""
    d = g.dim
    eye = np.eye(d)
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), complex)
            e[i, j] = 1.0
            target = eye / d if i == j else 0.0 * eye
            if np.max(np.abs(twirl(g, e) - target)) > tol:
                return False
    return True


def group_from_config(obj) -> DecouplingGroup:
    """``"pauli_1"``-style builtin name or a list of operator literals."""
    if isinstance(obj, str):
        name = obj.strip()
        if name.startswith("pauli_"):
            try:
                n = int(name.split("_", 1)[1])
            except ValueError:
                raise ValueError(f"unknown group name {obj!r}") from None
            return pauli_group(n)
        raise ValueError(f"unknown group name {obj!r}")
    if isinstance(obj, dict):
        return DecouplingGroup(
            tuple(parse_operator_literal(e) for e in obj["elements"]),
            name=obj.get("name", "custom"),
        )
    if isinstance(obj, Sequence):
        return DecouplingGroup(tuple(parse_operator_literal(e) for e in obj))
    raise ValueError(f"cannot interpret group specification of type {type(obj).__name__}")

"""
Quantum channels in Kraus form and the transitions they allow.

A channel Φ(A) = Σ K_i A K_i* is trace preserving when Σ K_i* K_i = I. A
system prepared in v can end up in w (with nonzero probability, after some
sequence of the available channels) exactly when ⟨B v, w⟩ ≠ 0 for some B in
the unital algebra generated by all the Kraus matrices. Invariant subspaces
of that algebra are traps the system cannot leave.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from src.algebra.invariant import Lattice, invariant_lattice, orbit_subspace
from src.algebra.matspan import OperatorAlgebra, close_algebra
from src.exceptions import CPTPViolationError, DimensionMismatchError, PreconditionError
from src.linalg.backend import Backend, get_backend

logger = logging.getLogger(__name__)


@dataclass
class KrausChannel:
    n: int
    kraus: list
    cptp_residual: float  # max |entry| of Σ K*K - I


@dataclass
class ReachabilityAlgebra:
    algebra: OperatorAlgebra
    channel_count: int = 1


def _residual(kraus: Sequence[np.ndarray], backend: Backend) -> np.ndarray:
    n = kraus[0].shape[0]
    total = backend.zeros((n, n))
    for k in kraus:
        total = total + backend.adjoint(k) @ k
    return total - backend.eye(n)


def validate_channel(kraus: Sequence[np.ndarray], backend: Backend = None) -> KrausChannel:
    """Check Σ K_i* K_i = I (exactly, or within tolerance)."""
    backend = backend or get_backend()
    if not kraus:
        raise PreconditionError("a channel needs at least one Kraus matrix", "validate_channel")
    kraus = [backend.asarray(k) for k in kraus]
    n = kraus[0].shape[0]
    for k in kraus:
        if k.shape != (n, n):
            raise DimensionMismatchError("Kraus matrices must be square and share a size", n, k.shape[0])
    residual = _residual(kraus, backend)
    magnitude = max((backend.magnitude(x) for x in residual.flat), default=0.0)
    if not backend.is_zero_array(residual):
        raise CPTPViolationError("Kraus matrices do not satisfy sum K*K = I", magnitude)
    return KrausChannel(n, kraus, magnitude)


def normalize_kraus(kraus: Sequence[np.ndarray], backend: Backend = None) -> list:
    """K_i (Σ K*K)^{-1/2}, which is trace preserving (numeric backend only)."""
    backend = backend or get_backend("numeric")
    if not backend.can_normalize:
        raise PreconditionError("the inverse square root leaves the field", "normalize_kraus", backend.name)
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    total = sum(k.conj().T @ k for k in kraus)
    correction = scipy.linalg.fractional_matrix_power(total, -0.5)
    return [k @ correction for k in kraus]


def recombine_kraus(channel: KrausChannel, u: np.ndarray, backend: Backend = None) -> KrausChannel:
    """K'_j = Σ_i u_ji K_i for a unitary u; the channel itself is unchanged."""
    backend = backend or get_backend()
    u = backend.asarray(u)
    m = len(channel.kraus)
    if u.shape != (m, m):
        raise DimensionMismatchError("recombination matrix must match the Kraus count", m, u.shape[0])
    if not backend.arrays_equal(backend.adjoint(u) @ u, backend.eye(m)):
        raise PreconditionError("recombination matrix is not unitary", "recombine_kraus")
    mixed = []
    for j in range(m):
        total = backend.zeros((channel.n, channel.n))
        for i, k in enumerate(channel.kraus):
            total = total + k * u[j, i]
        mixed.append(total)
    return validate_channel(mixed, backend)


def reachability_algebra(channels: Sequence[KrausChannel], backend: Backend = None) -> ReachabilityAlgebra:
    """Unital algebra generated by every Kraus matrix of every channel."""
    backend = backend or get_backend()
    if not channels:
        raise PreconditionError("at least one channel is required", "reachability_algebra")
    n = channels[0].n
    generators = []
    for channel in channels:
        if channel.n != n:
            raise DimensionMismatchError("channels act on different spaces", n, channel.n)
        generators.extend(channel.kraus)
    algebra = close_algebra(generators, True, backend, n)
    logger.info("Reachability algebra of %d channels has dimension %d", len(channels), algebra.dim)
    return ReachabilityAlgebra(algebra, len(channels))


def _prepare(reach: ReachabilityAlgebra, vector, length: int, name: str):
    backend = reach.algebra.backend
    vector = backend.asarray(vector)
    if len(vector) != length:
        raise DimensionMismatchError(f"{name} has the wrong length", length, len(vector))
    if backend.is_zero_array(vector):
        raise PreconditionError(f"{name} must be nonzero", "can_transition")
    return backend.normalize(vector) if backend.can_normalize else vector


def transition_witness(reach: ReachabilityAlgebra, v, w) -> Optional[np.ndarray]:
    """First basis element B with ⟨B v, w⟩ ≠ 0, or None."""
    algebra = reach.algebra
    backend = algebra.backend
    v = _prepare(reach, v, algebra.n, "v")
    w = _prepare(reach, w, algebra.n, "w")
    for b in algebra.basis:
        if not backend.is_zero(backend.inner(b @ v, w)):
            return b
    return None


def can_transition(reach: ReachabilityAlgebra, v, w) -> bool:
    return transition_witness(reach, v, w) is not None


def reachable_subspace(reach: ReachabilityAlgebra, v):
    """span{B v : B in the algebra}."""
    return orbit_subspace(reach.algebra, _prepare(reach, v, reach.algebra.n, "v"))


def can_transition_composite(reach: ReachabilityAlgebra, v, w, k: int) -> bool:
    """⟨(B ⊗ I_k) v, w⟩ ≠ 0 for some basis B, with v, w in C^n ⊗ C^k."""
    algebra = reach.algebra
    backend = algebra.backend
    length = algebra.n * k
    v = _prepare(reach, v, length, "v")
    w = _prepare(reach, w, length, "w")
    identity = backend.eye(k)
    return any(
        not backend.is_zero(backend.inner(np.kron(b, identity) @ v, w)) for b in algebra.basis
    )


def trap_subspaces(
    reach: ReachabilityAlgebra, budget: Optional[int] = None, seed: Optional[int] = None
) -> Lattice:
    """Invariant subspaces of the reachability algebra (complete only when certified)."""
    return invariant_lattice(reach.algebra, budget=budget, seed=seed)

"""Dense multipartite operator plumbing.

Operators are dense complex128 ndarrays in row-major layout. A composite
system is described by a tuple of local dimensions ``dims``; basis index
``(i_1, ..., i_n)`` flattens to ``i_1*prod(dims[1:]) + ...`` exactly as
``numpy.kron`` orders it. All logarithms here are base 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from math import log2, prod

import numpy as np

# Tolerances shared across the package (see also require_* validators).
HERM_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
SUPPORT_TOL = 1e-12

LN2 = float(np.log(2.0))


def require_hermitian(op: np.ndarray, tol: float = HERM_TOL, what: str = "operator") -> np.ndarray:
    """Validate hermiticity and return the exactly hermitized array."""
    op = np.asarray(op, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ValueError(f"{what} must be a square matrix, got shape {op.shape}")
    dev = float(np.max(np.abs(op - op.conj().T))) if op.size else 0.0
    if dev > tol:
        raise ValueError(f"{what} is not hermitian: max deviation {dev:.3e} > {tol:.1e}")
    return 0.5 * (op + op.conj().T)


def require_density(op: np.ndarray, dims=None, psd_tol: float = PSD_TOL,
                    trace_tol: float = TRACE_TOL) -> np.ndarray:
    """Validate a density operator (hermitian, PSD up to psd_tol, unit trace)."""
    op = require_hermitian(op, what="state")
    if dims is not None and op.shape[0] != prod(dims):
        raise ValueError(f"operator dim {op.shape[0]} does not match dims {tuple(dims)}")
    tr = float(np.real(np.trace(op)))
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"state trace {tr} deviates from 1 by more than {trace_tol:.1e}")
    lo = float(np.linalg.eigvalsh(op)[0])
    if lo < -psd_tol:
        raise ValueError(f"state has negative eigenvalue {lo:.3e} below -{psd_tol:.1e}")
    return op


@dataclass(frozen=True)
class MultiState:
    """Density operator ``op`` on a composite space with local dimensions ``dims``."""

    dims: tuple[int, ...]
    op: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"invalid dims {dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "op", require_density(self.op, dims))

    @property
    def dim(self) -> int:
        return prod(self.dims)

    def __eq__(self, other):
        return (isinstance(other, MultiState) and self.dims == other.dims
                and np.array_equal(self.op, other.op))


def as_state(x, dims=None) -> MultiState:
    """Coerce a MultiState or a raw array (with explicit dims) to MultiState."""
    if isinstance(x, MultiState):
        return x
    if dims is None:
        raise ValueError("dims required when passing a raw array")
    return MultiState(tuple(dims), np.asarray(x, dtype=complex))


def kron_all(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of the given operators, left to right."""
    if not ops:
        raise ValueError("need at least one operator")
    return reduce(np.kron, [np.asarray(o, dtype=complex) for o in ops])


def _as_tensor(op: np.ndarray, dims) -> np.ndarray:
    n = len(dims)
    return np.asarray(op, dtype=complex).reshape(*dims, *dims), n


def partial_trace(op: np.ndarray, dims, keep) -> np.ndarray:
    """Trace out every subsystem not in ``keep`` (indices into ``dims``).

    Returns the reduced operator on the kept subsystems in their original
    relative order.
    """
    dims = tuple(dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"keep {keep} out of range for {len(dims)} subsystems")
    t, n = _as_tensor(op, dims)
    drop = [i for i in range(n) if i not in keep]
    for count, i in enumerate(drop):
        # axes shift down as traced axes disappear
        ax = i - sum(1 for j in drop[:count] if j < i)
        t = np.trace(t, axis1=ax, axis2=ax + (n - count))
    dkeep = prod(dims[k] for k in keep) if keep else 1
    return t.reshape(dkeep, dkeep)


def partial_transpose(op: np.ndarray, dims, sys) -> np.ndarray:
    """Transpose the subsystems listed in ``sys`` (indices into ``dims``)."""
    dims = tuple(dims)
    sys = sorted(set(int(s) for s in sys))
    if any(s < 0 or s >= len(dims) for s in sys):
        raise ValueError(f"sys {sys} out of range for {len(dims)} subsystems")
    t, n = _as_tensor(op, dims)
    perm = list(range(2 * n))
    for s in sys:
        perm[s], perm[s + n] = perm[s + n], perm[s]
    d = prod(dims)
    return t.transpose(perm).reshape(d, d)


def permute_systems(op: np.ndarray, dims, perm) -> np.ndarray:
    """Reorder subsystems so that new position k holds old subsystem perm[k]."""
    dims = tuple(dims)
    perm = list(int(p) for p in perm)
    if sorted(perm) != list(range(len(dims))):
        raise ValueError(f"perm {perm} is not a permutation of {len(dims)} subsystems")
    t, n = _as_tensor(op, dims)
    d = prod(dims)
    return t.transpose(perm + [p + n for p in perm]).reshape(d, d)


def group_copies(op: np.ndarray, dims, n: int) -> tuple[np.ndarray, tuple[int, ...]]:
    """View the n-fold kron power of a multipartite operator party-by-party.

    ``op`` must live on ``dims`` repeated n times in copy order
    (A1 B1 ... A2 B2 ...); the result collects each party's copies together
    (A1 A2 ... B1 B2 ...) and returns (operator, grouped dims) where grouped
    dims are (d_A^n, d_B^n, ...).
    """
    k = len(dims)
    full = tuple(dims) * n
    perm = [c * k + p for p in range(k) for c in range(n)]
    out = permute_systems(op, full, perm)
    grouped = tuple(int(d) ** n for d in dims)
    return out, grouped


def copies_state(state: MultiState, n: int) -> MultiState:
    """Party-grouped n-copy state: ρ^⊗n on dims (d_A^n, d_B^n, ...)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    op = state.op
    for _ in range(n - 1):
        op = np.kron(op, state.op)
    out, grouped = group_copies(op, state.dims, n)
    return MultiState(grouped, out)


def eigh_clipped(op: np.ndarray, floor: float = 0.0):
    """Hermitian eigendecomposition with eigenvalues clipped below at floor."""
    w, v = np.linalg.eigh(require_hermitian(op))
    return np.clip(w, floor, None), v


def trace_norm(op: np.ndarray) -> float:
    """Sum of absolute eigenvalues of a hermitian operator."""
    return float(np.sum(np.abs(np.linalg.eigvalsh(require_hermitian(op)))))


def positive_part_trace(op: np.ndarray) -> float:
    """tr(op)_+ : sum of positive eigenvalues of a hermitian operator."""
    w = np.linalg.eigvalsh(require_hermitian(op))
    return float(np.sum(w[w > 0.0]))


def positive_eigenprojector(op: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Projector onto the strictly positive eigenspace of a hermitian operator."""
    w, v = np.linalg.eigh(require_hermitian(op))
    cols = v[:, w > tol]
    return cols @ cols.conj().T


def von_neumann_entropy(op: np.ndarray) -> float:
    """S(ρ) = -tr ρ log2 ρ, with 0 log 0 = 0."""
    w = np.linalg.eigvalsh(require_hermitian(op))
    if w[0] < -PSD_TOL:
        raise ValueError(f"entropy of non-PSD operator (min eig {w[0]:.3e})")
    w = w[w > 0.0]
    return float(-np.sum(w * np.log2(w)))


def matrix_log2_on_support(op: np.ndarray, support_tol: float = SUPPORT_TOL):
    """log2 of a PSD operator restricted to its support.

    Returns (log_op, support_projector). Eigenvalues at or below
    support_tol * max_eig count as kernel.
    """
    w, v = np.linalg.eigh(require_hermitian(op))
    cut = support_tol * max(float(w[-1]), 0.0)
    mask = w > cut
    ws, vs = w[mask], v[:, mask]
    log_op = (vs * np.log2(ws)) @ vs.conj().T
    proj = vs @ vs.conj().T
    return log_op, proj


def relative_entropy(rho, sigma, support_tol: float = SUPPORT_TOL) -> float:
    """S(ρ||σ) = tr ρ (log2 ρ − log2 σ); +inf if supp ρ ⊄ supp σ.

    Support comparison uses ``support_tol`` relative to the largest
    eigenvalue of σ: any ρ-mass beyond that on σ's kernel gives +inf.
    """
    r = rho.op if isinstance(rho, MultiState) else require_hermitian(rho, what="rho")
    s = sigma.op if isinstance(sigma, MultiState) else require_hermitian(sigma, what="sigma")
    if r.shape != s.shape:
        raise ValueError(f"shape mismatch {r.shape} vs {s.shape}")
    log_s, proj = matrix_log2_on_support(s, support_tol)
    leak = float(np.real(np.trace(r))) - float(np.real(np.trace(proj @ r @ proj)))
    if leak > 1e-10:
        return float("inf")
    wr = np.linalg.eigvalsh(r)
    wr = wr[wr > 0.0]
    s_rho = float(np.sum(wr * np.log2(wr)))
    return s_rho - float(np.real(np.trace(r @ log_s)))


def relative_entropy_gradient(rho: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Gradient of σ ↦ −tr(ρ log2 σ) at full-rank σ (Daleckii–Krein formula).

    The directional derivative along hermitian Δ is Re tr(G Δ).
    """
    r = require_hermitian(rho, what="rho")
    w, v = np.linalg.eigh(require_hermitian(sigma, what="sigma"))
    if w[0] <= 0.0:
        raise ValueError("gradient needs strictly positive sigma; regularize first")
    lw = np.log(w)
    # divided differences of ln at the eigenvalues
    num = lw[:, None] - lw[None, :]
    den = w[:, None] - w[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma = np.where(np.abs(den) > 1e-14 * max(w[-1], 1.0), num / den, 0.0)
    gamma[np.abs(den) <= 1e-14 * max(w[-1], 1.0)] = 0.0
    gamma += np.diag(1.0 / w - np.diag(gamma))
    rt = v.conj().T @ r @ v
    g = v @ (rt * gamma) @ v.conj().T
    return -0.5 * (g + g.conj().T) / LN2


def fidelity_with(op: np.ndarray, target: np.ndarray) -> float:
    """Re tr(op · target) — overlap of a state with a projector/POVM element."""
    return float(np.real(np.trace(np.asarray(op) @ np.asarray(target))))


def bits(x: float) -> float:
    """log2 wrapper that tolerates the x=0 edge by returning -inf."""
    return float("-inf") if x <= 0.0 else log2(x)

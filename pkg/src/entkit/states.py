"""Reference states and seeded random state generators.

Conventions: the maximally entangled projector on K⊗K is
Φ(K) = (1/K) ΣΣ |i,i⟩⟨j,j|; the isotropic family is parameterized by its
fidelity F = tr(ρ Φ(K)), and an isotropic state is separable iff F ≤ 1/K.
For separable isotropic states this module also produces *exact* explicit
product-state decompositions (used as inner certificates elsewhere).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import prod

import numpy as np

from .tensor import MultiState, kron_all, require_hermitian


def max_entangled(K: int) -> MultiState:
    """Projector onto (1/√K) Σ|i,i⟩ as a MultiState on (K, K)."""
    if K < 2:
        raise ValueError("K must be >= 2")
    phi = np.zeros((K * K, K * K), dtype=complex)
    for i in range(K):
        for j in range(K):
            phi[i * K + i, j * K + j] = 1.0 / K
    return MultiState((K, K), phi)


def max_entangled_op(K: int) -> np.ndarray:
    return max_entangled(K).op


@dataclass(frozen=True)
class IsotropicParams:
    """K⊗K isotropic state parameters; separable iff fidelity <= 1/K."""

    K: int
    fidelity: float

    def __post_init__(self):
        if self.K < 2:
            raise ValueError("K must be >= 2")
        if not 0.0 <= self.fidelity <= 1.0:
            raise ValueError("fidelity must lie in [0, 1]")

    @property
    def separable(self) -> bool:
        return self.fidelity <= 1.0 / self.K + 1e-12


def isotropic(K: int, fidelity: float) -> MultiState:
    """F·Φ(K) + (1−F)·(I−Φ(K))/(K²−1)."""
    p = IsotropicParams(K, fidelity)
    phi = max_entangled_op(K)
    eye = np.eye(K * K, dtype=complex)
    op = p.fidelity * phi + (1.0 - p.fidelity) * (eye - phi) / (K * K - 1)
    return MultiState((K, K), op)


def isotropic_fidelity(state: MultiState) -> float:
    """tr(ρ Φ(K)) for a square bipartite state."""
    dA, dB = state.dims
    if dA != dB:
        raise ValueError("isotropic fidelity needs a K⊗K state")
    return float(np.real(np.trace(state.op @ max_entangled_op(dA))))


def twirl_project(op: np.ndarray, K: int) -> np.ndarray:
    """Project onto the isotropic family, preserving tr(·Φ(K)) and the trace.

    Realizes the average over local conjugations U⊗U* without sampling:
    op ↦ tr(opΦ)·Φ + tr(op(I−Φ))·(I−Φ)/(K²−1).
    """
    phi = max_entangled_op(K)
    eye = np.eye(K * K, dtype=complex)
    f = np.real(np.trace(op @ phi))
    rest = np.real(np.trace(op)) - f
    return f * phi + rest * (eye - phi) / (K * K - 1)


def is_twirl_invariant(state: MultiState, tol: float = 1e-12) -> bool:
    """True for square bipartite states fixed by the U⊗U* average."""
    dA, dB = state.dims if len(state.dims) == 2 else (None, None)
    if dA is None or dA != dB:
        return False
    return float(np.max(np.abs(twirl_project(state.op, dA) - state.op))) <= tol


def werner(d: int, p: float) -> MultiState:
    """p·(normalized antisymmetric projector) + (1−p)·(normalized symmetric)."""
    if d < 2:
        raise ValueError("d must be >= 2")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    swap = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            swap[i * d + j, j * d + i] = 1.0
    eye = np.eye(d * d, dtype=complex)
    p_sym = 0.5 * (eye + swap)
    p_anti = 0.5 * (eye - swap)
    op = p * p_anti * (2.0 / (d * d - d)) + (1.0 - p) * p_sym * (2.0 / (d * d + d))
    return MultiState((d, d), op)


def random_state(dims, rank: int | None = None, seed: int = 0) -> MultiState:
    """Seeded mixed state: GG†/tr with G a d×rank complex normal matrix."""
    dims = tuple(int(x) for x in dims)
    d = prod(dims)
    rank = d if rank is None else int(rank)
    if not 1 <= rank <= d:
        raise ValueError(f"rank must be in [1, {d}]")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    op = g @ g.conj().T
    return MultiState(dims, op / np.real(np.trace(op)))


def random_product_vectors(dims, seed: int = 0) -> list[np.ndarray]:
    """One seeded Haar-ish unit vector per subsystem."""
    rng = np.random.default_rng(seed)
    vecs = []
    for d in dims:
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        vecs.append(v / np.linalg.norm(v))
    return vecs


def random_product_pure(dims, seed: int = 0) -> MultiState:
    """Projector onto a seeded random product vector."""
    vecs = random_product_vectors(dims, seed)
    full = vecs[0]
    for v in vecs[1:]:
        full = np.kron(full, v)
    return MultiState(tuple(dims), np.outer(full, full.conj()))


@dataclass
class SeparableDecomposition:
    """Explicit mixture Σ w_i |v_i1..v_ik⟩⟨...| of product pure states.

    ``local_vectors[i]`` is the list of per-party unit vectors of term i.
    ``reconstruct()`` rebuilds the mixture exactly; decompositions produced
    by the closed-form routes match their target to numerical precision,
    search-based ones carry an explicit residual reported by the caller.
    """

    dims: tuple[int, ...]
    weights: np.ndarray
    local_vectors: list[list[np.ndarray]] = field(repr=False)

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self.weights = np.asarray(self.weights, dtype=float)
        if np.any(self.weights < -1e-12):
            raise ValueError("negative weight in decomposition")
        if len(self.local_vectors) != self.weights.size:
            raise ValueError("weights / terms length mismatch")

    @property
    def n_terms(self) -> int:
        return int(self.weights.size)

    def term_vector(self, i: int) -> np.ndarray:
        full = self.local_vectors[i][0]
        for v in self.local_vectors[i][1:]:
            full = np.kron(full, v)
        return full

    def reconstruct(self) -> np.ndarray:
        d = prod(self.dims)
        out = np.zeros((d, d), dtype=complex)
        for i, w in enumerate(self.weights):
            if w == 0.0:
                continue
            v = self.term_vector(i)
            out += w * np.outer(v, v.conj())
        return out

    def scaled(self, factor: float) -> "SeparableDecomposition":
        return SeparableDecomposition(self.dims, self.weights * factor, self.local_vectors)

    @staticmethod
    def merge(parts: list["SeparableDecomposition"], coeffs) -> "SeparableDecomposition":
        dims = parts[0].dims
        if any(p.dims != dims for p in parts):
            raise ValueError("mismatched dims in merge")
        weights = np.concatenate([c * p.weights for c, p in zip(coeffs, parts)])
        vectors = [vs for p in parts for vs in p.local_vectors]
        return SeparableDecomposition(dims, weights, vectors)

    @staticmethod
    def product(a: "SeparableDecomposition", b: "SeparableDecomposition",
                interleave: bool = False) -> "SeparableDecomposition":
        """Tensor product decomposition on dims a.dims + b.dims."""
        weights = np.outer(a.weights, b.weights).ravel()
        vectors = []
        for va in a.local_vectors:
            for vb in b.local_vectors:
                vectors.append(list(va) + list(vb))
        return SeparableDecomposition(a.dims + b.dims, weights, vectors)


def random_separable(dims, m: int = 8, seed: int = 0) -> tuple[MultiState, SeparableDecomposition]:
    """Seeded mixture of m product pure states with random simplex weights."""
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = np.random.default_rng(seed)
    dims = tuple(int(x) for x in dims)
    raw = rng.exponential(size=m)
    weights = raw / raw.sum()
    vectors = []
    for _ in range(m):
        term = []
        for d in dims:
            v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            term.append(v / np.linalg.norm(v))
        vectors.append(term)
    dec = SeparableDecomposition(dims, weights, vectors)
    return MultiState(dims, require_hermitian(dec.reconstruct())), dec


def computational_product_decomposition(dims) -> SeparableDecomposition:
    """I/d as the uniform mixture of all computational product states."""
    dims = tuple(int(x) for x in dims)
    d = prod(dims)
    vectors = []
    for idx in itertools.product(*(range(k) for k in dims)):
        term = []
        for pos, k in enumerate(dims):
            e = np.zeros(k, dtype=complex)
            e[idx[pos]] = 1.0
            term.append(e)
        vectors.append(term)
    return SeparableDecomposition(dims, np.full(d, 1.0 / d), vectors)


def _phase_product_terms(K: int, twist: np.ndarray | None = None):
    """All 4^K pairs (v, w): v a quarter-phase vector, w = conj(v) (times twist)."""
    terms = []
    for ms in itertools.product(range(4), repeat=K):
        v = np.exp(0.5j * np.pi * np.asarray(ms)) / np.sqrt(K)
        w = v.conj() if twist is None else v.conj() * twist
        terms.append([v, w / np.linalg.norm(w)])
    return terms


def _classical_pair_terms(K: int, diagonal: bool):
    terms = []
    for i in range(K):
        for j in range(K):
            if (i == j) != diagonal:
                continue
            ei = np.zeros(K, dtype=complex)
            ej = np.zeros(K, dtype=complex)
            ei[i] = 1.0
            ej[j] = 1.0
            terms.append([ei, ej])
    return terms


def isotropic_boundary_decomposition(K: int) -> SeparableDecomposition:
    """Exact product decomposition of the fidelity-1/K isotropic state.

    The quarter-phase ensemble E = avg over |v⟩⟨v| ⊗ |v*⟩⟨v*| equals
    Φ/K + (I − D)/K² (D the diagonal-pair projector), and
    (K·E + D/K)/(K+1) is exactly the boundary isotropic state.
    """
    phase = _phase_product_terms(K)
    diag = _classical_pair_terms(K, diagonal=True)
    n_phase = len(phase)
    w_phase = np.full(n_phase, (K / (K + 1.0)) / n_phase)
    w_diag = np.full(K, (1.0 / (K + 1.0)) / K)
    return SeparableDecomposition(
        (K, K), np.concatenate([w_phase, w_diag]), phase + diag)


def isotropic_zero_decomposition(K: int) -> SeparableDecomposition:
    """Exact product decomposition of (I − Φ(K))/(K²−1) (fidelity 0).

    Uses the root-of-unity twisted phase ensembles: for each m = 1..K−1 the
    ensemble with w_j = conj(v_j)·e^{2πi m j/K} averages to
    (I−D)/K² + Φ_m/K with Φ_m a generalized Bell state orthogonal to Φ, and
    Σ_m Φ_m = D − Φ; mixing in the off-diagonal classical pairs cancels the
    rest.
    """
    all_terms: list[list[np.ndarray]] = []
    weights: list[np.ndarray] = []
    for m in range(1, K):
        twist = np.exp(2j * np.pi * m * np.arange(K) / K)
        terms = _phase_product_terms(K, twist)
        all_terms += terms
        weights.append(np.full(len(terms), (K / (K + 1.0)) / (K - 1) / len(terms)))
    off = _classical_pair_terms(K, diagonal=False)
    all_terms += off
    weights.append(np.full(len(off), (1.0 / (K + 1.0)) / len(off)))
    return SeparableDecomposition((K, K), np.concatenate(weights), all_terms)


def isotropic_separable_decomposition(K: int, fidelity: float) -> SeparableDecomposition:
    """Exact product decomposition of any separable isotropic state (F ≤ 1/K)."""
    if fidelity < -1e-12 or fidelity > 1.0 / K + 1e-12:
        raise ValueError(f"no separable isotropic state with K={K}, F={fidelity}")
    f = min(max(fidelity, 0.0), 1.0 / K)
    q = K * f
    parts = [isotropic_boundary_decomposition(K), isotropic_zero_decomposition(K)]
    return SeparableDecomposition.merge(parts, [q, 1.0 - q])

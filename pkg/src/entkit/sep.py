"""Separable-set geometry: membership tests, linear optimization, distances.

Two-sided logic used throughout the package:

* outer (sound upper bounds on separable optima / lower bounds on
  distances): positive-partial-transpose relaxations solved as cone
  programs;
* inner (feasible points): explicit product-state mixtures, found by
  alternating local eigenvector searches and conditional-gradient loops.

On 2⊗2 and 2⊗3 the PPT cone coincides with the separable cone, so outer
results there are exact; certificates carry a ``ppt-exact`` label. On all
other profiles results are honest two-sided brackets.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np
from scipy.optimize import nnls

from .cone import ConeProgram, ConeSolution, solve
from .states import SeparableDecomposition
from .tensor import (MultiState, partial_transpose, require_hermitian,
                     trace_norm)

PPT_EXACT_PROFILES = {(2, 2), (2, 3), (3, 2)}


def ppt_exact(dims) -> bool:
    """True when PPT membership is equivalent to separability (2⊗2, 2⊗3)."""
    return tuple(dims) in PPT_EXACT_PROFILES


def default_cut(dims) -> tuple[int, ...]:
    """Transpose the last subsystem by default (the B side of a bipartition)."""
    return (len(tuple(dims)) - 1,)


def is_ppt(state, dims=None, cut=None, tol: float = 1e-10) -> bool:
    """Positive partial transpose test: min eig of ρ^{T_cut} >= -tol."""
    if isinstance(state, MultiState):
        op, dims = state.op, state.dims
    else:
        op = require_hermitian(state)
        if dims is None:
            raise ValueError("dims required for raw arrays")
    cut = default_cut(dims) if cut is None else tuple(cut)
    w = np.linalg.eigvalsh(partial_transpose(op, dims, cut))
    return bool(w[0] >= -tol)


def _phase_fix(v: np.ndarray) -> np.ndarray:
    idx = int(np.argmax(np.abs(v)))
    ph = v[idx] / abs(v[idx]) if abs(v[idx]) > 0 else 1.0
    return v / ph


def _local_matrix(h_t: np.ndarray, dims, vectors, k: int) -> np.ndarray:
    """Effective operator on party k given the other parties' vectors.

    h_t is h reshaped to (dims, dims); contract every bra/ket index except
    party k's with conj(v_j)/v_j.
    """
    n = len(dims)
    t = h_t
    # contract ket-side (axes n..2n-1) then bra-side, skipping party k
    for j in reversed(range(n)):
        if j == k:
            continue
        t = np.tensordot(t, vectors[j], axes=([n + j], [0]))
    for j in reversed(range(n)):
        if j == k:
            continue
        t = np.tensordot(np.conj(vectors[j]), t, axes=([0], [j]))
    return t


def max_product_overlap(h, dims=None, restarts: int = 32, sweep_tol: float = 1e-9,
                        max_sweeps: int = 200, seed: int = 0):
    """max ⟨v_1…v_n| h |v_1…v_n⟩ over unit product vectors (heuristic).

    Alternating local eigenvector updates from seeded random starts plus a
    deterministic start from the top eigenvector's Schmidt factors. The
    value is a certified *lower* bound on the true maximum (it is attained
    by the returned vectors); ties between restarts keep the first found.

    Returns (value, vectors).
    """
    if isinstance(h, MultiState):
        h, dims = h.op, h.dims
    h = require_hermitian(h)
    dims = tuple(dims)
    n = len(dims)
    d = prod(dims)
    if h.shape[0] != d:
        raise ValueError(f"h dim {h.shape[0]} does not match dims {dims}")
    h_t = h.reshape(*dims, *dims)
    rng = np.random.default_rng(seed)

    def overlap(vectors):
        full = vectors[0]
        for v in vectors[1:]:
            full = np.kron(full, v)
        return float(np.real(np.vdot(full, h @ full)))

    def sweep(vectors):
        val = overlap(vectors)
        for _ in range(max_sweeps):
            for k in range(n):
                m = _local_matrix(h_t, dims, vectors, k)
                m = 0.5 * (m + m.conj().T)
                w, u = np.linalg.eigh(m)
                vectors[k] = _phase_fix(u[:, -1])
            new = overlap(vectors)
            if new <= val + sweep_tol:
                val = max(val, new)
                break
            val = new
        return val, vectors

    starts = []
    # deterministic start: Schmidt-like factors of the top eigenvector
    w_all, v_all = np.linalg.eigh(h)
    top = v_all[:, -1]
    det = []
    rest = top.reshape(dims)
    for k in range(n - 1):
        m = rest.reshape(dims[k], -1)
        u, s, vt = np.linalg.svd(m, full_matrices=False)
        det.append(_phase_fix(u[:, 0]))
        rest = vt[0]
    det.append(_phase_fix(rest / np.linalg.norm(rest)))
    starts.append(det)
    for _ in range(max(0, restarts - 1)):
        vs = []
        for dk in dims:
            v = rng.standard_normal(dk) + 1j * rng.standard_normal(dk)
            vs.append(v / np.linalg.norm(v))
        starts.append(vs)

    best_val, best_vecs = -np.inf, None
    for vecs in starts:
        val, out = sweep([v.copy() for v in vecs])
        if val > best_val + 1e-15:
            best_val, best_vecs = val, [v.copy() for v in out]
    return best_val, best_vecs


def product_minimize(h, dims, **kw):
    """min over product vectors of ⟨v|h|v⟩ plus the argmin vectors."""
    val, vecs = max_product_overlap(-np.asarray(h, dtype=complex), dims, **kw)
    return -val, vecs


def ppt_linear_bound(a, dims, sense: str = "max", cut=None, tol: float = 1e-9) -> ConeSolution:
    """Optimize Re tr(a σ) over PPT states σ (outer bound for separable σ)."""
    a = require_hermitian(a)
    dims = tuple(dims)
    cut = default_cut(dims) if cut is None else tuple(cut)
    sign = -1.0 if sense == "max" else 1.0
    p = ConeProgram()
    p.add_var("sigma", dims)
    p.minimize({"sigma": sign * a})
    p.psd(p.affine([("sigma", 1.0)]), "sigma_psd")
    p.psd(p.affine([("sigma", 1.0, cut)]), "sigma_ppt")
    p.trace_eq(p.affine([("sigma", 1.0)]), 1.0, "sigma_trace")
    sol = solve(p, tol=tol)
    if sol.ok or sol.status == "inaccurate":
        sol.objective *= sign
        sol.dual_objective *= sign
    return sol


# ---------------------------------------------------------------------------
# decomposition search: approximate a target by a product-state mixture
# ---------------------------------------------------------------------------

def _atom_matrix(vectors) -> np.ndarray:
    full = vectors[0]
    for v in vectors[1:]:
        full = np.kron(full, v)
    return np.outer(full, full.conj())


def _nnls_weights(target: np.ndarray, atoms: list[np.ndarray], trace_weight: float = 4.0):
    """Least-squares weights >= 0 matching target, softly pinning Σw = tr(target)."""
    d = target.shape[0]
    cols = []
    for a in atoms:
        cols.append(np.concatenate([a.real.ravel(), a.imag.ravel(), [trace_weight]]))
    mat = np.stack(cols, axis=1)
    rhs = np.concatenate([target.real.ravel(), target.imag.ravel(),
                          [trace_weight * float(np.real(np.trace(target)))]])
    w, _ = nnls(mat, rhs)
    return w


def approximate_decomposition(target, dims, tol: float = 1e-7, max_atoms: int = 220,
                              seed: int = 0, restarts: int = 12):
    """Greedy product-state mixture fit of a (presumed separable) operator.

    Fully corrective conditional gradient on ½‖target − Σ w_i P_i‖²_F with
    nonnegative-least-squares reoptimization each round. Returns
    (SeparableDecomposition, residual_trace_norm). The residual is honest:
    callers must treat the reconstruction, not the target, as the certified
    separable object.
    """
    if isinstance(target, MultiState):
        target, dims = target.op, target.dims
    target = require_hermitian(target)
    dims = tuple(dims)
    atoms: list[np.ndarray] = []
    vecs: list[list[np.ndarray]] = []
    current = np.zeros_like(target)
    w = np.zeros(0)
    rng_seq = iter(range(seed, seed + 10 * max_atoms))
    plateau_rn = np.inf
    for it in range(max_atoms):
        resid = target - current
        rn = trace_norm(resid)
        if rn <= tol:
            break
        # stop once twelve rounds buy less than half a percent
        if it % 12 == 0:
            if rn > 0.995 * plateau_rn:
                break
            plateau_rn = rn
        # steepest product direction into the residual; early rounds search
        # harder, later ones only need a descent direction
        r_eff = restarts if it < 8 else max(3, restarts // 4)
        val, vset = max_product_overlap(resid, dims, restarts=r_eff,
                                        seed=next(rng_seq))
        if val <= 1e-14 and it > 0:
            break
        atoms.append(_atom_matrix(vset))
        vecs.append(vset)
        w = _nnls_weights(target, atoms)
        current = sum(wi * ai for wi, ai in zip(w, atoms))
    keep = w > 1e-14 if w.size else np.zeros(0, dtype=bool)
    dec = SeparableDecomposition(dims, w[keep] if w.size else np.zeros(0),
                                 [v for v, k in zip(vecs, keep) if k])
    resid = trace_norm(target - dec.reconstruct()) if dec.n_terms else trace_norm(target)
    return dec, resid


def separable_ball_radius(dims) -> float:
    """Frobenius radius of the separable ball around I/d (Gurvits-Barnum)."""
    d = int(np.prod(dims))
    return 1.0 / np.sqrt(d * (d - 1.0))


def absorb_into_cone(err, dims, margin_factor: float = 1.001):
    """Smallest c (up to a safety factor) with c·I/d + err in the separable cone.

    Any hermitian defect can be soaked up by enough of the maximally mixed
    state: once normalized, the repaired operator sits inside the
    Gurvits-Barnum separable ball around I/d. Returns (c, info); info carries
    the re-checkable ball condition ratio (must be <= 1).
    """
    err = require_hermitian(err)
    d = err.shape[0]
    t = float(np.real(np.trace(err)))
    traceless = err - (t / d) * np.eye(d)
    norm0 = float(np.linalg.norm(traceless))
    radius = separable_ball_radius(dims)
    c = max(0.0, norm0 / radius - t) * margin_factor + 1e-13
    ratio = norm0 / (radius * (c + t)) if c + t > 0 else (0.0 if norm0 == 0 else np.inf)
    return c, {"kind": "mixed-ball-repair", "trace_cost": c, "ball_ratio": ratio,
               "defect_frobenius": norm0}


def nearest_sep_distance(state: MultiState, tol: float = 1e-6, cut=None, seed: int = 0):
    """Trace-norm distance from ρ to the separable states, as (lower, upper, info).

    lower: cone program over the PPT relaxation (exact on 2⊗2/2⊗3);
    upper: ‖ρ − rec‖₁ for the best explicit separable point found
    (the PPT optimizer when the profile is exact, else a decomposition fit).
    """
    dims = state.dims
    cut = default_cut(dims) if cut is None else tuple(cut)
    p = ConeProgram()
    p.add_var("pi", dims)
    p.add_var("np_", dims)
    p.add_var("nm", dims)
    d = state.dim
    p.minimize({"np_": np.eye(d), "nm": np.eye(d)})
    p.psd(p.affine([("np_", 1.0)]), "np_psd")
    p.psd(p.affine([("nm", 1.0)]), "nm_psd")
    p.psd(p.affine([("pi", 1.0)]), "pi_psd")
    p.psd(p.affine([("pi", 1.0, cut)]), "pi_ppt")
    p.trace_eq(p.affine([("pi", 1.0)]), 1.0, "pi_trace")
    # np_ - nm - rho + pi == 0  (so np_ - nm = rho - pi)
    p.eq(p.affine([("np_", 1.0), ("nm", -1.0), ("pi", 1.0)], const=-state.op), "split")
    sol = solve(p, tol=min(tol * 1e-2, 1e-8))
    if not (sol.ok or sol.status == "inaccurate"):
        raise RuntimeError(f"nearest_sep_distance solver status {sol.status}")
    lower = max(0.0, sol.objective)
    info: dict = {"solution": sol, "relaxation": "ppt"}

    pi_star = sol.primal["pi"]
    if ppt_exact(dims):
        upper = max(lower, trace_norm(state.op - pi_star))
        info["relaxation"] = "ppt-exact"
        info["point"] = pi_star
        return lower, upper, info
    dec, resid = approximate_decomposition(pi_star, dims, tol=tol, seed=seed)
    if dec.n_terms:
        rec = dec.reconstruct()
        tr_rec = float(np.real(np.trace(rec)))
        if tr_rec > 1e-12:
            rec = rec / tr_rec
            dec = dec.scaled(1.0 / tr_rec)
        upper = trace_norm(state.op - rec)
        info["decomposition"] = dec
        info["decomposition_residual"] = resid
    else:
        upper = trace_norm(state.op - np.eye(d) / d)
        info["decomposition"] = None
    upper = max(lower, upper)
    return lower, upper, info

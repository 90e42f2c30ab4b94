"""Singlet-fraction and composite hypothesis-testing functionals.

The central quantity is F(rho, c) = min over the separable cone of
tr(rho - sigma)_+ + c*tr(sigma), together with its primal description
max tr(A rho) over measurement operators whose separable acceptance is
capped at c. Both views are computed: the primal over the tractable
dual-cone restriction gives the lower endpoint, the dual evaluated at
explicitly certified inner points gives the upper endpoint. On top of
this sit the n-copy discrimination curve and its exponent-penalized
envelope.
"""

from __future__ import annotations

import time

import numpy as np

from .bracket import Bracket
from .cone import ConeProgram, solve
from .sep import approximate_decomposition, default_cut, ppt_exact
from .states import (is_twirl_invariant, isotropic, isotropic_boundary_decomposition,
                     isotropic_fidelity, isotropic_separable_decomposition,
                     max_entangled_op)
from .tensor import (MultiState, as_state, copies_state, eigh_clipped,
                     partial_transpose, positive_part_trace, require_hermitian)

# discrimination programs run on the n-fold space; past this total
# dimension the cone programs are rejected rather than attempted
MAX_COPY_DIM = 128


def _fsep_primal(rho, dims, coeff: float, cut, tol: float):
    """max tr(A rho) with c*I - A split as P + Q^pt, P, Q >= 0."""
    d = rho.shape[0]
    eye = np.eye(d, dtype=complex)
    p = ConeProgram()
    for name in ("a", "pp", "q"):
        p.add_var(name, dims)
    p.minimize({"a": -rho})
    p.psd(p.affine([("a", 1.0)]), "a_psd")
    p.psd(p.affine([("a", -1.0)], const=eye), "a_capped")
    p.psd(p.affine([("pp", 1.0)]), "p_psd")
    p.psd(p.affine([("q", 1.0)]), "q_psd")
    p.eq(p.affine([("a", 1.0), ("pp", 1.0), ("q", 1.0, cut)], const=-coeff * eye),
         "acceptance_split")
    sol = solve(p, tol=tol)
    if sol.ok or sol.status == "inaccurate":
        sol.objective = -sol.objective
        sol.dual_objective = -sol.dual_objective
    return sol


def _fsep_dual(rho, dims, coeff: float, cut, tol: float):
    """min tr(Y) + c*tr(sigma) with Y >= rho - sigma, sigma in the PPT cone."""
    d = rho.shape[0]
    eye = np.eye(d, dtype=complex)
    p = ConeProgram()
    p.add_var("y", dims)
    p.add_var("sigma", dims)
    p.minimize({"y": eye, "sigma": coeff * eye})
    p.psd(p.affine([("y", 1.0)]), "y_psd")
    p.psd(p.affine([("y", 1.0), ("sigma", 1.0)], const=-rho), "y_dominates")
    p.psd(p.affine([("sigma", 1.0)]), "sigma_psd")
    p.psd(p.affine([("sigma", 1.0, cut)]), "sigma_ppt")
    return solve(p, tol=tol)


def _dual_value(rho, sigma, coeff: float) -> float:
    return positive_part_trace(rho - sigma) + coeff * float(np.real(np.trace(sigma)))


def _psd_part(op):
    vals, vecs = eigh_clipped(require_hermitian(op, tol=np.inf))
    return (vecs * vals) @ vecs.conj().T


def _certified_acceptance(rho, dims, coeff: float, cut, sol):
    """Rebuild an explicitly feasible test from the optimizer's split.

    A = c*I - P - Q^pt with P, Q clipped PSD keeps the separable acceptance
    at most c by construction; pushing negative eigenvalues of A up to zero
    can raise that acceptance by at most the clipped mass, so the test is
    rescaled to restore the cap exactly. The value tr(A rho) is then a
    certified lower endpoint that does not lean on dual solution quality.
    """
    if "pp" not in sol.primal or "q" not in sol.primal:
        return -np.inf, None
    d = rho.shape[0]
    pp = _psd_part(sol.primal["pp"])
    qq = _psd_part(sol.primal["q"])
    a = coeff * np.eye(d, dtype=complex) - pp - partial_transpose(qq, dims, cut)
    vals, vecs = np.linalg.eigh(require_hermitian(a, tol=np.inf))
    lift = max(0.0, -float(vals[0]))
    a_clip = (vecs * np.clip(vals, 0.0, 1.0)) @ vecs.conj().T
    scale = coeff / (coeff + lift) if lift > 0 else 1.0
    val = scale * float(np.real(np.vdot(a_clip, rho)))
    return val, {"test": scale * a_clip, "acceptance_lift": lift}


def _upper_candidates(state: MultiState, coeff: float, dual_sol, seed: int):
    """Inner-cone evaluations of the dual expression, cheapest valid first."""
    rho, dims = state.op, state.dims
    cands = [(positive_part_trace(rho), {"kind": "empty-cone-point",
                                         "sigma_trace": 0.0})]
    if not (dual_sol.ok or dual_sol.status == "inaccurate"):
        return cands
    sigma = _psd_part(dual_sol.primal["sigma"])

    if len(dims) == 2 and dims[0] == dims[1] and is_twirl_invariant(state):
        k = dims[0]
        phi = max_entangled_op(k)
        scale = float(np.real(np.trace(sigma)))
        if scale > 1e-14:
            fid = float(np.real(np.trace(sigma @ phi))) / scale
            for f in sorted({min(max(fid, 0.0), 1.0 / k), 0.0, 1.0 / k}):
                cand = scale * isotropic(k, f).op
                dec = isotropic_separable_decomposition(k, f).scaled(scale)
                cands.append((_dual_value(rho, cand, coeff),
                              {"kind": "family-cone-point", "scale": scale,
                               "fidelity": f, "decomposition": dec}))
    if ppt_exact(dims):
        pt_eig = float(np.linalg.eigvalsh(
            require_hermitian(np.asarray(dual_sol.primal["sigma"]), tol=np.inf))[0])
        cands.append((_dual_value(rho, sigma, coeff),
                      {"kind": "ppt-exact-cone", "sigma": sigma,
                       "min_eig": pt_eig}))
    elif not is_twirl_invariant(state):
        scale = float(np.real(np.trace(sigma)))
        if scale > 1e-12:
            dec, resid = approximate_decomposition(sigma, dims, tol=1e-7, seed=seed)
            rec = dec.reconstruct()
            for t in (0.9, 1.0, 1.1):
                cands.append((_dual_value(rho, t * rec, coeff),
                              {"kind": "separable-mixture", "scale": t,
                               "decomposition": dec.scaled(t),
                               "fit_residual": resid}))
    return cands


def _fsep_bracket(state: MultiState, coeff: float, tol: float, cut, seed: int,
                  meta: dict) -> Bracket:
    rho, dims = state.op, state.dims
    cut = default_cut(dims) if cut is None else tuple(cut)
    t0 = time.perf_counter()
    psol = _fsep_primal(rho, dims, coeff, cut, tol)
    dsol = _fsep_dual(rho, dims, coeff, cut, tol)
    if not (psol.ok or psol.status == "inaccurate"):
        raise ArithmeticError(f"acceptance program failed: {psol.status}")

    # A = min(c,1)*I is always feasible, A = I once the cost cap clears 1
    base = min(coeff, 1.0)
    certified, test_cert = _certified_acceptance(rho, dims, coeff, cut, psol)
    lower = max(base, psol.objective - max(psol.gap, 0.0), certified)
    cands = _upper_candidates(state, coeff, dsol, seed)
    upper, upper_cert = min(cands, key=lambda c: c[0])
    if upper < lower:
        lower = upper
    meta = dict(meta)
    meta.update({"primal_value": psol.objective, "dual_value": dsol.objective,
                 "coeff": coeff, "primal_gap": psol.gap, "dual_gap": dsol.gap,
                 "certified_test_value": certified})
    lower_cert = {"kind": "dual-cone-acceptance", "solution": psol,
                  "explicit_test": test_cert, "value": lower}
    return Bracket(lower, upper, lower_certificate=lower_cert,
                   upper_certificate=upper_cert,
                   iterations=psol.iterations + dsol.iterations,
                   runtime=time.perf_counter() - t0, meta=meta)


def fsep(state, K, tol: float = 1e-8, cut=None, seed: int = 0) -> Bracket:
    """Best acceptance of rho by a test whose separable acceptance is <= 1/K.

    Equals min over the separable cone of tr(rho - sigma)_+ + tr(sigma)/K.
    Values lie in [1/K, 1]; K may be any real >= 2 so that copy-scaled
    thresholds 2**(y*n) are expressible directly.
    """
    if K < 2:
        raise ValueError("threshold parameter K must be >= 2")
    return _fsep_bracket(as_state(state), 1.0 / float(K), tol, cut, seed,
                         {"K": float(K)})


def fsep_relaxed(state, K, eps: float, tol: float = 1e-8, cut=None,
                 seed: int = 0) -> Bracket:
    """fsep with the acceptance cost relaxed from 1/K to 1/K + eps."""
    if K < 2:
        raise ValueError("threshold parameter K must be >= 2")
    if eps < 0:
        raise ValueError("relaxation eps must be >= 0")
    return _fsep_bracket(as_state(state), 1.0 / float(K) + float(eps), tol, cut,
                         seed, {"K": float(K), "eps": float(eps)})


def fsep_bounded(state, K, eps: float, tol: float = 1e-8, cut=None,
                 seed: int = 0) -> Bracket:
    """fsep with the acceptance cost scaled to (1 + eps)/K."""
    if K < 2:
        raise ValueError("threshold parameter K must be >= 2")
    if eps < 0:
        raise ValueError("scaling eps must be >= 0")
    return _fsep_bracket(as_state(state), (1.0 + float(eps)) / float(K), tol, cut,
                         seed, {"K": float(K), "eps": float(eps)})


# ---------------------------------------------------------------------------
# n-copy discrimination curve
# ---------------------------------------------------------------------------

def _check_copy_budget(state: MultiState, n: int):
    if not 1 <= n <= 3:
        raise ValueError("copy count n must be 1, 2, or 3")
    if state.dim ** n > MAX_COPY_DIM:
        raise ValueError(
            f"total dimension {state.dim ** n} exceeds the cap {MAX_COPY_DIM}")


def _diagonal_decomposition(diag, dims):
    """Classical (computational-basis) mixture as an explicit product mixture."""
    from .states import SeparableDecomposition

    da, db = dims
    weights, vectors = [], []
    for i, p in enumerate(diag):
        if p <= 1e-15:
            continue
        a, b = divmod(i, db)
        va = np.zeros(da, dtype=complex)
        vb = np.zeros(db, dtype=complex)
        va[a] = 1.0
        vb[b] = 1.0
        weights.append(float(p))
        vectors.append([va, vb])
    return SeparableDecomposition(dims, np.asarray(weights), vectors)


def _stein_sdp(rn: MultiState, omega: float, cut, tol: float):
    p = ConeProgram()
    p.add_var("yv", rn.dims)
    p.add_var("sigma", rn.dims)
    p.minimize({"yv": np.eye(rn.dim)})
    p.psd(p.affine([("yv", 1.0)]), "y_psd")
    p.psd(p.affine([("yv", 1.0), ("sigma", omega)], const=-rn.op), "y_dominates")
    p.psd(p.affine([("sigma", 1.0)]), "sigma_psd")
    p.psd(p.affine([("sigma", 1.0, cut)]), "sigma_ppt")
    p.trace_eq(p.affine([("sigma", 1.0)]), 1.0, "unit_trace")
    return solve(p, tol=tol)


def build_candidate_pool(state, n: int, anchors=(), tol: float = 1e-8,
                         seed: int = 0) -> list:
    """Explicitly separable n-copy states for upper-bounding discrimination.

    Entries are dicts with keys sigma (density matrix on the party-grouped
    n-fold space) and cert (a re-checkable description). A pool built once
    per (state, n) serves a whole y-grid; pointwise minima over a fixed pool
    are automatically monotone in y.
    """
    state = as_state(state)
    _check_copy_budget(state, n)
    rn = copies_state(state, n)
    dims_n = rn.dims
    cut = default_cut(dims_n)
    d = rn.dim
    pool = []

    pool.append({"sigma": np.eye(d, dtype=complex) / d,
                 "cert": {"kind": "uniform-mixture"}})
    diag = np.clip(np.real(np.diag(rn.op)), 0.0, None)
    tot = float(np.sum(diag))
    if tot > 1e-12:
        pool.append({"sigma": np.diag(diag / tot).astype(complex),
                     "cert": {"kind": "classical-diagonal",
                              "decomposition": _diagonal_decomposition(diag / tot,
                                                                       dims_n)}})

    invariant_family = (len(state.dims) == 2 and state.dims[0] == state.dims[1]
                        and is_twirl_invariant(state))
    if invariant_family:
        k = state.dims[0]
        fid = isotropic_fidelity(state)
        per_copy = [("family-boundary", isotropic(k, 1.0 / k),
                     isotropic_boundary_decomposition(k))]
        fsep_fid = min(fid, 1.0 / k)
        if abs(fsep_fid - 1.0 / k) > 1e-12:
            per_copy.append(("family-member", isotropic(k, max(fsep_fid, 0.0)),
                             isotropic_separable_decomposition(k, max(fsep_fid, 0.0))))
        for label, st1, dec1 in per_copy:
            pool.append({"sigma": copies_state(st1, n).op,
                         "cert": {"kind": "per-copy-power", "label": label,
                                  "per_copy_decomposition": dec1, "n": n}})
    else:
        dec1, resid1 = approximate_decomposition(state.op, state.dims,
                                                 tol=1e-7, seed=seed)
        if dec1.n_terms and resid1 <= 1e-5:
            rec1 = dec1.reconstruct()
            rec1 = rec1 / float(np.real(np.trace(rec1)))
            pool.append({"sigma": copies_state(MultiState(state.dims,
                                                          require_hermitian(rec1, tol=1e-8)),
                                               n).op,
                         "cert": {"kind": "per-copy-power",
                                  "per_copy_decomposition": dec1,
                                  "per_copy_residual": resid1, "n": n}})

    # family powers already meet the invariant-family optimum, and mixture
    # fits above this size cost more than the anchor programs they refine
    run_anchors = ppt_exact(dims_n) or (not invariant_family and d <= 36)
    for ya in (anchors if run_anchors else ()):
        sol = _stein_sdp(rn, 2.0 ** (float(ya) * n), cut, tol)
        if not (sol.ok or sol.status == "inaccurate"):
            continue
        sigma = _psd_part(sol.primal["sigma"])
        tr = float(np.real(np.trace(sigma)))
        if tr <= 1e-12:
            continue
        sigma = sigma / tr
        if ppt_exact(dims_n):
            pool.append({"sigma": sigma,
                         "cert": {"kind": "ppt-exact-cone", "anchor_y": float(ya)}})
        else:
            dec, resid = approximate_decomposition(sigma, dims_n, tol=1e-7,
                                                   seed=seed + 11)
            if dec.n_terms:
                rec = dec.reconstruct()
                tr = float(np.real(np.trace(rec)))
                if tr > 1e-12:
                    pool.append({"sigma": rec / tr,
                                 "cert": {"kind": "separable-mixture",
                                          "anchor_y": float(ya),
                                          "decomposition": dec.scaled(1.0 / tr),
                                          "fit_residual": resid}})
    return pool


def stein_functional(state, n: int, y: float, tol: float = 1e-8,
                     seed: int = 0, pool=None) -> Bracket:
    """min over separable n-copy sigma of tr(rho^{(n)} - 2^{yn} sigma)_+.

    Lower endpoint relaxes sigma to the PPT cone; upper endpoint evaluates
    the objective at explicitly separable pool members. Values lie in [0, 1]
    and are non-increasing in y.
    """
    state = as_state(state)
    _check_copy_budget(state, n)
    rn = copies_state(state, n)
    cut = default_cut(rn.dims)
    omega = 2.0 ** (float(y) * n)
    t0 = time.perf_counter()
    if pool is None:
        pool = build_candidate_pool(state, n, anchors=(y,), tol=tol, seed=seed)

    sol = _stein_sdp(rn, omega, cut, tol)
    if not (sol.ok or sol.status == "inaccurate"):
        raise ArithmeticError(f"discrimination program failed: {sol.status}")
    lower = max(0.0, sol.objective - max(sol.gap, 0.0))

    vals = [positive_part_trace(rn.op - omega * entry["sigma"]) for entry in pool]
    best = int(np.argmin(vals))
    upper = min(1.0, float(vals[best]))
    lower = min(lower, upper)
    return Bracket(lower, upper,
                   lower_certificate={"kind": "ppt-cone-relaxation",
                                      "solution": sol, "value": sol.objective},
                   upper_certificate=dict(pool[best]["cert"], value=upper),
                   iterations=sol.iterations,
                   runtime=time.perf_counter() - t0,
                   meta={"n": n, "y": float(y), "omega": omega,
                         "pool_size": len(pool), "solver_gap": sol.gap})


def stein_curve(state, n: int, ys, tol: float = 1e-8, seed: int = 0) -> list:
    """stein_functional along a y-grid with one shared candidate pool."""
    ys = [float(y) for y in ys]
    if not ys:
        return []
    anchors = sorted({ys[0], ys[len(ys) // 2], ys[-1]})
    pool = build_candidate_pool(state, n, anchors=anchors, tol=tol, seed=seed)
    return [stein_functional(state, n, y, tol=tol, seed=seed, pool=pool)
            for y in ys]


def sfne_eval(state, n: int, y: float, tol: float = 1e-8, seed: int = 0,
              grid_points: int = 64, refine_tol: float = 1e-4):
    """min over b of [discrimination value at threshold b] + 2^{-(y-b)n}.

    Returns (Bracket, b). The grid covers [y-2 span, y]; the upper endpoint
    is refined by golden-section over the pool evaluations (no extra cone
    programs), and the b -> -inf boundary value 1 is always included. The
    lower endpoint combines per-interval monotonicity of the two summands,
    so it bounds the continuous minimum, not just the grid minimum.
    """
    state = as_state(state)
    _check_copy_budget(state, n)
    rn = copies_state(state, n)
    cut = default_cut(rn.dims)
    y = float(y)
    t0 = time.perf_counter()
    lo_b = min(-2.0, y - 2.0)
    bs = np.linspace(lo_b, y, grid_points)
    anchors = sorted({bs[0], bs[grid_points // 2], y})
    pool = build_candidate_pool(state, n, anchors=anchors, tol=tol, seed=seed)
    sigmas = [entry["sigma"] for entry in pool]

    def pen(b):
        return 2.0 ** (-(y - b) * n)

    def pool_value(b):
        om = 2.0 ** (b * n)
        return min(positive_part_trace(rn.op - om * s) for s in sigmas)

    lows, ups = [], []
    for b in bs:
        sol = _stein_sdp(rn, 2.0 ** (b * n), cut, tol)
        ok = sol.ok or sol.status == "inaccurate"
        lows.append(max(0.0, sol.objective - max(sol.gap, 0.0)) if ok else 0.0)
        ups.append(min(1.0, pool_value(b)))

    # interval bound: the curve part only drops moving right, the penalty
    # only drops moving left, so each cell is bounded by the worst corners
    lower_pieces = [lows[0]]
    for i in range(len(bs) - 1):
        lower_pieces.append(lows[i + 1] + pen(bs[i]))
    lower_pieces.append(1.0)
    lower = max(0.0, min(lower_pieces))

    totals = [u + pen(b) for u, b in zip(ups, bs)]
    i_best = int(np.argmin(totals))
    upper, b_best = float(totals[i_best]), float(bs[i_best])

    # golden-section on the pool-evaluated upper envelope
    gold = (np.sqrt(5.0) - 1.0) / 2.0
    a_lo = bs[max(0, i_best - 1)]
    a_hi = bs[min(len(bs) - 1, i_best + 1)]
    c1 = a_hi - gold * (a_hi - a_lo)
    c2 = a_lo + gold * (a_hi - a_lo)
    f1 = pool_value(c1) + pen(c1)
    f2 = pool_value(c2) + pen(c2)
    while a_hi - a_lo > refine_tol:
        if f1 <= f2:
            a_hi, c2, f2 = c2, c1, f1
            c1 = a_hi - gold * (a_hi - a_lo)
            f1 = pool_value(c1) + pen(c1)
        else:
            a_lo, c1, f1 = c1, c2, f2
            c2 = a_lo + gold * (a_hi - a_lo)
            f2 = pool_value(c2) + pen(c2)
    for b_ref, f_ref in ((c1, f1), (c2, f2)):
        if f_ref < upper:
            upper, b_best = float(f_ref), float(b_ref)

    boundary = False
    if 1.0 < upper:
        upper, b_best, boundary = 1.0, float(bs[0]), True
    upper = min(upper, 1.0)
    lower = min(lower, upper)
    bracket = Bracket(lower, upper,
                      lower_certificate={"kind": "grid-interval-bound",
                                         "grid": [float(b) for b in bs]},
                      upper_certificate={"kind": "pool-envelope",
                                         "b": b_best, "boundary": boundary,
                                         "pool_size": len(pool)},
                      iterations=len(bs),
                      runtime=time.perf_counter() - t0,
                      meta={"n": n, "y": y, "b": b_best, "boundary": boundary})
    return bracket, b_best

"""Entanglement quantifiers reported as certified two-sided brackets.

Every public function returns a Bracket whose lower endpoint comes from a
cone-program relaxation (positive partial transpose) and whose upper
endpoint is backed by an explicit construction: a product-state mixture,
a closed-form highly symmetric certificate, or exactness of the
relaxation on small profiles. The two routes are computed independently
and never collapsed into a single solver call.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .bracket import Bracket
from .cone import ConeProgram, solve
from .sep import (absorb_into_cone, approximate_decomposition, default_cut,
                  ppt_exact, ppt_linear_bound, product_minimize)
from .states import (SeparableDecomposition, computational_product_decomposition,
                     is_twirl_invariant, isotropic, isotropic_boundary_decomposition,
                     isotropic_fidelity, isotropic_separable_decomposition,
                     isotropic_zero_decomposition)
from .tensor import (MultiState, as_state, copies_state, eigh_clipped,
                     partial_transpose, relative_entropy, relative_entropy_gradient,
                     require_hermitian, trace_norm)

# weight of the maximally mixed component mixed in wherever a full-rank
# separable point is needed (gradients, honest entropy evaluations)
SUPPORT_MIX = 1e-9


def _iso_profile(state: MultiState):
    """(K, fidelity) when the state lies exactly on the twirl-invariant family."""
    if len(state.dims) == 2 and state.dims[0] == state.dims[1]:
        if is_twirl_invariant(state):
            return state.dims[0], isotropic_fidelity(state)
    return None


def _guarded_lower(sol, offset: float = 0.0) -> float:
    """Solver optimum minus its reconstructed duality gap, floored at zero."""
    guard = max(sol.gap, 0.0)
    return max(0.0, sol.objective + offset - guard)


def _iso_mixing_certificate(K: int, fid: float):
    """Closed-form optimal mixing certificate for a twirl-invariant state.

    For fid > 1/K the mixture (rho + s*sigma0) / (1+s) with s = K*fid - 1
    and sigma0 the fidelity-zero family member lands exactly on the
    separability boundary of the family; both the mixer and the mixture
    carry explicit product decompositions.
    """
    if fid <= 1.0 / K + 1e-15:
        dec = isotropic_separable_decomposition(K, max(fid, 0.0))
        resid = trace_norm(isotropic(K, max(fid, 0.0)).op - dec.reconstruct())
        return 0.0, {"kind": "separable-decomposition", "decomposition": dec,
                     "residual": resid}
    s = K * fid - 1.0
    mixer = isotropic_zero_decomposition(K)
    boundary = isotropic_boundary_decomposition(K)
    mixture = boundary.scaled(1.0 + s)
    defect = trace_norm(isotropic(K, fid).op + s * mixer.reconstruct()
                        - mixture.reconstruct())
    return s, {"kind": "mixing-certificate", "s": s,
               "mixer_decomposition": mixer,
               "mixture_decomposition": mixture,
               "identity_residual": defect}


def _cone_fit_certificate(target, rho, dims, seed: int, fit_tol: float = 1e-8):
    """Certified upper bound on min{tr X - 1 : X >= rho, X in separable cone}.

    Fits a product mixture to ``target`` (a PPT-cone optimizer), then repairs
    the fit defect by adding exactly decomposable padding: either a multiple
    of the identity or a mixed-ball absorption of the residual. Returns the
    cheaper repaired value plus a re-checkable certificate.
    """
    d = rho.shape[0]
    dec, resid = approximate_decomposition(target, dims, tol=fit_tol, seed=seed)
    rec = dec.reconstruct()
    eye = np.eye(d, dtype=complex)

    # route 1: pad the reconstruction with r*I until it dominates rho
    evals = np.linalg.eigvalsh(require_hermitian(rec - rho, tol=np.inf))
    r = max(0.0, -float(evals[0])) * 1.0000001 + 1e-14
    val1 = float(np.real(np.trace(rec))) + r * d - 1.0

    # route 2: recenter on the target and absorb the defect near I/d
    ev_t = np.linalg.eigvalsh(require_hermitian(target - rho, tol=np.inf))
    eta = max(0.0, -float(ev_t[0])) * 1.0000001 + 1e-14
    c, ball = absorb_into_cone(target - rec + eta * eye, dims)
    val2 = float(np.real(np.trace(target))) + eta * d + c - 1.0

    if val1 <= val2:
        return val1, {"kind": "decomposition-padded", "decomposition": dec,
                      "fit_residual": resid, "identity_pad": r, "value": val1}
    return val2, {"kind": "decomposition-ball-repair", "decomposition": dec,
                  "fit_residual": resid, "identity_pad": eta,
                  "ball": ball, "value": val2}


def global_robustness(state, tol: float = 1e-8, seed: int = 0, cut=None) -> Bracket:
    """Least s with (rho + s*omega) / (1+s) separable for some state omega.

    Lower endpoint: min tr X over {X >= rho, X PPT-positive} minus one.
    Upper endpoint: exact on twirl-invariant and PPT-exact profiles,
    otherwise an explicit padded product decomposition of the optimizer.
    """
    state = as_state(state)
    dims = state.dims
    cut = default_cut(dims) if cut is None else tuple(cut)
    t0 = time.perf_counter()

    p = ConeProgram()
    p.add_var("x", dims)
    p.minimize({"x": np.eye(state.dim)})
    p.psd(p.affine([("x", 1.0)], const=-state.op), "dominates_state")
    p.psd(p.affine([("x", 1.0, cut)]), "pt_positive")
    sol = solve(p, tol=tol)
    if not sol.ok and sol.status != "inaccurate":
        raise ArithmeticError(f"robustness relaxation failed: {sol.status}")
    lower = _guarded_lower(sol, offset=-1.0)
    lower_cert = {"kind": "ppt-cone-relaxation", "solution": sol,
                  "value": sol.objective - 1.0}

    iso = _iso_profile(state)
    if iso is not None:
        upper, upper_cert = _iso_mixing_certificate(*iso)
    elif ppt_exact(dims):
        x = sol.primal["x"]
        upper = max(0.0, sol.objective - 1.0)
        upper_cert = {"kind": "ppt-exact-cone", "dims": dims, "x": x,
                      "pt_min_eig": float(np.linalg.eigvalsh(
                          p.eval_expr(p.constraints[1].expr, sol.primal))[0]),
                      "value": upper}
    else:
        upper, upper_cert = _cone_fit_certificate(sol.primal["x"], state.op,
                                                  dims, seed)
    upper = max(upper, lower)
    return Bracket(lower, upper, lower_certificate=lower_cert,
                   upper_certificate=upper_cert, iterations=sol.iterations,
                   runtime=time.perf_counter() - t0,
                   meta={"solver_gap": sol.gap, "dims": dims})


def log_robustness(state, tol: float = 1e-8, seed: int = 0, cut=None) -> Bracket:
    """log2(1 + global robustness), the one-shot exact preparation cost scale."""
    b = global_robustness(state, tol=tol, seed=seed, cut=cut)
    return b.transform(lambda x: float(np.log2(1.0 + max(x, 0.0))))


def smoothed_log_robustness(state, eps: float, tol: float = 1e-8,
                            seed: int = 0, cut=None) -> Bracket:
    """min of log2(1 + robustness) over states within trace distance eps.

    The ball constraint enters the cone program through a positive/negative
    split of rho - rho_tilde with a slack block, so the budget is an
    inequality, not forced to be saturated.
    """
    if not 0.0 <= eps <= 2.0:
        raise ValueError("smoothing radius must lie in [0, 2]")
    state = as_state(state)
    dims = state.dims
    cut = default_cut(dims) if cut is None else tuple(cut)
    t0 = time.perf_counter()
    d = state.dim
    eye = np.eye(d, dtype=complex)

    p = ConeProgram()
    for name in ("x", "rt", "npos", "nneg", "slack"):
        p.add_var(name, dims)
    p.minimize({"x": eye})
    p.psd(p.affine([("x", 1.0), ("rt", -1.0)]), "dominates_shifted")
    p.psd(p.affine([("x", 1.0, cut)]), "pt_positive")
    for name in ("rt", "npos", "nneg", "slack"):
        p.psd(p.affine([(name, 1.0)]), f"{name}_psd")
    p.eq(p.affine([("rt", 1.0), ("npos", -1.0), ("nneg", 1.0)], const=-state.op),
         "ball_split")
    p.trace_eq(p.affine([("rt", 1.0)]), 1.0, "rt_trace")
    p.trace_eq(p.affine([("npos", 1.0), ("nneg", 1.0), ("slack", 1.0)]), eps,
               "ball_budget")
    sol = solve(p, tol=tol)
    if not sol.ok and sol.status != "inaccurate":
        raise ArithmeticError(f"smoothed robustness relaxation failed: {sol.status}")
    lower = float(np.log2(max(1.0, sol.objective - max(sol.gap, 0.0))))
    lower_cert = {"kind": "ppt-cone-relaxation", "solution": sol,
                  "value": float(np.log2(max(1.0, sol.objective)))}

    iso = _iso_profile(state)
    if iso is not None:
        K, fid = iso
        shifted = max(0.0, fid - eps / 2.0)
        s, cert = _iso_mixing_certificate(K, shifted)
        upper = float(np.log2(1.0 + s))
        upper_cert = {"kind": "shifted-family", "shifted_fidelity": shifted,
                      "trace_distance_used": 2.0 * (fid - shifted),
                      "inner": cert, "value": upper}
    elif ppt_exact(dims):
        upper = float(np.log2(max(1.0, sol.objective)))
        upper_cert = {"kind": "ppt-exact-cone", "dims": dims,
                      "x": sol.primal["x"], "value": upper}
    else:
        # certify at the optimizer's shifted state, pulled strictly inside
        # the ball before handing it to the unsmoothed routine
        rt = require_hermitian(sol.primal["rt"], tol=np.inf)
        vals, vecs = eigh_clipped(rt)
        rt = (vecs * vals) @ vecs.conj().T
        rt /= np.real(np.trace(rt))
        dist = trace_norm(rt - state.op)
        if dist > eps > 0.0:
            pull = 1.0 - min(1.0, eps / dist) * 0.999999
            rt = (1.0 - pull) * rt + pull * state.op
        inner = global_robustness(MultiState(dims, require_hermitian(rt, tol=1e-8)),
                                  tol=tol, seed=seed, cut=cut)
        upper = float(np.log2(1.0 + inner.upper))
        upper_cert = {"kind": "shifted-state", "shifted_state": rt,
                      "trace_distance_used": trace_norm(rt - state.op),
                      "inner": inner.upper_certificate, "value": upper}
    upper = max(upper, lower)
    return Bracket(lower, upper, lower_certificate=lower_cert,
                   upper_certificate=upper_cert, iterations=sol.iterations,
                   runtime=time.perf_counter() - t0,
                   meta={"eps": eps, "solver_gap": sol.gap, "dims": dims})


def mixing_robustness(state, tol: float = 1e-8, seed: int = 0, cut=None) -> Bracket:
    """Least s with (rho + s*sigma) / (1+s) separable for separable sigma.

    Differs from the global variant in that the mixer itself must be
    separable; the relaxation constrains both the mixer and the mixture to
    the PPT cone.
    """
    state = as_state(state)
    dims = state.dims
    cut = default_cut(dims) if cut is None else tuple(cut)
    t0 = time.perf_counter()
    d = state.dim

    p = ConeProgram()
    p.add_var("tau", dims)
    p.minimize({"tau": np.eye(d)})
    p.psd(p.affine([("tau", 1.0)]), "tau_psd")
    p.psd(p.affine([("tau", 1.0, cut)]), "tau_ppt")
    p.psd(p.affine([("tau", 1.0, cut)], const=partial_transpose(state.op, dims, cut)),
          "mixture_ppt")
    sol = solve(p, tol=tol)
    if not sol.ok and sol.status != "inaccurate":
        raise ArithmeticError(f"mixing relaxation failed: {sol.status}")
    lower = _guarded_lower(sol)
    lower_cert = {"kind": "ppt-cone-relaxation", "solution": sol,
                  "value": sol.objective}

    iso = _iso_profile(state)
    if iso is not None:
        upper, upper_cert = _iso_mixing_certificate(*iso)
    elif ppt_exact(dims):
        upper = max(0.0, sol.objective)
        upper_cert = {"kind": "ppt-exact-cone", "dims": dims,
                      "tau": sol.primal["tau"], "value": upper}
    else:
        upper, upper_cert = _paired_mixing_certificate(state, sol.primal["tau"],
                                                       dims, seed)
    upper = max(upper, lower)
    return Bracket(lower, upper, lower_certificate=lower_cert,
                   upper_certificate=upper_cert, iterations=sol.iterations,
                   runtime=time.perf_counter() - t0,
                   meta={"solver_gap": sol.gap, "dims": dims})


def _paired_mixing_certificate(state, tau, dims, seed: int, fit_tol: float = 1e-8):
    """Explicit mixer/mixture pair built from one joint nonnegative fit.

    Collects product atoms for the relaxation optimizer's mixer and mixture,
    solves one nonnegative least squares for  rho + sum(u_i P_i) =
    sum(m_j Q_j),  and absorbs the leftover defect into the mixed ball so
    the identity holds exactly with both sides in the separable cone.
    """
    from scipy.optimize import nnls

    rho = state.op
    d = rho.shape[0]
    s0 = float(np.real(np.trace(tau)))
    mixture = (rho + tau) / (1.0 + s0) if s0 > 0 else rho
    dec_m, _ = approximate_decomposition(mixture, dims, tol=fit_tol, seed=seed)
    pool_q = [np.outer(dec_m.term_vector(i), dec_m.term_vector(i).conj())
              for i in range(dec_m.n_terms)]
    pool_p = []
    if s0 > 1e-12:
        dec_t, _ = approximate_decomposition(tau / s0, dims, tol=fit_tol,
                                             seed=seed + 7)
        pool_p = [np.outer(dec_t.term_vector(i), dec_t.term_vector(i).conj())
                  for i in range(dec_t.n_terms)]
    base = computational_product_decomposition(dims)
    basics = [np.outer(base.term_vector(i), base.term_vector(i).conj())
              for i in range(base.n_terms)]
    pool_p = pool_p + basics
    pool_q = pool_q + basics

    cols = [np.concatenate([a.real.ravel(), a.imag.ravel()]) for a in pool_p]
    cols += [np.concatenate([-a.real.ravel(), -a.imag.ravel()]) for a in pool_q]
    rhs = np.concatenate([(-rho).real.ravel(), (-rho).imag.ravel()])
    w, _ = nnls(np.stack(cols, axis=1), rhs)
    u, m = w[:len(pool_p)], w[len(pool_p):]
    defect = rho + sum(ui * a for ui, a in zip(u, pool_p)) \
        - sum(mj * a for mj, a in zip(m, pool_q))
    c, ball = absorb_into_cone(defect, dims)
    s_up = float(np.sum(u)) + c
    return s_up, {"kind": "paired-fit", "mixer_weights": u, "mixture_weights": m,
                  "ball": ball, "defect_trace_norm": trace_norm(defect),
                  "value": s_up}


# ---------------------------------------------------------------------------
# relative entropy of entanglement
# ---------------------------------------------------------------------------

def _product_atom(vectors) -> np.ndarray:
    full = vectors[0]
    for v in vectors[1:]:
        full = np.kron(full, v)
    return np.outer(full, full.conj())


def _fold_support(mats, weights, basics, base_w):
    """Mixture with a SUPPORT_MIX sliver of I/d folded in as explicit atoms."""
    w = [(1.0 - SUPPORT_MIX) * wi for wi in weights]
    w += [SUPPORT_MIX * bw for bw in base_w]
    return mats + basics, np.asarray(w)


def _polish_weights(rho, mats, w0, eye, rounds: int = 80):
    """Simplex-constrained descent on S(rho || sum w_i P_i) with exact gradient."""
    d = eye.shape[0]
    m = len(mats)

    def fg(w):
        sig = sum(wi * a for wi, a in zip(w, mats))
        sig = (1.0 - SUPPORT_MIX) * sig + SUPPORT_MIX * eye / d
        val = relative_entropy(rho, sig)
        grad_op = relative_entropy_gradient(rho, sig)
        g = np.array([(1.0 - SUPPORT_MIX) * float(np.real(np.vdot(a, grad_op)))
                      for a in mats])
        return val, g

    res = minimize(fg, w0, jac=True, method="SLSQP",
                   bounds=[(0.0, 1.0)] * m,
                   constraints=[{"type": "eq", "fun": lambda w: np.sum(w) - 1.0,
                                 "jac": lambda w: np.ones(m)}],
                   options={"maxiter": rounds, "ftol": 1e-14})
    w = np.clip(res.x, 0.0, None)
    tot = float(np.sum(w))
    return w / tot if tot > 0 else w0


def rel_ent_entanglement(state, tol: float = 1e-4, max_iters: int = 200,
                         seed: int = 0, lower_iters: int = 30,
                         restarts: int = 8, cut=None, extra_atoms=None) -> Bracket:
    """S(rho || closest separable state) in bits, bracketed from both sides.

    Upper route: fully corrective conditional gradient over product-state
    mixtures with exact line search and periodic simplex polishing; the
    reported value is an honest evaluation at an explicitly decomposed
    mixture. Lower route: first-order tangent bounds of the jointly convex
    divergence, minimized over the PPT cone with one linear cone program per
    sweep, seeded at the upper route's optimizer.

    extra_atoms warm-starts the search with candidate product vectors
    (sequences of per-party vectors), useful on tensor-power inputs where
    pairwise products of single-copy optimizer atoms are strong guesses.
    """
    state = as_state(state)
    rho = state.op
    dims = state.dims
    cut = default_cut(dims) if cut is None else tuple(cut)
    d = state.dim
    eye = np.eye(d, dtype=complex)
    t0 = time.perf_counter()
    base = computational_product_decomposition(dims)
    basics = [_product_atom([v for v in base.local_vectors[i]])
              for i in range(base.n_terms)]
    base_w = list(base.weights)

    vecs = [list(base.local_vectors[i]) for i in range(base.n_terms)]
    mats = list(basics)
    w = np.asarray(base_w, dtype=float)
    if extra_atoms:
        for vset in extra_atoms:
            vset = [np.asarray(v, dtype=complex).ravel() for v in vset]
            if len(vset) != len(dims) or any(v.size != k for v, k in zip(vset, dims)):
                raise ValueError("extra_atoms entries must carry one vector per subsystem")
            vset = [v / np.linalg.norm(v) for v in vset]
            vecs.append(vset)
            mats.append(_product_atom(vset))
        w = np.concatenate([0.5 * w, np.full(len(extra_atoms),
                                             0.5 / len(extra_atoms))])
        w = _polish_weights(rho, mats, w, eye)
        keep = w > 1e-13
        mats = [a for a, k in zip(mats, keep) if k]
        vecs = [v for v, k in zip(vecs, keep) if k]
        w = w[keep] / np.sum(w[keep])
    sigma = sum(wi * a for wi, a in zip(w, mats))
    upper = np.inf
    fw_gap = np.inf
    used_iters = 0

    for it in range(max_iters):
        used_iters = it + 1
        sig_reg = (1.0 - SUPPORT_MIX) * sigma + SUPPORT_MIX * eye / d
        grad = relative_entropy_gradient(rho, sig_reg)
        lmo_val, lmo_vecs = product_minimize(grad, dims, restarts=restarts,
                                             seed=seed + 13 * it)
        fw_gap = float(np.real(np.vdot(grad, sigma))) - lmo_val
        if fw_gap <= 0.2 * tol and it > 0:
            break
        atom = _product_atom(lmo_vecs)

        def along(g):
            mix = (1.0 - g) * sigma + g * atom
            return relative_entropy(rho, (1.0 - SUPPORT_MIX) * mix
                                    + SUPPORT_MIX * eye / d)

        step = minimize_scalar(along, bounds=(0.0, 1.0), method="bounded",
                               options={"xatol": 1e-11})
        gamma = float(step.x)
        mats.append(atom)
        vecs.append(list(lmo_vecs))
        w = np.append((1.0 - gamma) * w, gamma)
        if (it + 1) % 5 == 0 or fw_gap <= tol:
            w = _polish_weights(rho, mats, w, eye)
            keep = w > 1e-13
            mats = [a for a, k in zip(mats, keep) if k]
            vecs = [v for v, k in zip(vecs, keep) if k]
            w = w[keep]
            w = w / np.sum(w)
        sigma = sum(wi * a for wi, a in zip(w, mats))

    w = _polish_weights(rho, mats, w, eye)
    sigma = sum(wi * a for wi, a in zip(w, mats))
    all_mats, all_w = _fold_support(mats, list(w), basics, base_w)
    sigma_final = sum(wi * a for wi, a in zip(all_w, all_mats))
    upper = relative_entropy(rho, sigma_final)
    all_vecs = vecs + [list(base.local_vectors[i]) for i in range(base.n_terms)]
    dec = SeparableDecomposition(dims, np.asarray(all_w), all_vecs)
    upper_cert = {"kind": "separable-mixture", "decomposition": dec,
                  "mixture_residual": trace_norm(dec.reconstruct() - sigma_final),
                  "fw_gap": fw_gap, "value": upper}

    # tangent lower bounds over the PPT cone
    sigma_l = sigma_final
    best_lower = 0.0
    lower_cert = {"kind": "ppt-tangent", "value": 0.0}
    for it in range(lower_iters):
        used_iters += 1
        f0 = relative_entropy(rho, sigma_l)
        grad = relative_entropy_gradient(rho, sigma_l)
        sol = ppt_linear_bound(grad, dims, sense="min", cut=cut, tol=1e-9)
        if not sol.ok and sol.status != "inaccurate":
            break
        mval = min(sol.objective, sol.dual_objective)
        anchor = float(np.real(np.vdot(grad, sigma_l)))
        bound = f0 - anchor + mval
        if bound > best_lower:
            best_lower = bound
            lower_cert = {"kind": "ppt-tangent", "anchor": sigma_l,
                          "anchor_value": f0, "linear_solution": sol,
                          "value": bound}
        gap_l = anchor - mval
        if gap_l <= max(0.2 * tol, 1e-9):
            break
        vertex = sol.primal.get("sigma")
        if vertex is None:
            break
        vals, vv = eigh_clipped(vertex)
        vertex = (vv * vals) @ vv.conj().T
        tr_v = float(np.real(np.trace(vertex)))
        if tr_v <= 0:
            break
        vertex = (1.0 - SUPPORT_MIX) * vertex / tr_v + SUPPORT_MIX * eye / d

        def toward(g):
            return relative_entropy(rho, (1.0 - g) * sigma_l + g * vertex)

        step = minimize_scalar(toward, bounds=(0.0, 1.0), method="bounded",
                               options={"xatol": 1e-11})
        sigma_l = (1.0 - float(step.x)) * sigma_l + float(step.x) * vertex

    lower = min(best_lower, upper)
    return Bracket(max(0.0, lower), upper, lower_certificate=lower_cert,
                   upper_certificate=upper_cert, iterations=used_iters,
                   runtime=time.perf_counter() - t0,
                   meta={"fw_gap": fw_gap, "atoms": len(all_w), "dims": dims})


@dataclass
class RegularizationTrace:
    """Per-copy values of a measure along the first few tensor powers."""

    measure: str
    dims: tuple
    entries: list = field(default_factory=list)   # (n, per-copy Bracket)
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> Bracket:
        return self.entries[-1][1]

    def per_copy_upper(self):
        return [b.upper for _, b in self.entries]

    def per_copy_lower(self):
        return [b.lower for _, b in self.entries]


def regularized_estimate(measure_fn, state, n_max: int = 2, **kwargs) -> RegularizationTrace:
    """Evaluate measure_fn on party-grouped n-fold copies, dividing by n.

    measure_fn must map a MultiState to a Bracket. Entries keep the full
    per-copy brackets; no extrapolation beyond n_max is attempted.
    """
    state = as_state(state)
    if n_max < 1:
        raise ValueError("need n_max >= 1")
    entries = []
    for n in range(1, n_max + 1):
        stn = copies_state(state, n)
        bracket = measure_fn(stn, **kwargs)
        entries.append((n, bracket.scaled(1.0 / n)))
    name = getattr(measure_fn, "__name__", str(measure_fn))
    return RegularizationTrace(name, state.dims, entries,
                               {"n_max": n_max, "kwargs": sorted(kwargs)})

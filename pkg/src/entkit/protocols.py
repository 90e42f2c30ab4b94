"""Measure-and-prepare maps with separability-preservation certificates.

The only channel family here is "measure a two-outcome POVM, prepare one of
two fixed states". That family is closed under composition, has an explicit
Choi matrix, and is rich enough to express both entanglement distillation
(hit branch prepares a maximally entangled state) and entanglement formation
(povm is the maximally entangled projector, miss branch prepares a mixing
state). Every verifier returns certificates that can be re-checked from
first principles: explicit product mixtures, PPT-cone bounds, closed-form
isotropic robustness values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bracket import Bracket
from .tensor import (MultiState, as_state, copies_state, eigh_clipped,
                     partial_trace, require_hermitian, trace_norm)
from .states import (SeparableDecomposition, computational_product_decomposition,
                     is_twirl_invariant, isotropic, isotropic_boundary_decomposition,
                     isotropic_fidelity, isotropic_separable_decomposition,
                     max_entangled_op, twirl_project)
from .sep import (approximate_decomposition, default_cut, is_ppt,
                  max_product_overlap, ppt_exact, ppt_linear_bound,
                  product_minimize)
from .measures import global_robustness, log_robustness, rel_ent_entanglement
from .hypotest import _fsep_primal, fsep

OPERATOR_INTERVAL_TOL = 1e-9
CHOI_PSD_TOL = 1e-10
SHAPE_MATCH_TOL = 1e-10


def _overlap(a: np.ndarray, rho: np.ndarray) -> float:
    return float(np.real(np.trace(a @ rho)))


def _clipped_state(op: np.ndarray, dims) -> MultiState:
    """Build a MultiState from near-PSD arithmetic, flooring stray negatives."""
    op = require_hermitian(op, tol=1e-7)
    vals, vecs = eigh_clipped(op, floor=0.0)
    op = (vecs * vals) @ vecs.conj().T
    tr = float(np.real(np.trace(op)))
    if tr <= 0.0:
        raise ValueError("state construction collapsed to the zero operator")
    return MultiState(tuple(dims), op / tr)


def _product_state(vectors, dims) -> MultiState:
    full = vectors[0]
    for v in vectors[1:]:
        full = np.kron(full, v)
    full = full / np.linalg.norm(full)
    return MultiState(tuple(dims), np.outer(full, full.conj()))


@dataclass(frozen=True)
class MeasurePrepareMap:
    """Channel rho -> tr(A rho) * out_hit + tr((I-A) rho) * out_miss.

    Trace preservation is automatic for any hermitian ``povm_a``; complete
    positivity holds exactly when 0 <= A <= I, which the builders enforce
    and ``verify_cptp`` re-checks on arbitrary instances.
    """

    povm_a: np.ndarray
    out_hit: MultiState
    out_miss: MultiState
    in_profile: tuple[int, ...]
    out_profile: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "in_profile", tuple(int(d) for d in self.in_profile))
        object.__setattr__(self, "out_profile", tuple(int(d) for d in self.out_profile))
        a = require_hermitian(np.asarray(self.povm_a, dtype=complex))
        d_in = int(np.prod(self.in_profile))
        if a.shape[0] != d_in:
            raise ValueError(f"povm dimension {a.shape[0]} does not match "
                             f"input profile {self.in_profile}")
        if self.out_hit.dims != self.out_profile or self.out_miss.dims != self.out_profile:
            raise ValueError("prepared states do not match the output profile")
        object.__setattr__(self, "povm_a", a)

    @property
    def d_in(self) -> int:
        return int(np.prod(self.in_profile))

    @property
    def d_out(self) -> int:
        return int(np.prod(self.out_profile))

    def hit_probability(self, state) -> float:
        state = as_state(state, self.in_profile)
        if state.dims != self.in_profile:
            raise ValueError(f"input profile mismatch: {state.dims} vs {self.in_profile}")
        return _overlap(self.povm_a, state.op)

    def apply(self, state) -> MultiState:
        p = self.hit_probability(state)
        op = p * self.out_hit.op + (1.0 - p) * self.out_miss.op
        return _clipped_state(op, self.out_profile)


@dataclass(frozen=True)
class CptpReport:
    """Diagnostics from the Choi-matrix check; truthy iff both tests pass."""

    ok: bool
    choi_min_eig: float
    tp_deviation: float
    in_profile: tuple[int, ...]
    out_profile: tuple[int, ...]

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class SeppCertificate:
    """Upper bound on the output entanglement over separable inputs.

    ``epsilon`` bounds the global robustness of the map's output for every
    separable input state; ``witness_input`` is the separable input found to
    maximize it. Methods: closed-form-isotropic (outputs on the isotropic
    family, robustness in closed form) and sampled (endpoint evaluation of
    the output segment with PPT-cone range bounds).
    """

    epsilon: float
    witness_input: MultiState
    method: str
    meta: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.epsilon < 0.0:
            raise ValueError("negative epsilon")
        if self.method not in ("closed-form-isotropic", "sampled"):
            raise ValueError(f"unknown certification method {self.method!r}")


@dataclass(frozen=True)
class MonotonicityReport:
    """Bracket-resolution check of measure(map(rho)) <= measure(rho) + slack."""

    measure: str
    status: str                      # verified | inconclusive | violation
    lhs: Bracket
    rhs: Bracket
    epsilon: float
    slack_bits: float
    margin: float


def build_distill_map(a, K: int, in_dims=None) -> MeasurePrepareMap:
    """Two-outcome distillation channel: hit prepares Phi(K), miss its complement.

    The miss branch prepares (I - Phi(K)) / (K^2 - 1), so every output lies
    on the isotropic family with fidelity tr(A rho).
    """
    K = int(K)
    if K < 2:
        raise ValueError("output dimension K must be at least 2")
    if isinstance(a, MultiState):
        a, in_dims = a.op, a.dims
    a = require_hermitian(np.asarray(a, dtype=complex))
    if in_dims is None:
        if a.shape[0] != K * K:
            raise ValueError("in_dims required when the measurement does not "
                             "act on the K x K output profile")
        in_dims = (K, K)
    in_dims = tuple(int(d) for d in in_dims)
    vals = np.linalg.eigvalsh(a)
    if vals[0] < -OPERATOR_INTERVAL_TOL or vals[-1] > 1.0 + OPERATOR_INTERVAL_TOL:
        raise ValueError(f"measurement operator outside [0, I]: "
                         f"eigenvalue range [{vals[0]:.3e}, {vals[-1]:.6f}]")
    phi = max_entangled_op(K)
    eye = np.eye(K * K, dtype=complex)
    hit = MultiState((K, K), phi)
    miss = MultiState((K, K), (eye - phi) / (K * K - 1))
    return MeasurePrepareMap(a, hit, miss, in_dims, (K, K))


def build_formation_map(rho_target, K: int, pi,
                        certificate: SeparableDecomposition | None = None,
                        tol: float = 1e-6) -> MeasurePrepareMap:
    """Formation channel: measure Phi(K), prepare the target on hit, pi on miss.

    Requires an explicit product-mixture certificate that
    (rho_target + (K-1) pi) / K is separable; without it the construction is
    not separability-preserving and is refused.
    """
    K = int(K)
    if K < 2:
        raise ValueError("input dimension K must be at least 2")
    rho_target = as_state(rho_target)
    pi = as_state(pi, rho_target.dims)
    if pi.dims != rho_target.dims:
        raise ValueError(f"mixing state profile {pi.dims} does not match "
                         f"target profile {rho_target.dims}")
    if certificate is None:
        raise ValueError("separability certificate for the K-mixture is required; "
                         "obtain one from find_mixing_state")
    if tuple(certificate.dims) != rho_target.dims:
        raise ValueError("certificate profile does not match the target")
    mixture = (rho_target.op + (K - 1) * pi.op) / K
    resid = trace_norm(mixture - certificate.reconstruct())
    if resid > tol:
        raise ValueError(f"certificate does not reproduce the K-mixture: "
                         f"residual {resid:.3e} > {tol:.1e}")
    return MeasurePrepareMap(max_entangled_op(K), rho_target, pi,
                             (K, K), rho_target.dims)


def find_mixing_state(rho_target, K: int, tol: float = 1e-8,
                      seed: int = 0) -> tuple[MultiState, SeparableDecomposition]:
    """State pi with (rho_target + (K-1) pi) / K separable, plus its certificate.

    pi is extracted from a global-robustness certificate X >= rho in the
    separable cone, rescaled to trace K: pi = (X - rho) / (K - 1). Twirl
    invariant targets use the closed-form family certificate; other targets
    fit an explicit product mixture to the PPT-cone optimizer and pad with
    the uniform state to reach trace K.
    """
    K = int(K)
    if K < 2:
        raise ValueError("K must be at least 2")
    rho = as_state(rho_target)
    dims = rho.dims
    d = rho.dim

    if len(dims) == 2 and dims[0] == dims[1] and is_twirl_invariant(rho):
        k = dims[0]
        fid = isotropic_fidelity(rho)
        s = max(0.0, k * fid - 1.0)
        if K < 1.0 + s - 1e-9:
            raise ValueError(f"K = {K} is below 1 + robustness = {1.0 + s:.6f}")
        if s == 0.0:
            return rho, isotropic_separable_decomposition(k, max(fid, 0.0))
        mixer = isotropic(k, 0.0).op
        pi_op = ((K - 1.0 - s) * rho.op + K * s * mixer) / ((1.0 + s) * (K - 1.0))
        return _clipped_state(pi_op, dims), isotropic_boundary_decomposition(k)

    rob = global_robustness(rho, tol=tol, seed=seed)
    if K < 1.0 + rob.upper - 1e-9:
        raise ValueError(f"K = {K} is below 1 + robustness upper bound "
                         f"= {1.0 + rob.upper:.6f}")
    x_opt = rob.lower_certificate["solution"].primal["x"]
    vals, vecs = eigh_clipped(require_hermitian(x_opt, tol=1e-6), floor=0.0)
    x_psd = (vecs * vals) @ vecs.conj().T
    target = x_psd / float(np.real(np.trace(x_psd)))
    dec, fit_resid = approximate_decomposition(target, dims, tol=min(tol, 1e-8),
                                               seed=seed + 5)
    rec = dec.reconstruct()
    t_rec = float(np.real(np.trace(rec)))
    eye = np.eye(d, dtype=complex)
    # leave pad room: a*rec + b*I/d with a*t_rec + b = K, b >= 0
    for frac in (1.0, 1.0 - 1e-6, 0.999, 0.99, 0.95, 0.85):
        a = K * frac / t_rec
        b = K * (1.0 - frac)
        lam = float(np.linalg.eigvalsh(
            require_hermitian(a * rec + (b / d) * eye - rho.op, tol=np.inf))[0])
        if lam >= -1e-7 * K:
            break
    else:
        raise ValueError("no explicit separability certificate found at this K; "
                         "increase K or tighten the decomposition")
    x_tilde = a * rec + (b / d) * eye
    pi = _clipped_state((x_tilde - rho.op) / (K - 1.0), dims)
    cert = SeparableDecomposition.merge(
        [dec, computational_product_decomposition(dims)], [a / K, b / K])
    # certificate targets the actual K-mixture of the clipped pi
    mixture = (rho.op + (K - 1) * pi.op) / K
    resid = trace_norm(mixture - cert.reconstruct())
    if resid > 1e-6:
        raise ValueError(f"certificate residual {resid:.3e} too large")
    return pi, cert


def twirl(state, K: int) -> MultiState:
    """Project onto the isotropic family; preserves fidelity with Phi(K)."""
    K = int(K)
    state = as_state(state, (K, K))
    if state.dims != (K, K):
        raise ValueError(f"profile mismatch: expected ({K}, {K}), got {state.dims}")
    return MultiState((K, K), twirl_project(state.op, K))


def choi_matrix(m: MeasurePrepareMap) -> np.ndarray:
    """Choi operator sum_ij |i><j| (x) map(|i><j|); trace equals d_in."""
    eye = np.eye(m.d_in, dtype=complex)
    a_t = m.povm_a.T
    return np.kron(a_t, m.out_hit.op) + np.kron(eye - a_t, m.out_miss.op)


def verify_cptp(m: MeasurePrepareMap, tp_tol: float = 1e-9) -> CptpReport:
    """Check complete positivity (Choi PSD) and trace preservation."""
    j = choi_matrix(m)
    j = require_hermitian(j, tol=1e-7)
    min_eig = float(np.linalg.eigvalsh(j)[0])
    reduced = partial_trace(j, (m.d_in, m.d_out), keep=(0,))
    tp_dev = float(np.max(np.abs(reduced - np.eye(m.d_in))))
    ok = (min_eig >= -CHOI_PSD_TOL) and (tp_dev <= tp_tol)
    return CptpReport(ok, min_eig, tp_dev, m.in_profile, m.out_profile)


def _distill_shape(m: MeasurePrepareMap) -> int | None:
    """Output dimension K when both prepared states sit on the isotropic family."""
    if len(m.out_profile) != 2 or m.out_profile[0] != m.out_profile[1]:
        return None
    K = m.out_profile[0]
    if K < 2:
        return None
    phi = max_entangled_op(K)
    eye = np.eye(K * K, dtype=complex)
    if (np.max(np.abs(m.out_hit.op - phi)) <= SHAPE_MATCH_TOL
            and np.max(np.abs(m.out_miss.op - (eye - phi) / (K * K - 1)))
            <= SHAPE_MATCH_TOL):
        return K
    return None


def _formation_shape(m: MeasurePrepareMap) -> int | None:
    """Input dimension K when the measurement is the Phi(K) projector."""
    if len(m.in_profile) != 2 or m.in_profile[0] != m.in_profile[1]:
        return None
    K = m.in_profile[0]
    if K < 2:
        return None
    if np.max(np.abs(m.povm_a - max_entangled_op(K))) <= SHAPE_MATCH_TOL:
        return K
    return None


def _sep_range_bounds(a: np.ndarray, dims, tol: float) -> tuple[float, float]:
    """Certified enclosure of tr(A sigma) over separable sigma via the PPT cone."""
    hi = ppt_linear_bound(a, dims, "max", tol=tol)
    lo = ppt_linear_bound(a, dims, "min", tol=tol)
    f_hi = max(hi.objective, hi.dual_objective) + 1e-10
    f_lo = min(lo.objective, lo.dual_objective) - 1e-10
    return max(0.0, f_lo), min(1.0, f_hi)


def verify_sepp(m: MeasurePrepareMap, tol: float = 1e-8,
                seed: int = 0) -> SeppCertificate:
    """Bound the output global robustness over all separable inputs.

    Distillation-shaped maps: outputs are isotropic with fidelity tr(A sigma),
    so the bound is max(0, K * c - 1) with c the PPT-cone maximum of A over
    separable inputs; c <= 1/K certifies epsilon = 0. Formation-shaped maps:
    the output segment is extremal at the miss branch, whose robustness is
    capped at 1/(K-1) whenever the K-mixture is certified separable. Anything
    else is handled by endpoint evaluation of the output segment.
    """
    K_out = _distill_shape(m)
    if K_out is not None:
        sol = ppt_linear_bound(m.povm_a, m.in_profile, "max", tol=min(tol, 1e-9))
        c_up = max(sol.objective, sol.dual_objective) + 1e-10
        eps = max(0.0, K_out * c_up - 1.0)
        val, vecs = max_product_overlap(m.povm_a, m.in_profile, restarts=16,
                                        seed=seed)
        witness = _product_state(vecs, m.in_profile)
        return SeppCertificate(eps, witness, "closed-form-isotropic",
                               meta={"map_shape": "distill", "K": K_out,
                                     "sep_overlap_upper": c_up,
                                     "sep_overlap_witness": val,
                                     "solver_gap": sol.gap})
    K_in = _formation_shape(m)
    if K_in is not None:
        bounds = []
        meta = {"map_shape": "formation", "K": K_in}
        mixture = (m.out_hit.op + (K_in - 1) * m.out_miss.op) / K_in
        mix_state_ok = True
        try:
            mix = _clipped_state(mixture, m.out_profile)
        except ValueError:
            mix_state_ok = False
        if mix_state_ok and ppt_exact(m.out_profile) and is_ppt(mix):
            bounds.append(1.0 / (K_in - 1))
            meta["mixture_certificate"] = "ppt-exact"
        elif mix_state_ok:
            dec, resid = approximate_decomposition(mixture, m.out_profile,
                                                   tol=min(tol, 1e-8),
                                                   seed=seed + 3)
            if dec.n_terms and resid <= 1e-6:
                scale = K_in / (K_in - 1.0)
                rec = dec.reconstruct()
                lam = float(np.linalg.eigvalsh(require_hermitian(
                    scale * rec - m.out_miss.op, tol=np.inf))[0])
                pad = max(0.0, -lam) * 1.0000001 + 1e-14
                d_out = m.d_out
                bounds.append(scale * float(np.real(np.trace(rec)))
                              + pad * d_out - 1.0)
                meta["mixture_certificate"] = "product-fit"
                meta["mixture_fit_residual"] = resid
        rg = global_robustness(m.out_miss, tol=tol, seed=seed)
        bounds.append(rg.upper)
        meta["miss_robustness"] = (rg.lower, rg.upper)
        eps = max(0.0, min(bounds))
        e0 = np.zeros(K_in, dtype=complex)
        e1 = np.zeros(K_in, dtype=complex)
        e0[0] = 1.0
        e1[1] = 1.0
        witness = _product_state([e0, e1], m.in_profile)
        return SeppCertificate(eps, witness, "closed-form-isotropic", meta=meta)

    f_lo, f_hi = _sep_range_bounds(m.povm_a, m.in_profile, min(tol, 1e-9))
    segment = []
    for f in (f_lo, f_hi):
        out = _clipped_state(f * m.out_hit.op + (1.0 - f) * m.out_miss.op,
                             m.out_profile)
        segment.append(global_robustness(out, tol=tol, seed=seed).upper)
    candidates = []
    for val, vecs in (max_product_overlap(m.povm_a, m.in_profile, restarts=12,
                                          seed=seed),
                      product_minimize(m.povm_a, m.in_profile, restarts=12,
                                       seed=seed + 1)):
        w = _product_state(vecs, m.in_profile)
        rb = global_robustness(m.apply(w), tol=tol, seed=seed)
        candidates.append((rb.lower, rb.upper, w))
    lo_w, up_w, witness = max(candidates, key=lambda t: t[0])
    eps = max(max(segment), up_w)
    return SeppCertificate(eps, witness, "sampled",
                           meta={"map_shape": "general",
                                 "overlap_range": (f_lo, f_hi),
                                 "segment_upper": tuple(segment),
                                 "witness_robustness": (lo_w, up_w)})


def compose(first: MeasurePrepareMap,
            second: MeasurePrepareMap) -> MeasurePrepareMap:
    """Apply ``first`` then ``second``; the result is again measure-and-prepare."""
    if first.out_profile != second.in_profile:
        raise ValueError(f"profile mismatch: {first.out_profile} feeds "
                         f"{second.in_profile}")
    p_hit = second.hit_probability(first.out_hit)
    p_miss = second.hit_probability(first.out_miss)
    eye = np.eye(first.d_in, dtype=complex)
    a = p_hit * first.povm_a + p_miss * (eye - first.povm_a)
    return MeasurePrepareMap(a, second.out_hit, second.out_miss,
                             first.in_profile, second.out_profile)


def sepp_composition_bound(eps1: float, eps2: float) -> float:
    """Epsilon for a composition of eps1- and eps2-preserving maps."""
    if eps1 < 0.0 or eps2 < 0.0:
        raise ValueError("negative epsilon")
    return eps1 + eps2 + eps1 * eps2


def _monotonicity(measure_name: str, measure_fn, m: MeasurePrepareMap, state,
                  certificate: SeppCertificate | None, tol: float,
                  seed: int, kwargs) -> MonotonicityReport:
    state = as_state(state, m.in_profile)
    if certificate is None:
        certificate = verify_sepp(m, seed=seed)
    eps = certificate.epsilon
    slack = math.log2(1.0 + eps)
    rhs = measure_fn(state, **kwargs)
    lhs = measure_fn(m.apply(state), **kwargs)
    if lhs.lower > rhs.upper + slack + 1e-9:
        status = "violation"
        margin = lhs.lower - (rhs.upper + slack)
    elif lhs.upper <= rhs.lower + slack + 2.0 * tol:
        status = "verified"
        margin = (rhs.lower + slack + 2.0 * tol) - lhs.upper
    else:
        status = "inconclusive"
        margin = (rhs.upper + slack) - lhs.lower
    return MonotonicityReport(measure_name, status, lhs, rhs, eps, slack, margin)


def check_lr_monotonicity(m: MeasurePrepareMap, state,
                          certificate: SeppCertificate | None = None,
                          tol: float = 1e-6, seed: int = 0,
                          **kwargs) -> MonotonicityReport:
    """log-robustness grows by at most log2(1 + eps) under an eps-preserving map."""
    kwargs.setdefault("tol", 1e-8)
    return _monotonicity("log_robustness", log_robustness, m, state,
                         certificate, tol, seed, kwargs)


def check_er_monotonicity(m: MeasurePrepareMap, state,
                          certificate: SeppCertificate | None = None,
                          tol: float = 1e-3, seed: int = 0,
                          **kwargs) -> MonotonicityReport:
    """Relative-entropy measure grows by at most log2(1 + eps)."""
    kwargs.setdefault("tol", 1e-3)
    kwargs.setdefault("max_iters", 60)
    kwargs.setdefault("restarts", 4)
    kwargs.setdefault("lower_iters", 10)
    return _monotonicity("rel_ent_entanglement", rel_ent_entanglement, m, state,
                         certificate, tol, seed, kwargs)


@dataclass(frozen=True)
class ReversibilityReport:
    """Finite-copy comparison of distillation and formation rates."""

    n: int
    distill_rate: Bracket
    form_rate: Bracket
    er_per_copy: Bracket
    fidelity_table: list
    K_form: int
    epsilons: dict
    gap_form: float
    notes: list


def reversibility_demo(state, n: int, delta: float = 0.05, tol: float = 1e-8,
                       seed: int = 0) -> ReversibilityReport:
    """Build actual distill and formation maps for n copies and report rates.

    Distillation: sweep output sizes K = 2^j, tabulate the best separable
    approximation fidelity of rho^(x n) at scale K, and certify the rate
    log2(K)/n whenever the fidelity provably exceeds 1 - delta. Formation:
    pick the smallest power of two K_n >= 1 + R_G(rho^(x n)), construct the
    mixing state and the formation channel, and verify its certificate. The
    headline number is the gap between the achieved formation rate and the
    single-copy relative-entropy bracket.
    """
    state = as_state(state)
    if n < 1 or n > 2:
        raise ValueError("n must be 1 or 2")
    if state.dim ** n > 100:
        raise ValueError(f"total dimension {state.dim ** n} exceeds the "
                         "demonstration budget of 100")
    notes = []
    rho_n = copies_state(state, n)
    er = rel_ent_entanglement(state, tol=1e-4, max_iters=120, restarts=6,
                              lower_iters=15, seed=seed)

    table = []
    rate_low = 0.0
    rate_up = None
    j_max = max(1, math.ceil(2 * n))
    for j in range(1, j_max + 1):
        K = 2 ** j
        fb = fsep(rho_n, K, tol=tol, seed=seed)
        y = j / n
        table.append({"K": K, "y": y, "lower": fb.lower, "upper": fb.upper})
        if fb.lower >= 1.0 - delta:
            rate_low = max(rate_low, y)
        elif fb.upper < 1.0 - delta and rate_up is None:
            rate_up = y
    if rate_up is None:
        rate_up = j_max / n + 1.0 / n
        notes.append("distill upper limited by the K grid")
    distill_rate = Bracket(rate_low, max(rate_up, rate_low),
                           meta={"delta": delta, "table_size": len(table)})

    eps_distill = None
    if rate_low > 0.0:
        K_star = 2 ** round(rate_low * n)
        sol = _fsep_primal(rho_n.op, rho_n.dims, 1.0 / K_star,
                           default_cut(rho_n.dims), tol)
        vals, vecs = np.linalg.eigh(require_hermitian(sol.primal["a"], tol=1e-6))
        a_clip = (vecs * np.clip(vals, 0.0, 1.0)) @ vecs.conj().T
        dmap = build_distill_map(a_clip, K_star, in_dims=rho_n.dims)
        eps_distill = verify_sepp(dmap, tol=tol, seed=seed).epsilon
    else:
        notes.append("no distillation rate certified at this delta")

    rg = global_robustness(rho_n, tol=tol, seed=seed)
    m_exp = math.ceil(math.log2(1.0 + max(rg.upper, 0.0)) - 1e-9)
    K_form = 2 ** max(m_exp, 0)
    eps_form = None
    if K_form == 1:
        form_rate = Bracket(0.0, 0.0, meta={"K": 1})
        notes.append("target certified separable at this resolution; "
                     "formation is free")
    else:
        pi, cert = find_mixing_state(rho_n, K_form, tol=tol, seed=seed)
        fmap = build_formation_map(rho_n, K_form, pi, certificate=cert)
        eps_form = verify_sepp(fmap, tol=tol, seed=seed).epsilon
        rate = math.log2(K_form) / n
        form_rate = Bracket(rate, rate, meta={"K": K_form})
    gap_form = form_rate.upper - er.lower

    return ReversibilityReport(n=n, distill_rate=distill_rate,
                               form_rate=form_rate, er_per_copy=er,
                               fidelity_table=table, K_form=K_form,
                               epsilons={"distill": eps_distill,
                                         "form": eps_form},
                               gap_form=gap_form, notes=notes)

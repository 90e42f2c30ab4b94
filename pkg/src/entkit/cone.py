"""Dense hermitian cone programs.

A ConeProgram holds hermitian matrix variables, a real-linear objective
Σ Re⟨C_v, X_v⟩ + c, and constraints that are affine in the variables:
PSD memberships (optionally after a partial transpose of individual
terms), hermitian equalities, and real trace equalities. This covers the
positive-partial-transpose relaxations used throughout the package.

Solving compiles to cvxpy (CLARABEL first, SCS fallback). The duality gap
and all residuals reported in ConeSolution are reconstructed here from
the primal/dual pair via the Lagrangian — they do not rely on solver
self-reporting. cvxpy's dual conventions for hermitian constraints
(PSD duals come back halved, equality duals unscaled, both entering the
Lagrangian as  obj − Σ⟨Y_i, psd_expr_i⟩ + Σ⟨V_j, eq_expr_j⟩) are pinned
by tests.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from math import prod

import numpy as np
import cvxpy as cp

from .tensor import partial_transpose, require_hermitian


@dataclass(frozen=True)
class Term:
    """coeff · X_var, optionally partially transposed over ``pt`` subsystems."""

    var: str
    coeff: float = 1.0
    pt: tuple[int, ...] = ()


@dataclass
class Affine:
    """Σ terms + const on a single matrix space."""

    dim: int
    terms: list[Term]
    const: np.ndarray | None = None

    def constant(self) -> np.ndarray:
        if self.const is None:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return np.asarray(self.const, dtype=complex)


@dataclass
class Constraint:
    kind: str               # "psd" | "eq" | "trace"
    expr: Affine
    value: float = 0.0      # target for "trace"
    name: str = ""


class ConeProgram:
    """Declarative hermitian cone program (minimization)."""

    def __init__(self):
        self.var_dims: dict[str, int] = {}
        self.var_subsystems: dict[str, tuple[int, ...]] = {}
        self.objective: dict[str, np.ndarray] = {}
        self.obj_const: float = 0.0
        self.constraints: list[Constraint] = []

    # -- building ---------------------------------------------------------
    def add_var(self, name: str, subsystems) -> str:
        if name in self.var_dims:
            raise ValueError(f"duplicate variable {name}")
        subsystems = tuple(int(d) for d in subsystems)
        self.var_dims[name] = prod(subsystems)
        self.var_subsystems[name] = subsystems
        return name

    def affine(self, terms, const=None, dim=None) -> Affine:
        terms = [t if isinstance(t, Term) else Term(*t) for t in terms]
        for t in terms:
            if t.var not in self.var_dims:
                raise ValueError(f"unknown variable {t.var}")
        if dim is None:
            if terms:
                dim = self.var_dims[terms[0].var]
            elif const is not None:
                dim = np.asarray(const).shape[0]
            else:
                raise ValueError("cannot infer dimension of empty affine expr")
        return Affine(dim, terms, None if const is None else np.asarray(const, dtype=complex))

    def minimize(self, coeffs: dict[str, np.ndarray], const: float = 0.0):
        self.objective = {k: require_hermitian(np.asarray(v, dtype=complex), what=f"objective[{k}]")
                          for k, v in coeffs.items()}
        self.obj_const = float(const)

    def psd(self, expr: Affine, name: str = ""):
        self.constraints.append(Constraint("psd", expr, name=name))

    def eq(self, expr: Affine, name: str = ""):
        self.constraints.append(Constraint("eq", expr, name=name))

    def trace_eq(self, expr: Affine, value: float, name: str = ""):
        self.constraints.append(Constraint("trace", expr, float(value), name=name))

    # -- numeric evaluation helpers ----------------------------------------
    def _term_matrix(self, t: Term, values: dict[str, np.ndarray]) -> np.ndarray:
        m = values[t.var]
        if t.pt:
            m = partial_transpose(m, self.var_subsystems[t.var], t.pt)
        return t.coeff * m

    def eval_expr(self, expr: Affine, values: dict[str, np.ndarray]) -> np.ndarray:
        out = expr.constant().copy()
        for t in expr.terms:
            out = out + self._term_matrix(t, values)
        return out

    def eval_objective(self, values: dict[str, np.ndarray]) -> float:
        tot = self.obj_const
        for k, c in self.objective.items():
            tot += float(np.real(np.vdot(c, values[k])))
        return tot

    def adjoint_into(self, expr: Affine, dual: np.ndarray,
                     acc: dict[str, np.ndarray], sign: float):
        """Accumulate sign·(adjoint of expr applied to dual) per variable."""
        for t in expr.terms:
            d = dual
            if t.pt:
                d = partial_transpose(d, self.var_subsystems[t.var], t.pt)
            acc[t.var] = acc[t.var] + sign * t.coeff * d


@dataclass
class ConeSolution:
    status: str                       # optimal | inaccurate | infeasible | unbounded | failed
    objective: float
    primal: dict[str, np.ndarray]
    duals: list[np.ndarray | float | None]
    dual_objective: float
    gap: float
    residuals: dict[str, float]
    solver: str
    iterations: int
    solve_time: float

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


_STATUS = {
    cp.OPTIMAL: "optimal",
    cp.OPTIMAL_INACCURATE: "inaccurate",
    cp.INFEASIBLE: "infeasible",
    cp.INFEASIBLE_INACCURATE: "infeasible",
    cp.UNBOUNDED: "unbounded",
    cp.UNBOUNDED_INACCURATE: "unbounded",
}

# cvxpy 1.7 hermitian dual conventions, pinned by tests/test_cone.py
PSD_DUAL_SCALE = 2.0
EQ_DUAL_SCALE = 1.0


def _compile(p: ConeProgram):
    cvars = {k: cp.Variable((d, d), hermitian=True, name=k) for k, d in p.var_dims.items()}

    def cexpr(expr: Affine):
        out = None
        for t in expr.terms:
            e = cvars[t.var]
            if t.pt:
                subs = p.var_subsystems[t.var]
                for axis in t.pt:
                    e = cp.partial_transpose(e, list(subs), axis)
            e = t.coeff * e
            out = e if out is None else out + e
        if expr.const is not None:
            c = cp.Constant(expr.constant())
            out = c if out is None else out + c
        return out

    ccons = []
    for c in p.constraints:
        e = cexpr(c.expr)
        if c.kind == "psd":
            ccons.append(e >> 0)
        elif c.kind == "eq":
            ccons.append(e == 0)
        elif c.kind == "trace":
            ccons.append(cp.real(cp.trace(e)) == c.value)
        else:
            raise ValueError(f"unknown constraint kind {c.kind}")
    obj = cp.Constant(p.obj_const)
    for k, cmat in p.objective.items():
        obj = obj + cp.real(cp.trace(cp.Constant(cmat) @ cvars[k]))
    return cp.Problem(cp.Minimize(obj), ccons), cvars, ccons


# interior-point scaling blocks grow like the fourth power of the cone
# dimension; above this complex size Clarabel risks exhausting memory,
# so the first-order solver takes over
DIRECT_SOLVER_MAX_DIM = 32


def solve(p: ConeProgram, tol: float = 1e-8, solver: str | None = None,
          verbose: bool = False) -> ConeSolution:
    """Solve the program; report reconstructed gap and residuals.

    status == "optimal" guarantees gap <= max(10·tol, 1e-7) and primal
    feasibility residuals within the same bound; otherwise the status is
    downgraded to "inaccurate".
    """
    prob, cvars, ccons = _compile(p)
    t0 = time.perf_counter()
    tried = []
    big = max((c.expr.dim for c in p.constraints if c.kind == "psd"), default=0)
    if solver:
        order = [solver]
    elif big > DIRECT_SOLVER_MAX_DIM:
        order = ["SCS"]
    else:
        order = ["CLARABEL", "SCS"]
    for s in order:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", UserWarning)
                if s == "CLARABEL":
                    prob.solve(solver=cp.CLARABEL, verbose=verbose,
                               tol_gap_abs=tol, tol_gap_rel=tol, tol_feas=tol)
                elif s == "SCS":
                    prob.solve(solver=cp.SCS, verbose=verbose, eps=max(tol, 1e-9),
                               max_iters=200_000)
                else:
                    prob.solve(solver=s, verbose=verbose)
            tried.append(s)
            if prob.status in _STATUS and _STATUS[prob.status] != "failed":
                break
        except Exception:  # noqa: BLE001 - solver backends raise various types
            tried.append(s)
            continue
    wall = time.perf_counter() - t0
    status = _STATUS.get(prob.status, "failed")
    iters = getattr(prob.solver_stats, "num_iters", 0) or 0
    sname = getattr(prob.solver_stats, "solver_name", tried[-1] if tried else "none") or "none"

    if status in ("infeasible", "unbounded", "failed"):
        return ConeSolution(status, float("nan"), {}, [], float("nan"), float("nan"),
                            {}, sname, int(iters), wall)

    def _herm(m):
        m = np.asarray(m, dtype=complex)
        return 0.5 * (m + m.conj().T)

    values = {k: _herm(v.value) for k, v in cvars.items()}
    objective = p.eval_objective(values)

    # rebuild the dual objective and stationarity residual from the duals
    duals: list[np.ndarray | float | None] = []
    dual_obj = p.obj_const
    stat = {k: np.asarray(p.objective.get(k, np.zeros((d, d))), dtype=complex).copy()
            for k, d in p.var_dims.items()}
    psd_min = 0.0
    eq_res = 0.0
    dual_ok = True
    for c, cc in zip(p.constraints, ccons):
        dv = cc.dual_value
        if dv is None:
            dual_ok = False
            duals.append(None)
            continue
        if c.kind == "psd":
            y = PSD_DUAL_SCALE * _herm(dv)
            duals.append(y)
            dual_obj -= float(np.real(np.vdot(y, c.expr.constant())))
            p.adjoint_into(c.expr, y, stat, sign=-1.0)
            pe = p.eval_expr(c.expr, values)
            psd_min = min(psd_min, float(np.linalg.eigvalsh(pe)[0]))
        elif c.kind == "eq":
            v = EQ_DUAL_SCALE * _herm(dv)
            duals.append(v)
            dual_obj += float(np.real(np.vdot(v, c.expr.constant())))
            p.adjoint_into(c.expr, v, stat, sign=+1.0)
            eq_res = max(eq_res, float(np.max(np.abs(p.eval_expr(c.expr, values)))))
        else:  # trace
            t = float(np.real(np.asarray(dv)))
            duals.append(t)
            dual_obj += t * (float(np.real(np.trace(c.expr.constant()))) - c.value)
            d = c.expr.dim
            p.adjoint_into(c.expr, t * np.eye(d), stat, sign=+1.0)
            eq_res = max(eq_res, abs(float(np.real(np.trace(p.eval_expr(c.expr, values))))
                                     - c.value))
    stat_res = max((float(np.max(np.abs(m))) for m in stat.values()), default=0.0)
    gap = abs(objective - dual_obj) if dual_ok else float("nan")

    residuals = {"psd_min_eig": psd_min, "eq": eq_res, "stationarity": stat_res}
    bound = max(10.0 * tol, 1e-7)
    if status == "optimal" and not (gap <= bound and psd_min >= -bound and eq_res <= bound):
        status = "inaccurate"
    return ConeSolution(status, objective, values, duals, dual_obj, gap, residuals,
                        sname, int(iters), wall)

"""Batch front-end: state files in, certified brackets out.

Commands: measure (entanglement quantifiers), fsep (separable-approximation
fidelity), stein (discrimination exponents), protocol (channel construction
and verification), sweep (grids to CSV). Reports are JSON with certificates
summarized; sweeps emit a fixed-column CSV whose bytes depend only on the
job and the seed, never on wall time.

Exit codes: 0 success, 2 unreadable input or bad parameters, 3 state
invariant violation, 4 solver failure, 5 dimension budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .bracket import Bracket
from .tensor import MultiState
from .measures import (global_robustness, log_robustness, mixing_robustness,
                       rel_ent_entanglement, smoothed_log_robustness)
from .hypotest import (fsep, fsep_bounded, fsep_relaxed, sfne_eval,
                       stein_curve, stein_functional)
from .protocols import (build_distill_map, build_formation_map,
                        find_mixing_state, reversibility_demo, verify_cptp,
                        verify_sepp)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INVARIANT = 3
EXIT_SOLVER = 4
EXIT_DIMENSION = 5

CSV_COLUMNS = ("command", "state_id", "n", "K", "y", "eps",
               "lower", "upper", "gap", "status", "seconds")

_DIMENSION_MARKERS = ("exceeds the cap", "exceeds the demonstration budget",
                      "copy count n must be", "n must be 1 or 2")
_INVARIANT_MARKERS = ("not hermitian", "negative eigenvalue", "state trace",
                      "invalid dims")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _classify_value_error(exc: ValueError) -> CliError:
    msg = str(exc)
    if any(marker in msg for marker in _DIMENSION_MARKERS):
        return CliError(EXIT_DIMENSION, msg)
    if any(marker in msg for marker in _INVARIANT_MARKERS):
        return CliError(EXIT_INVARIANT, msg)
    return CliError(EXIT_PARSE, msg)


def load_state(path: str) -> tuple[MultiState, str]:
    """Parse {"dims": [...], "matrix": [[[re, im], ...], ...]} into a state."""
    p = Path(path)
    try:
        payload = json.loads(p.read_text())
    except OSError as exc:
        raise CliError(EXIT_PARSE, f"cannot read state file {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_PARSE, f"malformed JSON in {path}: {exc}")
    if not isinstance(payload, dict) or "dims" not in payload or "matrix" not in payload:
        raise CliError(EXIT_PARSE, "state file must contain 'dims' and 'matrix'")
    dims = payload["dims"]
    if (not isinstance(dims, list) or not dims
            or any(not isinstance(d, int) or d < 1 for d in dims)):
        raise CliError(EXIT_PARSE, f"dims must be a list of positive integers, got {dims!r}")
    raw = payload["matrix"]
    d = int(np.prod(dims))
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise CliError(EXIT_PARSE, f"matrix entries must be [re, im] pairs: {exc}")
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise CliError(EXIT_PARSE,
                       f"matrix must be a 2-d grid of [re, im] pairs, got shape {arr.shape}")
    if arr.shape[0] != d or arr.shape[1] != d:
        raise CliError(EXIT_PARSE,
                       f"matrix shape {arr.shape[:2]} does not match dims {dims} "
                       f"(expected {d} x {d})")
    op = arr[..., 0] + 1j * arr[..., 1]
    try:
        state = MultiState(tuple(dims), op)
    except ValueError as exc:
        raise _classify_value_error(exc)
    return state, p.stem


def save_state(state: MultiState, path: str) -> None:
    """Inverse of load_state; used by fixtures and tests."""
    matrix = [[[float(z.real), float(z.imag)] for z in row] for row in state.op]
    Path(path).write_text(json.dumps({"dims": list(state.dims),
                                      "matrix": matrix}, sort_keys=True))


def _parse_grid(text: str, what: str) -> list[float]:
    """Scalar or a:step:b, endpoints inclusive up to rounding."""
    if ":" not in text:
        try:
            return [float(text)]
        except ValueError:
            raise CliError(EXIT_PARSE, f"bad {what} value {text!r}")
    parts = text.split(":")
    if len(parts) != 3:
        raise CliError(EXIT_PARSE, f"grid for {what} must be start:step:stop, got {text!r}")
    try:
        start, step, stop = (float(x) for x in parts)
    except ValueError:
        raise CliError(EXIT_PARSE, f"bad grid {text!r} for {what}")
    if step <= 0 or stop < start:
        raise CliError(EXIT_PARSE, f"grid {text!r} for {what} must move forward")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(count)]


def _parse_copies(text: str) -> list[int]:
    """'2' or '1..3'."""
    if ".." in text:
        lo, _, hi = text.partition("..")
        try:
            lo_i, hi_i = int(lo), int(hi)
        except ValueError:
            raise CliError(EXIT_PARSE, f"bad copy range {text!r}")
        if hi_i < lo_i:
            raise CliError(EXIT_PARSE, f"empty copy range {text!r}")
        return list(range(lo_i, hi_i + 1))
    try:
        return [int(text)]
    except ValueError:
        raise CliError(EXIT_PARSE, f"bad copy count {text!r}")


def _scalar_meta(meta: dict) -> dict:
    out = {}
    for k, v in meta.items():
        if isinstance(v, (int, float, str, bool)):
            out[k] = v
        elif isinstance(v, tuple) and all(isinstance(x, (int, float)) for x in v):
            out[k] = list(v)
    return out


def _relaxation_label(b: Bracket) -> str:
    kind = str(b.upper_certificate.get("kind", ""))
    if "ppt-exact" in kind:
        return "ppt-exact"
    closed = ("separable-decomposition", "mixing-certificate", "family",
              "per-copy-power", "empty-cone-point", "closed-form",
              "classical-diagonal", "uniform-mixture")
    if any(tag in kind for tag in closed):
        return "closed-form"
    return "bracket"


def _bracket_json(b: Bracket) -> dict:
    return {
        "lower": b.lower,
        "upper": b.upper,
        "width": b.width,
        "relaxation": _relaxation_label(b),
        "lower_certificate": str(b.lower_certificate.get("kind", "")),
        "upper_certificate": str(b.upper_certificate.get("kind", "")),
        "iterations": b.iterations,
        "runtime_s": b.runtime,
        "meta": _scalar_meta(b.meta),
    }


def _emit_report(report: dict, out: str | None) -> None:
    text = json.dumps(report, sort_keys=True, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _emit_csv(rows: list[dict], out: str | None) -> None:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        cells = []
        for col in CSV_COLUMNS:
            v = row.get(col)
            if v is None:
                cells.append("")
            elif isinstance(v, float):
                cells.append(repr(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


MEASURES = {
    "rg": global_robustness,
    "lr": log_robustness,
    "er": rel_ent_entanglement,
    "mixing": mixing_robustness,
    "slr": smoothed_log_robustness,
}


def _cmd_measure(args) -> int:
    if args.kind == "slr" and args.eps is None:
        raise CliError(EXIT_PARSE, "measure --kind slr requires --eps")
    state, state_id = load_state(args.state)
    t0 = time.perf_counter()
    fn = MEASURES[args.kind]
    if args.kind == "slr":
        bracket = fn(state, args.eps, tol=args.tol, seed=args.seed)
    elif args.kind == "er":
        bracket = fn(state, tol=max(args.tol, 1e-5), seed=args.seed)
    else:
        bracket = fn(state, tol=args.tol, seed=args.seed)
    report = {
        "command": "measure",
        "inputs": {"kind": args.kind, "state": args.state, "state_id": state_id,
                   "dims": list(state.dims), "eps": args.eps,
                   "tol": args.tol, "seed": args.seed},
        "result": _bracket_json(bracket),
        "wall_time_s": time.perf_counter() - t0,
    }
    _emit_report(report, args.out)
    return EXIT_OK


def _cmd_fsep(args) -> int:
    if args.K < 2:
        raise CliError(EXIT_PARSE, f"--K must be at least 2, got {args.K}")
    if args.variant != "plain" and args.eps is None:
        raise CliError(EXIT_PARSE, f"fsep --variant {args.variant} requires --eps")
    if args.eps is not None and args.eps < 0:
        raise CliError(EXIT_PARSE, "--eps must be nonnegative")
    state, state_id = load_state(args.state)
    t0 = time.perf_counter()
    if args.variant == "plain":
        bracket = fsep(state, args.K, tol=args.tol, seed=args.seed)
    elif args.variant == "relaxed":
        bracket = fsep_relaxed(state, args.K, args.eps, tol=args.tol, seed=args.seed)
    else:
        bracket = fsep_bounded(state, args.K, args.eps, tol=args.tol, seed=args.seed)
    report = {
        "command": "fsep",
        "inputs": {"state": args.state, "state_id": state_id,
                   "dims": list(state.dims), "K": args.K,
                   "variant": args.variant, "eps": args.eps,
                   "tol": args.tol, "seed": args.seed},
        "result": _bracket_json(bracket),
        "wall_time_s": time.perf_counter() - t0,
    }
    _emit_report(report, args.out)
    return EXIT_OK


def _cmd_stein(args) -> int:
    state, state_id = load_state(args.state)
    t0 = time.perf_counter()
    if args.sfne:
        bracket, b_star = sfne_eval(state, args.n, args.y, tol=args.tol,
                                    seed=args.seed)
        extra = {"b_star": b_star}
    else:
        bracket = stein_functional(state, args.n, args.y, tol=args.tol,
                                   seed=args.seed)
        extra = {}
    report = {
        "command": "stein",
        "inputs": {"state": args.state, "state_id": state_id,
                   "dims": list(state.dims), "n": args.n, "y": args.y,
                   "sfne": bool(args.sfne), "tol": args.tol, "seed": args.seed},
        "result": {**_bracket_json(bracket), **extra},
        "wall_time_s": time.perf_counter() - t0,
    }
    _emit_report(report, args.out)
    return EXIT_OK


def _cmd_protocol(args) -> int:
    state, state_id = load_state(args.state)
    t0 = time.perf_counter()
    if args.kind == "demo":
        rep = reversibility_demo(state, args.n, tol=max(args.tol, 1e-8),
                                 seed=args.seed)
        body = {
            "distill_rate": _bracket_json(rep.distill_rate),
            "form_rate": _bracket_json(rep.form_rate),
            "er_per_copy": _bracket_json(rep.er_per_copy),
            "fidelity_table": rep.fidelity_table,
            "K_form": rep.K_form,
            "epsilons": rep.epsilons,
            "gap_form": rep.gap_form,
            "notes": rep.notes,
        }
    elif args.kind == "formation":
        if args.K is None or args.K < 2 or args.K != int(args.K):
            raise CliError(EXIT_PARSE, "protocol --kind formation requires an "
                                       "integer --K >= 2")
        K = int(args.K)
        pi, cert = find_mixing_state(state, K, tol=args.tol, seed=args.seed)
        fmap = build_formation_map(state, K, pi, certificate=cert)
        cptp = verify_cptp(fmap)
        sepp = verify_sepp(fmap, tol=args.tol, seed=args.seed)
        body = {
            "K": K,
            "epsilon": sepp.epsilon,
            "epsilon_cap": 1.0 / (K - 1),
            "method": sepp.method,
            "cptp": {"ok": cptp.ok, "choi_min_eig": cptp.choi_min_eig,
                     "tp_deviation": cptp.tp_deviation},
            "certificate_terms": cert.n_terms,
        }
    else:
        if args.K is None or args.K < 2 or args.K != int(args.K):
            raise CliError(EXIT_PARSE, "protocol --kind distill requires an "
                                       "integer --K >= 2")
        K = int(args.K)
        fb = fsep(state, K, tol=args.tol, seed=args.seed)
        from .hypotest import _fsep_primal
        from .sep import default_cut
        sol = _fsep_primal(state.op, state.dims, 1.0 / K,
                           default_cut(state.dims), args.tol)
        vals, vecs = np.linalg.eigh(sol.primal["a"])
        a_clip = (vecs * np.clip(vals, 0.0, 1.0)) @ vecs.conj().T
        dmap = build_distill_map(a_clip, K, in_dims=state.dims)
        cptp = verify_cptp(dmap)
        sepp = verify_sepp(dmap, tol=args.tol, seed=args.seed)
        body = {
            "K": K,
            "fidelity": _bracket_json(fb),
            "epsilon": sepp.epsilon,
            "method": sepp.method,
            "cptp": {"ok": cptp.ok, "choi_min_eig": cptp.choi_min_eig,
                     "tp_deviation": cptp.tp_deviation},
        }
    report = {
        "command": "protocol",
        "inputs": {"kind": args.kind, "state": args.state, "state_id": state_id,
                   "dims": list(state.dims), "n": args.n, "K": args.K,
                   "tol": args.tol, "seed": args.seed},
        "result": body,
        "wall_time_s": time.perf_counter() - t0,
    }
    _emit_report(report, args.out)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    state, state_id = load_state(args.state)
    rows = []
    if args.kind == "stein":
        ys = _parse_grid(args.y, "--y")
        for n in _parse_copies(args.n):
            try:
                curve = stein_curve(state, n, ys, tol=args.tol, seed=args.seed)
            except ValueError as exc:
                raise _classify_value_error(exc)
            for y, b in zip(ys, curve):
                rows.append({"command": "stein", "state_id": state_id,
                             "n": n, "K": None, "y": float(y), "eps": None,
                             "lower": b.lower, "upper": b.upper,
                             "gap": b.width, "status": _relaxation_label(b),
                             "seconds": 0.0})
    else:
        ks = _parse_grid(args.K_grid, "--K")
        if any(k < 2 for k in ks):
            raise CliError(EXIT_PARSE, "fsep sweep requires K >= 2 everywhere")
        eps = args.eps
        for k in ks:
            if args.variant == "plain":
                b = fsep(state, k, tol=args.tol, seed=args.seed)
            elif args.variant == "relaxed":
                if eps is None:
                    raise CliError(EXIT_PARSE, "sweep --variant relaxed requires --eps")
                b = fsep_relaxed(state, k, eps, tol=args.tol, seed=args.seed)
            else:
                if eps is None:
                    raise CliError(EXIT_PARSE, "sweep --variant bounded requires --eps")
                b = fsep_bounded(state, k, eps, tol=args.tol, seed=args.seed)
            rows.append({"command": "fsep", "state_id": state_id,
                         "n": None, "K": float(k), "y": None, "eps": eps,
                         "lower": b.lower, "upper": b.upper,
                         "gap": b.width, "status": _relaxation_label(b),
                         "seconds": 0.0})
    _emit_csv(rows, args.out)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="entkit",
                                  description="certified entanglement toolbox")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--state", required=True, help="state JSON file")
        p.add_argument("--tol", type=float, default=1e-6)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="write the report here "
                                                   "instead of stdout")

    m = sub.add_parser("measure", help="entanglement quantifier brackets")
    m.add_argument("--kind", choices=sorted(MEASURES), required=True)
    m.add_argument("--eps", type=float, default=None,
                   help="smoothing budget for --kind slr")
    common(m)
    m.set_defaults(fn=_cmd_measure)

    f = sub.add_parser("fsep", help="best separable approximation fidelity")
    f.add_argument("--K", type=float, required=True)
    f.add_argument("--variant", choices=("plain", "relaxed", "bounded"),
                   default="plain")
    f.add_argument("--eps", type=float, default=None)
    common(f)
    f.set_defaults(fn=_cmd_fsep)

    s = sub.add_parser("stein", help="discrimination functional at one point")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--y", type=float, required=True)
    s.add_argument("--sfne", action="store_true",
                   help="optimize the exponent trade-off over thresholds")
    common(s)
    s.set_defaults(fn=_cmd_stein)

    pr = sub.add_parser("protocol", help="construct and verify channels")
    pr.add_argument("--kind", choices=("demo", "formation", "distill"),
                    required=True)
    pr.add_argument("--n", type=int, default=1)
    pr.add_argument("--K", type=float, default=None)
    common(pr)
    pr.set_defaults(fn=_cmd_protocol)

    sw = sub.add_parser("sweep", help="grid evaluation to CSV")
    sw.add_argument("--kind", choices=("stein", "fsep"), required=True)
    sw.add_argument("--n", default="1", help="copy count or range like 1..3")
    sw.add_argument("--y", default="0:0.25:2", help="grid start:step:stop")
    sw.add_argument("--K", dest="K_grid", default="2:1:4",
                    help="K grid for fsep sweeps")
    sw.add_argument("--variant", choices=("plain", "relaxed", "bounded"),
                    default="plain")
    sw.add_argument("--eps", type=float, default=None)
    common(sw)
    sw.set_defaults(fn=_cmd_sweep)
    return top


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        err = _classify_value_error(exc)
        print(f"error: {err}", file=sys.stderr)
        return err.code
    except ArithmeticError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

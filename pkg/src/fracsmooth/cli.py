"""
Command-line interface.

Every command reads a function record (``--f`` JSON or the ``function``
field of ``--config``), runs one operation and prints a one-line summary.
``--out`` receives the artifact (CSV by default, JSON with
``--format json``).  Exit status: 0 on success, 1 on usage errors, 2 when
the results carry numerical flags (the artifact is still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import textwrap
from dataclasses import replace

import numpy as np

from . import __version__
from .best_approx import SolverOptions, best_approx, best_approx_table
from .corpus import from_record
from .fractional import frac_difference, weyl_of_spec
from .quasinorm import QuadratureSpec, lp_norm
from .smoothness import dyadic_steps, modulus_curve, realization
from .verifier import (
    DEFAULT_SWEEPS,
    REGISTRY,
    HypothesisError,
    TheoremCase,
    VerifyEnv,
    fit_rate,
    sweep,
    unknown_id_message,
)

COMMANDS = ("norm", "fracdiff", "weyl", "modulus", "bestapprox", "realization", "verify", "sweep", "slope")


class UsageError(Exception):
    """Bad invocation or configuration (exit status 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _num(v: float) -> str:
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def build_parser() -> argparse.ArgumentParser:
    ids = ", ".join(REGISTRY)
    # ids contain hyphens, so the list is wrapped here rather than by argparse
    id_text = textwrap.fill(f"registry ids: {ids}", width=78, break_on_hyphens=False)
    parser = _Parser(
        prog="fracsmooth",
        description="Fractional smoothness in L_p quasi-norms: operators, approximation and inequality checks.",
        epilog=id_text,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    def common(p, *, n_many=False):
        p.add_argument("--f", help="function record as JSON, e.g. '{\"kind\":\"sign_sin\"}'")
        p.add_argument("--p", type=float, help="exponent of the quasi-norm")
        p.add_argument("--alpha", type=float, help="order of difference / derivative")
        p.add_argument("--beta", type=float, help="order of the modulus")
        if n_many:
            p.add_argument("--n", type=int, nargs="+", help="degree(s)")
        else:
            p.add_argument("--n", type=int, help="degree")
        p.add_argument("--h", type=float, nargs="+", help="step(s)")
        p.add_argument("--config", help="JSON config file; command-line flags override it")
        p.add_argument("--out", help="artifact path (default: stdout summary only)")
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--seed", type=int, help="global seed (default 0)")
        p.add_argument("--jobs", type=int, help="worker threads")
        p.add_argument("--grid-size", type=int, dest="grid_size", help="quadrature base grid size")
        p.add_argument("--restarts", type=int, help="solver restarts")

    helps = {
        "norm": "L_p quasi-norm of a function",
        "fracdiff": "fractional difference: samples and quasi-norm",
        "weyl": "Weyl derivative / integral: coefficients",
        "modulus": "modulus of smoothness curve",
        "bestapprox": "best approximation E_n (one degree or a table)",
        "realization": "realization functional",
        "verify": "evaluate the cases of one registry id",
        "sweep": "evaluate and summarize a registry sweep",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text,
                           epilog=id_text if name in ("verify", "sweep") else None,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        common(p, n_many=(name == "bestapprox"))
        if name in ("verify", "sweep"):
            p.add_argument("--case", help="registry id (listed below)")
    s = sub.add_parser("slope", help="log-log rate fit of two CSV columns", description="log-log rate fit")
    s.add_argument("--in", dest="input", required=True, help="CSV file with a header row")
    s.add_argument("--x", required=True, help="abscissa column")
    s.add_argument("--y", required=True, help="ordinate column")
    s.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))
    s.add_argument("--where", action="append", default=[], metavar="COL=VALUE",
                   help="keep only rows with this column value (repeatable)")
    s.add_argument("--out")
    return parser


# ---------------------------------------------------------------------------
# configuration


def _load_config(path):
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    return cfg


def _merged(args, cfg) -> dict:
    """Parameters from the config with command-line overrides applied."""
    params = dict(cfg.get("params", {}))
    for name in ("p", "alpha", "beta", "n", "h"):
        v = getattr(args, name, None)
        if v is not None:
            params[name] = v
    return params


def _function(args, cfg):
    rec = args.f if getattr(args, "f", None) else cfg.get("function")
    if rec is None:
        raise UsageError("a function record is required (--f or config 'function')")
    try:
        if isinstance(rec, str):
            rec = json.loads(rec)
        return from_record(rec), rec
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"bad function record: {exc}") from exc


def _quadrature(args, cfg):
    q = dict(cfg.get("quadrature", {}))
    if args.grid_size is not None:
        q["base_size"] = args.grid_size
    return QuadratureSpec(**q) if q else None


def _solver(args, cfg, seed):
    s = dict(cfg.get("solver", {}))
    if args.restarts is not None:
        s["restarts"] = args.restarts
    if "eps_schedule" in s:
        s["eps_schedule"] = tuple(s["eps_schedule"])
    s.setdefault("seed", seed)
    return SolverOptions(**s)


def _seed(args, cfg) -> int:
    return int(args.seed if args.seed is not None else cfg.get("seed", 0))


def _need(params, *names):
    for n in names:
        if params.get(n) is None:
            raise UsageError(f"missing parameter --{n}")


def _scalar(v):
    if isinstance(v, (list, tuple)):
        if len(v) != 1:
            raise UsageError("expected a single value")
        return v[0]
    return v


# ---------------------------------------------------------------------------
# artifacts


def _table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    for r in rows:
        w.writerow([_num(x) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def _write(args, text_csv: str, payload: dict):
    if not args.out:
        return
    fmt = args.format or ("json" if args.out.endswith(".json") else "csv")
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n" if fmt == "json" else text_csv
    try:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {args.out!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# commands


def cmd_norm(args, cfg):
    f, _ = _function(args, cfg)
    P = _merged(args, cfg)
    _need(P, "p")
    v, info = lp_norm(f, float(P["p"]), _quadrature(args, cfg), full_output=True)
    print(_num(v))
    _write(args, _table_csv(["p", "norm"], [[float(P["p"]), float(v)]]), {"p": P["p"], "norm": v, **info})
    return 0 if info.get("converged", True) else 2


def cmd_fracdiff(args, cfg):
    f, _ = _function(args, cfg)
    P = _merged(args, cfg)
    _need(P, "alpha", "h")
    delta = float(_scalar(P["h"]))
    d = frac_difference(f, float(P["alpha"]), delta)
    N = int(args.grid_size or cfg.get("grid_size", 1024))
    x = 2.0 * np.pi * np.arange(N) / N
    y = np.asarray(d(x), dtype=complex)
    rows = [[float(a), float(b.real), float(b.imag)] for a, b in zip(x, y)]
    payload = {"alpha": P["alpha"], "delta": delta, "flags": list(d.flags)}
    if P.get("p") is not None:
        payload["norm"] = lp_norm(d, float(P["p"]), _quadrature(args, cfg))
        print(_num(payload["norm"]))
    else:
        print(f"{N} samples")
    payload["samples"] = rows
    _write(args, _table_csv(["x", "re", "im"], rows), payload)
    return 2 if d.flags else 0


def cmd_weyl(args, cfg):
    f, _ = _function(args, cfg)
    P = _merged(args, cfg)
    _need(P, "alpha")
    K = int(P.get("n") or 64)
    g = weyl_of_spec(f, float(P["alpha"]))
    ks = np.arange(-K, K + 1)
    c = g.coefficient(ks)
    rows = [[int(k), float(v.real), float(v.imag)] for k, v in zip(ks, c)]
    payload = {"alpha": P["alpha"], "flags": list(g.flags), "coefficients": rows}
    if P.get("p") is not None:
        payload["norm"] = lp_norm(g, float(P["p"]), _quadrature(args, cfg))
        print(_num(payload["norm"]))
    else:
        print(f"{len(rows)} coefficients")
    _write(args, _table_csv(["k", "re", "im"], rows), payload)
    return 2 if g.flags else 0


def cmd_modulus(args, cfg):
    f, _ = _function(args, cfg)
    P = _merged(args, cfg)
    order = P.get("beta", P.get("alpha"))
    if order is None:
        raise UsageError("missing parameter --beta (or --alpha) for the order")
    _need(P, "p")
    hs = P.get("h")
    hs = dyadic_steps() if hs is None else np.asarray(hs if isinstance(hs, (list, tuple)) else [hs], float)
    try:
        curve = modulus_curve(f, float(order), float(P["p"]), hs, _quadrature(args, cfg))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rows = [[float(h), float(v)] for h, v in zip(curve.h, curve.values)]
    if len(rows) == 1:
        print(_num(rows[0][1]))
    else:
        try:
            fit = fit_rate(rows)
            print(f"slope {fit.slope:.4f} (r2 {fit.r2:.4f}) over {len(rows)} steps")
        except ValueError:
            print(f"{len(rows)} steps")
    _write(args, _table_csv(["h", "omega"], rows), {"order": order, "p": P["p"], "curve": rows,
                                                    "flags": list(curve.flags)})
    return 2 if curve.flags else 0


def cmd_bestapprox(args, cfg):
    f, _ = _function(args, cfg)
    P = _merged(args, cfg)
    _need(P, "n", "p")
    ns = P["n"] if isinstance(P["n"], (list, tuple)) else [P["n"]]
    ns = sorted(int(n) for n in ns)
    seed = _seed(args, cfg)
    opts = _solver(args, cfg, seed)
    q = _quadrature(args, cfg)
    p = float(P["p"])
    if len(ns) == 1:
        res = best_approx(f, ns[0], p, opts, q)
        print(_num(res.value))
        T = res.polynomial
        rows = [[int(k), float(c.real), float(c.imag)] for k, c in zip(T.ks, T.coeffs)]
        payload = {"n": ns[0], "p": p, "value": res.value, "status": res.status, "coefficients": rows}
        _write(args, _table_csv(["k", "re", "im"], rows), payload)
        return 0 if res.status == "converged" else 2
    table = best_approx_table(f, ns[-1], p, opts, q, degrees=ns)
    rows = [[int(n), float(v), s] for n, v, s in zip(table.n, table.values, table.statuses)]
    print(f"E_{ns[0]}..E_{ns[-1]}: {_num(table.values[0])} .. {_num(table.values[-1])}")
    _write(args, _table_csv(["n", "E", "status"], rows), {"p": p, "table": rows})
    return 0 if all(s == "converged" for s in table.statuses) else 2


def cmd_realization(args, cfg):
    f, _ = _function(args, cfg)
    P = _merged(args, cfg)
    _need(P, "alpha", "h", "p")
    delta = float(_scalar(P["h"]))
    opts = _solver(args, cfg, _seed(args, cfg))
    try:
        res = realization(f, float(P["alpha"]), delta, float(P["p"]), opts, _quadrature(args, cfg))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(_num(res.value))
    payload = {"value": res.value, "parts": list(res.parts), "diagnostics": res.diagnostics}
    _write(args, _table_csv(["delta", "value", "distance", "penalty"],
                            [[delta, res.value, res.parts[0], res.parts[1]]]), payload)
    return 0


def _registry_run(args, cfg, with_summary: bool):
    cid = args.case or cfg.get("case")
    if not cid:
        raise UsageError("--case is required; registry ids: " + ", ".join(REGISTRY))
    if cid not in REGISTRY:
        raise UsageError(unknown_id_message(cid))
    seed = _seed(args, cfg)
    env = VerifyEnv(
        solver=_solver(args, {**cfg, "solver": {"restarts": 2, **cfg.get("solver", {})}}, seed),
        quadrature=_quadrature(args, cfg),
        seed=seed,
        jobs=int(args.jobs or cfg.get("jobs", 1)),
        horizon=cfg.get("horizon"),
        completion=bool(cfg.get("completion", False)),
    )
    if "h_grid" in cfg:
        env = replace(env, h_grid=tuple(float(h) for h in cfg["h_grid"]))
    grid = dict(cfg.get("grid", {}))
    P = _merged(args, cfg)
    for k, v in P.items():
        grid[k] = v
    corpus = cfg.get("corpus")
    if getattr(args, "f", None) or "function" in cfg:
        _, rec = _function(args, cfg)
        corpus = [rec]
    if corpus is None and not grid:
        d = DEFAULT_SWEEPS[cid]
        corpus, grid = d["corpus"], d["grid"]
    elif corpus is None:
        if REGISTRY[cid].needs_function:
            corpus = DEFAULT_SWEEPS[cid]["corpus"]
        else:
            corpus = [None]
        base = dict(DEFAULT_SWEEPS[cid]["grid"])
        base.update(grid)
        grid = base
    window = cfg.get("window")
    try:
        result = sweep(cid, corpus, grid, env, window=window)
    except (HypothesisError, ValueError, KeyError) as exc:
        raise UsageError(str(exc)) from exc
    flagged = [r for r in result.reports if r.flags]
    payload = {"rows": [_json_row(r.row()) for r in result.reports]}
    if with_summary:
        payload["summary"] = json.loads(result.summary_json())
    _write(args, result.to_csv(), payload)
    s = result.summary
    line = f"{cid}: {len(result.reports)} cases"
    if s.get("max_ratio") is not None:
        line += f", ratio band [{s['min_ratio']:.4g}, {s['max_ratio']:.4g}]"
    if s.get("stability") is not None:
        line += f", stability {s['stability']:.3f}"
    if s.get("slope") is not None:
        line += f", slope {s['slope']:.4f}"
    if "passed" in s:
        line += f", passed={s['passed']}"
    if flagged:
        line += f", {len(flagged)} flagged"
    print(line)
    if with_summary:
        text = result.summary_json()
        if args.out:
            path = args.out.rsplit(".", 1)[0] + ".summary.json"
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        else:
            print(text)
    return 2 if flagged else 0


def _json_row(row):
    out = {}
    for k, v in row.items():
        if isinstance(v, float) and math.isinf(v):
            v = "inf"
        out[k] = v
    return out


def cmd_verify(args, cfg):
    return _registry_run(args, cfg, with_summary=False)


def cmd_sweep(args, cfg):
    return _registry_run(args, cfg, with_summary=True)


def cmd_slope(args, cfg):
    try:
        with open(args.input, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise UsageError(f"cannot read {args.input!r}: {exc}") from exc
    if rows and (args.x not in rows[0] or args.y not in rows[0]):
        raise UsageError(f"columns {args.x!r}/{args.y!r} not in {list(rows[0])}")
    for cond in args.where:
        if "=" not in cond:
            raise UsageError(f"--where needs COL=VALUE, got {cond!r}")
        col, val = cond.split("=", 1)
        rows = [r for r in rows if r.get(col) == val]
    try:
        pts = [(float(r[args.x]), float(r[args.y])) for r in rows]
        fit = fit_rate(pts, args.window)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    text = json.dumps(fit.as_dict(), sort_keys=True)
    print(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return 0


_DISPATCH = {
    "norm": cmd_norm, "fracdiff": cmd_fracdiff, "weyl": cmd_weyl, "modulus": cmd_modulus,
    "bestapprox": cmd_bestapprox, "realization": cmd_realization, "verify": cmd_verify,
    "sweep": cmd_sweep, "slope": cmd_slope,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return 1
    try:
        cfg = {} if args.command == "slope" else _load_config(args.config)
        if cfg.get("command") not in (None, args.command):
            raise UsageError(f"config is for command {cfg['command']!r}, not {args.command!r}")
        return _DISPATCH[args.command](args, cfg)
    except UsageError as exc:
        print(f"fracsmooth: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

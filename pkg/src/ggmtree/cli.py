"""Command-line front end.

Subcommands take a JSON model description (potential, period q, branching
degree d), run the requested computation, and emit CSV for sweeps and tables
or JSON for structured reports. Every output embeds a schema version and the
fully resolved configuration, and identical configurations with identical
seeds produce byte-identical files.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import bl_solver, chains, diagnostics, measures
from .errors import (
    Diverged,
    GGMError,
    MaxIterations,
    NonSummable,
    UnsupportedDegree,
    UnsupportedPeriod,
)
from .model import (
    IncrementWindow,
    PeriodicBoundaryLaw,
    cayley_ball,
    model_from_json,
    model_to_json,
    path_volume,
)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(Exception):
    pass


def _workers() -> int:
    raw = os.environ.get("GGM_WORKERS", "")
    try:
        n = int(raw) if raw else min(4, os.cpu_count() or 1)
    except ValueError:
        raise ConfigError(f"GGM_WORKERS must be an integer, got {raw!r}")
    return max(1, n)


def _load_model(path: str):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"model file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"malformed JSON in {path} at line {exc.lineno} column {exc.colno}: {exc.msg}"
        )
    try:
        return model_from_json(doc)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"invalid model in {path}: {exc}")


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _csv_text(meta: dict, header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _json_text(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _meta(config: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "config": config}


def _select_law(op, q, d, branch: str, tol: float) -> tuple[PeriodicBoundaryLaw, str]:
    if branch == "trivial":
        return PeriodicBoundaryLaw.trivial(q), "trivial"
    reports = bl_solver.find_branches(op, q, d, tol=tol)
    if branch == "auto":
        best = max(reports, key=lambda r: max(abs(v - 1.0) for v in r.solution.a))
        return best.solution, best.branch_label
    for rep in reports:
        if rep.branch_label == branch:
            return rep.solution, rep.branch_label
    raise ConfigError(f"no solved branch labelled {branch!r}; found "
                      f"{sorted(set(r.branch_label for r in reports))}")


def _apply_perturbation(law: PeriodicBoundaryLaw, perturb: float) -> PeriodicBoundaryLaw:
    if perturb == 0.0:
        return law
    if law.q < 2:
        raise ConfigError("--perturb needs a period of at least 2")
    a = list(law.a)
    a[1] *= 1.0 + perturb
    return PeriodicBoundaryLaw.from_values(a)


def _window_for(op, law, cutoff: int | None) -> IncrementWindow:
    if cutoff is None:
        return IncrementWindow.for_model(op, law)
    return IncrementWindow.manual(op, cutoff, law)


# ---------------------------------------------------------------------------
# subcommands


def cmd_solve_bl(args) -> int:
    op, q, d = _load_model(args.model)
    if args.beta_min is not None or args.beta_max is not None:
        if args.beta_min is None or args.beta_max is None:
            raise ConfigError("--beta-min and --beta-max must be given together")
        if not hasattr(op, "beta"):
            raise ConfigError("beta sweeps need an sos or discrete_gaussian potential")
        count = int(round((args.beta_max - args.beta_min) / args.beta_step)) + 1
        betas = [args.beta_min + i * args.beta_step for i in range(count)]
    else:
        betas = [getattr(op, "beta", None)]
    config = {
        "command": "solve-bl",
        "model": model_to_json(op, q, d),
        "betas": betas,
        "starts": args.starts,
        "damping": args.damping,
        "max_iter": args.max_iter,
        "tol": args.tol,
    }

    def solve_at(beta):
        local = op if beta is None else type(op)(beta)
        return beta, bl_solver.find_branches(
            local, q, d, n_starts=args.starts, damping=args.damping,
            max_iter=args.max_iter, tol=args.tol)

    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        results = list(pool.map(solve_at, betas))
    results.sort(key=lambda r: (r[0] is not None, r[0]))
    rows = []
    for beta, reports in results:
        for rep in reports:
            rows.append([beta if beta is not None else "", rep.branch_label,
                         *[float(v) for v in rep.solution.a],
                         float(rep.residual), rep.iterations])
    header = ["beta", "branch", *[f"a_{k}" for k in range(q)], "residual", "iterations"]
    _emit(_csv_text(_meta(config), header, rows), args.out)
    return EXIT_OK


def cmd_critical_beta(args) -> int:
    config = {"command": "critical-beta", "q": args.q, "d": args.d,
              "family": args.family}
    value = bl_solver.critical_beta(args.q, args.d, args.family)
    payload = _meta(config) | {"critical_beta": value}
    _emit(_json_text(payload), args.out)
    return EXIT_OK


def cmd_marginal(args) -> int:
    op, q, d = _load_model(args.model)
    law, label = _select_law(op, q, d, args.branch, args.tol)
    law = _apply_perturbation(law, args.perturb)
    window = _window_for(op, law, args.window)
    config = {
        "command": "marginal",
        "model": model_to_json(op, q, d),
        "branch": args.branch,
        "window": window.cutoff,
        "tol": args.tol,
        "perturb": args.perturb,
    }
    marg = measures.single_bond_marginal(op, law, window)
    payload = _meta(config) | {
        "branch_label": label,
        "law": [float(v) for v in law.a],
        "single_bond": {str(int(z)): float(p) for z, p in zip(window.offsets, marg)},
    }
    _emit(_json_text(payload), args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    op, q, d = _load_model(args.model)
    law, label = _select_law(op, q, d, args.branch, args.tol)
    window = _window_for(op, law, args.window)
    kernel = chains.build_layer_kernel(op, law, window)
    chain = chains.fuzzy_transform(kernel)
    volume = cayley_ball(d, args.depth)
    spec = measures.GGMSpec(kernel, chain, volume)
    config = {
        "command": "sample",
        "model": model_to_json(op, q, d),
        "branch": args.branch,
        "n": args.n,
        "seed": args.seed,
        "depth": args.depth,
        "window": window.cutoff,
        "tol": args.tol,
    }
    batch = measures.sample_ggm_batch(spec, args.n, args.seed)
    rows = []
    for i in range(args.n):
        for e, (x, y) in enumerate(volume.directed_edges):
            rows.append([i, f"{x}>{y}", int(batch[i, e])])
    _emit(_csv_text(_meta(config), ["sample", "edge", "increment"], rows), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    op, q, d = _load_model(args.model)
    law, label = _select_law(op, q, d, args.branch, 1e-12)
    law = _apply_perturbation(law, args.perturb)
    window = _window_for(op, law, args.window)
    kernel = chains.build_layer_kernel(op, law, window)
    chain = chains.fuzzy_transform(kernel)
    volume = cayley_ball(d, args.depth)
    config = {
        "command": "verify",
        "model": model_to_json(op, q, d),
        "branch": args.branch,
        "depth": args.depth,
        "window": window.cutoff,
        "tol": args.tol,
        "perturb": args.perturb,
    }
    tol = args.tol
    pin = measures.PinnedMeasureSpec(kernel, volume, 0, 0)
    ggm = measures.GGMSpec(kernel, chain, volume)
    inner = {0}
    pins = [0, 1, volume.children[1][0] if volume.children[1] else 1]
    checks = {
        "boundary_law_residual": (bl_solver.residual(law, op, d), tol),
        "stationarity": (float(np.abs(chain.alpha @ chain.matrix - chain.alpha).max()),
                         tol),
        "reversibility": (chains.check_reversibility(kernel, chain), tol),
        "dual_representation_pinned": (measures.max_dual_gap_pinned(pin), tol),
        "dual_representation_mixture": (measures.max_dual_gap_ggm(ggm), tol),
        "consistency": (measures.check_consistency(pin, inner), tol),
        "homogeneity": (measures.check_homogeneity(ggm, pins), tol),
        "windowed_mass": (abs(1.0 - measures.windowed_mass(pin)),
                          max(tol, 10.0 * window.tail_mass_bound)),
    }
    if 1 in volume.interior:
        # condition on a mixed boundary-height class so the conditional check
        # has real discriminating power
        dlr_edges = volume.edges_touching({1})
        reference = {dlr_edges[-1]: 1} if len(dlr_edges) > 1 else None
        checks["restricted_conditional"] = (
            measures.check_restricted_dlr(pin, {1}, reference=reference), tol)
    report = {
        name: {"violation": float(v), "tolerance": float(t), "pass": bool(v <= t)}
        for name, (v, t) in checks.items()
    }
    ok = all(entry["pass"] for entry in report.values())
    payload = _meta(config) | {"branch_label": label, "checks": report, "pass": ok}
    _emit(_json_text(payload), args.out)
    return EXIT_OK if ok else EXIT_VERIFICATION


def cmd_correlation(args) -> int:
    op, q, d = _load_model(args.model)
    law, label = _select_law(op, q, d, args.branch, args.tol)
    window = _window_for(op, law, args.window)
    kernel = chains.build_layer_kernel(op, law, window)
    chain = chains.fuzzy_transform(kernel)
    config = {
        "command": "correlation",
        "model": model_to_json(op, q, d),
        "branch": args.branch,
        "n_max": args.n_max,
        "window": window.cutoff,
        "tol": args.tol,
    }
    rows = []
    for n in range(1, args.n_max + 1):
        volume = path_volume(n + 2, d)
        spec = measures.GGMSpec(kernel, chain, volume)
        cov, bound = diagnostics.correlation_and_bound(
            spec, {0, 1}, {n + 1, n + 2}, {(0, 1): 0}, {(n + 1, n + 2): 0}, n)
        rows.append([n, float(cov), float(bound)])
    _emit(_csv_text(_meta(config), ["n", "covariance", "bound"], rows), args.out)
    return EXIT_OK


def cmd_counterexample(args) -> int:
    try:
        ce = diagnostics.CounterexampleChain(args.eps0, args.eps1)
    except ValueError as exc:
        raise ConfigError(str(exc))
    config = {"command": "counterexample", "eps0": args.eps0, "eps1": args.eps1,
              "kmax": args.kmax}
    rows = []
    for k in range(1, args.kmax + 1):
        closed = diagnostics.conditional_ratio_closed(ce, k, k)
        enum = diagnostics.conditional_ratio_enumerated(ce, k, k)
        rows.append([k, float(closed), float(enum)])
    _emit(_csv_text(_meta(config), ["k", "ratio_closed_form", "ratio_enumerated"], rows),
          args.out)
    return EXIT_OK


def cmd_chain_dump(args) -> int:
    op, q, d = _load_model(args.model)
    law, label = _select_law(op, q, d, args.branch, args.tol)
    window = _window_for(op, law, args.window)
    kernel = chains.build_layer_kernel(op, law, window)
    chain = chains.fuzzy_transform(kernel)
    config = {
        "command": "chain dump",
        "model": model_to_json(op, q, d),
        "branch": args.branch,
        "window": window.cutoff,
        "tol": args.tol,
    }
    payload = _meta(config) | {
        "branch_label": label,
        "law": [float(v) for v in law.a],
        "kernel_rows": {
            str(s): {str(int(z)): float(p) for z, p in zip(window.offsets, kernel.rows[s])}
            for s in range(q)
        },
        "fuzzy_matrix": [[float(v) for v in row] for row in chain.matrix],
        "alpha": [float(v) for v in chain.alpha],
    }
    _emit(_json_text(payload), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ggmtree",
        description="Gradient measures on regular trees from periodic boundary laws",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, model=True):
        if model:
            p.add_argument("--model", required=True, help="JSON model description")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--tol", type=float, default=1e-10)
        p.add_argument("--window", type=int, default=None,
                       help="increment cutoff (default: certified automatically)")
        p.add_argument("--branch", default="auto",
                       choices=["auto", "trivial", "upper", "lower", "other"])

    p = sub.add_parser("solve-bl", help="solve the periodic boundary-law equation")
    p.add_argument("--model", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--beta-min", type=float, default=None)
    p.add_argument("--beta-max", type=float, default=None)
    p.add_argument("--beta-step", type=float, default=0.05)
    p.add_argument("--starts", type=int, default=50)
    p.add_argument("--damping", type=float, default=0.7)
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_solve_bl)

    p = sub.add_parser("critical-beta", help="onset of multiple boundary laws")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--family", default="sos")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_critical_beta)

    p = sub.add_parser("marginal", help="exact single-bond marginal table")
    add_common(p)
    p.add_argument("--perturb", type=float, default=0.0)
    p.set_defaults(func=cmd_marginal)

    p = sub.add_parser("sample", help="draw configurations on a closed ball")
    add_common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--depth", type=int, default=2)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify", help="run the invariant suite on a model")
    add_common(p)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--perturb", type=float, default=0.0)
    p.set_defaults(func=cmd_verify)
    p.set_defaults(tol=1e-9)

    p = sub.add_parser("correlation", help="covariance decay along a path")
    add_common(p)
    p.add_argument("--n-max", type=int, default=10)
    p.set_defaults(func=cmd_correlation)

    p = sub.add_parser("counterexample", help="conditional drift of the 1-D mixture")
    p.add_argument("--eps0", type=float, required=True)
    p.add_argument("--eps1", type=float, required=True)
    p.add_argument("--kmax", type=int, default=12)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("chain", help="chain inspection commands")
    chain_sub = p.add_subparsers(dest="chain_command", required=True)
    pd = chain_sub.add_parser("dump", help="emit kernel rows and the fuzzy chain")
    add_common(pd)
    pd.set_defaults(func=cmd_chain_dump)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, UnsupportedDegree, UnsupportedPeriod) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (Diverged, MaxIterations, NonSummable) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except GGMError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def console_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_entry()

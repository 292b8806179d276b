"""Command line front end: ``ellreg {fit,risk,sweep,verify}``.

Matrices are read from headerless numeric CSV files (``--header`` skips one
row). Output is CSV (floats with 17 significant digits) or JSON.
"""

from __future__ import annotations

import argparse
import csv
import importlib
import io
import json
import sys
import warnings

import numpy as np

from . import estimators as est
from .errors import EllRegError
from .model import EllipticalSpec, LinearRestriction, RegressionProblem, validate_problem
from .montecarlo import MCConfig, beta_for_delta, empirical_risk, sweep
from .risk import ESTIMATORS, RiskConfig, default_grid, risk_all

SWEEP_COLUMNS = (
    ["delta_star2"]
    + [f"analytic_{e}" for e in ESTIMATORS]
    + [f"empirical_{e}" for e in ESTIMATORS]
    + [f"se_{e}" for e in ESTIMATORS]
    + ["stein_le_gls", "prs_le_stein", "analytic_matches_empirical"]
)
LONG_COLUMNS = ["section", "name", "index", "value"]
UNSUPPORTED = "unsupported (q >= 3)"


class InputError(EllRegError):
    pass


def read_csv_matrix(path, header=False):
    """Numeric CSV as a 2-d array; errors name the offending row and column."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    if header:
        rows = rows[1:]
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError(f"{path}: no data rows")
    width = len(rows[0])
    out = np.empty((len(rows), width))
    first = 2 if header else 1
    for i, row in enumerate(rows):
        if len(row) != width:
            raise InputError(f"{path}: row {i + first} has {len(row)} columns, expected {width}")
        for j, cell in enumerate(row):
            try:
                out[i, j] = float(cell)
            except ValueError:
                raise InputError(
                    f"{path}: row {i + first}, column {j + 1}: cannot parse {cell!r} as a number"
                ) from None
    return out


def _fmt(x):
    if x is None:
        return UNSUPPORTED
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [float(v) for v in x]
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if x is None:
        return UNSUPPORTED
    return x


def _write_rows(rows, columns, out):
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) if c in row else "" for c in columns])


def _long_rows(section, mapping):
    rows = []
    for name, value in mapping.items():
        if isinstance(value, np.ndarray):
            for i, v in enumerate(value):
                rows.append({"section": section, "name": name, "index": i, "value": v})
        else:
            rows.append({"section": section, "name": name, "index": "", "value": value})
    return rows


def _load_callable(ref):
    module, _, attr = ref.partition(":")
    if not attr:
        raise InputError(f"expected MODULE:NAME, got {ref!r}")
    return getattr(importlib.import_module(module), attr)


def build_spec(args):
    if args.family == "normal":
        return EllipticalSpec.normal(args.sigma2)
    if args.family == "t":
        if args.gamma is None:
            raise InputError("--family t requires --gamma")
        return EllipticalSpec.student_t(args.gamma, args.sigma2)
    if not args.mixing:
        raise InputError("--family custom requires --mixing MODULE:FUNC")
    sampler = _load_callable(args.mixing_sampler) if args.mixing_sampler else None
    return EllipticalSpec.custom(
        _load_callable(args.mixing), args.sigma2, is_signed=args.signed, sampler=sampler
    )


def default_design(seed=20240101, n=30, p=6, q=4):
    """Built-in design used by ``verify`` when no data is supplied.

    AR(1) scatter with correlation 0.5 and ``H`` restricting the first q
    coefficients (with a mixing column) to fixed values.
    """
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    idx = np.arange(n)
    V = 0.5 ** np.abs(idx[:, None] - idx[None, :])
    H = np.hstack([np.eye(q), np.zeros((q, p - q))])
    H[:, q] = 0.25
    h = np.linspace(0.5, -0.5, q)
    return RegressionProblem(X, V), LinearRestriction(H, h)


def load_problem(args, need_y=False):
    if args.x is None:
        if need_y:
            raise InputError("--x and --y are required")
        return default_design()
    X = read_csv_matrix(args.x, args.header)
    if args.v in (None, "identity"):
        V = None
    else:
        V = read_csv_matrix(args.v, args.header)
    y = None
    if args.y is not None:
        y = read_csv_matrix(args.y, args.header)
        if y.shape[1] != 1:
            raise InputError(f"{args.y}: response must have one column, got {y.shape[1]}")
        y = y[:, 0]
    elif need_y:
        raise InputError("--y is required")
    if args.h_matrix is None or args.h_vector is None:
        raise InputError("--h-matrix and --h-vector are required with --x")
    H = read_csv_matrix(args.h_matrix, args.header)
    h = read_csv_matrix(args.h_vector, args.header).ravel()
    problem, restriction = RegressionProblem(X, V, y), LinearRestriction(H, h)
    validate_problem(problem, restriction)
    return problem, restriction


def weight_matrix(args, problem):
    choice = args.weight
    if choice is None or choice.lower() == "c":
        return None
    if choice.lower() == "identity":
        return np.eye(problem.p)
    return read_csv_matrix(choice, args.header)


def _beta_true(args, problem, restriction, spec):
    if args.beta is not None:
        return read_csv_matrix(args.beta, args.header).ravel()
    return beta_for_delta(problem, restriction, spec, args.delta2)


def _parse_grid(text):
    if text is None or text == "default":
        return default_grid()
    try:
        return np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError:
        raise InputError(f"--grid must be comma-separated numbers or 'default', got {text!r}") from None


def cmd_fit(args, out):
    problem, restriction = load_problem(args, need_y=True)
    bundle = est.fit_all(problem, restriction, alpha=args.alpha, on_degenerate="prse")
    estimates = {
        "beta_gls": bundle.beta_gls,
        "beta_restricted": bundle.beta_restricted,
        "beta_pt": bundle.beta_pt,
        "beta_s": bundle.beta_s,
        "beta_prs": bundle.beta_prs,
    }
    scalars = {
        "s2": bundle.s2,
        "s_star2": bundle.s_star2,
        "L_n": bundle.L_n,
        "F_alpha": bundle.F_alpha,
        "alpha": bundle.alpha,
        "d": bundle.d,
        "m": bundle.m,
        "q": bundle.q,
    }
    groups = ["=".join(g) for g in bundle.coinciding()]
    if args.format == "json":
        json.dump(
            _jsonable({"estimates": estimates, "statistics": scalars, "coinciding": groups,
                       "notes": list(bundle.notes)}),
            out, indent=2,
        )
        out.write("\n")
    else:
        rows = _long_rows("estimate", estimates) + _long_rows("statistic", scalars)
        rows += [{"section": "coinciding", "name": g, "index": "", "value": ""} for g in groups]
        rows += [{"section": "note", "name": n, "index": "", "value": ""} for n in bundle.notes]
        _write_rows(rows, LONG_COLUMNS, out)
    return 0


def cmd_risk(args, out):
    problem, restriction = load_problem(args, need_y=args.plugin_s2)
    spec = build_spec(args)
    if args.plugin_s2:
        b = est.fit_gls(problem)
        s2_hat = est.s2(problem, b)
        spec = EllipticalSpec(spec.family, s2_hat / spec.psi_factor, spec.gamma, spec.weight,
                              spec.is_signed, spec.sampler)
    beta = _beta_true(args, problem, restriction, spec)
    config = RiskConfig(problem, restriction, spec, beta, W=weight_matrix(args, problem), alpha=args.alpha)
    report = risk_all(config)
    meta = {
        "delta_star2": report.delta_star2,
        "sigma2_eps": spec.sigma2_eps,
        "tr_A11": report.tr_A11,
        "eta1_A11_eta1": report.eta1_A11_eta1,
        "ch_min_A11": report.ch_min,
        "ch_max_A11": report.ch_max,
        "F_alpha": config.F_alpha,
        "d": config.shrink,
        "sigma2_plugin": bool(args.plugin_s2),
    }
    if args.format == "json":
        json.dump(_jsonable({"meta": meta, "risks": report.risks, "biases": report.biases,
                             "thresholds": report.thresholds}), out, indent=2)
        out.write("\n")
    else:
        rows = _long_rows("meta", meta) + _long_rows("risk", report.risks)
        rows += _long_rows("bias", report.biases) + _long_rows("threshold", report.thresholds)
        _write_rows(rows, LONG_COLUMNS, out)
    return 0


def _mc_config(args, problem, restriction, spec, beta, reps):
    return MCConfig(problem, restriction, beta, spec, replications=max(reps, 1), seed=args.seed,
                    W=weight_matrix(args, problem), alpha=args.alpha)


def cmd_sweep(args, out):
    problem, restriction = load_problem(args)
    spec = build_spec(args)
    grid = _parse_grid(args.grid)
    base = beta_for_delta(problem, restriction, spec, 0.0)
    cfg = _mc_config(args, problem, restriction, spec, base, args.reps)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rows = sweep(cfg, grid, simulate=args.reps > 0)
    if args.format == "json":
        json.dump(_jsonable({"columns": SWEEP_COLUMNS, "rows": rows}), out, indent=2)
        out.write("\n")
    else:
        _write_rows(rows, SWEEP_COLUMNS, out)
    return 0


def run_verify(problem, restriction, spec, reps, seed, alpha=0.05, W=None):
    """MC-vs-analytic agreement and the dominance checks; returns (name, passed, detail)."""
    results = []
    base = MCConfig(problem, restriction, beta_for_delta(problem, restriction, spec, 0.0), spec,
                    replications=reps, seed=seed, W=W, alpha=alpha)
    for row in sweep(base, [0.0, 1.0, 2.0, 5.0, 10.0]):
        worst = max(
            abs(row[f"analytic_{e}"] - row[f"empirical_{e}"]) / row[f"se_{e}"]
            for e in ESTIMATORS
            if row[f"analytic_{e}"] is not None
        )
        results.append((f"mc_agreement_delta2={row['delta_star2']:g}",
                        row["analytic_matches_empirical"], f"max |z| = {worst:.3f}"))
    analytic = sweep(base, default_grid(), simulate=False)
    if restriction.q >= 3:
        results.append(("stein_le_gls_analytic", all(r["stein_le_gls"] for r in analytic),
                        f"{len(analytic)} grid points"))
        results.append(("prs_le_stein_analytic", all(r["prs_le_stein"] for r in analytic),
                        f"{len(analytic)} grid points"))
        null = MCConfig(problem, restriction, beta_for_delta(problem, restriction, spec, 0.0), spec,
                        replications=reps, seed=seed + 1, W=W, alpha=alpha)
        mc = empirical_risk(null)
        order = ["restricted", "prs", "stein", "gls"]
        results.append(("h0_order_restricted_prs_stein_gls", mc.ordering_holds(order),
                        " <= ".join(f"{mc.risk[e]:.4f}" for e in order)))
    return results


def cmd_verify(args, out):
    problem, restriction = load_problem(args)
    spec = build_spec(args)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        results = run_verify(problem, restriction, spec, args.reps, args.seed, args.alpha,
                             weight_matrix(args, problem))
    rows = [{"check": n, "passed": ok, "detail": d} for n, ok, d in results]
    if args.format == "json":
        json.dump(_jsonable({"checks": rows}), out, indent=2)
        out.write("\n")
    else:
        _write_rows(rows, ["check", "passed", "detail"], out)
    return 0 if all(ok for _, ok, _ in results) else 1


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--y", help="response CSV (one column)")
    common.add_argument("--x", help="design matrix CSV (n rows, p columns)")
    common.add_argument("--v", default="identity", help="scatter matrix CSV or 'identity'")
    common.add_argument("--h-matrix", dest="h_matrix", help="restriction matrix H CSV (q x p)")
    common.add_argument("--h-vector", dest="h_vector", help="restriction vector h CSV")
    common.add_argument("--header", action="store_true", help="skip one header row in every CSV")
    common.add_argument("--family", choices=["normal", "t", "custom"], default="normal")
    common.add_argument("--gamma", type=float, help="Student-t degrees of freedom")
    common.add_argument("--sigma2", type=float, default=1.0)
    common.add_argument("--mixing", help="custom mixing weight as MODULE:FUNC")
    common.add_argument("--mixing-sampler", dest="mixing_sampler",
                        help="sampler(rng, size) for the custom mixing variable, MODULE:FUNC")
    common.add_argument("--signed", action="store_true", help="custom weight is a signed measure")
    common.add_argument("--alpha", type=float, default=est.DEFAULT_ALPHA)
    common.add_argument("--weight", default="c", help="risk weight: identity, c, or a CSV path")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--seed", type=int, default=12345)

    parser = argparse.ArgumentParser(prog="ellreg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fit", parents=[common], help="fit the five estimators")
    p_risk = sub.add_parser("risk", parents=[common], help="analytic biases, risks and thresholds")
    for p in (p_risk,):
        p.add_argument("--beta", help="true beta CSV (default: ray point at --delta2)")
        p.add_argument("--delta2", type=float, default=0.0, help="target non-centrality")
        p.add_argument("--plugin-s2", dest="plugin_s2", action="store_true",
                       help="approximate: replace sigma2 by S^2 / psi from --y")
    p_sweep = sub.add_parser("sweep", parents=[common], help="analytic and MC risks over a grid")
    p_sweep.add_argument("--grid", default="default", help="comma list or 'default' (42 points)")
    p_sweep.add_argument("--reps", type=int, default=2000, help="replications per point (0: analytic only)")
    p_verify = sub.add_parser("verify", parents=[common], help="run the MC-vs-analytic checks")
    p_verify.add_argument("--reps", type=int, default=20000)
    return parser


COMMANDS = {"fit": cmd_fit, "risk": cmd_risk, "sweep": cmd_sweep, "verify": cmd_verify}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    buffer = io.StringIO()
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            code = COMMANDS[args.command](args, buffer)
    except (EllRegError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out.write(buffer.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Thin orchestration over the library: every subcommand loads data (or a
config), calls the corresponding library operation, and serializes the
result as JSON (single reports) or CSV (tables).  All outputs carry the
seed and package version for replay.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from importlib.metadata import version as _pkg_version

from . import data as data_mod
from . import gof as gof_mod
from .families import IncubationFamily, MixtureModel
from .likelihood import fit_full, fit_null
from .lrt import (
    DEFAULT_PVALUE_DRAWS,
    DEFAULT_TABLE_DRAWS,
    asymptotic_constants,
    critical_values,
    local_power,
    lrt_test,
    sample_null_limit,
)
from .simulate import SimConfig, power_table, qq_data, type1_table


def _version() -> str:
    try:
        return _pkg_version("fwdmix")
    except Exception:
        return "unknown"


def _load_sample(args):
    counts = data_mod.load_counts(args.data)
    if args.impute == "jitter":
        return data_mod.impute_jitter(counts, args.seed)
    if args.impute == "midpoint":
        return data_mod.impute_midpoint(counts)
    raise ValueError(f"unknown imputation scheme {args.impute!r}")


def _emit_json(payload: dict, out_path: str | None):
    payload["version"] = _version()
    text = json.dumps(payload, indent=2)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _emit_csv(rows: list[dict], out_path: str | None):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()))
    writer.writeheader()
    writer.writerows(rows)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _cmd_fit(args):
    sample = _load_sample(args)
    null_fit = fit_null(sample, args.family) if args.family != "lognormal" else None
    full_fit = fit_full(sample, args.family)
    payload = {
        "family": args.family,
        "n": sample.n,
        "impute": args.impute,
        "seed": args.seed,
        "full_fit": full_fit.to_dict(),
    }
    if null_fit is not None:
        payload["null_fit"] = null_fit.to_dict()
    _emit_json(payload, args.out)


def _cmd_test(args):
    sample = _load_sample(args)
    report = lrt_test(sample, args.family, draws=args.mc_draws, seed=args.seed)
    payload = {"family": args.family, "n": sample.n, "impute": args.impute}
    payload.update(report.to_dict())
    _emit_json(payload, args.out)


def _cmd_gof(args):
    sample = _load_sample(args)
    fit = fit_full(sample, args.family)
    model = MixtureModel(IncubationFamily(args.family, fit.lam, fit.alpha), fit.p)
    report = gof_mod.gof_test(sample, model)
    payload = {
        "family": args.family,
        "n": sample.n,
        "impute": args.impute,
        "seed": args.seed,
        "fit": fit.to_dict(),
    }
    payload.update(report.to_dict())
    _emit_json(payload, args.out)


def _cmd_nulldist(args):
    constants = asymptotic_constants(args.family)
    draws = sample_null_limit(constants, args.mc_draws, args.seed)
    cvs = critical_values(draws, args.levels)
    rows = [
        {
            "level": level,
            "quantile": cvs[level],
            "M": args.mc_draws,
            "seed": args.seed,
            "family": args.family,
        }
        for level in args.levels
    ]
    _emit_csv(rows, args.out)


def _cmd_power(args):
    constants = asymptotic_constants(args.family)
    power = local_power(
        args.delta, args.p0, constants, level=args.level,
        draws=args.mc_draws, seed=args.seed,
    )
    _emit_json(
        {
            "family": args.family,
            "delta": args.delta,
            "p0": args.p0,
            "level": args.level,
            "mc_draws": args.mc_draws,
            "seed": args.seed,
            "power": power,
        },
        args.out,
    )


def _cmd_simulate(args):
    lam, alpha, p = args.truth
    config = SimConfig(
        kind=args.family,
        lam=lam,
        alpha=alpha,
        p=p,
        n=args.n,
        replicates=args.reps,
        levels=tuple(args.levels),
        seed=args.seed,
    )
    table = type1_table(config) if args.mode == "type1" else power_table(config)
    _emit_csv(table.to_rows(), args.out)
    if args.qq_out:
        pairs = qq_data(config, statistics=table.statistics)
        rows = [{"empirical": e, "limit": l} for e, l in pairs]
        _emit_csv(rows, args.qq_out)


def _cmd_analyze(args):
    counts = data_mod.load_counts(args.data)
    summary = data_mod.replicate_analysis(
        counts, kind=args.family, reps=args.reps, seed=args.seed
    )
    summary.pop("statistics", None)
    summary.pop("p_values", None)
    _emit_json({"family": args.family, "n": counts.n, **summary}, args.out)


def _levels(text):
    out = [float(x) for x in text.split(",") if x]
    if not out or any(not 0 < lv < 1 for lv in out):
        raise argparse.ArgumentTypeError("levels must lie in (0, 1)")
    return out


def _truth(text):
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("truth must be 'lam,alpha,p'")
    return parts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fwdmix",
        description="Forward/incubation-time mixture model: fitting, "
        "exponential-homogeneity LRT, goodness of fit, simulations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data_flags(p, families=("weibull", "gamma", "lognormal")):
        p.add_argument("--data", required=True, help="day,count CSV or JSON file")
        p.add_argument("--family", choices=families, default="weibull")
        p.add_argument("--impute", choices=["jitter", "midpoint"], default="midpoint")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="write output to a file")

    p = sub.add_parser("fit", help="maximum-likelihood fit")
    add_data_flags(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("test", help="LRT of exponential homogeneity")
    add_data_flags(p, families=("weibull", "gamma"))
    p.add_argument("--mc-draws", type=int, default=DEFAULT_PVALUE_DRAWS)
    p.set_defaults(func=_cmd_test)

    p = sub.add_parser("gof", help="chi-square goodness of fit")
    add_data_flags(p)
    p.set_defaults(func=_cmd_gof)

    p = sub.add_parser("nulldist", help="critical-value table of the LRT limit")
    p.add_argument("--family", choices=["weibull", "gamma"], default="weibull")
    p.add_argument("--levels", type=_levels, default=[0.10, 0.05, 0.01])
    p.add_argument("--mc-draws", type=int, default=DEFAULT_TABLE_DRAWS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_nulldist)

    p = sub.add_parser("power", help="asymptotic local power")
    p.add_argument("--family", choices=["weibull", "gamma"], default="weibull")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--p0", type=float, required=True)
    p.add_argument("--level", type=float, default=0.05)
    p.add_argument("--mc-draws", type=int, default=10**5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_power)

    p = sub.add_parser("simulate", help="finite-sample size/power study")
    p.add_argument("--mode", choices=["type1", "power"], required=True)
    p.add_argument("--family", choices=["weibull", "gamma"], default="weibull")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--truth", type=_truth, required=True, help="lam,alpha,p")
    p.add_argument("--levels", type=_levels, default=[0.10, 0.05, 0.01])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--qq-out", default=None, help="also write Q-Q pairs as CSV")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("analyze", help="repeated jitter-imputation analysis")
    p.add_argument("--data", required=True)
    p.add_argument("--family", choices=["weibull", "gamma"], default="weibull")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_analyze)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:
        json.dump(
            {"error": type(exc).__name__, "message": str(exc)},
            sys.stderr,
        )
        sys.stderr.write("\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

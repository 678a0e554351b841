"""Command-line entry point: ``mte <command> ...``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import chain, empirics, omega, primes, ptm, reproduce, tails
from .reproduce import DEFAULT_SEED, task_rng

OUTPUT_DIR_ENV = "MTE_OUTPUT_DIR"


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(args, text: str, path: str | Path | None = None) -> None:
    path = path if path is not None else args.out
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_table(args, header, rows, summary: dict | None = None) -> None:
    """CSV by default; ``--format json`` emits rows (and summary) as JSON."""
    if args.format == "json":
        doc = {"columns": list(header), "rows": [list(r) for r in rows]}
        if summary is not None:
            doc["summary"] = summary
        _emit(args, _dumps(doc))
    else:
        _emit(args, _csv_text(header, rows))


def _default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "mte-output"))


# -- omega -----------------------------------------------------------------


def cmd_omega(args) -> int:
    if args.action == "encode":
        _emit(args, "".join(omega.omega_encode(int(v)) + "\n" for v in args.values))
    elif args.action == "decode":
        lines = []
        for bits in args.values:
            n, used = omega.omega_decode(bits)
            lines.append(f"{n} {used}\n")
        _emit(args, "".join(lines))
    else:
        _emit(args, "".join(f"{omega.omega_len(int(v))}\n" for v in args.values))
    return 0


# -- prior -----------------------------------------------------------------


def _prior_from_args(args) -> primes.PrimePrior:
    if getattr(args, "prior", None):
        return primes.load_prior(args.prior)
    return primes.build_prior(args.beta, args.pmax)


def cmd_prior(args) -> int:
    if args.action == "build":
        _emit(args, json.dumps(primes.build_prior(args.beta, args.pmax).to_dict()) + "\n")
    elif args.action == "moments":
        prior = _prior_from_args(args)
        m = primes.moments(prior)
        doc = {
            "beta": prior.beta,
            "p_max": prior.p_max,
            "mean_log2_P": m.mean_log2_P,
            "mean_len_P": m.mean_len_P,
            "mean_ln_P": m.mean_ln_P,
            "log_norm": prior.log_norm,
            "truncation_bias": primes.truncation_bias(prior),
        }
        if args.format == "csv":
            _emit(args, _csv_text(list(doc), [list(doc.values())]))
        else:
            _emit(args, _dumps(doc))
    elif args.action == "tails":
        prior = _prior_from_args(args)
        ys = np.unique(np.logspace(0, math.log10(prior.p_max), args.points).round())
        _emit_table(args, ["y", "tail_mass"], [(float(y), primes.tail_mass(prior, y)) for y in ys])
    else:
        cutoffs = sorted(int(float(c)) for c in args.cutoffs)
        vals = primes.divergence_diagnostic(args.beta, cutoffs)
        _emit_table(args, ["cutoff", "mean_ln_P"], list(zip(cutoffs, vals)))
    return 0


# -- ptm -------------------------------------------------------------------


def _params(args) -> ptm.PtmParams:
    return ptm.PtmParams(args.p0, args.p1, args.ps)


def _ensemble(args) -> ptm.Ensemble:
    comps = [ptm.PtmParams(*(float(v) for v in c.split(","))) for c in args.component]
    weights = args.weight or [1.0 / len(comps)] * len(comps)
    return ptm.Ensemble(tuple(comps), tuple(weights))


def cmd_ptm(args) -> int:
    if args.action == "sample":
        params = _params(args)
        rng = task_rng(args.seed, 10)
        rows = []
        for i in range(args.n):
            if args.filtered:
                p = ptm.sample_prime_filtered(params, rng)
                rows.append((args.seed, i, format(p, "b"), p))
            else:
                bits = ptm.ptm_run(params, rng)
                rows.append((args.seed, i, bits, ptm.bin_value(bits)))
        _emit_table(args, ["seed", "index", "bits", "value"], rows)
    elif args.action == "law":
        law = ptm.prime_conditional_exact(_params(args), args.pmax)
        _emit_table(
            args,
            ["prime", "mass"],
            list(zip(law.primes.tolist(), law.masses.tolist())),
            summary={"remainder_bound": law.remainder},
        )
    else:
        ens = _ensemble(args)
        draws = ptm.ensemble_sample(ens, args.mode, task_rng(args.seed, 11), size=args.n)
        mix = ptm.mixture_law(ens, args.pmax)
        latent = ptm.latent_choice_law(ens, args.pmax)
        values, counts = np.unique(np.array([int(d) for d in draws]), return_counts=True)
        freq = dict(zip(values.tolist(), (counts / args.n).tolist()))
        keep = sorted(set(freq) | {int(p) for p, m in zip(mix.primes, mix.masses) if m >= 1e-4})
        rows = [(p, freq.get(p, 0.0), mix.mass(p), latent.mass(p)) for p in keep]
        _emit_table(
            args,
            ["prime", "empirical", "mixture_law", "latent_choice_law"],
            rows,
            summary={"mode": args.mode, "n": args.n, "seed": args.seed},
        )
    return 0


# -- simulate --------------------------------------------------------------


def cmd_simulate(args) -> int:
    prior = _prior_from_args(args)
    trajs = chain.simulate_many(prior, args.steps, args.seed, args.seeds, args.thin, args.workers)
    rows = [(traj.seed, *row) for traj in trajs for row in traj.rows()]
    _emit_table(
        args,
        ["seed", "t", "prime", "log2_X", "len_X"],
        rows,
        summary={"master_seed": args.seed, "prior": prior.prior_id},
    )
    return 0


# -- tails -----------------------------------------------------------------


def _tails_summary(prior, samples, exact, support, seed) -> dict:
    band = tails.dkw_check(samples, exact, support)
    ccdf = tails.empirical_ccdf(samples)
    lo, hi = tails.default_window(exact, len(samples), float(np.max(support)))
    try:
        slope = tails.loglog_slope(ccdf, lo, hi, slow_beta=prior.beta)
    except tails.FitError:
        slope = None
    positive = samples[samples > 0]
    return {
        "seed": seed,
        "n": int(len(samples)),
        "slope": slope,
        "window": [lo, hi],
        "hill_index": tails.hill_estimator(positive, tails.default_hill_k(len(positive))),
        "dkw_violations": band.violations,
        "dkw_epsilon": band.epsilon,
        "max_deviation": band.max_deviation,
    }


def cmd_tails(args) -> int:
    prior = _prior_from_args(args)
    rng = task_rng(args.seed, 12)
    if args.action == "conditional":
        samples = chain.gap_samples(prior, args.x, args.n, rng).astype(np.float64)

        def exact(u):
            return tails.conditional_gap_tail_exact(prior, args.x, u)

        support = tails.gap_support(prior, args.x)
    else:
        nu = tails.MixingMeasure.from_dict(json.loads(Path(args.nu).read_text()))
        xs = nu.sample(rng, args.n)
        samples = xs * (primes.sample_prime(prior, rng, size=args.n) - 1)

        def exact(u):
            return tails.mixture_gap_tail(prior, nu, u)

        support = np.concatenate([tails.gap_support(prior, x) for x, _ in nu.atoms])
    summary = _tails_summary(prior, samples, exact, support, args.seed)
    ccdf = tails.empirical_ccdf(samples)
    grid = np.unique(np.logspace(0, math.log10(float(support.max())), args.points))
    rows = [(float(u), ccdf(u), float(exact(u))) for u in grid]
    if args.out:
        _emit(args, _csv_text(["u", "empirical_survival", "exact_survival"], rows))
        _emit(args, _dumps(summary), Path(str(args.out) + ".summary.json"))
        sys.stdout.write(_dumps(summary))
    else:
        _emit_table(args, ["u", "empirical_survival", "exact_survival"], rows, summary=summary)
    return 0 if summary["dkw_violations"] == 0 else 1


# -- fit -------------------------------------------------------------------


def cmd_fit(args) -> int:
    sizes = empirics.load_sizes(args.input, args.format)
    report = empirics.fit_report(sizes, bits=args.bits, weighted=args.weighted)
    report["input_format"] = args.format
    if not (report["kl_scaled"] < report["kl_uniform"] < report["kl_pure"]):
        logging.warning("KL ordering scaled < uniform < pure not reproduced on this input")
    if not report["a_below_ln2"]:
        logging.warning("fitted a is not below ln 2")
    _emit(args, _dumps(report))
    if args.csv:
        hist = empirics.codelength_histogram(sizes.values)
        fit = empirics.fit_scaled(hist, weighted=args.weighted)
        _emit(args, _csv_text(["ell", "P_obs", "P_uniform", "P_pure", "P_scaled"], empirics.model_table(hist, fit)), args.csv)
    return 0


# -- reproduce -------------------------------------------------------------


def cmd_reproduce(args) -> int:
    result = reproduce.SUITES[args.suite](seed=args.seed)
    out = Path(args.out) if args.out else _default_output_dir() / args.suite
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(_dumps(result.as_dict()))
    for name, (header, rows) in result.tables.items():
        (out / name).write_text(_csv_text(header, rows))
    for c in result.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}")
    if not result.passed:
        print("failed checks: " + ", ".join(c.name for c in result.checks if not c.passed), file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master random seed")
    common.add_argument("--out", help="output path (stdout when omitted)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    parser = argparse.ArgumentParser(prog="mte", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("omega", help="Elias omega codec")
    osub = p.add_subparsers(dest="action", required=True)
    for action, what in (("encode", "decimal integers"), ("decode", "bit strings"), ("len", "decimal integers")):
        q = osub.add_parser(action, parents=[common])
        q.add_argument("values", nargs="+", help=what)
    p.set_defaults(func=cmd_omega)

    p = sub.add_parser("prior", help="Gibbs priors on primes")
    psub = p.add_subparsers(dest="action", required=True)
    for action in ("build", "moments", "tails"):
        q = psub.add_parser(action, parents=[common])
        q.add_argument("--beta", type=float, default=2.0)
        q.add_argument("--pmax", type=int, default=primes.DEFAULT_P_MAX)
        if action != "build":
            q.add_argument("--prior", help="prior JSON (overrides --beta/--pmax)")
        if action == "tails":
            q.add_argument("--points", type=int, default=200)
    q = psub.add_parser("divergence", parents=[common])
    q.add_argument("--beta", type=float, default=1.0)
    q.add_argument("--cutoffs", nargs="+", default=["1e3", "1e4", "1e5", "1e6"])
    p.set_defaults(func=cmd_prior)

    p = sub.add_parser("ptm", help="probabilistic emitters and ensembles")
    tsub = p.add_subparsers(dest="action", required=True)
    for action in ("sample", "law"):
        q = tsub.add_parser(action, parents=[common])
        q.add_argument("--p0", type=float, default=0.45)
        q.add_argument("--p1", type=float, default=0.45)
        q.add_argument("--ps", type=float, default=0.1)
        if action == "sample":
            q.add_argument("--n", type=int, default=10)
            q.add_argument("--filtered", action="store_true", help="condition each run on a prime output")
        else:
            q.add_argument("--pmax", type=int, default=1 << 20)
    q = tsub.add_parser("equiv", parents=[common])
    q.add_argument("--mode", choices=("A", "B", "C"), required=True)
    q.add_argument("--component", action="append", default=None, help="p0,p1,pS (repeatable)")
    q.add_argument("--weight", action="append", type=float, help="component weight (repeatable)")
    q.add_argument("--n", type=int, default=10_000)
    q.add_argument("--pmax", type=int, default=1 << 20)
    p.set_defaults(func=cmd_ptm)

    p = sub.add_parser("simulate", parents=[common], help="multiplicative chain trajectories")
    p.add_argument("--prior", help="prior JSON")
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--pmax", type=int, default=primes.DEFAULT_P_MAX)
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--thin", type=int, default=chain.DEFAULT_THIN)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tails", help="gap tails against exact oracles")
    gsub = p.add_subparsers(dest="action", required=True)
    for action in ("conditional", "mixture"):
        q = gsub.add_parser(action, parents=[common])
        q.add_argument("--prior", help="prior JSON")
        q.add_argument("--beta", type=float, default=2.0)
        q.add_argument("--pmax", type=int, default=primes.DEFAULT_P_MAX)
        q.add_argument("--n", type=int, default=10**5)
        q.add_argument("--points", type=int, default=100)
        if action == "conditional":
            q.add_argument("--x", type=int, default=1)
        else:
            q.add_argument("--nu", required=True, help='JSON {"atoms": [{"x": .., "weight": ..}, ...]}')
    p.set_defaults(func=cmd_tails)

    p = sub.add_parser("fit", help="codelength histogram model fits")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("plain", "debian", "pypi"), default="plain", help="input format")
    p.add_argument("--out", help="report JSON path (stdout when omitted)")
    p.add_argument("--csv", help="also write (ell, P_obs, P_uniform, P_pure, P_scaled) here")
    p.add_argument("--bits", action="store_true", help="report a, c, KL in bits")
    p.add_argument("--weighted", action="store_true", help="count-weighted least squares")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("reproduce", parents=[common], help="run a fixed-seed experiment suite")
    p.add_argument("suite", choices=sorted(reproduce.SUITES))
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if getattr(args, "command", None) == "ptm" and getattr(args, "action", None) == "equiv" and not args.component:
        args.component = ["0.45,0.45,0.1", "0.3,0.5,0.2"]
    try:
        return args.func(args)
    except (ValueError, OSError, ptm.PtmAbort) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

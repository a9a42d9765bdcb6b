"""Command line front end.

Subcommands:

* ``generate``  materialize a planted instance directory from a spec
* ``complete``  one sampled recovery, dense factors plus a metrics row
* ``sweep``     (rate, seed) grid into sweep.csv and a timing sidecar
* ``nsi``       noisy subspace iteration traces, one csv per seed
* ``report``    render figures from previously written tables

Exit codes: 0 success, 1 usage or malformed input, 2 numerical rank or
spectral-gap failure, 3 instance generation infeasible.
"""

import argparse
import os
import sys
from dataclasses import replace

from ._rng import derive_rng, derive_seed
from .completion import reconstruct_and_score, salt_ls
from .errors import (
    CoherenceUnachievable,
    GapUndefined,
    InvalidProbability,
    InvalidSplit,
    NoiseInfeasible,
    RankDeficient,
    RankFailure,
    UsageError,
    ZeroInput,
)
from .experiment import (
    load_experiment_spec,
    parse_noise_model,
    resolve_config,
    run_nsi_cell,
    run_sweep,
    success_rates,
    write_sweep_csv,
    write_timing_csv,
)
from .generators import InstanceSpec, generate_instance, load_instance, save_instance
from .sampling import bernoulli_sample
from .textio import FLOAT_FMT, read_config, write_dense_matrix

METRICS_HEADER = "p,seed,subspace_err,subspace_err_last,frob_abs_err,frob_rel_err,success"


class _Parser(argparse.ArgumentParser):
    """Argparse that reports usage problems through our exit path."""

    def error(self, message):
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="saltls", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", metavar="command")

    p_gen = sub.add_parser("generate", help="materialize a planted instance")
    p_gen.add_argument("--spec", required=True, help="instance spec config file")
    p_gen.add_argument("--out", required=True, help="output directory")

    p_com = sub.add_parser("complete", help="recover one sampled instance")
    p_com.add_argument("--instance", required=True, help="instance directory")
    p_com.add_argument("--p", required=True, type=float, help="sampling rate")
    p_com.add_argument("--seed", required=True, type=int, help="cell seed")
    p_com.add_argument("--config", help="optional algo.* override config")
    p_com.add_argument("--out", required=True, help="output directory")

    p_swp = sub.add_parser("sweep", help="run a (rate, seed) grid")
    p_swp.add_argument("--spec", required=True, help="sweep spec config file")
    p_swp.add_argument("--out", required=True, help="output directory")
    p_swp.add_argument("--jobs", type=int, default=1, help="worker processes")

    p_nsi = sub.add_parser("nsi", help="noisy subspace iteration traces")
    p_nsi.add_argument("--config", required=True, help="nsi config file")
    p_nsi.add_argument("--out", required=True, help="output directory")

    p_rep = sub.add_parser("report", help="render figures from result tables")
    p_rep.add_argument("--results", required=True, help="directory holding result csvs")
    p_rep.add_argument("--out", help="figure directory (default: results dir)")

    return parser


def _algo_kwargs(path):
    """algo.* keys of a config file as resolve_config keyword overrides."""
    cfg = read_config(path)
    casts = {
        "eps": float,
        "c_mu": float,
        "c_L": float,
        "L": int,
        "mu": float,
        "t_median": int,
        "mu_init": float,
        "init_iters": int,
    }
    out = {}
    for key, cast in casts.items():
        raw = cfg.get("algo." + key)
        if raw is not None:
            try:
                out[key] = cast(raw)
            except ValueError as exc:
                raise UsageError(f"bad algo.{key} = {raw!r}") from exc
    return out


def cmd_generate(args):
    spec = InstanceSpec.from_config(read_config(args.spec))
    truth = generate_instance(spec)
    save_instance(args.out, spec, truth)
    print(f"instance n={truth.n} k={truth.k} mu_u={truth.mu_u:.4f} "
          f"gamma_k={truth.gamma_k:.4f} written to {args.out}")
    return 0


def cmd_complete(args):
    _, truth = load_instance(args.instance)
    overrides = _algo_kwargs(args.config) if args.config else {}
    config = resolve_config(truth, **overrides)

    sample = bernoulli_sample(truth.matrix, args.p, derive_rng(args.seed, "sample"))
    cfg = replace(config, seed=derive_seed(args.seed, "algo"))
    result = salt_ls(sample, cfg, truth=truth)
    scores = reconstruct_and_score(result.x, result.y, truth)
    success = scores.frob_rel_err <= cfg.eps

    os.makedirs(args.out, exist_ok=True)
    write_dense_matrix(os.path.join(args.out, "X.txt"), result.x.data)
    write_dense_matrix(os.path.join(args.out, "Y.txt"), result.y)
    with open(os.path.join(args.out, "metrics.csv"), "w", encoding="utf-8") as fh:
        fh.write(METRICS_HEADER + "\n")
        fh.write(
            "%s,%d,%s,%s,%s,%s,%d\n"
            % (
                FLOAT_FMT % args.p,
                args.seed,
                FLOAT_FMT % scores.subspace_err,
                FLOAT_FMT % truth.vt_norm(result.x_last),
                FLOAT_FMT % scores.frob_abs_err,
                FLOAT_FMT % scores.frob_rel_err,
                int(success),
            )
        )
    print(f"p={args.p} seed={args.seed} rel_err={scores.frob_rel_err:.3e} "
          f"success={int(success)}")
    return 0


def cmd_sweep(args):
    spec = load_experiment_spec(args.spec)
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    results = run_sweep(spec, jobs=args.jobs)
    os.makedirs(args.out, exist_ok=True)
    write_sweep_csv(os.path.join(args.out, "sweep.csv"), results)
    write_timing_csv(os.path.join(args.out, "timing.csv"), results)
    for p, rate in success_rates(results):
        print(f"p={p:g} success={rate:.2f}")
    return 0


def cmd_nsi(args):
    cfg = read_config(args.config)
    instance = InstanceSpec.from_config(cfg, prefix="instance.")
    truth = generate_instance(instance)
    if cfg.get("L") is None or cfg.get("seeds") is None:
        raise UsageError("nsi config needs L and seeds")
    try:
        L = int(cfg["L"])
        seeds_raw = cfg["seeds"]
        if "," in seeds_raw:
            seeds = [int(tok) for tok in seeds_raw.split(",")]
        else:
            seeds = list(range(int(seeds_raw)))
        x0_sin = float(cfg.get("x0_sin", "0.25"))
    except ValueError as exc:
        raise UsageError(f"bad nsi config: {exc}") from exc
    noise = parse_noise_model(cfg.get("noise", "zero"))
    os.makedirs(args.out, exist_ok=True)
    for seed in seeds:
        trace = run_nsi_cell(truth, L, noise, x0_sin, seed)
        trace.write_csv(os.path.join(args.out, f"trace_{seed}.csv"))
        final = trace.records[-1]
        print(f"seed={seed} final_sin={final.sin:.3e} final_tan={final.tan:.3e}")
    return 0


def cmd_report(args):
    from .plots import render_report

    out_dir = args.out if args.out else args.results
    if not os.path.isdir(args.results):
        raise UsageError(f"no such results directory: {args.results}")
    os.makedirs(out_dir, exist_ok=True)
    written = render_report(args.results, out_dir)
    if not written:
        raise UsageError(f"nothing to plot under {args.results}")
    for path in written:
        print(f"wrote {path}")
    return 0


_COMMANDS = {
    "generate": cmd_generate,
    "complete": cmd_complete,
    "sweep": cmd_sweep,
    "nsi": cmd_nsi,
    "report": cmd_report,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing command")
        if args.command == "complete" and not (0.0 < args.p <= 1.0):
            raise UsageError(f"sampling rate must lie in (0, 1], got {args.p}")
        return _COMMANDS[args.command](args)
    except (UsageError, InvalidProbability, InvalidSplit) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RankFailure, RankDeficient, GapUndefined, ZeroInput) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (CoherenceUnachievable, NoiseInfeasible) as exc:
        print(f"infeasible instance: {exc}", file=sys.stderr)
        return 3


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()

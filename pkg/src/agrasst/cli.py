"""Command-line interface.

Exit codes: 0 = ran and did not reject, 2 = rejected (``test``, ``baseline``)
or no batch accepted (``batch``), 1 = error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench
from .archive import ArchiveError, read_archive, write_archive, write_concatenated
from .data import DATASETS, load_dataset
from .estimator import ConditionalEstimate, fit
from .graph import Graph, read_edge_list
from .kernel import parse_kernel
from .models import ErgmSpec
from .sources import BernoulliSource, ErgmSource, SampleStream
from .testing import ALTERNATIVES, BASELINES, resolve_kind, run_agrasst_test, run_baseline, select_batches

EXIT_OK, EXIT_ERROR, EXIT_REJECT = 0, 1, 2
STAT_CHOICES = ("edges", "sumdeg", "cumdeg", "bideg", "d3", "tri")


class CliError(Exception):
    pass


# -- argument helpers ----------------------------------------------------------


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _b_value(text: str):
    return None if str(text).lower() == "full" else int(text)


def parse_model(text: str, n: int):
    """Generator from a model string: ``e2st[:b1,b2,b3]``, ``er:<p>`` or ``edges:<b1>``."""
    kind, _, arg = text.strip().lower().partition(":")
    if kind == "e2st":
        return ErgmSource(ErgmSpec.e2st(n, _floats(arg) if arg else (-2.0, 0.0, 0.01)))
    if kind == "er":
        return BernoulliSource(n, float(arg))
    if kind == "edges":
        return ErgmSource(ErgmSpec.edges_only(n, float(arg)))
    raise CliError(f"cannot parse model {text!r}; use e2st[:b1,b2,b3], er:<p> or edges:<b1>")


def load_graph(ref: str) -> Graph:
    if ref in DATASETS and not Path(ref).exists():
        return load_dataset(ref)
    path = Path(ref)
    if not path.exists():
        raise CliError(f"graph file not found: {ref}")
    return read_edge_list(path)


def _generator(args, n: int):
    if getattr(args, "archive", None):
        return SampleStream(read_archive(args.archive))
    if getattr(args, "model", None):
        return parse_model(args.model, n)
    raise CliError("need --archive or --model as the generator")


def _validate(args):
    alpha = getattr(args, "alpha", None)
    if alpha is not None and not 0.0 < alpha < 1.0:
        raise CliError("--alpha must lie in (0, 1)")
    for name in ("L", "m", "count", "trials", "batch_size", "max_batches"):
        value = getattr(args, name, None)
        if value is not None and value < 1:
            raise CliError(f"--{name.replace('_', '-')} must be at least 1")
    B = getattr(args, "B", None)
    if B is not None and B < 1:
        raise CliError("--B must be at least 1 (or 'full')")


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


# -- commands ------------------------------------------------------------------


def cmd_sample(args) -> int:
    source = parse_model(args.model, args.n)
    if isinstance(source, ErgmSource):
        source = ErgmSource(source.spec, chains=args.chains, burn_in=args.burn_in, thinning=args.thinning)
    graphs = source(args.count, args.seed)
    if args.out is None:
        raise CliError("sample needs --out (archive directory or .txt file)")
    if args.out.endswith(".txt"):
        write_concatenated(graphs, args.out)
    else:
        write_archive(graphs, args.out, generator=f"{args.model} n={args.n}", seed=args.seed)
    print(f"wrote {len(graphs)} graphs to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_estimate(args) -> int:
    graphs = read_archive(args.archive)
    kind, mode = resolve_kind(args.stat)
    est = fit(graphs, kind, mode)
    _emit(est.to_json(), args.out)
    return EXIT_OK


def cmd_test(args) -> int:
    x = load_graph(args.graph)
    estimate = None
    if args.estimate:
        estimate = ConditionalEstimate.from_json(Path(args.estimate).read_text())
    report = run_agrasst_test(
        x, _generator(args, x.n), args.stat, parse_kernel(args.kernel), args.B, args.L, args.m, args.alpha,
        args.seed, estimate=estimate, threads=args.threads, alternative=args.alternative,
    )
    _emit(report.to_json(), args.out)
    print(report.summary(), file=sys.stderr)
    return EXIT_REJECT if report.reject else EXIT_OK


def cmd_batch(args) -> int:
    x = load_graph(args.graph)
    reports = select_batches(
        x, _generator(args, x.n), args.batch_size, args.max_batches, args.threshold, args.stat,
        parse_kernel(args.kernel), args.B, args.L, args.seed,
    )
    _emit("\n".join(json.dumps(r.to_dict()) for r in reports), args.out)
    accepted = any(r.accepted for r in reports)
    print(f"{len(reports)} batch(es) examined; accepted: {accepted}", file=sys.stderr)
    return EXIT_OK if accepted else EXIT_REJECT


def cmd_power(args) -> int:
    kinds = [k.strip() for k in args.stat.split(",") if k.strip()]
    baselines = [b.strip() for b in args.baselines.split(",") if b.strip()] if args.baselines else []
    common = dict(
        trials=args.trials, L=args.L, m=args.m, alpha=args.alpha, kinds=kinds, baselines=baselines,
        kernel=parse_kernel(args.kernel), threads=args.threads, alternative=args.alternative,
        null_spec=ErgmSpec.e2st(args.n),
    )
    if args.sweep:
        B_values = [_b_value(v) for v in args.sweep.split(",")]
        rows = bench.resampling_sweep(B_values, beta2=_floats(args.perturbations)[0], seed=args.seed, **common)
    else:
        rows = bench.power_experiment(perturbations=_floats(args.perturbations), B=args.B, seed=args.seed, **common)
    _emit(bench.to_csv(rows), args.out)
    return EXIT_OK


def cmd_baseline(args) -> int:
    x = load_graph(args.graph)
    names = sorted(BASELINES) if args.name == "all" else [args.name]
    generator = _generator(args, x.n)
    reports = []
    for name in names:
        # an archive is re-read per baseline so each one sees the same samples
        gen = SampleStream(generator.graphs) if isinstance(generator, SampleStream) else generator
        reports.append(run_baseline(name, x, gen, args.L, args.m, args.alpha, args.seed))
    if len(reports) == 1:
        _emit(reports[0].to_json(), args.out)
    else:
        _emit("\n".join(json.dumps(r.to_dict()) for r in reports), args.out)
    for r in reports:
        print(r.summary(), file=sys.stderr)
    return EXIT_REJECT if any(r.reject for r in reports) else EXIT_OK


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="agrasst", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file whose keys mirror the long flags")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, graph=False, generator=False, test=False):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output file (stdout if omitted)")
        p.add_argument("--threads", type=int, default=1, help="worker processes (0 = all cores)")
        if graph:
            p.add_argument("--graph", required=True, help=f"edge-list file or one of {', '.join(DATASETS)}")
        if generator:
            p.add_argument("--archive", help="sample archive directory or '---'-separated file")
            p.add_argument("--model", help="e2st[:b1,b2,b3] | er:<p> | edges:<b1>")
        if test:
            p.add_argument("--stat", default="edges", choices=STAT_CHOICES)
            p.add_argument("--kernel", default="wl:3", help="wl:<h> | gauss:auto | gauss:<sigma2>")
            p.add_argument("--L", type=int, default=1000)
            p.add_argument("--B", type=_b_value, default=200, help="resampled pairs, or 'full'")
            p.add_argument("--alpha", type=float, default=0.05)

    p = sub.add_parser("sample", help="draw graphs from a model into an archive")
    common(p)
    p.add_argument("--model", default="e2st")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--chains", type=int, default=50)
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--thinning", type=int, default=None)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("estimate", help="fit the conditional edge-probability table on an archive")
    common(p)
    p.add_argument("--archive", required=True)
    p.add_argument("--stat", default="edges", choices=STAT_CHOICES)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("test", help="AgraSSt test of a generator against an observed graph")
    common(p, graph=True, generator=True, test=True)
    p.add_argument("--m", type=int, default=200)
    p.add_argument("--estimate", help="pre-fitted estimate JSON (skips fitting)")
    p.add_argument("--alternative", default="greater", choices=ALTERNATIVES)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("batch", help="draw sample batches until one is consistent with the graph")
    common(p, graph=True, generator=True, test=True)
    p.add_argument("--batch-size", type=int, default=50)
    p.add_argument("--max-batches", type=int, default=10)
    p.add_argument("--threshold", type=float, default=0.05)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("power", help="E2ST power experiment, CSV output")
    common(p, test=True)
    p.add_argument("--m", type=int, default=200)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--perturbations", default=",".join(f"{b:g}" for b in bench.DEFAULT_PERTURBATIONS))
    p.add_argument("--baselines", default="", help="comma list of " + ",".join(sorted(BASELINES)))
    p.add_argument("--sweep", help="comma list of B values (or 'full'); uses the first perturbation")
    p.add_argument("--alternative", default="greater", choices=ALTERNATIVES)
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("baseline", help="degree and parameter baseline tests")
    common(p, graph=True, generator=True)
    p.add_argument("--name", default="all", choices=sorted(BASELINES) + ["all"])
    p.add_argument("--L", type=int, default=1000)
    p.add_argument("--m", type=int, default=200)
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_baseline)
    return parser


def _config_defaults(path: str) -> dict:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise CliError("config file must hold a JSON object")
    out = {}
    for key, value in data.items():
        key = key.lstrip("-").replace("-", "_")
        if key == "B":
            value = _b_value(value)
        out[key] = value
    return out


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        defaults = _config_defaults(args.config)
        # explicit flags win over the config file: re-parse with config values as defaults
        for action in parser._subparsers._group_actions:
            action.choices[args.command].set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        _validate(args)
        return args.func(args)
    except (CliError, ArchiveError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

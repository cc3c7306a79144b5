"""Command line front end.

Subcommands: gen (write a trace), analyze (measure a trace), model
(evaluate a closed-form cost), sweep (CSV over a parameter range),
advise (parameter recommendations).

Exit codes: 0 success, 1 usage error, 2 validation or data error.
Every command is deterministic given its flags.  The environment
variable DMC_THREADS caps sweep parallelism.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict

from dmclab import advisor, models, tracegen
from dmclab.core import (
    COLD_POLICIES,
    AnalysisConfig,
    DmcError,
    TraceFormatError,
    ValidationError,
    read_dmt,
    write_dmt,
)
from dmclab.engine import analyze_trace

SWEEP_ACCESS_BUDGET = 10**7

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="dmclab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_gen = sub.add_parser("gen", help="generate a trace file")
    p_gen.add_argument("--alg", required=True, choices=tracegen.ALGORITHMS)
    for flag in ("--m", "--n", "--l", "--k", "--c", "--x", "--h", "--w"):
        p_gen.add_argument(flag, type=int)
    p_gen.add_argument("--out", required=True, help="output .dmt path")

    p_an = sub.add_parser("analyze", help="measure the DMD of a trace")
    p_an.add_argument("trace", help="input .dmt path")
    p_an.add_argument("--oracle", action="store_true", help="use the naive engine")
    p_an.add_argument("--bits", type=int, default=1, help="data granularity s in bits")
    p_an.add_argument("--block", type=int, default=1, help="cache block size b")
    p_an.add_argument("--cold", choices=COLD_POLICIES, default="exclude")
    p_an.add_argument("--report", help="write the JSON report here instead of stdout")

    p_mod = sub.add_parser("model", help="evaluate a closed-form cost model")
    p_mod.add_argument("name", nargs="?", help="model name (see --list)")
    p_mod.add_argument("--list", action="store_true", help="list available models")
    for flag in ("--m", "--n", "--l", "--k", "--c", "--x", "--b", "--d",
                 "--h", "--w", "--heads", "--q", "--layers", "--f"):
        p_mod.add_argument(flag, type=int)

    p_sw = sub.add_parser("sweep", help="evaluate models and/or measurements over ranges")
    p_sw.add_argument("--alg", required=True,
                      choices=tracegen.ALGORITHMS + ("gqa",))
    p_sw.add_argument("--n", help="range: 'a,b,c' or 'a..b' (doubling) or 'a..b:step'")
    p_sw.add_argument("--k", type=int)
    p_sw.add_argument("--c", type=int)
    p_sw.add_argument("--x", help="batch sizes, comma separated")
    p_sw.add_argument("--m", type=int)
    p_sw.add_argument("--l", type=int, default=64)
    p_sw.add_argument("--q", help="group sizes: comma list or '1..h' for all divisors")
    p_sw.add_argument("--heads", "--h", dest="heads", help="head counts, comma separated")
    p_sw.add_argument("--budget", type=float, help="DMD budget for gqa sweeps")
    mode = p_sw.add_mutually_exclusive_group()
    mode.add_argument("--model", dest="mode", action="store_const", const="model")
    mode.add_argument("--measure", dest="mode", action="store_const", const="measure")
    mode.add_argument("--both", dest="mode", action="store_const", const="both")
    p_sw.set_defaults(mode="model")
    p_sw.add_argument("--force", action="store_true",
                      help="lift the 1e7 accesses-per-point measurement budget")
    p_sw.add_argument("--out", required=True, help="output CSV path")

    p_ad = sub.add_parser("advise", help="recommend algorithmic parameters")
    p_ad.add_argument("kind", choices=("batch", "channels", "gqa-dim", "conv-vs-fft", "orientation"))
    p_ad.add_argument("--n", type=int)
    p_ad.add_argument("--k", type=int)
    p_ad.add_argument("--c", type=int)
    p_ad.add_argument("--m", type=float, help="aspect ratio for orientation")
    p_ad.add_argument("--pixels", type=float)
    p_ad.add_argument("--heads", type=int)
    p_ad.add_argument("--q", type=int)
    p_ad.add_argument("--l", type=int, default=64)
    p_ad.add_argument("--budget", type=float)
    p_ad.add_argument("--include-matmul", action="store_true")

    return parser


def _need(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise ValidationError("missing required flag(s): " + ", ".join(f"--{n}" for n in missing))


def _gen_spec(args) -> tracegen.GenSpec:
    alg = args.alg
    if alg == "matmul":
        _need(args, "m", "n", "l")
        params = tracegen.MatmulParams(args.m, args.n, args.l)
    elif alg == "conv":
        if args.n is not None:
            h = w = args.n
        else:
            _need(args, "h", "w")
            h, w = args.h, args.w
        _need(args, "k")
        params = tracegen.ConvParams(h, w, args.k)
    elif alg == "im2col":
        _need(args, "n", "k")
        params = tracegen.Im2colParams(args.n, args.k)
    elif alg == "batchconv":
        _need(args, "n", "k", "c", "x")
        params = tracegen.BatchParams(args.n, args.k, args.c, args.x)
    else:  # fft, fftconv2d
        _need(args, "n")
        params = tracegen.FftParams(args.n)
    spec = tracegen.GenSpec(alg, params)
    spec.validate()
    return spec


def cmd_gen(args) -> int:
    spec = _gen_spec(args)
    trace = tracegen.generate(spec)
    write_dmt(trace, args.out)
    print(f"wrote {args.out}: {len(trace.objects)} objects, {len(trace.accesses)} accesses")
    return EXIT_OK


def cmd_analyze(args) -> int:
    config = AnalysisConfig(
        granularity_bits=args.bits, block_size=args.block, cold_policy=args.cold
    )
    trace = read_dmt(args.trace)
    report = analyze_trace(trace, config, engine="oracle" if args.oracle else "fast")
    text = json.dumps(report.to_json_dict(), indent=2)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _model_eval(name: str, args) -> dict:
    out = {"formula": name}
    if name == "matmul":
        _need(args, "m", "n", "l")
        out["params"] = {"m": args.m, "n": args.n, "l": args.l}
        out["total"] = models.model_matmul(args.m, args.n, args.l)
    elif name == "conv":
        if args.n is not None:
            h = w = args.n
        else:
            _need(args, "h", "w")
            h, w = args.h, args.w
        _need(args, "k")
        res = models.model_conv(h, w, args.k)
        out["params"] = {"h": h, "w": w, "k": args.k}
        out["terms"] = {
            "kernel_term": res.kernel_term,
            "row_term": res.row_term,
            "col_term": res.col_term,
            "asymptotic": res.asymptotic,
        }
        out["clamped"] = list(res.clamped)
        out["total"] = res.total
    elif name == "batchconv":
        _need(args, "n", "k", "c", "x")
        res = models.model_batched(args.n, args.k, args.c, args.x)
        out["params"] = {"n": args.n, "k": args.k, "c": args.c, "x": args.x}
        out["terms"] = {"conv_term": res.conv_term, "result_term": res.result_term}
        out["total"] = res.total
    elif name == "im2col":
        _need(args, "n", "k")
        res = models.model_im2col(args.n, args.k)
        out["params"] = {"n": args.n, "k": args.k}
        out["terms"] = {
            "conv_like_terms": list(res.conv_like_terms),
            "r_term": res.r_term,
        }
        out["total"] = res.total
    elif name == "blockedconv":
        _need(args, "n", "k", "b")
        out["params"] = {"n": args.n, "k": args.k, "b": args.b}
        out["total"] = models.model_blocked_conv(args.n, args.k, args.b)
    elif name == "fftcomponents":
        _need(args, "n")
        res = models.model_fft_components(args.n)
        out["params"] = {"n": args.n}
        out["terms"] = {
            "level_sizes": list(res.level_sizes),
            "divide_sum": res.divide_sum,
            "conquer_sum": res.conquer_sum,
            "distant_counts": {
                str(i): res.distant_count(i) for i in range(min(args.n // 2, 16))
            },
        }
        out["total"] = res.divide_sum + res.conquer_sum
    elif name == "fftbounds":
        _need(args, "n")
        lower, upper = models.model_fft_bounds(args.n)
        out["params"] = {"n": args.n}
        out["terms"] = {"lower": lower, "upper": upper}
        out["total"] = upper
    elif name == "fftconv":
        _need(args, "n")
        out["params"] = {"n": args.n}
        out["total"] = models.model_fftconv_lower(args.n)
        out["note"] = advisor.FFT_BOUND_NOTE
    elif name in ("attention", "mha"):
        _need(args, "l", "d", "heads")
        res = models.model_attention(args.l, args.d, args.heads)
        out["params"] = {"l": args.l, "d": args.d, "heads": args.heads}
        if name == "mha":
            out["total"] = res.mha_cost
        else:
            out["terms"] = {"head_cost": res.head_cost, "mha_cost": res.mha_cost}
            out["total"] = res.head_cost
    elif name == "gqa":
        _need(args, "l", "d", "heads", "q")
        res = models.model_gqa(args.l, args.d, args.heads, args.q)
        out["params"] = {"l": args.l, "d": args.d, "heads": args.heads, "q": args.q}
        out["terms"] = {
            "cold_term": res.cold_term,
            "reuse_term": res.reuse_term,
            "asymptotic": res.asymptotic,
        }
        out["total"] = res.total
    elif name == "transformer":
        _need(args, "layers", "l", "d", "f")
        res = models.model_transformer(args.layers, args.l, args.d, args.f)
        out["params"] = {"layers": args.layers, "l": args.l, "d": args.d, "f": args.f}
        out["terms"] = dict(res.stages)
        out["as_printed"] = list(res.as_printed)
        out["total"] = res.forward_total
    elif name == "cold":
        _need(args, "m")
        out["params"] = {"m": args.m}
        out["total"] = models.model_cold(args.m)
    else:
        raise KeyError(name)
    return out


def cmd_model(args) -> int:
    if args.list or args.name is None:
        for name, desc in sorted(models.MODEL_REGISTRY.items()):
            print(f"{name:15s} {desc}")
        return EXIT_OK if args.list else EXIT_USAGE
    try:
        out = _model_eval(args.name, args)
    except KeyError:
        print(f"unknown model {args.name!r}; available:", file=sys.stderr)
        for name in sorted(models.MODEL_REGISTRY):
            print(f"  {name}", file=sys.stderr)
        return EXIT_USAGE
    print(json.dumps(out, indent=2))
    return EXIT_OK


def _parse_range(text: str) -> list[int]:
    """'a,b,c' list; 'a..b' doubling from a through b; 'a..b:s' step s."""
    if "," in text:
        return [int(v) for v in text.split(",")]
    if ".." in text:
        span, _, step = text.partition(":")
        lo_s, _, hi_s = span.partition("..")
        lo, hi = int(lo_s), int(hi_s)
        if step:
            return list(range(lo, hi + 1, int(step)))
        vals = []
        v = lo
        while v <= hi:
            vals.append(v)
            v *= 2
        return vals
    return [int(text)]


def _sweep_points(args) -> tuple[list[dict], list[str]]:
    alg = args.alg
    if alg == "gqa":
        _need(args, "budget", "heads")
        heads = _parse_range(args.heads)
        rows = []
        for h in heads:
            if args.q in (None, "1..h"):
                qs = [x for x in range(1, h + 1) if h % x == 0]
            else:
                qs = [x for x in _parse_range(args.q) if h % x == 0]
            for q in qs:
                res = advisor.advise_gqa_dim(args.budget, h, q, l=args.l)
                rows.append(
                    {"h": h, "q": q, "l": args.l, "budget": args.budget,
                     "d": res.d, "asymptotic_d": res.asymptotic_d}
                )
        return rows, ["h", "q", "l", "budget", "d", "asymptotic_d"]

    _need(args, "n")
    n_values = _parse_range(args.n)
    points = []
    if alg == "matmul":
        for n in n_values:
            points.append({"params": {"n": n},
                           "spec": tracegen.GenSpec(alg, tracegen.MatmulParams(n, n, n)),
                           "model": {"model_total": models.model_matmul(n, n, n)}})
        header = ["n"]
    elif alg == "conv":
        _need(args, "k")
        for n in n_values:
            res = models.model_conv(n, n, args.k)
            points.append({"params": {"n": n, "k": args.k},
                           "spec": tracegen.GenSpec(alg, tracegen.ConvParams(n, n, args.k)),
                           "model": {"model_total": res.total,
                                     "model_asymptotic": res.asymptotic}})
        header = ["n", "k"]
    elif alg == "im2col":
        _need(args, "k")
        for n in n_values:
            points.append({"params": {"n": n, "k": args.k},
                           "spec": tracegen.GenSpec(alg, tracegen.Im2colParams(n, args.k)),
                           "model": {"model_total": models.model_im2col(n, args.k).total}})
        header = ["n", "k"]
    elif alg == "batchconv":
        _need(args, "k", "c", "x")
        x_values = _parse_range(args.x)
        for n in n_values:
            for x in x_values:
                points.append(
                    {"params": {"n": n, "k": args.k, "c": args.c, "x": x},
                     "spec": tracegen.GenSpec(
                         alg, tracegen.BatchParams(n, args.k, args.c, x)),
                     "model": {"model_total": models.model_batched(n, args.k, args.c, x).total}})
        header = ["n", "k", "c", "x"]
    elif alg == "fft":
        for n in n_values:
            lower, upper = models.model_fft_bounds(n)
            points.append({"params": {"n": n},
                           "spec": tracegen.GenSpec(alg, tracegen.FftParams(n)),
                           "model": {"model_lower": lower, "model_upper": upper,
                                     "model_total": lower}})
        header = ["n"]
    else:  # fftconv2d
        for n in n_values:
            points.append({"params": {"n": n},
                           "spec": tracegen.GenSpec(alg, tracegen.FftParams(n)),
                           "model": {"model_total": models.model_fftconv_lower(n)}})
        header = ["n"]

    model_cols = sorted({col for p in points for col in p["model"]})
    columns = list(header)
    rows = []
    if args.mode in ("model", "both"):
        columns += model_cols
    if args.mode in ("measure", "both"):
        columns += ["measured"]
    if args.mode == "both":
        columns += ["ratio"]

    if args.mode in ("measure", "both"):
        for p in points:
            count = tracegen.access_count(p["spec"])
            if count > SWEEP_ACCESS_BUDGET and not args.force:
                raise ValidationError(
                    f"sweep point {p['params']} needs {count} accesses "
                    f"(> {SWEEP_ACCESS_BUDGET}); pass --force to run it"
                )
        workers = int(os.environ.get("DMC_THREADS", os.cpu_count() or 1))

        def measure(p):
            trace = tracegen.generate(p["spec"])
            return analyze_trace(trace, AnalysisConfig()).reuse_dmd

        with ThreadPoolExecutor(max_workers=max(workers, 1)) as pool:
            measured = list(pool.map(measure, points))
        for p, value in zip(points, measured):
            p["measured"] = value

    for p in points:
        row = dict(p["params"])
        if args.mode in ("model", "both"):
            row.update(p["model"])
        if args.mode in ("measure", "both"):
            row["measured"] = p["measured"]
        if args.mode == "both":
            row["ratio"] = p["measured"] / p["model"]["model_total"]
        rows.append(row)
    return rows, columns


def cmd_sweep(args) -> int:
    rows, columns = _sweep_points(args)
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {args.out}: {len(rows)} rows")
    return EXIT_OK


def cmd_advise(args) -> int:
    kind = args.kind
    if kind == "batch":
        _need(args, "n", "k", "c")
        res = advisor.advise_batch(args.n, args.k, args.c)
        out = {"kind": kind, "recommended_x": res.recommended,
               "costs": {str(x): v for x, v in res.costs.items()}}
    elif kind == "channels":
        _need(args, "n", "k")
        c_star = advisor.crossover_channels(args.n, args.k)
        out = {"kind": kind, "crossover_c": c_star,
               "cost_below": advisor.model_batched(args.n, args.k, c_star - 1, c_star - 1).total
               if c_star > 2 else None,
               "note": f"single-batch processing beats unbatched below c={c_star}"}
    elif kind == "gqa-dim":
        _need(args, "budget", "heads", "q")
        res = advisor.advise_gqa_dim(
            args.budget, args.heads, args.q, l=args.l,
            include_matmul=args.include_matmul)
        out = {"kind": kind, **asdict(res)}
    elif kind == "conv-vs-fft":
        _need(args, "n", "k")
        res = advisor.compare_conv_fft(args.n, args.k)
        out = {"kind": kind, "recommended": res.recommended,
               "costs": res.costs, "notes": list(res.notes)}
    else:  # orientation
        _need(args, "m")
        res = advisor.orientation_ratio(args.m, args.pixels, args.k)
        out = {"kind": kind,
               "square_over_portrait": res.square_over_portrait,
               "landscape_over_portrait": res.landscape_over_portrait,
               "dominant_costs": res.dominant_costs}
    print(json.dumps(out, indent=2))
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    handlers = {
        "gen": cmd_gen,
        "analyze": cmd_analyze,
        "model": cmd_model,
        "sweep": cmd_sweep,
        "advise": cmd_advise,
    }
    try:
        return handlers[args.command](args)
    except TraceFormatError as exc:
        print(f"dmclab: trace error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ValidationError, DmcError) as exc:
        print(f"dmclab: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"dmclab: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

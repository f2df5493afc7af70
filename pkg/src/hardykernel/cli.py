"""Command-line entry point: ``hardykernel <subcommand> [flags]``.

Exit codes: 0 success, 1 a check failed, 2 configuration error. Every run
prints a reproducibility header (version, seed, resolved configuration).
Results go to stdout, and to ``--out`` when given; a relative ``--out`` (or
the default file name when ``--out`` is omitted) is placed under
``$HARDYKERNEL_OUT`` if that variable is set.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np
import tomli_w

from . import __version__
from .characteristic import characteristic, guo_wang_constant
from .dyadic import SHIFTS
from .grid import PolarGrid
from .operators.checks import InvalidConfigError, carleson_embedding_ratio, domination_check, necessity_geometry
from .operators.norms import norm_estimate_L2, norm_estimate_Lp_heuristic, norm_lower_bound
from .verify import LemmaConfig, SweepSpec, maximal_constant, run_lemma_suite, run_theorem_correlation, svg_scatter
from .weights import NotIntegrableError, WeightParseError, doubling_constant, parse_weight, reverse_doubling_delta

OUT_ENV = "HARDYKERNEL_OUT"


class ConfigError(Exception):
    pass


def _levels(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="write the result to this file")
    common.add_argument("--format", choices=["text", "json", "csv"], default="text")
    common.add_argument("--config", default=None, help="TOML file of flag values (required for sweep)")
    common.add_argument("--dump-config", action="store_true", help="print the resolved configuration as TOML and exit")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    def weight_flags(p, weight=True, p_flag=True, alpha=True):
        if weight:
            p.add_argument("--weight", default="const:1")
        if p_flag:
            p.add_argument("--p", type=float, default=2.0)
        if alpha:
            p.add_argument("--alpha", type=float, default=1.0)

    parser = argparse.ArgumentParser(prog="hardykernel", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hardykernel {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("characteristic", parents=[common], help="scan [w]_{p,alpha}")
    weight_flags(p)
    p.add_argument("--jmax", type=int, default=10)
    p.add_argument("--rotations", type=int, default=1)
    p.add_argument("--depth", type=int, default=None, help="grid depth (default: jmax)")

    p = sub.add_parser("guo-wang", parents=[common], help="three-halves and conjectured constants")
    weight_flags(p, p_flag=False, alpha=False)
    p.add_argument("--jmax", type=int, default=10)
    p.add_argument("--rotations", type=int, default=1)

    p = sub.add_parser("norm", parents=[common], help="operator-norm estimate of the sigma-form kernel operator")
    weight_flags(p)
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--lower-bound-generations", type=int, default=None)

    p = sub.add_parser("dominate", parents=[common], help="kernel domination by the two dyadic kernels")
    weight_flags(p, weight=False, p_flag=False)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--jmax", type=int, default=12)

    p = sub.add_parser("necessity", parents=[common], help="geometry of the necessity lower bound")
    weight_flags(p, weight=False, p_flag=False)
    p.add_argument("--theta", type=float, default=0.01)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--samples", type=int, default=100_000)

    p = sub.add_parser("embedding", parents=[common], help="Carleson embedding ratio across truncation levels")
    weight_flags(p, alpha=False)
    p.add_argument("--levels", type=_levels, default=[6, 8, 10])
    p.add_argument("--max-variation", type=float, default=0.10)

    p = sub.add_parser("maximal", parents=[common], help="weighted dyadic maximal operator constant")
    weight_flags(p, alpha=False)
    p.add_argument("--levels", type=_levels, default=[6, 8])
    p.add_argument("--trials", type=int, default=4)

    p = sub.add_parser("doubling", parents=[common], help="doubling and reverse-doubling diagnostics")
    weight_flags(p, p_flag=False, alpha=False)
    p.add_argument("--samples", type=int, default=4000)
    p.add_argument("--jmax", type=int, default=10)
    p.add_argument("--rotations", type=int, default=1)

    p = sub.add_parser("lemmas", parents=[common], help="run the full lemma suite")
    p.add_argument("--weight", action="append", default=None, help="repeatable")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.01)
    p.add_argument("--jmax", type=int, default=12)

    p = sub.add_parser("sweep", parents=[common], help="characteristic vs norm-growth correlation sweep")
    p.add_argument("--svg", default=None, help="also write a log-log scatter plot")
    return parser


# keys that describe how a run is presented rather than what it computes
_META = {"command", "config", "dump_config", "out", "format", "threads", "svg"}


def resolve(argv) -> argparse.Namespace:
    """Parse ``argv``; values from ``--config`` act as defaults that explicit flags override."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config and args.command != "sweep":
        try:
            data = tomllib.loads(Path(args.config).read_text())
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if data.pop("command", args.command) != args.command:
            raise ConfigError(f"config {args.config} is for another subcommand")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        sub.set_defaults(**data)
        args = parser.parse_args(argv)
    return args


def resolved_config(args) -> dict:
    d = {k: v for k, v in vars(args).items() if k not in _META and v is not None}
    return {"command": args.command, **d}


def header(args, extra: dict | None = None) -> str:
    cfg = json.dumps(extra if extra is not None else resolved_config(args), sort_keys=True)
    return f"# hardykernel {__version__}\n# seed: {args.seed}\n# config: {cfg}\n"


def out_path(args, default_name: str) -> Path | None:
    base = os.environ.get(OUT_ENV)
    if args.out:
        p = Path(args.out)
        return p if p.is_absolute() or not base else Path(base) / p
    return Path(base) / default_name if base else None


def emit(args, text: str, default_name: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")
    path = out_path(args, default_name)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text if text.endswith("\n") else text + "\n")


def _json(obj) -> str:
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return str(v)
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        if isinstance(v, np.generic):
            return clean(v.item())
        if isinstance(v, complex):
            return [v.real, v.imag]
        return v

    return json.dumps(clean(obj), indent=2, sort_keys=True)


def _kv_text(d: dict) -> str:
    return "\n".join(f"{k}: {v}" for k, v in d.items())


# ---------------------------------------------------------------------------
# subcommands; each returns an exit code


def cmd_characteristic(args) -> int:
    w = parse_weight(args.weight)
    grid = PolarGrid(args.depth) if args.depth is not None else None
    rep = characteristic(w, args.p, args.alpha, args.jmax, args.rotations, grid)
    if args.format == "json":
        text = rep.to_json()
    elif args.format == "csv":
        text = rep.table_csv()
    else:
        lines = [f"value: {rep.value:.12g}", f"admissible: {rep.admissible}",
                 f"divergent: {rep.divergent}", f"certificate_factor: {rep.certificate:.6g}",
                 f"argmax: {rep.argmax}", "per-generation maxima:", rep.table_csv().rstrip()]
        text = "\n".join(lines)
    emit(args, text, f"characteristic.{'csv' if args.format == 'csv' else 'json'}")
    return 0


def cmd_guo_wang(args) -> int:
    rep = guo_wang_constant(parse_weight(args.weight), args.jmax, args.rotations)
    if args.format == "text":
        text = (f"three_halves_constant: {rep.sufficient.value:.12g}\n"
                f"conjectured_constant: {rep.conjectured.value:.12g}\n"
                f"conjectured_le_three_halves: {rep.conjectured_le_sufficient}")
    else:
        text = _json(rep.as_dict())
    emit(args, text, "guo_wang.json")
    return 0


def cmd_norm(args) -> int:
    w = parse_weight(args.weight)
    grid = PolarGrid(args.depth)
    reports = []
    if args.p == 2.0:
        reports.append(norm_estimate_L2(args.alpha, w, grid, args.tol, args.max_iter, args.seed))
    else:
        reports.append(norm_estimate_Lp_heuristic(args.alpha, w, args.p, grid, seed=args.seed))
    reports.append(norm_lower_bound(args.alpha, w, args.p, grid, args.lower_bound_generations))
    rows = [r.as_dict() for r in reports]
    if args.format == "json":
        text = _json(rows)
    elif args.format == "csv":
        keys = list(rows[0])
        text = ",".join(keys) + "\n" + "\n".join(",".join(str(r[k]) for k in keys) for r in rows)
    else:
        text = "\n".join(f"{r.method}: {r.estimate:.10g} (iterations {r.iterations}, converged {r.converged})"
                         for r in reports)
    emit(args, text, "norm.json")
    return 0 if reports[0].converged else 1


def cmd_dominate(args) -> int:
    rep = domination_check(args.alpha, args.samples, args.jmax, args.seed)
    d = rep.as_dict()
    emit(args, _json(d) if args.format != "text" else _kv_text(d), "dominate.json")
    return 0 if rep.passed else 1


def cmd_necessity(args) -> int:
    rep = necessity_geometry(args.alpha, args.theta, args.d, args.samples, args.seed)
    d = rep.as_dict()
    emit(args, _json(d) if args.format != "text" else _kv_text(d), "necessity.json")
    return 0 if rep.passed else 1


def cmd_embedding(args) -> int:
    w = parse_weight(args.weight)
    grid = PolarGrid(max(args.levels))
    g = grid.function(np.random.default_rng(args.seed).uniform(0.0, 1.0, grid.size))
    ratios = {str(s): [carleson_embedding_ratio(w, s, args.p, g, j) for j in args.levels] for s in SHIFTS}
    worst = max((max(r) - min(r)) / min(r) for r in ratios.values())
    d = {"levels": args.levels, "ratios": ratios, "variation": worst,
         "max_variation": args.max_variation, "passed": worst < args.max_variation}
    emit(args, _json(d) if args.format != "text" else _kv_text(d), "embedding.json")
    return 0 if d["passed"] else 1


def cmd_maximal(args) -> int:
    w = parse_weight(args.weight)
    mx = maximal_constant(w, args.p, args.levels, args.trials, args.seed)
    spread = max(mx["per_depth"]) / min(mx["per_depth"])
    d = mx | {"levels": args.levels, "spread": spread,
              "passed": max(mx["per_depth"]) <= mx["bound"] * (1 + 1e-9) and spread < 1.5}
    emit(args, _json(d) if args.format != "text" else _kv_text(d), "maximal.json")
    return 0 if d["passed"] else 1


def cmd_doubling(args) -> int:
    w = parse_weight(args.weight)
    db = doubling_constant(w, args.samples, args.seed)
    rd = reverse_doubling_delta(w, args.jmax, n_rotations=args.rotations)
    d = {"doubling": db.as_dict(), "reverse_doubling": rd.as_dict()}
    emit(args, _json(d) if args.format != "text" else _kv_text(d), "doubling.json")
    return 0


def cmd_lemmas(args) -> int:
    cfg = LemmaConfig(weights=args.weight or ["const:1"], p=args.p, alpha=args.alpha, theta=args.theta,
                      domination_jmax=args.jmax, seed=args.seed)
    for w in cfg.weights:
        parse_weight(w)
    res = run_lemma_suite(cfg)
    text = res.to_csv() if args.format == "csv" else res.to_json()
    emit(args, text, f"lemmas.{'csv' if args.format == 'csv' else 'json'}")
    if not res.passed:
        for r in res.rows:
            if not r.get("passed", True):
                fails = [k for k, v in r.items() if k.endswith("_pass") and v is False]
                print(f"FAILED {r['weight']}: {fails or r.get('status')}", file=sys.stderr)
    return 0 if res.passed else 1


def load_sweep(args, argv) -> SweepSpec:
    if not args.config:
        if args.dump_config:
            return SweepSpec()
        raise ConfigError("sweep requires --config FILE (use --dump-config to print the default suite)")
    try:
        spec = SweepSpec.load(args.config)
    except (OSError, tomllib.TOMLDecodeError, TypeError) as exc:
        raise ConfigError(f"cannot read sweep config {args.config}: {exc}") from None
    if any(a == "--seed" or a.startswith("--seed=") for a in argv):
        spec.seed = args.seed
    return spec


def cmd_sweep(args, spec: SweepSpec) -> int:
    res = run_theorem_correlation(spec, workers=max(1, args.threads))
    text = res.to_json() if args.format == "json" else res.to_csv()
    emit(args, text, f"sweep.{'json' if args.format == 'json' else 'csv'}")
    if args.svg:
        svg_scatter(res, args.svg)
    for r in res.rows:
        if not r["passed"]:
            print(f"DISAGREEMENT {r['weight']} p={r['p']} alpha={r['alpha']}: "
                  f"char_finite={r['char_finite']} norm_slope={r['norm_slope']:.4g}", file=sys.stderr)
    return 0 if res.passed else 1


COMMANDS = {
    "characteristic": cmd_characteristic, "guo-wang": cmd_guo_wang, "norm": cmd_norm,
    "dominate": cmd_dominate, "necessity": cmd_necessity, "embedding": cmd_embedding,
    "maximal": cmd_maximal, "doubling": cmd_doubling, "lemmas": cmd_lemmas,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = resolve(argv)
        if args.command == "sweep":
            spec = load_sweep(args, argv)
            if args.dump_config:
                sys.stdout.write(spec.to_toml())
                return 0
            args.seed = spec.seed
            sys.stdout.write(header(args, {"command": "sweep", **spec.to_dict()}))
            return cmd_sweep(args, spec)
        if args.dump_config:
            sys.stdout.write(tomli_w.dumps(resolved_config(args)))
            return 0
        if "weight" in vars(args) and isinstance(args.weight, str):
            parse_weight(args.weight)
        sys.stdout.write(header(args))
        return COMMANDS[args.command](args)
    except SystemExit as exc:  # argparse usage errors
        return 2 if exc.code not in (0, None) else 0
    except (ConfigError, WeightParseError, InvalidConfigError, NotIntegrableError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

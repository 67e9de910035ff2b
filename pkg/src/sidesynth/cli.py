"""Command-line front end: ``sidesynth analyze|attack|count|bench``.

Exit status is 0 on success, 2 for usage, parse and configuration errors,
3 when an attack hits a contradiction (oracle and constraints disagree),
and 1 for any other failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import statistics
import sys
import time
from pathlib import Path
from typing import Optional

from . import automata as A
from . import constraints as C
from .benchmarks import BENCHMARKS, SUITE
from .config import RunConfig, parse_bool, resolve_alphabet, resolve_secrets, resolve_seed
from .errors import (ConfigurationError, ContradictionError, DSLError, DomainError,
                     FormulaError, ParseError, PartitionError, SidesynthError)
from .estimator import AttackSynthesizer

__all__ = ["main", "build_parser"]

log = logging.getLogger("sidesynth")

BENCH_HEURISTICS = ("M", "RA-NR", "RA-R", "SA-R", "GA-R")


class _Usage(Exception):
    pass


def _common(p: argparse.ArgumentParser, *, program=True):
    if program:
        src = p.add_mutually_exclusive_group()
        src.add_argument("--program", help="DSL source file")
        src.add_argument("--benchmark", help=f"benchmark id ({', '.join(BENCHMARKS)})")
    p.add_argument("--alphabet", help="digits, lower, or the characters themselves")
    p.add_argument("--len-high", type=int, help="length of the secret h")
    p.add_argument("--len-low", type=int, help="length of the input l")
    p.add_argument("--config", help="load settings from a run configuration file")
    p.add_argument("--save-config", help="write the effective configuration here")
    p.add_argument("--seed", type=int, help="rng seed (default: $SIDESYNTH_SEED or 0)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--dump-dfa", help="write a Graphviz DOT automaton here")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _attack_flags(p: argparse.ArgumentParser):
    p.add_argument("--heuristic", choices=["m", "ra", "sa", "ga"], type=str.lower)
    p.add_argument("--restricted", type=parse_bool, metavar="true|false")
    p.add_argument("--delta", type=int, help="cost threshold for merging observations")
    sec = p.add_mutually_exclusive_group()
    sec.add_argument("--secret", action="append", help="secret to attack (repeatable)")
    sec.add_argument("--secrets", help="comma-separated secrets or random:N")
    p.add_argument("--steps", type=int, help="step budget per attack")
    p.add_argument("--time-limit", type=float, help="seconds per attack")
    p.add_argument("--k", type=int, help="samples (RA) or generations (GA)")
    p.add_argument("--cost-weight", action="append", default=[], metavar="KIND=W",
                   help="cost of one executed node of KIND (repeatable)")
    p.add_argument("--no-timing", action="store_true",
                   help="leave elapsed_ms empty so traces are byte-reproducible")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sidesynth",
                                     description="Side-channel attack synthesis for string programs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="generate observation constraints")
    _common(p)
    p.add_argument("--delta", type=int, help="cost threshold for merging observations")
    p.add_argument("--cost-weight", action="append", default=[], metavar="KIND=W")

    p = sub.add_parser("attack", help="run attacks against concrete secrets")
    _common(p)
    _attack_flags(p)

    p = sub.add_parser("count", help="model count and entropy of a formula")
    _common(p, program=False)
    p.add_argument("formula", help="formula file, or '-' for standard input")
    p.add_argument("--expr", action="store_true", help="treat the argument as formula text")

    p = sub.add_parser("bench", help="benchmarks x heuristics comparison table")
    _common(p, program=False)
    _attack_flags(p)
    p.add_argument("--benchmarks", default=",".join(SUITE),
                   help="comma-separated benchmark ids")
    p.add_argument("--skip", default="", help="benchmark ids to mark as skipped")
    p.add_argument("--heuristics", default=",".join(BENCH_HEURISTICS),
                   help="comma-separated labels such as M,RA-NR,SA-R")
    return parser


# -- configuration ---------------------------------------------------------------------

def _cost_weights(items):
    out = {}
    for item in items:
        kind, sep, w = item.partition("=")
        if not sep:
            raise _Usage(f"--cost-weight expects KIND=W, got {item!r}")
        try:
            out[kind.strip()] = int(w)
        except ValueError:
            raise _Usage(f"--cost-weight weight must be an integer: {item!r}") from None
    return out


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    secrets = None
    if getattr(args, "secret", None):
        secrets = ",".join(args.secret)
    elif getattr(args, "secrets", None):
        secrets = args.secrets
    cfg = cfg.replace(
        benchmark=getattr(args, "benchmark", None), alphabet=args.alphabet,
        len_high=args.len_high, len_low=args.len_low, delta=getattr(args, "delta", None),
        secrets=secrets, out=args.out, heuristic=getattr(args, "heuristic", None),
        restricted=getattr(args, "restricted", None), steps=getattr(args, "steps", None),
        time_limit=getattr(args, "time_limit", None), k=getattr(args, "k", None))
    if getattr(args, "program", None):
        cfg = cfg.replace(program=args.program)
        cfg.benchmark = None
    if getattr(args, "cost_weight", None):
        cfg.cost = {**cfg.cost, **_cost_weights(args.cost_weight)}
    cfg.seed = resolve_seed(args.seed if args.seed is not None else
                            (cfg.seed if args.config else None))
    if args.save_config:
        cfg.save(args.save_config)
    return cfg


def _program_source(cfg: RunConfig):
    if cfg.benchmark:
        if cfg.benchmark.upper() not in BENCHMARKS:
            raise _Usage(f"unknown benchmark {cfg.benchmark!r} "
                         f"(known: {', '.join(BENCHMARKS)})")
        return cfg.benchmark
    if cfg.program:
        try:
            return Path(cfg.program).read_text(encoding="utf-8")
        except OSError as exc:
            raise _Usage(f"cannot read program: {exc}") from None
    raise _Usage("give --program or --benchmark")


def _out_dir(cfg: RunConfig) -> Optional[Path]:
    if not cfg.out:
        return None
    path = Path(cfg.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _fit(cfg: RunConfig, source=None) -> AttackSynthesizer:
    synth = AttackSynthesizer(**cfg.estimator_params())
    return synth.fit(source if source is not None else _program_source(cfg))


# -- commands ----------------------------------------------------------------------------

def bundle_text(synth: AttackSynthesizer) -> str:
    lines = [f";; program={synth.program_.name} alphabet={synth.domain_.alphabet} "
             f"len-high={synth.domain_.high_len} len-low={synth.domain_.low_len} "
             f"paths={synth.n_paths_} classes={synth.n_classes_}"]
    for i, psi in enumerate(synth.observation_constraints_):
        costs = ",".join(map(str, psi.costs))
        lines.append(f";; class={i} observation={psi.observation} members={psi.members} "
                     f"costs={costs}")
        lines.append(C.to_sexpr(psi.formula))
    return "\n".join(lines) + "\n"


def cmd_analyze(args, out) -> int:
    cfg = _config(args)
    synth = _fit(cfg)
    print(f"paths: {synth.n_paths_}", file=out)
    print(f"classes: {synth.n_classes_}", file=out)
    for i, psi in enumerate(synth.observation_constraints_):
        print(f"  class {i}: cost {psi.observation} ({psi.members} paths)", file=out)
    text = bundle_text(synth)
    directory = _out_dir(cfg)
    if directory is not None:
        path = directory / f"{synth.benchmark_}.psi"
        path.write_text(text, encoding="utf-8")
        print(f"wrote {path}", file=out)
    if args.dump_dfa and synth.observation_constraints_:
        dfa = A.compile_joint(synth.observation_constraints_[0].formula, synth.domain_)
        Path(args.dump_dfa).write_text(A.to_dot(dfa, "class0"), encoding="utf-8")
    return 0


def _write_trace(directory: Path, trace) -> None:
    stem = f"{trace.benchmark}-{trace.heuristic}-{trace.secret}"
    (directory / f"{stem}.csv").write_text(trace.to_csv(), encoding="utf-8")
    (directory / f"{stem}.json").write_text(trace.to_json(), encoding="utf-8")


def cmd_attack(args, out) -> int:
    cfg = _config(args)
    synth = _fit(cfg)
    if args.no_timing:
        synth.set_params(timing=False)
    secrets = resolve_secrets(cfg.secrets or "random:5", synth.domain_, cfg.seed)
    directory = _out_dir(cfg)
    traces = []
    for secret in secrets:
        trace = synth.attack_one(secret)
        traces.append(trace)
        print(f"{secret}: {trace.outcome}{' (' + trace.reason + ')' if trace.reason else ''}, "
              f"{len(trace.steps)} steps, H {trace.h_init_bits:.4f} -> "
              f"{trace.h_final_bits:.4f} bits", file=out)
        if directory is not None:
            _write_trace(directory, trace)
    report = {
        "benchmark": synth.benchmark_, "heuristic": synth.heuristic_config().label,
        "seed": cfg.seed, "secrets": len(traces),
        "complete": sum(t.complete for t in traces),
        "mean_steps": statistics.mean(len(t.steps) for t in traces),
        "mean_h_final_bits": statistics.mean(t.h_final_bits for t in traces),
    }
    print(f"mean steps {report['mean_steps']:.2f}, mean H_final "
          f"{report['mean_h_final_bits']:.4f} bits, {report['complete']}/{len(traces)} complete",
          file=out)
    if directory is not None:
        (directory / "summary.json").write_text(json.dumps(report, indent=2) + "\n",
                                                encoding="utf-8")
    if args.dump_dfa and traces:
        final = synth.initial_state()
        Path(args.dump_dfa).write_text(A.to_dot(final.ka.dfa, "initial"), encoding="utf-8")
    return 0


def cmd_count(args, out) -> int:
    if args.expr:
        text = args.formula
    elif args.formula == "-":
        text = sys.stdin.read()
    else:
        try:
            text = Path(args.formula).read_text(encoding="utf-8")
        except OSError as exc:
            raise _Usage(f"cannot read formula: {exc}") from None
    alphabet = resolve_alphabet(args.alphabet) or C.DIGITS
    n = args.len_high if args.len_high is not None else 4
    m = args.len_low if args.len_low is not None else n
    domain = C.StringDomain(alphabet, n, m)
    f = C.parse_formula(text, domain)
    fv = C.free_vars(f)
    if len(fv) == 2:
        dfa = A.compile_joint(f, domain)
        count = A.count_models(dfa, A.joint_length(domain))
    else:
        var = next(iter(fv)) if fv else C.HIGH
        dfa = A.compile(f, domain, var)
        count = A.count_models(dfa, domain.length(var))
    print(f"count: {count}", file=out)
    print(f"entropy: {math.log2(count):.4f} bits" if count else "entropy: -", file=out)
    if args.dump_dfa:
        Path(args.dump_dfa).write_text(A.to_dot(dfa), encoding="utf-8")
    return 0


def _heuristic_params(label: str) -> dict:
    kind, _, mode = label.upper().partition("-")
    if kind.lower() not in ("m", "ra", "sa", "ga") or mode not in ("", "R", "NR"):
        raise _Usage(f"unknown heuristic label {label!r}")
    return {"heuristic": kind.lower(), "restricted": mode != "NR"}


def cmd_bench(args, out) -> int:
    cfg = _config(args)
    ids = [b.strip().upper() for b in args.benchmarks.split(",") if b.strip()]
    skip = {b.strip().upper() for b in args.skip.split(",") if b.strip()}
    labels = [h.strip().upper() for h in args.heuristics.split(",") if h.strip()]
    for b in ids:
        if b not in BENCHMARKS:
            raise _Usage(f"unknown benchmark {b!r}")
    params = [_heuristic_params(h) for h in labels]
    directory = _out_dir(cfg)
    rows = []
    for b in ids:
        if b in skip:
            rows.extend({"benchmark": b, "heuristic": h, "status": "skipped"} for h in labels)
            continue
        try:
            base = _fit(cfg.replace(heuristic="m"), b)
        except SidesynthError as exc:
            rows.extend({"benchmark": b, "heuristic": h, "status": f"error: {exc}"}
                        for h in labels)
            continue
        secrets = resolve_secrets(cfg.secrets or "random:3", base.domain_, cfg.seed)
        for label, hp in zip(labels, params):
            synth = base.set_params(**hp)
            if args.no_timing:
                synth.set_params(timing=False)
            t0 = time.monotonic()
            try:
                traces = [synth.attack_one(s) for s in secrets]
            except SidesynthError as exc:
                rows.append({"benchmark": b, "heuristic": label, "status": f"error: {exc}"})
                continue
            rows.append({
                "benchmark": b, "heuristic": label, "status": "ok",
                "time_s": (time.monotonic() - t0) / len(secrets),
                "steps": statistics.mean(len(t.steps) for t in traces),
                "h_init": traces[0].h_init_bits,
                "h_final": statistics.mean(t.h_final_bits for t in traces),
                "complete": sum(t.complete for t in traces),
                "runs": len(traces),
            })
            log.info("%s %s done", b, label)
    _print_table(rows, ids, labels, out)
    if directory is not None:
        keys = ["benchmark", "heuristic", "status", "time_s", "steps", "h_init", "h_final",
                "complete", "runs"]
        with open(directory / "bench.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    return 0


def _print_table(rows, ids, labels, out):
    cell = {(r["benchmark"], r["heuristic"]): r for r in rows}
    head = f"{'ID':<5}{'H_init':>8} " + " ".join(f"{h:>22}" for h in labels)
    print(head, file=out)
    print(" " * 14 + " ".join(f"{'time/steps/H_final':>22}" for _ in labels), file=out)
    for b in ids:
        first = next((cell[(b, h)] for h in labels if cell.get((b, h), {}).get("status") == "ok"),
                     None)
        h_init = f"{first['h_init']:.1f}" if first else "-"
        parts = []
        for h in labels:
            r = cell.get((b, h), {"status": "missing"})
            if r["status"] == "ok":
                parts.append(f"{r['time_s']:.1f}s/{r['steps']:.1f}/{r['h_final']:.1f}")
            else:
                parts.append(r["status"].split(":")[0])
        print(f"{b:<5}{h_init:>8} " + " ".join(f"{p:>22}" for p in parts), file=out)


COMMANDS = {"analyze": cmd_analyze, "attack": cmd_attack, "count": cmd_count, "bench": cmd_bench}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, out)
    except (_Usage, ParseError, DSLError, DomainError, FormulaError, ConfigurationError,
            KeyError) as exc:
        print(f"sidesynth: error: {exc}", file=sys.stderr)
        return 2
    except (ContradictionError, PartitionError) as exc:
        print(f"sidesynth: contradiction: {exc}", file=sys.stderr)
        return 3
    except SidesynthError as exc:
        print(f"sidesynth: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

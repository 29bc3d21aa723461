"""Command-line interface: ``regcoker {sample,coker,theory,run,compare}``.

Exit status is 0 on success (or a passing comparison), 2 when a
statistical comparison fails and 1 on any error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, abelian, theory
from .abelian import RMPair, parse_group
from .coker import cokernel, cokernel_p_part, count_pair_surjections, pair_structure
from .errors import CapacityError, InvalidInputError
from .matgen import MODEL_KINDS, ModelSpec, SeedPolicy, format_grid, matrix_from_json, matrix_to_json, parse_grid, sample

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_STAT_FAIL = 2


def _primes(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _parse_target(text: str, r: int, m: int):
    # "V;(rep)+<(g1),(g2)>"
    from .harness.config import parse_observable

    ob = parse_observable(f"pair_moment({text})")
    return RMPair(ob.group, ob.coset, r, m)


def cmd_sample(args) -> int:
    for i in range(args.trials):
        spec = ModelSpec(args.model, args.n, args.r, args.p, args.e, args.condition, args.retry_cap)
        seed = SeedPolicy(args.seed, args.trial_index + i)
        a = sample(spec, seed.generator())
        if args.format == "grid":
            if i:
                print()
            print(format_grid(a))
        else:
            print(json.dumps(matrix_to_json(a, spec, seed)))
    return EXIT_OK


def _read_matrix(path: str):
    text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            return matrix_from_json(json.loads(stripped))
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}:{exc.lineno}: invalid matrix JSON: {exc.msg}") from exc
    try:
        return parse_grid(text)
    except ValueError as exc:
        raise InvalidInputError(f"{path}: cannot parse matrix grid: {exc}") from exc


def cmd_coker(args) -> int:
    a = _read_matrix(args.matrix)
    out: dict = {}
    if args.p:
        for p in _primes(args.p):
            rep = cokernel_p_part(a, p)
            out[f"sylow_{p}"] = rep.label()
    else:
        out.update(cokernel(a).to_json())
    if args.moment:
        from .harness.experiment import measure
        from .harness.config import parse_observable

        vals, _ = measure(a, (parse_observable(f"moment({args.moment})"),), args.pair_r or 0)
        out[f"sur({args.moment})"] = next(iter(vals.values()))
    if args.pair_r is not None:
        ps = pair_structure(a, args.pair_r)
        out["pair"] = {
            "representative": list(ps.representative),
            "subgroup_generators": [list(g) for g in ps.subgroup_generators],
            "conditions": list(ps.conditions),
            "infinite": ps.flagged,
        }
        if args.target:
            target = _parse_target(args.target, args.pair_r, a.n)
            out["pair"]["surjections"] = count_pair_surjections(ps, target)
    if args.json:
        print(json.dumps(out, sort_keys=True))
    else:
        for k, v in out.items():
            print(f"{k}: {json.dumps(v) if isinstance(v, (dict, list)) else v}")
    return EXIT_OK


def cmd_theory(args) -> int:
    kind = args.kind
    if kind == "prob":
        val = theory.probability(args.style, parse_group(args.group), _primes(args.primes), args.terms)
        print(json.dumps(val.to_json()))
    elif kind == "moment":
        v = parse_group(args.group)
        if args.style == "directed_CL":
            val = theory.predicted_moment_directed(v, args.r)
        elif args.style == "symmetric":
            val = theory.predicted_moment_symmetric(v, args.r)
        else:
            val = theory.predicted_moment_rm(v, args.r, args.m)
        print(val)
    elif kind == "pairs":
        v = parse_group(args.group)
        for pair in abelian.enumerate_rm_pairs(v, args.r, args.m):
            print(f"{pair.coset}  |H[r]|={abelian.torsion_count(pair.subgroup_type, args.r)}")
    elif kind == "mass":
        val = theory.mass_total(args.style, _primes(args.primes), args.cutoff, args.terms)
        print(json.dumps(val.to_json()))
    elif kind == "identity":
        val = theory.pairing_mass_identity_check(args.p, args.cutoff, args.terms)
        print(json.dumps(val.to_json()))
    elif kind == "table":
        table = theory.measure_table(args.style, _primes(args.primes), args.cutoff, args.terms)
        print(json.dumps(table.to_json(), indent=2) if args.json else table.format())
    return EXIT_OK


def cmd_run(args) -> int:
    from .harness import compare, load_config, predictions_for, run_experiment
    from .harness import persist

    config = load_config(args.config)
    out_dir = Path(args.out) if args.out else Path("results") / (config.name or config.config_hash)

    def sink(records):
        out_dir.mkdir(parents=True, exist_ok=True)
        persist.write_records(out_dir / "partial_records.jsonl", config, records)
        print(f"partial records written to {out_dir / 'partial_records.jsonl'}", file=sys.stderr)

    summary, records = run_experiment(config, workers=args.workers, sink=sink)
    predictions = predictions_for(config)
    report = compare(summary, predictions)
    persist.save_run(out_dir, config, summary, records, predictions, report)
    print(report.format())
    print(f"results in {out_dir}")
    return EXIT_OK if report.passed else EXIT_STAT_FAIL


def cmd_compare(args) -> int:
    from .harness import compare
    from .harness import persist

    summary = persist.read_summary(args.summary)
    predictions = persist.read_predictions(args.predictions)
    report = compare(summary, predictions)
    print(report.format())
    if args.csv:
        persist.write_comparison(args.csv, report)
    return EXIT_OK if report.passed else EXIT_STAT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="regcoker", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="sample random matrices")
    s.add_argument("--model", required=True, choices=MODEL_KINDS)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--r", type=int, default=0)
    s.add_argument("--p", type=int)
    s.add_argument("--e", type=int)
    s.add_argument("--seed", type=int, default=0, help="master seed")
    s.add_argument("--trial-index", type=int, default=0)
    s.add_argument("--trials", type=int, default=1)
    s.add_argument("--condition", default="none")
    s.add_argument("--retry-cap", type=int, default=10**6)
    s.add_argument("--format", choices=("json", "grid"), default="json")
    s.set_defaults(func=cmd_sample)

    c = sub.add_parser("coker", help="cokernel of a matrix (JSON or whitespace grid; '-' for stdin)")
    c.add_argument("matrix")
    c.add_argument("--p", help="comma-separated primes: report only these Sylow parts")
    c.add_argument("--moment", help="also count surjections onto this group")
    c.add_argument("--pair-r", type=int, help="report the coset structure for row/column sums r")
    c.add_argument("--target", help="pair target 'V;(rep)+<(g1),...>' (needs --pair-r)")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_coker)

    t = sub.add_parser("theory", help="limiting probabilities, moments and masses")
    t.add_argument("kind", choices=("prob", "moment", "pairs", "mass", "identity", "table"))
    t.add_argument("--style", default="directed_CL", choices=("directed_CL", "symmetric", "rm"))
    t.add_argument("--primes", default="2")
    t.add_argument("--group", default="triv")
    t.add_argument("--r", type=int, default=3)
    t.add_argument("--m", type=int, default=1)
    t.add_argument("--p", type=int, default=3)
    t.add_argument("--cutoff", type=int, default=16)
    t.add_argument("--terms", type=int, default=theory.DEFAULT_TERMS)
    t.add_argument("--json", action="store_true")
    t.set_defaults(func=cmd_theory)

    r = sub.add_parser("run", help="run an experiment from a JSON config")
    r.add_argument("config")
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)

    m = sub.add_parser("compare", help="compare a summary with saved predictions")
    m.add_argument("summary")
    m.add_argument("predictions")
    m.add_argument("--csv", help="also write the comparison table here")
    m.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (InvalidInputError, CapacityError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``revpref check|reveal|replicate|gen|oracle-verify``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from collections.abc import Sequence

import numpy as np

from . import harness, oracle
from .core import ChoiceDataset, density
from .errors import RevprefError
from .models import BASE_MODELS, REPORT_MODELS, ModelSpec, evaluate, is_rationalizable

MODEL_CHOICES = [m.name for m in REPORT_MODELS]


def _model(name: str) -> ModelSpec:
    try:
        return ModelSpec.parse(name)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def cmd_check(args: argparse.Namespace) -> int:
    pool = harness.load_pool(args.data, args.format, args.menus)
    failing = [s.id for s in pool.subjects if not is_rationalizable(args.model, s.data)]
    passed = len(pool) - len(failing)
    print(f"{args.model.name}: {passed}/{len(pool)} subjects rationalizable")
    for sid in failing:
        print(f"  fails: {sid}")
    return 0 if not failing else 1


def cmd_reveal(args: argparse.Namespace) -> int:
    pool = harness.load_pool(args.data, args.format, args.menus)
    try:
        subject = pool.subject(args.subject)
    except KeyError:
        print(f"error: no subject {args.subject!r}", file=sys.stderr)
        return 2
    d = subject.data
    result = evaluate(args.model, d, screen=True)
    if not result.rationalizable:
        print(f"{subject.id} is not rationalizable by {args.model.name}")
        return 1
    for x, y in sorted(result.revealed.pairs):
        print(f"{d.label(x)} > {d.label(y)}")
    dens = density(result.revealed, d.n)
    print(f"density: {dens:.4f} ({len(result.revealed.pairs)} of {d.n * (d.n - 1) // 2} comparisons)")
    return 0


def cmd_replicate(args: argparse.Namespace) -> int:
    pool = harness.load_pool(args.data, args.format, args.menus)
    models = [ModelSpec.parse(m) for m in args.models.split(",")] if args.models else list(REPORT_MODELS)
    start = time.perf_counter()
    bundle = harness.replicate(pool, args.random, args.seed, models)
    harness.write_report(bundle, args.out, args.report_format)
    logging.getLogger(__name__).info("replicate finished in %.1f s", time.perf_counter() - start)
    for name, r in bundle.models.items():
        dens = "n/a" if r.avg_density is None else f"{r.avg_density:.4f}"
        print(f"{name:>8}  pass {r.pass_rate:.4f}  psi {r.psi:+.4f}  density {dens}")
    print(f"report written to {args.out}")
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    pool = harness.generate_pool(args.preset, args.subjects, args.seed)
    text = json.dumps(pool.to_json(), indent=1) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def verify_against_oracle(
    datasets: Sequence[ChoiceDataset], models: Sequence[ModelSpec] = REPORT_MODELS
) -> dict[str, dict[str, int]]:
    """Count verdict and revelation disagreements between the encodings and the oracle.

    ``unsound`` counts datasets where the encoding refutes a model the oracle
    rationalizes.
    """
    out = {}
    for model in models:
        tally = {"datasets": 0, "verdict": 0, "revealed": 0, "unsound": 0}
        for d in datasets:
            tally["datasets"] += 1
            ok, _ = oracle.brute_rationalizable(model, d)
            res = evaluate(model, d)
            if ok != res.rationalizable:
                tally["verdict"] += 1
                tally["unsound"] += ok and not res.rationalizable
            elif ok and oracle.brute_revealed(model, d) != res.revealed:
                tally["revealed"] += 1
        out[model.name] = tally
    return out


def cmd_oracle_verify(args: argparse.Namespace) -> int:
    n = args.universe
    if n == 3:
        datasets = list(oracle.complete_domain_datasets(3))
        rng = np.random.default_rng(args.seed)
        datasets += [oracle.random_dataset(3, rng, 1, 4) for _ in range(args.samples)]
    else:
        rng = np.random.default_rng(args.seed)
        datasets = [oracle.random_dataset(n, rng, 3, 8) for _ in range(args.samples)]
    tallies = verify_against_oracle(datasets)
    base = {m.name for m in BASE_MODELS}
    status = 0
    for name, t in tallies.items():
        print(f"{name:>8}: {t['datasets']} datasets, {t['verdict']} verdict / {t['revealed']} revealed mismatches")
        if name in base and (t["verdict"] or t["revealed"]):
            status = 1
        if t["unsound"]:
            status = 1
    print("OK" if status == 0 else "MISMATCH")
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="revpref", description="Revealed preference analysis under two-stage choice models.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def data_args(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--data", required=True, help="pool file (JSON, or long-format CSV)")
        sp.add_argument("--format", choices=["json", "csv"], default=None)
        sp.add_argument("--menus", default=None, help="menus sidecar for CSV pools")

    sp = sub.add_parser("check", help="test every subject against a model")
    sp.add_argument("--model", type=_model, required=True, metavar="|".join(MODEL_CHOICES))
    data_args(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("reveal", help="print the revealed relation of one subject")
    sp.add_argument("--model", type=_model, required=True)
    sp.add_argument("--subject", required=True)
    data_args(sp)
    sp.set_defaults(func=cmd_reveal)

    sp = sub.add_parser("replicate", help="pass rates, PSI, densities and indicators for a pool")
    data_args(sp)
    sp.add_argument("--random", type=int, default=1000, help="number of random subjects")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.add_argument("--report-format", choices=["json", "csv"], default=None)
    sp.add_argument("--models", default=None, help="comma-separated subset of models")
    sp.set_defaults(func=cmd_replicate)

    sp = sub.add_parser("gen", help="generate a synthetic pool")
    sp.add_argument("--preset", default="mixture", help="rational, mixture, random or model:<name>")
    sp.add_argument("--subjects", type=int, default=113)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("oracle-verify", help="compare encodings with brute-force enumeration")
    sp.add_argument("--universe", type=int, choices=[3, 4], default=3)
    sp.add_argument("--samples", type=int, default=0)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_oracle_verify)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (RevprefError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

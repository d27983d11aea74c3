"""Command line front end: attack, margins, evaluate, report."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .bench import GenerationError, evaluate_attack
from .classifiers import ClassifierSet
from .geometry import AttackBudget, margin
from .io import (METHODS, ExperimentConfig, ModelFormatError, emit_report,
                 load_attacks, load_dataset, load_model, run_experiment)


def _add_inputs(parser):
    parser.add_argument("--models", nargs="+", required=True,
                        help="model JSON files forming the classifier set")
    parser.add_argument("--dataset", required=True,
                        help="CSV dataset with columns f0..f{d-1},label")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="advgame",
        description="Randomized attacks against classifier sets and the "
                    "deterministic baselines they are measured against.")
    sub = parser.add_subparsers(dest="command", required=True)

    attack = sub.add_parser("attack", help="attack every dataset point and "
                                           "write a results directory")
    _add_inputs(attack)
    attack.add_argument("--method", required=True, choices=METHODS)
    attack.add_argument("--eps", type=float, required=True,
                        help="attack budget radius")
    attack.add_argument("--norm", choices=("l2", "linf"), default="l2")
    attack.add_argument("--rounds", type=int, default=30,
                        help="game rounds for the mwu methods")
    attack.add_argument("--beta", type=float, default=None,
                        help="update rate; default sqrt(ln n / rounds)")
    attack.add_argument("--pgd-iters", type=int, default=40)
    attack.add_argument("--seed", type=int, default=0)
    attack.add_argument("--pixel-box", action="store_true",
                        help="keep perturbed points inside [0, 1]^d")
    attack.add_argument("--tau", type=float, default=1e-6,
                        help="slack replacing strict region inequalities")
    attack.add_argument("--max-regions", type=int, default=60000)
    attack.add_argument("--out", default="results")
    attack.add_argument("--workers", type=int, default=1)

    margins = sub.add_parser("margins", help="print per-point, per-model "
                                             "margins for budget selection")
    _add_inputs(margins)

    evaluate = sub.add_parser("evaluate", help="rescore stored attacks "
                                               "against a classifier set")
    _add_inputs(evaluate)
    evaluate.add_argument("--results", required=True,
                          help="results.json (or its directory) from a run")
    evaluate.add_argument("--eps", type=float, default=None,
                          help="override the stored budget radius")
    evaluate.add_argument("--norm", choices=("l2", "linf"), default=None)

    report = sub.add_parser("report", help="aggregate finished runs into "
                                           "one table")
    report.add_argument("--root", default="results")
    return parser


def _cmd_attack(args) -> int:
    config = ExperimentConfig(
        model_paths=tuple(args.models), dataset_path=args.dataset,
        method=args.method, epsilon=args.eps, norm=args.norm,
        rounds=args.rounds, beta=args.beta, pgd_iterations=args.pgd_iters,
        seed=args.seed, pixel_box=args.pixel_box, strict_slack=args.tau,
        max_regions=args.max_regions, output_dir=args.out,
        workers=args.workers,
    )
    report = run_experiment(config)
    print(f"run: {config.run_name()}")
    for label, acc in zip([*map(str, range(len(report.per_classifier_accuracy)))],
                          report.per_classifier_accuracy):
        print(f"  accuracy[{label}]: {acc:.4f}")
    print(f"{report.method}: mean accuracy {report.mean_accuracy:.4f}, "
          f"max accuracy {report.max_accuracy:.4f}")
    return 0


def _cmd_margins(args) -> int:
    models = [load_model(p) for p in args.models]
    cset = ClassifierSet(models)
    dataset = load_dataset(args.dataset, dim=cset.dim,
                           num_classes=cset.num_classes)
    values = np.array([[margin(c, x, y) for c in cset.members]
                       for x, y in dataset])
    header = "point  " + "  ".join(f"model{i:>2}" for i in range(len(cset)))
    print(header)
    for row, point in enumerate(values):
        print(f"{row:>5}  " + "  ".join(f"{m:>7.4f}" for m in point))
    print(f"min margin: {values.min():.6f}")
    print(f"max margin: {values.max():.6f}")
    return 0


def _cmd_evaluate(args) -> int:
    models = [load_model(p) for p in args.models]
    cset = ClassifierSet(models)
    dataset = load_dataset(args.dataset, dim=cset.dim,
                           num_classes=cset.num_classes)
    results = args.results
    if not str(results).endswith(".json"):
        results = f"{results}/results.json"
    import json
    from pathlib import Path

    stored = json.loads(Path(results).read_text())["config"]
    budget = AttackBudget(args.norm or stored["norm"],
                          args.eps if args.eps is not None else stored["epsilon"])
    attacks, payload = load_attacks(results, budget)
    if len(attacks) != len(dataset):
        raise ValueError("stored attacks do not match the dataset length")
    report = evaluate_attack(cset, attacks, dataset, budget,
                             payload["summary"]["method"])
    print(f"{report.method}: mean accuracy {report.mean_accuracy:.4f}, "
          f"max accuracy {report.max_accuracy:.4f}")
    return 0


def _cmd_report(args) -> int:
    print(emit_report(args.root))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"attack": _cmd_attack, "margins": _cmd_margins,
                "evaluate": _cmd_evaluate, "report": _cmd_report}
    try:
        return handlers[args.command](args)
    except (ValueError, RuntimeError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

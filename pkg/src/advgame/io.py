"""Model and dataset files, experiment runs, and report emission.

Models travel as JSON (linear and network kinds round-trip; all-pairs and
flat-coefficient kinds convert to one-vs-all on load), datasets as CSV with
columns f0..f{d-1},label. Experiment outputs are deterministic functions of
the configuration: a rerun reproduces every artifact byte for byte.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bench import (AttackReport, best_individual_attack, ensemble_attack,
                    evaluate_attack, oracle_attack)
from .classifiers import (ClassifierSet, LinearClassifier, MLPClassifier,
                          MLPLayer, convert_all_pairs, convert_multivector,
                          AllPairsClassifier)
from .game import MwuConfig, RandomizedAttack, mwu_attack
from .geometry import AttackBudget, GeometryConfig
from .losses import zero_one_loss

METHODS = ("mwu-exact", "mwu-pgd", "oracle", "ensemble", "best-individual")


class ModelFormatError(ValueError):
    """A model file failed validation."""


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ModelFormatError(f"{where}: missing field {key!r}")
    return obj[key]


def _finite_array(value, where: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ModelFormatError(f"{where}: non-finite values")
    return arr


def load_model(path):
    """Read one classifier from JSON, converting pairwise and flat forms to
    one-vs-all. Malformed files raise ModelFormatError naming the problem."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise ModelFormatError(f"{path}: {err}") from err
    if not isinstance(payload, dict):
        raise ModelFormatError(f"{path}: expected a JSON object")
    kind = _require(payload, "kind", str(path))
    k = int(_require(payload, "num_classes", str(path)))
    d = int(_require(payload, "dim", str(path)))
    try:
        if kind == "linear":
            model = LinearClassifier(
                _finite_array(_require(payload, "weights", str(path)), f"{path}: weights"),
                _finite_array(_require(payload, "biases", str(path)), f"{path}: biases"),
            )
        elif kind == "mlp":
            layers = []
            for i, spec in enumerate(_require(payload, "layers", str(path))):
                layers.append(MLPLayer(
                    _finite_array(_require(spec, "weights", f"{path}: layer {i}"),
                                  f"{path}: layer {i} weights"),
                    _finite_array(_require(spec, "biases", f"{path}: layer {i}"),
                                  f"{path}: layer {i} biases"),
                    spec.get("activation", "relu"),
                ))
            model = MLPClassifier(layers)
        elif kind == "all_pairs":
            predictors = {}
            for entry in _require(payload, "predictors", str(path)):
                i, j = entry["classes"]
                predictors[(int(i), int(j))] = (
                    _finite_array(entry["weights"], f"{path}: pair ({i},{j})"),
                    float(entry["bias"]),
                )
            model = convert_all_pairs(AllPairsClassifier(k, d, predictors))
        elif kind == "multivector":
            coeff = _finite_array(_require(payload, "coefficients", str(path)),
                                  f"{path}: coefficients")
            model = convert_multivector(coeff, k, d)
        else:
            raise ModelFormatError(f"{path}: unknown kind {kind!r}")
    except (ValueError, KeyError, TypeError) as err:
        if isinstance(err, ModelFormatError):
            raise
        raise ModelFormatError(f"{path}: {err}") from err
    if model.num_classes != k or model.dim != d:
        raise ModelFormatError(
            f"{path}: declared num_classes={k}, dim={d} but arrays give "
            f"num_classes={model.num_classes}, dim={model.dim}")
    return model


def save_model(model, path):
    """Write a linear or network classifier as JSON (round-trips with
    load_model)."""
    path = Path(path)
    if isinstance(model, LinearClassifier):
        payload = {
            "kind": "linear",
            "num_classes": model.num_classes,
            "dim": model.dim,
            "weights": model.weights.tolist(),
            "biases": model.biases.tolist(),
        }
    elif isinstance(model, MLPClassifier):
        payload = {
            "kind": "mlp",
            "num_classes": model.num_classes,
            "dim": model.dim,
            "layers": [
                {"weights": l.weights.tolist(), "biases": l.biases.tolist(),
                 "activation": l.activation}
                for l in model.layers
            ],
        }
    else:
        raise ValueError("only linear and mlp models serialize; convert first")
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def save_dataset(dataset, path):
    path = Path(path)
    dataset = list(dataset)
    if not dataset:
        raise ValueError("dataset is empty")
    d = len(np.asarray(dataset[0][0]))
    lines = [",".join([f"f{i}" for i in range(d)] + ["label"])]
    for x, y in dataset:
        x = np.asarray(x, dtype=float)
        lines.append(",".join([repr(float(value)) for value in x] + [str(int(y))]))
    path.write_text("\n".join(lines) + "\n")


def load_dataset(path, dim=None, num_classes=None, box=None):
    """Read (x, y) rows from CSV. Checks finiteness, label range, and the
    pixel box when one is given."""
    path = Path(path)
    lines = path.read_text().strip().splitlines()
    if not lines or not lines[0]:
        raise ValueError(f"{path}: missing header")
    header = lines[0].split(",")
    if header[-1] != "label" or any(not h.startswith("f") for h in header[:-1]):
        raise ValueError(f"{path}: expected header f0..f{{d-1}},label")
    d = len(header) - 1
    if dim is not None and d != dim:
        raise ValueError(f"{path}: {d} features, models expect {dim}")
    dataset = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != d + 1:
            raise ValueError(f"{path}:{lineno}: expected {d + 1} columns")
        try:
            x = np.array([float(c) for c in cells[:-1]])
            y = int(cells[-1])
        except ValueError as err:
            raise ValueError(f"{path}:{lineno}: {err}") from err
        if not np.all(np.isfinite(x)):
            raise ValueError(f"{path}:{lineno}: non-finite feature")
        if num_classes is not None and not 0 <= y < num_classes:
            raise ValueError(f"{path}:{lineno}: label {y} out of range")
        if box is not None and (np.any(x < box[0]) or np.any(x > box[1])):
            raise ValueError(f"{path}:{lineno}: point outside the pixel box")
        dataset.append((x, y))
    if not dataset:
        warnings.warn(f"{path}: header only, no data rows", stacklevel=2)
    return dataset


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one attack run depends on. output_dir and workers affect
    where and how fast results land, never what they contain."""

    model_paths: tuple[str, ...]
    dataset_path: str
    method: str
    epsilon: float
    norm: str = "l2"
    rounds: int = 30
    beta: float | None = None
    pgd_iterations: int = 40
    seed: int = 0
    pixel_box: bool = False
    strict_slack: float = 1e-6
    qp_tolerance: float = 1e-8
    max_regions: int = 60000
    output_dir: str = "results"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "model_paths", tuple(str(p) for p in self.model_paths))
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; pick from {METHODS}")
        if self.workers < 1:
            raise ValueError("workers must be positive")

    def run_name(self) -> str:
        stamp = {k: v for k, v in dataclasses.asdict(self).items()
                 if k not in ("output_dir", "workers")}
        digest = hashlib.sha256(
            json.dumps(stamp, sort_keys=True).encode()
        ).hexdigest()[:8]
        return f"{self.method}-{digest}-seed{self.seed}"


def _geometry_from(config: ExperimentConfig) -> GeometryConfig:
    return GeometryConfig(
        strict_slack=config.strict_slack,
        qp_tolerance=config.qp_tolerance,
        max_regions=config.max_regions,
        box=(0.0, 1.0) if config.pixel_box else None,
    )


def _attack_point(cset, x, y, config: ExperimentConfig):
    """Attack one point; returns (attack, per-round attack matrix or None)."""
    budget = AttackBudget(config.norm, config.epsilon)
    geometry = _geometry_from(config)
    if config.method in ("mwu-exact", "mwu-pgd"):
        cfg = MwuConfig(
            budget=budget, rounds=config.rounds, beta=config.beta,
            oracle="exact" if config.method == "mwu-exact" else "pgd",
            geometry=geometry, pgd_iterations=config.pgd_iterations,
            pixel_box=config.pixel_box,
        )
        trace = mwu_attack(cset, x, y, cfg)
        return trace.q_star, trace
    if config.method == "oracle":
        v = oracle_attack(cset, x, y, budget, geometry,
                          oracle="exact" if cset.all_linear else "pgd",
                          pgd_iterations=config.pgd_iterations)
    elif config.method == "ensemble":
        v = ensemble_attack(cset, x, y, budget, geometry,
                            pgd_iterations=config.pgd_iterations)
    else:
        v = best_individual_attack(cset, x, y, budget, geometry,
                                   pgd_iterations=config.pgd_iterations)
    return v, None


def _attack_indexed(args):
    cset, x, y, config, index = args
    return index, _attack_point(cset, x, y, config)


def _convergence_series(cset, dataset, traces):
    """Accuracy of the running uniform attack after each round: row t scores
    the uniform distribution over the first t+1 responses."""
    rounds = traces[0].attacks.shape[0]
    n = len(cset)
    cumulative = np.zeros((rounds, n))
    for (x, y), trace in zip(dataset, traces):
        losses = np.array([
            [zero_one_loss(c, x, v, y) for c in cset.members]
            for v in trace.attacks
        ])
        cumulative += np.cumsum(losses, axis=0) / np.arange(1, rounds + 1)[:, None]
    accuracy = 1.0 - cumulative / len(dataset)
    return accuracy.mean(axis=1), accuracy.max(axis=1)


def run_experiment(config: ExperimentConfig) -> AttackReport:
    """Load inputs, attack every point, score the set, and write artifacts.

    Writes results.json (attacks and traces), summary.csv (method, mean, max),
    and for the game methods convergence.csv (accuracy by round) under
    output_dir/run_name(). Fully deterministic, including across workers.
    """
    models = [load_model(p) for p in config.model_paths]
    cset = ClassifierSet(models, labels=[Path(p).stem for p in config.model_paths])
    if config.method == "mwu-exact" and not cset.all_linear:
        raise ValueError("mwu-exact needs linear models; use mwu-pgd for networks")
    dataset = load_dataset(config.dataset_path, dim=cset.dim,
                           num_classes=cset.num_classes,
                           box=(0.0, 1.0) if config.pixel_box else None)
    budget = AttackBudget(config.norm, config.epsilon)

    jobs = [(cset, x, y, config, i) for i, (x, y) in enumerate(dataset)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = dict(pool.map(_attack_indexed, jobs))
    else:
        outcomes = dict(map(_attack_indexed, jobs))
    attacks = [outcomes[i][0] for i in range(len(dataset))]
    traces = [outcomes[i][1] for i in range(len(dataset))]

    report = evaluate_attack(cset, attacks, dataset, budget, config.method)

    run_dir = Path(config.output_dir) / config.run_name()
    run_dir.mkdir(parents=True, exist_ok=True)
    points = []
    for i, ((x, y), attack, trace) in enumerate(zip(dataset, attacks, traces)):
        entry = {"index": i, "label": int(y)}
        if isinstance(attack, RandomizedAttack):
            entry["vectors"] = attack.vectors.tolist()
            entry["probs"] = attack.probs.tolist()
        else:
            entry["vectors"] = [np.asarray(attack).tolist()]
            entry["probs"] = [1.0]
        if trace is not None:
            entry["round_payoffs"] = trace.round_payoffs.tolist()
            entry["value_estimate"] = trace.value_estimate
            entry["p_star"] = trace.p_star.probs.tolist()
        points.append(entry)
    payload = {
        "config": {k: v for k, v in dataclasses.asdict(config).items()
                   if k not in ("output_dir", "workers")},
        "summary": {
            "method": report.method,
            "mean_accuracy": report.mean_accuracy,
            "max_accuracy": report.max_accuracy,
            "per_classifier_accuracy": list(report.per_classifier_accuracy),
        },
        "points": points,
    }
    (run_dir / "results.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n")
    (run_dir / "summary.csv").write_text(
        "method,mean_accuracy,max_accuracy\n"
        f"{report.method},{report.mean_accuracy!r},{report.max_accuracy!r}\n")
    live_traces = [t for t in traces if t is not None]
    if live_traces:
        mean_series, max_series = _convergence_series(cset, dataset, live_traces)
        lines = ["round,mean_accuracy,max_accuracy"]
        lines += [f"{t + 1},{m!r},{mx!r}"
                  for t, (m, mx) in enumerate(zip(mean_series, max_series))]
        (run_dir / "convergence.csv").write_text("\n".join(lines) + "\n")
    return report


def load_attacks(results_path, budget: AttackBudget):
    """Rehydrate per-point attacks from a results.json, re-checking every
    vector against the budget."""
    payload = json.loads(Path(results_path).read_text())
    attacks = []
    for entry in payload["points"]:
        vectors = np.asarray(entry["vectors"], dtype=float)
        probs = np.asarray(entry["probs"], dtype=float)
        attacks.append(RandomizedAttack(vectors, probs, budget))
    return attacks, payload


def emit_report(results_root) -> str:
    """Aggregate finished runs under a directory into one aligned table,
    copying each run's convergence series next to it for plotting. Returns
    the table; raises if there is nothing to aggregate."""
    root = Path(results_root)
    runs = sorted(p.parent for p in root.glob("*/results.json"))
    if not runs:
        raise ValueError(f"no results found under {root}")
    rows = []
    for run in runs:
        summary = json.loads((run / "results.json").read_text())["summary"]
        rows.append((run.name, summary["method"], summary["mean_accuracy"],
                     summary["max_accuracy"]))
    rows.sort(key=lambda r: (r[3], r[2], r[0]))
    name_width = max(len(r[0]) for r in rows)
    method_width = max(max(len(r[1]) for r in rows), len("method"))
    lines = [f"{'run':<{name_width}}  {'method':<{method_width}}  "
             f"{'mean_acc':>9}  {'max_acc':>9}"]
    for name, method, mean, mx in rows:
        lines.append(f"{name:<{name_width}}  {method:<{method_width}}  "
                     f"{mean:>9.4f}  {mx:>9.4f}")
    table = "\n".join(lines)
    for run in runs:
        series = run / "convergence.csv"
        if series.exists():
            (root / f"plot-{run.name}.csv").write_text(series.read_text())
    return table

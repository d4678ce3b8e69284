"""Config-driven experiment runners: seeded sweeps with CSV, JSON, PGM, and SVG output."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .adversary import CorruptionStrategy, honest_partition, select_corrupt
from .attacks import InversionConfig, gradient_inversion, matched_ssim, membership_attack_eval, write_pgm
from .consensus import metropolis_weights, run_consensus, uniform_complete_weights, verify_conditions
from .fl import GradientBundle, MLPClassifier, make_synthetic_images, split_among_nodes
from .graphs import Graph, generate_connected, generate_poisson, generate_power_law
from .plotting import line_plot_svg
from .privacy import (
    PrivateDataModel,
    analytic_mi_asymptotic,
    analytic_mi_exact,
    network_privacy_loss,
    simulate_component_mi,
)
from .seeding import derive_seed

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "parse_config_text",
    "load_config",
    "config_hash",
    "run_experiment",
    "run_mi_curve",
    "run_topology_attack",
    "run_inversion_quality",
    "run_consensus_check",
    "partition_report",
    "render_mi_curve_svg",
    "render_topology_attack_svg",
    "render_inversion_svg",
    "read_csv_rows",
]

EXPERIMENTS = ("mi_curve", "topology_attack", "inversion_quality", "consensus_check")


class ConfigError(ValueError):
    """Bad experiment configuration: unknown key, bad value, or missing seed."""


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_ints(text: str) -> tuple:
    return tuple(int(part) for part in text.split(",") if part.strip())


def _parse_floats(text: str) -> tuple:
    return tuple(float(part) for part in text.split(",") if part.strip())


_COMMON = {
    "master_seed": (int, None),
    "out": (str, "out"),
    "workers": (int, 1),
}

# per-experiment key -> (parser, default); unknown keys are hard errors
_SCHEMAS = {
    "mi_curve": {
        **_COMMON,
        "m_min": (int, 2),
        "m_max": (int, 50),
        "m_values": (_parse_ints, ()),
        "samples": (int, 5000),
        "k": (int, 3),
        "repeats": (int, 1),
    },
    "topology_attack": {
        **_COMMON,
        "n": (int, 10),
        "m": (int, 15),
        # heavier tail than the generator-wide default: a truncated 2.5 law
        # rarely yields a real hub on 10 nodes, and the topology contrast
        # needs hub-dominated samples
        "gamma": (float, 2.2),
        "strategy": (str, "degree"),
        "adaptive": (_parse_bool, False),
        # a 10-node graph is fully shattered past fraction ~0.3, where the
        # two topologies stop being distinguishable
        "fractions": (_parse_floats, (0.0, 0.1, 0.2, 0.3)),
        "runs": (int, 200),
        "membership": (_parse_bool, True),
        "rounds": (int, 1),
        "samples_per_node": (int, 2),
        "hidden": (int, 96),
        "classes": (int, 8),
        "image_size": (int, 8),
        "pattern_strength": (float, 0.2),
        "eta": (float, 0.1),
    },
    "inversion_quality": {
        **_COMMON,
        "n": (int, 50),
        "m": (int, 100),
        "mk_values": (_parse_ints, (1, 2, 4)),
        "trials": (int, 20),
        # fixed attack budget per component size; calibrated so one sample
        # inverts near-exactly while larger sums visibly degrade
        "iters": (int, 60),
        "lr": (float, 0.1),
        "restarts": (int, 2),
        "hidden": (int, 4),
        "classes": (int, 8),
        "image_size": (int, 8),
        "pattern_strength": (float, 0.5),
        "duplicate_variant": (_parse_bool, True),
    },
    "consensus_check": {
        **_COMMON,
        "topology": (str, "poisson"),
        "n": (int, 100),
        "m": (int, 300),
        "gamma": (float, 2.5),
        "runs": (int, 100),
        "tol": (float, 1e-8),
        "r_max": (int, 100_000),
        "dimension": (int, 1),
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved settings for one experiment; only schema keys are populated."""

    experiment: str
    values: tuple  # sorted (key, value) pairs

    def __getattr__(self, name):
        for key, value in self.values:
            if key == name:
                return value
        raise AttributeError(name)

    def as_dict(self) -> dict:
        return dict(self.values)


def _resolve(experiment: str, pairs: dict) -> ExperimentConfig:
    if experiment not in _SCHEMAS:
        raise ConfigError(f"unknown experiment {experiment!r}; expected one of {EXPERIMENTS}")
    schema = _SCHEMAS[experiment]
    resolved = {key: default for key, (_, default) in schema.items()}
    for key, raw in pairs.items():
        if key not in schema:
            raise ConfigError(f"unknown config key {key!r} for experiment {experiment!r}")
        parser, _ = schema[key]
        try:
            resolved[key] = parser(raw) if isinstance(raw, str) else raw
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from None
    if resolved.get("master_seed") is None:
        raise ConfigError("master_seed is required (wall-clock seeding is not allowed)")
    return ExperimentConfig(experiment=experiment, values=tuple(sorted(resolved.items())))


def parse_config_text(text: str, experiment: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Parse 'key = value' lines; '#' starts a comment, blank lines are skipped.

    ``experiment`` may come from the file (an ``experiment`` key) or from the
    caller (CLI subcommand); if both are given they must agree. Unknown keys
    are errors so a typo cannot silently corrupt an experiment.
    """
    pairs: dict[str, str] = {}
    file_experiment = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "experiment":
            file_experiment = value
            continue
        if key in pairs:
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        pairs[key] = value
    if file_experiment is not None and experiment is not None and file_experiment != experiment:
        raise ConfigError(
            f"config is for experiment {file_experiment!r} but {experiment!r} was requested"
        )
    chosen = experiment or file_experiment
    if chosen is None:
        raise ConfigError("no experiment named in config or on the command line")
    merged = dict(pairs)
    merged.update(overrides or {})
    return _resolve(chosen, merged)


def load_config(path: str | None, experiment: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    if path is None:
        if experiment is None:
            raise ConfigError("no experiment named in config or on the command line")
        return _resolve(experiment, dict(overrides or {}))
    with open(path) as fh:
        return parse_config_text(fh.read(), experiment=experiment, overrides=overrides)


def config_hash(cfg: ExperimentConfig) -> str:
    """Platform-stable hash of the fully resolved configuration."""
    canon = "\n".join(f"{k}={v!r}" for k, v in (("experiment", cfg.experiment), *cfg.values))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: str, header: list, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])


def read_csv_rows(path: str) -> tuple[list, list]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader]


def _map_tasks(fn, tasks: list, workers: int) -> list:
    """Run tasks (argument tuples) and return results in task order."""
    if workers <= 1:
        return [fn(*task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *task) for task in tasks]
        return [f.result() for f in futures]


def _write_record(cfg: ExperimentConfig, out_dir: str, seeds: list, summary: dict) -> str:
    record = {
        "experiment": cfg.experiment,
        "config": {k: list(v) if isinstance(v, tuple) else v for k, v in cfg.values},
        "config_hash": config_hash(cfg),
        "seeds": seeds,
        "summary": summary,
    }
    path = os.path.join(out_dir, "run_record.json")
    with open(path, "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _graph_maker(topology: str, n: int, m: int, gamma: float):
    if topology == "poisson":
        return lambda seed: generate_poisson(n, m, seed)
    if topology == "power_law":
        return lambda seed: generate_power_law(n, m, gamma, seed)
    raise ConfigError(f"unknown topology {topology!r}")


def _strategy_for(cfg: ExperimentConfig) -> CorruptionStrategy:
    if cfg.strategy == "degree":
        return CorruptionStrategy.degree_targeted(fraction=0.0, adaptive=cfg.adaptive)
    if cfg.strategy == "random":
        return CorruptionStrategy.uniform_random(fraction=0.0)
    raise ConfigError(f"unknown corruption strategy {cfg.strategy!r}")


# --------------------------------------------------------------------------
# mi_curve
# --------------------------------------------------------------------------

def _mi_component_sizes(cfg: ExperimentConfig) -> tuple:
    if cfg.m_values:
        return tuple(cfg.m_values)
    if not 2 <= cfg.m_min <= cfg.m_max <= 1000:
        raise ConfigError("component sizes must satisfy 2 <= m_min <= m_max <= 1000")
    return tuple(range(cfg.m_min, cfg.m_max + 1))


def _mi_task(cfg: ExperimentConfig, dist_kind: str, m: int):
    model = PrivateDataModel.gaussian() if dist_kind == "gaussian" else PrivateDataModel.uniform()
    seed = derive_seed(cfg.master_seed, "mi_curve", dist_kind, m)
    est = simulate_component_mi(model, m, runs=cfg.samples, k=cfg.k, seed=seed, repeats=cfg.repeats)
    rows = [
        [dist_kind, m, "ksg", cfg.k, cfg.samples, est.value, est.std_error, seed],
        [dist_kind, m, "analytic_exact", None, None, analytic_mi_exact(m), None, seed],
        [dist_kind, m, "analytic_asymptotic", None, None, analytic_mi_asymptotic(m), None, seed],
    ]
    return rows


MI_CURVE_HEADER = ["distribution", "m", "method", "k", "runs", "mi_nats", "std_error", "seed"]


def render_mi_curve_svg(rows: list) -> str:
    series = []
    for dist in ("gaussian", "uniform"):
        pts = sorted((int(r[1]), float(r[5])) for r in rows if r[0] == dist and r[2] == "ksg")
        if pts:
            series.append((f"{dist} (ksg)", [p[0] for p in pts], [p[1] for p in pts]))
    for method, label in (("analytic_exact", "exact"), ("analytic_asymptotic", "asymptotic")):
        pts = sorted({(int(r[1]), float(r[5])) for r in rows if r[2] == method})
        if pts:
            series.append((label, [p[0] for p in pts], [p[1] for p in pts]))
    return line_plot_svg(series, "Leakage vs honest component size", "component size m", "mutual information (nats)")


def run_mi_curve(cfg: ExperimentConfig) -> dict:
    """Estimated and closed-form leakage for each component size and distribution."""
    sizes = _mi_component_sizes(cfg)
    out_dir = cfg.out
    os.makedirs(out_dir, exist_ok=True)
    tasks = [(cfg, dist, m) for dist in ("gaussian", "uniform") for m in sizes]
    nested = _map_tasks(_mi_task, tasks, cfg.workers)
    rows = [row for group in nested for row in group]
    csv_path = os.path.join(out_dir, "mi_curve.csv")
    _write_csv(csv_path, MI_CURVE_HEADER, rows)
    svg_path = os.path.join(out_dir, "mi_curve.svg")
    with open(svg_path, "w") as fh:
        fh.write(render_mi_curve_svg(rows))
    summary = {}
    for dist in ("gaussian", "uniform"):
        sims = [float(r[5]) for r in rows if r[0] == dist and r[2] == "ksg"]
        exact = [float(r[5]) for r in rows if r[0] == dist and r[2] == "analytic_exact"]
        gaps = [abs(s - e) for s, e in zip(sims, exact)]
        summary[dist] = {"mean": float(np.mean(sims)), "std": float(np.std(sims)), "count": len(sims),
                         "max_gap_to_exact": float(max(gaps))}
    record = _write_record(cfg, out_dir, sorted({int(r[7]) for r in rows}), summary)
    return {"csv": csv_path, "svg": svg_path, "record": record}


# --------------------------------------------------------------------------
# topology_attack
# --------------------------------------------------------------------------

TOPOLOGY_HEADER = [
    "topology", "fraction", "run", "seed", "largest_component", "component_count",
    "singletons", "fully_revealed", "mean_mi", "auc", "success_rate",
]


def _membership_trial(g: Graph, partition, cfg: ExperimentConfig, seed: int):
    """Gradient-cosine membership attack on one trained trial.

    Model aggregation uses the exact gradient average here; the consensus
    loop reproduces it to tolerance and is validated separately, so the
    sweep does not pay the iteration cost per trial.
    """
    honest = sorted(partition.honest_nodes)
    if not honest:
        return None, None
    d = cfg.image_size**2
    total = g.n * cfg.samples_per_node
    inputs, labels = make_synthetic_images(
        total + len(honest), cfg.classes, derive_seed(seed, "data"),
        size=cfg.image_size, pattern_strength=cfg.pattern_strength,
    )
    datasets = split_among_nodes(inputs[:total], labels[:total], g.n)
    pool_x, pool_y = inputs[total:], labels[total:]
    model = MLPClassifier.init(d, cfg.hidden, cfg.classes, derive_seed(seed, "model"))
    bundles, refs = [], []
    for t in range(cfg.rounds):
        refs.append(model)
        grads = np.stack([model.gradient(ds.inputs, ds.labels) for ds in datasets])
        bundles.append(GradientBundle(grads, t))
        model = model.with_params(model.params - cfg.eta * grads.mean(axis=0))
    members = [
        (datasets[v].inputs[0], int(datasets[v].labels[0]), partition.component_of[v])
        for v in honest
    ]
    nonmembers = [
        (pool_x[i], int(pool_y[i]), members[i][2]) for i in range(len(honest))
    ]
    outcome = membership_attack_eval(partition, bundles, refs, members, nonmembers)
    return outcome.auc, outcome.success_rate


def _topology_task(cfg: ExperimentConfig, topology: str, fraction: float, run: int):
    seed = derive_seed(cfg.master_seed, "topology_attack", topology, fraction, run)
    make = _graph_maker(topology, cfg.n, cfg.m, cfg.gamma)
    g = generate_connected(make, derive_seed(seed, "graph"))
    strategy = _strategy_for(cfg).with_fraction(fraction)
    corrupt = select_corrupt(g, strategy, derive_seed(seed, "select"))
    partition = honest_partition(g, corrupt)
    report = network_privacy_loss(partition)
    auc = success = None
    if cfg.membership:
        auc, success = _membership_trial(g, partition, cfg, seed)
    return [
        topology, fraction, run, seed,
        max(partition.sizes, default=0), partition.count, partition.singleton_count,
        report.fully_revealed, report.mean_mi, auc, success,
    ]


def render_topology_attack_svg(rows: list) -> str:
    series = []
    for col, name in ((10, "success"), (4, "largest comp")):
        for topology in ("poisson", "power_law"):
            pts: dict[float, list] = {}
            for r in rows:
                if r[0] != topology or r[col] == "":
                    continue
                pts.setdefault(float(r[1]), []).append(float(r[col]))
            if pts:
                xs = sorted(pts)
                series.append((f"{topology} {name}", xs, [float(np.mean(pts[x])) for x in xs]))
    return line_plot_svg(series, "Attack outcome vs corrupt fraction", "corrupt fraction", "mean value")


def run_topology_attack(cfg: ExperimentConfig) -> dict:
    """Per-topology sweep of honest-component stats, analytic leakage, and membership attack."""
    out_dir = cfg.out
    os.makedirs(out_dir, exist_ok=True)
    for fraction in cfg.fractions:
        if not 0.0 <= fraction <= 1.0:
            raise ConfigError(f"corrupt fraction {fraction} outside [0, 1]")
    tasks = [
        (cfg, topology, fraction, run)
        for topology in ("poisson", "power_law")
        for fraction in cfg.fractions
        for run in range(cfg.runs)
    ]
    rows = _map_tasks(_topology_task, tasks, cfg.workers)
    csv_path = os.path.join(out_dir, "topology_attack.csv")
    _write_csv(csv_path, TOPOLOGY_HEADER, rows)
    svg_path = os.path.join(out_dir, "topology_attack.svg")
    with open(svg_path, "w") as fh:
        fh.write(render_topology_attack_svg([[_format_cell(v) for v in r] for r in rows]))
    summary = {}
    for topology in ("poisson", "power_law"):
        for fraction in cfg.fractions:
            sel = [r for r in rows if r[0] == topology and r[1] == fraction]
            stats = {"count": len(sel), "mean_largest": float(np.mean([r[4] for r in sel]))}
            succ = [r[10] for r in sel if r[10] is not None]
            if succ:
                stats["mean_success"] = float(np.mean(succ))
                stats["std_success"] = float(np.std(succ))
            mi = [r[8] for r in sel if r[8] is not None]
            if mi:
                stats["mean_mi"] = float(np.mean(mi))
            summary[f"{topology}@{fraction:g}"] = stats
    record = _write_record(cfg, out_dir, [int(r[3]) for r in rows], summary)
    return {"csv": csv_path, "svg": svg_path, "record": record}


# --------------------------------------------------------------------------
# inversion_quality
# --------------------------------------------------------------------------

INVERSION_HEADER = ["m_k", "variant", "trial", "seed", "ssim_mean", "final_loss"]


def _grow_component(g: Graph, size: int, rng) -> frozenset:
    """Connected node set of the given size, grown breadth-first from a random start."""
    start = int(rng.integers(g.n))
    seen = [start]
    seen_set = {start}
    idx = 0
    while len(seen) < size and idx < len(seen):
        for v in g.adjacency[seen[idx]]:
            if v not in seen_set:
                seen.append(v)
                seen_set.add(v)
                if len(seen) == size:
                    break
        idx += 1
    return frozenset(seen[:size])


def _inversion_task(cfg: ExperimentConfig, m_k: int, variant: str, trial: int):
    seed = derive_seed(cfg.master_seed, "inversion", m_k, variant, trial)
    make = _graph_maker("poisson", cfg.n, cfg.m, cfg.gamma)
    g = generate_connected(make, derive_seed(seed, "graph"))
    rng = np.random.default_rng(derive_seed(seed, "component"))
    component = _grow_component(g, m_k, rng)
    partition = honest_partition(g, frozenset(range(g.n)) - component)
    assert len(partition.components) == 1 and len(partition.components[0]) == m_k

    if variant == "duplicate":
        labels = rng.choice(cfg.classes, size=m_k, replace=False)
        labels[1] = labels[0]
    else:
        labels = rng.choice(cfg.classes, size=m_k, replace=False)
    inputs, labels = make_synthetic_images(
        m_k, cfg.classes, derive_seed(seed, "data"),
        size=cfg.image_size, pattern_strength=cfg.pattern_strength, labels=labels,
    )
    model = MLPClassifier.init(cfg.image_size**2, cfg.hidden, cfg.classes, derive_seed(seed, "model"))
    # batch of one per node: the component's observable is the sum of per-sample gradients
    target = model.gradient(inputs, labels, mean=False)
    result = gradient_inversion(
        target, model, m_k, labels=labels,
        config=InversionConfig(iters=cfg.iters, lr=cfg.lr, restarts=cfg.restarts,
                               seed=derive_seed(seed, "attack")),
    )
    values = matched_ssim(inputs, result.inputs, labels=labels)
    row = [m_k, variant, trial, seed, float(np.mean(values)), result.loss]
    images = None
    if trial == 0:
        side = cfg.image_size
        images = [
            (f"inversion_m{m_k}_{variant}_orig{j}.pgm", inputs[j].reshape(side, side))
            for j in range(m_k)
        ] + [
            (f"inversion_m{m_k}_{variant}_recon{j}.pgm", result.inputs[j].reshape(side, side))
            for j in range(m_k)
        ]
    return row, images


def render_inversion_svg(rows: list) -> str:
    series = []
    for variant in ("unique", "duplicate"):
        pts: dict[int, list] = {}
        for r in rows:
            if r[1] != variant:
                continue
            pts.setdefault(int(r[0]), []).append(float(r[4]))
        if pts:
            xs = sorted(pts)
            series.append((variant, xs, [float(np.mean(pts[x])) for x in xs]))
    return line_plot_svg(series, "Reconstruction quality vs component size", "component size m_k", "mean SSIM")


def run_inversion_quality(cfg: ExperimentConfig) -> dict:
    """Gradient-inversion image quality per honest-component size."""
    out_dir = cfg.out
    os.makedirs(out_dir, exist_ok=True)
    if cfg.trials < 10:
        raise ConfigError("inversion needs at least 10 trials per point")
    if max(cfg.mk_values) > cfg.classes:
        raise ConfigError("unique labels need classes >= max component size")
    variants = [(m_k, "unique") for m_k in cfg.mk_values]
    if cfg.duplicate_variant:
        variants += [(m_k, "duplicate") for m_k in cfg.mk_values if m_k >= 2]
    tasks = [(cfg, m_k, variant, trial) for m_k, variant in variants for trial in range(cfg.trials)]
    results = _map_tasks(_inversion_task, tasks, cfg.workers)
    rows = [row for row, _ in results]
    for _, images in results:
        if images:
            for name, img in images:
                write_pgm(img, os.path.join(out_dir, name))
    csv_path = os.path.join(out_dir, "inversion.csv")
    _write_csv(csv_path, INVERSION_HEADER, rows)
    svg_path = os.path.join(out_dir, "inversion.svg")
    with open(svg_path, "w") as fh:
        fh.write(render_inversion_svg([[_format_cell(v) for v in r] for r in rows]))
    summary = {}
    for m_k, variant in variants:
        vals = [r[4] for r in rows if r[0] == m_k and r[1] == variant]
        summary[f"m{m_k}_{variant}"] = {
            "mean": float(np.mean(vals)), "std": float(np.std(vals)), "count": len(vals),
        }
    record = _write_record(cfg, out_dir, [int(r[3]) for r in rows], summary)
    return {"csv": csv_path, "svg": svg_path, "record": record}


# --------------------------------------------------------------------------
# consensus_check
# --------------------------------------------------------------------------

def _complete_graph(n: int) -> Graph:
    return Graph(n, frozenset((i, j) for i in range(n) for j in range(i + 1, n)))


def _consensus_task(cfg: ExperimentConfig, run: int):
    seed = derive_seed(cfg.master_seed, "consensus_check", run)
    if cfg.topology == "complete":
        g = _complete_graph(cfg.n)
        a = uniform_complete_weights(cfg.n)
    else:
        make = _graph_maker(cfg.topology, cfg.n, cfg.m, cfg.gamma)
        g = generate_connected(make, derive_seed(seed, "graph"))
        a = metropolis_weights(g)
    report = verify_conditions(a, tol=1e-9, graph=g)
    rng = np.random.default_rng(derive_seed(seed, "inputs"))
    x0 = rng.normal(size=(g.n, cfg.dimension))
    result = run_consensus(g, a, x0, tol=cfg.tol, r_max=cfg.r_max, record=True)
    target_mean = x0.mean(axis=0)
    drift = 0.0
    for r in range(result.transcript.rounds):
        drift = max(drift, float(np.max(np.abs(result.transcript.state(r).mean(axis=0) - target_mean))))
    drift = max(drift, float(np.max(np.abs(result.x.mean(axis=0) - target_mean))))
    final_err = float(np.max(np.abs(result.x - target_mean)))
    return {
        "run": run,
        "seed": seed,
        "n": g.n,
        "edges": g.edge_count,
        "radius": report.radius,
        "row_ok": report.row_ok,
        "col_ok": report.col_ok,
        "contraction_ok": report.contraction_ok,
        "sparsity_ok": report.sparsity_ok,
        "rounds_to_tol": result.rounds,
        "converged": result.converged,
        "final_error": final_err,
        "mass_drift": drift,
    }


def run_consensus_check(cfg: ExperimentConfig) -> dict:
    """Condition checks, spectral radii, and rounds-to-tolerance over fresh graphs."""
    out_dir = cfg.out
    os.makedirs(out_dir, exist_ok=True)
    runs = _map_tasks(_consensus_task, [(cfg, run) for run in range(cfg.runs)], cfg.workers)
    report = {
        "experiment": cfg.experiment,
        "config_hash": config_hash(cfg),
        "runs": runs,
        "all_conditions_pass": all(r["row_ok"] and r["col_ok"] and r["contraction_ok"] for r in runs),
        "all_converged": all(r["converged"] for r in runs),
        "max_radius": max(r["radius"] for r in runs),
        "max_rounds": max(r["rounds_to_tol"] for r in runs),
        "max_mass_drift": max(r["mass_drift"] for r in runs),
    }
    path = os.path.join(out_dir, "consensus_check.json")
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    record = _write_record(cfg, out_dir, [r["seed"] for r in runs], {
        "all_conditions_pass": report["all_conditions_pass"],
        "all_converged": report["all_converged"],
        "max_rounds": report["max_rounds"],
    })
    return {"json": path, "record": record}


def run_experiment(cfg: ExperimentConfig) -> dict:
    runner = {
        "mi_curve": run_mi_curve,
        "topology_attack": run_topology_attack,
        "inversion_quality": run_inversion_quality,
        "consensus_check": run_consensus_check,
    }[cfg.experiment]
    return runner(cfg)


# --------------------------------------------------------------------------
# one-shot partition query (CLI `partition` subcommand)
# --------------------------------------------------------------------------

def partition_report(g: Graph, corrupt) -> dict:
    """JSON-ready honest-partition summary with per-node analytic leakage."""
    part = honest_partition(g, corrupt)
    privacy = network_privacy_loss(part)
    per_node = {str(v): (None if math.isinf(mi) else mi) for v, mi in privacy.per_node}
    return {
        "n": g.n,
        "corrupt": sorted(part.corrupt),
        "components": [sorted(c) for c in part.components],
        "sizes": list(part.sizes),
        "component_count": part.count,
        "fully_revealed": privacy.fully_revealed,
        "mean_mi_nats": privacy.mean_mi,
        "per_node_mi_nats": per_node,
    }

"""Experiment runner: scenario configs in, metric/percentile/trace CSVs out.

Usage: ranho run --spec experiment.json --out results/ [--seeds 1,2,3]
               [--mode compare]

Log verbosity comes from the RANHO_LOG environment variable (DEBUG, INFO,
WARNING; default WARNING). Plots are not rendered; every artifact is a
plot-ready CSV plus a manifest with the config hash.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import cosine_matrix, pca_project_2d, percentiles
from .baselines import LEARNED_KINDS, RULE_KINDS
from .runner import run_episode
from .scenarios import FACTORIES
from .sim.config import ConfigError, ScenarioConfig, config_hash
from .trainer import PpoConfig, TrainVariant, load_checkpoint, train

log = logging.getLogger("ranho")

MODES = ("train", "eval", "compare", "ablate", "analyze")


@dataclass
class ExperimentSpec:
    scenario: ScenarioConfig
    mode: str = "eval"
    seeds: list[int] = field(default_factory=lambda: [0])
    duration_ms: int = 30_000
    controllers: dict[int, str] = field(default_factory=dict)
    compare: list[str] = field(default_factory=list)
    checkpoints: dict[str, str] = field(default_factory=dict)
    traffic_case: str | None = None
    train_iterations: int = 50
    train_seed: int = 0
    ppo: PpoConfig = field(default_factory=PpoConfig)
    variant: TrainVariant = field(default_factory=TrainVariant)
    embedding_trace: str | None = None      # analyze-mode input CSV
    collect_embeddings: bool = False
    raw: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentSpec":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}")
        return cls.from_dict(data, base_dir=path.parent)

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path = Path(".")) -> "ExperimentSpec":
        if "scenario" not in data:
            raise ConfigError("spec.scenario: required (path or {factory, args})")
        sc = data["scenario"]
        if isinstance(sc, str):
            scenario = ScenarioConfig.load(base_dir / sc)
        elif isinstance(sc, dict) and "factory" in sc:
            name = sc["factory"]
            if name not in FACTORIES:
                raise ConfigError(f"spec.scenario.factory: unknown factory {name!r}; "
                                  f"known: {sorted(FACTORIES)}")
            scenario = FACTORIES[name](**sc.get("args", {}))
        elif isinstance(sc, dict):
            scenario = ScenarioConfig.from_dict(sc)
        else:
            raise ConfigError("spec.scenario: must be a path, inline object or factory ref")
        mode = data.get("mode", "eval")
        if mode not in MODES:
            raise ConfigError(f"spec.mode: must be one of {MODES}, got {mode!r}")
        seeds = data.get("seeds", [0])
        if not isinstance(seeds, list) or not seeds:
            raise ConfigError("spec.seeds: non-empty list required")
        controllers = {int(k): v for k, v in data.get("controllers", {}).items()}
        for ue, kind in controllers.items():
            if kind not in RULE_KINDS and kind not in LEARNED_KINDS:
                raise ConfigError(f"spec.controllers[{ue}]: unknown kind {kind!r}")
        ppo = PpoConfig(**data.get("ppo", {}))
        variant = TrainVariant(**data.get("variant", {}))
        spec = cls(scenario=scenario, mode=mode, seeds=[int(s) for s in seeds],
                   duration_ms=int(data.get("duration_ms", 30_000)),
                   controllers=controllers,
                   compare=list(data.get("compare", [])),
                   checkpoints=dict(data.get("checkpoints", {})),
                   traffic_case=data.get("traffic_case"),
                   train_iterations=int(data.get("train_iterations", 50)),
                   train_seed=int(data.get("train_seed", 0)),
                   ppo=ppo, variant=variant,
                   embedding_trace=data.get("embedding_trace"),
                   collect_embeddings=bool(data.get("collect_embeddings", False)),
                   raw=data)
        if spec.traffic_case is not None:
            apply_traffic_case(spec.scenario, spec.traffic_case)
        spec.scenario.sim.record_packets = True
        spec.scenario.validate()
        return spec


def apply_traffic_case(scenario: ScenarioConfig, case: str):
    """Scale static-UE background load to the named fraction of capacity."""
    fractions = {"light": 0.15, "heavy": 0.8}
    if case not in fractions:
        raise ConfigError(f"traffic_case: must be light or heavy, got {case!r}")
    sim = scenario.sim
    capacity_mbps = sim.prb_capacity * sim.prb_bytes * 8.0 / (sim.tti_ms * 1000.0)
    per_cell: dict[int, list] = {}
    for ue in scenario.ues:
        if ue.controller == "static" and ue.serving_cell is not None:
            per_cell.setdefault(ue.serving_cell, []).append(ue)
    for cell, ues in per_cell.items():
        current = sum(u.traffic.dl_rate_mbps + u.traffic.ul_rate_mbps for u in ues)
        if current <= 0:
            continue
        factor = fractions[case] * capacity_mbps / current
        for u in ues:
            u.traffic.dl_rate_mbps *= factor
            u.traffic.ul_rate_mbps *= factor


# ---------------------------------------------------------------------------
# CSV helpers: fixed formatting so identical runs are byte identical


def write_csv(path: Path, header: list[str], rows: list[list]):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _fmt(x):
    if isinstance(x, float) or isinstance(x, np.floating):
        return f"{float(x):.6f}"
    return x


# ---------------------------------------------------------------------------
# modes


def _summary_row(label: str, seed: int, metrics) -> list:
    delays = metrics.pooled_delays()
    if delays.size:
        p50, p90, p95, p99 = percentiles(delays, (50, 90, 95, 99))
    else:
        p50 = p90 = p95 = p99 = 0.0
    return [label, seed, int(delays.size), p50, p90, p95, p99,
            metrics.pooled_loss_rate(), metrics.handover_count,
            metrics.mask_vetoes]

SUMMARY_HEADER = ["controller", "seed", "n_packets", "p50_ms", "p90_ms",
                  "p95_ms", "p99_ms", "loss_rate", "handovers", "mask_vetoes"]


def _eval_one(spec: ExperimentSpec, label: str, assignment: dict[int, str],
              seed: int, out: Path):
    bundle = None
    kinds = set(assignment.values())
    learned = [k for k in kinds if k in LEARNED_KINDS]
    if learned:
        ckpt = spec.checkpoints.get(learned[0]) or spec.checkpoints.get("default")
        if ckpt is None:
            raise ConfigError(f"spec.checkpoints: no checkpoint for {learned[0]!r}")
        bundle = load_checkpoint(ckpt)
    metrics = run_episode(spec.scenario, spec.duration_ms, seed,
                          controllers=assignment, bundle=bundle,
                          collect_decision_trace=bool(learned),
                          collect_embeddings=spec.collect_embeddings)
    run_dir = out / label / f"seed_{seed}"
    rows = []
    for ue in sorted(metrics.packet_delays):
        for (t, d) in metrics.packet_delays[ue]:
            rows.append([int(ue), int(t), d])
    write_csv(run_dir / "packet_delays.csv", ["ue_id", "t_ms", "delay_ms"], rows)
    if metrics.decision_trace:
        rows = [[r.t, r.ue_id, "".join(str(int(b)) for b in r.mask_bits),
                 r.p_ho, *r.target_probs, r.action_ho, r.action_target]
                for r in metrics.decision_trace]
        n_cells = spec.scenario.sim.n_cells
        write_csv(run_dir / "decision_trace.csv",
                  ["t_ms", "ue_id", "mask_bits", "p_handover",
                   *[f"p_target_{c}" for c in range(n_cells)], "action_ho",
                   "action_target"], rows)
    if metrics.embedding_trace:
        rows = [[ue, t, *z] for (ue, t, z) in metrics.embedding_trace]
        dim = len(metrics.embedding_trace[0][2])
        write_csv(run_dir / "embeddings.csv",
                  ["ue_id", "t_ms", *[f"z{i}" for i in range(dim)]], rows)
    return metrics


def run_eval(spec: ExperimentSpec, out: Path) -> list[list]:
    rows = []
    for seed in spec.seeds:
        metrics = _eval_one(spec, "eval", spec.controllers, seed, out)
        rows.append(_summary_row("eval", seed, metrics))
        log.info("eval seed %s: p95=%.1f ms loss=%.4f", seed, rows[-1][5], rows[-1][7])
    return rows


def run_compare(spec: ExperimentSpec, out: Path) -> list[list]:
    if not spec.compare:
        raise ConfigError("spec.compare: compare mode needs a controller list")
    agent_ues = [u.ue_id for u in spec.scenario.ues if u.controller != "static"]
    rows = []
    for kind in spec.compare:
        for seed in spec.seeds:
            assignment = {**{ue: kind for ue in agent_ues}, **spec.controllers}
            metrics = _eval_one(spec, kind, assignment, seed, out)
            rows.append(_summary_row(kind, seed, metrics))
            log.info("compare %s seed %s: p95=%.1f ms", kind, seed, rows[-1][5])
    return rows


def run_train(spec: ExperimentSpec, out: Path) -> list[list]:
    result = train(spec.scenario, spec.train_iterations, ppo=spec.ppo,
                   variant=spec.variant, seed=spec.train_seed, out_dir=out,
                   checkpoint_every=max(spec.train_iterations // 4, 1),
                   log_fn=lambda row: log.info("iter %(iteration)s reward %(mean_reward).4f", row))
    header = list(result.metrics[0].keys()) if result.metrics else ["iteration"]
    write_csv(out / "training_metrics.csv", header,
              [[row[k] for k in header] for row in result.metrics])
    return [["train", spec.train_seed, len(result.metrics), 0.0, 0.0, 0.0, 0.0,
             0.0, 0, 0]]


def run_ablate(spec: ExperimentSpec, out: Path) -> list[list]:
    import dataclasses
    variants = spec.compare or ["learned", "learned_nomask", "learned_snapshot"]
    return run_compare(dataclasses.replace(spec, compare=variants), out)


def run_analyze(spec: ExperimentSpec, out: Path) -> list[list]:
    if not spec.embedding_trace:
        raise ConfigError("spec.embedding_trace: analyze mode needs a trace CSV")
    rows = []
    with open(spec.embedding_trace) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        for row in reader:
            rows.append((int(row[0]), int(row[1]),
                         np.array([float(x) for x in row[2:]])))
    if len(rows) < 3:
        raise ConfigError("embedding trace needs at least 3 samples")
    z = np.stack([r[2] for r in rows])
    scores, eigvals, _ = pca_project_2d(z)
    out_rows = [[rows[i][0], rows[i][1], scores[i, 0], scores[i, 1]]
                for i in range(len(rows))]
    write_csv(out / "pca_trajectories.csv", ["ue_id", "t_ms", "pc1", "pc2"], out_rows)
    order = sorted(range(len(rows)), key=lambda i: (rows[i][0], rows[i][1]))
    sim = cosine_matrix(z[order])
    write_csv(out / "cosine_similarity.csv",
              ["row"] + [str(i) for i in range(sim.shape[0])],
              [[i, *sim[i]] for i in range(sim.shape[0])])
    return [["analyze", 0, len(rows), float(eigvals[0]), float(eigvals[1]),
             0.0, 0.0, 0.0, 0, 0]]


def run(spec: ExperimentSpec, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    handler = {"train": run_train, "eval": run_eval, "compare": run_compare,
               "ablate": run_ablate, "analyze": run_analyze}[spec.mode]
    rows = handler(spec, out)
    write_csv(out / "summary.csv", SUMMARY_HEADER, rows)
    manifest = {
        "config_hash": config_hash({"spec": {k: v for k, v in spec.raw.items()},
                                    "scenario": spec.scenario.to_dict()}),
        "version": __version__,
        "mode": spec.mode,
        "seeds": spec.seeds,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return out


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("RANHO_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = argparse.ArgumentParser(prog="ranho",
                                     description="RAN handover control experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment spec")
    p_run.add_argument("--spec", required=True, help="experiment spec JSON")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seeds", help="comma-separated seed list override")
    p_run.add_argument("--mode", choices=MODES, help="mode override")
    args = parser.parse_args(argv)

    try:
        spec = ExperimentSpec.load(args.spec)
        if args.seeds:
            spec.seeds = [int(s) for s in args.seeds.split(",")]
        if args.mode:
            spec.mode = args.mode
        run(spec, args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Builds simulations from a validated config and writes run artifacts."""

from __future__ import annotations

import csv
import json
import logging
import time
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .competence import CompetenceMatrix
from .config import Stage, config_digest, seeds_of, stages_of
from .domain import build_domain
from .engine import AgentProfile, EngineParams, ScheduledEvent, Simulation
from .metrics import TimeSeriesLog, export_csv, fmt, render_svg, summarize
from .network import build_network

log = logging.getLogger(__name__)

CHART_METRICS = ("knowledge", "inflow", "outflow", "competence", "total_knowledge")


def build_simulation(cfg: dict, seed: int, stage: Optional[Stage] = None) -> Simulation:
    """Fresh simulation for one seed.

    Network and initial population depend only on the seed, so stages that
    differ in matrices or events start from identical states.
    """
    stage = stage or stages_of(cfg)[0]
    net_cfg, eng = cfg["network"], cfg["engine"]
    domain = build_domain(cfg["domain"]["layers"], cfg["domain"]["covers"])
    L = len(domain)
    ss_net, ss_init = np.random.SeedSequence([seed, 0]).spawn(2)
    net = build_network(net_cfg["nodes"], L, net_cfg["ring_degree"], net_cfg["rewiring_p"],
                        np.random.default_rng(ss_net), net_cfg.get("shared_topology", True),
                        net_cfg.get("explicit_edges", []))

    params = EngineParams(eng["coeff_A"], eng["coeff_B"], eng["coeff_C"], eng["coeff_D"], eng["omega"])
    rng = np.random.default_rng(ss_init)
    n = net_cfg["nodes"]
    lo, hi = eng["init_knowledge"]["min"], eng["init_knowledge"]["max"]
    K = rng.uniform(lo, hi, size=(n, L))
    K[K > 0] = np.maximum(K[K > 0], params.omega)
    cognitive = rng.uniform(size=n)
    social = rng.uniform(size=n)
    n_experts = int(round(eng["expert_fraction"] * n))
    experts = rng.choice(n, size=n_experts, replace=False)
    layers = eng.get("expert_layers")
    cols = list(range(L)) if layers is None else list(layers)
    for i in experts:
        K[i, cols] = eng["expert_knowledge"]
    profiles = {i: AgentProfile(K[i], float(cognitive[i]), float(social[i])) for i in range(n)}

    comp_cfg = cfg["competence"]
    competence = CompetenceMatrix.from_columns({c["name"]: c["weights"] for c in comp_cfg["competences"]})
    attach = eng.get("attach_count")
    events = [ScheduledEvent(**ev) for ev in stage.events]
    overrides = {int(i): m for i, m in (eng.get("vertical_overrides") or {}).items()}
    return Simulation(net, domain, params, profiles, stage.vertical_matrix,
                      competence=competence, k_ref=comp_cfg["k_ref"], seed=seed, events=events,
                      attach_count=net_cfg["ring_degree"] if attach is None else attach,
                      init_range=(lo, hi), vertical_overrides=overrides)


def run_simulation(cfg: dict, seed: int, stage: Optional[Stage] = None,
                   steps: Optional[int] = None) -> TimeSeriesLog:
    stage = stage or stages_of(cfg)[0]
    sim = build_simulation(cfg, seed, stage)
    tlog = TimeSeriesLog(list(sim.domain.labels), list(sim.competence.names))
    tlog.metadata.update(seed=seed, stage=stage.name or "default", config_digest=config_digest(cfg),
                         started=time.time())
    for _ in range(steps or cfg["engine"]["steps"]):
        tlog.append(sim.step())
    tlog.metadata["finished"] = time.time()
    return tlog


def write_run(tlog: TimeSeriesLog, run_dir: Path, charts: bool = True) -> None:
    export_csv(tlog, run_dir)
    (run_dir / "summary.txt").write_text(summarize(tlog).to_text())
    if charts:
        for metric in CHART_METRICS:
            if metric == "competence" and not tlog.competence_names:
                continue
            render_svg(tlog, metric, run_dir / "charts" / f"{metric}.svg")


def write_aggregate(logs: List[TimeSeriesLog], path: Path) -> None:
    """Cross-seed mean of the per-layer mean knowledge."""
    series = np.mean([lg.series("knowledge") for lg in logs], axis=0)
    steps = logs[0].steps
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "layer", "mean_knowledge", "seeds"])
        for q, s in enumerate(steps):
            for j in range(series.shape[1]):
                w.writerow([int(s), j, fmt(series[q, j]), len(logs)])


def run_config(cfg: dict, out_dir, charts: bool = True) -> Dict[str, List[TimeSeriesLog]]:
    """Run every stage for every seed and write the output tree.

    Layout: ``out_dir[/<stage>][/seed-<n>]/{knowledge.csv, ...}``; stage and
    seed levels appear only when there is more than one of them.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.echo").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    seeds = seeds_of(cfg)
    results: Dict[str, List[TimeSeriesLog]] = {}
    stages = stages_of(cfg)
    for stage in stages:
        stage_dir = out / stage.name if len(stages) > 1 or stage.name else out
        logs = []
        for seed in seeds:
            log.info("running stage=%s seed=%d", stage.name or "default", seed)
            tlog = run_simulation(cfg, seed, stage)
            write_run(tlog, stage_dir / f"seed-{seed}" if len(seeds) > 1 else stage_dir, charts)
            logs.append(tlog)
        if len(seeds) > 1:
            write_aggregate(logs, stage_dir / "aggregate.csv")
        results[stage.name or "default"] = logs
    return results

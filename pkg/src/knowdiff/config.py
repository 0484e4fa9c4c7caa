"""Run configuration: parsing, validation and the bundled scenario presets."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

from .errors import ConfigError, CycleDetected, KnowdiffError

LAYERS = ["n1", "n2", "n3", "n4"]
HIERARCHY = [["n2", "n1"], ["n3", "n2"], ["n4", "n2"]]

ZERO_MATRIX = [[0.0] * 4 for _ in range(4)]
SYMMETRIC_MATRIX = [[0.0 if a == b else 0.4 for b in range(4)] for a in range(4)]
HIERARCHICAL_MATRIX = [
    [0.0, 0.6, 0.0, 0.0],
    [0.1, 0.0, 0.5, 0.5],
    [0.0, 0.2, 0.0, 0.0],
    [0.0, 0.2, 0.0, 0.0],
]
COMPETENCES = [
    {"name": "c1", "weights": [0.5, 0.5, 0.0, 0.0]},
    {"name": "c2", "weights": [0.10, 0.20, 0.30, 0.40]},
    {"name": "c3", "weights": [0.25, 0.25, 0.25, 0.25]},
    {"name": "c4", "weights": [0.40, 0.40, 0.10, 0.10]},
]

DEFAULTS: Dict[str, Any] = {
    "network": {
        "nodes": 500,
        "ring_degree": 10,
        "rewiring_p": 0.1,
        "shared_topology": True,
        "explicit_edges": [],
    },
    "domain": {"layers": LAYERS, "covers": HIERARCHY},
    "engine": {
        "coeff_A": 2.0,
        "coeff_B": 0.1,
        "coeff_C": 2.0,
        "coeff_D": 2.0,
        "omega": 0.01,
        "steps": 500,
        "seed": 0,
        "init_knowledge": {"min": 0.0, "max": 5.0},
        "expert_fraction": 0.03,
        "expert_knowledge": 30.0,
        "expert_layers": None,
        "attach_count": None,
        "vertical_matrix": HIERARCHICAL_MATRIX,
        "vertical_overrides": {},
        "events": [],
    },
    "competence": {"k_ref": 30.0, "competences": COMPETENCES},
    "output": {"directory": "runs", "charts": True},
    "replication": {"count": 1},
    "stages": [],
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "vertical_overrides":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _experts(step, count, knowledge, layer=0):
    return {"step": step, "kind": "add_experts", "count": count, "knowledge": knowledge, "layer": layer}


PRESETS: Dict[str, dict] = {
    "paper-531": {
        "engine": {"vertical_matrix": ZERO_MATRIX},
        "stages": [
            {"name": "no-vertical", "vertical_matrix": ZERO_MATRIX},
            {"name": "symmetric", "vertical_matrix": SYMMETRIC_MATRIX},
            {"name": "asymmetric", "vertical_matrix": HIERARCHICAL_MATRIX},
        ],
    },
    "paper-532": {
        "engine": {"vertical_matrix": HIERARCHICAL_MATRIX, "events": [_experts(100, 10, 50.0)]},
        "stages": [
            {"name": "single-large"},
            {"name": "repeated-small", "events": [_experts(100, 5, 25.0), _experts(300, 5, 25.0)]},
        ],
    },
    "paper-533": {
        "engine": {
            "vertical_matrix": HIERARCHICAL_MATRIX,
            "events": [
                {"step": 200, "kind": "remove_random_agents", "count": 50},
                _experts(300, 10, 50.0),
            ],
        },
    },
}


def preset(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    cfg = _merge(DEFAULTS, PRESETS[name])
    cfg["output"]["directory"] = f"runs/{name}"
    return cfg


def with_defaults(raw: dict) -> dict:
    return _merge(DEFAULTS, raw)


def config_digest(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


# -- validation --------------------------------------------------------------


class _Issues:
    def __init__(self) -> None:
        self.items: List[ConfigError] = []

    def add(self, field: str, message: str) -> None:
        self.items.append(ConfigError(field, message))


def _num(issues, d, key, field, positive=False, lo=None, hi=None, integer=False):
    v = d.get(key)
    ok_type = isinstance(v, int) if integer else isinstance(v, (int, float))
    if isinstance(v, bool) or not ok_type:
        issues.add(field, f"expected {'an integer' if integer else 'a number'}, got {v!r}")
        return None
    if positive and not v > 0:
        issues.add(field, f"must be > 0, got {v}")
    if lo is not None and v < lo:
        issues.add(field, f"must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        issues.add(field, f"must be <= {hi}, got {v}")
    return v


def _matrix(issues, m, field, n_layers):
    if not isinstance(m, list) or len(m) != n_layers or any(
            not isinstance(row, list) or len(row) != n_layers for row in m):
        issues.add(field, f"must be a {n_layers}x{n_layers} matrix matching domain.layers ({n_layers} layers)")
        return
    for a, row in enumerate(m):
        for b, x in enumerate(row):
            if isinstance(x, bool) or not isinstance(x, (int, float)) or x < 0:
                issues.add(f"{field}[{a}][{b}]", f"entries must be non-negative numbers, got {x!r}")
            elif a == b and x != 0:
                issues.add(f"{field}[{a}][{b}]", "diagonal must be 0")


def _events(issues, events, field, n_layers, steps):
    if not isinstance(events, list):
        issues.add(field, "must be a list")
        return
    for q, ev in enumerate(events):
        f = f"{field}[{q}]"
        if not isinstance(ev, dict):
            issues.add(f, "must be an object")
            continue
        kind = ev.get("kind")
        step = _num(issues, ev, "step", f"{f}.step", lo=0, integer=True)
        if isinstance(step, int) and isinstance(steps, int) and step >= steps:
            issues.add(f"{f}.step", f"step {step} is beyond the run horizon engine.steps={steps}")
        if kind == "add_experts":
            _num(issues, ev, "count", f"{f}.count", lo=0, integer=True)
            _num(issues, ev, "knowledge", f"{f}.knowledge", lo=0)
            layer = ev.get("layer")
            if layer is not None and (not isinstance(layer, int) or not 0 <= layer < n_layers):
                issues.add(f"{f}.layer", f"must be null or a layer index in 0..{n_layers - 1}")
        elif kind == "remove_random_agents":
            _num(issues, ev, "count", f"{f}.count", lo=0, integer=True)
        elif kind == "set_vertical_matrix":
            _matrix(issues, ev.get("matrix"), f"{f}.matrix", n_layers)
        elif kind == "set_competence_matrix":
            pass
        else:
            issues.add(f"{f}.kind", f"unknown event kind {kind!r}")


def check_config(cfg: dict) -> List[ConfigError]:
    """Every structural and cross-section problem in an already-merged config."""
    issues = _Issues()
    for section in ("network", "domain", "engine", "competence", "output", "replication"):
        if not isinstance(cfg.get(section), dict):
            issues.add(section, "missing or not an object")
    if issues.items:
        return issues.items
    net, dom, eng, comp = cfg["network"], cfg["domain"], cfg["engine"], cfg["competence"]

    n = _num(issues, net, "nodes", "network.nodes", lo=3, integer=True)
    k = _num(issues, net, "ring_degree", "network.ring_degree", lo=2, integer=True)
    _num(issues, net, "rewiring_p", "network.rewiring_p", lo=0.0, hi=1.0)
    if isinstance(n, int) and isinstance(k, int):
        if k % 2:
            issues.add("network.ring_degree", f"must be even, got {k}")
        if k >= n:
            issues.add("network.ring_degree", f"must be < network.nodes ({n}), got {k}")

    labels = dom.get("layers")
    n_layers = 0
    if not isinstance(labels, list) or not labels or not all(isinstance(x, str) for x in labels):
        issues.add("domain.layers", "must be a non-empty list of labels")
    elif len(set(labels)) != len(labels):
        issues.add("domain.layers", "labels must be unique")
    else:
        n_layers = len(labels)
        from .domain import build_domain
        try:
            build_domain(labels, dom.get("covers", []))
        except CycleDetected as exc:
            issues.add("domain.covers", str(exc))
        except (KnowdiffError, TypeError, ValueError) as exc:
            issues.add("domain.covers", str(exc))

    for key in ("coeff_A", "coeff_B", "coeff_C", "coeff_D", "omega"):
        _num(issues, eng, key, f"engine.{key}", positive=True)
    steps = _num(issues, eng, "steps", "engine.steps", lo=1, integer=True)
    _num(issues, eng, "seed", "engine.seed", lo=0, integer=True)
    init = eng.get("init_knowledge")
    if not isinstance(init, dict):
        issues.add("engine.init_knowledge", "must be an object with min and max")
    else:
        lo = _num(issues, init, "min", "engine.init_knowledge.min", lo=0)
        hi = _num(issues, init, "max", "engine.init_knowledge.max", lo=0)
        if lo is not None and hi is not None and hi < lo:
            issues.add("engine.init_knowledge", f"max ({hi}) < min ({lo})")
    _num(issues, eng, "expert_fraction", "engine.expert_fraction", lo=0.0, hi=1.0)
    _num(issues, eng, "expert_knowledge", "engine.expert_knowledge", lo=0)
    el = eng.get("expert_layers")
    if el is not None and (not isinstance(el, list) or any(
            not isinstance(x, int) or not 0 <= x < n_layers for x in el)):
        issues.add("engine.expert_layers", f"must be null or a list of layer indices in 0..{n_layers - 1}")
    ac = eng.get("attach_count")
    if ac is not None:
        _num(issues, eng, "attach_count", "engine.attach_count", lo=0, integer=True)
    if n_layers:
        _matrix(issues, eng.get("vertical_matrix"), "engine.vertical_matrix", n_layers)
        overrides = eng.get("vertical_overrides") or {}
        if not isinstance(overrides, dict):
            issues.add("engine.vertical_overrides", "must map agent ids to matrices")
        else:
            for aid, m in overrides.items():
                _matrix(issues, m, f"engine.vertical_overrides[{aid}]", n_layers)
        _events(issues, eng.get("events", []), "engine.events", n_layers, steps)

    _num(issues, comp, "k_ref", "competence.k_ref", positive=True)
    comps = comp.get("competences")
    if not isinstance(comps, list) or not comps:
        issues.add("competence.competences", "must be a non-empty list")
    else:
        names = set()
        for a, c in enumerate(comps):
            f = f"competence.competences[{a}]"
            name = c.get("name") if isinstance(c, dict) else None
            if not isinstance(name, str):
                issues.add(f"{f}.name", "missing competence name")
            elif name in names:
                issues.add(f"{f}.name", f"duplicate competence name {name!r}")
            names.add(name)
            w = c.get("weights") if isinstance(c, dict) else None
            if not isinstance(w, list) or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in w):
                issues.add(f"{f}.weights", "must be a list of numbers")
                continue
            if n_layers and len(w) != n_layers:
                issues.add(f"{f}.weights", f"has {len(w)} entries but domain.layers has {n_layers}")
            if any(x < 0 for x in w):
                issues.add(f"{f}.weights", "weights must be non-negative")
            if abs(sum(w) - 1.0) > 1e-9:
                issues.add(f"{f}.weights", f"weights sum to {sum(w):.12g}, must sum to 1")

    out = cfg["output"]
    if not isinstance(out.get("directory"), str):
        issues.add("output.directory", "must be a path string")
    if not isinstance(out.get("charts", True), bool):
        issues.add("output.charts", "must be true or false")

    rep = cfg["replication"]
    if "seeds" in rep:
        s = rep["seeds"]
        if not isinstance(s, list) or not s or any(isinstance(x, bool) or not isinstance(x, int) or x < 0 for x in s):
            issues.add("replication.seeds", "must be a non-empty list of non-negative integers")
    else:
        _num(issues, rep, "count", "replication.count", lo=1, integer=True)

    stages = cfg.get("stages", [])
    if not isinstance(stages, list):
        issues.add("stages", "must be a list")
    else:
        seen = set()
        for q, st in enumerate(stages):
            f = f"stages[{q}]"
            if not isinstance(st, dict) or not isinstance(st.get("name"), str):
                issues.add(f"{f}.name", "each stage needs a name")
                continue
            if st["name"] in seen:
                issues.add(f"{f}.name", f"duplicate stage name {st['name']!r}")
            seen.add(st["name"])
            if "vertical_matrix" in st and n_layers:
                _matrix(issues, st["vertical_matrix"], f"{f}.vertical_matrix", n_layers)
            if "events" in st and n_layers:
                _events(issues, st["events"], f"{f}.events", n_layers, steps)
    return issues.items


def load_config(raw: dict) -> dict:
    """Merge defaults into ``raw`` and validate; raises the first ``ConfigError``."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    cfg = with_defaults(raw)
    issues = check_config(cfg)
    if issues:
        raise issues[0]
    return cfg


def read_config(path) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from None
    return load_config(raw)


def seeds_of(cfg: dict) -> List[int]:
    rep = cfg["replication"]
    if "seeds" in rep:
        return list(rep["seeds"])
    base = cfg["engine"]["seed"]
    return [base + r for r in range(rep.get("count", 1))]


@dataclass
class Stage:
    name: Optional[str]
    vertical_matrix: list
    events: list


def stages_of(cfg: dict) -> List[Stage]:
    eng = cfg["engine"]
    if not cfg.get("stages"):
        return [Stage(None, eng["vertical_matrix"], eng.get("events", []))]
    return [Stage(st["name"], st.get("vertical_matrix", eng["vertical_matrix"]),
                  st.get("events", eng.get("events", [])))
            for st in cfg["stages"]]

"""Knowledge diffusion dynamics over a multilayer network.

One step walks the layers in ranked order and, within a layer, the agents
from least to most knowledgeable. Each visit runs horizontal diffusion from
the best neighbour, then either forgetting or self-learning; every change on
a layer is echoed onto the agent's other layers through the vertical matrix.
Updates are in place, so later visits see earlier results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import _kernels as kern
from .competence import CompetenceMatrix
from .domain import KnowledgeDomain
from .errors import DimensionMismatch, InvalidParameter, UnknownAgent, UnknownLayer
from .network import MultilayerNetwork


@dataclass(frozen=True)
class EngineParams:
    coeff_a: float = 2.0
    coeff_b: float = 0.1
    coeff_c: float = 2.0
    coeff_d: float = 2.0
    omega: float = 0.01

    def __post_init__(self) -> None:
        for name in ("coeff_a", "coeff_b", "coeff_c", "coeff_d", "omega"):
            if not getattr(self, name) > 0:
                raise InvalidParameter(f"{name} must be strictly positive, got {getattr(self, name)}")


@dataclass
class AgentProfile:
    knowledge: np.ndarray
    cognitive: float
    social: float

    def __post_init__(self) -> None:
        self.knowledge = np.asarray(self.knowledge, dtype=float)
        if (self.knowledge < 0).any():
            raise InvalidParameter("knowledge entries must be >= 0")
        for name in ("cognitive", "social"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidParameter(f"{name} ability must lie in [0, 1]")


def check_vertical_matrix(matrix, n_layers: int) -> np.ndarray:
    r = np.array(matrix, dtype=float)
    if r.shape != (n_layers, n_layers):
        raise DimensionMismatch(f"vertical matrix must be {n_layers}x{n_layers}, got {r.shape}")
    if (r < 0).any():
        raise InvalidParameter("vertical matrix entries must be >= 0")
    if np.diag(r).any():
        raise InvalidParameter("vertical matrix must have a zero diagonal")
    return r


EVENT_KINDS = ("add_experts", "remove_random_agents", "set_vertical_matrix", "set_competence_matrix")


@dataclass
class ScheduledEvent:
    """An intervention applied at the start of step ``step``.

    ``layer=None`` on ``add_experts`` gives the experts ``knowledge`` on every
    layer; otherwise only on that layer.
    """

    step: int
    kind: str
    count: int = 0
    knowledge: float = 0.0
    layer: Optional[int] = None
    matrix: Optional[list] = None

    def __post_init__(self) -> None:
        if self.kind not in EVENT_KINDS:
            raise InvalidParameter(f"unknown event kind {self.kind!r}")
        if self.step < 0 or self.count < 0:
            raise InvalidParameter("event step and count must be >= 0")
        if self.kind.startswith("set_") and self.matrix is None:
            raise InvalidParameter(f"{self.kind} needs a matrix")

    def to_dict(self) -> dict:
        d = {"step": self.step, "kind": self.kind}
        if self.kind == "add_experts":
            d.update(count=self.count, knowledge=self.knowledge, layer=self.layer)
        elif self.kind == "remove_random_agents":
            d.update(count=self.count)
        else:
            d.update(matrix=[list(map(float, row)) for row in self.matrix])
        return d


@dataclass
class StepReport:
    step: int
    population: int
    mean_knowledge: np.ndarray
    total_knowledge: float
    flow_gain: np.ndarray
    flow_loss: np.ndarray
    floor_correction: np.ndarray
    outflow_gain: np.ndarray
    outflow_loss: np.ndarray
    vertical_matrix: np.ndarray
    horizontal_events: int
    forgetting_events: int
    self_learning_events: int
    violations: int
    competence_mean: Optional[np.ndarray] = None

    @property
    def inflow_gain(self) -> np.ndarray:
        return self.flow_gain.sum(axis=0)

    @property
    def inflow_loss(self) -> np.ndarray:
        return self.flow_loss.sum(axis=0)


class _Ledger:
    def __init__(self, n_layers: int) -> None:
        self.flow_gain = np.zeros((n_layers, n_layers))
        self.flow_loss = np.zeros((n_layers, n_layers))
        self.floor_corr = np.zeros((n_layers, n_layers))
        self.out_gain = np.zeros(n_layers)
        self.out_loss = np.zeros(n_layers)
        self.counters = np.zeros(3, dtype=np.int64)

    def arrays(self):
        return self.flow_gain, self.flow_loss, self.floor_corr, self.out_gain, self.out_loss


class _Topology:
    """CSR snapshot of the network plus per-node degree and clustering."""

    def __init__(self, net: MultilayerNetwork, size: int) -> None:
        L = net.n_layers
        self.indptr = np.zeros((L, size + 1), dtype=np.int64)
        self.degree = np.zeros((L, size), dtype=np.float64)
        self.cc = np.zeros((L, size), dtype=np.float64)
        self.dmax = np.zeros(L, dtype=np.float64)
        indices: List[int] = []
        strength: List[float] = []
        alive = set(net.agents())
        for j in range(L):
            for i in range(size):
                self.indptr[j, i] = len(indices)
                if i in alive:
                    nbrs = sorted(net._adj[j][i].items())
                    indices.extend(b for b, _ in nbrs)
                    strength.extend(f for _, f in nbrs)
                    self.degree[j, i] = len(nbrs)
                    self.cc[j, i] = net.clustering_coefficient(i, j)
            self.indptr[j, size] = len(indices)
            self.dmax[j] = net.max_degree(j)
        self.indices = np.array(indices, dtype=np.int64)
        self.strength = np.array(strength, dtype=np.float64)
        self.version = net.version


class Simulation:
    """Mutable state of one run: network, agent profiles, matrices and RNG streams."""

    def __init__(
        self,
        network: MultilayerNetwork,
        domain: KnowledgeDomain,
        params: EngineParams,
        profiles: Mapping[int, AgentProfile],
        vertical_matrix,
        *,
        competence: Optional[CompetenceMatrix] = None,
        k_ref: float = 30.0,
        seed: int = 0,
        events: Sequence[ScheduledEvent] = (),
        attach_count: int = 10,
        init_range: Tuple[float, float] = (0.0, 5.0),
        vertical_overrides: Optional[Mapping[int, Sequence[Sequence[float]]]] = None,
        check_initial_state: bool = True,
    ) -> None:
        L = network.n_layers
        if len(domain) != L:
            raise DimensionMismatch(f"domain has {len(domain)} elements, network has {L} layers")
        if set(profiles) != set(network.agents()):
            raise InvalidParameter("profiles must cover exactly the network's agents")
        if competence is not None and competence.n_layers != L:
            raise DimensionMismatch(
                f"competence matrix has {competence.n_layers} rows, network has {L} layers")
        self.network = network
        self.domain = domain
        self.params = params
        self.competence = competence
        self.k_ref = k_ref
        self.attach_count = attach_count
        self.init_range = init_range
        self.events = sorted(events, key=lambda e: e.step)
        self.t = 0

        # independent streams: later consumers never shift earlier ones
        ss_sched, ss_events = np.random.SeedSequence([seed, 1]).spawn(2)
        self.schedule_rng = np.random.default_rng(ss_sched)
        self.event_rng = np.random.default_rng(ss_events)

        size = network.next_id
        self.K = np.zeros((size, L))
        self.cognitive = np.zeros(size)
        self.social = np.zeros(size)
        self.alive = np.zeros(size, dtype=bool)
        for i, prof in profiles.items():
            if prof.knowledge.shape != (L,):
                raise DimensionMismatch(f"agent {i} knowledge must have {L} entries")
            self.K[i] = prof.knowledge
            self.cognitive[i] = prof.cognitive
            self.social[i] = prof.social
            self.alive[i] = True

        self.vertical_matrix = check_vertical_matrix(vertical_matrix, L)
        self.vertical_overrides: Dict[int, np.ndarray] = {
            int(i): check_vertical_matrix(m, L) for i, m in (vertical_overrides or {}).items()}
        self._topo: Optional[_Topology] = None
        self._R: Optional[np.ndarray] = None
        self.ledger = _Ledger(L)

        if check_initial_state:
            for i in self.agent_ids():
                bad = domain.validate_state(self.K[i])
                if bad:
                    raise InvalidParameter(
                        f"agent {i} has knowledge on {bad} without its prerequisites")

    # -- bookkeeping -------------------------------------------------------

    @property
    def n_layers(self) -> int:
        return self.K.shape[1]

    def agent_ids(self) -> np.ndarray:
        return np.flatnonzero(self.alive)

    def profile(self, i: int) -> AgentProfile:
        self._require(i)
        return AgentProfile(self.K[i].copy(), float(self.cognitive[i]), float(self.social[i]))

    def _require(self, i: int, j: Optional[int] = None) -> None:
        if not (0 <= i < self.alive.size and self.alive[i]):
            raise UnknownAgent(f"agent {i} is not in the simulation")
        if j is not None and not 0 <= j < self.n_layers:
            raise UnknownLayer(f"layer {j} not in 0..{self.n_layers - 1}")

    def topology(self) -> _Topology:
        if self._topo is None or self._topo.version != self.network.version:
            self._topo = _Topology(self.network, self.K.shape[0])
        return self._topo

    def agent_matrices(self) -> np.ndarray:
        """Per-agent vertical matrices, shape ``(slots, layers, layers)``."""
        if self._R is None or self._R.shape[0] != self.K.shape[0]:
            R = np.broadcast_to(self.vertical_matrix, (self.K.shape[0],) + self.vertical_matrix.shape).copy()
            for i, m in self.vertical_overrides.items():
                if i < R.shape[0]:
                    R[i] = m
            self._R = R
        return self._R

    def set_vertical_matrix(self, matrix) -> None:
        self.vertical_matrix = check_vertical_matrix(matrix, self.n_layers)
        self._R = None

    def _grow(self, size: int) -> None:
        extra = size - self.K.shape[0]
        if extra <= 0:
            return
        self.K = np.vstack([self.K, np.zeros((extra, self.n_layers))])
        self.cognitive = np.concatenate([self.cognitive, np.zeros(extra)])
        self.social = np.concatenate([self.social, np.zeros(extra)])
        self.alive = np.concatenate([self.alive, np.zeros(extra, dtype=bool)])
        self._R = None

    def mean_knowledge(self) -> np.ndarray:
        ids = self.agent_ids()
        if ids.size == 0:
            return np.zeros(self.n_layers)
        return self.K[ids].mean(axis=0)

    def count_violations(self) -> int:
        ids = self.agent_ids()
        k = self.K[ids]
        bad = np.zeros(k.shape, dtype=bool)
        for b, below in enumerate(self.domain.lower_shadow_indices()):
            for a in below:
                bad[:, b] |= (k[:, b] > 0) & (k[:, a] <= 0)
        return int(bad.sum())

    def competence_values(self) -> Optional[np.ndarray]:
        if self.competence is None:
            return None
        from .competence import competence_value
        return competence_value(self.competence, self.K[self.agent_ids()], self.k_ref)

    # -- stepping ----------------------------------------------------------

    def step(self) -> StepReport:
        for ev in self.events:
            if ev.step == self.t:
                apply_event(self, ev)
        self.ledger = _Ledger(self.n_layers)
        order = np.array(layer_ranking(self), dtype=np.int64)
        topo = self.topology()
        p = self.params
        kern.step(self.K, self.cognitive, self.social, self.agent_ids(), topo.indptr, topo.indices,
                  topo.strength, topo.degree, topo.cc, topo.dmax, self.agent_matrices(), order,
                  p.omega, p.coeff_a, p.coeff_b, p.coeff_c, p.coeff_d,
                  *self.ledger.arrays(), self.ledger.counters)
        report = self._report()
        self.t += 1
        return report

    def _report(self) -> StepReport:
        lg = self.ledger
        comp = self.competence_values()
        ids = self.agent_ids()
        return StepReport(
            step=self.t,
            population=int(ids.size),
            mean_knowledge=self.mean_knowledge(),
            total_knowledge=float(self.K[ids].sum()),
            flow_gain=lg.flow_gain.copy(),
            flow_loss=lg.flow_loss.copy(),
            floor_correction=lg.floor_corr.copy(),
            outflow_gain=lg.out_gain.copy(),
            outflow_loss=lg.out_loss.copy(),
            vertical_matrix=self.vertical_matrix.copy(),
            horizontal_events=int(lg.counters[kern.H_EVENTS]),
            forgetting_events=int(lg.counters[kern.FORGET_EVENTS]),
            self_learning_events=int(lg.counters[kern.LEARN_EVENTS]),
            violations=self.count_violations(),
            competence_mean=None if comp is None or comp.shape[0] == 0 else comp.mean(axis=0),
        )

    def run(self, steps: int) -> List[StepReport]:
        return [self.step() for _ in range(steps)]


# -- single operations -----------------------------------------------------
# These run one piece of a visit against a Simulation, using the same compiled
# helpers as the step loop. Vertical echoes are booked into ``sim.ledger``.


def select_teacher(sim: Simulation, i: int, j: int) -> Optional[int]:
    sim._require(i, j)
    topo = sim.topology()
    p = kern.select_teacher(sim.K, sim.social, topo.indptr, topo.indices, i, j,
                            sim.K[i, j] * sim.cognitive[i])
    return None if p < 0 else int(topo.indices[p])


def horizontal_increment(sim: Simulation, i: int, j: int, z: int) -> float:
    """Apply the transfer from teacher ``z`` to ``i`` on layer ``j``; returns the applied gain."""
    sim._require(i, j)
    sim._require(z)
    if not sim.network.has_edge(j, i, z):
        raise InvalidParameter(f"agent {z} is not a neighbour of {i} on layer {j}")
    topo = sim.topology()
    if topo.degree[j, z] == 0:
        raise AssertionError("teacher without edges")
    d = kern.horizontal_delta(sim.K[z, j], sim.K[i, j], sim.social[z], sim.cognitive[i],
                              topo.degree[j, z], topo.dmax[j], sim.network.strength(j, i, z),
                              sim.params.coeff_a)
    if d <= 0.0:
        return 0.0
    return kern.set_level(sim.K, i, j, sim.K[i, j] + d, sim.params.omega)


def vertical_diffuse(sim: Simulation, i: int, j: int, delta: float) -> np.ndarray:
    """Echo a change of ``delta`` on layer ``j`` onto agent ``i``'s other layers.

    Returns the per-layer change actually received (zero on ``j``).
    """
    sim._require(i, j)
    before = sim.K[i].copy()
    kern.vertical(sim.K, sim.agent_matrices(), i, j, float(delta), sim.params.omega,
                  *sim.ledger.arrays())
    return sim.K[i] - before


def avg_transfer_potential(sim: Simulation, i: int, j: int) -> float:
    sim._require(i, j)
    topo = sim.topology()
    return float(kern.avg_potential(sim.K, sim.social, topo.indptr, topo.indices, i, j))


def forgetting_step(sim: Simulation, i: int, j: int, propagate: bool = True) -> float:
    """Apply forgetting on layer ``j``; returns the decrement actually applied (>= 0)."""
    kt = avg_transfer_potential(sim, i, j)
    k = sim.K[i, j]
    xi = kern.forgetting_decrement(k, kt, sim.cognitive[i], sim.params.coeff_b)
    applied = kern.set_level(sim.K, i, j, k - xi, sim.params.omega)
    if propagate:
        vertical_diffuse(sim, i, j, applied)
    return -applied


def self_learning_step(sim: Simulation, i: int, j: int, propagate: bool = True) -> float:
    """Apply self-learning on layer ``j``; returns the increment actually applied."""
    kt = avg_transfer_potential(sim, i, j)
    k = sim.K[i, j]
    cc = sim.topology().cc[j, i]
    psi = kern.self_learning_increment(k, kt, sim.cognitive[i], cc, sim.params.coeff_c, sim.params.coeff_d)
    applied = kern.set_level(sim.K, i, j, k + psi, sim.params.omega)
    if propagate:
        vertical_diffuse(sim, i, j, applied)
    return applied


def layer_scores(sim: Simulation) -> np.ndarray:
    """Total outgoing vertical coupling of each layer, summed over agents."""
    return sim.agent_matrices()[sim.agent_ids()].sum(axis=(0, 2))


def rank_layers(scores: Sequence[float], rng: np.random.Generator) -> List[int]:
    """Layers by descending score; runs of equal scores are shuffled with ``rng``."""
    scores = [float(s) for s in scores]
    order = sorted(range(len(scores)), key=lambda w: -scores[w])
    ranked: List[int] = []
    q = 0
    while q < len(order):
        r = q + 1
        while r < len(order) and math.isclose(scores[order[r]], scores[order[q]], rel_tol=1e-12, abs_tol=1e-12):
            r += 1
        group = order[q:r]
        if len(group) > 1:
            group = [group[x] for x in rng.permutation(len(group))]
        ranked.extend(group)
        q = r
    return ranked


def layer_ranking(sim: Simulation) -> List[int]:
    return rank_layers(layer_scores(sim), sim.schedule_rng)


def node_ranking(sim: Simulation, j: int) -> List[int]:
    if not 0 <= j < sim.n_layers:
        raise UnknownLayer(f"layer {j} not in 0..{sim.n_layers - 1}")
    return [int(i) for i in kern.node_order(sim.K, sim.agent_ids(), j)]


# -- interventions -----------------------------------------------------------


def _draw_initial(rng: np.random.Generator, lo: float, hi: float, size, omega: float) -> np.ndarray:
    return np.maximum(rng.uniform(lo, hi, size=size), omega)


def apply_event(sim: Simulation, ev: ScheduledEvent) -> dict:
    """Apply ``ev`` to the simulation; returns a short summary of what changed."""
    rng = sim.event_rng
    if ev.kind == "add_experts":
        if ev.layer is not None and not 0 <= ev.layer < sim.n_layers:
            raise UnknownLayer(f"expert layer {ev.layer} not in 0..{sim.n_layers - 1}")
        added = []
        for _ in range(ev.count):
            m = min(sim.attach_count, len(sim.network))
            i = sim.network.add_agent(m, rng)
            sim._grow(sim.network.next_id)
            if ev.layer is None:
                k = np.full(sim.n_layers, float(ev.knowledge))
            else:
                k = _draw_initial(rng, *sim.init_range, sim.n_layers, sim.params.omega)
                k[ev.layer] = ev.knowledge
            sim.K[i] = k
            sim.cognitive[i] = rng.uniform()
            sim.social[i] = rng.uniform()
            sim.alive[i] = True
            added.append(i)
        return {"kind": ev.kind, "added": added}
    if ev.kind == "remove_random_agents":
        ids = sim.agent_ids()
        if ev.count > ids.size:
            raise InvalidParameter(f"cannot remove {ev.count} agents from a population of {ids.size}")
        victims = sorted(int(x) for x in rng.choice(ids, size=ev.count, replace=False))
        for i in victims:
            sim.network.remove_agent(i)
            sim.alive[i] = False
        return {"kind": ev.kind, "removed": victims}
    if ev.kind == "set_vertical_matrix":
        sim.set_vertical_matrix(ev.matrix)
        return {"kind": ev.kind}
    if ev.kind == "set_competence_matrix":
        if sim.competence is None:
            raise InvalidParameter("no competence matrix configured")
        sim.competence = CompetenceMatrix(sim.competence.names, np.asarray(ev.matrix, dtype=float))
        return {"kind": ev.kind}
    raise InvalidParameter(f"unknown event kind {ev.kind!r}")

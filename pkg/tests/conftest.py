import numpy as np
import pytest

from knowdiff.domain import build_domain
from knowdiff.engine import AgentProfile, EngineParams, Simulation
from knowdiff.network import MultilayerNetwork


def make_sim(knowledge, cognitive, social, edges, n_layers=None, matrix=None, params=None,
             seed=0, **kwargs):
    """Small simulation from plain lists; ``edges`` holds (layer, a, b[, strength])."""
    n = len(knowledge)
    L = n_layers or len(knowledge[0])
    net = MultilayerNetwork(L, range(n))
    for e in edges:
        net.add_edge(e[0], e[1], e[2], e[3] if len(e) > 3 else 1.0)
    dom = build_domain([f"k{j}" for j in range(L)], [])
    profiles = {i: AgentProfile(knowledge[i], cognitive[i], social[i]) for i in range(n)}
    return Simulation(net, dom, params or EngineParams(), profiles,
                      matrix if matrix is not None else np.zeros((L, L)), seed=seed, **kwargs)


@pytest.fixture
def sim_factory():
    return make_sim


ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line for an acceptance criterion."""
    def record(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)

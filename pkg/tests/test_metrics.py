import xml.etree.ElementTree as ET

import numpy as np
import pytest

from knowdiff.config import SYMMETRIC_MATRIX, preset
from knowdiff.errors import InvalidParameter
from knowdiff.metrics import (COMPETENCE_HEADER, FLOWS_HEADER, KNOWLEDGE_HEADER, TimeSeriesLog,
                              check_flow_ledger, export_csv, fmt, read_csv, read_knowledge_series,
                              render_svg, summarize)
from knowdiff.runner import run_simulation

from conftest import make_sim

SVG = "{http://www.w3.org/2000/svg}"


def small_log(steps=5, matrix=None, L=2, seed=0):
    rng = np.random.default_rng(seed)
    n = 8
    edges = [(j, i, (i + 1) % n) for j in range(L) for i in range(n)] + [(0, 0, 4)]
    sim = make_sim(rng.uniform(0.5, 5, (n, L)).tolist(), rng.uniform(size=n).tolist(),
                   rng.uniform(size=n).tolist(), edges, n_layers=L,
                   matrix=matrix if matrix is not None else np.zeros((L, L)), seed=seed)
    log = TimeSeriesLog(list(sim.domain.labels))
    for _ in range(steps):
        log.append(sim.step())
    return log


def small_preset(steps=30, nodes=40, **engine):
    cfg = preset("paper-531")
    cfg["network"]["nodes"] = nodes
    cfg["engine"].update(engine)
    cfg["engine"]["steps"] = steps
    cfg["stages"] = []
    return cfg


def test_knowledge_rows(tmp_path):
    log = small_log(steps=1)
    export_csv(log, tmp_path)
    rows = read_csv(tmp_path / "knowledge.csv")
    assert len(rows) == 2
    assert (tmp_path / "knowledge.csv").read_text().splitlines()[0] == ",".join(KNOWLEDGE_HEADER)
    assert (tmp_path / "flows.csv").read_text().splitlines()[0] == ",".join(FLOWS_HEADER)


def test_zero_matrix_has_no_flows(tmp_path):
    export_csv(small_log(steps=10), tmp_path)
    for r in read_csv(tmp_path / "flows.csv"):
        assert float(r["inflow_gain"]) == 0 and float(r["inflow_loss"]) == 0


def test_competence_file(tmp_path):
    log = run_simulation(small_preset(steps=3), seed=1)
    export_csv(log, tmp_path)
    lines = (tmp_path / "competence.csv").read_text().splitlines()
    assert lines[0] == ",".join(COMPETENCE_HEADER)
    assert len(lines) == 1 + 3 * 4
    assert all(0 <= float(r["mean_value"]) <= 1 for r in read_csv(tmp_path / "competence.csv"))


def test_round_trip(tmp_path):
    log = small_log(steps=12, matrix=[[0, 0.3], [0.2, 0]])
    export_csv(log, tmp_path)
    back = read_knowledge_series(tmp_path / "knowledge.csv")
    expected = np.array([[float(fmt(x)) for x in row] for row in log.series("knowledge")])
    assert (back == expected).all()


def test_rows_sorted(tmp_path):
    export_csv(small_log(steps=4, matrix=[[0, 0.3], [0.2, 0]]), tmp_path)
    rows = read_csv(tmp_path / "flows.csv")
    keys = [(int(r["step"]), int(r["source_layer"]), int(r["target_layer"])) for r in rows]
    assert keys == sorted(keys)


def test_flow_ledger_on_export(tmp_path):
    log = run_simulation(small_preset(steps=40, vertical_matrix=SYMMETRIC_MATRIX, omega=0.5), seed=3)
    export_csv(log, tmp_path)
    assert check_flow_ledger(tmp_path) == []
    corr = [float(r["floor_correction"]) for r in read_csv(tmp_path / "flows.csv")]
    assert any(abs(c) > 1e-9 for c in corr), "scenario should exercise the floor"


def test_flow_ledger_detects_tampering(tmp_path):
    export_csv(small_log(steps=3, matrix=[[0, 0.5], [0.5, 0]]), tmp_path)
    text = (tmp_path / "flows.csv").read_text().splitlines()
    parts = text[1].split(",")
    parts[3] = fmt(float(parts[3]) + 1.0)
    text[1] = ",".join(parts)
    (tmp_path / "flows.csv").write_text("\n".join(text) + "\n")
    assert len(check_flow_ledger(tmp_path)) == 1


def test_export_empty_log(tmp_path):
    with pytest.raises(InvalidParameter):
        export_csv(TimeSeriesLog(["a"]), tmp_path)


def test_log_requires_contiguous_steps():
    log = small_log(steps=2)
    with pytest.raises(InvalidParameter):
        log.append(log.reports[0])


class TestSvg:
    def test_one_polyline_per_layer(self, tmp_path):
        log = small_log(steps=20, L=4, matrix=SYMMETRIC_MATRIX)
        path = render_svg(log, "knowledge", tmp_path / "k.svg")
        root = ET.parse(path).getroot()
        assert root.tag == SVG + "svg"
        assert len(root.findall(f"{SVG}polyline")) == 4

    def test_single_step_uses_markers(self, tmp_path):
        root = ET.parse(render_svg(small_log(steps=1), "knowledge", tmp_path / "one.svg")).getroot()
        assert len(root.findall(f"{SVG}circle")) == 2
        assert not root.findall(f"{SVG}polyline")

    def test_inflow_non_negative(self, tmp_path):
        log = small_log(steps=20, L=4, matrix=SYMMETRIC_MATRIX)
        assert (log.series("inflow") >= 0).all()
        root = ET.parse(render_svg(log, "inflow", tmp_path / "in.svg")).getroot()
        assert len(root.findall(f"{SVG}polyline")) == 4

    def test_unknown_metric(self, tmp_path):
        with pytest.raises(InvalidParameter):
            render_svg(small_log(), "temperature", tmp_path / "x.svg")

    def test_deterministic_bytes(self, tmp_path):
        a = render_svg(small_log(steps=8, seed=2), "knowledge", tmp_path / "a.svg").read_bytes()
        b = render_svg(small_log(steps=8, seed=2), "knowledge", tmp_path / "b.svg").read_bytes()
        assert a == b


class FakeLog(TimeSeriesLog):
    def __init__(self, values):
        super().__init__(["a"])
        self._values = np.asarray(values, dtype=float)[:, None]

    @property
    def steps(self):
        return np.arange(len(self._values))

    def series(self, metric):
        return self._values


def test_peak_trough_shapes():
    base = small_log(steps=1)
    last = base.reports[0]
    mono = FakeLog([1, 2, 3, 4])
    mono.reports = [last] * 4
    s = summarize(mono).layers[0]
    assert (s.peak_step, s.peak, s.trough) == (3, 4.0, 4.0)
    spike = FakeLog([1, 5, 2, 3])
    spike.reports = [last] * 4
    s = summarize(spike).layers[0]
    assert s.peak_step == 1 and s.trough == 2.0 < s.peak


def test_summary_text():
    text = summarize(small_log(steps=3)).to_text()
    assert "layer k0: final=" in text and "final_population: 8" in text

import json

import pytest

from knowdiff.cli import main, validate
from knowdiff.config import (HIERARCHICAL_MATRIX, PRESETS, SYMMETRIC_MATRIX, ZERO_MATRIX, check_config,
                             load_config, preset, stages_of)
from knowdiff.errors import ConfigError


def tiny(name="paper-531", **engine):
    cfg = preset(name)
    cfg["network"]["nodes"] = 30
    cfg["engine"]["steps"] = 5
    # squeeze the scenario's event times into the short horizon
    for ev in cfg["engine"]["events"]:
        ev["step"] = ev["step"] // 100
        if ev["kind"] == "remove_random_agents":
            ev["count"] = 5
    cfg["engine"].update(engine)
    return cfg


class TestPresets:
    def test_531_stages(self):
        stages = {s.name: s.vertical_matrix for s in stages_of(preset("paper-531"))}
        assert stages == {"no-vertical": ZERO_MATRIX, "symmetric": SYMMETRIC_MATRIX,
                          "asymmetric": HIERARCHICAL_MATRIX}
        assert stages["asymmetric"] == [[0, 0.6, 0, 0], [0.1, 0, 0.5, 0.5], [0, 0.2, 0, 0], [0, 0.2, 0, 0]]

    def test_532_events(self):
        cfg = preset("paper-532")
        single = stages_of(cfg)[0]
        assert {"step": 100, "kind": "add_experts", "count": 10, "knowledge": 50.0, "layer": 0} in single.events
        small = stages_of(cfg)[1].events
        assert [(e["step"], e["count"], e["knowledge"]) for e in small] == [(100, 5, 25.0), (300, 5, 25.0)]

    def test_533_events(self):
        evs = preset("paper-533")["engine"]["events"]
        assert {"step": 200, "kind": "remove_random_agents", "count": 50} in evs
        assert any(e["kind"] == "add_experts" and e["step"] == 300 and e["knowledge"] == 50.0 for e in evs)

    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_shared_setup(self, name):
        cfg = preset(name)
        assert cfg["network"]["nodes"] == 500 and cfg["network"]["rewiring_p"] == 0.1
        assert cfg["domain"]["layers"] == ["n1", "n2", "n3", "n4"]
        assert cfg["engine"]["steps"] == 500
        assert (cfg["engine"]["coeff_A"], cfg["engine"]["coeff_B"], cfg["engine"]["coeff_C"],
                cfg["engine"]["coeff_D"]) == (2.0, 0.1, 2.0, 2.0)
        assert check_config(cfg) == []

    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_round_trip(self, name):
        cfg = preset(name)
        assert load_config(json.loads(json.dumps(cfg))) == cfg

    def test_unknown(self):
        with pytest.raises(ConfigError):
            preset("paper-999")


class TestValidation:
    def test_valid(self):
        assert validate(preset("paper-533")) == []

    def test_weights_not_normalised(self):
        cfg = preset("paper-531")
        cfg["competence"]["competences"][0]["weights"] = [0.5, 0.4, 0.0, 0.0]
        problems = validate(cfg)
        assert any(p.startswith("competence.competences[0].weights") and "0.9" in p for p in problems)

    def test_cycle(self):
        cfg = preset("paper-531")
        cfg["domain"]["covers"] = [["n1", "n2"], ["n2", "n1"]]
        problems = validate(cfg)
        assert any(p.startswith("domain.covers") and "n1" in p and "n2" in p and "cycle" in p for p in problems)

    def test_layer_mismatch_names_both_sections(self):
        cfg = preset("paper-531")
        cfg["competence"]["competences"][1]["weights"] = [0.5, 0.5, 0.0]
        problems = validate(cfg)
        assert any("competence.competences[1].weights" in p and "domain.layers" in p for p in problems)
        cfg = preset("paper-531")
        cfg["engine"]["vertical_matrix"] = [[0, 1], [1, 0]]
        assert any("engine.vertical_matrix" in p and "domain.layers" in p for p in validate(cfg))

    def test_lists_every_problem(self):
        cfg = preset("paper-531")
        cfg["network"]["ring_degree"] = 3
        cfg["engine"]["coeff_B"] = 0
        cfg["engine"]["events"] = [{"step": 900, "kind": "remove_random_agents", "count": 1}]
        fields = {p.split(":")[0] for p in validate(cfg)}
        assert {"network.ring_degree", "engine.coeff_B", "engine.events[0].step"} <= fields

    def test_bad_types(self):
        cfg = preset("paper-531")
        cfg["network"]["nodes"] = "many"
        assert any(p.startswith("network.nodes") for p in validate(cfg))
        assert validate([1, 2]) == ["<root>: configuration must be a JSON object"]

    def test_initial_state_checked(self):
        cfg = tiny(init_knowledge={"min": 0.0, "max": 0.0}, expert_fraction=0.1, expert_layers=[0])
        problems = validate(cfg)
        assert problems and problems[0].startswith("initial state")


class TestCli:
    def test_run_preset(self, tmp_path):
        cfg = tiny()
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        out = tmp_path / "out"
        assert main(["--config", str(path), "--out", str(out), "--seed", "7"]) == 0
        for stage in ("no-vertical", "symmetric", "asymmetric"):
            for name in ("knowledge.csv", "flows.csv", "competence.csv", "summary.txt", "charts/knowledge.svg"):
                assert (out / stage / name).exists()
        assert json.loads((out / "config.echo").read_text())["engine"]["seed"] == 7

    def test_seed_determinism(self, tmp_path):
        cfg = tiny("paper-533", steps=6)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        for run in ("a", "b"):
            assert main(["--config", str(path), "--out", str(tmp_path / run), "--seed", "7"]) == 0
        for name in ("knowledge.csv", "flows.csv", "competence.csv", "charts/knowledge.svg", "charts/inflow.svg"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_replication(self, tmp_path):
        cfg = tiny("paper-533")
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        assert main(["--config", str(path), "--out", str(tmp_path / "r"), "--seeds", "3", "--no-charts"]) == 0
        assert sorted(p.name for p in (tmp_path / "r").iterdir()) == [
            "aggregate.csv", "config.echo", "seed-0", "seed-1", "seed-2"]
        assert not (tmp_path / "r" / "seed-0" / "charts").exists()

    def test_validate_only(self, tmp_path, capsys):
        cfg = preset("paper-531")
        cfg["competence"]["competences"][0]["weights"] = [0.5, 0.4, 0, 0]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(cfg))
        assert main(["--config", str(path), "--validate-only"]) == 1
        assert "competence.competences[0].weights" in capsys.readouterr().out
        assert main(["--preset", "paper-532", "--validate-only"]) == 0

    def test_config_errors_name_the_source(self, tmp_path, capsys):
        assert main(["--config", str(tmp_path / "missing.json")]) == 2
        assert "missing.json" in capsys.readouterr().err
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["--config", str(bad)]) == 2
        assert "bad.json" in capsys.readouterr().err
        cfg = tiny()
        cfg["domain"]["layers"] = ["a", "b"]
        bad.write_text(json.dumps(cfg))
        assert main(["--config", str(bad), "--out", str(tmp_path / "x")]) == 2
        err = capsys.readouterr().err
        assert "domain" in err

    def test_dump_config(self, capsys):
        assert main(["--preset", "paper-532", "--dump-config", "--steps", "450"]) == 0
        assert json.loads(capsys.readouterr().out)["engine"]["steps"] == 450

import json
import math

import pytest

from antmanet.cli import main
from antmanet.config import parse_scenario, serialize
from antmanet.errors import ScenarioError


MINIMAL = """
seed: 7
duration: 5
placements:
  - {id: 0, position: [0, 0]}
  - {id: 1, position: [40, 0]}
flows:
  - {src: 0, dst: 1, start: 1.0, packets: 2}
"""


def codes(exc):
    return {code for _, code, _ in exc.value.issues}


class TestParsing:
    def test_defaults(self):
        cfg = parse_scenario("placements: [{id: 0, position: [0, 0]}]")
        assert cfg.version == 1
        assert cfg.seed == 0
        assert cfg.duration == 100.0
        assert cfg.weights.w1 == 0.25
        assert cfg.pheromone.q == 0.1
        assert cfg.beacon.miss_threshold == 3
        assert cfg.link.delay == {0: 0.002, 1: 0.0015, 2: 0.001}
        assert not cfg.mobility.enabled

    def test_minimal_scenario(self):
        cfg = parse_scenario(MINIMAL)
        assert cfg.seed == 7
        assert [p.id for p in cfg.placements] == [0, 1]
        assert cfg.flows[0].qos.max_delay == math.inf

    def test_empty_document(self):
        cfg = parse_scenario("")
        assert cfg.node_ids() == set()

    def test_group_ids_follow_placements(self):
        cfg = parse_scenario(
            "placements: [{id: 3, position: [0, 0]}]\n"
            "groups: [{count: 2}]")
        assert cfg.node_ids() == {3, 4, 5}

    def test_weight_sum_rejected(self):
        with pytest.raises(ScenarioError) as exc:
            parse_scenario("weights: {w1: 0.5, w2: 0.5, w3: 0.5, w4: 0.5}")
        assert "weight-sum" in codes(exc)

    def test_rho_range_rejected(self):
        with pytest.raises(ScenarioError) as exc:
            parse_scenario("weights: {rho: 1.5}")
        assert "rho-range" in codes(exc)

    def test_q_range_rejected(self):
        with pytest.raises(ScenarioError) as exc:
            parse_scenario("pheromone: {q: 0.0}")
        assert "q-range" in codes(exc)

    def test_unknown_key_rejected(self):
        with pytest.raises(ScenarioError) as exc:
            parse_scenario("pheronome: {q: 0.5}")
        assert "unknown-key" in codes(exc)

    def test_tx_range_must_increase(self):
        with pytest.raises(ScenarioError) as exc:
            parse_scenario(
                "groups: [{count: 1, max_level: 1, tx_range: [100, 90]}]")
        assert "tx-range" in codes(exc)

    def test_flow_node_ref_checked(self):
        with pytest.raises(ScenarioError) as exc:
            parse_scenario(
                "placements: [{id: 0, position: [0, 0]}]\n"
                "flows: [{src: 0, dst: 9}]")
        assert "node-ref" in codes(exc)

    def test_multiple_issues_reported_together(self):
        with pytest.raises(ScenarioError) as exc:
            parse_scenario("weights: {rho: 2.0}\npheromone: {q: 0.0}")
        assert {"rho-range", "q-range"} <= codes(exc)

    def test_version_gate(self):
        with pytest.raises(ScenarioError) as exc:
            parse_scenario("version: 2")
        assert "version" in codes(exc)

    def test_yaml_syntax_error(self):
        with pytest.raises(ScenarioError):
            parse_scenario("{unclosed")


class TestSerialization:
    def test_round_trip_equality(self):
        cfg = parse_scenario(MINIMAL)
        again = parse_scenario(serialize(cfg))
        assert again == cfg

    def test_round_trip_of_defaults(self):
        cfg = parse_scenario("")
        assert parse_scenario(serialize(cfg)) == cfg

    def test_serialize_makes_defaults_explicit(self):
        text = serialize(parse_scenario(MINIMAL))
        assert "miss_threshold: 3" in text
        assert "packet_size_bits: 8192" in text


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "mini.yaml"
    path.write_text(MINIMAL, encoding="utf-8")
    return path


class TestCli:
    def test_validate_ok(self, scenario_file, capsys):
        assert main(["validate", str(scenario_file)]) == 0
        assert capsys.readouterr().out == ""

    def test_validate_bad_scenario_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text("pheromone: {q: 0.0}", encoding="utf-8")
        assert main(["validate", str(bad)]) == 2
        assert "[q-range]" in capsys.readouterr().err

    def test_missing_file_exit_1(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "nope.yaml")]) == 1

    def test_run_writes_summary(self, scenario_file, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["run", str(scenario_file), "--out", str(out)]) == 0
        summary = json.loads((out / "mini.summary.json").read_text())
        assert summary["packets_sent"] == 2
        assert summary["packets_delivered"] == 2
        printed = json.loads(capsys.readouterr().out)
        assert printed == summary

    def test_run_twice_identical_outputs(self, scenario_file, tmp_path,
                                         capsys):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["run", str(scenario_file), "--trace", "--out", str(out1)])
        main(["run", str(scenario_file), "--trace", "--out", str(out2)])
        assert (out1 / "mini.summary.json").read_bytes() == \
            (out2 / "mini.summary.json").read_bytes()
        assert (out1 / "mini.trace").read_bytes() == \
            (out2 / "mini.trace").read_bytes()

    def test_seed_override_changes_summary_seed(self, scenario_file, tmp_path,
                                                capsys):
        out = tmp_path / "out"
        main(["run", str(scenario_file), "--seed", "42", "--out", str(out)])
        summary = json.loads((out / "mini.summary.json").read_text())
        assert summary["seed"] == 42

    def test_trace_stdout(self, scenario_file, tmp_path, capsys):
        assert main(["trace", str(scenario_file), "--stdout",
                     "--out", str(tmp_path / "o")]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines
        kinds = {json.loads(l)["kind"] for l in lines}
        assert "scenario" in kinds and "summary" in kinds

    def test_sweep_aggregates_recomputed(self, scenario_file, tmp_path,
                                         capsys):
        out = tmp_path / "out"
        assert main(["sweep", str(scenario_file), "--seeds", "1..3",
                     "--out", str(out)]) == 0
        report = json.loads((out / "mini.sweep.json").read_text())
        assert report["runs"] == 3
        ratios = []
        delays = []
        for seed in (1, 2, 3):
            s = json.loads(
                (out / f"mini.seed{seed}.summary.json").read_text())
            ratios.append(s["packets_delivered"] / s["packets_sent"]
                          if s["packets_sent"] else 0.0)
            delays.append(s["mean_delay"])
        assert report["delivery_ratio"]["mean"] == \
            pytest.approx(sum(ratios) / 3, abs=1e-12)
        assert report["mean_delay"]["mean"] == \
            pytest.approx(sum(delays) / 3, abs=1e-12)

    def test_sweep_comma_seed_list(self, scenario_file, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["sweep", str(scenario_file), "--seeds", "4,9",
                     "--out", str(out)]) == 0
        report = json.loads((out / "mini.sweep.json").read_text())
        assert report["seeds"] == [4, 9]

import json
from pathlib import Path

import pytest

from qnet.cli import main

NETWORKS_DIR = Path(__file__).resolve().parents[1] / "networks"
QQ = str(NETWORKS_DIR / "fig_qq_loop.json")
QC = str(NETWORKS_DIR / "fig_qc_loop.json")
UNSTABLE = str(NETWORKS_DIR / "unstable_qq_loop.json")
NOMINAL = str(NETWORKS_DIR / "nominal_loop.json")


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestAnalyze:
    def test_certified_network_exits_zero(self, capsys):
        code, out, _ = run(capsys, "analyze", "--network", QQ, "--json")
        assert code == 0
        payload = json.loads(out)
        assert payload["certified"] is True
        assert payload["spectral_radius"] < 1.0

    def test_uncertified_network_exits_two_and_names_cycle(self, capsys):
        code, out, _ = run(capsys, "analyze", "--network", UNSTABLE, "--json")
        assert code == 2
        payload = json.loads(out)
        assert payload["certified"] is False
        assert payload["dominant_cycle"]["components"] == ["bsA", "sigmaA", "bsB", "sigmaB"]

    def test_reports_are_byte_identical(self, capsys):
        _, out1, _ = run(capsys, "analyze", "--network", QQ, "--json")
        _, out2, _ = run(capsys, "analyze", "--network", QQ, "--json")
        assert out1 == out2

    def test_malformed_document_exits_one(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"components": [{"id": "x", "kind": "beamsplitter", "params": {"epsilon": 1.2}}]}')
        code, _, err = run(capsys, "analyze", "--network", str(bad))
        assert code == 1
        assert "x" in err

    def test_missing_file_exits_one(self, capsys, tmp_path):
        code, _, err = run(capsys, "analyze", "--network", str(tmp_path / "absent.json"))
        assert code == 1

    def test_usage_error_exits_one(self, capsys):
        assert main(["analyze"]) == 1

    @pytest.mark.parametrize("name", ["fig_qq_loop", "fig_qc_loop", "nominal_loop",
                                      "oscillator_feedback", "unstable_qq_loop"])
    def test_expected_verdicts_via_cli(self, capsys, name):
        expected = json.loads((NETWORKS_DIR / f"{name}.expected.json").read_text())
        code, out, _ = run(capsys, "analyze", "--network",
                           str(NETWORKS_DIR / f"{name}.json"), "--json")
        assert code == (0 if expected["certified"] else 2)
        assert json.loads(out)["certified"] == expected["certified"]


class TestGain:
    def test_reports_certificates_and_computed_gains(self, capsys):
        code, out, _ = run(capsys, "gain", "--network", QQ, "--json")
        assert code == 0
        payload = json.loads(out)
        by_id = {c["id"]: c for c in payload["components"]}
        assert by_id["sigmaB"]["certificate"]["g"] == pytest.approx(1.2)
        assert by_id["sigmaB"]["hinf"]["g"] == pytest.approx(1.2, abs=1e-8)
        assert by_id["sigmaA"]["hinf"]["g"] == pytest.approx(1.0, abs=1e-8)

    def test_single_component_selection(self, capsys):
        code, out, _ = run(capsys, "gain", "--network", QQ, "--component", "sigmaA", "--json")
        assert code == 0
        assert len(json.loads(out)["components"]) == 1

    def test_unknown_component_is_usage_error(self, capsys):
        code, _, err = run(capsys, "gain", "--network", QQ, "--component", "ghost")
        assert code == 1

    def test_marginally_stable_component_reports_no_finite_gain(self, capsys, tmp_path):
        doc = tmp_path / "osc.json"
        doc.write_text(json.dumps({
            "components": [{"id": "osc", "kind": "oscillator",
                            "params": {"kappa": 1.0, "gamma": 0.0}}],
        }))
        code, out, _ = run(capsys, "gain", "--network", str(doc), "--json")
        assert code == 0
        payload = json.loads(out)["components"][0]
        assert payload["hinf"] is None
        assert "no finite mean square gain" in payload["note"]


class TestSimulate:
    def test_csv_contract(self, capsys, tmp_path):
        out_path = tmp_path / "traj.csv"
        code, _, _ = run(capsys, "simulate", "--network", NOMINAL, "--t-final", "20",
                         "--drive", "sin:u0=10,1,0", "--out", str(out_path))
        assert code == 0
        lines = out_path.read_text().strip().split("\n")
        header = lines[0].split(",")
        assert header[0] == "t"
        assert header[1:6] == ["u1.mean_r", "u1.mean_i", "u1.var_r", "u1.var_i", "u1.cum_norm2"]
        assert header[6:] == ["y1.mean_r", "y1.mean_i", "y1.var_r", "y1.var_i", "y1.cum_norm2"]
        times = [float(row.split(",")[0]) for row in lines[1:]]
        assert all(b > a for a, b in zip(times, times[1:]))
        assert times[-1] == 20.0

    def test_deterministic_output(self, capsys, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            run(capsys, "simulate", "--network", NOMINAL, "--t-final", "5",
                "--drive", "const:u0=1,0.5", "--out", str(path))
        assert a.read_bytes() == b.read_bytes()

    def test_imaginary_channel_drive(self, capsys, tmp_path):
        out_path = tmp_path / "traj.csv"
        code, _, _ = run(capsys, "simulate", "--network", NOMINAL, "--t-final", "5",
                         "--drive", "sin:u0.i=3,2,0.5", "--out", str(out_path))
        assert code == 0

    def test_unknown_drive_label_is_usage_error(self, capsys):
        code, _, err = run(capsys, "simulate", "--network", NOMINAL, "--t-final", "5",
                           "--drive", "sin:nope=1,1,0")
        assert code == 1
        assert "nope" in err


class TestRobustCommands:
    def test_robust_report(self, capsys):
        s2 = repr(1.0 / 2.0**0.5)
        code, out, _ = run(capsys, "robust", "--g", "1", "--delta", "0.5",
                           "--eps-u", s2, "--delta-u", s2, "--eps-y", s2, "--delta-y", s2,
                           "--json")
        assert code == 0
        payload = json.loads(out)
        assert payload["g_max"] == pytest.approx(2.0 / 3.0)
        assert payload["conservative_bound"] == pytest.approx(0.5)

    def test_robust_rejects_uncertified_nominal(self, capsys):
        s2 = repr(1.0 / 2.0**0.5)
        code, out, _ = run(capsys, "robust", "--g", "4", "--delta", "0.5",
                           "--eps-u", s2, "--delta-u", s2, "--eps-y", s2, "--delta-y", s2)
        assert code == 2

    def test_design_oscillator(self, capsys):
        code, out, _ = run(capsys, "design-oscillator", "--kappa", "0.4", "--gamma", "0.1",
                           "--delta", "0.8", "--g", "0.5", "--json")
        assert code == 0
        payload = json.loads(out)
        assert payload["G"] == pytest.approx(2.0 / 3.0)
        assert payload["decay_rate"] == pytest.approx(7.0 / 30.0)

    def test_design_oscillator_verify(self, capsys):
        code, out, _ = run(capsys, "design-oscillator", "--kappa", "0.4", "--gamma", "0.1",
                           "--delta", "0.8", "--g", "0.5", "--verify", "--json")
        assert code == 0
        payload = json.loads(out)
        assert payload["verification"]["passed"] is True

    def test_design_oscillator_ill_posed(self, capsys):
        code, _, _ = run(capsys, "design-oscillator", "--kappa", "0.4", "--gamma", "0.1",
                         "--delta", "0.9", "--g", "1.2")
        assert code == 2


class TestValidateCert:
    def test_sound_certificate_exits_zero(self, capsys):
        code, out, _ = run(capsys, "validate-cert", "--network", NOMINAL,
                           "--component", "sigma", "--trials", "20", "--seed", "3", "--json")
        assert code == 0
        assert json.loads(out)["passed"] is True

    def test_false_certificate_is_falsified(self, capsys, tmp_path):
        doc = tmp_path / "liar.json"
        doc.write_text(json.dumps({
            "components": [{
                "id": "liar", "kind": "custom",
                "params": {
                    "A": [], "B_beta": [], "C": [], "D": [[2.0]],
                    "input_kinds": ["classical-scalar"],
                    "output_kinds": ["classical-scalar"],
                    "certificate": {"g": 0.5, "mu": 0.0, "lambda": 0.0},
                },
            }],
        }))
        code, out, _ = run(capsys, "validate-cert", "--network", str(doc),
                           "--component", "liar", "--trials", "10", "--seed", "0", "--json")
        assert code == 2
        payload = json.loads(out)
        assert payload["passed"] is False
        assert payload["witness"]["lhs"] > payload["witness"]["rhs"]

    def test_seeded_reports_are_byte_identical(self, capsys):
        _, out1, _ = run(capsys, "validate-cert", "--network", NOMINAL,
                         "--component", "sigma", "--trials", "10", "--seed", "5", "--json")
        _, out2, _ = run(capsys, "validate-cert", "--network", NOMINAL,
                         "--component", "sigma", "--trials", "10", "--seed", "5", "--json")
        assert out1 == out2

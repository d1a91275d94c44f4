import json

import numpy as np
import pytest

from symkal import RankAmbiguityError, build_system, random_system
from symkal.cli import main
from symkal.documents import (
    canonical_json,
    parse_system_document,
    system_to_document,
)
from symkal.errors import DocumentError


@pytest.fixture()
def system_doc(tmp_path):
    doc = system_to_document(random_system(2, 1, seed=11))
    path = tmp_path / "system.json"
    path.write_text(canonical_json(doc))
    return path


def run_cli(capsys, *args):
    code = main([str(a) for a in args])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestAnalyze:
    def test_builtin_example(self, capsys):
        code, out, _ = run_cli(capsys, "analyze", "--builtin",
                               "--omega", 1, "--lambda", 1, "--gamma", 1)
        assert code == 0
        assert "k=1 l=1 d=1" in out

    def test_document(self, system_doc, capsys):
        code, out, _ = run_cli(capsys, "analyze", system_doc)
        assert code == 0
        assert "k=2 l=0 d=0" in out

    def test_zero_coupling_document(self, tmp_path, capsys):
        doc = system_to_document(build_system(np.eye(6), np.zeros((2, 6))))
        path = tmp_path / "zero.json"
        path.write_text(canonical_json(doc))
        code, out, _ = run_cli(capsys, "analyze", path)
        assert code == 0
        assert "k=0 l=0 d=3" in out

    def test_nonsymmetric_r_exits_2(self, tmp_path, capsys):
        doc = system_to_document(random_system(1, 1, seed=0))
        doc["R"][0][1] += 1.0
        path = tmp_path / "bad.json"
        path.write_text(canonical_json(doc))
        code, _, err = run_cli(capsys, "analyze", path)
        assert code == 2
        assert "R symmetric" in err
        assert "residual" in err

    def test_missing_file_exits_2(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "analyze", tmp_path / "absent.json")
        assert code == 2

    def test_builtin_and_path_conflict(self, system_doc, capsys):
        code, _, _ = run_cli(capsys, "analyze", "--builtin", system_doc)
        assert code == 2

    def test_ambiguous_rank_exits_3(self, system_doc, capsys, monkeypatch):
        import symkal.cli as cli_mod

        def explode(*args, **kwargs):
            raise RankAmbiguityError("forced for the exit-code contract")

        monkeypatch.setattr(cli_mod, "kalman_decompose", explode)
        code, _, err = run_cli(capsys, "analyze", system_doc)
        assert code == 3
        assert "ambiguous" in err


class TestDecompose:
    def test_json_report(self, system_doc, tmp_path, capsys):
        out_path = tmp_path / "report.json"
        code, _, _ = run_cli(capsys, "decompose", system_doc, "--output", out_path)
        assert code == 0
        report = json.loads(out_path.read_text())
        assert report["dims"] == {"k": 2, "l": 0, "d": 0}
        assert report["schema"] == 1
        assert len(report["labels"]) == 4

    def test_byte_identical_runs(self, system_doc, capsys):
        code1, out1, _ = run_cli(capsys, "decompose", system_doc)
        code2, out2, _ = run_cli(capsys, "decompose", system_doc)
        assert code1 == code2 == 0
        assert out1 == out2

    def test_roundtrip_bitwise(self, system_doc, capsys):
        code, out, _ = run_cli(capsys, "decompose", system_doc)
        assert code == 0
        report = json.loads(out)
        reparsed = json.loads(canonical_json(report))
        assert np.array_equal(np.array(report["V"]), np.array(reparsed["V"]))
        assert canonical_json(report) == canonical_json(reparsed)

    def test_text_format(self, system_doc, capsys):
        code, out, _ = run_cli(capsys, "decompose", system_doc, "--format", "text")
        assert code == 0
        assert "k=2 l=0 d=0" in out

    def test_write_failure_exits_4(self, system_doc, tmp_path, capsys):
        target = tmp_path / "missing_dir" / "report.json"
        code, _, err = run_cli(capsys, "decompose", system_doc, "--output", target)
        assert code == 4
        assert "cannot write" in err

    def test_relaxed_mode(self, system_doc, capsys):
        code, out, _ = run_cli(capsys, "decompose", system_doc, "--mode", "relaxed")
        assert code == 0
        assert json.loads(out)["mode"] == "relaxed"


class TestVerify:
    def _decompose(self, system_doc, tmp_path, capsys):
        report_path = tmp_path / "report.json"
        code, _, _ = run_cli(capsys, "decompose", system_doc, "--output", report_path)
        assert code == 0
        return report_path

    def test_clean_report_exits_0(self, system_doc, tmp_path, capsys):
        report_path = self._decompose(system_doc, tmp_path, capsys)
        code, out, _ = run_cli(capsys, "verify", system_doc, report_path)
        assert code == 0
        assert "all checks passed" in out

    def test_perturbed_v_exits_5(self, system_doc, tmp_path, capsys):
        report_path = self._decompose(system_doc, tmp_path, capsys)
        report = json.loads(report_path.read_text())
        report["V"][0][0] += 1e-3
        report_path.write_text(canonical_json(report))
        code, _, err = run_cli(capsys, "verify", system_doc, report_path)
        assert code == 5
        assert "symplecticity" in err

    def test_other_tolerance_still_passes(self, system_doc, tmp_path, capsys):
        report_path = self._decompose(system_doc, tmp_path, capsys)
        code, _, _ = run_cli(capsys, "verify", system_doc, report_path,
                             "--tolerance", "10.0")
        assert code == 0

    def test_malformed_report_exits_2(self, system_doc, tmp_path, capsys):
        report_path = tmp_path / "broken.json"
        report_path.write_text('{"schema": 1}\n')
        code, _, err = run_cli(capsys, "verify", system_doc, report_path)
        assert code == 2


class TestExample:
    def test_json_payload(self, capsys):
        code, out, _ = run_cli(capsys, "example", "--omega", 1,
                               "--lambda", 1, "--gamma", 1)
        assert code == 0
        payload = json.loads(out)
        assert payload["coefficients"]["a"] == pytest.approx(5 / 6)
        assert payload["coefficients"]["b"] == pytest.approx(1 / 6)
        assert payload["report"]["dims"] == {"k": 1, "l": 1, "d": 1}
        V_ref = np.array(payload["refinement"]["report"]["V"])
        s2 = 1 / np.sqrt(2)
        solid = np.abs(V_ref[np.abs(V_ref) > 1e-9])
        assert np.allclose(np.sort(solid), [s2] * 8 + [1.0] * 2, atol=1e-9)
        assert "X" in payload["refinement"] and "Y" in payload["refinement"]

    def test_example_document_parses(self, capsys):
        code, out, _ = run_cli(capsys, "example")
        payload = json.loads(out)
        system, _ = parse_system_document(payload["system"])
        assert system.n == 3 and system.m == 1

    def test_nco_state_row(self, capsys):
        code, out, _ = run_cli(capsys, "example")
        payload = json.loads(out)
        report = payload["refinement"]["report"]
        idx = report["labels"].index("nco")
        row = np.array(report["V"][idx])
        s2 = 1 / np.sqrt(2)
        assert np.allclose(np.abs(row), [s2, s2, 0, 0, 0, 0], atol=1e-9)

    def test_nonpositive_parameter_exits_2(self, capsys):
        code, _, err = run_cli(capsys, "example", "--omega", -1)
        assert code == 2


class TestGenerate:
    def test_deterministic_output(self, capsys):
        code1, out1, _ = run_cli(capsys, "generate", "--n", 2, "--m", 1, "--seed", 5)
        code2, out2, _ = run_cli(capsys, "generate", "--n", 2, "--m", 1, "--seed", 5)
        assert code1 == code2 == 0
        assert out1 == out2

    def test_generated_document_valid(self, capsys, tmp_path):
        path = tmp_path / "gen.json"
        code, _, _ = run_cli(capsys, "generate", "--n", 3, "--m", 2,
                             "--seed", 9, "--output", path)
        assert code == 0
        system, _ = parse_system_document(json.loads(path.read_text()))
        assert system.n == 3 and system.m == 2

    def test_generate_then_analyze(self, capsys, tmp_path):
        path = tmp_path / "gen.json"
        run_cli(capsys, "generate", "--n", 2, "--m", 2, "--seed", 4, "--output", path)
        code, out, _ = run_cli(capsys, "analyze", path)
        assert code == 0
        assert "k=" in out


class TestDocuments:
    def test_both_coupling_variants_rejected(self):
        doc = system_to_document(random_system(1, 1, seed=0))
        doc["coupling"]["Lq_re"] = [[0.0]]
        with pytest.raises(DocumentError, match="coupling"):
            parse_system_document(doc)

    def test_missing_field_named(self):
        with pytest.raises(DocumentError, match="'R'"):
            parse_system_document({"schema": 1, "n": 1, "m": 1,
                                   "coupling": {}, "scattering": {}})

    def test_shape_mismatch_named(self):
        doc = system_to_document(random_system(1, 1, seed=0))
        doc["R"] = [[0.0]]
        with pytest.raises(DocumentError, match="'R'"):
            parse_system_document(doc)

    def test_physical_variant_roundtrip(self, tmp_path, capsys):
        from symkal.documents import physical_to_document
        from symkal.optomech import hamiltonian_matrix, physical_spec
        doc = physical_to_document(physical_spec(1.0), hamiltonian_matrix(1.0, 1.0))
        path = tmp_path / "physical.json"
        path.write_text(canonical_json(doc))
        code, out, _ = run_cli(capsys, "analyze", path)
        assert code == 0
        assert "k=1 l=1 d=1" in out

    def test_tolerance_override_consumed(self):
        doc = system_to_document(random_system(1, 1, seed=0), tolerance=10.0)
        _, tol = parse_system_document(doc)
        assert tol == 10.0
        doc["tolerance"] = -1.0
        with pytest.raises(DocumentError, match="tolerance"):
            parse_system_document(doc)

"""Command-line surface: CSV contents, manifests, replay, exit codes."""

import csv
import json

from rgw.cli import main


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def read_manifest(path):
    with open(path) as fh:
        return json.load(fh)


class TestDensities:
    def test_full_interval_first_rows(self, tmp_path):
        assert main(["densities", "--example", "2", "--n-max", "4",
                     "--mode", "rational", "-o", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "densities.csv")
        assert rows[0] == ["n", "phi_n", "psi_n"]
        assert rows[1][:2] == ["1", "1"]
        assert rows[2][:2] == ["2", "3"]
        assert rows[3][:2] == ["3", "4"]
        assert rows[4][1].startswith("6.6666666666666666666666666666")

    def test_power_law_family_all_ones(self, tmp_path):
        assert main(["densities", "--example", "0", "--n-max", "5",
                     "-o", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "densities.csv")
        assert [r[1] for r in rows[1:]] == ["1"] * 5

    def test_operator_vs_recurrence_identical_files(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        for out, engine in ((a, "recurrence"), (b, "operator")):
            assert main(["densities", "--example", "1", "--n-max", "30",
                         "--mode", "rational", "--engine", engine,
                         "-o", str(out)]) == 0
        assert (a / "densities.csv").read_bytes() == (b / "densities.csv").read_bytes()

    def test_inadmissible_measure_exit_code(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"type":"finite","atoms":[{"weight":1,"coeffs":[1]}]}')
        code = main(["densities", "--measure", str(bad), "--n-max", "5",
                     "-o", str(tmp_path)])
        assert code == 2

    def test_missing_measure_exit_code(self, tmp_path):
        code = main(["densities", "--measure", str(tmp_path / "none.json"),
                     "--n-max", "5", "-o", str(tmp_path)])
        assert code == 4

    def test_measure_file_via_operator(self, tmp_path):
        spec = tmp_path / "m.json"
        spec.write_text(
            '{"type":"finite","atoms":[{"weight":1.0,"coeffs":[0.4375,0.5625]},'
            '{"weight":1.0,"coeffs":[0.75,0.25]}]}'
        )
        assert main(["densities", "--measure", str(spec), "--n-max", "3",
                     "--mode", "rational", "-o", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "densities.csv")
        assert rows[2][1].startswith("1.87387387387387387")  # 208/111


class TestRoots:
    def test_box_search_lists_known_pair(self, tmp_path):
        assert main(["roots", "--example", "2", "--box", "2,3,0,12",
                     "-o", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "roots.csv")
        assert len(rows) == 2
        assert rows[1][0].startswith("2.545364930374021")
        assert rows[1][1].startswith("10.75397517526887")
        assert rows[1][3] == "complex-pair"

    def test_two_poly_primary_closed_form(self, tmp_path):
        assert main(["roots", "--two-poly", "0.4375,0.75", "--primary",
                     "-o", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "roots.csv")
        assert rows[1][0].startswith("-1.605086917279545644")
        assert rows[1][3] == "primary-real"

    def test_half_interval_primary(self, tmp_path):
        assert main(["roots", "--example", "1", "--primary",
                     "-o", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "roots.csv")
        assert rows[1][0].startswith("-0.39042951566318")

    def test_wide_box_marks_spurious(self, tmp_path):
        assert main(["roots", "--example", "2", "--box=-1.5,1.0,0,5",
                     "-o", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "roots.csv")
        classes = {r[3] for r in rows[1:]}
        assert "spurious" in classes


class TestCompare:
    def test_full_interval_level3(self, tmp_path):
        assert main(["compare", "--example", "2", "--n-min", "3000",
                     "--n-max", "3200", "--level", "3", "-o", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "compare.csv")
        # level-3 residual is n^-3-ish: tiny diffs
        for row in rows[1:]:
            assert abs(float(row[3])) < 1e-6
        man = read_manifest(tmp_path / "compare.manifest.json")
        assert man["results"]["A"].startswith("1.62944567663546")

    def test_half_interval_fit_echoed(self, tmp_path):
        assert main(["compare", "--example", "1", "--n-min", "900",
                     "--n-max", "1000", "--mode", "xfloat",
                     "-o", str(tmp_path)]) == 0
        man = read_manifest(tmp_path / "compare.manifest.json")
        assert man["results"]["fitted_C"].startswith("1.22")


class TestPicardSimulate:
    def test_picard_manifest_results(self, tmp_path):
        assert main(["picard", "--grid-step", "1e-3", "--iters", "150",
                     "--stride", "100", "-o", str(tmp_path)]) == 0
        man = read_manifest(tmp_path / "picard.manifest.json")
        res = man["results"]
        assert abs(res["boundary_estimate"] - 1.6294456766354646) < 5e-3
        assert res["quarter_integral_residual"] < 1e-4
        # the identity error is grid-limited; ~1e-3 at this coarse step
        assert abs(res["parts_identity_diff"]) < 2e-3

    def test_picard_start_insensitivity(self, tmp_path):
        outs = []
        for h0 in ("const", "step"):
            out = tmp_path / h0
            assert main(["picard", "--grid-step", "1e-3", "--iters", "200",
                         "--h0", h0, "--stride", "200", "-o", str(out)]) == 0
            outs.append(read_manifest(out / "picard.manifest.json"))
        d = abs(outs[0]["results"]["boundary_estimate"]
                - outs[1]["results"]["boundary_estimate"])
        assert d < 1e-3

    def test_simulate_manifest_chi2(self, tmp_path):
        assert main(["simulate", "--example", "2", "--t", "2", "--trials",
                     "1e5", "--seed", "1", "-o", str(tmp_path)]) == 0
        man = read_manifest(tmp_path / "simulate.manifest.json")
        assert man["results"]["chi2_dof"] >= 1
        rows = read_csv(tmp_path / "simulate.csv")
        assert rows[0] == ["n", "count", "ratio_to_1", "stderr", "exact_prob"]
        assert rows[1][4] == "0.25"

    def test_simulate_reproducible(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["simulate", "--example", "2", "--t", "2",
                         "--trials", "2e4", "--seed", "7", "-o", str(out)]) == 0
        assert (a / "simulate.csv").read_bytes() == (b / "simulate.csv").read_bytes()


class TestReplay:
    def test_replay_reproduces_bytes(self, tmp_path):
        first = tmp_path / "first"
        again = tmp_path / "again"
        assert main(["densities", "--example", "2", "--n-max", "12",
                     "--mode", "rational", "-o", str(first)]) == 0
        assert main(["replay", str(first / "densities.manifest.json"),
                     "--out", str(again)]) == 0
        assert (first / "densities.csv").read_bytes() == (
            again / "densities.csv"
        ).read_bytes()

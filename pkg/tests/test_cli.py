import csv
import io
import json

import pytest

from ghzguard import cli
from ghzguard.cli import parse_p_range


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestSingle:
    def test_teleport_ghz_postselect(self, capsys):
        code, out, _ = run(capsys, "teleport", "--variant", "ghz", "--p", "0.1",
                           "--mode", "first-order", "--postselect")
        assert code == 0
        (row,) = rows_of(out)
        assert float(row["acceptance_rate"]) == pytest.approx(0.8, abs=1e-10)
        assert float(row["desired_component_weight"]) == pytest.approx(0.875, abs=1e-10)
        assert row["variant"] == "ghz"

    def test_dense_epr_noiseless(self, capsys):
        code, out, _ = run(capsys, "dense", "--variant", "epr", "--p", "0")
        assert code == 0
        (row,) = rows_of(out)
        assert float(row["desired_component_weight"]) == 1.0

    def test_domain_guard(self, capsys):
        code, out, err = run(capsys, "teleport", "--variant", "epr", "--p", "0.6", "--mode", "first-order")
        assert code != 0
        assert out == ""
        assert "error" in err

    def test_postselect_with_epr_only(self, capsys):
        code, _, err = run(capsys, "dense", "--variant", "epr", "--p", "0.1", "--postselect")
        assert code == 2
        assert "postselect" in err

    def test_both_variants_by_default(self, capsys):
        _, out, _ = run(capsys, "dense", "--p", "0.05", "--message", "10")
        assert [r["variant"] for r in rows_of(out)] == ["epr", "ghz"]

    def test_psi_flag(self, capsys):
        _, out, _ = run(capsys, "teleport", "--variant", "epr", "--p", "0", "--psi", "0.6,0.8j")
        assert float(rows_of(out)[0]["fidelity"]) == pytest.approx(1, abs=1e-10)

    def test_bad_psi(self, capsys):
        code, _, _ = run(capsys, "teleport", "--p", "0", "--psi", "1,1")
        assert code == 2

    def test_p_and_p_range_conflict(self, capsys):
        code, _, _ = run(capsys, "teleport", "--p", "0.1", "--p-range", "0:0.1:0.05")
        assert code == 2


class TestSweep:
    def test_header_and_order(self, capsys):
        code, out, _ = run(capsys, "sweep", "--protocol", "teleport", "--p-range", "0.01:0.2:0.01",
                           "--postselect")
        assert code == 0
        header = out.splitlines()[0].split(",")
        assert header == cli.PROTOCOL_COLUMNS
        rows = rows_of(out)
        assert len(rows) == 40
        ps = [float(r["p"]) for r in rows]
        assert ps == sorted(ps)

    def test_ghz_dominates_epr(self, capsys):
        _, out, _ = run(capsys, "sweep", "--protocol", "teleport", "--p-range", "0.01:0.2:0.01",
                        "--postselect")
        by_p = {}
        for r in rows_of(out):
            by_p.setdefault(r["p"], {})[r["variant"]] = float(r["desired_component_weight"])
        assert len(by_p) == 20
        for weights in by_p.values():
            assert weights["ghz"] > weights["epr"]

    def test_empty_grid(self, capsys):
        code, _, err = run(capsys, "sweep", "--protocol", "teleport", "--p-range", "0.2:0.1:0.01")
        assert code == 2
        assert "empty" in err

    def test_exact_mode_trace_distance_column(self, capsys):
        _, out, _ = run(capsys, "sweep", "--protocol", "teleport", "--p", "0.001", "--mode", "exact")
        rows = rows_of(out)
        assert "trace_distance_first_order" in rows[0]
        for r in rows:
            assert 0 < float(r["trace_distance_first_order"]) <= 10 * 0.001**2

    def test_nghz(self, capsys, caplog):
        code, out, _ = run(capsys, "sweep", "--protocol", "nghz", "--p", "0.05", "--n-max", "5")
        assert code == 0
        rows = rows_of(out)
        assert [int(r["n"]) for r in rows] == [2, 3, 4, 5]
        assert rows[0]["agrees"] == "false"
        assert all(r["agrees"] == "true" for r in rows[1:])
        assert "N=2" in caplog.text

    def test_byte_stable_file(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            assert run(capsys, "sweep", "--protocol", "dense", "--p-range", "0:0.1:0.05",
                       "--out", str(path))[0] == 0
        assert a.read_bytes() == b.read_bytes()
        assert "desired_component_weight" in a.read_text().splitlines()[0]

    def test_unwritable_path(self, tmp_path, capsys):
        target = tmp_path / "missing" / "out.csv"
        code, _, err = run(capsys, "sweep", "--protocol", "dense", "--p", "0.1", "--out", str(target))
        assert code == 2
        assert "cannot write" in err

    def test_json_round_trip(self, capsys):
        _, out, _ = run(capsys, "sweep", "--protocol", "teleport", "--p", "0.1", "--format", "json",
                        "--psi", "0.6,0.8j")
        doc = json.loads(out)
        assert json.dumps(doc, indent=2) + "\n" == out
        assert doc["command"] == "sweep"
        for row in doc["rows"]:
            assert set(cli.PROTOCOL_COLUMNS) <= set(row)
        assert doc["meta"]["psi"][1] == {"re": 0.0, "im": 0.8}


class TestPRange:
    def test_inclusive(self):
        assert parse_p_range("0:0.1:0.05") == (0.0, 0.05, 0.1)

    def test_no_float_drift(self):
        values = parse_p_range("0.01:0.2:0.01")
        assert values[-1] == 0.2
        assert values[2] == 0.03

    def test_bad_step(self):
        with pytest.raises(cli.UsageError):
            parse_p_range("0:0.1:0")


class TestOptimalN:
    def test_p_005(self, capsys):
        _, out, _ = run(capsys, "optimal-n", "--p", "0.05", "--n-max", "8")
        rows = rows_of(out)
        eff = {int(r["n"]): float(r["efficiency"]) for r in rows}
        assert eff[3] == pytest.approx(0.85 / 0.9, abs=1e-10)
        assert eff[4] == pytest.approx(0.8 / 0.85, abs=1e-10)
        assert [int(r["n"]) for r in rows if r["is_argmax"] == "true"] == [3]

    def test_noiseless_tie(self, capsys):
        _, out, _ = run(capsys, "optimal-n", "--p", "0.0", "--n-max", "8", "--format", "json")
        doc = json.loads(out)
        assert doc["meta"]["argmax"] == 3
        assert doc["meta"]["degenerate"] is True
        assert all(r["efficiency"] == 1 for r in doc["rows"])

    def test_p_02(self, capsys):
        _, out, _ = run(capsys, "optimal-n", "--p", "0.2", "--n-max", "4", "--format", "json")
        assert json.loads(out)["meta"]["argmax"] == 3

    def test_guard(self, capsys):
        code, _, _ = run(capsys, "optimal-n", "--p", "0.2", "--n-max", "6")
        assert code == 2


class TestMc:
    ARGS = ("mc", "--protocol", "dense-ghz", "--p", "0.05", "--shots", "100000", "--seed", "42",
            "--message", "01", "--postselect")

    def test_z_report(self, capsys):
        code, out, _ = run(capsys, *self.ARGS, "--format", "json")
        assert code == 0
        doc = json.loads(out)
        assert doc["meta"]["seed"] == 42
        assert doc["meta"]["rng"] == "numpy.PCG64/SeedSequence"
        assert all(abs(r["z"]) <= 4 for r in doc["rows"])
        assert doc["meta"]["flagged_labels"] == []

    def test_identical_bytes(self, capsys):
        first = run(capsys, *self.ARGS)[1]
        second = run(capsys, *self.ARGS)[1]
        assert first == second
        assert first.splitlines()[0].split(",") == cli.MC_COLUMNS

    def test_workers_do_not_change_output(self, capsys):
        base = run(capsys, *self.ARGS, "--partitions", "4")[1]
        threaded = run(capsys, *self.ARGS, "--partitions", "4", "--workers", "4")[1]
        assert base == threaded

    def test_zero_shots(self, capsys):
        code, out, err = run(capsys, "mc", "--protocol", "dense-ghz", "--p", "0.05", "--shots", "0")
        assert code == 2
        assert out == ""
        assert "shots" in err

    def test_missing_p(self, capsys):
        assert run(capsys, "mc", "--protocol", "teleport-epr")[0] == 2

import csv
import io
import json

import pytest

from fbmc_pevd.cli import main


def _rows(text):
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


class TestCLI:
    def test_config_echo(self, capsys):
        assert main(["config", "--set", "pevd.N=5", "--seed", "3"]) == 0
        out = capsys.readouterr().out
        assert "N: 5" in out and "seed: 3" in out

    def test_config_file(self, tmp_path, capsys):
        p = tmp_path / "c.yaml"
        p.write_text("L: 40\npevd:\n  algorithm: smd\n")
        assert main(["config", "--config", str(p), "--set", "L=20"]) == 0
        out = capsys.readouterr().out
        assert "L: 20.0" in out and "algorithm: smd" in out

    @pytest.mark.parametrize("argv", [
        ["run", "--set", "M=12"],
        ["run", "--set", "pevd.iters=3"],
        ["run", "--set", "novalue"],
        ["run", "--config", "/nonexistent.yaml"],
        ["sweep", "--axis", "snr", "--values", ","],
        ["design", "--set", "precoder=none"],
    ])
    def test_errors_exit_nonzero(self, argv, capsys):
        assert main(argv) != 0
        assert capsys.readouterr().err.startswith("error:")

    def test_bad_axis_rejected_by_parser(self):
        with pytest.raises(SystemExit) as ei:
            main(["sweep", "--axis", "power", "--values", "1"])
        assert ei.value.code != 0

    def test_design_then_run(self, tmp_path):
        pj = tmp_path / "p.json"
        d_out = tmp_path / "d.csv"
        assert main(["design", "--set", "pevd.N=10", "--export", str(pj),
                     "--out", str(d_out)]) == 0
        assert len(json.loads(pj.read_text())["precoders"]) == 16
        rows = _rows(d_out.read_text())
        assert len(rows) == 16 and {r["k"] for r in rows} == {str(k) for k in range(16)}

        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        common = ["--set", "pevd.N=10", "--set", "snr_db=12", "--set", "symbols_per_run=4000"]
        assert main(["run", "--precoders", str(pj), "--out", str(a)] + common) == 0
        assert main(["run", "--out", str(b)] + common) == 0
        ra, rb = _rows(a.read_text())[0], _rows(b.read_text())[0]
        assert ra["ber"] == rb["ber"] and ra["evm_percent"] == rb["evm_percent"]

    def test_precoder_count_mismatch(self, tmp_path):
        pj = tmp_path / "p.json"
        assert main(["design", "--set", "M=8", "--set", "pevd.N=3", "--export", str(pj),
                     "--out", str(tmp_path / "d.csv")]) == 0
        assert main(["run", "--precoders", str(pj)]) != 0

    def test_sweep_rows(self, capsys):
        assert main(["sweep", "--axis", "snr", "--values", "4,8",
                     "--set", "symbols_per_run=2000", "--set", "pevd.N=5"]) == 0
        rows = _rows(capsys.readouterr().out)
        assert [r["snr_db"] for r in rows] == ["4.0", "8.0"]

    def test_run_is_byte_identical(self, capsys):
        argv = ["run", "--seed", "4", "--set", "snr_db=9", "--set", "symbols_per_run=2000"]
        main(argv)
        first = capsys.readouterr().out
        main(argv)
        assert capsys.readouterr().out == first

    def test_bench(self, capsys):
        assert main(["bench", "--axis", "iterations", "--values", "2,4", "--repeats", "1"]) == 0
        assert len(_rows(capsys.readouterr().out)) == 2

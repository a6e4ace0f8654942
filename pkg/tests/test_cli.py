import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest

from sclab.cli import EXIT_CONFIG, EXIT_NOT_FOUND, EXIT_OK, main
from sclab.formats import load_key, load_params, read_records, read_waveform
from sclab.leaksim import record_to_leak
from sclab.sign import SignatureSample, verify

DATA = Path(__file__).parent / "data"

# reference lattice-construction statistics, one line per row:
# attack, N, d+2, Min, Max, Median, Mean, Stdev, Time (minutes), Ratio
REFERENCE_ROWS = """\
timing,2048,78,1,1374,25,59.9,102.4,0.3,0.99
timing,1536,78,1,4826,6,48.9,255.7,0.1,0.99
timing,1280,78,1,10169,6,67.4,450.1,0.1,0.74
timing,1152,78,1,10726,7,148.3,839.9,0.1,0.38
wnaf,40,92,1,2522,77,273.5,492.4,2.1,0.11
wnaf,40,132,1,50,2,4.9,7.9,0.9,0.09
wnaf,40,172,1,158,2,7.1,19.4,1.3,0.08
wnaf,30,92,5,3673,522,781.4,872.7,14.5,0.05
wnaf,30,132,1,1855,130,306.3,407.1,9.8,0.14
wnaf,30,172,1,2008,173,322.6,425.0,22.1,0.13
wnaf-error-free,40,92,1,2725,35,197.4,425.4,1.0,0.92
wnaf-error-free,30,92,1,2814,357,641.9,711.6,7.7,0.23
wnaf-error-free,30,132,1,1969,178,370.5,442.8,13.6,0.73
wnaf-error-free,20,132,47,1616,646,671.8,524.8,47.5,0.02
wnaf-error-free,20,172,2,1617,771,792.6,517.1,97.5,0.02
wnaf-signed,40,92,1,2817,3,80.2,277.4,0.3,0.94
wnaf-signed,30,92,1,2854,101,430.5,672.6,2.4,0.44
wnaf-signed,30,132,1,840,13,76.2,145.1,1.9,0.83
wnaf-signed,20,132,1,1893,363,569.3,622.3,18.5,0.03
wnaf-signed,20,172,4,2127,663,782.7,643.7,64.2,0.04
"""


def _write(path, text):
    path.write_text(text)
    return str(path)


def _csv_rows(path):
    return list(csv.DictReader(io.StringIO(Path(path).read_text())))


class TestBasics:
    def test_groups(self, capsys):
        assert main(["groups"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "toy_curve64" in out and "secp384r1" in out

    def test_keygen_sign(self, tmp_path):
        assert main(["keygen", "--group", "toy_curve64", "--seed", "1", "--out", str(tmp_path)]) == EXIT_OK
        key = load_key(tmp_path / "key.ini")
        assert key["kind"] == "ecdsa"
        assert main(["sign", "--key", str(tmp_path / "key.ini"), "--count", "3", "--leak", "-w", "5",
                     "--seed", "2", "--out", str(tmp_path)]) == EXIT_OK
        recs = read_records(tmp_path / "signatures.jsonl")
        curve = load_params("toy_curve64")
        assert recs[0]["type"] == "header"
        for rec in recs[1:]:
            sig = SignatureSample(int(rec["r"]), int(rec["s"]), int(rec["h"]))
            assert verify(sig, sig.h, key["public"], curve)
            assert record_to_leak(rec["leak"]).ops

    def test_rsa_keygen(self, tmp_path):
        assert main(["keygen", "--rsa-bits", "256", "--seed", "3", "--out", str(tmp_path)]) == EXIT_OK
        key = load_key(tmp_path / "key.ini")
        assert key["p"] * key["q"] == key["n"]


class TestConfigErrors:
    def test_unknown_field(self, tmp_path, capsys):
        cfg = _write(tmp_path / "c.ini", "[lattice]\ncolour = red\n")
        assert main(["attack", "dsa-timing", "--config", cfg]) == EXIT_CONFIG
        assert "lattice.colour" in capsys.readouterr().err

    def test_bad_value(self, tmp_path, capsys):
        cfg = _write(tmp_path / "c.ini", "[samples]\ncount = many\n")
        assert main(["leak", "--config", cfg]) == EXIT_CONFIG
        assert "samples.count" in capsys.readouterr().err

    def test_unknown_section(self, tmp_path, capsys):
        cfg = _write(tmp_path / "c.ini", "[extras]\nx = 1\n")
        assert main(["leak", "--config", cfg]) == EXIT_CONFIG
        assert "extras" in capsys.readouterr().err

    def test_attack_mismatch(self, tmp_path, capsys):
        cfg = _write(tmp_path / "c.ini", "[experiment]\nattack = rsa\n")
        assert main(["attack", "dsa-timing", "--config", cfg]) == EXIT_CONFIG
        assert "experiment.attack" in capsys.readouterr().err

    def test_bad_env(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("SCLAB_SEED", "abc")
        assert main(["leak", "--count", "1", "--out", str(tmp_path)]) == EXIT_CONFIG
        assert "SCLAB_SEED" in capsys.readouterr().err

    def test_missing_input(self, tmp_path):
        assert main(["attack", "dsa-timing", "--input", str(tmp_path / "nope.jsonl")]) == EXIT_CONFIG


class TestAttack:
    def test_bundled_dataset(self, tmp_path, capsys):
        code = main(["attack", "dsa-timing", "--config", str(DATA / "timing_noise_free.ini"),
                     "--input", str(DATA / "timing_noise_free.jsonl"), "--out", str(tmp_path)])
        assert code == EXIT_OK
        rows = _csv_rows(tmp_path / "stats.csv")
        assert len(rows) == 1 and rows[0]["Ratio"] == "1.00"
        err = capsys.readouterr().err
        assert "seed 2024" in err and "config " in err

    def test_deterministic_across_jobs(self, tmp_path):
        cfg = _write(tmp_path / "c.ini", "[samples]\ncount = 2048\nsigma_windows = 0\n[experiment]\ntrials = 2\n")
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["attack", "dsa-timing", "--config", cfg, "--seed", "7", "--out", str(a)]) == EXIT_OK
        assert main(["attack", "dsa-timing", "--config", cfg, "--seed", "7", "--jobs", "2", "--out", str(b)]) == EXIT_OK
        assert (a / "records.jsonl").read_bytes() == (b / "records.jsonl").read_bytes()
        recs = read_records(a / "records.jsonl")
        assert [r["trial"] for r in recs] == [0, 1] and len({r["seed"] for r in recs}) == 2
        assert all("_seconds" not in r for r in recs)
        assert len(read_records(a / "timings.jsonl")) == 2

    def test_not_found_status(self, tmp_path):
        cfg = _write(tmp_path / "c.ini", "[samples]\ncount = 2048\nsigma_windows = 20\n"
                                         "[lattice]\nmax_lattices = 1\nrerandomize = 0\nblock_size = 2\n")
        assert main(["attack", "dsa-timing", "--config", cfg, "--seed", "1", "--out", str(tmp_path)]) == EXIT_NOT_FOUND
        assert _csv_rows(tmp_path / "stats.csv")[0]["Ratio"] == "0.00"

    def test_rsa(self, tmp_path):
        cfg = _write(tmp_path / "c.ini", "[noise]\npreset = none\n[rsa]\nmodulus_bits = 256\n")
        assert main(["attack", "rsa", "--config", cfg, "--seed", "3", "--out", str(tmp_path)]) == EXIT_OK
        rec = read_records(tmp_path / "records.jsonl")[0]
        assert rec["success"] and rec["oracle_calls"] == 1


class TestLeakAndDsp:
    def test_rsa_waveforms(self, tmp_path):
        cfg = _write(tmp_path / "c.ini", "[experiment]\nattack = rsa\n[rsa]\nmodulus_bits = 256\n")
        assert main(["leak", "--config", cfg, "--count", "2", "--waveforms", "--out", str(tmp_path)]) == EXIT_OK
        recs = read_records(tmp_path / "leaks.jsonl")
        assert len(recs) == 2 and recs[0]["type"] == "rsa_traces"
        wave, rate = read_waveform(tmp_path / "trace_00000_p.wav.bin")
        assert rate == 1.0 and wave.size > 100 and np.isfinite(wave).all()

    def test_signed_dataset_has_no_nonce(self, tmp_path):
        cfg = _write(tmp_path / "c.ini", "[experiment]\nattack = ecdsa-signed\ngroup = toy_curve64\n")
        assert main(["leak", "--config", cfg, "--count", "3", "--out", str(tmp_path)]) == EXIT_OK
        text = (tmp_path / "leaks.jsonl").read_text()
        assert "nonce" not in text
        assert json.loads(text.splitlines()[1])["leak"]["kind"] == "signed"

    def test_dsp_fit(self, tmp_path):
        assert main(["dsp-fit", "--train", "20", "--test", "5", "--bits", "256", "--noise", "none",
                     "--seed", "4", "--out", str(tmp_path)]) == EXIT_OK
        assert len(read_records(tmp_path / "dsp_models.jsonl")) == 17
        assert "component_error_rate 0.000000" in (tmp_path / "dsp_eval.txt").read_text()


class TestReport:
    def test_reference_aggregates(self, tmp_path):
        assert main(["report", str(DATA / "table_records.jsonl"), "--timings", str(DATA / "table_timings.jsonl"),
                     "--out", str(tmp_path)]) == EXIT_OK
        rows = {(r["attack"], r["N"], r["dim"]): r for r in _csv_rows(tmp_path / "stats.csv")}
        for line in REFERENCE_ROWS.splitlines():
            attack, N, dim, *vals = line.split(",")
            r = rows[(attack, N, dim)]
            got = [r[c] for c in ("Min", "Max", "Median", "Mean", "Stdev", "Time", "Ratio")]
            assert got == vals, line
        rsa = rows[("rsa-combined", "2048", "")]
        # min 1, median 1, mean 3, max 720 over the keys that were recovered
        assert (rsa["Min"], rsa["Median"], round(float(rsa["Mean"])), rsa["Max"]) == ("1", "1", 3, "720")

    def test_aggregates_recomputable(self):
        recs = [r for r in read_records(DATA / "table_records.jsonl")
                if r["attack"] == "timing" and r["N"] == 1536 and r["success"]]
        vals = np.array([r["lattices"] for r in recs])
        assert len(vals) == 990
        assert (vals.min(), vals.max(), np.median(vals)) == (1, 4826, 6)
        assert round(vals.mean(), 1) == 48.9 and round(vals.std(ddof=1), 1) == 255.7

    def test_empty(self, tmp_path):
        empty = tmp_path / "e.jsonl"
        empty.write_text("")
        assert main(["report", str(empty)]) == EXIT_CONFIG

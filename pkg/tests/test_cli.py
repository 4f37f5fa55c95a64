import json
import math
import subprocess
import sys

import numpy as np
import pytest

from squeezelab import io, presets
from squeezelab.cli import main
from squeezelab.spectrum import synthesize_spectrum


def run(*argv):
    return main([str(a) for a in argv])


def read_map(path):
    _, header, rows = io.read_csv(path)
    assert header == ["key", "value"]
    return dict(rows)


class TestAnalyze:
    def test_preset_pairs(self, tmp_path, capsys):
        assert run("analyze", "--format", "json") == 0
        report = json.loads(capsys.readouterr().out)
        assert 0.046 <= report["vacuum_fraction"] <= 0.050
        assert len(report["states"]) == 3

    def test_pure_pair(self, tmp_path):
        out = tmp_path / "a.csv"
        assert run("analyze", "--pair=-3.05,3.05", "--out", out) == 0
        _, header, rows = io.read_csv(out)
        rec = dict(zip(header, rows[0]))
        assert float(rec["eta_gamma"]) == 1.0
        assert float(rec["purity"]) == pytest.approx(1.0, abs=1e-12)

    def test_vacuum_pair_rejected(self, capsys):
        assert run("analyze", "--pair=0,0") == 2
        assert "not squeezed" in capsys.readouterr().err

    def test_malformed_pair(self):
        with pytest.raises(SystemExit) as exc:
            run("analyze", "--pair=abc")
        assert exc.value.code == 2


class TestFock:
    @pytest.mark.parametrize("pair", [(-2.84, 2.94), (-6.2, 6.7), (-11.5, 16.0)])
    def test_regenerates_golden_matrix(self, pair, tmp_path, reference_matrices):
        prefix = tmp_path / "m"
        assert run("fock", f"--state={pair[0]},{pair[1]}", "--normalize", "--out", prefix) == 0
        cols = io.read_columns(f"{prefix}_rho.csv", ["row", "col", "value"])
        rho = np.zeros((11, 11))
        rho[cols["row"].astype(int), cols["col"].astype(int)] = cols["value"]
        assert np.abs(rho - reference_matrices[pair]).max() <= 5e-5
        assert np.all(cols["value"] != 0)
        pn = io.read_columns(f"{prefix}_pn.csv", ["n", "probability"])
        assert np.array_equal(pn["probability"], np.diag(rho))

    def test_vacuum_single_entry(self, tmp_path):
        prefix = tmp_path / "v"
        assert run("fock", "--state=0,0", "--out", prefix) == 0
        _, header, rows = io.read_csv(f"{prefix}_rho.csv")
        assert rows == [["0", "0", "1"]]

    def test_json_bundle(self, tmp_path):
        prefix = tmp_path / "j"
        assert run("fock", "--state=-6.2,6.7", "--format", "json", "--out", prefix) == 0
        body = io.read_json(f"{prefix}.json")
        assert body["truncation"] == 10 and body["work_truncation"] == 170
        assert body["trace_deficit"] < 1e-6
        assert np.array(body["density_matrix"]).shape == (11, 11)
        assert body["state_db"] == pytest.approx([-6.2, 6.7])

    def test_verify_oracle(self, tmp_path, capsys):
        assert run("fock", "--state=-11.5,16", "--verify-oracle", "--format", "json",
                   "--out", tmp_path / "o") == 0
        body = io.read_json(tmp_path / "o.json")
        assert body["oracle_agrees"] and body["oracle_max_deviation"] < 1e-6
        assert "oracle max deviation" in capsys.readouterr().err

    def test_csv_needs_prefix(self):
        assert run("fock", "--state=0,0") == 2

    def test_unwritable_path(self, tmp_path):
        assert run("fock", "--state=0,0", "--out", tmp_path / "missing" / "x") == 4

    def test_unphysical_state(self, capsys):
        assert run("fock", "--state=-3,1", "--out", "x") == 2
        assert "state" in capsys.readouterr().err


class TestWigner:
    def test_vacuum_grid(self, tmp_path):
        prefix = tmp_path / "w"
        assert run("wigner", "--state=0,0", "--points", 65, "--out", prefix) == 0
        comments, _, _ = io.read_csv(f"{prefix}.csv")
        norm = [c for c in comments if c.startswith("normalization=")][0]
        assert float(norm.split("=")[1]) == pytest.approx(1.0, abs=1e-6)
        cols = io.read_columns(f"{prefix}.csv", ["x1", "x2", "w"])
        assert cols["w"].max() == pytest.approx(2 / math.pi, rel=1e-12)
        assert cols["w"].size == 65 * 65

    def test_marginals(self, tmp_path):
        prefix = tmp_path / "w"
        assert run("wigner", "--state=-6.2,6.7", "--out", prefix) == 0
        _, header, rows = io.read_csv(f"{prefix}_marginals.csv")
        assert header == ["axis", "x", "density", "vacuum_density"]
        x1 = np.array([[float(r[1]), float(r[2])] for r in rows if r[0] == "x1"])
        dx = x1[1, 0] - x1[0, 0]
        var = float((x1[:, 0] ** 2 * x1[:, 1]).sum() * dx)
        assert var == pytest.approx(0.25 * 10**-0.62, rel=1e-6)

    def test_degenerate_grid(self):
        assert run("wigner", "--state=0,0", "--points", 2, "--out", "x") == 2
        assert run("wigner", "--state=0,0", "--n-sigma", -1, "--out", "x") == 2


class TestSpectrum:
    def test_eval(self, tmp_path):
        out = tmp_path / "e.csv"
        assert run("spectrum", "eval", "--kappa", 1.25e9, "--f-min-mhz", 5, "--f-max-mhz", 100,
                   "--points", 20, "--out", out) == 0
        cols = io.read_columns(out, ["f_hz", "v1_db", "v2_db"])
        assert cols["f_hz"][0] == 5e6
        assert cols["v1_db"][0] == pytest.approx(-11.446, abs=1e-3)
        assert cols["v2_db"][0] == pytest.approx(15.833, abs=1e-3)

    def test_bandwidth_preset(self, tmp_path):
        out = tmp_path / "b"
        assert run("spectrum", "bandwidth", "--out", out) == 0
        rec = read_map(f"{out}.csv")
        assert float(rec["bandwidth_mhz"]) == pytest.approx(170.0, rel=1e-9)
        assert float(rec["half_point_db"]) == pytest.approx(-2.71, abs=5e-3)

    def test_bandwidth_from_cavity(self, tmp_path, capsys):
        assert run("spectrum", "bandwidth", "--transmittance", 0.12, "--round-trip-loss", 0.001,
                   "--length-mm", 29.4, "--format", "json") == 0
        rec = json.loads(capsys.readouterr().out)
        assert rec["bandwidth_mhz"] == pytest.approx(170.0, rel=1e-3)

    def test_incomplete_cavity(self):
        assert run("spectrum", "bandwidth", "--transmittance", 0.12) == 2

    def test_fit(self, tmp_path):
        m = presets.spectrum_model()
        d = synthesize_spectrum(m, np.linspace(5e6, 100e6, 20))
        data = tmp_path / "d.csv"
        io.write_csv(data, ["f_hz", "v1_db", "v2_db"],
                     zip(d.frequencies, 10 * np.log10(d.v1_obs), 10 * np.log10(d.v2_obs)))
        out = tmp_path / "fit"
        assert run("spectrum", "fit", "--data", data, "--pump-ratio", 0.4, "--eta-gamma", 0.9,
                   "--kappa", 1e9, "--format", "json", "--out", out) == 0
        rec = io.read_json(f"{out}.json")
        assert rec["pump_ratio"] == pytest.approx(m.pump_ratio, rel=1e-6)
        assert rec["improved"] and not rec["ill_conditioned"]

    def test_fit_from_optimum_is_not_a_failure(self, tmp_path):
        out = tmp_path / "curve.csv"
        assert run("spectrum", "eval", "--points", 20, "--out", out) == 0
        assert run("spectrum", "fit", "--data", out, "--format", "json", "--out", tmp_path / "f") == 0
        rec = io.read_json(tmp_path / "f.json")
        assert rec["converged"] and rec["residual"] < 1e-20

    def test_fit_reports_conditioning(self, tmp_path, capsys):
        m = presets.spectrum_model()
        d = synthesize_spectrum(m, np.linspace(5e6, 100e6, 20))
        data = tmp_path / "d.csv"
        io.write_csv(data, ["f_hz", "v1_db", "v2_db"],
                     zip(d.frequencies, 10 * np.log10(d.v1_obs), 10 * np.log10(d.v2_obs)))
        assert run("spectrum", "fit", "--data", data, "--which", "v2", "--pump-ratio", 0.4,
                   "--kappa", 1e9) == 0
        captured = capsys.readouterr()
        assert "ill-conditioned" in captured.err
        assert "ill_conditioned,true" in captured.out

    def test_fit_rejects_non_monotone(self, tmp_path):
        data = tmp_path / "bad.csv"
        io.write_csv(data, ["f_hz", "v1_db", "v2_db"],
                     [(2e6, -3, 3), (1e6, -3, 3), (3e6, -3, 3)])
        assert run("spectrum", "fit", "--data", data) == 2

    def test_fit_missing_column(self, tmp_path):
        data = tmp_path / "bad.csv"
        io.write_csv(data, ["f_hz", "v1_db"], [(1e6, -3), (2e6, -3), (3e6, -3)])
        assert run("spectrum", "fit", "--data", data) == 2

    def test_rate_small(self, tmp_path):
        out = tmp_path / "r"
        assert run("spectrum", "rate", "--half-fsr-ghz", 0.1, "--bin-khz", 1000, "--out", out) == 0
        rec = read_map(f"{out}.csv")
        assert int(rec["bins"]) == 100
        assert float(rec["power_w"]) / float(rec["rate_per_s"]) == pytest.approx(1.867e-19, rel=5e-4)
        pn = io.read_columns(f"{out}_pn.csv", ["n", "probability"])
        assert pn["probability"].sum() == pytest.approx(1.0, abs=1e-2)

    def test_rate_bad_ratio(self):
        assert run("spectrum", "rate", "--half-fsr-ghz", 0.1, "--bin-khz", 300) == 2

    def test_rate_truncation_failure(self):
        assert run("spectrum", "rate", "--half-fsr-ghz", 0.1, "--bin-khz", 1000,
                   "--truncation", 20) == 3


SIM_CONFIG = {
    "state_db": [-6.2, 6.7],
    "phase_schedule": [[0.0, 20000], [1.5707963267948966, 20000]],
    "dark_noise_db": -20,
    "seed": 42,
}


class TestSimulate:
    def test_outputs(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps(SIM_CONFIG))
        prefix = tmp_path / "s"
        assert run("simulate", "--config", cfg, "--out", prefix) == 0
        cols = io.read_columns(f"{prefix}_trace.csv", ["segment_index", "theta_radians", "sample_value"])
        assert cols["sample_value"].size == 60000
        assert np.all(np.isnan(cols["theta_radians"][cols["segment_index"] == -1]))
        comments, header, rows = io.read_csv(f"{prefix}_estimates.csv")
        assert "rng=numpy.random.PCG64" in comments and "seed=42" in comments
        for r in rows:
            rec = dict(zip(header, r))
            assert abs(float(rec["variance"]) - float(rec["expected_variance"])) < 3 * float(rec["stderr"])

    def test_flag_overrides_config(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps(SIM_CONFIG))
        assert run("simulate", "--config", cfg, "--seed", 7, "--format", "json",
                   "--out", tmp_path / "s") == 0
        assert io.read_json(tmp_path / "s_estimates.json")["seed"] == 7

    def test_sweep(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps(dict(
            SIM_CONFIG, state_db=[-2.9, 2.9], dark_noise_db=None,
            sweep={"rotation_rate": math.pi / 2_020_000, "total_samples": 2_020_000,
                   "window": 20_000})))
        assert run("simulate", "--config", cfg, "--out", tmp_path / "s") == 0
        rec = read_map(tmp_path / "s_sweep_summary.csv")
        assert abs(float(rec["min_db"]) + 2.9) < 3 * float(rec["min_stderr_db"])
        assert abs(float(rec["max_db"]) - 2.9) < 3 * float(rec["max_stderr_db"])
        assert float(rec["max_theta_radians"]) == pytest.approx(math.pi / 2, abs=0.1)

    @pytest.mark.parametrize("bad", [
        {"phase_schedule": [[0.0, 10]]},
        dict(SIM_CONFIG, unexpected=1),
        dict(SIM_CONFIG, phase_schedule=[[0.0, 1]]),
        dict(SIM_CONFIG, phase_schedule="zero"),
        dict(SIM_CONFIG, sweep={"window": 100}),
    ])
    def test_bad_config(self, tmp_path, bad):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps(bad))
        assert run("simulate", "--config", cfg, "--out", tmp_path / "s") == 2

    def test_unreadable_config(self, tmp_path):
        assert run("simulate", "--config", tmp_path / "none.json", "--out", tmp_path / "s") == 2


class TestDeterminismAndRoundTrip:
    def _all(self, root):
        cfg = root / "c.json"
        cfg.write_text(json.dumps(SIM_CONFIG))
        assert run("simulate", "--config", cfg, "--out", root / "sim") == 0
        assert run("simulate", "--config", cfg, "--format", "json", "--out", root / "simj") == 0
        assert run("fock", "--state=-11.5,16", "--out", root / "fock") == 0
        assert run("fock", "--state=-11.5,16", "--format", "json", "--out", root / "fockj") == 0
        assert run("wigner", "--state=-2.84,2.94", "--points", 33, "--out", root / "w") == 0
        assert run("analyze", "--out", root / "an.csv") == 0
        assert run("spectrum", "eval", "--out", root / "ev.csv") == 0
        assert run("spectrum", "bandwidth", "--out", root / "bw") == 0
        assert run("spectrum", "rate", "--half-fsr-ghz", 0.5, "--bin-khz", 1000,
                   "--out", root / "rate") == 0
        return {p.name: p.read_bytes() for p in sorted(root.iterdir()) if p.name != "c.json"}

    def test_byte_identical_reruns(self, tmp_path):
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        first = self._all(tmp_path / "a")
        second = self._all(tmp_path / "b")
        assert first.keys() == second.keys() and len(first) >= 12
        for name in first:
            assert first[name] == second[name], name

    def test_provenance_is_opt_in(self, tmp_path):
        assert run("spectrum", "bandwidth", "--out", tmp_path / "plain") == 0
        assert run("spectrum", "bandwidth", "--provenance", "--out", tmp_path / "prov") == 0
        plain = (tmp_path / "plain.csv").read_text()
        prov = (tmp_path / "prov.csv").read_text()
        assert "generated" not in plain
        assert prov.startswith("# generated ") and "squeezelab" in prov
        assert prov.splitlines()[1:] == plain.splitlines()

    def test_csv_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        values = np.concatenate([rng.standard_normal(500) * 10.0 ** rng.integers(-300, 300, 500),
                                 [0.0, -0.0, 1e-320, 1.7976931348623157e308, math.pi]])
        io.write_csv(tmp_path / "x.csv", ["v"], [(v,) for v in values])
        back = io.read_columns(tmp_path / "x.csv", ["v"])["v"]
        assert np.array_equal(back, values)

    def test_json_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        values = rng.standard_normal(300) * 10.0 ** rng.integers(-200, 200, 300)
        io.write_json(tmp_path / "x.json", {"v": values, "n": np.int64(3), "ok": np.bool_(True)})
        back = io.read_json(tmp_path / "x.json")
        assert np.array_equal(np.array(back["v"]), values)
        assert back["n"] == 3 and back["ok"] is True

    def test_fock_files_round_trip(self, tmp_path):
        from squeezelab import GaussianState, density_matrix
        assert run("fock", "--state=-6.2,6.7", "--out", tmp_path / "f") == 0
        assert run("fock", "--state=-6.2,6.7", "--format", "json", "--out", tmp_path / "f") == 0
        ref = density_matrix(GaussianState.from_db(-6.2, 6.7), 170).truncate(10).entries
        cols = io.read_columns(tmp_path / "f_rho.csv", ["row", "col", "value"])
        rho = np.zeros((11, 11))
        rho[cols["row"].astype(int), cols["col"].astype(int)] = cols["value"]
        assert np.abs(rho - ref).max() <= 1e-12
        assert np.abs(np.array(io.read_json(tmp_path / "f.json")["density_matrix"]) - ref).max() <= 1e-12


def test_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "squeezelab", "spectrum", "bandwidth", "--format", "json"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["bandwidth_hz"] == pytest.approx(170e6, rel=1e-9)

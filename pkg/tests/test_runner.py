import json
from pathlib import Path

import numpy as np
import pytest

from dipolespec.config import ConfigError, PRESETS, parse_config, preset_config
from dipolespec.runner import main

MINI = {
    "scheme": "rb87-tripod",
    "geometry": {"kind": "cylinder", "radius_nm": 200.0, "length_lambda0": 0.75},
    "medium": {"density": 5.0, "gamma_e": 1.0, "index_preset": "silica"},
    "placement": {"mode": "disordered", "seed": 7, "realizations": 3},
    "sweep": {"distances_nm": [260, 320, 420], "atom_placement": "radial"},
    "solver": {"cluster_tol": 0.01, "min_clearance_nm": 40.0},
}


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


class TestConfig:
    def test_parse_mini(self):
        cfg = parse_config(MINI)
        assert cfg.scheme.n_excited == 1
        assert cfg.model.target_eps == pytest.approx(1.45**2)
        assert cfg.placement_mode == "disordered"
        assert len(cfg.distances_nm) == 3
        resolved = cfg.resolved_dict()["resolved"]
        assert resolved["delta_M_over_gamma_inf"] == pytest.approx(58.4, abs=2.0)
        assert resolved["eps_at_omega0"][0] == pytest.approx(1.45**2, rel=1e-6)

    def test_exactly_one_medium_anchor(self):
        bad = json.loads(json.dumps(MINI))
        bad["medium"]["delta_m"] = 60.0
        with pytest.raises(ConfigError):
            parse_config(bad)
        del bad["medium"]["index_preset"]
        cfg = parse_config(bad)  # delta_m alone is fine
        assert cfg.model.target_eps is None

    def test_geometry_validation(self):
        bad = json.loads(json.dumps(MINI))
        bad["geometry"] = {"kind": "moebius"}
        with pytest.raises(ConfigError):
            parse_config(bad)
        bad["geometry"] = {"kind": "cylinder"}
        with pytest.raises(ConfigError):
            parse_config(bad)

    def test_distance_grid_forms(self):
        cfg = json.loads(json.dumps(MINI))
        cfg["sweep"] = {"start_nm": 250, "stop_nm": 1000, "points": 5,
                        "spacing": "geometric", "atom_placement": "radial"}
        parsed = parse_config(cfg)
        assert len(parsed.distances_nm) == 5
        assert parsed.distances_nm[0] == pytest.approx(250.0)
        assert parsed.distances_nm[-1] == pytest.approx(1000.0)
        ratios = parsed.distances_nm[1:] / parsed.distances_nm[:-1]
        assert np.allclose(ratios, ratios[0])

    def test_unsorted_distances_rejected(self):
        cfg = json.loads(json.dumps(MINI))
        cfg["sweep"]["distances_nm"] = [400, 260]
        with pytest.raises(ConfigError):
            parse_config(cfg)

    def test_presets_parse(self):
        for name in PRESETS:
            cfg = preset_config(name)
            assert cfg.distances_nm[-1] >= cfg.distances_nm[0]

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            preset_config("fig99-desk")


class TestCli:
    def test_fit_exit_and_output(self, tmp_path, capsys):
        code = main(["fit", "--preset", "fig10-fit", "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "delta_M = 233." in out
        csv = (tmp_path / "permittivity.csv").read_text().splitlines()
        assert csv[2] == "omega_over_gamma_inf,re_eps,im_eps"
        assert csv[0].startswith("# dipolespec")

    def test_fit_ingap_detuning(self, tmp_path, capsys):
        cfg = json.loads(json.dumps(MINI))
        cfg["medium"] = {"density": 20.0, "gamma_e": 1.0, "index_preset": "ingap"}
        code = main(["fit", "--config", _write(tmp_path, cfg), "--out", str(tmp_path)])
        assert code == 0
        eps = 3.31**2
        seed = np.pi * 20.0 * (eps + 2) / (eps - 1)
        out = capsys.readouterr().out
        delta = float(out.split("delta_M = ")[1].split()[0])
        assert delta == pytest.approx(seed, rel=0.03)

    def test_fit_rejects_unit_eps(self, tmp_path, capsys):
        cfg = json.loads(json.dumps(MINI))
        cfg["medium"] = {"density": 20.0, "target_eps": 1.0}
        code = main(["fit", "--config", _write(tmp_path, cfg), "--out", str(tmp_path)])
        assert code == 1

    def test_scan_csv_schema_and_sidecar(self, tmp_path):
        cfg = json.loads(json.dumps(MINI))
        cfg["vdw"] = {"enabled": True, "quad_tol": 1e-6}
        code = main(["scan", "--config", _write(tmp_path, cfg), "--out", str(tmp_path)])
        assert code == 0
        lines = (tmp_path / "scan.csv").read_text().splitlines()
        assert lines[1].startswith("# config-hash: ")
        assert lines[2] == ("distance_nm,label,multiplicity,gamma_over_gamma_inf,"
                            "delta_over_gamma_inf,stderr_gamma,stderr_delta,"
                            "n_realizations,vdw_shift_over_gamma_inf,vdw_quad_error")
        assert len(lines) == 3 + 3  # one cluster per distance for the tripod
        sidecar = json.loads((tmp_path / "scan.json").read_text())
        assert sidecar["run"]["diagnostics"]["n_scatterers"] > 0
        assert "rcond_min" in sidecar["run"]["diagnostics"]
        assert sidecar["resolved"]["seed"] == 7

    def test_thread_count_does_not_change_bytes(self, tmp_path):
        cfg_path = _write(tmp_path, MINI)
        assert main(["scan", "--config", cfg_path, "--out", str(tmp_path / "a"),
                     "--threads", "1"]) == 0
        assert main(["scan", "--config", cfg_path, "--out", str(tmp_path / "b"),
                     "--threads", "3"]) == 0
        assert (tmp_path / "a/scan.csv").read_bytes() == (tmp_path / "b/scan.csv").read_bytes()

    def test_seed_changes_disordered_output(self, tmp_path):
        cfg_path = _write(tmp_path, MINI)
        main(["scan", "--config", cfg_path, "--out", str(tmp_path / "a")])
        main(["scan", "--config", cfg_path, "--out", str(tmp_path / "b"), "--seed", "99"])
        assert (tmp_path / "a/scan.csv").read_bytes() != (tmp_path / "b/scan.csv").read_bytes()

    def test_memory_budget_refused(self, tmp_path):
        cfg = json.loads(json.dumps(MINI))
        cfg["solver"]["memory_budget_gb"] = 1e-6
        code = main(["scan", "--config", _write(tmp_path, cfg), "--out", str(tmp_path)])
        assert code == 2

    def test_oracle_pass_and_negative_control(self, capsys):
        assert main(["oracle", "--instances", "4", "--max-n", "12"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["pass"] and report["max_rel_error"] < 1e-10
        assert main(["oracle", "--instances", "2", "--max-n", "8",
                     "--corrupt-sign"]) == 3

    def test_oracle_size_cap(self):
        assert main(["oracle", "--instances", "1", "--max-n", "500"]) == 1

    def test_converge_needs_two_densities(self, tmp_path):
        cfg_path = _write(tmp_path, MINI)
        assert main(["converge", "--config", cfg_path, "--densities", "5",
                     "--out", str(tmp_path)]) == 1

    def test_converge_writes_overlay(self, tmp_path, capsys):
        cfg = json.loads(json.dumps(MINI))
        cfg["placement"]["realizations"] = 2
        code = main(["converge", "--config", _write(tmp_path, cfg),
                     "--densities", "4,6", "--out", str(tmp_path)])
        assert code == 0
        lines = (tmp_path / "converge.csv").read_text().splitlines()
        assert lines[2] == ("distance_nm,gamma_mean_n0_4,stderr_n0_4,"
                            "gamma_mean_n0_6,stderr_n0_6")
        summary = json.loads((tmp_path / "converge.json").read_text())
        assert "4-vs-6" in summary["run"]["max_rel_deviation"]

    def test_vdw_csv(self, tmp_path):
        code = main(["vdw", "--config", _write(tmp_path, MINI), "--out", str(tmp_path)])
        assert code == 0
        lines = (tmp_path / "vdw.csv").read_text().splitlines()
        assert lines[2] == "distance_nm,vdw_shift_over_gamma_inf,quad_error_estimate"
        vals = [float(x) for x in lines[3].split(",")]
        assert vals[1] < 0.0

    def test_usage_errors_are_config_errors(self, tmp_path):
        assert main(["scan"]) == 1  # no config or preset
        assert main(["scan", "--config", "x.json", "--preset", "fig2-desk"]) == 1
        assert main(["scan", "--config", str(tmp_path / "missing.json")]) == 1
        assert main(["frobnicate"]) == 1

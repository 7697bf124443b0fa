import json
import os

import numpy as np
import pytest

from bmcouple.cli import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK, SimConfig, main


def read(path):
    with open(path) as handle:
        return handle.read()


class TestSimulate:
    def test_writes_outputs(self, tmp_path):
        code = main(
            [
                "simulate", "--space", "sphere:2", "--strategy", "fixed-s2",
                "--rho0", "1.0", "--h", "1e-2", "--T", "0.1",
                "--paths", "5", "--seed", "7", "--out", str(tmp_path),
            ]
        )
        assert code == EXIT_OK
        csv_text = read(tmp_path / "trajectories.csv")
        assert csv_text.startswith("t,rho,regime,path_id\n")
        summary = json.loads(read(tmp_path / "summary.json"))
        assert summary["strategy"] == "fixed-s2"
        assert summary["n_paths"] == 5
        assert set(summary) == {
            "strategy", "law", "n_paths", "h_ladder", "sup_err", "fitted_order", "z_scores", "pass",
        }

    def test_law_comparison_written(self, tmp_path):
        code = main(
            [
                "simulate", "--space", "sphere:2", "--strategy", "so3-flow",
                "--rho0", "1.0", "--h", "1e-2", "--T", "0.1",
                "--paths", "3", "--seed", "7", "--law", "fixed", "--out", str(tmp_path),
            ]
        )
        assert code == EXIT_OK
        summary = json.loads(read(tmp_path / "summary.json"))
        assert summary["law"] == "fixed"
        assert summary["sup_err"][0] < 1e-12

    def test_zero_paths_is_config_error(self, tmp_path):
        code = main(
            [
                "simulate", "--space", "sphere:2", "--strategy", "fixed-s2",
                "--paths", "0", "--out", str(tmp_path),
            ]
        )
        assert code == EXIT_CONFIG

    def test_flat_positive_rate_is_infeasible(self, tmp_path):
        code = main(
            [
                "simulate", "--space", "flat:2", "--strategy", "rotation", "--k", "1.0",
                "--rho0", "1.0", "--h", "1e-2", "--T", "0.1",
                "--paths", "2", "--out", str(tmp_path),
            ]
        )
        assert code == EXIT_INFEASIBLE

    def test_unknown_strategy_is_config_error(self, tmp_path):
        code = main(
            ["simulate", "--strategy", "wormhole", "--paths", "2", "--out", str(tmp_path)]
        )
        assert code == EXIT_CONFIG

    def test_identical_seeds_identical_bytes(self, tmp_path):
        args = [
            "simulate", "--space", "sphere:2", "--strategy", "extrinsic-contract-s2",
            "--rho0", "0.8", "--h", "5e-3", "--T", "0.1", "--paths", "4", "--seed", "13",
        ]
        code = main(args + ["--out", str(tmp_path / "a")])
        assert code == EXIT_OK
        code = main(args + ["--out", str(tmp_path / "b")])
        assert code == EXIT_OK
        assert read(tmp_path / "a" / "trajectories.csv") == read(tmp_path / "b" / "trajectories.csv")

    def test_env_seed_used(self, tmp_path, monkeypatch):
        base = [
            "simulate", "--space", "sphere:2", "--strategy", "fixed-s2",
            "--rho0", "1.0", "--h", "1e-2", "--T", "0.05", "--paths", "3",
        ]
        monkeypatch.setenv("BMCOUPLE_SEED", "99")
        main(base + ["--out", str(tmp_path / "env")])
        monkeypatch.delenv("BMCOUPLE_SEED")
        main(base + ["--seed", "99", "--out", str(tmp_path / "flag")])
        assert read(tmp_path / "env" / "trajectories.csv") == read(
            tmp_path / "flag" / "trajectories.csv"
        )

    def test_config_file_with_flag_override(self, tmp_path):
        config_path = tmp_path / "run.cfg"
        config_path.write_text(
            "space = sphere:2\nstrategy = so3-flow\nrho0 = 1.0\nh = 0.01\n"
            "t_final = 0.05\npaths = 3\nseed = 5\n"
        )
        out_a = tmp_path / "a"
        code = main(["simulate", "--config", str(config_path), "--out", str(out_a)])
        assert code == EXIT_OK
        # overriding the seed must change the trajectories
        out_b = tmp_path / "b"
        main(["simulate", "--config", str(config_path), "--seed", "6", "--out", str(out_b)])
        assert read(out_a / "trajectories.csv") != read(out_b / "trajectories.csv")

    def test_missing_config_file(self, tmp_path):
        code = main(["simulate", "--config", str(tmp_path / "nope.cfg")])
        assert code == EXIT_CONFIG

    def test_explicit_start_points(self, tmp_path):
        code = main(
            [
                "simulate", "--space", "sphere:2", "--strategy", "so3-flow",
                "--x0", "1,0,0", "--y0", "0,1,0", "--h", "1e-2", "--T", "0.05",
                "--paths", "2", "--seed", "1", "--out", str(tmp_path),
            ]
        )
        assert code == EXIT_OK
        first = read(tmp_path / "trajectories.csv").split("\n")[1]
        assert float(first.split(",")[1]) == pytest.approx(np.pi / 2, abs=1e-12)

    def test_explicit_point_off_space_rejected(self, tmp_path):
        code = main(
            [
                "simulate", "--space", "sphere:2", "--strategy", "so3-flow",
                "--x0", "2,0,0", "--y0", "0,1,0", "--paths", "2", "--out", str(tmp_path),
            ]
        )
        assert code == EXIT_CONFIG

    def test_one_sided_explicit_point_rejected(self, tmp_path):
        code = main(
            [
                "simulate", "--space", "sphere:2", "--strategy", "so3-flow",
                "--x0", "1,0,0", "--paths", "2", "--out", str(tmp_path),
            ]
        )
        assert code == EXIT_CONFIG


class TestSimConfigRoundTrip:
    def test_parse_render_identity(self):
        config = SimConfig(
            space="hyperbolic:3", strategy="rotation", rho0=0.5, k=-2.5,
            h=2e-3, t_final=2.0, paths=17, seed=3, record_stride=5, threads=2,
        )
        assert SimConfig.parse(config.render()) == config

    def test_comments_and_blanks_ignored(self):
        text = "# a comment\n\nspace = flat:2\npaths = 9\n"
        config = SimConfig.parse(text)
        assert config.space == "flat:2"
        assert config.paths == 9

    def test_unknown_key_rejected(self):
        from bmcouple.errors import DomainError

        with pytest.raises(DomainError):
            SimConfig.parse("warp_drive = on\n")


class TestVerifyCommand:
    def test_infeasibility_suite_passes(self, capsys):
        code = main(["verify", "infeasibility"])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        assert "[PASS]" in out
        assert out.strip().endswith("PASS")

    def test_unknown_suite_rejected_by_argparse(self):
        with pytest.raises(SystemExit):
            main(["verify", "nonsense"])


class TestTableCommand:
    def test_feasibility_table(self, capsys):
        code = main(["table", "feasibility", "--k-grid=-1,0,0.5", "--rho-grid", "1.0"])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        lines = out.strip().split("\n")
        assert lines[0] == "curvature,dim,rho,k,feasible"
        rows = [line.split(",") for line in lines[1:]]
        flat = {(r[3], r[4]) for r in rows if r[0] == "0"}
        # flat space: k <= 0 feasible, k > 0 not
        assert ("-1.0", "True") in flat and ("0.0", "True") in flat and ("0.5", "False") in flat
        sphere = {(r[3], r[4]) for r in rows if r[0] == "1"}
        assert ("0.5", "True") in sphere

    def test_empty_grid_is_config_error(self):
        assert main(["table", "feasibility", "--k-grid", "", "--rho-grid", "1.0"]) == EXIT_CONFIG

    def test_markdown_format(self, capsys):
        code = main(["table", "feasibility", "--format", "md", "--k-grid", "0", "--rho-grid", "1"])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        assert out.startswith("| curvature |")

    def test_drift_identity_table(self, capsys):
        code = main(["table", "drift-identity"])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        header = out.split("\n", 1)[0]
        assert header == "curvature,dim,alpha,rho,closed,assembled,rel_err"
        worst = max(float(line.split(",")[-1]) for line in out.strip().split("\n")[1:])
        assert worst < 1e-6

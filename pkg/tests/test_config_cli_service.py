import hashlib
import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from hoikit.cli import main
from hoikit.config import RunConfig, parse_config
from hoikit.errors import ConfigurationError, MissingArtifactError
from hoikit.runner import COMMANDS, run_command
from hoikit.service.app import create_app


class TestParseConfig:
    def test_empty_file_gives_documented_defaults(self, tmp_path):
        p = tmp_path / "empty.cfg"
        p.write_text("")
        cfg = parse_config(p)
        assert cfg.num_keypoints == 32
        assert cfg.top_k == 32
        assert cfg.sigma2 == pytest.approx(5e-5)
        assert cfg.gamma_patch == pytest.approx(0.1)
        assert cfg.roi_resolution == 5
        # training defaults echo the published settings
        assert (cfg.kp_iters, cfg.kp_lr, cfg.kp_batch) == (20000, 1e-4, 64)
        assert (cfg.hoi_epochs, cfg.hoi_lr, cfg.hoi_batch) == (30, 5e-5, 6)

    def test_file_then_override_precedence(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("num_keypoints = 16\ntop_k = 8\n")
        cfg = parse_config(p, overrides=["top_k=64"])
        assert cfg.num_keypoints == 16
        assert cfg.top_k == 64

    def test_unknown_key_fatal_with_name(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("bananas = 3\n")
        with pytest.raises(ConfigurationError, match="bananas"):
            parse_config(p)

    def test_type_mismatch_fatal_with_key_and_type(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("num_keypoints = banana\n")
        with pytest.raises(ConfigurationError, match="num_keypoints.*int"):
            parse_config(p)

    def test_missing_file_fatal_with_path(self, tmp_path):
        with pytest.raises(ConfigurationError, match="nope.cfg"):
            parse_config(tmp_path / "nope.cfg")

    def test_out_of_range_fatal(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("num_keypoints = 3\n")
        with pytest.raises(ConfigurationError):
            parse_config(p)

    def test_comments_and_blank_lines(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("# comment\n\nseed = 7\n")
        assert parse_config(p).seed == 7

    def test_echo_round_trips(self, tmp_path):
        cfg = parse_config(None, overrides=["num_keypoints=8", "use_pam=false"])
        p = tmp_path / "echo.cfg"
        p.write_text(cfg.echo_text())
        cfg2 = parse_config(p)
        assert cfg2 == cfg

    def test_env_overrides(self, tmp_path, monkeypatch):
        monkeypatch.setenv("HOIKIT_OUT_ROOT", str(tmp_path / "root"))
        monkeypatch.setenv("HOIKIT_THREADS", "3")
        cfg = parse_config(None, overrides=["out_dir=x"])
        assert cfg.out_dir == str(tmp_path / "root" / "x")
        assert cfg.threads == 3


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    cfg = parse_config(
        None,
        overrides=[
            f"out_dir={out}",
            "num_masks=24",
            "num_scenes=4",
            "image_size=32",
            "seed=5",
        ],
    )
    result = run_command("gen-data", cfg)
    return out, result.outputs


MICRO_KP = [
    "num_keypoints=4",
    "num_clusters=4",
    "kp_iters=3",
    "kp_batch=2",
    "kp_base_channels=8",
    "image_size=32",
    "kp_lr=0.001",
]


class TestRunnerFlow:
    def test_gen_data_outputs(self, data_dir):
        out, outputs = data_dir
        assert Path(outputs["masks_dir"]).is_dir()
        assert Path(outputs["scenes_path"]).is_file()
        assert (out / "resolved_config.txt").exists()
        assert not (out / "INCOMPLETE").exists()

    def test_train_detect_and_reject(self, data_dir, tmp_path):
        out, outputs = data_dir
        run_dir = tmp_path / "kp"
        cfg = parse_config(
            None,
            overrides=[f"out_dir={run_dir}", f"masks_dir={outputs['masks_dir']}", "seed=3"]
            + MICRO_KP,
        )
        result = run_command("train-keypoints", cfg)
        ckpt = result.outputs["keypoint_checkpoint"]
        assert Path(ckpt).is_file()
        assert Path(result.outputs["loss_curve"]).read_text().startswith(
            "iteration,l1,perceptual,total"
        )

        # detect on a good mask
        mask_file = sorted(Path(outputs["masks_dir"]).iterdir())[0]
        dcfg = parse_config(
            None,
            overrides=[
                f"out_dir={tmp_path / 'det'}",
                f"keypoint_checkpoint={ckpt}",
                f"mask_input={mask_file}",
            ],
        )
        dres = run_command("detect-keypoints", dcfg)
        assert len(dres.outputs["keypoints"]) == 4

        # detect on a rejected mask (ratio 0.1)
        from hoikit.masks import save_mask_png

        bad = tmp_path / "bad.png"
        grid = np.zeros((32, 32))
        grid[:8, :12] = 1  # 96/1024 < 0.2
        save_mask_png(grid, bad)
        bcfg = parse_config(
            None,
            overrides=[
                f"out_dir={tmp_path / 'det2'}",
                f"keypoint_checkpoint={ckpt}",
                f"mask_input={bad}",
            ],
        )
        from hoikit.errors import RejectedInputError

        with pytest.raises(RejectedInputError):
            run_command("detect-keypoints", bcfg)
        assert (tmp_path / "det2" / "INCOMPLETE").exists()

    def test_missing_artifact_is_fatal_and_named(self, tmp_path):
        cfg = parse_config(
            None,
            overrides=[f"out_dir={tmp_path / 'x'}", "scenes_path=/does/not/exist.jsonl"],
        )
        with pytest.raises(MissingArtifactError, match="keypoint_checkpoint"):
            run_command("train-hoi", cfg)

    def test_unknown_command(self):
        with pytest.raises(ConfigurationError):
            run_command("explode", RunConfig())


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


class TestService:
    def test_health(self, client):
        r = client.get("/health")
        assert r.status_code == 200
        body = r.json()
        assert body["status"] == "ok"
        assert set(body["commands"]) == set(COMMANDS)

    def test_gen_data_roundtrip(self, client, tmp_path):
        r = client.post(
            "/commands/gen-data",
            json={
                "overrides": [
                    f"out_dir={tmp_path / 'svc'}",
                    "num_masks=5",
                    "num_scenes=2",
                    "image_size=32",
                ]
            },
        )
        assert r.status_code == 200
        body = r.json()
        assert body["status"] == "ok"
        assert body["outputs"]["num_scenes"] == 2

    def test_config_error_maps_to_400(self, client):
        r = client.post("/commands/gen-data", json={"overrides": ["bananas=1"]})
        assert r.status_code == 400
        assert r.json()["category"] == "config"
        assert r.json()["exit_code"] == 1

    def test_data_error_maps_to_422(self, client, tmp_path):
        r = client.post(
            "/commands/train-hoi",
            json={"overrides": [f"out_dir={tmp_path / 'h'}", "scenes_path=missing.jsonl"]},
        )
        assert r.status_code == 422
        assert r.json()["exit_code"] == 2


class TestGoldenEval:
    FIXTURE = Path(__file__).parent / "fixtures" / "golden"

    @pytest.mark.parametrize("scenario,expected_dir", [(2, "expected"), (1, "expected_s1")])
    def test_eval_emits_golden_report_byte_identically(self, tmp_path, scenario, expected_dir):
        cfg = parse_config(
            None,
            overrides=[
                f"out_dir={tmp_path}",
                f"scenes_path={self.FIXTURE / 'scenes.jsonl'}",
                f"predictions_path={self.FIXTURE / 'predictions.jsonl'}",
                f"scenario={scenario}",
            ],
        )
        run_command("eval", cfg)
        expected = self.FIXTURE / expected_dir
        for name in sorted(p.name for p in expected.iterdir()):
            assert (tmp_path / name).read_bytes() == (expected / name).read_bytes(), name


class TestCli:
    def test_cli_gen_data_exit_zero(self, tmp_path):
        runner = CliRunner()
        result = runner.invoke(
            main,
            [
                "gen-data",
                "--set",
                f"out_dir={tmp_path / 'cli'}",
                "--set",
                "num_masks=4",
                "--set",
                "num_scenes=2",
                "--set",
                "image_size=32",
            ],
        )
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output)
        assert payload["status"] == "ok"

    def test_cli_config_error_exit_one(self):
        runner = CliRunner()
        result = runner.invoke(main, ["gen-data", "--set", "wat=1"])
        assert result.exit_code == 1

    def test_cli_data_error_exit_two(self, tmp_path):
        runner = CliRunner()
        result = runner.invoke(
            main,
            ["predict", "--set", f"out_dir={tmp_path}", "--set", "hoi_checkpoint=missing.ckpt"],
        )
        assert result.exit_code == 2

    def test_cli_rejected_mask_exit_two(self, tmp_path, data_dir):
        out, outputs = data_dir
        run_dir = tmp_path / "kp"
        cfg = parse_config(
            None,
            overrides=[f"out_dir={run_dir}", f"masks_dir={outputs['masks_dir']}", "seed=3"]
            + MICRO_KP,
        )
        ckpt = run_command("train-keypoints", cfg).outputs["keypoint_checkpoint"]
        from hoikit.masks import save_mask_png

        bad = tmp_path / "bad.png"
        grid = np.zeros((32, 32))
        grid[:4, :4] = 1
        save_mask_png(grid, bad)
        runner = CliRunner()
        result = runner.invoke(
            main,
            [
                "detect-keypoints",
                "--set",
                f"out_dir={tmp_path / 'd'}",
                "--set",
                f"keypoint_checkpoint={ckpt}",
                "--set",
                f"mask_input={bad}",
            ],
        )
        assert result.exit_code == 2
        assert "rejected" in result.output

import json

import pytest

from qcqc.gallery import load
from qcqc.gateway.cli import cli_dispatch
from qcqc.gateway.config import load_service_config


@pytest.fixture(scope="module")
def gallery_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli-gallery") / "g"
    assert cli_dispatch(["synth", "--out", str(out), "--n", "300", "--seed", "3"]) == 0
    assert cli_dispatch(["levels", "--gallery", str(out), "--p", "33,66"]) == 0
    return out


def test_synth_then_levels_writes_schemes(gallery_dir):
    g = load(gallery_dir)
    assert len(g) == 300
    assert g.has_levels()
    assert g.level_scheme_rel.names == ("Low", "Medium", "High")


def test_levels_writes_scheme_json(gallery_dir, tmp_path, capsys):
    scheme_path = tmp_path / "scheme.json"
    code = cli_dispatch([
        "levels", "--gallery", str(gallery_dir), "--p", "33,66",
        "--out", str(scheme_path), "--format", "json",
    ])
    assert code == 0
    payload = json.loads(scheme_path.read_text())
    assert set(payload) == {"rel", "aes"}
    assert payload["rel"]["names"] == ["Low", "Medium", "High"]
    assert len(payload["rel"]["cuts"]) == 2


def test_ingest_round_trip(gallery_dir, tmp_path):
    out = tmp_path / "copy"
    code = cli_dispatch([
        "ingest",
        "--manifest", str(gallery_dir / "manifest.jsonl"),
        "--embeddings", str(gallery_dir / "embeddings.bin"),
        "--out", str(out),
    ])
    assert code == 0
    assert len(load(out)) == 300


def test_retrieve_json_output(gallery_dir, capsys):
    code = cli_dispatch([
        "retrieve", "--gallery", str(gallery_dir), "--query", "a dog",
        "--rel", "High", "--aes", "High", "--eta", "3", "--format", "json",
    ])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert len(payload["hits"]) == 3
    assert all({"id", "score", "caption", "aes", "rel"} <= set(h) for h in payload["hits"])


def test_complete_json_output(gallery_dir, capsys):
    code = cli_dispatch([
        "complete", "--gallery", str(gallery_dir), "--prefix", "a dog",
        "--rel", "Low", "--aes", "High", "--k", "2", "--format", "json",
    ])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["candidates"]
    assert all(c["text"].startswith("a dog") for c in payload["candidates"])


def test_eval_grid_and_report(gallery_dir, tmp_path, capsys):
    report_path = tmp_path / "report.json"
    code = cli_dispatch([
        "eval", "--gallery", str(gallery_dir), "--method", "prefix",
        "--out", str(report_path), "--format", "json",
    ])
    assert code == 0
    payload = json.loads(report_path.read_text())
    assert len(payload["cells"]) == 9
    printed = json.loads(capsys.readouterr().out)
    assert printed == payload


def test_rerank_rows(gallery_dir, capsys):
    code = cli_dispatch([
        "rerank", "--gallery", str(gallery_dir), "--k", "1,2,3", "--format", "json",
    ])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert [row["k"] for row in payload["rows"]] == [1, 2, 3]


def test_theory_run(tmp_path, capsys):
    out = tmp_path / "campaign.json"
    code = cli_dispatch([
        "theory", "run", "--trials", "5", "--seed", "1",
        "--dims", "6,5,8", "--out", str(out), "--format", "json",
    ])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["rank_growth"]["holds"] == 5
    assert payload["rank_growth"]["fails"] == 0


def test_unknown_subcommand_exits_one(capsys):
    assert cli_dispatch(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_no_subcommand_exits_one(capsys):
    assert cli_dispatch([]) == 1


def test_missing_gallery_is_io_error(tmp_path, capsys):
    assert cli_dispatch(["retrieve", "--gallery", str(tmp_path / "nope"),
                         "--query", "a dog"]) == 2


def test_validation_error_exits_one(gallery_dir, capsys):
    # Unknown level label raises a validation error, not a crash.
    assert cli_dispatch([
        "complete", "--gallery", str(gallery_dir), "--prefix", "a dog",
        "--rel", "Epic", "--aes", "High",
    ]) == 1


def test_config_file_and_env_overrides(tmp_path):
    cfg = tmp_path / "svc.cfg"
    cfg.write_text("port=9999\nendpoint_url=http://file.example/api\n")
    config = load_service_config(cfg, env={})
    assert config.port == 9999
    assert config.endpoint_url == "http://file.example/api"
    config = load_service_config(
        cfg, env={"QCQC_PORT": "7001", "QCQC_ENDPOINT_URL": "http://env.example",
                  "QCQC_API_KEY": "sekrit"},
    )
    assert config.port == 7001
    assert config.endpoint_url == "http://env.example"
    assert config.api_key == "sekrit"


def test_config_rejects_bad_lines(tmp_path):
    cfg = tmp_path / "svc.cfg"
    cfg.write_text("not a kv line\n")
    with pytest.raises(ValueError):
        load_service_config(cfg, env={})

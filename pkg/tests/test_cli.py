from __future__ import annotations

import json
from pathlib import Path

import pytest

from assigncraft.cli import main

GOLDEN = Path(__file__).resolve().parent.parent / "fixtures" / "golden"


def write_config(tmp_path, providers_yaml):
    path = tmp_path / "service.yaml"
    path.write_text(
        "listen: \"127.0.0.1:8099\"\n"
        f"data_dir: \"{tmp_path / 'data'}\"\n"
        "providers:\n" + providers_yaml,
        encoding="utf-8",
    )
    return path


def test_validate_config_ok(tmp_path, capsys):
    config = write_config(
        tmp_path,
        "  - provider_id: demo\n    kind: scripted\n    model_name: demo-model\n",
    )
    assert main(["validate-config", "--config", str(config)]) == 0
    assert "config ok" in capsys.readouterr().out


def test_validate_config_zero_providers_fails(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("providers: []\n", encoding="utf-8")
    with pytest.raises(SystemExit) as info:
        main(["validate-config", "--config", str(path)])
    assert info.value.code != 0


def test_validate_config_deadline_must_cover_timeouts(tmp_path):
    config = write_config(
        tmp_path,
        "  - provider_id: slow\n    kind: scripted\n    timeout_ms: 45000\n",
    )
    config.write_text(config.read_text() + "deadline_ms: 30000\n", encoding="utf-8")
    with pytest.raises(SystemExit):
        main(["validate-config", "--config", str(config)])


def test_breaker_settings_flow_from_config(tmp_path):
    from assigncraft.config import build_router, load_config

    config = write_config(
        tmp_path,
        "  - provider_id: demo\n    kind: scripted\n    model_name: demo-model\n",
    )
    config.write_text(config.read_text() + "breaker_threshold: 2\nbreaker_cooldown_s: 5\n", encoding="utf-8")
    router = build_router(load_config(config))
    router.record_outcome("demo", False, 10)
    assert router.health("demo").open_until is None
    router.record_outcome("demo", False, 10)
    assert router.health("demo").open_until is not None  # threshold 2 from config


def test_prompts_list_prints_six_rows(capsys):
    assert main(["prompts", "list"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 6
    assert any("Learning Experience Designer" in line for line in out)
    assert any("pdf_ocr" in line and "page_text" in line for line in out)


def test_replay_golden_fixtures_pass(capsys):
    assert main(["replay", str(GOLDEN)]) == 0
    out = capsys.readouterr().out
    assert "PASS example1_two_sum_astronomy" in out
    assert "PASS example2_set_theory_basketball" in out


def test_replay_detects_divergence(tmp_path, capsys):
    case = tmp_path / "cases" / "tampered"
    case.mkdir(parents=True)
    source = GOLDEN / "example1_two_sum_astronomy"
    for name in ("request.json", "script.json", "expected_record.json"):
        case.joinpath(name).write_text(source.joinpath(name).read_text(encoding="utf-8"), encoding="utf-8")
    expected = json.loads((case / "expected_record.json").read_text(encoding="utf-8"))
    expected["result"]["assignment_title"] = "Wrong Title"
    (case / "expected_record.json").write_text(json.dumps(expected), encoding="utf-8")
    assert main(["replay", str(tmp_path / "cases")]) == 1
    assert "FAIL tampered" in capsys.readouterr().out


def test_replay_empty_dir_errors(tmp_path):
    assert main(["replay", str(tmp_path)]) == 2

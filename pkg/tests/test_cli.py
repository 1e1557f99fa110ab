from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from conftest import make_semantic, make_vault
from hexamem.cli import main
from hexamem.config import EngineConfig
from hexamem.engine import MemoryEngine
from hexamem.model import ComponentId


@pytest.fixture
def runner():
    return CliRunner()


def seeded_store(tmp_path) -> str:
    path = str(tmp_path / "cli.db")
    with MemoryEngine(EngineConfig(store_path=path)) as engine:
        engine.store.insert(
            ComponentId.SEMANTIC,
            make_semantic(name="Twitter CEO", summary="The CEO of Twitter is Linda Yaccarino", details=""),
        )
        engine.store.insert(ComponentId.VAULT, make_vault())
    return path


def test_stats_on_empty_store_exit_zero(runner, tmp_path):
    result = runner.invoke(main, ["--store", str(tmp_path / "empty.db"), "stats"])
    assert result.exit_code == 0
    assert "semantic: 0" in result.output
    assert "file_size:" in result.output


def test_search_prints_yaccarino_hit(runner, tmp_path):
    store = seeded_store(tmp_path)
    result = runner.invoke(
        main,
        [
            "--store", store, "search",
            "--component", "semantic",
            "--method", "string_match",
            "--query", "Twitter",
        ],
    )
    assert result.exit_code == 0
    hit = json.loads(result.output.strip().splitlines()[0])
    assert "Linda Yaccarino" in hit["snippet"]


def test_search_unknown_component_machine_parsable_error(runner, tmp_path):
    result = runner.invoke(
        main, ["--store", str(tmp_path / "x.db"), "search", "--component", "hippocampus", "--query", "q"]
    )
    assert result.exit_code == 1
    assert result.output.startswith("error:") or "error:" in result.output


def test_export_import_roundtrip_stats_equal(runner, tmp_path):
    store = seeded_store(tmp_path)
    export_path = str(tmp_path / "dump.json")
    result = runner.invoke(main, ["--store", store, "export", "-o", export_path])
    assert result.exit_code == 0
    fresh = str(tmp_path / "fresh.db")
    result = runner.invoke(main, ["--store", fresh, "import", export_path])
    assert result.exit_code == 0

    def counts(path):
        with MemoryEngine(EngineConfig(store_path=path)) as engine:
            return engine.stats().counts

    original = counts(store)
    imported = counts(fresh)
    # engine init seeds empty core blocks in both stores
    assert imported == original


def test_ingest_file_text(runner, tmp_path):
    script = tmp_path / "router.json"
    script.write_text(
        json.dumps(
            {
                "exchanges": [
                    {
                        "tool_calls": [
                            {
                                "name": "route_memory",
                                "arguments": {
                                    "targets": ["semantic"],
                                    "payloads": {
                                        "semantic": [
                                            {
                                                "name": "note",
                                                "summary": "files can be ingested",
                                                "details": "",
                                                "source": "file",
                                            }
                                        ]
                                    },
                                },
                            }
                        ]
                    }
                ]
            }
        )
    )
    config = {
        "store_path": str(tmp_path / "ing.db"),
        "router_provider": {"kind": "scripted", "script_path": str(script)},
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))
    note = tmp_path / "note.txt"
    note.write_text("remember: files can be ingested")
    result = runner.invoke(main, ["--config", str(config_path), "ingest-file", str(note)])
    assert result.exit_code == 0, result.output
    assert json.loads(result.output)["status"] == "complete"


def test_eval_command_end_to_end(runner, tmp_path):
    # offline dataset answered via scripted chat provider configured in the file
    from eval_fixtures import FACTS

    dataset = [
        {
            "case_id": "cli_case",
            "conversation": [
                {"speaker": "A", "timestamp": "2025-03-05 10:00", "text": f"note that {fact}"}
                for _, fact in FACTS[:4]
            ],
            "qa": [
                {
                    "question": f"What is the landmark {i} answer?",
                    "answer": f"curio-{i:02d}",
                    "category": "single_hop",
                }
                for i in range(4)
            ],
        }
    ]
    dataset_path = tmp_path / "dataset.json"
    dataset_path.write_text(json.dumps(dataset))

    router_script = {
        "exchanges": [
            {
                "tool_calls": [
                    {
                        "name": "route_memory",
                        "arguments": {
                            "targets": ["semantic"],
                            "payloads": {
                                "semantic": [
                                    {
                                        "name": name,
                                        "summary": fact,
                                        "details": "",
                                        "source": "conversation",
                                    }
                                    for name, fact in FACTS[:4]
                                ]
                            },
                        },
                    }
                ]
            }
        ]
    }
    chat_script = {"exchanges": []}
    for i in range(4):
        chat_script["exchanges"].append(
            {"tool_calls": [{"name": "set_topic", "arguments": {"topic": f"landmark {i}"}}]}
        )
        chat_script["exchanges"].append({"text": f"It is curio-{i:02d}."})
    router_path = tmp_path / "router.json"
    router_path.write_text(json.dumps(router_script))
    chat_path = tmp_path / "chat.json"
    chat_path.write_text(json.dumps(chat_script))
    config_path = tmp_path / "config.json"
    config_path.write_text(
        json.dumps(
            {
                "store_path": str(tmp_path / "unused.db"),
                "router_provider": {"kind": "scripted", "script_path": str(router_path)},
                "chat_provider": {"kind": "scripted", "script_path": str(chat_path)},
            }
        )
    )
    out_dir = tmp_path / "evalout"
    result = runner.invoke(
        main,
        [
            "--config", str(config_path), "eval",
            "--dataset", str(dataset_path),
            "--out", str(out_dir),
        ],
    )
    assert result.exit_code == 0, result.output
    report = json.loads((out_dir / "report.json").read_text())
    assert report["overall"] == {"correct": 4, "total": 4, "accuracy": 1.0}
    assert (out_dir / "report.csv").is_file()
    assert (out_dir / "accuracy_by_category.png").is_file()
    assert "Overall" in result.output

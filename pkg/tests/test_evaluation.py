from __future__ import annotations

import json

import pytest

from eval_fixtures import build_case, scripted_engine_factory
from hexamem.errors import DatasetMalformed
from hexamem.evaluation import (
    CATEGORY_ORDER,
    QAItem,
    judge,
    load_cases,
    normalize_answer,
    report_csv,
    report_table,
    run_eval,
    write_report,
)
from hexamem.gateway import ScriptedExchange, ScriptedProvider


def test_normalize_answer_rules():
    assert normalize_answer("  Linda   Yaccarino! ") == "linda yaccarino"
    assert normalize_answer("A,B.C") == "abc"


def test_exact_judge_identical_and_substring():
    assert judge("q", "Linda Yaccarino", "Linda Yaccarino", mode="exact").label == "correct"
    assert (
        judge("q", "Linda Yaccarino", "Linda Yaccarino leads Twitter", mode="exact").label
        == "correct"
    )
    assert judge("q", "Linda Yaccarino", "Elon Musk", mode="exact").label == "wrong"


def test_judge_requires_nonempty_inputs():
    with pytest.raises(DatasetMalformed):
        judge("", "gold", "resp")


def test_llm_judge_parses_label_and_handles_refusal():
    provider = ScriptedProvider([ScriptedExchange(text="correct - response matches")])
    verdict = judge("q", "gold", "resp", mode="llm", provider=provider)
    assert verdict.label == "correct"
    exhausted = ScriptedProvider([])
    verdict = judge("q", "gold", "resp", mode="llm", provider=exhausted)
    assert verdict.label == "wrong" and "judge unavailable" in verdict.rationale


def test_load_cases_flat_and_sessioned_with_numeric_categories():
    doc = [
        {
            "case_id": "flat",
            "conversation": [
                {"speaker": "A", "timestamp": "2025-01-01 09:00", "text": "hi", "dia_id": "d1"}
            ],
            "qa": [{"question": "q?", "answer": "a", "category": 4}],
        },
        {
            "sample_id": "sessioned",
            "conversation": {
                "speaker_a": "A",
                "speaker_b": "B",
                "session_1_date_time": "1:00 pm on 1 May, 2023",
                "session_1": [
                    {"speaker": "A", "text": "hello", "dia_id": "D1:1"},
                    {"speaker": "B", "text": "hey", "dia_id": "D1:2"},
                ],
                "session_2_date_time": "9:00 am on 2 May, 2023",
                "session_2": [{"speaker": "A", "text": "again", "dia_id": "D2:1"}],
            },
            "qa": [
                {"question": "q1?", "answer": "a1", "category": 1},
                {"question": "q5?", "answer": "n/a", "category": 5},
            ],
        },
    ]
    cases = load_cases(doc)
    assert cases[0].qa[0].category == "single_hop"
    assert cases[1].case_id == "sessioned"
    assert [t.text for t in cases[1].turns] == ["hello", "hey", "again"]
    assert cases[1].turns[2].timestamp == "9:00 am on 2 May, 2023"
    assert cases[1].qa[0].category == "multi_hop"
    assert cases[1].qa[1].category == "adversarial"


def test_load_cases_rejects_garbage():
    with pytest.raises(DatasetMalformed):
        load_cases({"not": "a list"})
    with pytest.raises(DatasetMalformed):
        load_cases([{"conversation": [], "qa": [{"question": "q"}]}])
    with pytest.raises(DatasetMalformed):
        QAItem(question="q", answer="a", category="sideways")


def test_run_eval_scripted_scores_everything(tmp_path):
    case = build_case()
    report = run_eval([case], scripted_engine_factory(), work_dir=str(tmp_path / "w"))
    assert report.overall == (20, 20)
    assert report.accuracy() == 1.0
    assert report.excluded_adversarial == 2
    total_by_category = sum(t for _, t in report.per_category.values())
    assert total_by_category == report.overall[1]  # accounting identity
    for category in CATEGORY_ORDER:
        assert report.per_category[category] == (5, 5)
    assert report.cases[0].storage_bytes > 0


def test_run_eval_counts_wrong_answers(tmp_path):
    case = build_case(adversarial=0)
    factory = scripted_engine_factory()

    def sabotaged(index, c, store_path):
        engine = factory(index, c, store_path)
        # re-script chat so one answer is wrong
        from eval_fixtures import _chat_script

        provider = _chat_script(c)
        provider._exchanges[1] = ScriptedExchange(text="I forgot.")
        engine.chat_agent.provider = provider
        return engine

    report = run_eval([case], sabotaged, work_dir=str(tmp_path / "w2"))
    assert report.overall == (19, 20)
    wrong = [v for c in report.cases for v in c.verdicts if v.label == "wrong"]
    assert len(wrong) == 1


def test_report_identical_bytes_across_runs(tmp_path):
    blobs = []
    for run in range(3):
        case = build_case()
        report = run_eval(
            [case], scripted_engine_factory(), work_dir=str(tmp_path / f"run{run}")
        )
        blobs.append(report.to_json_bytes())
    assert blobs[0] == blobs[1] == blobs[2]


def test_report_table_layout_and_csv(tmp_path):
    case = build_case()
    report = run_eval([case], scripted_engine_factory(), work_dir=str(tmp_path / "w3"))
    table = report_table(report)
    for column in ("Single Hop", "Multi-Hop", "Open Domain", "Temporal", "Overall"):
        assert column in table
    csv_text = report_csv(report)
    lines = csv_text.strip().splitlines()
    assert lines[0] == "category,correct,total,accuracy"
    assert lines[-1].startswith("overall,20,20,")


def test_write_report_emits_files_and_figures(tmp_path):
    case = build_case()
    report = run_eval([case], scripted_engine_factory(), work_dir=str(tmp_path / "w4"))
    out = tmp_path / "out"
    paths = write_report(report, str(out))
    for name in ("report.json", "report.csv", "report.txt"):
        assert (out / name).is_file()
    for figure in ("accuracy_by_category.png", "storage_by_conversation.png"):
        data = (out / figure).read_bytes()
        assert data[:8] == b"\x89PNG\r\n\x1a\n"
    doc = json.loads((out / "report.json").read_text())
    assert doc["overall"]["accuracy"] == 1.0


def test_provider_error_recorded_as_wrong(tmp_path):
    case = build_case(adversarial=0)
    factory = scripted_engine_factory()

    def truncated(index, c, store_path):
        engine = factory(index, c, store_path)
        engine.chat_agent.provider = ScriptedProvider([])  # exhausts immediately
        return engine

    report = run_eval([case], truncated, work_dir=str(tmp_path / "w5"))
    assert report.overall[0] == 0 and report.overall[1] == 20
    assert all("provider error" in v.rationale for c in report.cases for v in c.verdicts)


def test_concurrent_case_evaluation_matches_sequential(tmp_path):
    cases = [build_case(case_id=f"case_{i}") for i in range(3)]
    sequential = run_eval(
        cases, scripted_engine_factory(), work_dir=str(tmp_path / "seq")
    )
    concurrent = run_eval(
        [build_case(case_id=f"case_{i}") for i in range(3)],
        scripted_engine_factory(),
        work_dir=str(tmp_path / "con"),
        workers=3,
    )
    assert concurrent.to_json_bytes() == sequential.to_json_bytes()
    assert concurrent.overall == (60, 60)


def test_llm_judge_rejects_hedged_labels():
    hedged = ScriptedProvider([ScriptedExchange(text="not correct, the city differs")])
    assert judge("q", "gold", "resp", mode="llm", provider=hedged).label == "wrong"
    shouting = ScriptedProvider([ScriptedExchange(text="CORRECT")])
    assert judge("q", "gold", "resp", mode="llm", provider=shouting).label == "correct"

"""Long-conversation QA evaluation: ingest, answer from memory only, score.

Each conversation gets a fresh store; questions are answered with history
limited to the question itself, so everything the agent knows must have been
routed into memory. Scoring is exact-match by default (deterministic offline)
with an opt-in LLM judge. The report lands as JSON + CSV + a plain-text table,
with accuracy and storage figures rendered next to them.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import re
import string
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

from .engine import MemoryEngine
from .errors import DatasetMalformed, EngineError
from .gateway import ChatProvider, Message, chat as gateway_chat
from .ingestion import ConversationTurn

logger = logging.getLogger(__name__)

CATEGORY_ORDER = ("single_hop", "multi_hop", "open_domain", "temporal")
ADVERSARIAL = "adversarial"

# Numeric category codes used by the public long-conversation QA benchmark.
_NUMERIC_CATEGORIES = {
    1: "multi_hop",
    2: "temporal",
    3: "open_domain",
    4: "single_hop",
    5: ADVERSARIAL,
}

#: Fixed instant used as the store clock during evaluation runs so the report
#: (including storage bytes) is reproducible bit for bit.
EVAL_EPOCH = datetime(2025, 1, 1, tzinfo=timezone.utc)

JUDGE_PROMPT_V1 = """You grade question answering. Given the question, the gold \
answer, and a model response, reply with exactly one word: "correct" if the \
response conveys the gold answer, otherwise "wrong".

Question: {question}
Gold answer: {gold}
Response: {response}"""


@dataclass(frozen=True)
class QAItem:
    question: str
    answer: str
    category: str

    def __post_init__(self):
        if self.category not in CATEGORY_ORDER + (ADVERSARIAL,):
            raise DatasetMalformed(f"unknown question category {self.category!r}")


@dataclass(frozen=True)
class JudgeVerdict:
    question: str
    category: str
    label: str  # correct | wrong
    rationale: str = ""


@dataclass(frozen=True)
class ConversationCase:
    case_id: str
    turns: tuple[ConversationTurn, ...]
    qa: tuple[QAItem, ...]


_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def normalize_answer(text: str) -> str:
    """Lowercase, strip punctuation, collapse whitespace."""
    return " ".join(text.lower().translate(_PUNCT_TABLE).split())


def judge(
    question: str,
    gold: str,
    response: str,
    mode: str = "exact",
    provider: ChatProvider | None = None,
    category: str = "",
) -> JudgeVerdict:
    """Label a response correct/wrong against the gold answer.

    Exact mode: correct iff the normalized gold is a substring of the
    normalized response. LLM mode sends the fixed judging prompt; a provider
    refusal yields a wrong verdict with the reason recorded.
    """
    if not question or not gold or not response:
        raise DatasetMalformed("judge requires non-empty question, gold, and response")
    if mode == "exact":
        hit = normalize_answer(gold) in normalize_answer(response)
        return JudgeVerdict(
            question=question,
            category=category,
            label="correct" if hit else "wrong",
            rationale="gold answer found in response" if hit else "gold answer not found",
        )
    if mode != "llm":
        raise ValueError(f"unknown judge mode {mode!r}")
    prompt = JUDGE_PROMPT_V1.format(question=question, gold=gold, response=response)
    try:
        reply = gateway_chat([Message.user(prompt)], (), provider)
    except EngineError as exc:
        return JudgeVerdict(
            question=question,
            category=category,
            label="wrong",
            rationale=f"judge unavailable: {exc}",
        )
    # the prompt demands a one-word label; read only the leading token so
    # hedged replies ("not correct") never count as correct
    first_token = re.split(r"\W+", reply.content.strip().lower(), maxsplit=1)[0]
    label = "correct" if first_token == "correct" else "wrong"
    return JudgeVerdict(
        question=question, category=category, label=label, rationale=reply.content.strip()
    )


# -- dataset loading -----------------------------------------------------------


def _coerce_category(raw: Any) -> str:
    if isinstance(raw, bool):
        raise DatasetMalformed(f"bad category {raw!r}")
    if isinstance(raw, int):
        if raw not in _NUMERIC_CATEGORIES:
            raise DatasetMalformed(f"unknown numeric category {raw}")
        return _NUMERIC_CATEGORIES[raw]
    if isinstance(raw, str):
        return raw
    raise DatasetMalformed(f"bad category {raw!r}")


def _turns_from_sessions(conversation: Mapping[str, Any]) -> list[ConversationTurn]:
    """Flatten a sessioned conversation document (session_N lists with a
    session_N_date_time stamp) into ordered turns."""
    session_keys = sorted(
        (k for k in conversation if re.fullmatch(r"session_\d+", k)),
        key=lambda k: int(k.split("_")[1]),
    )
    turns: list[ConversationTurn] = []
    for key in session_keys:
        stamp = str(conversation.get(f"{key}_date_time", ""))
        for raw in conversation[key] or []:
            turns.append(
                ConversationTurn(
                    speaker=str(raw.get("speaker", "")),
                    timestamp=stamp,
                    text=str(raw.get("text", "")),
                    dia_id=str(raw.get("dia_id", "")),
                )
            )
    return turns


def load_cases(doc: Any) -> list[ConversationCase]:
    """Parse a QA dataset document (a list of conversation cases).

    Each case carries ``conversation`` (either a flat turn list or a sessioned
    document) and ``qa`` (question/answer/category rows; numeric categories
    accepted). Adversarial items load but are excluded from scoring.
    """
    if not isinstance(doc, list):
        raise DatasetMalformed("dataset must be a list of conversation cases")
    cases: list[ConversationCase] = []
    for i, raw in enumerate(doc):
        if not isinstance(raw, Mapping):
            raise DatasetMalformed(f"case {i} is not an object")
        conversation = raw.get("conversation")
        if isinstance(conversation, Sequence) and not isinstance(conversation, (str, bytes)):
            turns = [
                ConversationTurn(
                    speaker=str(t.get("speaker", "")),
                    timestamp=str(t.get("timestamp", "")),
                    text=str(t.get("text", "")),
                    dia_id=str(t.get("dia_id", "")),
                )
                for t in conversation
            ]
        elif isinstance(conversation, Mapping):
            turns = _turns_from_sessions(conversation)
        else:
            raise DatasetMalformed(f"case {i} has no conversation")
        qa_items = []
        for q in raw.get("qa", []):
            if "question" not in q or "answer" not in q:
                raise DatasetMalformed(f"case {i} has a QA row without question/answer")
            qa_items.append(
                QAItem(
                    question=str(q["question"]),
                    answer=str(q["answer"]),
                    category=_coerce_category(q.get("category", "single_hop")),
                )
            )
        cases.append(
            ConversationCase(
                case_id=str(raw.get("case_id", raw.get("sample_id", f"case_{i}"))),
                turns=tuple(turns),
                qa=tuple(qa_items),
            )
        )
    return cases


def load_dataset(path: str) -> list[ConversationCase]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetMalformed(f"cannot load dataset {path}: {exc}") from exc
    return load_cases(doc)


# -- running -------------------------------------------------------------------


@dataclass(frozen=True)
class CaseResult:
    case_id: str
    verdicts: tuple[JudgeVerdict, ...]
    excluded_adversarial: int
    storage_bytes: int


@dataclass(frozen=True)
class EvalReport:
    per_category: Mapping[str, tuple[int, int]]  # category -> (correct, total)
    overall: tuple[int, int]
    cases: tuple[CaseResult, ...]
    excluded_adversarial: int
    judge_mode: str
    run_label: str = ""

    def accuracy(self, category: str | None = None) -> float:
        correct, total = self.overall if category is None else self.per_category.get(
            category, (0, 0)
        )
        return correct / total if total else 0.0

    def to_doc(self) -> dict[str, Any]:
        return {
            "judge_mode": self.judge_mode,
            "run_label": self.run_label,
            "overall": {
                "correct": self.overall[0],
                "total": self.overall[1],
                "accuracy": self.accuracy(),
            },
            "per_category": {
                c: {
                    "correct": self.per_category.get(c, (0, 0))[0],
                    "total": self.per_category.get(c, (0, 0))[1],
                    "accuracy": self.accuracy(c),
                }
                for c in CATEGORY_ORDER
            },
            "excluded_adversarial": self.excluded_adversarial,
            "cases": [
                {
                    "case_id": case.case_id,
                    "correct": sum(1 for v in case.verdicts if v.label == "correct"),
                    "total": len(case.verdicts),
                    "storage_bytes": case.storage_bytes,
                    "verdicts": [
                        {
                            "question": v.question,
                            "category": v.category,
                            "label": v.label,
                            "rationale": v.rationale,
                        }
                        for v in case.verdicts
                    ],
                }
                for case in self.cases
            ],
        }

    def to_json_bytes(self) -> bytes:
        return json.dumps(
            self.to_doc(), ensure_ascii=False, sort_keys=True, indent=2
        ).encode("utf-8")


EngineFactory = Callable[[int, ConversationCase, str], MemoryEngine]


def _evaluate_case(
    index: int,
    case: ConversationCase,
    engine_factory: EngineFactory,
    work: Path,
    judge_mode: str,
    judge_provider: ChatProvider | None,
) -> CaseResult:
    engine = engine_factory(index, case, str(work / f"case_{index}.db"))
    try:
        engine.ingest_conversation(case.turns)
        verdicts: list[JudgeVerdict] = []
        excluded = 0
        for item in case.qa:
            if item.category == ADVERSARIAL:
                excluded += 1
                continue
            try:
                # questions within one conversation stay sequential; history is
                # limited to the question itself (memory-only answering)
                turn = engine.chat_agent.answer(item.question, history=())
                response = turn.content or "(empty response)"
                verdict = judge(
                    item.question,
                    item.answer,
                    response,
                    mode=judge_mode,
                    provider=judge_provider,
                    category=item.category,
                )
            except EngineError as exc:
                verdict = JudgeVerdict(
                    question=item.question,
                    category=item.category,
                    label="wrong",
                    rationale=f"provider error: {exc}",
                )
            verdicts.append(verdict)
        return CaseResult(
            case_id=case.case_id,
            verdicts=tuple(verdicts),
            excluded_adversarial=excluded,
            storage_bytes=engine.stats().file_size,
        )
    finally:
        engine.close()


def run_eval(
    cases: Iterable[ConversationCase],
    engine_factory: EngineFactory,
    work_dir: str,
    judge_mode: str = "exact",
    judge_provider: ChatProvider | None = None,
    workers: int = 1,
    run_label: str = "",
) -> EvalReport:
    """Evaluate every case against its own fresh store.

    ``engine_factory(index, case, store_path)`` builds the engine for one
    conversation. Conversations may run concurrently (independent stores);
    results aggregate in dataset order either way. Provider errors on a
    question are recorded and scored wrong.
    """
    work = Path(work_dir)
    work.mkdir(parents=True, exist_ok=True)
    cases = list(cases)
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(
                    _evaluate_case, i, case, engine_factory, work, judge_mode, judge_provider
                )
                for i, case in enumerate(cases)
            ]
            case_results = [f.result() for f in futures]
    else:
        case_results = [
            _evaluate_case(i, case, engine_factory, work, judge_mode, judge_provider)
            for i, case in enumerate(cases)
        ]

    per_category: dict[str, list[int]] = {c: [0, 0] for c in CATEGORY_ORDER}
    for case_result in case_results:
        for verdict in case_result.verdicts:
            bucket = per_category.setdefault(verdict.category, [0, 0])
            bucket[1] += 1
            if verdict.label == "correct":
                bucket[0] += 1
    overall_correct = sum(c for c, _ in per_category.values())
    overall_total = sum(t for _, t in per_category.values())
    return EvalReport(
        per_category={k: (v[0], v[1]) for k, v in per_category.items()},
        overall=(overall_correct, overall_total),
        cases=tuple(case_results),
        excluded_adversarial=sum(c.excluded_adversarial for c in case_results),
        judge_mode=judge_mode,
        run_label=run_label,
    )


# -- report output ----------------------------------------------------------------


def report_table(report: EvalReport) -> str:
    headers = ["Single Hop", "Multi-Hop", "Open Domain", "Temporal", "Overall"]
    keys = ["single_hop", "multi_hop", "open_domain", "temporal"]
    values = [f"{report.accuracy(k) * 100:.2f}" for k in keys]
    values.append(f"{report.accuracy() * 100:.2f}")
    widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
    header_row = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    value_row = "  ".join(v.ljust(w) for v, w in zip(values, widths))
    storage = sum(c.storage_bytes for c in report.cases)
    return "\n".join(
        [
            header_row,
            "-" * len(header_row),
            value_row,
            "",
            f"questions scored: {report.overall[1]}"
            f" (adversarial excluded: {report.excluded_adversarial})",
            f"storage: {storage} bytes across {len(report.cases)} stores",
        ]
    )


def report_csv(report: EvalReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["category", "correct", "total", "accuracy"])
    for category in CATEGORY_ORDER:
        correct, total = report.per_category.get(category, (0, 0))
        writer.writerow([category, correct, total, f"{report.accuracy(category):.6f}"])
    writer.writerow(["overall", report.overall[0], report.overall[1], f"{report.accuracy():.6f}"])
    return buffer.getvalue()


def render_figures(report: EvalReport, out_dir: str) -> list[str]:
    """Accuracy-per-category and storage-per-conversation charts as PNG files."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []

    labels = list(CATEGORY_ORDER) + ["overall"]
    values = [report.accuracy(c) for c in CATEGORY_ORDER] + [report.accuracy()]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(labels, values, color="#4878a8")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("accuracy")
    ax.set_title("QA accuracy by category")
    for i, v in enumerate(values):
        ax.text(i, v + 0.02, f"{v:.2f}", ha="center", fontsize=9)
    fig.tight_layout()
    path = out / "accuracy_by_category.png"
    fig.savefig(path)
    plt.close(fig)
    written.append(str(path))

    fig, ax = plt.subplots(figsize=(7, 4))
    names = [c.case_id for c in report.cases]
    sizes = [c.storage_bytes / 1024.0 for c in report.cases]
    ax.bar(names, sizes, color="#a85848")
    ax.set_ylabel("store size (KiB)")
    ax.set_title("Memory storage per conversation")
    ax.tick_params(axis="x", rotation=45)
    fig.tight_layout()
    path = out / "storage_by_conversation.png"
    fig.savefig(path)
    plt.close(fig)
    written.append(str(path))
    return written


def write_report(report: EvalReport, out_dir: str, figures: bool = True) -> dict[str, str]:
    """Emit report.json, report.csv, report.txt, and the figures."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "json": str(out / "report.json"),
        "csv": str(out / "report.csv"),
        "txt": str(out / "report.txt"),
    }
    (out / "report.json").write_bytes(report.to_json_bytes())
    (out / "report.csv").write_text(report_csv(report), encoding="utf-8")
    (out / "report.txt").write_text(report_table(report) + "\n", encoding="utf-8")
    if figures:
        for figure_path in render_figures(report, out_dir):
            paths[Path(figure_path).stem] = figure_path
    return paths

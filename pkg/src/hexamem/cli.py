"""Command-line interface: every subcommand maps 1:1 onto a library call."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import EngineConfig
from .engine import MemoryEngine
from .errors import EngineError
from .evaluation import load_dataset, run_eval, write_report
from .gateway import ScriptedProvider
from .ingestion import ConversationTurn
from .model import ComponentId
from .retrieval import RetrievalMethod


def _load_config(config_path: str | None, store: str | None) -> EngineConfig:
    config = EngineConfig.from_file(config_path) if config_path else EngineConfig()
    if store:
        config.store_path = store
    return config


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


@click.group()
@click.option("--config", "config_path", envvar="HEXAMEM_CONFIG", default=None,
              type=click.Path(exists=True, dir_okay=False), help="Engine config file (JSON).")
@click.option("--store", default=None, help="Override the backing store path.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None, store: str | None):
    """Six-component agent memory engine."""
    ctx.ensure_object(dict)
    try:
        ctx.obj["config"] = _load_config(config_path, store)
    except (OSError, ValueError) as exc:
        _fail(f"bad config: {exc}")


@main.command()
@click.option("--host", default=None)
@click.option("--port", default=None, type=int)
@click.pass_context
def serve(ctx: click.Context, host: str | None, port: int | None):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    config: EngineConfig = ctx.obj["config"]
    engine = MemoryEngine(config)
    app = create_app(engine)
    try:
        uvicorn.run(app, host=host or config.host, port=port or config.port)
    except SystemExit as exc:  # uvicorn exits 1 on bind failure
        _fail(f"bind failure on {host or config.host}:{port or config.port} ({exc})")


@main.command("ingest-file")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def ingest_file(ctx: click.Context, path: str):
    """Ingest a text file, or a JSON conversation ({"turns": [...]})."""
    config: EngineConfig = ctx.obj["config"]
    try:
        with MemoryEngine(config) as engine:
            raw = Path(path).read_text(encoding="utf-8")
            if path.endswith(".json"):
                doc = json.loads(raw)
                turns = [
                    ConversationTurn(
                        speaker=t.get("speaker", ""),
                        timestamp=t.get("timestamp", ""),
                        text=t.get("text", ""),
                        dia_id=t.get("dia_id", ""),
                    )
                    for t in doc.get("turns", [])
                ]
                acks = engine.ingest_conversation(turns)
                click.echo(json.dumps({"cycles": len(acks)}))
            else:
                ack = engine.ingest_text(raw)
                click.echo(json.dumps({"cycle_id": ack.cycle_id, "status": ack.status}))
    except EngineError as exc:
        _fail(str(exc))


@main.command()
@click.option("--script", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Scripted chat provider file (offline demo).")
@click.pass_context
def chat(ctx: click.Context, script: str | None):
    """Interactive chat loop against the memory base."""
    config: EngineConfig = ctx.obj["config"]
    provider = ScriptedProvider.from_file(script) if script else None
    try:
        with MemoryEngine(config, chat_provider=provider) as engine:
            click.echo("chat ready; empty line exits")
            while True:
                line = click.prompt("you", default="", show_default=False)
                if not line.strip():
                    break
                turn = engine.chat("cli", line)
                click.echo(f"assistant: {turn.content}")
                if turn.sources:
                    refs = ", ".join(f"{c.value}:{i}" for c, i in turn.sources)
                    click.echo(f"  [sources: {refs}]")
    except EngineError as exc:
        _fail(str(exc))


@main.command()
@click.option("--component", required=True)
@click.option("--method", default="bm25_match", show_default=True)
@click.option("--query", required=True)
@click.option("-k", default=10, show_default=True)
@click.pass_context
def search(ctx: click.Context, component: str, method: str, query: str, k: int):
    """Search one memory component; prints hits as JSON lines."""
    config: EngineConfig = ctx.obj["config"]
    try:
        comp = ComponentId(component)
        meth = RetrievalMethod(method)
    except ValueError as exc:
        _fail(str(exc))
        return
    try:
        with MemoryEngine(config) as engine:
            for hit in engine.retriever.search(comp, meth, query, k):
                click.echo(
                    json.dumps(
                        {
                            "component": hit.component.value,
                            "entry_id": hit.entry_id,
                            "score": hit.score,
                            "method": hit.method.value,
                            "snippet": hit.snippet,
                        },
                        ensure_ascii=False,
                    )
                )
    except EngineError as exc:
        _fail(str(exc))


@main.command()
@click.pass_context
def stats(ctx: click.Context):
    """Print store footprint and per-component counts."""
    config: EngineConfig = ctx.obj["config"]
    try:
        with MemoryEngine(config) as engine:
            s = engine.stats()
            click.echo(f"file_size: {s.file_size}")
            for component, count in sorted(s.counts.items()):
                click.echo(f"{component}: {count}")
            for name, size in sorted(s.index_sizes.items()):
                click.echo(f"index.{name}: {size}")
    except EngineError as exc:
        _fail(str(exc))


@main.command()
@click.option("-o", "--output", default="-", help="Output path ('-' for stdout).")
@click.option("--include-secrets", is_flag=True, default=False,
              help="Include high-sensitivity vault values (requires vault access policy).")
@click.pass_context
def export(ctx: click.Context, output: str, include_secrets: bool):
    """Export the full memory as one JSON document."""
    config: EngineConfig = ctx.obj["config"]
    try:
        with MemoryEngine(config) as engine:
            doc = engine.export_doc(include_secrets=include_secrets)
            text = json.dumps(doc, ensure_ascii=False, sort_keys=True, indent=2)
            if output == "-":
                click.echo(text)
            else:
                Path(output).write_text(text, encoding="utf-8")
                click.echo(f"exported to {output}")
    except EngineError as exc:
        _fail(str(exc))


@main.command("import")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def import_(ctx: click.Context, path: str):
    """Import a memory export into the configured store."""
    config: EngineConfig = ctx.obj["config"]
    try:
        with MemoryEngine(config) as engine:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
            imported = engine.import_doc(doc)
            click.echo(json.dumps({"imported": imported}))
    except (EngineError, json.JSONDecodeError) as exc:
        _fail(str(exc))


@main.command("eval")
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", default="eval_out", show_default=True)
@click.option("--judge", "judge_mode", type=click.Choice(["exact", "llm"]),
              default="exact", show_default=True)
@click.option("--no-figures", is_flag=True, default=False)
@click.pass_context
def eval_cmd(ctx: click.Context, dataset: str, out_dir: str, judge_mode: str,
             no_figures: bool):
    """Run the QA evaluation harness and write the report bundle."""
    config: EngineConfig = ctx.obj["config"]
    try:
        cases = load_dataset(dataset)

        def factory(index: int, _case, store_path: str) -> MemoryEngine:
            case_config = EngineConfig.from_dict(config.to_dict())
            case_config.store_path = store_path
            return MemoryEngine(case_config)

        judge_provider = None
        if judge_mode == "llm":
            from .gateway import build_provider

            judge_provider = build_provider(config.chat_provider)
        report = run_eval(
            cases,
            factory,
            work_dir=str(Path(out_dir) / "stores"),
            judge_mode=judge_mode,
            judge_provider=judge_provider,
        )
        paths = write_report(report, out_dir, figures=not no_figures)
        click.echo((Path(out_dir) / "report.txt").read_text(encoding="utf-8"))
        click.echo(json.dumps({"written": paths}))
    except EngineError as exc:
        _fail(str(exc))


if __name__ == "__main__":
    main()

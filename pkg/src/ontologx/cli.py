"""Command-line entry point.

Subcommands::

    ontologx ingest   INPUT...  --backend ID --store PATH [...]
    ontologx validate FILE...   [--schema PATH]
    ontologx eval     --predictions DIR [--predictions DIR ...] --gold DIR
    ontologx sample   INPUT...  --out-dir DIR [--threshold F --seed N ...]

Configuration precedence is flags > environment variables (``ONTOLOGX_*``)
> JSON config file (``--config``) > built-in defaults. Credentials are read
from the environment only (``ONTOLOGX_API_KEY``).

Backend ids: ``scripted:PATH`` replays canned responses from a JSON file
holding a list of strings; ``http`` talks to the chat endpoint configured
via ``ONTOLOGX_API_URL`` / ``ONTOLOGX_MODEL`` / ``ONTOLOGX_API_KEY``. Ids
registered programmatically (tests, embedding callers) work as-is.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from . import backend as backend_mod
from .backend import GenerationConfig, HTTPChatBackend, Mode, ScriptedBackend
from .embedding import HashingEmbedder
from .errors import ConfigError, OntologxError, ParseError, PoolExhausted, SemanticError
from .evaluation import EventScore, aggregate, precision_recall_f1, summarize_runs
from .model import EMPTY_GRAPH, graph_from_json, graph_to_json, events_from_lines
from .ontology import default_schema, load_schema
from .pipeline import PipelineConfig, run_stream, summarize
from .retrieval import ExampleIndex, MMRConfig
from .sampling import sample_dataset, write_split
from .store import GraphStore
from .validation import validate

__all__ = ["main"]

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def _load_config_file(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError("config file must hold a JSON object")
    return payload


def _resolve(flag_value, env_name: str, config: dict, key: str, default, cast=str):
    if flag_value is not None:
        return flag_value
    env = os.environ.get(env_name)
    if env:
        try:
            return cast(env)
        except ValueError as exc:
            raise ConfigError(f"environment variable {env_name} is invalid: {exc}") from exc
    if key in config:
        return config[key]
    return default


def _ensure_backend(backend_id: str) -> None:
    if backend_id in backend_mod.registered_backends():
        return
    if backend_id.startswith("scripted:"):
        script_path = backend_id.split(":", 1)[1]
        try:
            with open(script_path, "r", encoding="utf-8") as fh:
                responses = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read backend script {script_path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"backend script {script_path} is not valid JSON: {exc}") from exc
        if not isinstance(responses, list) or not all(isinstance(r, str) for r in responses):
            raise ConfigError("backend script must be a JSON list of response strings")
        backend_mod.register_backend(backend_id, ScriptedBackend(responses=list(responses)))
        return
    if backend_id == "http":
        endpoint = os.environ.get("ONTOLOGX_API_URL")
        model = os.environ.get("ONTOLOGX_MODEL")
        if not endpoint or not model:
            raise ConfigError(
                "backend 'http' needs ONTOLOGX_API_URL and ONTOLOGX_MODEL in the environment"
            )
        backend_mod.register_backend(
            backend_id,
            HTTPChatBackend(endpoint, model, api_key=os.environ.get("ONTOLOGX_API_KEY")),
        )
        return
    raise ConfigError(f"unknown backend id {backend_id!r}")


@dataclass(frozen=True)
class RunManifest:
    config: dict
    inputs: list
    seed: Optional[int]
    started_at: str
    finished_at: str
    outputs: dict

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "inputs": self.inputs,
            "seed": self.seed,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "outputs": self.outputs,
        }


def _utc_now() -> str:
    return datetime.now(tz=timezone.utc).isoformat()


def cmd_ingest(args: argparse.Namespace) -> int:
    config = _load_config_file(args.config)
    mode_name = _resolve(args.mode, "ONTOLOGX_MODE", config, "mode", "ontologx")
    try:
        mode = Mode(mode_name)
    except ValueError:
        raise ConfigError(f"mode must be 'ontologx' or 'baseline', got {mode_name!r}")
    backend_id = _resolve(args.backend, "ONTOLOGX_BACKEND", config, "backend", None)
    if not backend_id:
        raise ConfigError("no backend configured (use --backend or ONTOLOGX_BACKEND)")
    _ensure_backend(backend_id)

    schema_path = _resolve(args.schema, "ONTOLOGX_SCHEMA", config, "schema", None)
    schema = load_schema(schema_path) if schema_path else default_schema()

    generation = GenerationConfig(
        backend_id=backend_id,
        temperature=_resolve(
            args.temperature, "ONTOLOGX_TEMPERATURE", config, "temperature", 0.7, float
        ),
        max_correction_rounds=_resolve(
            args.max_rounds, "ONTOLOGX_MAX_ROUNDS", config, "max_rounds", 3, int
        ),
        mode=mode,
    )
    mmr = MMRConfig(
        lambda_weight=_resolve(
            args.lambda_weight, "ONTOLOGX_LAMBDA", config, "lambda", 0.5, float
        ),
        k=_resolve(args.k, "ONTOLOGX_K", config, "k", 4, int),
        fetch_pool=_resolve(
            args.fetch_pool, "ONTOLOGX_FETCH_POOL", config, "fetch_pool", 20, int
        ),
        include_generated=bool(args.grow_index),
    )

    events = []
    for input_path in args.inputs:
        path = Path(input_path)
        if not path.exists():
            raise ConfigError(f"input file {path} does not exist")
        context = path.name if args.context_from_filename else None
        with path.open("r", encoding="utf-8", errors="replace") as fh:
            events.extend(
                events_from_lines(
                    fh,
                    source_file=str(path),
                    context=context,
                    start_sequence=len(events),
                )
            )

    embedder = HashingEmbedder()
    index = None
    examples_path = _resolve(args.examples, "ONTOLOGX_EXAMPLES", config, "examples", None)
    if examples_path:
        if not Path(examples_path).exists():
            raise ConfigError(f"examples index {examples_path} does not exist")
        index = ExampleIndex.load(examples_path, embedder)

    store_path = _resolve(args.store, "ONTOLOGX_STORE", config, "store", None)
    epoch = _resolve(args.epoch, "ONTOLOGX_EPOCH", config, "epoch", None, float)
    clock = (lambda: float(epoch)) if epoch is not None else time.time
    run_id = _resolve(args.run_id, "ONTOLOGX_RUN_ID", config, "run_id", "run")

    started_at = _utc_now()
    store = GraphStore(store_path, writable=True) if store_path else None
    dead_letter = args.dead_letter
    if dead_letter is None and store_path:
        dead_letter = str(store_path) + ".deadletter.jsonl"
    try:
        cfg = PipelineConfig(
            generation=generation,
            mmr=mmr,
            schema=schema,
            store=store,
            index=index,
            embedder=embedder,
            run_id=run_id,
            clock=clock,
            add_generated_to_index=bool(args.grow_index),
            dead_letter_path=dead_letter,
        )
        outcomes = run_stream(events, cfg)
    finally:
        if store is not None:
            store.close()

    outputs = {"store": store_path, "dead_letter": dead_letter}
    if args.predictions_dir:
        predictions_dir = Path(args.predictions_dir)
        predictions_dir.mkdir(parents=True, exist_ok=True)
        for outcome in outcomes:
            target = predictions_dir / f"{outcome.event.sequence_no:06d}.json"
            target.write_text(graph_to_json(outcome.graph, indent=2) + "\n", encoding="utf-8")
        outputs["predictions_dir"] = str(predictions_dir)

    if store_path:
        manifest = RunManifest(
            config={
                "mode": mode.value,
                "backend": backend_id,
                "schema": schema_path,
                "examples": examples_path,
                "temperature": generation.temperature,
                "max_rounds": generation.max_correction_rounds,
                "k": mmr.k,
                "lambda": mmr.lambda_weight,
                "fetch_pool": mmr.fetch_pool,
                "run_id": run_id,
                "epoch": epoch,
            },
            inputs=[str(p) for p in args.inputs],
            seed=None,
            started_at=started_at,
            finished_at=_utc_now(),
            outputs=outputs,
        )
        manifest_path = Path(str(store_path) + ".manifest.json")
        manifest_path.write_text(
            json.dumps(manifest.to_dict(), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )

    print(json.dumps(summarize(outcomes).to_dict(), ensure_ascii=False))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    schema = load_schema(args.schema) if args.schema else default_schema()
    all_conform = True
    for file_path in args.files:
        path = Path(file_path)
        if not path.exists():
            print(f"error: graph file {path} does not exist", file=sys.stderr)
            return EXIT_CONFIG
        try:
            graph = graph_from_json(path.read_text(encoding="utf-8"))
        except ParseError as exc:
            print(f"error: {path} is not a canonical graph document: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        report = validate(graph, schema)
        print(json.dumps({"file": str(path), **report.to_dict()}, ensure_ascii=False))
        if not report.conforms:
            all_conform = False
    return EXIT_OK if all_conform else EXIT_FAILURE


def _load_graph_dir(directory: Path) -> dict:
    graphs = {}
    for path in sorted(directory.glob("*.json")):
        graphs[path.stem] = path
    return graphs


def cmd_eval(args: argparse.Namespace) -> int:
    gold_dir = Path(args.gold)
    if not gold_dir.is_dir():
        raise ConfigError(f"gold directory {gold_dir} does not exist")
    gold_files = _load_graph_dir(gold_dir)
    if not gold_files:
        raise ConfigError(f"gold directory {gold_dir} holds no *.json graphs")
    schema = load_schema(args.schema) if args.schema else default_schema()

    runs = []
    for predictions in args.predictions:
        predictions_dir = Path(predictions)
        if not predictions_dir.is_dir():
            raise ConfigError(f"predictions directory {predictions_dir} does not exist")
        stray = set(_load_graph_dir(predictions_dir)) - set(gold_files)
        if stray:
            raise ConfigError(
                f"predictions without gold annotation: {', '.join(sorted(stray))}"
            )
        scores = []
        reports = []
        for stem, gold_path in sorted(gold_files.items()):
            try:
                gold = graph_from_json(gold_path.read_text(encoding="utf-8"))
            except ParseError as exc:
                raise ConfigError(f"gold graph {gold_path} is malformed: {exc}") from exc
            pred_path = predictions_dir / f"{stem}.json"
            predicted = EMPTY_GRAPH
            if pred_path.exists():
                try:
                    predicted = graph_from_json(pred_path.read_text(encoding="utf-8"))
                except ParseError:
                    predicted = EMPTY_GRAPH  # unparseable output scores as empty
            p, r, f1 = precision_recall_f1(predicted, gold)
            report = validate(predicted, schema)
            scores.append(EventScore(stem, p, r, f1, conforms=report.conforms))
            reports.append(report)
        runs.append(aggregate(scores, reports))

    summary = summarize_runs(runs)
    payload = {
        "runs": [run.to_dict() for run in runs],
        "summary": summary.to_dict(),
    }
    if args.out_json:
        Path(args.out_json).write_text(
            json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )
    if args.out_csv:
        Path(args.out_csv).write_text(summary.to_csv(), encoding="utf-8")
    print(json.dumps(summary.to_dict(), ensure_ascii=False))
    return EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    for input_path in args.inputs:
        if not Path(input_path).exists():
            raise ConfigError(f"input file {input_path} does not exist")
    try:
        split = sample_dataset(
            args.inputs,
            pool_per_file=args.pool_per_file,
            n=args.n_events,
            threshold=args.threshold,
            seed=args.seed,
            retain_below_threshold=args.retain_below_threshold,
        )
    except PoolExhausted as exc:
        print(
            f"error: pool exhausted, only {exc.achieved} events satisfied the "
            f"distance criterion: {exc}",
            file=sys.stderr,
        )
        return EXIT_FAILURE
    paths = write_split(split, args.out_dir)
    print(
        json.dumps(
            {
                "fewshot": len(split.fewshot),
                "validation": len(split.validation),
                "test": len(split.test),
                "files": [str(p) for p in paths],
            },
            ensure_ascii=False,
        )
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ontologx",
        description="Ontology-guided knowledge-graph extraction from log events",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="run the extraction pipeline over log files")
    ingest.add_argument("inputs", nargs="+", help="log files, processed in order")
    ingest.add_argument("--mode", choices=["ontologx", "baseline"], default=None)
    ingest.add_argument("--schema", default=None, help="ontology schema JSON file")
    ingest.add_argument("--examples", default=None, help="example index JSON-lines file")
    ingest.add_argument("--store", default=None, help="graph store data file")
    ingest.add_argument("--backend", default=None, help="backend id (scripted:PATH or http)")
    ingest.add_argument("--max-rounds", type=int, default=None, dest="max_rounds")
    ingest.add_argument("--temperature", type=float, default=None)
    ingest.add_argument("--k", type=int, default=None)
    ingest.add_argument("--lambda", type=float, default=None, dest="lambda_weight")
    ingest.add_argument("--fetch-pool", type=int, default=None, dest="fetch_pool")
    ingest.add_argument("--run-id", default=None, dest="run_id")
    ingest.add_argument(
        "--epoch",
        type=float,
        default=None,
        help="fixed store timestamp (seconds since the Unix epoch) for reproducible runs",
    )
    ingest.add_argument("--dead-letter", default=None, dest="dead_letter")
    ingest.add_argument("--predictions-dir", default=None, dest="predictions_dir")
    ingest.add_argument("--config", default=None, help="JSON config file")
    ingest.add_argument(
        "--grow-index",
        action="store_true",
        help="add validated graphs to the retrieval index as the stream runs",
    )
    ingest.add_argument(
        "--context-from-filename",
        action="store_true",
        help="use each input file's name as the events' context string",
    )
    ingest.set_defaults(func=cmd_ingest)

    val = sub.add_parser("validate", help="validate graph JSON files against the ontology")
    val.add_argument("files", nargs="+")
    val.add_argument("--schema", default=None)
    val.set_defaults(func=cmd_validate)

    ev = sub.add_parser("eval", help="score prediction graphs against gold graphs")
    ev.add_argument(
        "--predictions",
        action="append",
        required=True,
        help="predictions directory; repeat for multiple runs",
    )
    ev.add_argument("--gold", required=True)
    ev.add_argument("--schema", default=None)
    ev.add_argument("--out-json", default=None, dest="out_json")
    ev.add_argument("--out-csv", default=None, dest="out_csv")
    ev.set_defaults(func=cmd_eval)

    sample = sub.add_parser("sample", help="sample a diverse evaluation dataset")
    sample.add_argument("inputs", nargs="+")
    sample.add_argument("--out-dir", required=True, dest="out_dir")
    sample.add_argument("--threshold", type=float, default=0.7)
    sample.add_argument("--seed", type=int, default=0)
    sample.add_argument("--pool-per-file", type=int, default=100, dest="pool_per_file")
    sample.add_argument("--n-events", type=int, default=70, dest="n_events")
    sample.add_argument(
        "--retain-below-threshold", action="store_true", dest="retain_below_threshold"
    )
    sample.set_defaults(func=cmd_sample)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParseError, SemanticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OntologxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry points.

Subcommands compose the library modules; no business logic lives here.

    iodiag parse <trace> [--dump-csv DIR]
    iodiag summarize <trace> [--dump-json DIR]
    iodiag kb build <corpus-dir> --index <file>
    iodiag diagnose <trace> --index <file> --out <dir>
    iodiag chat <run-dir>
    iodiag eval --manifest <file> --tool-outputs <dir> ... --judge-model <id>
    iodiag serve --port <p> --index <file>

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import engine, evalharness
from .config import build_gateway, load_config
from .gateway import ChatExchange
from .knowledge import VectorIndex, build_index
from .summaries import compute_app_context, dump_fragments, extract_fragments
from .trace import parse_trace, split_modules

logger = logging.getLogger(__name__)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage problems; this tool reserves 2 for
    # runtime failures, so usage errors are rethrown and mapped to 1.
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="iodiag", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON config file", default=None)
    parser.add_argument(
        "--mock-script",
        help="JSON mock-provider script; forces the offline provider",
        default=None,
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a darshan-parser text trace")
    p.add_argument("trace")
    p.add_argument("--dump-csv", metavar="DIR", default=None)

    p = sub.add_parser("summarize", help="extract summary fragments")
    p.add_argument("trace")
    p.add_argument("--dump-json", metavar="DIR", default=None)

    p = sub.add_parser("kb", help="knowledge-base maintenance")
    kb_sub = p.add_subparsers(dest="kb_command", required=True)
    b = kb_sub.add_parser("build", help="build the vector index from a corpus dir")
    b.add_argument("corpus_dir")
    b.add_argument("--index", required=True)

    p = sub.add_parser("diagnose", help="run the full diagnosis pipeline")
    p.add_argument("trace")
    p.add_argument("--index", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("chat", help="follow-up questions about a finished run")
    p.add_argument("run_dir")

    p = sub.add_parser("eval", help="rank tool outputs over a labeled manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument(
        "--tool-outputs",
        required=True,
        nargs="+",
        help="one directory per tool (dir name = tool id) of <sample_id>.md files",
    )
    p.add_argument("--judge-model", default=None)
    p.add_argument("--criteria", nargs="+", default=[c.value for c in evalharness.Criterion])
    p.add_argument("--repetitions", type=int, default=evalharness.DEFAULT_REPETITIONS)
    p.add_argument("--no-labels", action="store_true", help="hide ground-truth labels from Accuracy prompts")
    p.add_argument("--out", default=".")

    p = sub.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--index", required=True)
    p.add_argument("--session-dir", default=None)
    p.add_argument("--static-dir", default=None)

    return parser


def _load_profile(path: str):
    trace_path = Path(path)
    if not trace_path.exists():
        raise FileNotFoundError(f"trace not found: {trace_path}")
    return parse_trace(trace_path.read_text()), trace_path


def _cmd_parse(args) -> int:
    profile, trace_path = _load_profile(args.trace)
    print(f"exe: {profile.header.exe}")
    print(f"jobid: {profile.header.jobid}  nprocs: {profile.header.nprocs}")
    print(f"runtime: {profile.header.runtime_seconds} s")
    for module, records in profile.tables.items():
        print(f"{module}: {len(records)} records")
    if args.dump_csv:
        written = split_modules(profile, args.dump_csv, stem=trace_path.stem)
        for module, path in written.items():
            print(f"wrote {path}")
    return 0


def _cmd_summarize(args) -> int:
    profile, trace_path = _load_profile(args.trace)
    fragments = extract_fragments(profile)
    context = compute_app_context(profile)
    print(context.render())
    for fragment in fragments:
        print(f"- {fragment.module.value}/{fragment.category.value}")
    if args.dump_json:
        paths = dump_fragments(fragments, args.dump_json, stem=trace_path.stem)
        print(f"wrote {len(paths)} fragment files to {args.dump_json}")
    return 0


def _cmd_kb_build(args, gateway) -> int:
    index = build_index(args.corpus_dir, gateway.embed, index_path=args.index)
    print(f"indexed {len(index)} chunks -> {args.index}")
    return 0


def _cmd_diagnose(args, gateway, app_config) -> int:
    profile, _ = _load_profile(args.trace)
    index = VectorIndex.load(args.index)
    final = engine.diagnose_trace(
        profile, index, gateway, config=app_config.engine, out_dir=args.out
    )
    print(f"diagnosis written to {args.out}/final.md")
    print(f"issue tags: {sorted(t.display_name for t in final.issue_tags) or 'none'}")
    return 0


def _cmd_chat(args, gateway, app_config) -> int:
    run_dir = Path(args.run_dir)
    final_json = run_dir / "final.json"
    if not final_json.exists():
        raise FileNotFoundError(f"no final.json under {run_dir}")
    diagnosis = engine.diagnosis_from_dict(json.loads(final_json.read_text()))
    session = engine.new_session("terminal", diagnosis)
    print(diagnosis.text)
    print("\nAsk follow-up questions (empty line or Ctrl-D to quit).")
    while True:
        try:
            question = input("> ").strip()
        except EOFError:
            break
        if not question:
            break
        answer = engine.answer_followup(
            gateway, session, question, config=app_config.engine
        )
        print(answer)
    return 0


def _cmd_eval(args, gateway, app_config) -> int:
    samples = evalharness.load_manifest(args.manifest)
    tool_outputs: dict[str, dict[str, str]] = {}
    for tool_dir in args.tool_outputs:
        tool_path = Path(tool_dir)
        outputs = {}
        for path in sorted(tool_path.iterdir()):
            if path.suffix in (".md", ".txt"):
                outputs[path.stem] = path.read_text()
        tool_outputs[tool_path.name] = outputs

    model = args.judge_model or app_config.provider.reasoning_model

    def judge(prompt: str) -> str:
        return gateway.chat(
            ChatExchange(messages=[("user", prompt)], model=model, temperature=0.0)
        )

    outcomes = []
    for name in args.criteria:
        criterion = evalharness.Criterion(name)
        outcomes += evalharness.run_ranking(
            samples,
            tool_outputs,
            criterion,
            judge,
            repetitions=args.repetitions,
            include_labels=not args.no_labels,
        )
    table = evalharness.compute_scores(outcomes, samples)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "scores.json").write_text(table.to_json() + "\n")
    (out_dir / "scores.md").write_text(table.to_markdown())
    print(f"wrote {out_dir / 'scores.json'} and {out_dir / 'scores.md'}")
    print(table.to_markdown())
    return 0


def _cmd_serve(args, gateway, app_config) -> int:
    import uvicorn

    from .service import ServiceState, create_app

    state = ServiceState(
        gateway=gateway,
        index=VectorIndex.load(args.index),
        session_dir=Path(args.session_dir or app_config.session_dir),
        engine_config=app_config.engine,
        max_upload_bytes=app_config.max_upload_bytes,
        static_dir=Path(args.static_dir) if args.static_dir else None,
    )
    app = create_app(state)
    uvicorn.run(app, host="127.0.0.1", port=args.port or app_config.port)
    return 0


def cli_main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        app_config = load_config(args.config)
        if args.command == "parse":
            return _cmd_parse(args)
        if args.command == "summarize":
            return _cmd_summarize(args)
        gateway = build_gateway(app_config, mock_script=args.mock_script)
        if args.command == "kb":
            return _cmd_kb_build(args, gateway)
        if args.command == "diagnose":
            return _cmd_diagnose(args, gateway, app_config)
        if args.command == "chat":
            return _cmd_chat(args, gateway, app_config)
        if args.command == "eval":
            return _cmd_eval(args, gateway, app_config)
        if args.command == "serve":
            return _cmd_serve(args, gateway, app_config)
        raise UsageError(f"unknown command {args.command}")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"iodiag: error: {exc}", file=sys.stderr)
        if args.verbose:
            raise
        return 2
    return 0


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()

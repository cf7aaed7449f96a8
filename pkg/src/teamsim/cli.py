"""Command line entry points: serve, replay, check."""

from __future__ import annotations

import argparse
import datetime
import json
import sys
from importlib import resources
from pathlib import Path

from .backend import Backend, RemoteBackend, Script, ScriptedBackend, load_script
from .events import read_transcript
from .session import Session, SessionConfig, run_check

BUNDLED_SCRIPT = "scripts/acceptance_script.json"


def _load_bundled_script() -> Script:
    raw = json.loads(resources.files("teamsim.fixtures").joinpath(BUNDLED_SCRIPT).read_text())
    return load_script(raw)


def _resolve_script(spec: str) -> Script:
    _, _, path = spec.partition(":")
    if not path:
        return _load_bundled_script()
    return load_script(Path(path))


def _build_backend(args: argparse.Namespace) -> Backend:
    if args.backend == "remote":
        if not args.endpoint:
            raise SystemExit("--endpoint is required with --backend remote")
        return RemoteBackend(args.endpoint)
    if args.backend == "scripted" or args.backend.startswith("scripted:"):
        return ScriptedBackend(_resolve_script(args.backend))
    raise SystemExit(f"unknown backend {args.backend!r}; use scripted:<file> or remote")


def _session_config(args: argparse.Namespace) -> SessionConfig:
    return SessionConfig(
        model=args.model,
        temperature=args.temperature,
        language=args.language,
        tick_s=args.tick_ms / 1000.0,
        door_open_s=args.door_open_s,
    )


def _add_session_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", default="gpt-4-0613", help="model name sent to the backend")
    parser.add_argument("--temperature", type=float, default=0.2)
    parser.add_argument("--log-dir", type=Path, default=None, help="directory for JSONL transcripts")
    parser.add_argument("--tick-ms", type=int, default=100, help="simulation step in milliseconds")
    parser.add_argument("--door-open-s", type=float, default=6.0, help="how long the timed door stays open")
    parser.add_argument("--language", default="English", help="language the robots answer in")


def _add_backend_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backend", default="scripted", help="scripted:<file> or remote (default: bundled script)")
    parser.add_argument("--endpoint", default=None, help="chat-completions URL for the remote backend")


def _payload_summary(payload: dict) -> str:
    for key in ("text", "feedback", "title", "instruction"):
        if key in payload and payload[key]:
            return str(payload[key])
    if "assignments" in payload:
        return "; ".join(f"{a['robot']}: {a['instruction']}" for a in payload["assignments"])
    return json.dumps(payload, ensure_ascii=False) if payload else ""


def cmd_serve(args: argparse.Namespace) -> int:
    from .server import serve

    log_path = None
    if args.log_dir is not None:
        args.log_dir.mkdir(parents=True, exist_ok=True)
        stamp = datetime.datetime.now().strftime("%Y%m%d-%H%M%S")
        log_path = args.log_dir / f"session-{stamp}.jsonl"
    session = Session(_build_backend(args), config=_session_config(args), log_path=log_path)
    print(f"operator service on ws://{args.host}:{args.port}/ws")
    if log_path is not None:
        print(f"transcript: {log_path}")
    serve(session, args.host, args.port)
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    try:
        events = read_transcript(args.transcript)
    except (OSError, ValueError) as exc:
        print(f"cannot read transcript: {exc}", file=sys.stderr)
        return 2
    for event in events:
        agent = event.agent or "-"
        summary = _payload_summary(dict(event.payload))
        print(f"{event.seq:5d}  t={event.sim_time:8.2f}s  {event.layer:<13} {event.kind:<14} {agent:<8} {summary}")
    print(f"{len(events)} events")
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    script = load_script(Path(args.script)) if args.script else _load_bundled_script()
    if not script.dialogue:
        print("script has no dialogue section; nothing to check", file=sys.stderr)
        return 2
    ok = run_check(
        script,
        backend_factory=lambda: ScriptedBackend(script),
        config=_session_config(args),
        log_dir=args.log_dir,
    )
    print("all tasks passed" if ok else "some tasks failed")
    return 0 if ok else 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="teamsim", description="Multi-robot teaming simulation")
    commands = parser.add_subparsers(dest="command", required=True)

    serve_parser = commands.add_parser("serve", help="run the websocket operator service")
    _add_backend_args(serve_parser)
    _add_session_args(serve_parser)
    serve_parser.add_argument("--host", default="127.0.0.1")
    serve_parser.add_argument("--port", type=int, default=8765)
    serve_parser.set_defaults(fn=cmd_serve)

    replay_parser = commands.add_parser("replay", help="print a session transcript")
    replay_parser.add_argument("transcript", type=Path)
    replay_parser.set_defaults(fn=cmd_replay)

    check_parser = commands.add_parser("check", help="run scripted dialogues for every task headlessly")
    check_parser.add_argument("script", nargs="?", default=None, help="script file (default: bundled script)")
    _add_session_args(check_parser)
    check_parser.set_defaults(fn=cmd_check)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())

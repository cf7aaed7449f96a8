"""Shared fixtures: scripted sessions and history well-formedness checks."""

from __future__ import annotations

from pathlib import Path

import pytest

from teamsim.backend import Script, ScriptedBackend, load_script
from teamsim.cli import _load_bundled_script
from teamsim.session import Session, SessionConfig


@pytest.fixture(scope="session")
def bundled_script() -> Script:
    return _load_bundled_script()


_open_sessions: list[Session] = []


@pytest.fixture(autouse=True)
def _close_leftover_sessions():
    yield
    while _open_sessions:
        _open_sessions.pop().close()


def make_session(
    script: Script | dict | list,
    log_path: Path | None = None,
    config: SessionConfig | None = None,
) -> Session:
    if not isinstance(script, Script):
        script = load_script(script)
    session = Session(ScriptedBackend(script), config=config, log_path=log_path, wall_clock=lambda: 0.0)
    _open_sessions.append(session)
    return session


def run_dialogue(session: Session, task_id: int, lines, max_time: float = 900.0) -> Session:
    session.select_task(task_id)
    for line in lines:
        session.submit_utterance(line)
        session.run_until_idle(max_time=max_time)
    return session


def assert_well_formed_history(history) -> None:
    """Protocol shape every conversation must keep, trimmed or not.

    The first message is the briefing; an assistant message carrying tool
    calls is followed by exactly one tool result per call, matching ids in
    order; tool results never appear anywhere else.
    """
    assert history, "history is empty"
    assert history[0].role == "system"
    assert history[0].content and history[0].content.startswith("You are")
    i = 1
    while i < len(history):
        message = history[i]
        if message.role == "assistant" and message.tool_calls:
            for call in message.tool_calls:
                i += 1
                assert i < len(history), f"missing tool result for {call.id}"
                result = history[i]
                assert result.role == "tool", f"expected tool result after call {call.id}, got {result.role}"
                assert result.tool_call_id == call.id
                assert result.name == call.name
        else:
            assert message.role != "tool", f"orphan tool message at index {i}"
        i += 1

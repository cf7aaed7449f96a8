"""Chat message and tool-call types shared by agents, backends and the wire."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping


@dataclass(frozen=True)
class ToolCall:
    id: str
    name: str
    arguments: Mapping[str, object] | None  # None when the model sent unparseable JSON


@dataclass(frozen=True)
class Message:
    role: str  # "system" | "user" | "assistant" | "tool"
    content: str | None = None
    tool_calls: tuple[ToolCall, ...] = ()
    tool_call_id: str | None = None
    name: str | None = None  # function name echoed on tool results


def system(text: str) -> Message:
    return Message(role="system", content=text)


def user(text: str) -> Message:
    return Message(role="user", content=text)


def assistant(text: str) -> Message:
    return Message(role="assistant", content=text)


def assistant_calls(calls: tuple[ToolCall, ...], content: str | None = None) -> Message:
    return Message(role="assistant", content=content, tool_calls=calls)


def tool_result(call_id: str, name: str, text: str) -> Message:
    return Message(role="tool", content=text, tool_call_id=call_id, name=name)

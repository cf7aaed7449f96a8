"""Completion backends: a deterministic scripted one and a remote HTTP one.

Both sit behind the same ``complete`` call.  The scripted backend replays
rule-matched replies so whole sessions run reproducibly without a model;
the remote backend speaks the chat-completions protocol over HTTP.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import httpx

from . import wire
from .chat import Message, ToolCall


class BackendError(RuntimeError):
    """The backend could not produce a completion."""


@dataclass(frozen=True)
class CompletionParams:
    model: str
    temperature: float
    tool_choice: str | None = None  # function name to force
    max_output_tokens: int | None = None


@dataclass(frozen=True)
class Completion:
    message: Message
    latency_s: float = 0.0


class Backend:
    """One completion per call; `scope` names the requesting conversation
    ("Jupiter", "Neptune", "Pluto" or "controller")."""

    is_blocking = False

    def probe(self) -> None:
        """Fail fast at session start if the backend cannot serve."""

    def complete(self, scope: str, messages: Sequence[Message], tools: Sequence[Mapping], params: CompletionParams) -> Completion:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# scripted backend


@dataclass(frozen=True)
class ScriptRule:
    """One canned reply.

    Rules are tried in order; the first whose scope, ordinal and match all
    fit wins.  `match` is compared against the newest user or tool message
    (substring, case-insensitive; `exact` for full equality).  `ordinal`
    counts assistant turns already in the request plus one, so a rule can
    target "the second completion of a turn" without hidden state.
    """

    scope: str | None = None
    match: str | None = None
    exact: bool = False
    ordinal: int | None = None
    reply: str | None = None
    calls: tuple[tuple[str, Mapping[str, object]], ...] = ()
    latency_s: float = 0.0


@dataclass(frozen=True)
class Script:
    rules: tuple[ScriptRule, ...]
    dialogue: Mapping[int, tuple[str, ...]] = field(default_factory=dict)


def load_script(source: str | Path | Mapping | Sequence) -> Script:
    if isinstance(source, (str, Path)):
        raw = json.loads(Path(source).read_text())
    else:
        raw = source
    if isinstance(raw, Sequence):
        raw = {"rules": list(raw)}
    rules = []
    for item in raw.get("rules", []):
        calls = tuple((c["name"], dict(c.get("arguments", {}))) for c in item.get("calls", []))
        rules.append(
            ScriptRule(
                scope=item.get("scope"),
                match=item.get("match"),
                exact=bool(item.get("exact", False)),
                ordinal=item.get("ordinal"),
                reply=item.get("reply"),
                calls=calls,
                latency_s=float(item.get("latency_s", 0.0)),
            )
        )
    dialogue = {int(task_id): tuple(lines) for task_id, lines in raw.get("dialogue", {}).items()}
    return Script(rules=tuple(rules), dialogue=dialogue)


def _substitute(value, message: str):
    if isinstance(value, str):
        return value.replace("{message}", message)
    if isinstance(value, Mapping):
        return {k: _substitute(v, message) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_substitute(v, message) for v in value]
    return value


class ScriptedBackend(Backend):
    """Rule-driven completions; same request always yields the same reply."""

    def __init__(self, script: Script):
        self.script = script
        self._counters: dict[str, int] = {}

    def complete(self, scope, messages, tools, params):
        prompt = ""
        for message in reversed(messages):
            if message.role in ("user", "tool") and message.content:
                prompt = message.content
                break
        ordinal = sum(1 for m in messages if m.role == "assistant") + 1
        rule = self._find(scope, prompt, ordinal)
        if rule is None:
            return Completion(Message(role="assistant", content="I did not understand."))
        calls = []
        for name, arguments in rule.calls:
            n = self._counters.get(scope, 0) + 1
            self._counters[scope] = n
            calls.append(ToolCall(id=f"call_{scope}_{n}", name=name, arguments=_substitute(arguments, prompt)))
        content = None if rule.reply is None else rule.reply.replace("{message}", prompt)
        return Completion(Message(role="assistant", content=content, tool_calls=tuple(calls)), latency_s=rule.latency_s)

    def _find(self, scope: str, prompt: str, ordinal: int) -> ScriptRule | None:
        lowered = prompt.lower()
        for rule in self.script.rules:
            if rule.scope is not None and rule.scope != scope:
                continue
            if rule.ordinal is not None and rule.ordinal != ordinal:
                continue
            if rule.match is not None:
                if rule.exact:
                    if rule.match != prompt:
                        continue
                elif rule.match.lower() not in lowered:
                    continue
            return rule
        return None


# ---------------------------------------------------------------------------
# remote backend


class RemoteBackend(Backend):
    """Chat-completions over HTTP; the API key comes from LLM_API_KEY."""

    is_blocking = True

    def __init__(self, endpoint: str, timeout_s: float = 60.0, retries: int = 1, retry_wait_s: float = 1.0):
        self.endpoint = endpoint
        self.timeout_s = timeout_s
        self.retries = retries
        self.retry_wait_s = retry_wait_s
        self.api_key = os.environ.get("LLM_API_KEY")

    def probe(self):
        # Any HTTP response counts as reachable; only transport errors fail.
        try:
            httpx.head(self.endpoint, timeout=self.timeout_s)
        except httpx.HTTPError as exc:
            raise BackendError(f"endpoint unreachable: {self.endpoint} ({exc})") from exc

    def complete(self, scope, messages, tools, params):
        body = wire.request_body(
            params.model, messages, tools, params.temperature, params.tool_choice, params.max_output_tokens
        )
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.retry_wait_s)
            started = time.monotonic()
            try:
                response = httpx.post(
                    self.endpoint,
                    content=wire.encode_request(body),
                    headers=headers,
                    timeout=self.timeout_s,
                )
                response.raise_for_status()
                message = wire.parse_completion(response.json())
                return Completion(message, latency_s=time.monotonic() - started)
            except (httpx.HTTPError, wire.WireError, json.JSONDecodeError) as exc:
                last_error = exc
        raise BackendError(f"completion request failed after {self.retries + 1} attempts: {last_error!r}")

"""Chat-completions wire format: canonical request bodies, reply parsing.

Serialization is deterministic: key order is fixed by construction and
tool-call arguments are dumped with sorted keys, so identical requests
are byte-identical and can be pinned in golden files.
"""

from __future__ import annotations

import json
from typing import Mapping, Sequence

from .chat import Message, ToolCall


class WireError(ValueError):
    """A completion reply that does not follow the chat-completions shape."""


def message_to_wire(message: Message) -> dict:
    body: dict = {"role": message.role, "content": message.content}
    if message.tool_calls:
        body["tool_calls"] = [
            {
                "id": call.id,
                "type": "function",
                "function": {
                    "name": call.name,
                    "arguments": json.dumps(call.arguments or {}, sort_keys=True, separators=(",", ":")),
                },
            }
            for call in message.tool_calls
        ]
    if message.tool_call_id is not None:
        body["tool_call_id"] = message.tool_call_id
    if message.name is not None:
        body["name"] = message.name
    return body


def request_body(
    model: str,
    messages: Sequence[Message],
    tools: Sequence[Mapping] | None,
    temperature: float,
    tool_choice: str | None = None,
    max_output_tokens: int | None = None,
) -> dict:
    body: dict = {
        "model": model,
        "messages": [message_to_wire(m) for m in messages],
        "temperature": temperature,
    }
    if max_output_tokens is not None:
        body["max_tokens"] = max_output_tokens
    if tools:
        body["tools"] = list(tools)
    if tool_choice is not None:
        body["tool_choice"] = {"type": "function", "function": {"name": tool_choice}}
    return body


def encode_request(body: Mapping) -> bytes:
    return json.dumps(body, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def parse_completion(data: Mapping) -> Message:
    """Assistant message out of a completion reply.

    Tool-call arguments that fail to parse as JSON are kept as ``None`` so
    validation can reject the call with readable feedback instead of the
    whole reply being dropped.
    """
    try:
        raw = data["choices"][0]["message"]
    except (KeyError, IndexError, TypeError) as exc:
        raise WireError(f"completion reply missing choices[0].message: {exc!r}") from None
    if raw.get("role") != "assistant":
        raise WireError(f"completion message role is {raw.get('role')!r}, expected 'assistant'")
    calls = []
    for item in raw.get("tool_calls") or ():
        try:
            call_id = item["id"]
            name = item["function"]["name"]
            raw_args = item["function"]["arguments"]
        except (KeyError, TypeError) as exc:
            raise WireError(f"malformed tool call in completion: {exc!r}") from None
        try:
            arguments = json.loads(raw_args)
            if not isinstance(arguments, dict):
                arguments = None
        except (json.JSONDecodeError, TypeError):
            arguments = None
        calls.append(ToolCall(id=call_id, name=name, arguments=arguments))
    return Message(role="assistant", content=raw.get("content"), tool_calls=tuple(calls))

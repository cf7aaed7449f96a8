"""Routing controller: one forced function call turns an utterance into
per-robot assignments.

The controller model never answers in prose; it must call ``dispatch``
with a list of (robot, instruction) pairs.  A malformed reply gets one
retry with a nudge, then the caller falls back to mention-based routing.
Robots named in the utterance are always included: if the model skipped
one, it is appended with the raw utterance as its instruction.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Mapping, Protocol, Sequence

from . import chat
from .backend import Completion
from .world import ROSTER

HISTORY_CAP = 40

DISPATCH_TOOL = {
    "type": "function",
    "function": {
        "name": "dispatch",
        "description": "Deliver the user's request to one or more robots, one concrete instruction each.",
        "parameters": {
            "type": "object",
            "properties": {
                "assignments": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "robot": {"type": "string", "enum": list(ROSTER)},
                            "instruction": {"type": "string"},
                        },
                        "required": ["robot", "instruction"],
                    },
                },
                "rationale": {"type": "string"},
            },
            "required": ["assignments"],
        },
    },
}


class RoutingError(RuntimeError):
    """Controller failed to produce a usable dispatch call."""


class ControllerContext(Protocol):
    async def complete(
        self, scope: str, messages: Sequence[chat.Message], tools: Sequence[Mapping], tool_choice: str | None = None
    ) -> Completion: ...


@dataclass(frozen=True)
class Assignment:
    robot: str
    instruction: str


@dataclass(frozen=True)
class RoutingDecision:
    assignments: tuple[Assignment, ...]
    rationale: str


@lru_cache(maxsize=1)
def _system_prompt() -> str:
    template = resources.files("teamsim.fixtures").joinpath("prompts/controller_system.txt").read_text()
    return template.format(roster=", ".join(ROSTER))


def mentioned_robots(text: str) -> list[str]:
    lowered = text.lower()
    return [name for name in ROSTER if re.search(rf"\b{name.lower()}\b", lowered)]


class Dispatcher:
    def __init__(self, history_cap: int = HISTORY_CAP):
        self.history: list[chat.Message] = []
        self.history_cap = history_cap

    async def route(self, utterance: str, ctx: ControllerContext) -> RoutingDecision:
        messages = [chat.system(_system_prompt()), *self.history, chat.user(utterance)]
        decision = None
        for _ in range(2):
            completion = await ctx.complete("controller", messages, [DISPATCH_TOOL], tool_choice="dispatch")
            decision = self._parse(completion.message)
            if decision is not None:
                break
            messages.append(chat.system("Respond with a single dispatch function call, nothing else."))
        if decision is None:
            raise RoutingError(f"controller produced no usable dispatch call for {utterance!r}")
        decision = self._enforce_mentions(utterance, decision)
        self.history.append(chat.user(utterance))
        summary = "; ".join(f"{a.robot}: {a.instruction}" for a in decision.assignments)
        self.history.append(chat.assistant(f"dispatch({summary})"))
        del self.history[:-self.history_cap]
        return decision

    def _parse(self, message: chat.Message) -> RoutingDecision | None:
        for call in message.tool_calls:
            if call.name != "dispatch" or call.arguments is None:
                continue
            raw = call.arguments.get("assignments")
            if not isinstance(raw, list):
                continue
            assignments = []
            seen = set()
            for item in raw:
                if not isinstance(item, Mapping):
                    continue
                robot, instruction = item.get("robot"), item.get("instruction")
                if robot in ROSTER and isinstance(instruction, str) and instruction and robot not in seen:
                    seen.add(robot)
                    assignments.append(Assignment(robot, instruction))
            rationale = call.arguments.get("rationale")
            return RoutingDecision(tuple(assignments), rationale if isinstance(rationale, str) else "")
        return None

    def _enforce_mentions(self, utterance: str, decision: RoutingDecision) -> RoutingDecision:
        assigned = {a.robot for a in decision.assignments}
        extra = [Assignment(name, utterance) for name in mentioned_robots(utterance) if name not in assigned]
        # An empty decision stands: the session records it and starts no
        # turns.  Guessing a recipient would move robots nobody addressed.
        return RoutingDecision(decision.assignments + tuple(extra), decision.rationale)

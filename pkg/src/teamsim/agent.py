"""Per-robot conversation core: briefing, tool loop, shared observations.

Each robot keeps its own chat history.  A turn is: flush buffered
observations, append the instruction, then alternate completions and
function execution until the model answers in plain text or the step
budget runs out.  Only the first function call in a reply is executed;
extras get a skip note as their tool result so the assistant/tool
message pairing required by the protocol stays intact.  Peer activity
and world changes arriving between completions are buffered and flushed
as one system message for the same reason.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Mapping, Protocol, Sequence

from . import chat
from .backend import Completion
from .world import AGENT_COLORS, ROSTER, WorldState, describe

MAX_TOOL_ITERATIONS = 10
HISTORY_CAP = 200

SKIPPED_EXTRA_CALL = "Not executed: only one function call is handled per reply."
ABORT_FEEDBACK = "Aborted by the user."
BUDGET_NOTE = "I had to stop; that took too many steps."

AGENT_TRAITS = {
    "Jupiter": "You are strong and dependable, and a little proud of how much you can lift.",
    "Pluto": "You can fly, you are quick, and you like to hover while you talk.",
    "Neptune": "You are careful and precise, and you double-check what you are told.",
}


class TurnAborted(Exception):
    """Raised into a turn when the operator hits the stop button."""


class AgentContext(Protocol):
    """Session-side services a turn needs."""

    async def complete(self, scope: str, messages: Sequence[chat.Message], tools: Sequence[Mapping]) -> Completion: ...

    async def act(self, agent: str, name: str, arguments: Mapping[str, object]) -> tuple[str, bool]: ...

    def tools_for(self, agent: str) -> list[dict]: ...


@dataclass(frozen=True)
class AgentReply:
    text: str
    clarification: bool
    executed_calls: int


@lru_cache(maxsize=1)
def _template() -> str:
    return resources.files("teamsim.fixtures").joinpath("prompts/agent_system.txt").read_text()


def build_system_prompt(name: str, world: WorldState, language: str) -> str:
    peers = [n for n in ROSTER if n != name]
    peers_text = " and ".join(f"{p} (the {AGENT_COLORS[p]} robot)" for p in peers)
    return _template().format(
        name=name,
        color=AGENT_COLORS[name],
        trait=AGENT_TRAITS[name],
        peers=peers_text,
        language=language,
        world_description=describe(world, viewpoint=name),
    )


class AgentCore:
    def __init__(
        self,
        name: str,
        world: WorldState,
        language: str = "English",
        history_cap: int = HISTORY_CAP,
        max_tool_iterations: int = MAX_TOOL_ITERATIONS,
    ):
        self.name = name
        self.language = language
        self.history_cap = history_cap
        self.max_tool_iterations = max_tool_iterations
        self.history: list[chat.Message] = [chat.system(build_system_prompt(name, world, language))]
        self._pending: list[str] = []

    # -- observations -------------------------------------------------------

    def push_world_update(self, line: str) -> None:
        """Buffer one observation sentence; duplicates collapse."""
        if line not in self._pending:
            self._pending.append(line)

    def receive_peer_log(self, actor: str, line: str) -> None:
        if actor == self.name:
            return
        self.push_world_update(line)

    def _flush(self) -> None:
        if self._pending:
            self.history.append(chat.system("World update: " + " ".join(self._pending)))
            self._pending.clear()

    # -- turns --------------------------------------------------------------

    async def handle_instruction(self, text: str, ctx: AgentContext) -> AgentReply:
        self._flush()
        self.history.append(chat.user(text))
        attempts = 0
        executed = 0
        while True:
            self._flush()
            completion = await ctx.complete(self.name, list(self.history), ctx.tools_for(self.name))
            message = completion.message
            if not message.tool_calls:
                reply = message.content or ""
                self.history.append(chat.assistant(reply))
                self._trim()
                clarification = executed == 0 and reply.rstrip().endswith("?")
                return AgentReply(text=reply, clarification=clarification, executed_calls=executed)
            self.history.append(message)
            call, extras = message.tool_calls[0], message.tool_calls[1:]
            if attempts >= self.max_tool_iterations:
                self.history.append(chat.tool_result(call.id, call.name, "Step budget exhausted."))
                self._note_extras(extras)
                self.history.append(chat.assistant(BUDGET_NOTE))
                self._trim()
                return AgentReply(text=BUDGET_NOTE, clarification=False, executed_calls=executed)
            attempts += 1
            try:
                feedback, ok = await ctx.act(self.name, call.name, call.arguments or {})
            except TurnAborted:
                self.history.append(chat.tool_result(call.id, call.name, ABORT_FEEDBACK))
                self._note_extras(extras)
                self._trim()
                raise
            if ok:
                executed += 1
            self.history.append(chat.tool_result(call.id, call.name, feedback))
            self._note_extras(extras)

    def _note_extras(self, extras: Sequence[chat.ToolCall]) -> None:
        for call in extras:
            self.history.append(chat.tool_result(call.id, call.name, SKIPPED_EXTRA_CALL))

    def _trim(self) -> None:
        # Drop oldest exchanges but never the briefing, and never split an
        # assistant message from its tool results.
        while len(self.history) > self.history_cap:
            victim = self.history[1]
            end = 2
            if victim.role == "assistant" and victim.tool_calls:
                while end < len(self.history) and self.history[end].role == "tool":
                    end += 1
            del self.history[1:end]

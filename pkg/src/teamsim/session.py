"""Live session: one task, three robot conversations, a routing controller
and the world, all driven by a deterministic virtual-time loop.

The session owns the only mutable references: the current world and the
event log.  Robot turns run as loop tasks; everything they do to the
world goes through ``_act`` which validates, executes, waits out motion
and emits events.  The operator can speak, abort and switch tasks at any
point; an abort bumps an epoch counter that in-flight turns check, so no
stale turn can touch the world afterwards.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence
import time

from . import actions, chat, tasks as task_catalogue, world as W
from .agent import AgentCore, AgentReply, TurnAborted
from .backend import Backend, BackendError, Completion, CompletionParams
from .dispatcher import Assignment, Dispatcher, RoutingDecision, RoutingError, mentioned_robots
from .events import EventLog, SessionEvent
from .simloop import SimFuture, SimLoop, SimTask
from .world import ROSTER, MotionOutcome, WorldConfig, WorldState


class SessionError(RuntimeError):
    pass


@dataclass(frozen=True)
class SessionConfig:
    model: str = "gpt-4-0613"
    temperature: float = 0.2
    language: str = "English"
    tick_s: float = 0.1
    door_open_s: float = 6.0
    max_tool_iterations: int = 10
    history_cap: int = 200


class Session:
    def __init__(
        self,
        backend: Backend,
        config: SessionConfig | None = None,
        log_path: Path | None = None,
        wall_clock: Callable[[], float] = time.time,
    ):
        self.backend = backend
        self.backend.probe()
        self.config = config or SessionConfig()
        self.loop = SimLoop()
        self.log = EventLog(log_path, clock=wall_clock)
        self.task: task_catalogue.TaskSpec | None = None
        self.world: WorldState | None = None
        self.agents: dict[str, AgentCore] = {}
        self.dispatcher: Dispatcher | None = None
        self._motion_waiters: dict[str, SimFuture] = {}
        self._pending_instruction: dict[str, str] = {}
        self._turn_tasks: dict[str, SimTask] = {}
        self._routing_tasks: list[SimTask] = []
        self._abort_epoch = 0
        self._turn_epoch: dict[str, int] = {}
        self._goal_announced = False
        self._tick_task: SimTask | None = None
        self._executor: ThreadPoolExecutor | None = None
        self._ctx = _Context(self)

    # -- lifecycle -----------------------------------------------------------

    def select_task(self, task_id: int) -> None:
        task = task_catalogue.get_task(task_id)
        if self.task is not None and not self.idle():
            self.abort()
        self._reset_turns()
        self.task = task
        self.world = W.spawn_task_world(task, WorldConfig(door_open_s=self.config.door_open_s))
        self.agents = {
            name: AgentCore(
                name,
                self.world,
                language=self.config.language,
                history_cap=self.config.history_cap,
                max_tool_iterations=self.config.max_tool_iterations,
            )
            for name in ROSTER
        }
        self.dispatcher = Dispatcher()
        self._goal_announced = False
        self._emit("task_selected", None, {"task": task.id, "title": task.title})
        if self._tick_task is None:
            self._tick_task = self.loop.create_task(self._tick_forever())

    def close(self) -> None:
        self._reset_turns()
        if self._tick_task is not None:
            self._tick_task.cancel()
            self._tick_task = None
        self.log.close()
        if self._executor is not None:
            self._executor.shutdown(wait=False)

    # -- operator inputs -----------------------------------------------------

    def submit_utterance(self, text: str) -> None:
        if self.task is None:
            raise SessionError("no task selected")
        if not text.strip():
            self._emit("error", None, {"where": "input", "text": "Empty utterance rejected."})
            return
        # transcription_confidence stays null until a speech front-end fills it
        self._emit("user_utterance", None, {"text": text, "transcription_confidence": None})
        task = self.loop.create_task(self._route_and_deliver(text))
        self._routing_tasks.append(task)

    def abort(self) -> None:
        self._abort_epoch += 1
        self._pending_instruction.clear()
        if self.world is not None:
            self.world = W.clear_all_motion(self.world)
        for name, waiter in list(self._motion_waiters.items()):
            if not waiter.done():
                waiter.set_result(MotionOutcome("aborted", f"{name} stopped."))
        self._motion_waiters.clear()
        self._emit("abort", None, {})

    def _reset_turns(self) -> None:
        # Conversation state drops silently; select_task already emitted an
        # abort event if anything was in flight.
        self._abort_epoch += 1
        self._pending_instruction.clear()
        for waiter in self._motion_waiters.values():
            if not waiter.done():
                waiter.set_result(MotionOutcome("aborted", "task changed"))
        self._motion_waiters.clear()
        for turn in self._turn_tasks.values():
            if not turn.done():
                turn.cancel()
        self._turn_tasks.clear()
        for routing in self._routing_tasks:
            if not routing.done():
                routing.cancel()
        self._routing_tasks.clear()

    # -- the clock -----------------------------------------------------------

    async def _tick_forever(self) -> None:
        while True:
            await self.loop.sleep(self.config.tick_s)
            if self.world is None:
                continue
            old = self.world
            new = W.step(old, self.config.tick_s)
            self.world = new
            for name in ROSTER:
                before, after = old.agents[name], new.agents[name]
                if before.motion is not None and after.motion is None and after.last_motion is not None:
                    waiter = self._motion_waiters.pop(name, None)
                    if waiter is not None and not waiter.done():
                        waiter.set_result(after.last_motion)
            for line in W.deltas(old, new):
                self._emit("world_change", None, {"text": line})
                for core in self.agents.values():
                    core.push_world_update(line)
            if self.task is not None and not self._goal_announced and task_catalogue.goal_satisfied(self.task, new):
                self._goal_announced = True
                self._emit("goal_reached", None, {"task": self.task.id, "title": self.task.title})

    # -- routing and turns ---------------------------------------------------

    async def _route_and_deliver(self, text: str) -> None:
        assert self.dispatcher is not None
        epoch = self._abort_epoch
        try:
            decision = await self.dispatcher.route(text, self._ctx)
            fallback = False
        except RoutingError as exc:
            self._emit("error", None, {"where": "routing", "text": str(exc)})
            named = mentioned_robots(text)
            decision = RoutingDecision(tuple(Assignment(n, text) for n in named), "mention fallback")
            fallback = True
        except BackendError as exc:
            self._emit("error", None, {"where": "controller backend", "text": str(exc)})
            return
        if self._abort_epoch != epoch:
            return  # aborted while the controller was still thinking
        payload = {
            "recipients": [a.robot for a in decision.assignments],
            "assignments": [{"robot": a.robot, "instruction": a.instruction} for a in decision.assignments],
            "rationale": decision.rationale,
            "fallback": fallback,
        }
        if not decision.assignments:
            payload["note"] = "No robots addressed; nothing dispatched."
        self._emit("routing", None, payload)
        ordered = sorted(decision.assignments, key=lambda a: ROSTER.index(a.robot))
        for assignment in ordered:
            self._deliver(assignment.robot, assignment.instruction)

    def _deliver(self, robot: str, instruction: str) -> None:
        # Depth-one mailbox: a newer instruction replaces an unstarted one.
        self._pending_instruction[robot] = instruction
        if robot not in self._turn_tasks or self._turn_tasks[robot].done():
            self._turn_tasks[robot] = self.loop.create_task(self._run_turns(robot))

    async def _run_turns(self, robot: str) -> None:
        while robot in self._pending_instruction:
            instruction = self._pending_instruction.pop(robot)
            self._turn_epoch[robot] = self._abort_epoch
            core = self.agents[robot]
            try:
                reply: AgentReply = await core.handle_instruction(instruction, self._ctx)
            except TurnAborted:
                # An instruction delivered after the abort is still owed a turn.
                continue
            except BackendError as exc:
                self._emit("error", robot, {"where": "backend", "text": str(exc)})
                continue
            self._emit(
                "agent_reply",
                robot,
                {"text": reply.text, "clarification": reply.clarification, "executed_calls": reply.executed_calls},
            )

    # -- services used by turns ---------------------------------------------

    async def _complete(self, scope: str, messages: Sequence[chat.Message], tools: Sequence[Mapping], tool_choice: str | None = None) -> Completion:
        params = CompletionParams(self.config.model, self.config.temperature, tool_choice)
        if self.backend.is_blocking:
            if self._executor is None:
                self._executor = ThreadPoolExecutor(max_workers=4)
            future = self._executor.submit(self.backend.complete, scope, list(messages), list(tools), params)
            while not future.done():
                await self.loop.sleep(0.05)
            return future.result()
        completion = self.backend.complete(scope, list(messages), list(tools), params)
        if completion.latency_s > 0:
            await self.loop.sleep(completion.latency_s)
        return completion

    async def _act(self, agent: str, name: str, arguments: Mapping[str, object]) -> tuple[str, bool]:
        if self.world is None:
            raise SessionError("no task selected")
        # Guard before touching the world: an abort during the completion
        # that produced this call must suppress the execute entirely.
        epoch = self._turn_epoch.get(agent, self._abort_epoch)
        if self._abort_epoch != epoch:
            raise TurnAborted()
        outcome = actions.execute(self.world, agent, name, arguments)
        call_payload = {"function": name, "arguments": dict(arguments)}
        if not outcome.ok:
            self._emit("tool_rejected", agent, call_payload | {"feedback": outcome.feedback})
            return outcome.feedback, False
        self.world = outcome.world
        if outcome.motion_started:
            waiter = SimFuture()
            self._motion_waiters[agent] = waiter
            finished: MotionOutcome = await waiter
            if self._abort_epoch != epoch or finished.kind == "aborted":
                raise TurnAborted()
            self._emit("tool_executed", agent, call_payload | {"feedback": finished.text, "outcome": finished.kind})
            self._fan_out(agent, finished.text)
            return finished.text, finished.kind == "arrived"
        if self._abort_epoch != epoch:
            raise TurnAborted()
        self._emit("tool_executed", agent, call_payload | {"feedback": outcome.feedback, "outcome": "done"})
        self._fan_out(agent, outcome.feedback)
        return outcome.feedback, True

    def _fan_out(self, actor: str, line: str) -> None:
        for core in self.agents.values():
            core.receive_peer_log(actor, line)

    def _tools_for(self, agent: str) -> list[dict]:
        assert self.world is not None
        return actions.registry_for(self.world, agent)

    def _emit(self, kind: str, agent: str | None, payload: Mapping[str, object]) -> SessionEvent:
        return self.log.append(self.loop.now, kind, agent, payload)

    # -- headless driving ----------------------------------------------------

    def idle(self) -> bool:
        return (
            not self._pending_instruction
            and not self._motion_waiters
            and all(t.done() for t in self._turn_tasks.values())
            and all(t.done() for t in self._routing_tasks)
        )

    def run_until_idle(self, max_time: float = 600.0) -> bool:
        return self.loop.run_until(self.idle, max_time=max_time)

    def run_until_goal(self, max_time: float = 120.0) -> bool:
        return self.loop.run_until(lambda: self._goal_announced, max_time=max_time)

    @property
    def goal_reached(self) -> bool:
        return self._goal_announced

    # -- snapshots -----------------------------------------------------------

    def world_snapshot(self) -> dict:
        catalogue = [{"id": t.id, "title": t.title, "description": t.description} for t in task_catalogue.list_tasks()]
        if self.world is None:
            return {"task": None, "tasks": catalogue, "clock": 0.0, "goal_reached": False,
                    "map": None, "agents": [], "entities": [], "doors": []}
        world = self.world
        agents = []
        for name in ROSTER:
            state = world.agents[name]
            agents.append(
                {
                    "name": name,
                    "color": state.profile.color,
                    "x": round(state.position.x, 3),
                    "y": round(state.position.y, 3),
                    "region": state.position.region,
                    "holding": state.holding,
                    "moving": state.motion is not None,
                }
            )
        entities = []
        for entity in sorted(world.entities.values(), key=lambda e: e.id):
            pos = W.entity_position(world, entity.id)
            entities.append(
                {
                    "id": entity.id,
                    "kind": entity.kind,
                    "name": entity.name,
                    "x": None if pos is None else round(pos.x, 3),
                    "y": None if pos is None else round(pos.y, 3),
                    "region": None if pos is None else pos.region,
                    "held_by": entity.held_by,
                    "inside": entity.inside,
                    "flipped": entity.flipped,
                    "broken": entity.broken,
                    "disposed": entity.disposed,
                }
            )
        doors = []
        for door_id in sorted(world.doors):
            door = world.doors[door_id]
            edge = world.map.edge_by_id(door_id)
            doors.append(
                {
                    "id": door.id,
                    "name": door.name,
                    "x": edge.at[0],
                    "y": edge.at[1],
                    "open": door.open,
                    "locked": door.locked_by is not None,
                    "timer_s": None if door.timer_remaining is None else round(door.timer_remaining, 3),
                }
            )
        map_info = {
            "regions": [
                {"id": r.id, "name": r.name, "color": r.color, "polygon": [list(p) for p in r.polygon]}
                for r in world.map.regions.values()
            ],
            "user": list(world.map.user_position),
        }
        return {
            "task": {"id": self.task.id, "title": self.task.title},
            "tasks": catalogue,
            "clock": round(world.clock, 3),
            "goal_reached": self._goal_announced,
            "map": map_info,
            "agents": agents,
            "entities": entities,
            "doors": doors,
        }


class _Context:
    """Adapter handing agent and controller turns their session services."""

    def __init__(self, session: Session):
        self._session = session

    async def complete(self, scope, messages, tools, tool_choice=None):
        return await self._session._complete(scope, messages, tools, tool_choice)

    async def act(self, agent, name, arguments):
        return await self._session._act(agent, name, arguments)

    def tools_for(self, agent):
        return self._session._tools_for(agent)


# ---------------------------------------------------------------------------
# headless task check


def run_check(script, backend_factory: Callable[[], Backend], config: SessionConfig | None = None,
              log_dir: Path | None = None, report: Callable[[str], None] = print) -> bool:
    """Run every scripted dialogue headlessly and verify each task's goal.

    Returns True when all tasks reach their goal.  Virtual time only; a
    full seven-task run takes well under a second of wall time.
    """
    all_ok = True
    for task_id in sorted(script.dialogue):
        lines = script.dialogue[task_id]
        log_path = None
        if log_dir is not None:
            log_dir.mkdir(parents=True, exist_ok=True)
            log_path = log_dir / f"check_task_{task_id}.jsonl"
        session = Session(backend_factory(), config=config, log_path=log_path)
        try:
            session.select_task(task_id)
            for line in lines:
                session.submit_utterance(line)
                if not session.run_until_idle(max_time=900.0):
                    break
            reached = session.goal_reached or session.run_until_goal(max_time=120.0)
            title = session.task.title
            if reached:
                report(f"task {task_id}: goal reached at t={session.loop.now:.1f}s - {title}")
            else:
                unmet = task_catalogue.unmet_conditions(session.task, session.world)
                report(f"task {task_id}: FAILED - {title}; unmet: {'; '.join(unmet)}")
                all_ok = False
        finally:
            session.close()
    return all_ok

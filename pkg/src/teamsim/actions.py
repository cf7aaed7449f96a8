"""Callable robot actions: schema generation, validation, execution.

The registry is rebuilt per agent and task so each robot is only offered
arguments it could ever satisfy (no heavy objects for weak robots, no
flying-only regions for ground robots).  Validation failures return a
feedback sentence the agent can read and correct; execution re-checks
every precondition and leaves the world untouched on failure.
"""

from __future__ import annotations

import difflib
import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Mapping

from . import world as W
from .world import WorldState


@dataclass(frozen=True)
class FunctionSpec:
    name: str
    description: str
    parameter: str
    parameter_description: str


@lru_cache(maxsize=1)
def function_specs() -> tuple[FunctionSpec, ...]:
    raw = json.loads(resources.files("teamsim.fixtures").joinpath("functions.json").read_text())
    return tuple(
        FunctionSpec(f["name"], f["description"], f["parameter"], f["parameter_description"])
        for f in raw["functions"]
    )


def _spec(name: str) -> FunctionSpec | None:
    for spec in function_specs():
        if spec.name == name:
            return spec
    return None


def eligible_values(world: WorldState, agent: str) -> dict[str, list[str]]:
    """Per-function argument lists for one agent in the current task.

    Lists depend on the task's entity subset and the agent's capabilities
    only, never on transient state, so the schema stays stable across a
    session.
    """
    profile = world.agent(agent).profile
    entities = sorted(world.entities.values(), key=lambda e: e.id)

    destinations: list[str] = []
    for region in world.map.regions.values():
        if region.small_only and profile.large:
            continue
        if region.id == "elevated_area" and not profile.flying:
            continue
        destinations.append(region.name)
    for edge in world.map.edges:
        if edge.id in world.doors:
            destinations.append(edge.name)
    destinations.extend(e.name for e in entities)
    destinations.append("user")

    values: dict[str, list[str]] = {"move_to": destinations}
    values["pick_up"] = [
        e.name for e in entities if e.movable and (e.weight != "heavy" or profile.heavy_capable)
    ]
    if values["pick_up"]:
        values["put_down"] = ["ground"] + [e.name for e in entities if e.surface]
    else:
        values["put_down"] = []
    values["open_door"] = [world.map.edge_by_id(d).name for d in world.doors]
    values["step_on_plate"] = [e.name for e in entities if e.opens is not None]
    values["throw_away"] = [e.name for e in entities if e.container]
    values["flip"] = [e.name for e in entities if agent in e.required_flippers]
    return values


def registry_for(world: WorldState, agent: str) -> list[dict]:
    """Chat-completions tool schemas for this agent, empty functions elided."""
    values = eligible_values(world, agent)
    tools = []
    for spec in function_specs():
        vals = values.get(spec.name, [])
        if not vals:
            continue
        tools.append(
            {
                "type": "function",
                "function": {
                    "name": spec.name,
                    "description": spec.description,
                    "parameters": {
                        "type": "object",
                        "properties": {
                            spec.parameter: {
                                "type": "string",
                                "description": spec.parameter_description,
                                "enum": vals,
                            }
                        },
                        "required": [spec.parameter],
                    },
                },
            }
        )
    return tools


# ---------------------------------------------------------------------------
# validation


def _entity_by_name(world: WorldState, name: str):
    for entity in sorted(world.entities.values(), key=lambda e: e.id):
        if entity.name == name:
            return entity
    return None


def _door_by_name(world: WorldState, name: str):
    for door in world.doors.values():
        if door.name == name:
            return door
    return None


def _too_far(world: WorldState, agent: str, name: str) -> str:
    return f"The {name} is too far away. {agent} must move closer first."


def validate(world: WorldState, agent: str, name: str, arguments: Mapping[str, object]) -> tuple[bool, str]:
    """Check one function call; returns (ok, rejection feedback)."""
    spec = _spec(name)
    if spec is None or not eligible_values(world, agent).get(name):
        return False, f"Unknown function '{name}'."
    value = arguments.get(spec.parameter)
    if not isinstance(value, str):
        return False, f"Missing required parameter '{spec.parameter}' for {name}."
    eligible = eligible_values(world, agent)[name]
    if value not in eligible:
        message = f"'{value}' is not a valid choice for {spec.parameter}. Eligible values: {', '.join(eligible)}."
        close = difflib.get_close_matches(value, eligible, n=1, cutoff=0.6)
        if close:
            message += f" Did you mean '{close[0]}'?"
        return False, message
    return _check_preconditions(world, agent, name, value)


def _check_preconditions(world: WorldState, agent: str, name: str, value: str) -> tuple[bool, str]:
    state = world.agent(agent)
    if name == "move_to":
        if W.resolve_location(world, value) is None:
            return False, f"The {value} cannot be reached right now."
        return True, ""
    if name == "pick_up":
        entity = _entity_by_name(world, value)
        if state.holding is not None:
            held = world.entity(state.holding).name
            return False, f"{agent} is already holding the {held}. Put it down first."
        if entity.position is None:
            return False, f"The {value} is not somewhere {agent} can pick it up."
        if not W.within_reach(world, agent, entity.id):
            return False, _too_far(world, agent, value)
        return True, ""
    if name == "put_down":
        if state.holding is None:
            return False, f"{agent} is not holding anything."
        if value != "ground":
            surface = _entity_by_name(world, value)
            if not W.within_reach(world, agent, surface.id):
                return False, _too_far(world, agent, value)
        return True, ""
    if name == "open_door":
        door = _door_by_name(world, value)
        pos = state.position
        if W.dist((pos.x, pos.y), W.door_position(world, door.id)) > state.profile.reach_radius + 1e-9:
            return False, _too_far(world, agent, value)
        if door.open:
            return False, f"The {door.name} is already open."
        if door.locked_by is not None:
            held = world.entity(state.holding) if state.holding else None
            if held is None or held.kind != "key" or held.color != door.locked_by:
                return False, f"The {door.name} is locked. {agent} needs the {door.locked_by} key in hand."
        return True, ""
    if name == "step_on_plate":
        entity = _entity_by_name(world, value)
        if not W.within_reach(world, agent, entity.id):
            return False, _too_far(world, agent, value)
        return True, ""
    if name == "throw_away":
        # a throw, not a placement: no distance requirement on the bin
        if state.holding is None:
            return False, f"{agent} is not holding anything."
        return True, ""
    if name == "flip":
        entity = _entity_by_name(world, value)
        if entity.flipped:
            return False, f"The {value} is already flipped."
        if state.holding is not None:
            return False, f"{agent} needs both hands free to flip the {value}."
        if not W.within_reach(world, agent, entity.id):
            return False, _too_far(world, agent, value)
        return True, ""
    raise AssertionError(f"unhandled function {name}")


# ---------------------------------------------------------------------------
# execution


@dataclass(frozen=True)
class ActionOutcome:
    world: WorldState
    ok: bool
    feedback: str
    motion_started: bool = False


def execute(world: WorldState, agent: str, name: str, arguments: Mapping[str, object]) -> ActionOutcome:
    """Apply one validated call to the world.

    Preconditions are re-checked here: between validation and execution
    another agent may have taken the object or the door may have closed.
    """
    ok, feedback = validate(world, agent, name, arguments)
    if not ok:
        return ActionOutcome(world, False, feedback)
    value = arguments[_spec(name).parameter]
    assert isinstance(value, str)

    if name == "move_to":
        target = W.resolve_location(world, value)
        new_world, started, err = W.start_motion(world, agent, target)
        if not started:
            return ActionOutcome(world, False, err)
        return ActionOutcome(new_world, True, "", motion_started=True)

    state = world.agent(agent)
    if name == "pick_up":
        entity = _entity_by_name(world, value)
        entities = dict(world.entities)
        entities[entity.id] = W.replace_entity(entity, position=None, held_by=agent)
        agents = dict(world.agents)
        agents[agent] = W.replace_agent(state, holding=entity.id)
        feedback = f"{agent} picked up the {entity.name}."
        return ActionOutcome(W.replace_world(world, entities=entities, agents=agents), True, feedback)

    if name == "put_down":
        entity = world.entity(state.holding)
        entities = dict(world.entities)
        agents = dict(world.agents)
        agents[agent] = W.replace_agent(state, holding=None)
        if value == "ground":
            drop = W.Position(state.position.x, state.position.y, state.position.region)
            entities[entity.id] = W.replace_entity(entity, position=drop, held_by=None)
            feedback = f"{agent} put down the {entity.name} on the ground."
        else:
            surface = _entity_by_name(world, value)
            entities[entity.id] = W.replace_entity(entity, position=surface.position, held_by=None)
            feedback = f"{agent} put the {entity.name} on the {surface.name}."
        return ActionOutcome(W.replace_world(world, entities=entities, agents=agents), True, feedback)

    if name == "open_door":
        door = _door_by_name(world, value)
        doors = dict(world.doors)
        if door.timed:
            doors[door.id] = W.replace_door(door, open=True, timer_remaining=world.config.door_open_s)
        else:
            doors[door.id] = W.replace_door(door, open=True, locked_by=None, timer_remaining=None)
        if door.locked_by is not None:
            key = world.entity(state.holding)
            feedback = f"{agent} opened the {door.name} with the {key.name}."
        else:
            feedback = f"{agent} opened the {door.name}."
        return ActionOutcome(W.replace_world(world, doors=doors), True, feedback)

    if name == "step_on_plate":
        plate = _entity_by_name(world, value)
        doors = dict(world.doors)
        feedback = f"{agent} stepped on the {plate.name}."
        if plate.opens is not None and plate.opens in doors:
            door = doors[plate.opens]
            doors[plate.opens] = W.replace_door(door, open=True, timer_remaining=world.config.door_open_s if door.timed else None)
            feedback += f" The {door.name} is open."
        pressers = world.plate_pressers | {agent}
        return ActionOutcome(W.replace_world(world, doors=doors, plate_pressers=pressers), True, feedback)

    if name == "throw_away":
        entity = world.entity(state.holding)
        bin_entity = _entity_by_name(world, value)
        entities = dict(world.entities)
        entities[entity.id] = W.replace_entity(entity, held_by=None, inside=bin_entity.id, disposed=True)
        agents = dict(world.agents)
        agents[agent] = W.replace_agent(state, holding=None)
        feedback = f"{agent} threw the {entity.name} into the {bin_entity.name}."
        return ActionOutcome(W.replace_world(world, entities=entities, agents=agents), True, feedback)

    if name == "flip":
        entity = _entity_by_name(world, value)
        tokens = dict(world.flip_ready.get(entity.id, {}))
        tokens[agent] = world.clock
        ready = [
            n
            for n in entity.required_flippers
            if n in tokens
            and world.clock - tokens[n] <= world.config.flip_sync_window_s + 1e-9
            and W.within_reach(world, n, entity.id)
        ]
        flip_ready = dict(world.flip_ready)
        if set(ready) == set(entity.required_flippers):
            entities = dict(world.entities)
            for other in sorted(world.entities.values(), key=lambda e: e.id):
                if other.id != entity.id and other.movable and W.on_surface(world, other.id, entity.id):
                    entities[other.id] = W.replace_entity(other, broken=True)
            entities[entity.id] = W.replace_entity(entities.get(entity.id, entity), flipped=True)
            flip_ready.pop(entity.id, None)
            names = [n for n in W.ROSTER if n in entity.required_flippers]
            feedback = f"{' and '.join(names)} flipped the {entity.name} together."
            return ActionOutcome(W.replace_world(world, entities=entities, flip_ready=flip_ready), True, feedback)
        flip_ready[entity.id] = tokens
        missing = [n for n in W.ROSTER if n in entity.required_flippers and n not in ready]
        feedback = f"{agent} is ready to flip the {entity.name}. Waiting for: {', '.join(missing)}."
        return ActionOutcome(W.replace_world(world, flip_ready=flip_ready), True, feedback)

    raise AssertionError(f"unhandled function {name}")

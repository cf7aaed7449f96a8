"""Task catalogue: seven scripted scenarios with data-driven goal predicates."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Mapping

from .world import NotFound, ROSTER, WorldState, dist, entity_position


@dataclass(frozen=True)
class TaskSpec:
    id: int
    title: str
    description: str
    entity_ids: tuple[str, ...]
    door_ids: tuple[str, ...]
    requires_cooperation: bool
    goal: tuple[Mapping[str, str], ...]


@lru_cache(maxsize=1)
def list_tasks() -> tuple[TaskSpec, ...]:
    raw = json.loads(resources.files("teamsim.fixtures").joinpath("tasks.json").read_text())
    tasks = []
    for item in raw["tasks"]:
        tasks.append(
            TaskSpec(
                id=item["id"],
                title=item["title"],
                description=item["description"],
                entity_ids=tuple(item["entities"]),
                door_ids=tuple(item["doors"]),
                requires_cooperation=item["requires_cooperation"],
                goal=tuple(item["goal"]),
            )
        )
    return tuple(tasks)


def get_task(task_id: int) -> TaskSpec:
    for task in list_tasks():
        if task.id == task_id:
            return task
    raise NotFound(f"unknown task id {task_id!r}")


def _near(world: WorldState, a: tuple[float, float], b: tuple[float, float]) -> bool:
    return dist(a, b) <= world.config.goal_radius_m + 1e-9


def _agent_point(world: WorldState, name: str) -> tuple[float, float]:
    pos = world.agent(name).position
    return (pos.x, pos.y)


def _entity_point(world: WorldState, entity_id: str) -> tuple[float, float] | None:
    pos = entity_position(world, entity_id)
    return None if pos is None else (pos.x, pos.y)


def _check(world: WorldState, cond: Mapping[str, str]) -> tuple[bool, str]:
    kind = cond["kind"]
    if kind == "agent_near_entity":
        point = _entity_point(world, cond["entity"])
        ok = point is not None and _near(world, _agent_point(world, cond["agent"]), point)
        return ok, f"{cond['agent']} is next to the {world.entity(cond['entity']).name}"
    if kind == "all_agents_near_entity":
        point = _entity_point(world, cond["entity"])
        ok = point is not None and all(_near(world, _agent_point(world, name), point) for name in ROSTER)
        return ok, f"every robot is next to the {world.entity(cond['entity']).name}"
    if kind == "agent_holding_entity":
        ok = world.agent(cond["agent"]).holding == cond["entity"]
        return ok, f"{cond['agent']} is holding the {world.entity(cond['entity']).name}"
    if kind == "entity_near_entity":
        pa, pb = _entity_point(world, cond["a"]), _entity_point(world, cond["b"])
        ok = pa is not None and pb is not None and _near(world, pa, pb)
        return ok, f"the {world.entity(cond['a']).name} is next to the {world.entity(cond['b']).name}"
    if kind == "entity_on_ground":
        ok = world.entity(cond["entity"]).position is not None
        return ok, f"the {world.entity(cond['entity']).name} is on the ground"
    if kind == "entity_near_user":
        point = _entity_point(world, cond["entity"])
        ok = point is not None and _near(world, point, world.map.user_position)
        return ok, f"the {world.entity(cond['entity']).name} is next to the user"
    if kind == "door_open":
        door = world.doors.get(cond["door"])
        ok = door is not None and door.open
        return ok, f"the {door.name if door else cond['door']} is open"
    if kind == "agent_in_region":
        ok = world.agent(cond["agent"]).position.region == cond["region"]
        return ok, f"{cond['agent']} is in the {world.map.region_name(cond['region'])}"
    if kind == "agent_pressed_plate":
        ok = cond["agent"] in world.plate_pressers
        return ok, f"{cond['agent']} has stepped on the pressure plate"
    if kind == "entity_inside":
        ok = world.entity(cond["entity"]).inside == cond["container"]
        return ok, f"the {world.entity(cond['entity']).name} is inside the {world.entity(cond['container']).name}"
    if kind == "entity_flipped":
        ok = world.entity(cond["entity"]).flipped
        return ok, f"the {world.entity(cond['entity']).name} is flipped"
    if kind == "entity_not_broken":
        ok = not world.entity(cond["entity"]).broken
        return ok, f"the {world.entity(cond['entity']).name} is intact"
    raise ValueError(f"unknown goal condition kind {kind!r}")


def goal_satisfied(task: TaskSpec, world: WorldState) -> bool:
    return all(_check(world, cond)[0] for cond in task.goal)


def unmet_conditions(task: TaskSpec, world: WorldState) -> list[str]:
    unmet = []
    for cond in task.goal:
        ok, text = _check(world, cond)
        if not ok:
            unmet.append(text)
    return unmet

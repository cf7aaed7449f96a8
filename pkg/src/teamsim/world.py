"""Deterministic 2D world engine: scene state, kinematics, doors, description.

World values are immutable; ``step`` and every action effect build a new
``WorldState`` so snapshots can be shared freely and a failed operation
provably changes nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Mapping

from .worldmap import DoorFacts, Edge, WorldMap, load_map, plan_route

if TYPE_CHECKING:
    from .tasks import TaskSpec

ROSTER = ("Jupiter", "Pluto", "Neptune")
AGENT_COLORS = {"Jupiter": "yellow", "Pluto": "red", "Neptune": "blue"}

# Region order used by every rendered listing, so text output is stable.
_REGION_ORDER = ("main_room", "elevated_area", "back_room", "side_room")

_EPS = 1e-9


class NotFound(KeyError):
    """Unknown task, entity or agent identifier."""


@dataclass(frozen=True)
class Position:
    x: float
    y: float
    region: str


@dataclass(frozen=True)
class AgentProfile:
    name: str
    color: str
    locomotion: str  # "ground" | "flying"
    strength: str  # "normal" | "heavy-capable"
    size: str  # "small" | "large"
    speed: float  # m/s
    reach_radius: float  # m

    @property
    def flying(self) -> bool:
        return self.locomotion == "flying"

    @property
    def large(self) -> bool:
        return self.size == "large"

    @property
    def heavy_capable(self) -> bool:
        return self.strength == "heavy-capable"


DEFAULT_PROFILES: Mapping[str, AgentProfile] = {
    "Jupiter": AgentProfile("Jupiter", "yellow", "ground", "heavy-capable", "large", 1.0, 1.0),
    "Pluto": AgentProfile("Pluto", "red", "flying", "normal", "small", 2.5, 1.0),
    "Neptune": AgentProfile("Neptune", "blue", "ground", "normal", "small", 1.5, 1.0),
}


@dataclass(frozen=True)
class WorldConfig:
    door_open_s: float = 6.0
    door_wait_patience_s: float = 10.0
    approach_standoff_m: float = 0.75
    door_hold_m: float = 0.3
    on_surface_radius_m: float = 0.5
    flip_sync_window_s: float = 10.0
    goal_radius_m: float = 1.5


@dataclass(frozen=True)
class Entity:
    id: str
    kind: str
    name: str
    position: Position | None
    held_by: str | None = None
    inside: str | None = None
    destroyed: bool = False
    weight: str = "light"
    movable: bool = False
    surface: bool = False
    container: bool = False
    color: str | None = None
    opens: str | None = None
    required_flippers: tuple[str, ...] = ()
    flipped: bool = False
    broken: bool = False
    disposed: bool = False

    def location_states(self) -> int:
        return sum((self.position is not None, self.held_by is not None, self.inside is not None, self.destroyed))


@dataclass(frozen=True)
class DoorState:
    id: str
    name: str
    color: str | None
    open: bool
    locked_by: str | None
    timer_remaining: float | None
    timed: bool


@dataclass(frozen=True)
class Waypoint:
    point: tuple[float, float]
    edge_id: str | None  # set when reaching this point crosses a door/ledge
    region_after: str


@dataclass(frozen=True)
class Motion:
    target_label: str
    waypoints: tuple[Waypoint, ...]
    index: int = 0
    wait_since: float | None = None


@dataclass(frozen=True)
class MotionOutcome:
    kind: str  # "arrived" | "blocked" | "aborted"
    text: str


@dataclass(frozen=True)
class AgentState:
    profile: AgentProfile
    position: Position
    motion: Motion | None = None
    holding: str | None = None
    last_motion: MotionOutcome | None = None


@dataclass(frozen=True)
class WorldState:
    map: WorldMap
    config: WorldConfig
    entities: Mapping[str, Entity]
    agents: Mapping[str, AgentState]
    doors: Mapping[str, DoorState]
    clock: float = 0.0
    plate_pressers: frozenset[str] = frozenset()
    flip_ready: Mapping[str, Mapping[str, float]] = field(default_factory=dict)

    def agent(self, name: str) -> AgentState:
        try:
            return self.agents[name]
        except KeyError:
            raise NotFound(f"unknown agent {name!r}") from None

    def entity(self, entity_id: str) -> Entity:
        try:
            return self.entities[entity_id]
        except KeyError:
            raise NotFound(f"unknown entity {entity_id!r}") from None


# ---------------------------------------------------------------------------
# construction


def spawn_task_world(task: "TaskSpec", config: WorldConfig | None = None, world_map: WorldMap | None = None) -> WorldState:
    """Fresh world for one task: three agents at the shared start pose plus
    the task's entity subset, clock at zero, doors in their initial state."""
    world_map = world_map or load_map()
    config = config or WorldConfig()
    entities: dict[str, Entity] = {}
    for entity_id in task.entity_ids:
        try:
            placement = world_map.placements[entity_id]
        except KeyError:
            raise NotFound(f"unknown entity {entity_id!r}") from None
        entities[entity_id] = Entity(
            id=placement.id,
            kind=placement.kind,
            name=placement.name,
            position=Position(placement.at[0], placement.at[1], placement.region),
            weight=placement.weight,
            movable=placement.movable,
            surface=placement.surface,
            container=placement.container,
            color=placement.color,
            opens=placement.opens,
            required_flippers=placement.required_flippers,
        )
    doors: dict[str, DoorState] = {}
    for door_id in task.door_ids:
        edge = world_map.edge_by_id(door_id)
        doors[door_id] = DoorState(
            id=edge.id,
            name=edge.name,
            color=edge.color,
            open=False,
            locked_by=edge.locked_by,
            timer_remaining=None,
            timed=edge.timed,
        )
    agents = {}
    for name in ROSTER:
        x, y = world_map.agent_starts[name]
        region = world_map.region_of_point(x, y)
        assert region is not None
        agents[name] = AgentState(profile=DEFAULT_PROFILES[name], position=Position(x, y, region))
    return WorldState(map=world_map, config=config, entities=entities, agents=agents, doors=doors)


# ---------------------------------------------------------------------------
# state update helpers


def replace_entity(entity: Entity, **changes) -> Entity:
    updated = replace(entity, **changes)
    states = updated.location_states()
    if states != 1:
        raise ValueError(f"entity {updated.id} must be in exactly one location state, got {states}")
    return updated


def replace_agent(state: AgentState, **changes) -> AgentState:
    return replace(state, **changes)


def replace_door(door: DoorState, **changes) -> DoorState:
    return replace(door, **changes)


def replace_world(world: WorldState, **changes) -> WorldState:
    return replace(world, **changes)


# ---------------------------------------------------------------------------
# geometry helpers


def dist(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def entity_position(world: WorldState, entity_id: str) -> Position | None:
    """Physical position of an entity; held entities ride their holder."""
    entity = world.entity(entity_id)
    if entity.held_by is not None:
        return world.agent(entity.held_by).position
    if entity.inside is not None:
        return entity_position(world, entity.inside)
    return entity.position


def agent_entity_distance(world: WorldState, agent: str, entity_id: str) -> float | None:
    pos = entity_position(world, entity_id)
    if pos is None:
        return None
    apos = world.agent(agent).position
    return dist((apos.x, apos.y), (pos.x, pos.y))


def within_reach(world: WorldState, agent: str, entity_id: str) -> bool:
    d = agent_entity_distance(world, agent, entity_id)
    return d is not None and d <= world.agent(agent).profile.reach_radius + _EPS


def door_position(world: WorldState, door_id: str) -> tuple[float, float]:
    return world.map.edge_by_id(door_id).at


def on_surface(world: WorldState, item_id: str, surface_id: str) -> bool:
    """Whether a grounded item currently rests on a surface entity."""
    item = world.entity(item_id)
    surface = world.entity(surface_id)
    if item.position is None or surface.position is None:
        return False
    return dist((item.position.x, item.position.y), (surface.position.x, surface.position.y)) <= world.config.on_surface_radius_m + _EPS


def _door_facts(world: WorldState) -> dict[str, DoorFacts]:
    return {door_id: DoorFacts(open=d.open, locked=d.locked_by is not None) for door_id, d in world.doors.items()}


# ---------------------------------------------------------------------------
# movement


@dataclass(frozen=True)
class MoveTarget:
    point: tuple[float, float]
    region: str
    label: str  # rendered with leading article, e.g. "the candle"
    standoff: float


def resolve_location(world: WorldState, name: str) -> MoveTarget | None:
    """Map a canonical location name to a concrete point in the scene."""
    if name == "user":
        ux, uy = world.map.user_position
        region = world.map.region_of_point(ux, uy)
        assert region is not None
        return MoveTarget((ux, uy), region, "the user", world.config.approach_standoff_m)
    for region in world.map.regions.values():
        if region.name == name:
            cx, cy = region.center()
            return MoveTarget((cx, cy), region.id, f"the {name}", 0.0)
    for door in world.doors.values():
        if door.name == name:
            edge = world.map.edge_by_id(door.id)
            # Approach from the agent's current side; region resolved at plan time.
            return MoveTarget(edge.at, edge.between[0], f"the {name}", world.config.door_hold_m)
    for entity in sorted(world.entities.values(), key=lambda e: e.id):
        if entity.name == name:
            pos = entity_position(world, entity.id)
            if pos is None:
                return None
            return MoveTarget((pos.x, pos.y), pos.region, f"the {name}", world.config.approach_standoff_m)
    return None


def start_motion(world: WorldState, agent: str, target: MoveTarget) -> tuple[WorldState, bool, str]:
    """Plan a route and set the agent walking; fails fast when no route exists."""
    state = world.agent(agent)
    goal_region = target.region
    if target.label.startswith("the ") and target.label[4:] in {d.name for d in world.doors.values()}:
        # Door targets: head for the waypoint from whichever side is reachable.
        edge = next(e for e in world.map.edges if e.name == target.label[4:])
        route_a = plan_route(world.map, state.position.region, edge.between[0], flying=state.profile.flying,
                             large=state.profile.large, active_doors=_door_facts(world))
        route_b = plan_route(world.map, state.position.region, edge.between[1], flying=state.profile.flying,
                             large=state.profile.large, active_doors=_door_facts(world))
        if route_a is None and route_b is None:
            return world, False, f"{agent} cannot reach {target.label} from here: the way is blocked."
        if route_b is None or (route_a is not None and len(route_a) <= len(route_b)):
            route, goal_region = route_a, edge.between[0]
        else:
            route, goal_region = route_b, edge.between[1]
    else:
        route = plan_route(
            world.map,
            state.position.region,
            goal_region,
            flying=state.profile.flying,
            large=state.profile.large,
            active_doors=_door_facts(world),
        )
    if route is None:
        return world, False, f"{agent} cannot reach {target.label} from here: the way is blocked."

    waypoints: list[Waypoint] = []
    region = state.position.region
    prev_point = (state.position.x, state.position.y)
    for edge in route:
        region = edge.other_side(region)
        waypoints.append(Waypoint(point=edge.at, edge_id=edge.id, region_after=region))
        prev_point = edge.at
    stop = _pull_back(prev_point, target.point, target.standoff)
    waypoints.append(Waypoint(point=stop, edge_id=None, region_after=goal_region if route else region))
    motion = Motion(target_label=target.label, waypoints=tuple(waypoints))
    agents = dict(world.agents)
    agents[agent] = replace(state, motion=motion, last_motion=None)
    return replace(world, agents=agents), True, ""


def _pull_back(origin: tuple[float, float], target: tuple[float, float], standoff: float) -> tuple[float, float]:
    """Stop point `standoff` metres short of the target along the approach line."""
    if standoff <= 0.0:
        return target
    d = dist(origin, target)
    if d <= standoff:
        return origin
    t = (d - standoff) / d
    return (origin[0] + (target[0] - origin[0]) * t, origin[1] + (target[1] - origin[1]) * t)


def clear_all_motion(world: WorldState, note: str = "stopped") -> WorldState:
    agents = dict(world.agents)
    changed = False
    for name, state in agents.items():
        if state.motion is not None:
            agents[name] = replace(
                state,
                motion=None,
                last_motion=MotionOutcome("aborted", f"{name} {note} at the current position."),
            )
            changed = True
    return replace(world, agents=agents) if changed else world


def _edge_crossable(world: WorldState, edge: Edge) -> bool:
    if edge.kind == "fly":
        return True  # only planned for flyers
    door = world.doors.get(edge.id)
    return door is not None and door.open


def _holding_suffix(world: WorldState, agent: str) -> str:
    holding = world.agent(agent).holding
    if holding is None:
        return ""
    return f" {agent} is holding the {world.entity(holding).name}."


def _advance_agent(world: WorldState, name: str, dt: float) -> tuple[AgentState, MotionOutcome | None]:
    state = world.agent(name)
    motion = state.motion
    assert motion is not None
    budget = state.profile.speed * dt
    pos = (state.position.x, state.position.y)
    region = state.position.region
    index = motion.index
    wait_since = motion.wait_since

    while index < len(motion.waypoints):
        wp = motion.waypoints[index]
        d = dist(pos, wp.point)
        if wp.edge_id is not None:
            edge = world.map.edge_by_id(wp.edge_id)
            if not _edge_crossable(world, edge):
                hold = world.config.door_hold_m
                if d > hold + _EPS:
                    moved = min(budget, d - hold)
                    pos = _toward(pos, wp.point, moved)
                    budget -= moved
                    d -= moved
                if d <= hold + _EPS:
                    # Patience counts from standing at the door, not from setting out.
                    if wait_since is None:
                        wait_since = world.clock
                    if world.clock + dt - wait_since >= world.config.door_wait_patience_s - _EPS:
                        outcome = MotionOutcome(
                            "blocked", f"{name} stopped moving: the way to {motion.target_label} is blocked."
                        )
                        return (
                            replace(state, position=Position(pos[0], pos[1], region), motion=None, last_motion=outcome),
                            outcome,
                        )
                break  # stand at the door until it opens
            wait_since = None
            if d <= budget + _EPS:
                pos = wp.point
                region = wp.region_after
                budget -= d
                index += 1
                continue
            pos = _toward(pos, wp.point, budget)
            budget = 0.0
            break
        # final stop point
        if d <= budget + _EPS:
            pos = wp.point
            region = wp.region_after
            outcome = MotionOutcome("arrived", f"{name} arrived at {motion.target_label}." + _holding_suffix(world, name))
            return (
                replace(state, position=Position(pos[0], pos[1], region), motion=None, last_motion=outcome),
                outcome,
            )
        pos = _toward(pos, wp.point, budget)
        budget = 0.0
        break

    new_motion = replace(motion, index=index, wait_since=wait_since)
    return replace(state, position=Position(pos[0], pos[1], region), motion=new_motion), None


def _toward(a: tuple[float, float], b: tuple[float, float], amount: float) -> tuple[float, float]:
    d = dist(a, b)
    if d <= _EPS:
        return b
    t = min(1.0, amount / d)
    return (a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t)


def step(world: WorldState, dt: float) -> WorldState:
    """Advance the simulation one tick: motion, then door timers, then clock.

    Door states are frozen while agents move, so a door that expires this
    tick still lets an agent through; it closes at the tick boundary.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    agents = dict(world.agents)
    for name in ROSTER:
        if name in agents and agents[name].motion is not None:
            new_state, _ = _advance_agent(world, name, dt)
            agents[name] = new_state
    doors = dict(world.doors)
    for door_id, door in doors.items():
        if door.timer_remaining is not None:
            remaining = door.timer_remaining - dt
            if remaining <= _EPS:
                doors[door_id] = replace(door, open=False, timer_remaining=None)
            else:
                doors[door_id] = replace(door, timer_remaining=remaining)
    flip_ready = {
        entity_id: kept
        for entity_id, tokens in world.flip_ready.items()
        if (kept := {a: t for a, t in tokens.items() if world.clock + dt - t <= world.config.flip_sync_window_s})
    }
    return replace(world, agents=agents, doors=doors, flip_ready=flip_ready, clock=world.clock + dt)


def deltas(old: WorldState, new: WorldState) -> list[str]:
    """Observation sentences for changes produced by ``step``: doors that
    opened or closed on their own and agents that changed rooms."""
    lines: list[str] = []
    for door_id in sorted(new.doors):
        was, now = old.doors[door_id].open, new.doors[door_id].open
        if was != now:
            lines.append(f"The {new.doors[door_id].name} is now {'open' if now else 'closed'}.")
    for name in ROSTER:
        if name in old.agents and name in new.agents:
            before = old.agents[name].position.region
            after = new.agents[name].position.region
            if before != after:
                lines.append(f"{name} is now in the {new.map.region_name(after)}.")
    return lines


# ---------------------------------------------------------------------------
# description


def _article(name: str) -> str:
    return "an" if name[:1].lower() in "aeiou" else "a"


def _item_phrase(world: WorldState, entity: Entity) -> str:
    adjectives = []
    if entity.broken:
        adjectives.append("broken")
    if entity.flipped:
        adjectives.append("flipped")
    name = " ".join(adjectives + [entity.name])
    phrase = f"{_article(name)} {name}"
    if entity.position is not None and not entity.surface:
        for other in sorted(world.entities.values(), key=lambda e: e.id):
            if other.id != entity.id and other.surface and on_surface(world, entity.id, other.id):
                phrase += f" on the {other.name}"
                break
    return phrase


def _join(parts: list[str]) -> str:
    if not parts:
        return ""
    if len(parts) == 1:
        return parts[0]
    return ", ".join(parts[:-1]) + " and " + parts[-1]


def describe(world: WorldState, viewpoint: str | None = None) -> str:
    """Deterministic scene paragraph for LLM context; identical worlds yield
    byte-identical text."""
    grounded: dict[str, list[Entity]] = {rid: [] for rid in _REGION_ORDER}
    for entity in sorted(world.entities.values(), key=lambda e: e.id):
        if entity.position is not None:
            grounded[entity.position.region].append(entity)

    sentences: list[str] = []
    main_items = [_item_phrase(world, e) for e in grounded["main_room"]]
    text = "It's a large purple main room."
    if main_items:
        text += f" In the main room there is {_join(main_items)}."
    sentences.append(text)

    elev_items = [_item_phrase(world, e) for e in grounded["elevated_area"]]
    if elev_items:
        sentences.append(f"At the back right corner of the room, there's an elevated area with {_join(elev_items)}.")
    else:
        sentences.append("At the back right corner of the room, there's an elevated area.")

    back_items = [_item_phrase(world, e) for e in grounded["back_room"]]
    text = "At the back of the room there's a smaller back room."
    if back_items:
        text = f"At the back of the room there's a smaller back room with {_join(back_items)}."
    sentences.append(text)

    side_items = [_item_phrase(world, e) for e in grounded["side_room"]]
    text = "On the left, there is a narrow side room behind a glass pane."
    if side_items:
        text += f" You can see {_join(side_items)} behind the glass."
    sentences.append(text)

    for door in sorted(world.doors.values(), key=lambda d: d.id):
        state_word = "open" if door.open else ("locked" if door.locked_by is not None else "closed")
        edge = world.map.edge_by_id(door.id)
        a, b = (world.map.region_name(r) for r in edge.between)
        phrase = f"{state_word} {door.name}"
        text = f"Between the {a} and the {b} there is {_article(phrase)} {phrase}."
        if door.timed:
            text += " It opens briefly when a pressure plate is pressed."
        sentences.append(text)

    contained: dict[str, list[str]] = {}
    for entity in sorted(world.entities.values(), key=lambda e: e.id):
        if entity.inside is not None:
            contained.setdefault(entity.inside, []).append(f"{_article(entity.name)} {entity.name}")
    for container_id in sorted(contained):
        container = world.entity(container_id)
        sentences.append(f"Inside the {container.name}: {_join(contained[container_id])}.")

    for name in ROSTER:
        if name not in world.agents:
            continue
        state = world.agents[name]
        region_name = world.map.region_name(state.position.region)
        if name == viewpoint:
            text = f"You are in the {region_name}."
            if state.holding is not None:
                text += f" You are holding the {world.entity(state.holding).name}."
        else:
            text = f"{name} is in the {region_name}."
            if state.holding is not None:
                text += f" {name} is holding the {world.entity(state.holding).name}."
        sentences.append(text)

    return " ".join(sentences)

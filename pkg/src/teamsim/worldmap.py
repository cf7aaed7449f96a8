"""Static scene geometry: regions, door edges, placements, path planning.

Loaded once from the bundled ``fixtures/map.json`` so tests can pin the
exact layout.  The scene is a flat 2D map; rooms are convex polygons
connected by door edges (plus one fly-only ledge onto the elevated area),
so a route is a chain of edge waypoints and in-room travel is a straight
line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping


@dataclass(frozen=True)
class Region:
    id: str
    name: str
    color: str
    polygon: tuple[tuple[float, float], ...]
    small_only: bool

    def contains(self, x: float, y: float) -> bool:
        # Even-odd rule with boundary points counted as inside.
        inside = False
        pts = self.polygon
        for i in range(len(pts)):
            x1, y1 = pts[i]
            x2, y2 = pts[(i + 1) % len(pts)]
            if _on_segment(x, y, x1, y1, x2, y2):
                return True
            if (y1 > y) != (y2 > y):
                t = (y - y1) / (y2 - y1)
                if x < x1 + t * (x2 - x1):
                    inside = not inside
        return inside

    def center(self) -> tuple[float, float]:
        xs = [p[0] for p in self.polygon]
        ys = [p[1] for p in self.polygon]
        return (sum(xs) / len(xs), sum(ys) / len(ys))


def _on_segment(x, y, x1, y1, x2, y2, eps: float = 1e-9) -> bool:
    cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
    if abs(cross) > eps:
        return False
    return min(x1, x2) - eps <= x <= max(x1, x2) + eps and min(y1, y2) - eps <= y <= max(y1, y2) + eps


@dataclass(frozen=True)
class Edge:
    """A crossing between two regions: a door, or a fly-only ledge."""

    id: str
    kind: str  # "door" | "fly"
    between: tuple[str, str]
    at: tuple[float, float]
    name: str = ""
    color: str | None = None
    locked_by: str | None = None
    timed: bool = False

    def other_side(self, region: str) -> str:
        a, b = self.between
        return b if region == a else a


@dataclass(frozen=True)
class Placement:
    id: str
    kind: str
    name: str
    region: str
    at: tuple[float, float]
    weight: str = "light"
    movable: bool = False
    surface: bool = False
    container: bool = False
    color: str | None = None
    opens: str | None = None
    required_flippers: tuple[str, ...] = ()


@dataclass(frozen=True)
class WorldMap:
    regions: Mapping[str, Region]
    edges: tuple[Edge, ...]
    placements: Mapping[str, Placement]
    agent_starts: Mapping[str, tuple[float, float]]
    user_position: tuple[float, float]

    def region_name(self, region_id: str) -> str:
        return self.regions[region_id].name

    def edges_from(self, region_id: str) -> Iterable[Edge]:
        for edge in self.edges:
            if region_id in edge.between:
                yield edge

    def edge_by_id(self, edge_id: str) -> Edge:
        for edge in self.edges:
            if edge.id == edge_id:
                return edge
        raise KeyError(edge_id)

    def region_of_point(self, x: float, y: float) -> str | None:
        for region in self.regions.values():
            if region.contains(x, y):
                return region.id
        return None


def load_map() -> WorldMap:
    raw = json.loads(resources.files("teamsim.fixtures").joinpath("map.json").read_text())
    regions = {
        r["id"]: Region(
            id=r["id"],
            name=r["name"],
            color=r["color"],
            polygon=tuple((float(x), float(y)) for x, y in r["polygon"]),
            small_only=bool(r["small_only"]),
        )
        for r in raw["regions"]
    }
    edges = tuple(
        Edge(
            id=e["id"],
            kind=e["kind"],
            between=(e["between"][0], e["between"][1]),
            at=(float(e["at"][0]), float(e["at"][1])),
            name=e.get("name", ""),
            color=e.get("color"),
            locked_by=e.get("locked_by"),
            timed=bool(e.get("timed", False)),
        )
        for e in raw["edges"]
    )
    placements = {
        p["id"]: Placement(
            id=p["id"],
            kind=p["kind"],
            name=p["name"],
            region=p["region"],
            at=(float(p["at"][0]), float(p["at"][1])),
            weight=p.get("weight", "light"),
            movable=bool(p.get("movable", False)),
            surface=bool(p.get("surface", False)),
            container=bool(p.get("container", False)),
            color=p.get("color"),
            opens=p.get("opens"),
            required_flippers=tuple(p.get("required_flippers", ())),
        )
        for p in raw["entities"]
    }
    starts = {name: (float(x), float(y)) for name, (x, y) in raw["agent_starts"].items()}
    user = (float(raw["user_position"][0]), float(raw["user_position"][1]))
    return WorldMap(regions=regions, edges=edges, placements=placements, agent_starts=starts, user_position=user)


def edge_usable_for_planning(
    edge: Edge,
    *,
    flying: bool,
    large: bool,
    regions: Mapping[str, Region],
    active_doors: Mapping[str, "DoorFacts"],
) -> bool:
    """Whether a route may be planned through this edge for an agent.

    A closed-but-unlocked door is plannable (the agent walks up and waits
    for it to open); a locked door or an inactive one is not.  Crossings
    touching a small-only room are out for large agents in both directions.
    """
    if large and any(regions[r].small_only for r in edge.between):
        return False
    if edge.kind == "fly":
        return flying
    facts = active_doors.get(edge.id)
    if facts is None:
        return False  # door not part of this task: sealed passage
    if facts.locked and not facts.open:
        return False
    return True


@dataclass(frozen=True)
class DoorFacts:
    """The two door properties path planning cares about."""

    open: bool
    locked: bool


def plan_route(
    world_map: WorldMap,
    start_region: str,
    goal_region: str,
    *,
    flying: bool,
    large: bool,
    active_doors: Mapping[str, DoorFacts],
) -> list[Edge] | None:
    """Shortest edge chain from one region to another, or None.

    Breadth-first over the region graph; ties broken by edge declaration
    order so routes are reproducible.
    """
    if start_region == goal_region:
        return []
    frontier = [(start_region, [])]
    seen = {start_region}
    while frontier:
        next_frontier = []
        for region_id, path in frontier:
            for edge in world_map.edges_from(region_id):
                nxt = edge.other_side(region_id)
                if nxt in seen:
                    continue
                if not edge_usable_for_planning(
                    edge,
                    flying=flying,
                    large=large,
                    regions=world_map.regions,
                    active_doors=active_doors,
                ):
                    continue
                new_path = path + [edge]
                if nxt == goal_region:
                    return new_path
                seen.add(nxt)
                next_frontier.append((nxt, new_path))
        frontier = next_frontier
    return None

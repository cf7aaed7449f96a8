"""World engine: kinematics, door timers, motion outcomes, scene description."""

import dataclasses

import pytest
from hypothesis import given, settings, strategies as st

import teamsim.world as W
from teamsim.tasks import get_task
from teamsim.world import MoveTarget, Position, WorldConfig, describe, spawn_task_world


def world_for(task_id: int, **config) -> W.WorldState:
    return spawn_task_world(get_task(task_id), WorldConfig(**config) if config else None)


def open_glass(world: W.WorldState, timer: float | None) -> W.WorldState:
    door = world.doors["glass_door"]
    doors = dict(world.doors)
    doors["glass_door"] = W.replace_door(door, open=True, timer_remaining=timer)
    return W.replace_world(world, doors=doors)


def teleport(world: W.WorldState, agent: str, x: float, y: float) -> W.WorldState:
    region = world.map.region_of_point(x, y)
    assert region is not None
    agents = dict(world.agents)
    agents[agent] = W.replace_agent(world.agent(agent), position=Position(x, y, region))
    return W.replace_world(world, agents=agents)


# -- spawning ----------------------------------------------------------------


def test_spawned_world_contains_exactly_the_task_subset():
    for task_id in range(1, 8):
        task = get_task(task_id)
        world = world_for(task_id)
        assert set(world.entities) == set(task.entity_ids)
        assert set(world.doors) == set(task.door_ids)
        assert world.clock == 0.0
        for name in W.ROSTER:
            x, y = world.map.agent_starts[name]
            pos = world.agent(name).position
            assert (pos.x, pos.y) == (x, y)
            assert pos.region == "main_room"


def test_spawning_twice_gives_equal_worlds():
    assert world_for(4) == world_for(4)


# -- kinematics --------------------------------------------------------------


def test_motion_covers_speed_times_dt_exactly():
    world = world_for(1)
    # Neptune at (11, 3), 1.5 m/s: a 3.0 m leg lands exactly on the target
    # after one 2.0 s step.
    world, started, err = W.start_motion(world, "Neptune", MoveTarget((14.0, 3.0), "main_room", "the mark", 0.0))
    assert started, err
    world = W.step(world, 2.0)
    neptune = world.agent("Neptune")
    assert (neptune.position.x, neptune.position.y) == (14.0, 3.0)
    assert neptune.motion is None
    assert neptune.last_motion is not None and neptune.last_motion.kind == "arrived"
    assert neptune.last_motion.text == "Neptune arrived at the mark."


def test_partial_progress_is_proportional():
    world = world_for(1)
    world, started, _ = W.start_motion(world, "Neptune", MoveTarget((14.0, 3.0), "main_room", "the mark", 0.0))
    assert started
    world = W.step(world, 1.0)
    assert world.agent("Neptune").position.x == pytest.approx(12.5)
    assert world.agent("Neptune").motion is not None


def test_entity_approach_stops_at_standoff():
    world = world_for(1)
    target = W.resolve_location(world, "candle")
    assert target is not None and target.standoff == world.config.approach_standoff_m
    world, started, _ = W.start_motion(world, "Neptune", target)
    assert started
    for _ in range(40):
        world = W.step(world, 0.1)
        if world.agent("Neptune").motion is None:
            break
    neptune = world.agent("Neptune")
    assert neptune.last_motion.kind == "arrived"
    # candle sits at (16, 3); the stop point is 0.75 m short on the approach line
    assert neptune.position.x == pytest.approx(15.25)
    assert neptune.position.y == pytest.approx(3.0)
    assert W.within_reach(world, "Neptune", "candle")


def test_arrival_text_mentions_held_object():
    world = world_for(6)
    world = teleport(world, "Jupiter", 12.0, 5.0)
    plate = world.entities["plate_1"]
    entities = dict(world.entities)
    entities["plate_1"] = W.replace_entity(plate, position=None, held_by="Jupiter")
    agents = dict(world.agents)
    agents["Jupiter"] = W.replace_agent(world.agent("Jupiter"), holding="plate_1")
    world = W.replace_world(world, entities=entities, agents=agents)
    world, started, _ = W.start_motion(world, "Jupiter", W.resolve_location(world, "trash bin"))
    assert started
    for _ in range(200):
        world = W.step(world, 0.1)
        if world.agent("Jupiter").motion is None:
            break
    assert world.agent("Jupiter").last_motion.text == (
        "Jupiter arrived at the trash bin. Jupiter is holding the first plate."
    )


def test_unreachable_target_fails_fast_without_motion():
    world = world_for(1)  # no doors active in task 1
    target = W.resolve_location(world, "back room")
    world2, started, err = W.start_motion(world, "Neptune", target)
    assert not started
    assert err == "Neptune cannot reach the back room from here: the way is blocked."
    assert world2 is world


# -- doors -------------------------------------------------------------------


def test_door_timer_expires_at_tick_boundary():
    world = open_glass(world_for(5), timer=0.1)
    world = W.step(world, 0.2)
    door = world.doors["glass_door"]
    assert not door.open and door.timer_remaining is None


def test_door_timer_counts_down_without_closing_early():
    world = open_glass(world_for(5), timer=0.3)
    world = W.step(world, 0.2)
    door = world.doors["glass_door"]
    assert door.open and door.timer_remaining == pytest.approx(0.1)


def test_agent_waits_at_closed_door_then_crosses_when_it_opens():
    world = world_for(5)
    world, started, _ = W.start_motion(world, "Neptune", W.resolve_location(world, "back room"))
    assert started
    for _ in range(60):
        world = W.step(world, 0.1)
    neptune = world.agent("Neptune")
    # Parked at the hold distance in front of the glass door at (11, 10).
    assert neptune.motion is not None
    assert neptune.position.y == pytest.approx(10.0 - world.config.door_hold_m)
    held_at = (neptune.position.x, neptune.position.y)

    world = open_glass(world, timer=6.0)
    for _ in range(40):
        world = W.step(world, 0.1)
        if world.agent("Neptune").motion is None:
            break
    neptune = world.agent("Neptune")
    assert neptune.last_motion is not None and neptune.last_motion.kind == "arrived"
    assert neptune.position.region == "back_room"
    assert (neptune.position.x, neptune.position.y) != held_at


def test_patience_runs_out_with_blocked_outcome():
    world = world_for(5)
    world, started, _ = W.start_motion(world, "Neptune", W.resolve_location(world, "back room"))
    assert started
    outcome = None
    for _ in range(200):
        world = W.step(world, 0.1)
        state = world.agent("Neptune")
        if state.motion is None:
            outcome = state.last_motion
            break
    assert outcome is not None and outcome.kind == "blocked"
    assert outcome.text == "Neptune stopped moving: the way to the back room is blocked."
    assert world.agent("Neptune").position.region == "main_room"


def test_clear_all_motion_reports_aborted():
    world = world_for(1)
    world, _, _ = W.start_motion(world, "Neptune", W.resolve_location(world, "candle"))
    world = W.step(world, 0.1)
    stopped = W.clear_all_motion(world)
    neptune = stopped.agent("Neptune")
    assert neptune.motion is None
    assert neptune.last_motion.kind == "aborted"
    assert stopped.agent("Jupiter").last_motion is None  # untouched: was not moving


# -- invariants --------------------------------------------------------------


def test_step_rejects_nonpositive_dt():
    world = world_for(1)
    with pytest.raises(ValueError):
        W.step(world, 0.0)


def test_entity_location_exclusivity_is_enforced():
    world = world_for(6)
    plate = world.entities["plate_1"]
    with pytest.raises(ValueError):
        W.replace_entity(plate, held_by="Jupiter")  # position still set: two states


def test_held_and_contained_entities_ride_their_anchor():
    world = world_for(6)
    plate = world.entities["plate_1"]
    entities = dict(world.entities)
    entities["plate_1"] = W.replace_entity(plate, position=None, held_by="Jupiter")
    world = W.replace_world(world, entities=entities)
    jupiter = world.agent("Jupiter").position
    pos = W.entity_position(world, "plate_1")
    assert (pos.x, pos.y) == (jupiter.x, jupiter.y)

    entities = dict(world.entities)
    entities["plate_1"] = W.replace_entity(entities["plate_1"], held_by=None, inside="trash_bin")
    world = W.replace_world(world, entities=entities)
    bin_pos = world.entities["trash_bin"].position
    pos = W.entity_position(world, "plate_1")
    assert (pos.x, pos.y) == (bin_pos.x, bin_pos.y)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(min_value=0.01, max_value=2.0, allow_nan=False), min_size=1, max_size=40))
def test_travel_never_exceeds_speed_budget(dts):
    world = world_for(2)
    world, started, _ = W.start_motion(world, "Pluto", W.resolve_location(world, "candle"))
    assert started
    total = 0.0
    travelled = 0.0
    last = world.agent("Pluto").position
    for dt in dts:
        world = W.step(world, dt)
        pos = world.agent("Pluto").position
        travelled += W.dist((last.x, last.y), (pos.x, pos.y))
        last = pos
        total += dt
    speed = world.agent("Pluto").profile.speed
    assert travelled <= speed * total + 1e-6
    assert world.clock == pytest.approx(total)
    assert world.agent("Pluto").position.region in world.map.regions


def test_step_does_not_mutate_its_input():
    world = world_for(5)
    world, _, _ = W.start_motion(world, "Neptune", W.resolve_location(world, "back room"))
    frozen = dataclasses.replace(world)
    W.step(world, 0.5)
    assert world == frozen


# -- observation deltas ------------------------------------------------------


def test_deltas_report_door_changes_and_region_changes():
    world = world_for(5)
    opened = open_glass(world, timer=6.0)
    assert W.deltas(world, opened) == ["The glass door is now open."]

    before = teleport(world, "Neptune", 11.0, 9.0)
    after = teleport(before, "Neptune", 11.0, 11.0)
    assert W.deltas(before, after) == ["Neptune is now in the back room."]
    assert W.deltas(world, world) == []


# -- description -------------------------------------------------------------


def test_description_pins_the_room_tour():
    text = describe(world_for(4))
    assert text.startswith("It's a large purple main room.")
    assert "At the back right corner of the room, there's an elevated area with a red key." in text
    assert "On the left, there is a narrow side room behind a glass pane. You can see a yellow key behind the glass." in text
    assert "Between the main room and the side room there is a locked red door." in text
    assert "Jupiter is in the main room." in text


def test_description_viewpoint_swaps_to_second_person():
    text = describe(world_for(4), viewpoint="Jupiter")
    assert "You are in the main room." in text
    assert "Jupiter is in the main room." not in text
    assert "Pluto is in the main room." in text


def test_description_marks_items_on_surfaces_and_damage():
    world = world_for(7)
    assert "a bed and a vase on the bed" in describe(world)
    entities = dict(world.entities)
    entities["vase"] = W.replace_entity(world.entities["vase"], broken=True)
    entities["bed"] = W.replace_entity(world.entities["bed"], flipped=True)
    broken = W.replace_world(world, entities=entities)
    text = describe(broken)
    assert "a broken vase" in text
    assert "a flipped bed" in text


def test_description_mentions_timed_door_behaviour():
    text = describe(world_for(5))
    assert "Between the main room and the back room there is a closed glass door." in text
    assert "It opens briefly when a pressure plate is pressed." in text


def test_description_is_deterministic():
    assert describe(world_for(6)) == describe(world_for(6))
    assert describe(world_for(3), viewpoint="Neptune") == describe(world_for(3), viewpoint="Neptune")


def test_description_lists_container_contents():
    world = world_for(6)
    entities = dict(world.entities)
    entities["plate_2"] = W.replace_entity(world.entities["plate_2"], position=None, inside="trash_bin")
    world = W.replace_world(world, entities=entities)
    assert "Inside the trash bin: a second plate." in describe(world)

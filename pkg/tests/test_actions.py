"""Function registry, strict argument validation, action effects."""

import pytest

import teamsim.world as W
from teamsim.actions import eligible_values, execute, registry_for, validate
from teamsim.tasks import get_task
from teamsim.world import Position, spawn_task_world


def world_for(task_id: int) -> W.WorldState:
    return spawn_task_world(get_task(task_id))


def teleport(world: W.WorldState, agent: str, x: float, y: float) -> W.WorldState:
    region = world.map.region_of_point(x, y)
    agents = dict(world.agents)
    agents[agent] = W.replace_agent(world.agent(agent), position=Position(x, y, region))
    return W.replace_world(world, agents=agents)


def give(world: W.WorldState, agent: str, entity_id: str) -> W.WorldState:
    entities = dict(world.entities)
    entities[entity_id] = W.replace_entity(world.entities[entity_id], position=None, held_by=agent, inside=None)
    agents = dict(world.agents)
    agents[agent] = W.replace_agent(world.agent(agent), holding=entity_id)
    return W.replace_world(world, entities=entities, agents=agents)


# -- eligibility -------------------------------------------------------------


def test_move_to_lists_respect_size_and_flight():
    world = world_for(3)
    assert eligible_values(world, "Jupiter")["move_to"] == [
        "main room", "back room", "dumbbell", "fridge", "user",
    ]
    assert eligible_values(world, "Pluto")["move_to"] == [
        "main room", "side room", "back room", "elevated area", "dumbbell", "fridge", "user",
    ]
    assert eligible_values(world, "Neptune")["move_to"] == [
        "main room", "side room", "back room", "dumbbell", "fridge", "user",
    ]


def test_heavy_objects_only_for_the_strong_robot():
    world = world_for(3)
    assert eligible_values(world, "Jupiter")["pick_up"] == ["dumbbell"]
    assert eligible_values(world, "Pluto")["pick_up"] == []
    assert eligible_values(world, "Neptune")["pick_up"] == []


def test_door_names_appear_between_regions_and_entities():
    world = world_for(4)
    assert eligible_values(world, "Pluto")["move_to"] == [
        "main room", "side room", "back room", "elevated area",
        "red door", "red key", "yellow key", "user",
    ]
    assert eligible_values(world, "Pluto")["open_door"] == ["red door"]
    assert eligible_values(world, "Pluto")["pick_up"] == ["red key", "yellow key"]


def test_task_scoped_verbs():
    five = world_for(5)
    assert eligible_values(five, "Jupiter")["step_on_plate"] == ["pressure plate"]
    assert eligible_values(five, "Jupiter")["throw_away"] == []
    six = world_for(6)
    assert eligible_values(six, "Neptune")["throw_away"] == ["trash bin"]
    assert eligible_values(six, "Neptune")["pick_up"] == ["first plate", "second plate", "third plate"]
    assert eligible_values(six, "Neptune")["put_down"] == ["ground"]
    seven = world_for(7)
    assert eligible_values(seven, "Jupiter")["flip"] == ["bed"]
    assert eligible_values(seven, "Neptune")["flip"] == ["bed"]
    assert eligible_values(seven, "Pluto")["flip"] == []
    assert eligible_values(seven, "Neptune")["put_down"] == ["ground", "bed"]


def test_registry_elides_functions_without_arguments():
    world = world_for(3)
    assert [t["function"]["name"] for t in registry_for(world, "Pluto")] == ["move_to"]
    assert [t["function"]["name"] for t in registry_for(world, "Jupiter")] == [
        "move_to", "pick_up", "put_down",
    ]


def test_registry_schema_shape():
    tool = registry_for(world_for(6), "Neptune")[1]
    assert tool == {
        "type": "function",
        "function": {
            "name": "pick_up",
            "description": "Pick up an object within reach. You can only hold one object at a time.",
            "parameters": {
                "type": "object",
                "properties": {
                    "object": {
                        "type": "string",
                        "description": "Name of the object to pick up.",
                        "enum": ["first plate", "second plate", "third plate"],
                    }
                },
                "required": ["object"],
            },
        },
    }


# -- validation rejections ---------------------------------------------------


NEAR_MISSES = [
    # (task, agent, function, arguments, fragment the feedback must contain)
    (6, "Neptune", "throw_away", {"bin": "blue trash can"}, "Eligible values: trash bin."),
    (1, "Neptune", "move_to", {"destination": "kitchen"}, "Eligible values:"),
    (1, "Neptune", "move_to", {"destination": "candel"}, "Did you mean 'candle'?"),
    (3, "Jupiter", "move_to", {"destination": "side room"}, "Eligible values:"),
    (3, "Jupiter", "move_to", {"destination": "elevated area"}, "Eligible values:"),
    (4, "Pluto", "open_door", {"door": "glass door"}, "Eligible values: red door."),
    (5, "Jupiter", "step_on_plate", {"plate": "glass door"}, "Eligible values: pressure plate."),
    (4, "Neptune", "pick_up", {"object": "green key"}, "Eligible values: red key, yellow key."),
    (2, "Pluto", "move_to", {"destination": "candle holder"}, "Did you mean 'candle'?"),
    (6, "Jupiter", "put_down", {"target": "table"}, "Eligible values: ground."),
    (1, "Neptune", "move_to", {"destination": "the candle"}, "Did you mean 'candle'?"),
    (4, "Pluto", "open_door", {"door": "red door "}, "Did you mean 'red door'?"),
]


@pytest.mark.parametrize("task_id, agent, function, arguments, fragment", NEAR_MISSES)
def test_near_miss_arguments_are_rejected_with_alternatives(task_id, agent, function, arguments, fragment):
    world = world_for(task_id)
    ok, feedback = validate(world, agent, function, arguments)
    assert not ok
    assert fragment in feedback
    param = next(iter(arguments))
    assert f"'{arguments[param]}' is not a valid choice for {param}." in feedback


def test_functions_outside_the_task_read_as_unknown():
    # Neptune cannot lift anything in the dumbbell task, so for him the
    # function does not exist at all rather than having an empty enum.
    ok, feedback = validate(world_for(3), "Neptune", "pick_up", {"object": "dumbbell"})
    assert not ok and feedback == "Unknown function 'pick_up'."
    ok, feedback = validate(world_for(7), "Pluto", "flip", {"object": "bed"})
    assert not ok and feedback == "Unknown function 'flip'."
    ok, feedback = validate(world_for(1), "Neptune", "sing", {"song": "daisy"})
    assert not ok and feedback == "Unknown function 'sing'."


def test_missing_parameter_is_named():
    ok, feedback = validate(world_for(1), "Neptune", "move_to", {})
    assert not ok and feedback == "Missing required parameter 'destination' for move_to."
    ok, feedback = validate(world_for(1), "Neptune", "move_to", {"destination": 7})
    assert not ok and feedback == "Missing required parameter 'destination' for move_to."


def test_rejection_leaves_the_world_untouched():
    world = world_for(6)
    out = execute(world, "Neptune", "throw_away", {"bin": "blue trash can"})
    assert not out.ok
    assert out.world is world


# -- preconditions and effects -----------------------------------------------


def test_pick_up_needs_reach_and_a_free_hand():
    world = world_for(4)
    ok, feedback = validate(world, "Pluto", "pick_up", {"object": "red key"})
    assert not ok and feedback == "The red key is too far away. Pluto must move closer first."

    world = teleport(world, "Pluto", 17.5, 11.5)
    out = execute(world, "Pluto", "pick_up", {"object": "red key"})
    assert out.ok and out.feedback == "Pluto picked up the red key."
    assert out.world.agent("Pluto").holding == "red_key"
    assert out.world.entities["red_key"].held_by == "Pluto"
    assert out.world.entities["red_key"].position is None

    ok, feedback = validate(out.world, "Pluto", "pick_up", {"object": "yellow key"})
    assert not ok and feedback == "Pluto is already holding the red key. Put it down first."


def test_put_down_on_ground_drops_at_the_agents_feet():
    world = give(world_for(4), "Pluto", "red_key")
    world = teleport(world, "Pluto", 6.0, 6.0)
    out = execute(world, "Pluto", "put_down", {"target": "ground"})
    assert out.ok and out.feedback == "Pluto put down the red key on the ground."
    key = out.world.entities["red_key"]
    assert (key.position.x, key.position.y) == (6.0, 6.0)
    assert out.world.agent("Pluto").holding is None


def test_put_down_on_a_surface_requires_reach():
    world = give(world_for(7), "Neptune", "vase")
    ok, feedback = validate(world, "Neptune", "put_down", {"target": "bed"})
    assert not ok and feedback == "The bed is too far away. Neptune must move closer first."
    world = teleport(world, "Neptune", 15.0, 7.8)
    out = execute(world, "Neptune", "put_down", {"target": "bed"})
    assert out.ok and out.feedback == "Neptune put the vase on the bed."
    assert W.on_surface(out.world, "vase", "bed")


def test_locked_door_demands_the_matching_key():
    world = teleport(world_for(4), "Pluto", 3.2, 8.0)
    ok, feedback = validate(world, "Pluto", "open_door", {"door": "red door"})
    assert not ok and feedback == "The red door is locked. Pluto needs the red key in hand."

    wrong = give(world, "Pluto", "yellow_key")
    ok, feedback = validate(wrong, "Pluto", "open_door", {"door": "red door"})
    assert not ok and feedback == "The red door is locked. Pluto needs the red key in hand."

    right = give(world, "Pluto", "red_key")
    out = execute(right, "Pluto", "open_door", {"door": "red door"})
    assert out.ok and out.feedback == "Pluto opened the red door with the red key."
    door = out.world.doors["door_red"]
    assert door.open and door.locked_by is None and door.timer_remaining is None
    # the key stays in hand; opening is not consuming
    assert out.world.agent("Pluto").holding == "red_key"

    ok, feedback = validate(out.world, "Pluto", "open_door", {"door": "red door"})
    assert not ok and feedback == "The red door is already open."


def test_unlocked_door_stays_open_for_good():
    world = teleport(world_for(4), "Pluto", 3.2, 8.0)
    world = give(world, "Pluto", "red_key")
    out = execute(world, "Pluto", "open_door", {"door": "red door"})
    stepped = W.step(out.world, 30.0)
    assert stepped.doors["door_red"].open


def test_plate_press_opens_the_timed_door_and_is_remembered():
    world = teleport(world_for(5), "Jupiter", 8.5, 8.2)
    out = execute(world, "Jupiter", "step_on_plate", {"plate": "pressure plate"})
    assert out.ok
    assert out.feedback == "Jupiter stepped on the pressure plate. The glass door is open."
    door = out.world.doors["glass_door"]
    assert door.open and door.timer_remaining == world.config.door_open_s
    assert out.world.plate_pressers == frozenset({"Jupiter"})

    # pressing again rewinds the timer instead of stacking a second one
    half = W.step(out.world, 3.0)
    again = execute(half, "Jupiter", "step_on_plate", {"plate": "pressure plate"})
    assert again.world.doors["glass_door"].timer_remaining == world.config.door_open_s


def test_throw_away_works_at_a_distance():
    world = give(world_for(6), "Jupiter", "plate_1")
    assert world.agent("Jupiter").position.x == 9.0  # nowhere near the bin at (5, 8)
    out = execute(world, "Jupiter", "throw_away", {"bin": "trash bin"})
    assert out.ok and out.feedback == "Jupiter threw the first plate into the trash bin."
    plate = out.world.entities["plate_1"]
    assert plate.inside == "trash_bin" and plate.disposed and plate.held_by is None
    assert out.world.agent("Jupiter").holding is None

    ok, feedback = validate(out.world, "Jupiter", "throw_away", {"bin": "trash bin"})
    assert not ok and feedback == "Jupiter is not holding anything."


def near_bed(world: W.WorldState) -> W.WorldState:
    world = teleport(world, "Jupiter", 15.0, 7.8)
    return teleport(world, "Neptune", 15.7, 8.0)


def test_flip_needs_both_robots_within_the_window():
    world = near_bed(world_for(7))
    first = execute(world, "Jupiter", "flip", {"object": "bed"})
    assert first.ok
    assert first.feedback == "Jupiter is ready to flip the bed. Waiting for: Neptune."
    assert not first.world.entities["bed"].flipped

    second = execute(first.world, "Neptune", "flip", {"object": "bed"})
    assert second.feedback == "Jupiter and Neptune flipped the bed together."
    assert second.world.entities["bed"].flipped
    assert second.world.flip_ready == {}

    ok, feedback = validate(second.world, "Jupiter", "flip", {"object": "bed"})
    assert not ok and feedback == "The bed is already flipped."


def test_flip_readiness_expires_after_the_sync_window():
    world = near_bed(world_for(7))
    first = execute(world, "Jupiter", "flip", {"object": "bed"})
    late = W.step(first.world, world.config.flip_sync_window_s + 0.2)
    second = execute(late, "Neptune", "flip", {"object": "bed"})
    assert second.feedback == "Neptune is ready to flip the bed. Waiting for: Jupiter."
    assert not second.world.entities["bed"].flipped


def test_flip_partner_who_walked_away_does_not_count():
    world = near_bed(world_for(7))
    first = execute(world, "Jupiter", "flip", {"object": "bed"})
    moved = teleport(first.world, "Jupiter", 5.0, 3.0)
    second = execute(moved, "Neptune", "flip", {"object": "bed"})
    assert second.feedback == "Neptune is ready to flip the bed. Waiting for: Jupiter."


def test_flip_with_full_hands_is_refused():
    world = give(near_bed(world_for(7)), "Neptune", "vase")
    ok, feedback = validate(world, "Neptune", "flip", {"object": "bed"})
    assert not ok and feedback == "Neptune needs both hands free to flip the bed."


def test_flip_breaks_whatever_still_sits_on_top():
    world = near_bed(world_for(7))
    first = execute(world, "Jupiter", "flip", {"object": "bed"})
    second = execute(first.world, "Neptune", "flip", {"object": "bed"})
    assert second.world.entities["vase"].broken

    # carried clear first: the vase survives
    cleared = give(near_bed(world_for(7)), "Neptune", "vase")
    dropped = execute(teleport(cleared, "Neptune", 12.0, 8.0), "Neptune", "put_down", {"target": "ground"})
    staged = teleport(dropped.world, "Neptune", 15.7, 8.0)
    one = execute(staged, "Jupiter", "flip", {"object": "bed"})
    two = execute(one.world, "Neptune", "flip", {"object": "bed"})
    assert two.world.entities["bed"].flipped
    assert not two.world.entities["vase"].broken


def test_execute_revalidates_against_the_live_world():
    # validation passed against a stale view; meanwhile the plate was taken
    world = teleport(world_for(6), "Neptune", 12.0, 5.0)
    ok, _ = validate(world, "Neptune", "pick_up", {"object": "first plate"})
    assert ok
    raced = give(world, "Jupiter", "plate_1")
    out = execute(raced, "Neptune", "pick_up", {"object": "first plate"})
    assert not out.ok
    assert out.feedback == "The first plate is not somewhere Neptune can pick it up."
    assert out.world is raced


def test_move_to_starts_motion_without_teleporting():
    world = world_for(1)
    out = execute(world, "Neptune", "move_to", {"destination": "candle"})
    assert out.ok and out.motion_started and out.feedback == ""
    assert out.world.agent("Neptune").motion is not None
    start = world.map.agent_starts["Neptune"]
    pos = out.world.agent("Neptune").position
    assert (pos.x, pos.y) == start

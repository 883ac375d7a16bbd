#!/usr/bin/env python3
"""Writes fixtures/scenarios/*.scenario.json.

Adversaries that must wait for the ego are spawned with desired_speed 0 and
released by a trigger. Trigger regions are placed from the constant-speed
arrival times of the no-op ego; `precrash run` against each file is the check.
"""

import json
import os

OUT = os.path.join(os.path.dirname(__file__), "..", "fixtures", "scenarios")
HALF = 1.75
DURATION = 90.0
PARKED = {"desired_speed": 0.0, "sigma": 0.0}


def r(v):
    return round(v, 3)


def region(x, y, radius=1.0):
    return {"center": [r(x), r(y)], "radius": radius}


def scenario(sid, title, net, ego, actors=(), flows=(), triggers=(), goal=None):
    doc = {
        "format_version": 1,
        "id": sid,
        "title": title,
        "network_file": f"../networks/{net}.net.json",
        "duration_s": DURATION,
        "ego": ego,
        "actors": list(actors),
        "flows": list(flows),
        "triggers": list(triggers),
    }
    if goal:
        doc["goal_region"] = goal
    return doc


def oncoming(edge="west", rate=0.1):
    return {"id": "oncoming", "entry_edge": edge, "rate": rate}


def practice():
    return scenario(
        "practice",
        "Practice drive",
        "practice",
        {"lane": "east_0", "s": 100.0, "v0": 10.0},
        flows=[
            {"id": "east_flow", "entry_edge": "east", "rate": 0.15},
            {"id": "west_flow", "entry_edge": "west", "rate": 0.15},
        ],
    )


def sudden_stop():
    return scenario(
        "sudden_stop",
        "Sudden vehicle stop in front",
        "sudden_stop",
        {"lane": "east_0", "s": 50.0, "v0": 16.0},
        actors=[{
            "id": "lead", "kind": "bot_car", "lane": "east_0", "s": 110.0, "v0": 12.0,
            "params": {"desired_speed": 12.0, "sigma": 0.0},
        }],
        flows=[oncoming()],
        triggers=[{
            "id": "lead_brakes",
            "condition": {"type": "ego_gap_below", "actor": "lead", "gap": 25.0},
            "actions": [{"type": "hard_stop", "actor": "lead", "decel": 8.0}],
        }],
        goal=region(1900.0, -HALF, 5.0),
    )


def sudden_lane_change():
    return scenario(
        "sudden_lane_change",
        "Sudden lane change interaction",
        "sudden_lane_change",
        {"lane": "east_0", "s": 50.0, "v0": 15.0},
        actors=[{
            "id": "cutter", "kind": "bot_car", "lane": "east_1", "s": 80.0, "v0": 13.0,
            "params": {"desired_speed": 13.0, "sigma": 0.0},
        }],
        flows=[oncoming()],
        triggers=[{
            "id": "cut_in",
            "condition": {"type": "ego_gap_below", "actor": "cutter", "gap": 6.0},
            "actions": [
                {"type": "force_lane_change", "actor": "cutter", "direction": "right"},
                {"type": "hard_stop", "actor": "cutter", "decel": 6.0},
            ],
        }],
        goal=region(1900.0, -5.25, 5.0),
    )


# cross junction: W_in_0 runs along y=-1.75 from x=-210 to x=-10,
# S_in_0 along x=+1.75 from y=-210 to y=-10
def red_light_runner():
    return scenario(
        "red_light_runner",
        "Vehicle running a red light",
        "red_light_runner",
        {"lane": "W_in_0", "s": 10.0, "v0": 12.0},
        actors=[{
            "id": "runner", "kind": "bot_car", "lane": "S_in_0", "s": RLR_S, "v0": 12.0,
            "route": ["N_out"],
            "params": {"desired_speed": 12.0, "sigma": 0.0},
        }],
        triggers=[{
            "id": "runs_red",
            "condition": {"type": "ego_in_region", **region(-150.0, -HALF, 1.0)},
            "actions": [{"type": "run_red_light", "actor": "runner"}],
        }],
        goal=region(150.0, -HALF, 5.0),
    )


RLR_S = 10.0
TBONE_TRIGGER_X = -33.8


def t_bone():
    return scenario(
        "t_bone",
        "T-bone crash at a priority junction",
        "t_bone",
        {"lane": "W_in_0", "s": 10.0, "v0": 12.0},
        actors=[{
            "id": "crosser", "kind": "bot_car", "lane": "S_in_0", "s": 195.5, "v0": 0.0,
            "route": ["N_out"],
            "params": {**PARKED, "accel": 3.0},
        }],
        triggers=[{
            "id": "fails_to_yield",
            "condition": {"type": "ego_in_region", **region(TBONE_TRIGGER_X, -HALF, 1.0)},
            "actions": [
                {"type": "run_red_light", "actor": "crosser"},
                {"type": "set_speed", "actor": "crosser", "v": 10.0},
            ],
        }],
        goal=region(150.0, -HALF, 5.0),
    )


DEER_X = 600.0
DEER_V = 3.0
DEER_LEAD = 30.2


def deer_crossing():
    return scenario(
        "deer_crossing",
        "Sudden deer crossing",
        "deer_crossing",
        {"lane": "east_0", "s": 50.0, "v0": 14.0},
        flows=[oncoming(rate=0.05)],
        triggers=[{
            "id": "deer_jumps",
            "condition": {"type": "ego_in_region", **region(DEER_X - DEER_LEAD, -HALF, 1.0)},
            "actions": [{
                "type": "spawn_agent", "id": "deer", "kind": "deer",
                "path": [[DEER_X, -8.0], [DEER_X, 12.0]], "v": DEER_V,
            }],
        }],
        goal=region(1400.0, -HALF, 5.0),
    )


ROUND_S = 5.0
ROUND_TRIGGER_X = -63.0


def roundabout():
    # W approach runs along y=-1.75 heading east; the ego ignores the ring
    # and crosses it near angle 185 degrees
    return scenario(
        "roundabout",
        "Crash at a roundabout",
        "roundabout",
        {"lane": "W_in_0", "s": 20.0, "v0": 10.0},
        actors=[{
            "id": "circulating", "kind": "bot_car", "lane": "ring_NW_0", "s": ROUND_S, "v0": 0.0,
            "route": ["ring_W", "ring_WS", "ring_S", "ring_SE", "ring_E", "ring_EN"],
            "params": PARKED,
        }],
        triggers=[{
            "id": "enters_ring",
            "condition": {"type": "ego_in_region", **region(ROUND_TRIGGER_X, -HALF, 1.0)},
            "actions": [
                {"type": "run_red_light", "actor": "circulating"},
                {"type": "set_speed", "actor": "circulating", "v": 8.0},
            ],
        }],
        goal=region(150.0, -HALF, 5.0),
    )


RAMP_S = 200.0
RAMP_TRIGGER_X = -300.0


def ramp_merge():
    return scenario(
        "ramp_merge",
        "Crash in a ramp merge",
        "ramp_merge",
        {"lane": "hw_up_0", "s": 20.0, "v0": 25.0},
        actors=[{
            "id": "merger", "kind": "bot_car", "lane": "ramp_0", "s": RAMP_S, "v0": 0.0,
            "route": ["hw_dn"],
            "params": PARKED,
        }],
        triggers=[{
            "id": "forced_merge",
            "condition": {"type": "ego_in_region", **region(RAMP_TRIGGER_X, -5.25, 1.0)},
            "actions": [
                {"type": "run_red_light", "actor": "merger"},
                {"type": "set_speed", "actor": "merger", "v": 20.0},
            ],
        }],
        goal=region(550.0, -5.25, 5.0),
    )


PED_X = 500.0
PED_V = 1.5
PED_LEAD = 26.6


def jaywalker():
    return scenario(
        "jaywalker",
        "Jaywalking pedestrian",
        "jaywalker",
        {"lane": "east_0", "s": 50.0, "v0": 12.0},
        flows=[oncoming(rate=0.05)],
        triggers=[{
            "id": "steps_out",
            "condition": {"type": "ego_in_region", **region(PED_X - PED_LEAD, -HALF, 1.0)},
            "actions": [{
                "type": "spawn_agent", "id": "pedestrian", "kind": "pedestrian",
                "path": [[PED_X, -5.0], [PED_X, 8.0]], "v": PED_V,
            }],
        }],
        goal=region(950.0, -HALF, 5.0),
    )


def main():
    os.makedirs(OUT, exist_ok=True)
    for make in [practice, sudden_stop, sudden_lane_change, red_light_runner, t_bone,
                 deer_crossing, roundabout, ramp_merge, jaywalker]:
        doc = make()
        with open(os.path.join(OUT, f"{doc['id']}.scenario.json"), "w") as f:
            json.dump(doc, f, indent=2)
            f.write("\n")


if __name__ == "__main__":
    main()

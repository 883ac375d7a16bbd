#!/usr/bin/env python3
"""Generate the bundled road networks under fixtures/networks.

Run from the repository root:  python3 tools/gen_networks.py
Output is deterministic; rerunning rewrites identical files.
"""

import json
import math
import os
import re

OUT = os.path.join(os.path.dirname(__file__), "..", "fixtures", "networks")
HALF = 1.75  # half lane width
JUNCTION = 10.0  # distance from node centre to stop line


def r(v):
    return round(v, 6) + 0.0


def pt(x, y):
    return [r(x), r(y)]


class Net:
    def __init__(self):
        self.nodes = {}
        self.edges = []
        self.connections = []
        self.signals = []

    def node(self, nid, x, y):
        self.nodes[nid] = (x, y)

    def edge(self, eid, a, b, speed, shapes):
        self.edges.append(
            {
                "id": eid,
                "from": a,
                "to": b,
                "speed_limit": speed,
                "lanes": [{"shape": [pt(*p) for p in s]} for s in shapes],
            }
        )

    def lane_shape(self, lane_id):
        eid, idx = lane_id.rsplit("_", 1)
        for e in self.edges:
            if e["id"] == eid:
                return e["lanes"][int(idx)]["shape"]
        raise KeyError(lane_id)

    def connect(self, from_lane, to_lane, via, curve=True, signal=None, yields=False):
        c = {"from_lane": from_lane, "to_lane": to_lane, "via": via}
        if signal is not None:
            c["signal"] = {"program": signal[0], "link": signal[1]}
        if yields:
            c["yield"] = True
        if curve:
            a = self.lane_shape(from_lane)
            b = self.lane_shape(to_lane)
            shape = bezier_between(a[-2], a[-1], b[0], b[1])
            if shape:
                c["shape"] = [pt(*p) for p in shape]
        self.connections.append(c)

    def dump(self, name):
        doc = {
            "format_version": 1,
            "nodes": [{"id": k, "x": r(v[0]), "y": r(v[1])} for k, v in sorted(self.nodes.items())],
            "edges": self.edges,
            "connections": self.connections,
            "signals": self.signals,
        }
        text = json.dumps(doc, indent=2)
        # keep coordinate pairs on one line
        text = re.sub(r"\[\s+(-?[\d.e+-]+),\s+(-?[\d.e+-]+)\s+\]", r"[\1, \2]", text)
        os.makedirs(OUT, exist_ok=True)
        with open(os.path.join(OUT, name), "w") as f:
            f.write(text + "\n")


def bezier_between(a0, a1, b0, b1, n=8):
    """Intermediate points of a quadratic curve leaving a1 along a0->a1 and
    arriving at b0 along b0->b1. Straight continuations need no points."""
    d1 = (a1[0] - a0[0], a1[1] - a0[1])
    d2 = (b1[0] - b0[0], b1[1] - b0[1])
    cross = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(cross) < 1e-9 * math.hypot(*d1) * math.hypot(*d2):
        return []
    # intersection of the two tangent lines
    t = ((b0[0] - a1[0]) * d2[1] - (b0[1] - a1[1]) * d2[0]) / cross
    c = (a1[0] + d1[0] * t, a1[1] + d1[1] * t)
    pts = []
    for i in range(1, n):
        u = i / n
        x = (1 - u) ** 2 * a1[0] + 2 * (1 - u) * u * c[0] + u * u * b0[0]
        y = (1 - u) ** 2 * a1[1] + 2 * (1 - u) * u * c[1] + u * u * b0[1]
        pts.append((x, y))
    return pts


def arc(cx, cy, radius, a0, a1, n):
    return [
        (cx + radius * math.cos(a0 + (a1 - a0) * i / n), cy + radius * math.sin(a0 + (a1 - a0) * i / n))
        for i in range(n + 1)
    ]


def straight_road(name, length, lanes_east, lanes_west, speed):
    """Two carriageways along the x axis. Eastbound lanes lie south of y=0,
    index 0 outermost."""
    n = Net()
    n.node("w", 0.0, 0.0)
    n.node("e", length, 0.0)
    n.edge(
        "east", "w", "e", speed,
        [[(0.0, -HALF - 2 * HALF * (lanes_east - 1 - i)), (length, -HALF - 2 * HALF * (lanes_east - 1 - i))]
         for i in range(lanes_east)],
    )
    if lanes_west:
        n.edge(
            "west", "e", "w", speed,
            [[(length, HALF + 2 * HALF * (lanes_west - 1 - i)), (0.0, HALF + 2 * HALF * (lanes_west - 1 - i))]
             for i in range(lanes_west)],
        )
    n.dump(name)


ARMS = {
    # arm name: unit vector from centre towards the arm
    "W": (-1.0, 0.0),
    "E": (1.0, 0.0),
    "S": (0.0, -1.0),
    "N": (0.0, 1.0),
}


def cross_junction(name, arm_len, speed, signal_phases=None, minor=()):
    """Four-arm junction at the origin, one lane per direction.

    Edges `<A>_in` lead towards the centre from arm A, `<A>_out` lead away.
    With `signal_phases`, arms W/E share link 0 and S/N link 1; left turns
    yield to opposing traffic. Arms listed in `minor` yield to everything."""
    n = Net()
    n.node("c", 0.0, 0.0)
    for arm, (ux, uy) in ARMS.items():
        far = JUNCTION + arm_len
        n.node(arm.lower(), ux * far, uy * far)
        # right-hand traffic: inbound lane is offset to the right of travel
        rx, ry = -uy, ux  # right of inbound direction (-ux, -uy)
        n.edge(
            f"{arm}_in", arm.lower(), "c", speed,
            [[(ux * far + rx * HALF, uy * far + ry * HALF), (ux * JUNCTION + rx * HALF, uy * JUNCTION + ry * HALF)]],
        )
        n.edge(
            f"{arm}_out", "c", arm.lower(), speed,
            [[(ux * JUNCTION - rx * HALF, uy * JUNCTION - ry * HALF), (ux * far - rx * HALF, uy * far - ry * HALF)]],
        )
    if signal_phases:
        n.signals.append({"id": "tl", "offset": 0.0, "phases": signal_phases})
    order = ["W", "S", "E", "N"]  # counter-clockwise
    for a in order:
        for b in order:
            if a == b:
                continue
            # turn relative to travel direction
            ia, ib = order.index(a), order.index(b)
            turn = {2: "straight", 1: "right", 3: "left"}[(ib - ia) % 4]
            link = None
            if signal_phases:
                link = ("tl", 0 if a in "WE" else 1)
            yields = a in minor or (turn == "left")
            n.connect(f"{a}_in_0", f"{b}_out_0", "c", signal=link, yields=yields)
    n.dump(name)


def roundabout(name, radius=20.0, approach=150.0):
    """Single-lane roundabout, counter-clockwise. Each arm leaves the ring
    slightly before its axis and joins slightly after it; entries yield."""
    n = Net()
    delta = math.radians(20.0)
    angles = {"E": 0.0, "N": math.pi / 2, "W": math.pi, "S": 3 * math.pi / 2}
    order = ["E", "N", "W", "S"]
    for arm in order:
        a = angles[arm]
        n.node(f"x{arm}", radius * math.cos(a - delta), radius * math.sin(a - delta))
        n.node(f"m{arm}", radius * math.cos(a + delta), radius * math.sin(a + delta))
        far = radius + 12.0 + approach
        n.node(arm.lower(), far * math.cos(a), far * math.sin(a))
    for i, arm in enumerate(order):
        nxt = order[(i + 1) % 4]
        a = angles[arm]
        n.edge(f"ring_{arm}", f"x{arm}", f"m{arm}", 8.0, [arc(0.0, 0.0, radius, a - delta, a + delta, 8)])
        n.edge(
            f"ring_{arm}{nxt}", f"m{arm}", f"x{nxt}", 8.0,
            [arc(0.0, 0.0, radius, a + delta, a + math.pi / 2 - delta, 24)],
        )
    for arm in order:
        a = angles[arm]
        ux, uy = math.cos(a), math.sin(a)
        rx, ry = -uy, ux
        far = radius + 12.0 + approach
        near = radius + 12.0
        n.edge(
            f"{arm}_in", arm.lower(), f"m{arm}", 13.89,
            [[(ux * far + rx * HALF, uy * far + ry * HALF), (ux * near + rx * HALF, uy * near + ry * HALF)]],
        )
        n.edge(
            f"{arm}_out", f"x{arm}", arm.lower(), 13.89,
            [[(ux * near - rx * HALF, uy * near - ry * HALF), (ux * far - rx * HALF, uy * far - ry * HALF)]],
        )
    for i, arm in enumerate(order):
        prev = order[(i - 1) % 4]
        nxt = order[(i + 1) % 4]
        n.connect(f"ring_{prev}{arm}_0", f"ring_{arm}_0", f"x{arm}", curve=False)
        n.connect(f"ring_{prev}{arm}_0", f"{arm}_out_0", f"x{arm}")
        n.connect(f"ring_{arm}_0", f"ring_{arm}{nxt}_0", f"m{arm}", curve=False)
        n.connect(f"{arm}_in_0", f"ring_{arm}{nxt}_0", f"m{arm}", yields=True)
    n.dump(name)


def ramp_merge(name):
    n = Net()
    n.node("a", -400.0, 0.0)
    n.node("m", 0.0, 0.0)
    n.node("b", 600.0, 0.0)
    n.node("r", -300.0, -60.0)
    lanes_up = [[(-400.0, -5.25), (0.0, -5.25)], [(-400.0, -1.75), (0.0, -1.75)]]
    lanes_dn = [[(0.0, -5.25), (600.0, -5.25)], [(0.0, -1.75), (600.0, -1.75)]]
    n.edge("hw_up", "a", "m", 27.0, lanes_up)
    n.edge("hw_dn", "m", "b", 27.0, lanes_dn)
    n.edge("ramp", "r", "m", 20.0, [[(-300.0, -60.0), (-60.0, -12.0)]])
    n.connect("hw_up_0", "hw_dn_0", "m", curve=False)
    n.connect("hw_up_1", "hw_dn_1", "m", curve=False)
    n.connect("ramp_0", "hw_dn_0", "m", yields=True)
    n.dump(name)


def ring(name, radius=600.0, lanes=2, segments=96):
    n = Net()
    quarter = ["q0", "q1", "q2", "q3"]
    for i, q in enumerate(quarter):
        a = i * math.pi / 2
        n.node(q, radius * math.cos(a), radius * math.sin(a))
    for i, q in enumerate(quarter):
        nxt = quarter[(i + 1) % 4]
        a0 = i * math.pi / 2
        shapes = []
        for k in range(lanes):
            # counter-clockwise travel: the right-hand side is outside
            rad = radius + HALF * (lanes - 1) - 2 * HALF * k
            shapes.append(arc(0.0, 0.0, rad, a0, a0 + math.pi / 2, segments))
        n.edge(f"{q}{nxt}", q, nxt, 13.9, shapes)
    for i, q in enumerate(quarter):
        nxt = quarter[(i + 1) % 4]
        after = quarter[(i + 2) % 4]
        for k in range(lanes):
            n.connect(f"{q}{nxt}_{k}", f"{nxt}{after}_{k}", nxt, curve=False)
    n.dump(name)


def grid(name, size=4, spacing=150.0):
    """One-way grid. Rows alternate east/west starting eastbound at y=0;
    columns alternate south/north starting southbound at x=0. Every street
    end meets a perpendicular street, so traffic circulates indefinitely."""
    n = Net()

    def nid(i, j):
        return f"n{i}{j}"

    for i in range(size):
        for j in range(size):
            n.node(nid(i, j), i * spacing, j * spacing)
    incoming = {}
    outgoing = {}

    def add(eid, a, b, pa, pb):
        d = (pb[0] - pa[0], pb[1] - pa[1])
        ln = math.hypot(*d)
        u = (d[0] / ln, d[1] / ln)
        s = (pa[0] + u[0] * JUNCTION, pa[1] + u[1] * JUNCTION)
        e = (pb[0] - u[0] * JUNCTION, pb[1] - u[1] * JUNCTION)
        n.edge(eid, a, b, 13.9, [[s, e]])
        outgoing.setdefault(a, []).append(eid)
        incoming.setdefault(b, []).append(eid)

    for j in range(size):
        east = j % 2 == 0
        cols = range(size - 1) if east else range(size - 1, 0, -1)
        for i in cols:
            i2 = i + 1 if east else i - 1
            add(f"h{j}_{i}{i2}", nid(i, j), nid(i2, j), (i * spacing, j * spacing), (i2 * spacing, j * spacing))
    for i in range(size):
        south = i % 2 == 0
        rows = range(size - 1, 0, -1) if south else range(size - 1)
        for j in rows:
            j2 = j - 1 if south else j + 1
            add(f"v{i}_{j}{j2}", nid(i, j), nid(i, j2), (i * spacing, j * spacing), (i * spacing, j2 * spacing))

    for node in sorted(n.nodes):
        ins = sorted(incoming.get(node, []))
        outs = sorted(outgoing.get(node, []))
        signalled = len(ins) > 1
        if signalled:
            # horizontal links first, then vertical
            n.signals.append(
                {
                    "id": f"tl_{node}",
                    "offset": 0.0,
                    "phases": [
                        {"duration": 25.0, "state": "Gr"},
                        {"duration": 3.0, "state": "yr"},
                        {"duration": 2.0, "state": "rr"},
                        {"duration": 25.0, "state": "rG"},
                        {"duration": 3.0, "state": "ry"},
                        {"duration": 2.0, "state": "rr"},
                    ],
                }
            )
        for a in ins:
            for b in outs:
                link = (f"tl_{node}", 0 if a.startswith("h") else 1) if signalled else None
                n.connect(f"{a}_0", f"{b}_0", node, signal=link)
    n.dump(name)


def diamond(name):
    """Entry edge, two alternative paths, exit edge. The upper path is
    longer in distance but faster in travel time."""
    n = Net()
    n.node("s", -100.0, 0.0)
    n.node("a", 0.0, 0.0)
    n.node("u", 100.0, 60.0)
    n.node("l", 100.0, -40.0)
    n.node("d", 200.0, 0.0)
    n.node("t", 300.0, 0.0)
    n.edge("in", "s", "a", 13.9, [[(-100.0, 0.0), (0.0, 0.0)]])
    n.edge("up1", "a", "u", 30.0, [[(0.0, 0.0), (100.0, 60.0)]])
    n.edge("up2", "u", "d", 30.0, [[(100.0, 60.0), (200.0, 0.0)]])
    n.edge("lo1", "a", "l", 10.0, [[(0.0, 0.0), (100.0, -40.0)]])
    n.edge("lo2", "l", "d", 10.0, [[(100.0, -40.0), (200.0, 0.0)]])
    n.edge("out", "d", "t", 13.9, [[(200.0, 0.0), (300.0, 0.0)]])
    n.edge("island", "t", "s", 13.9, [[(300.0, 50.0), (-100.0, 50.0)]])
    for a, b, via in [("in", "up1", "a"), ("in", "lo1", "a"), ("up1", "up2", "u"), ("lo1", "lo2", "l"),
                      ("up2", "out", "d"), ("lo2", "out", "d")]:
        n.connect(f"{a}_0", f"{b}_0", via, curve=False)
    n.dump(name)


SIGNAL_EW_FIRST = [
    {"duration": 60.0, "state": "Gr"},
    {"duration": 3.0, "state": "yr"},
    {"duration": 2.0, "state": "rr"},
    {"duration": 25.0, "state": "rG"},
    {"duration": 3.0, "state": "ry"},
    {"duration": 2.0, "state": "rr"},
]


def main():
    straight_road("practice.net.json", 2000.0, 2, 2, 13.89)
    straight_road("sudden_stop.net.json", 2000.0, 1, 1, 22.0)
    straight_road("sudden_lane_change.net.json", 2000.0, 2, 2, 22.0)
    straight_road("deer_crossing.net.json", 1500.0, 1, 1, 22.0)
    straight_road("jaywalker.net.json", 1000.0, 1, 1, 13.89)
    cross_junction("t_bone.net.json", 200.0, 13.89, minor="SN")
    cross_junction("red_light_runner.net.json", 200.0, 13.89, signal_phases=SIGNAL_EW_FIRST)
    roundabout("roundabout.net.json")
    ramp_merge("ramp_merge.net.json")
    ring("ring.net.json")
    grid("grid.net.json")
    diamond("diamond.net.json")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Generates the bundled scenario fixtures under scenarios/.

Usage: python3 tools/make_fixtures.py [output_dir]
"""
import json
import math
import sys
from pathlib import Path

DT = 0.1
HALF = 1.75  # half lane width


def r(v):
    return round(v, 6)


def lanelet(lid, center, successors=(), left=None, right=None, half=HALF):
    """Lanelet whose bounds are offset from a sampled centerline along its normals."""
    lb, rb = [], []
    n = len(center)
    for i, (x, y) in enumerate(center):
        a = center[max(i - 1, 0)]
        b = center[min(i + 1, n - 1)]
        tx, ty = b[0] - a[0], b[1] - a[1]
        norm = math.hypot(tx, ty)
        nx, ny = -ty / norm, tx / norm
        lb.append([r(x + half * nx), r(y + half * ny)])
        rb.append([r(x - half * nx), r(y - half * ny)])
    out = {"id": lid, "left_bound": lb, "right_bound": rb, "successors": list(successors)}
    if left is not None:
        out["adjacent_left"] = {"id": left[0], "same_direction": left[1]}
    if right is not None:
        out["adjacent_right"] = {"id": right[0], "same_direction": right[1]}
    return out


def straight(x0, y0, x1, y1, step=5.0):
    length = math.hypot(x1 - x0, y1 - y0)
    n = max(1, int(math.ceil(length / step)))
    return [(x0 + (x1 - x0) * i / n, y0 + (y1 - y0) * i / n) for i in range(n + 1)]


def arc(cx, cy, radius, a0, a1, step=1.0):
    n = max(2, int(math.ceil(abs(a1 - a0) * radius / step)))
    return [(cx + radius * math.cos(a0 + (a1 - a0) * i / n), cy + radius * math.sin(a0 + (a1 - a0) * i / n))
            for i in range(n + 1)]


def box(x0, y0, x1, y1):
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]


def state(x, y, v, th):
    return [r(x), r(y), r(v), r(th)]


def along(points, speeds):
    """Trajectory that follows a polyline with the given per-step speeds (distance = mean speed * dt)."""
    cum = [0.0]
    for a, b in zip(points, points[1:]):
        cum.append(cum[-1] + math.hypot(b[0] - a[0], b[1] - a[1]))

    def at(s):
        s = min(max(s, 0.0), cum[-1])
        for i in range(1, len(cum)):
            if s <= cum[i] or i == len(cum) - 1:
                t = (s - cum[i - 1]) / (cum[i] - cum[i - 1])
                a, b = points[i - 1], points[i]
                return a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), math.atan2(b[1] - a[1], b[0] - a[0])
        raise AssertionError

    traj, s = [], 0.0
    for k, v in enumerate(speeds):
        if k > 0:
            s += 0.5 * (speeds[k - 1] + v) * DT
        x, y, th = at(s)
        traj.append(state(x, y, v, th))
    return traj


def merge(orange_x=75.0, green_x=20.0, start=0.0):
    """Two-lane road with an on-ramp merging from the left into lane A."""
    lanelets = [
        lanelet(1, straight(start, 0, 100, 0), [2], left=(5, True), right=(3, True)),
        lanelet(2, straight(100, 0, 420, 0), [], right=(4, True)),
        lanelet(3, straight(start, -3.5, 100, -3.5), [4], left=(1, True)),
        lanelet(4, straight(100, -3.5, 420, -3.5), [], left=(2, True)),
        lanelet(5, straight(start, 3.5, 60, 3.5), [6], right=(1, True)),
    ]

    def ramp_y(x):
        u = min(max((x - 60) / 40, 0.0), 1.0)
        return 3.5 * (1 - (3 * u * u - 2 * u ** 3))

    def ramp_slope(x):
        u = min(max((x - 60) / 40, 0.0), 1.0)
        return -3.5 * (6 * u - 6 * u * u) / 40

    lanelets.append(lanelet(6, [(60 + 2 * i, ramp_y(60 + 2 * i)) for i in range(21)], [2]))

    # Orange drives the ramp; green follows lane A at constant speed.
    orange = {
        "id": 100,
        "initial_state": state(orange_x, ramp_y(orange_x), 10.0, math.atan(ramp_slope(orange_x))),
        "goal": {"polygon": box(220, -1.75, 280, 1.75), "t_max": 30.0},
    }
    steps = 181
    green = {
        "id": 200,
        "shape": {"length": 4.5, "width": 2.0},
        "trajectory": along(straight(green_x, 0, 420, 0, 1.0), [18.0] * steps),
    }
    return {"dt": DT, "lanelets": lanelets, "static_obstacles": [], "dynamic_obstacles": [green],
            "planning_problems": [orange]}


def t_intersection(green_y=-30.0, creep=3.0, t_go=3.0, accel=3.0, top=10.0, orange_x=-60.0):
    """Two-way main road along x with a two-way stem joining from the south."""
    j = 12.0  # half size of the junction box
    rl, rs = j + HALF, j - HALF  # outer and inner turn radii
    lanelets = [
        lanelet(1, straight(-150, -HALF, -j, -HALF), [2, 12]),            # E1
        lanelet(2, straight(-j, -HALF, j, -HALF), [3]),                   # E2
        lanelet(3, straight(j, -HALF, 150, -HALF), []),                   # E3
        lanelet(4, straight(150, HALF, j, HALF), [5, 13]),                # W1
        lanelet(5, straight(j, HALF, -j, HALF), [6]),                     # W2
        lanelet(6, straight(-j, HALF, -150, HALF), []),                   # W3
        lanelet(7, straight(HALF, -120, HALF, -j), [10, 11]),             # S1, northbound
        lanelet(8, straight(-HALF, -j, -HALF, -120), []),                 # S2, southbound
        lanelet(10, arc(-j, -j, rl, 0.0, math.pi / 2), [6]),              # S1 -> W3, left
        lanelet(11, arc(j, -j, rs, math.pi, math.pi / 2), [3]),           # S1 -> E3, right
        lanelet(12, arc(-j, -j, rs, math.pi / 2, 0.0), [8]),              # E1 -> S2, right
        lanelet(13, arc(j, -j, rl, math.pi / 2, math.pi), [8]),           # W1 -> S2, left
    ]

    orange = {
        "id": 100,
        "initial_state": state(orange_x, -HALF, 10.0, 0.0),
        "goal": {"polygon": box(60, -3.5, 100, 0), "t_max": 30.0},
    }
    # Green creeps toward the junction as if to yield, then turns left without yielding.
    path = straight(HALF, green_y, HALF, -j, 1.0) + arc(-j, -j, rl, 0.0, math.pi / 2, 0.5)[1:] \
        + straight(-j, HALF, -150, HALF, 1.0)[1:]
    steps = 161
    green = {
        "id": 200,
        "shape": {"length": 4.5, "width": 2.0},
        "trajectory": along(path, [min(top, creep + accel * max(0.0, k * DT - t_go)) for k in range(steps)]),
    }
    return {"dt": DT, "lanelets": lanelets, "static_obstacles": [], "dynamic_obstacles": [green],
            "planning_problems": [orange]}


def highway(per_lane=5, steps=201):
    """Straight six-lane road, three lanes per direction, filled with recorded traffic."""
    length = 1200.0
    lanelets = []
    east = [-HALF, -3 * HALF, -5 * HALF]
    west = [HALF, 3 * HALF, 5 * HALF]
    for i, y in enumerate(east):
        left = (i, True) if i > 0 else (4, False)
        right = (i + 2, True) if i < 2 else None
        lanelets.append(lanelet(i + 1, straight(0, y, length, y, 20.0), [], left=left, right=right))
    for i, y in enumerate(west):
        left = (i + 3, True) if i > 0 else (1, False)
        right = (i + 5, True) if i < 2 else None
        lanelets.append(lanelet(i + 4, straight(length, y, 0, y, 20.0), [], left=left, right=right))

    obstacles = []
    oid = 300
    speeds = [25.0, 22.0, 19.0]
    for k in range(per_lane):
        for lane in range(3):
            v = speeds[lane]
            x0 = 40.0 + 45.0 * k + 15.0 * lane
            for direction, ys in (("east", east), ("west", west)):
                y = ys[lane]
                if direction == "east":
                    pts = straight(x0, y, length, y, 5.0)
                else:
                    pts = straight(length - x0, y, 0, y, 5.0)
                obstacles.append({"id": oid, "shape": {"length": 4.5, "width": 2.0},
                                  "trajectory": along(pts, [v] * steps)})
                oid += 1
    return {"dt": DT, "lanelets": lanelets, "static_obstacles": [], "dynamic_obstacles": obstacles,
            "planning_problems": []}


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "scenarios"
    out.mkdir(parents=True, exist_ok=True)
    for name, doc in [("merge", merge()), ("t_intersection", t_intersection()), ("highway", highway())]:
        (out / f"{name}.json").write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main()

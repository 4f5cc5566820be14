#!/usr/bin/env python3
"""Waypoint-following reference controller.

Speaks the newline-delimited JSON protocol on stdin/stdout. Plans once on an
inflated copy of the occupancy grid, then tracks the path with pure pursuit,
turning in place when the heading error is large.
"""

import heapq
import json
import math
import struct
import sys
import zlib

SENSOR_RANGE = 60.0
AXLE_LENGTH = 10.0
N_RAYS = 16
V_MAX = 2.0
LOOKAHEAD = 5.0
TURN_IN_PLACE = 0.7
SQRT2 = math.sqrt(2.0)


def read_png_gray(path):
    """Occupancy PNG -> list of rows of 0/1 (1 = obstacle). 8-bit gray/RGB/RGBA only."""
    data = open(path, "rb").read()
    if data[:8] != b"\x89PNG\r\n\x1a\n":
        raise ValueError("not a PNG")
    pos, idat = 8, b""
    width = height = depth = ctype = None
    while pos < len(data):
        (length,) = struct.unpack(">I", data[pos:pos + 4])
        tag = data[pos + 4:pos + 8]
        body = data[pos + 8:pos + 8 + length]
        pos += 12 + length
        if tag == b"IHDR":
            width, height, depth, ctype, _, _, interlace = struct.unpack(">IIBBBBB", body)
            if depth != 8 or interlace != 0:
                raise ValueError("unsupported PNG layout")
        elif tag == b"IDAT":
            idat += body
        elif tag == b"IEND":
            break
    channels = {0: 1, 2: 3, 4: 2, 6: 4}[ctype]
    raw = zlib.decompress(idat)
    stride = width * channels
    prev = bytearray(stride)
    grid = []
    i = 0
    for _ in range(height):
        ftype = raw[i]
        line = bytearray(raw[i + 1:i + 1 + stride])
        i += 1 + stride
        for x in range(stride):
            a = line[x - channels] if x >= channels else 0
            b = prev[x]
            c = prev[x - channels] if x >= channels else 0
            if ftype == 1:
                line[x] = (line[x] + a) & 0xFF
            elif ftype == 2:
                line[x] = (line[x] + b) & 0xFF
            elif ftype == 3:
                line[x] = (line[x] + ((a + b) >> 1)) & 0xFF
            elif ftype == 4:
                p = a + b - c
                pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
                pred = a if pa <= pb and pa <= pc else (b if pb <= pc else c)
                line[x] = (line[x] + pred) & 0xFF
        prev = line
        grid.append([1 if line[x * channels] < 128 else 0 for x in range(width)])
    return grid


class Map:
    def __init__(self, cells):
        self.cells = cells
        self.h = len(cells)
        self.w = len(cells[0])

    def blocked(self, x, y):
        return not (0 <= x < self.w and 0 <= y < self.h) or self.cells[y][x] == 1

    def inflated(self, r):
        out = [row[:] for row in self.cells]
        offsets = [(dx, dy) for dy in range(-r, r + 1) for dx in range(-r, r + 1) if dx * dx + dy * dy <= r * r]
        for y in range(self.h):
            for x in range(self.w):
                if self.cells[y][x]:
                    for dx, dy in offsets:
                        nx, ny = x + dx, y + dy
                        if 0 <= nx < self.w and 0 <= ny < self.h:
                            out[ny][nx] = 1
        return Map(out)

    def nearest_free(self, x, y, max_rad):
        if not self.blocked(x, y):
            return [x, y]
        for r in range(1, max_rad + 1):
            for cy in range(y - r, y + r + 1):
                for cx in range(x - r, x + r + 1):
                    if max(abs(cx - x), abs(cy - y)) == r and not self.blocked(cx, cy):
                        return [cx, cy]
        return None

    def plan(self, a, b):
        ax, ay = a
        bx, by = b
        if self.blocked(ax, ay) or self.blocked(bx, by):
            return None

        def h(x, y):
            dx, dy = abs(x - bx), abs(y - by)
            return (dx + dy) + (SQRT2 - 2) * min(dx, dy)

        g = {(ax, ay): 0.0}
        parent = {}
        heap = [(h(ax, ay), 0, ax, ay)]
        counter = 1
        closed = set()
        while heap:
            _, _, x, y = heapq.heappop(heap)
            if (x, y) in closed:
                continue
            closed.add((x, y))
            if (x, y) == (bx, by):
                path = [[x, y]]
                while (x, y) in parent:
                    x, y = parent[(x, y)]
                    path.append([x, y])
                return path[::-1]
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    if dx == 0 and dy == 0:
                        continue
                    nx, ny = x + dx, y + dy
                    if self.blocked(nx, ny):
                        continue
                    if dx and dy and (self.blocked(x + dx, y) or self.blocked(x, y + dy)):
                        continue
                    ng = g[(x, y)] + (SQRT2 if dx and dy else 1.0)
                    if ng < g.get((nx, ny), math.inf):
                        g[(nx, ny)] = ng
                        parent[(nx, ny)] = (x, y)
                        heapq.heappush(heap, (ng + h(nx, ny), counter, nx, ny))
                        counter += 1
        return None


class Follower:
    def __init__(self, params, grid):
        global SENSOR_RANGE, AXLE_LENGTH, N_RAYS, V_MAX
        SENSOR_RANGE = float(params.get("sensor_range_px", SENSOR_RANGE))
        AXLE_LENGTH = float(params.get("axle_length_px", AXLE_LENGTH))
        N_RAYS = int(params.get("n_rays", N_RAYS))
        V_MAX = float(params.get("v_max", V_MAX))
        self.goal = tuple(params["goal"])
        self.map = grid
        self.path = None
        self.idx = 0

    def make_path(self, x, y):
        start = (int(round(x)), int(round(y)))
        goal = tuple(self.map.nearest_free(self.goal[0], self.goal[1], 50) or self.goal)
        for r in (3, 2, 1, 0):
            m = self.map.inflated(r) if r else self.map
            s = m.nearest_free(start[0], start[1], 6)
            gl = m.nearest_free(goal[0], goal[1], 10)
            if s is None or gl is None:
                continue
            p = m.plan(s, gl)
            if p:
                return [[float(px), float(py)] for px, py in p]
        return [[float(goal[0]), float(goal[1])]]

    def act(self, pose):
        x, y, theta = pose
        if self.path is None:
            self.path = self.make_path(x, y)
        # Advance to the closest point ahead of the current index.
        best, best_d = self.idx, math.inf
        for i in range(self.idx, min(len(self.path), self.idx + 40)):
            d = math.hypot(self.path[i][0] - x, self.path[i][1] - y)
            if d < best_d:
                best, best_d = i, d
        self.idx = best
        target = self.path[-1]
        for i in range(self.idx, len(self.path)):
            if math.hypot(self.path[i][0] - x, self.path[i][1] - y) >= LOOKAHEAD:
                target = self.path[i]
                break
        err = math.atan2(target[1] - y, target[0] - x) - theta
        err = math.atan2(math.sin(err), math.cos(err))
        if abs(err) > TURN_IN_PLACE:
            u = max(-V_MAX, min(V_MAX, err * AXLE_LENGTH / 2.0))
            return -u, u
        v = V_MAX * (1.0 - abs(err) / TURN_IN_PLACE * 0.6)
        w = err * 0.5
        vl, vr = v - w * AXLE_LENGTH / 2.0, v + w * AXLE_LENGTH / 2.0
        scale = max(1.0, abs(vl) / V_MAX, abs(vr) / V_MAX)
        return vl / scale, vr / scale


def send(msg):
    sys.stdout.write(json.dumps(msg) + "\n")
    sys.stdout.flush()


def main():
    follower = None
    grid = None
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        msg = json.loads(line)
        kind = msg.get("type")
        if kind == "init":
            grid = Map(read_png_gray(msg["grid_path"]))
            follower = Follower(msg["params"], grid)
            send({"type": "ready"})
        elif kind == "sense":
            vl, vr = follower.act(msg["pose"])
            send({"type": "act", "vl": vl, "vr": vr})
        elif kind == "query":
            op, args = msg.get("op"), msg.get("args", [])
            if op == "is_occupied":
                send({"type": "result", "value": grid.blocked(int(args[0]), int(args[1]))})
            elif op == "nearest_free":
                send({"type": "result", "value": grid.nearest_free(int(args[0]), int(args[1]), int(args[2]))})
            elif op == "plan_path":
                send({"type": "result", "value": grid.plan(tuple(args[0]), tuple(args[1]))})
            else:
                send({"type": "error", "code": "unsupported", "message": "unknown op " + str(op)})
        elif kind == "stop":
            break


if __name__ == "__main__":
    main()

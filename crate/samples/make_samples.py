"""Regenerates the bundled sample inputs. Run from the repository root."""

import json
import math
import random
from pathlib import Path

from PIL import Image

R = 6_371_000.0
M_PER_DEG = R * math.pi / 180.0
ROOT = Path(__file__).resolve().parent


def write_doc(path, header, nodes, edges, buildings=()):
    lines = [json.dumps(header)]
    lines += [json.dumps({"type": "node", "id": i, "coordinates": c}) for i, c in nodes]
    for e in edges:
        rec = {"type": "edge", "id": e[0], "nodes": [e[1], e[2]], "road_class": e[3]}
        if len(e) > 4:
            rec["width"] = e[4]
        lines.append(json.dumps(rec))
    lines += [json.dumps({"type": "building", **b}) for b in buildings]
    path.write_text("\n".join(lines) + "\n")


def grid3x3():
    d = ROOT / "grid3x3"
    d.mkdir(exist_ok=True)
    n, step = 4, 150.0
    nodes, edges = [], []
    nid = lambda i, j: 1 + j * n + i
    for j in range(n):
        for i in range(n):
            nodes.append((nid(i, j), [i * step, j * step]))
    eid = 1
    for j in range(n):
        for i in range(n - 1):
            edges.append((eid, nid(i, j), nid(i + 1, j), "secondary" if j == 1 else "residential"))
            eid += 1
    for i in range(n):
        for j in range(n - 1):
            edges.append((eid, nid(i, j), nid(i, j + 1), "residential"))
            eid += 1
    write_doc(d / "network.jsonl", {"type": "header", "crs": "local"}, nodes, edges)


def city1km():
    d = ROOT / "city1km"
    d.mkdir(exist_ok=True)
    rng = random.Random(20240601)
    origin = (-83.0, 40.0)
    cos0 = math.cos(math.radians(origin[1]))
    to_lonlat = lambda x, y: [round(origin[0] + x / (M_PER_DEG * cos0), 9), round(origin[1] + y / M_PER_DEG, 9)]

    xs = [-500, -375, -245, -120, 0, 125, 250, 375, 500]
    ys = [-500, -370, -250, -125, 0, 120, 245, 370, 500]
    nodes, edges = {}, []
    nid = lambda i, j: 1 + j * len(xs) + i
    for j, y in enumerate(ys):
        for i, x in enumerate(xs):
            jit = 0.0 if (i in (0, len(xs) - 1) or j in (0, len(ys) - 1) or (i == 4 and j == 4)) else 9.0
            nodes[nid(i, j)] = (x + rng.uniform(-jit, jit), y + rng.uniform(-jit, jit))
    eid = 1

    def cls_h(j, i):
        if j == 4:
            return "primary"
        if j in (0, len(ys) - 1):
            return "secondary"
        return "residential"

    def cls_v(i, j):
        if i == 4:
            return "secondary"
        if i in (0, len(xs) - 1):
            return "secondary"
        return "residential"

    spur_id = 1000
    for j in range(len(ys)):
        for i in range(len(xs) - 1):
            a, b = nid(i, j), nid(i + 1, j)
            if j in (2, 6) and i in (1, 6):
                # Mid-block node with a dead-end service lane.
                m = spur_id
                spur_id += 1
                (ax, ay), (bx, by) = nodes[a], nodes[b]
                nodes[m] = ((ax + bx) / 2, (ay + by) / 2)
                end = spur_id
                spur_id += 1
                nodes[end] = (nodes[m][0], nodes[m][1] + 45.0)
                edges += [(eid, a, m, cls_h(j, i)), (eid + 1, m, b, cls_h(j, i)), (eid + 2, m, end, "service")]
                eid += 3
            else:
                edges.append((eid, a, b, cls_h(j, i)))
                eid += 1
    for i in range(len(xs)):
        for j in range(len(ys) - 1):
            edges.append((eid, nid(i, j), nid(i, j + 1), cls_v(i, j)))
            eid += 1
    # Diagonal avenue; the planarizer splits it where it crosses the grid.
    edges.append((eid, nid(1, 1), nid(3, 3), "secondary"))
    eid += 1

    buildings = []
    for k in range(40):
        x, y = rng.uniform(-110, 110), rng.uniform(-110, 110)
        buildings.append({"coordinates": to_lonlat(x, y), "levels": rng.randint(4, 9)})
    for k in range(20):
        x, y = rng.uniform(-480, 480), rng.uniform(-480, 480)
        buildings.append({"coordinates": to_lonlat(x, y), "height": round(rng.uniform(6.0, 12.0), 1)})

    node_list = [(k, to_lonlat(*v)) for k, v in sorted(nodes.items())]
    write_doc(d / "network.jsonl", {"type": "header", "crs": "lonlat", "origin": list(origin)}, node_list, edges, buildings)

    cols = rows = 48
    cell, x0, y0 = 30.0, -705.0, -705.0
    lines = [f"ncols {cols}", f"nrows {rows}", f"xllcorner {x0}", f"yllcorner {y0}", f"cellsize {cell}", "nodata_value -9999"]
    for r in range(rows):
        y = y0 + (rows - r - 0.5) * cell
        row = []
        for c in range(cols):
            x = x0 + (c + 0.5) * cell
            row.append(f"{220.0 + 0.012 * x + 4.0 * math.sin(y / 180.0):.2f}")
        lines.append(" ".join(row))
    (d / "terrain.asc").write_text("\n".join(lines) + "\n")

    tex = d / "textures"
    tex.mkdir(exist_ok=True)
    trng = random.Random(7)

    def noise(name, base, amp, stripes=None):
        im = Image.new("RGB", (32, 32))
        px = im.load()
        for y in range(32):
            for x in range(32):
                k = trng.uniform(-amp, amp)
                if stripes and (y // stripes) % 2:
                    k -= amp
                px[x, y] = tuple(max(0, min(255, int(c + k))) for c in base)
        im.save(tex / f"{name}.png")

    noise("tiles", (150, 70, 45), 18, stripes=2)
    noise("asphalt", (52, 52, 55), 10)
    noise("grass", (62, 108, 42), 16)
    noise("gravel", (130, 126, 118), 22)


if __name__ == "__main__":
    grid3x3()
    city1km()

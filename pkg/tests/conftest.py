"""Shared test helpers: brute-force oracles and mesh checkers."""

import numpy as np


def iou_oracle(a: np.ndarray, b: np.ndarray) -> float:
    """Per-pixel counting IoU; both-empty defined as 1.0."""
    assert a.shape == b.shape
    inter = 0
    union = 0
    for y in range(a.shape[0]):
        for x in range(a.shape[1]):
            pa, pb = bool(a[y, x]), bool(b[y, x])
            if pa and pb:
                inter += 1
            if pa or pb:
                union += 1
    if union == 0:
        return 1.0
    return inter / union


def box_raster_oracle(x, y, w, h, width, height) -> np.ndarray:
    """Pixel-center rasterization of an axis-aligned box."""
    out = np.zeros((height, width), dtype=bool)
    for py in range(height):
        for px in range(width):
            cx, cy = px + 0.5, py + 0.5
            out[py, px] = x <= cx < x + w and y <= cy < y + h
    return out


def edge_use_counts(tris):
    """Undirected edge -> number of incident triangles."""
    counts = {}
    for i, j, k in tris:
        for a, b in ((i, j), (j, k), (k, i)):
            e = (min(a, b), max(a, b))
            counts[e] = counts.get(e, 0) + 1
    return counts


def assert_closed_manifold(verts, tris):
    """Every undirected edge in exactly 2 triangles, every directed edge
    used exactly once (consistent orientation)."""
    assert len(tris) > 0
    for n, c in edge_use_counts(tris).items():
        assert c == 2, f"edge {n} used {c} times"
    directed = set()
    for i, j, k in tris:
        for a, b in ((i, j), (j, k), (k, i)):
            assert (a, b) not in directed, f"directed edge {(a, b)} reused"
            directed.add((a, b))
    used = {v for t in tris for v in t}
    assert used == set(range(len(verts))), "unused or out-of-range vertices"


def parse_obj(data: bytes):
    """Parse our OBJ subset into {object_name: (verts, tris)} with
    per-object 0-based triangle indices."""
    objects = {}
    name = None
    all_verts = []
    obj_start = {}
    for line in data.decode().splitlines():
        if line.startswith("o "):
            name = line[2:]
            objects[name] = ([], [])
            obj_start[name] = len(all_verts)
        elif line.startswith("v "):
            xyz = tuple(float(v) for v in line[2:].split())
            all_verts.append(xyz)
            objects[name][0].append(xyz)
        elif line.startswith("f "):
            idx = [int(v) - 1 for v in line[2:].split()]
            base = obj_start[name]
            objects[name][1].append(tuple(i - base for i in idx))
    return objects

"""3D reconstruction: match door/window symbols to walls, fit openings,
extrude metric wall prisms and export OBJ / semantic JSON."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import raster
from .extraction import PipelineConfig, WallBox, wall_corners

OPENING_KINDS = ("door", "window")
MIN_OPENING_WIDTH_M = 0.1


class OpeningRejected(ValueError):
    pass


@dataclass(frozen=True)
class OpeningSymbol:
    """Detected door/window axis-aligned bbox in image pixels."""

    kind: str
    bbox: tuple[float, float, float, float]
    confidence: float = 1.0

    def __post_init__(self):
        if self.kind not in OPENING_KINDS:
            raise ValueError(f"kind must be door or window, got {self.kind!r}")
        if self.bbox[2] <= 0 or self.bbox[3] <= 0:
            raise ValueError("symbol bbox must have positive size")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError("confidence must be in [0, 1]")


@dataclass(frozen=True)
class Opening3D:
    wall_id: int
    kind: str
    along_offset_m: float
    width_m: float
    sill_m: float
    height_m: float


@dataclass(frozen=True)
class Wall3D:
    """A wall prism: metric base rectangle plus height and openings.

    base_polygon rows: (u=0,v=0), (u=L,v=0), (u=L,v=T), (u=0,v=T) where
    u is the wall's long axis (opening offsets measure along it) and v
    the thickness axis.
    """

    id: int
    base_polygon: tuple[tuple[float, float], ...]
    height_m: float
    openings: tuple[Opening3D, ...] = ()

    @property
    def length_m(self):
        p = self.base_polygon
        return math.hypot(p[1][0] - p[0][0], p[1][1] - p[0][1])

    @property
    def thickness_m(self):
        p = self.base_polygon
        return math.hypot(p[3][0] - p[0][0], p[3][1] - p[0][1])


@dataclass(frozen=True)
class Scene3D:
    walls: tuple[Wall3D, ...]
    scale_m_per_px: float
    unit: str = "m"


def match_openings(walls: list[WallBox], symbols: list[OpeningSymbol],
                   src_w: int, src_h: int):
    """Assign each symbol to the wall with the highest pixel overlap.

    Returns (matches, unmatched): matches is a list of
    (symbol_index, wall_id); symbols overlapping no wall land in
    unmatched."""
    from . import planio
    wall_masks = [(wall.id, planio.rasterize_walls([wall], src_w, src_h))
                  for wall in walls]
    matches = []
    unmatched = []
    for i, sym in enumerate(symbols):
        x, y, w, h = sym.bbox
        x0 = max(0, int(math.floor(x)))
        y0 = max(0, int(math.floor(y)))
        x1 = min(src_w, int(math.ceil(x + w)))
        y1 = min(src_h, int(math.ceil(y + h)))
        best = None
        for wid, m in sorted(wall_masks):
            ov = int(m[y0:y1, x0:x1].sum()) if x1 > x0 and y1 > y0 else 0
            if ov > 0 and (best is None or ov > best[0]):
                best = (ov, wid)
        if best is None:
            unmatched.append(i)
        else:
            matches.append((i, best[1]))
    return matches, unmatched


def fit_opening(symbol: OpeningSymbol, wall: WallBox, cfg: PipelineConfig,
                source_size: tuple[int, int] | None = None) -> Opening3D:
    """Project a symbol bbox onto its host wall's long axis and derive
    the metric opening. Heights come from the config; the opening depth
    is the wall thickness (through-hole)."""
    scale = cfg.pixel_scale_m_per_px
    length_px = wall.length
    if length_px * scale < MIN_OPENING_WIDTH_M:
        raise OpeningRejected(
            f"wall {wall.id} is shorter ({length_px * scale:.3f} m) than the "
            f"minimum opening width")

    x, y, w, h = symbol.bbox
    corners = np.array([[x, y], [x + w, y], [x + w, y + h], [x, y + h]],
                       dtype=np.float64)
    if wall.frame_angle_deg != 0.0:
        if source_size is None:
            raise ValueError("source_size required for rotated-frame walls")
        amap = raster.rotation_map(source_size[0], source_size[1],
                                   -wall.frame_angle_deg)
        corners = amap.apply_forward(corners)
    if wall.orientation == "horizontal":
        proj = corners[:, 0]
        start = wall.x
    else:
        proj = corners[:, 1]
        start = wall.y

    extent_px = float(proj.max() - proj.min())
    width_px = min(max(extent_px, MIN_OPENING_WIDTH_M / scale), length_px)
    center_px = float((proj.max() + proj.min()) / 2.0)
    along_px = center_px - width_px / 2.0 - start
    along_px = min(max(along_px, 0.0), length_px - width_px)

    if symbol.kind == "door":
        sill = 0.0
        height = min(cfg.door_height_m, cfg.wall_height_m)
    else:
        sill = min(cfg.window_sill_m, cfg.wall_height_m)
        height = min(cfg.window_height_m, cfg.wall_height_m - sill)
    return Opening3D(wall_id=wall.id, kind=symbol.kind,
                     along_offset_m=along_px * scale,
                     width_m=width_px * scale,
                     sill_m=sill, height_m=height)


def _merge_openings(openings: list[Opening3D]) -> tuple[Opening3D, ...]:
    """Merge openings whose along-axis intervals overlap into their
    bounding interval; a merge involving a door stays a door."""
    if not openings:
        return ()
    items = sorted(openings, key=lambda o: o.along_offset_m)
    merged = [items[0]]
    for o in items[1:]:
        last = merged[-1]
        if o.along_offset_m < last.along_offset_m + last.width_m:
            a = last.along_offset_m
            b = max(last.along_offset_m + last.width_m,
                    o.along_offset_m + o.width_m)
            sill = min(last.sill_m, o.sill_m)
            top = max(last.sill_m + last.height_m, o.sill_m + o.height_m)
            kind = "door" if "door" in (last.kind, o.kind) else "window"
            merged[-1] = Opening3D(wall_id=last.wall_id, kind=kind,
                                   along_offset_m=a, width_m=b - a,
                                   sill_m=sill, height_m=top - sill)
        else:
            merged.append(o)
    return tuple(merged)


def build_scene(walls: list[WallBox], openings: list[Opening3D],
                cfg: PipelineConfig,
                source_size: tuple[int, int] | None = None) -> Scene3D:
    """Extrude walls into metric prisms with their openings attached."""
    scale = cfg.pixel_scale_m_per_px
    by_wall: dict[int, list[Opening3D]] = {}
    for o in openings:
        by_wall.setdefault(o.wall_id, []).append(o)
    out = []
    for wall in sorted(walls, key=lambda b: b.id):
        sw, sh = source_size if source_size is not None else (0, 0)
        c = wall_corners(wall, sw, sh)
        if wall.orientation == "horizontal":
            poly = (c[0], c[1], c[2], c[3])
        else:
            poly = (c[0], c[3], c[2], c[1])
        poly_m = tuple((float(p[0] * scale), float(p[1] * scale)) for p in poly)
        out.append(Wall3D(
            id=wall.id, base_polygon=poly_m, height_m=cfg.wall_height_m,
            openings=_merge_openings(by_wall.get(wall.id, []))))
    return Scene3D(walls=tuple(out), scale_m_per_px=scale)


# ---------------------------------------------------------------------------
# OBJ export

def _wall_mesh(wall: Wall3D):
    """Vertices and triangles of one wall prism in world coordinates.

    Local frame: u along the wall, v across the thickness, z up.
    Returns (verts: list[(x, y, z)], tris: list[(i, j, k)] 0-based).
    """
    p = np.asarray(wall.base_polygon, dtype=np.float64)
    L = wall.length_m
    T = wall.thickness_m
    H = wall.height_m
    u_dir = (p[1] - p[0]) / L if L > 0 else np.array([1.0, 0.0])
    v_dir = (p[3] - p[0]) / T if T > 0 else np.array([0.0, 1.0])

    def world(u, v, z):
        xy = p[0] + u * u_dir + v * v_dir
        return (float(xy[0]), float(xy[1]), float(z))

    def snap(x, hi):
        # clamp to [0, hi] and collapse float noise so breakpoints a
        # hair's breadth from the wall extents don't create sliver cells
        x = max(0.0, min(x, hi))
        if x < 1e-9:
            return 0.0
        if hi - x < 1e-9:
            return hi
        return x

    ops = []
    for o in wall.openings:
        a = snap(o.along_offset_m, L)
        b = snap(o.along_offset_m + o.width_m, L)
        s = snap(o.sill_m, H)
        t = snap(o.sill_m + o.height_m, H)
        if b > a and t > s:
            ops.append((a, b, s, t))

    if not ops:
        return _box_mesh(world, L, T, H)
    if len(ops) == 1:
        a, b, s, t = ops[0]
        if 0 < a and b < L and t < H:
            if s == 0:
                return _notch_mesh(world, L, T, H, a, b, t)
            return _ring_mesh(world, L, T, H, a, b, s, t)
    return _grid_mesh(world, L, T, H, ops)


def _quad(tris, i, j, k, l):
    tris.append((i, j, k))
    tris.append((i, k, l))


def _box_mesh(world, L, T, H):
    verts = [world(0, 0, 0), world(L, 0, 0), world(L, T, 0), world(0, T, 0),
             world(0, 0, H), world(L, 0, H), world(L, T, H), world(0, T, H)]
    tris = []
    _quad(tris, 0, 3, 2, 1)  # bottom
    _quad(tris, 4, 5, 6, 7)  # top
    _quad(tris, 0, 1, 5, 4)  # v=0 face
    _quad(tris, 2, 3, 7, 6)  # v=T face
    _quad(tris, 3, 0, 4, 7)  # u=0 end
    _quad(tris, 1, 2, 6, 5)  # u=L end
    return verts, tris


def _notch_mesh(world, L, T, H, a, b, t):
    """Single floor-touching opening (a door): 16 vertices, 28 triangles."""
    verts = [
        world(0, 0, 0), world(L, 0, 0), world(L, 0, H), world(0, 0, H),  # 0-3
        world(0, T, 0), world(L, T, 0), world(L, T, H), world(0, T, H),  # 4-7
        world(a, 0, 0), world(b, 0, 0), world(b, 0, t), world(a, 0, t),  # 8-11
        world(a, T, 0), world(b, T, 0), world(b, T, t), world(a, T, t),  # 12-15
    ]
    tris = []

    def octagon(c1, c2, c3, c4, n1, n2, n3, n4):
        # face rectangle c1..c4 minus a notch n1..n4 cut from the c1-c2 edge
        tris.extend([(c4, c1, n1), (c4, n1, n4), (c4, n4, n3),
                     (c4, n3, c3), (n3, n2, c2), (n3, c2, c3)])

    octagon(0, 1, 2, 3, 8, 9, 10, 11)   # v=0 face
    octagon(5, 4, 7, 6, 13, 12, 15, 14)  # v=T face, mirrored winding
    _quad(tris, 3, 2, 6, 7)    # top
    _quad(tris, 4, 12, 8, 0)   # bottom left of door
    _quad(tris, 13, 5, 1, 9)   # bottom right of door
    _quad(tris, 3, 7, 4, 0)    # u=0 end
    _quad(tris, 5, 6, 2, 1)    # u=L end
    _quad(tris, 15, 14, 10, 11)  # lintel
    _quad(tris, 12, 15, 11, 8)   # jamb u=a
    _quad(tris, 14, 13, 9, 10)   # jamb u=b
    return verts, tris


def _ring_mesh(world, L, T, H, a, b, s, t):
    """Single interior opening (a window): 16 vertices, 32 triangles."""
    verts = [
        world(0, 0, 0), world(L, 0, 0), world(L, 0, H), world(0, 0, H),  # 0-3
        world(0, T, 0), world(L, T, 0), world(L, T, H), world(0, T, H),  # 4-7
        world(a, 0, s), world(b, 0, s), world(b, 0, t), world(a, 0, t),  # 8-11
        world(a, T, s), world(b, T, s), world(b, T, t), world(a, T, t),  # 12-15
    ]
    tris = []

    def ring(c1, c2, c3, c4, n1, n2, n3, n4):
        # face rectangle minus an interior hole, both in matching order
        tris.extend([
            (c1, c2, n2), (c1, n2, n1),
            (c2, c3, n3), (c2, n3, n2),
            (c3, c4, n4), (c3, n4, n3),
            (c4, c1, n1), (c4, n1, n4),
        ])

    ring(0, 1, 2, 3, 8, 9, 10, 11)
    ring(4, 7, 6, 5, 12, 15, 14, 13)  # v=T face, mirrored winding
    _quad(tris, 0, 3, 7, 4)    # u=0 end
    _quad(tris, 5, 6, 2, 1)    # u=L end
    _quad(tris, 4, 5, 1, 0)    # bottom
    _quad(tris, 3, 2, 6, 7)    # top
    _quad(tris, 8, 9, 13, 12)    # sill
    _quad(tris, 15, 14, 10, 11)  # lintel
    _quad(tris, 12, 15, 11, 8)   # jamb u=a
    _quad(tris, 9, 10, 14, 13)   # jamb u=b
    return verts, tris


def _grid_mesh(world, L, T, H, ops):
    """General case: grid over all opening breakpoints, cells covered by
    an opening are omitted; tunnel faces close the holes."""
    us = sorted({0.0, L} | {v for a, b, _, _ in ops for v in (a, b)})
    zs = sorted({0.0, H} | {v for _, _, s, t in ops for v in (s, t)})
    verts = []
    vid = {}

    def vert(u, v, z):
        key = (round(u, 9), round(v, 9), round(z, 9))
        if key not in vid:
            vid[key] = len(verts)
            verts.append(world(u, v, z))
        return vid[key]

    def solid(ui, zi):
        if ui < 0 or zi < 0 or ui >= len(us) - 1 or zi >= len(zs) - 1:
            return False  # outside the wall slab
        cu = (us[ui] + us[ui + 1]) / 2
        cz = (zs[zi] + zs[zi + 1]) / 2
        return not any(a < cu < b and s < cz < t for a, b, s, t in ops)

    tris = []
    # long faces over solid cells
    for ui in range(len(us) - 1):
        for zi in range(len(zs) - 1):
            if not solid(ui, zi):
                continue
            u0, u1 = us[ui], us[ui + 1]
            z0, z1 = zs[zi], zs[zi + 1]
            _quad(tris, vert(u0, 0, z0), vert(u1, 0, z0),
                  vert(u1, 0, z1), vert(u0, 0, z1))
            _quad(tris, vert(u0, T, z0), vert(u0, T, z1),
                  vert(u1, T, z1), vert(u1, T, z0))
    # vertical planes: a face wherever solidity flips across u=us[ui]
    for ui in range(len(us)):
        u = us[ui]
        for zi in range(len(zs) - 1):
            left, right = solid(ui - 1, zi), solid(ui, zi)
            if left == right:
                continue
            z0, z1 = zs[zi], zs[zi + 1]
            if right:  # solid on the +u side, normal points -u
                _quad(tris, vert(u, 0, z0), vert(u, 0, z1),
                      vert(u, T, z1), vert(u, T, z0))
            else:      # solid on the -u side, normal points +u
                _quad(tris, vert(u, T, z0), vert(u, T, z1),
                      vert(u, 0, z1), vert(u, 0, z0))
    # horizontal planes: a face wherever solidity flips across z=zs[zi]
    for zi in range(len(zs)):
        z = zs[zi]
        for ui in range(len(us) - 1):
            below, above = solid(ui, zi - 1), solid(ui, zi)
            if below == above:
                continue
            u0, u1 = us[ui], us[ui + 1]
            if above:  # solid on top, normal points down
                _quad(tris, vert(u0, 0, z), vert(u0, T, z),
                      vert(u1, T, z), vert(u1, 0, z))
            else:      # solid below, normal points up
                _quad(tris, vert(u0, 0, z), vert(u1, 0, z),
                      vert(u1, T, z), vert(u0, T, z))
    return verts, tris


def export_obj(scene: Scene3D, config_hash: str = "") -> bytes:
    """ASCII OBJ of the scene; deterministic vertex and face order
    (walls by id, each wall's canonical local ordering)."""
    lines = ["# planvec 3D model export"]
    if config_hash:
        lines.append(f"# config={config_hash}")
    base = 0
    for wall in sorted(scene.walls, key=lambda w: w.id):
        verts, tris = _wall_mesh(wall)
        lines.append(f"o wall_{wall.id}")
        for x, y, z in verts:
            lines.append(f"v {x:.6f} {y:.6f} {z:.6f}")
        for i, j, k in tris:
            lines.append(f"f {base + i + 1} {base + j + 1} {base + k + 1}")
        base += len(verts)
    return ("\n".join(lines) + "\n").encode()


# ---------------------------------------------------------------------------
# semantic JSON export

def export_semantic_json(scene: Scene3D) -> bytes:
    doc = {
        "unit": scene.unit,
        "scale": round(scene.scale_m_per_px, 6),
        "walls": [
            {
                "id": w.id,
                "footprint": [[round(x, 6), round(y, 6)]
                              for x, y in w.base_polygon],
                "height": round(w.height_m, 6),
                "openings": [
                    {"kind": o.kind,
                     "along_offset": round(o.along_offset_m, 6),
                     "width": round(o.width_m, 6),
                     "sill": round(o.sill_m, 6),
                     "height": round(o.height_m, 6)}
                    for o in w.openings
                ],
            }
            for w in sorted(scene.walls, key=lambda w: w.id)
        ],
    }
    return json.dumps(doc, separators=(",", ":")).encode()


def import_semantic_json(data: bytes | str) -> Scene3D:
    doc = json.loads(data)
    walls = []
    for w in doc["walls"]:
        openings = tuple(
            Opening3D(wall_id=int(w["id"]), kind=o["kind"],
                      along_offset_m=float(o["along_offset"]),
                      width_m=float(o["width"]), sill_m=float(o["sill"]),
                      height_m=float(o["height"]))
            for o in w.get("openings", []))
        walls.append(Wall3D(
            id=int(w["id"]),
            base_polygon=tuple((float(x), float(y)) for x, y in w["footprint"]),
            height_m=float(w["height"]), openings=openings))
    return Scene3D(walls=tuple(walls), scale_m_per_px=float(doc["scale"]),
                   unit=doc["unit"])

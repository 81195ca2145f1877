"""Plan I/O, evaluation metrics, SVG visualization, and the synthetic
plan generator used as a ground-truth oracle."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import boxfit
from .extraction import WallBox, wall_corners
from .reconstruct3d import OpeningSymbol


class ParseError(ValueError):
    pass


class GenerationError(ValueError):
    pass


@dataclass
class PlanVectorization:
    source_width: int
    source_height: int
    walls: list[WallBox]
    symbols: list[OpeningSymbol] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class MetricsReport:
    mask_iou: float | None = None
    vectorized_iou: float | None = None
    wall_count: int | None = None

    def to_dict(self):
        out = {}
        if self.mask_iou is not None:
            out["mask_iou"] = round(self.mask_iou, 6)
        if self.vectorized_iou is not None:
            out["vectorized_iou"] = round(self.vectorized_iou, 6)
        if self.wall_count is not None:
            out["wall_count"] = self.wall_count
        return out


@dataclass(frozen=True)
class SynthSpec:
    seed: int = 0
    canvas: tuple[int, int] = (512, 512)
    n_rect_walls: int = 8
    wall_thickness_px: tuple[int, int] = (6, 10)
    inclined_wing: float | None = None
    noise_speckle_density: float = 0.0
    hole_density: float = 0.0
    n_doors: int = 0
    n_windows: int = 0


# ---------------------------------------------------------------------------
# mask loading / saving

def load_mask(data: bytes, fmt: str | None = None) -> np.ndarray:
    """Decode a PGM (P5) or PNG image into a binary mask; a pixel is
    foreground iff its luminance exceeds 127."""
    if fmt is None:
        fmt = "png" if data[:8] == b"\x89PNG\r\n\x1a\n" else "pgm"
    if fmt == "pgm":
        return _load_pgm(data)
    if fmt == "png":
        return _load_png(data)
    raise ParseError(f"unsupported format {fmt!r}")


def _load_pgm(data: bytes) -> np.ndarray:
    pos = 0

    def token():
        nonlocal pos
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            return token()
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ParseError(f"truncated PGM header at byte {start}")
        return data[start:pos]

    magic = token()
    if magic != b"P5":
        raise ParseError(f"not a P5 PGM (magic {magic!r} at byte 0)")
    try:
        w = int(token())
        h = int(token())
        maxval = int(token())
    except ValueError as e:
        raise ParseError(f"bad PGM header near byte {pos}: {e}") from None
    if maxval != 255:
        raise ParseError(f"unsupported PGM maxval {maxval} (only 8-bit)")
    pos += 1  # single whitespace after maxval
    pixels = data[pos:pos + w * h]
    if len(pixels) < w * h:
        raise ParseError(
            f"truncated PGM pixel data at byte {pos + len(pixels)}"
            f" (need {w * h} bytes)")
    arr = np.frombuffer(pixels, dtype=np.uint8).reshape(h, w)
    return arr > 127


def _load_png(data: bytes) -> np.ndarray:
    from PIL import Image, UnidentifiedImageError
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except UnidentifiedImageError as e:
        raise ParseError(f"cannot decode PNG: {e}") from None
    except OSError as e:
        raise ParseError(f"corrupt PNG: {e}") from None
    if img.mode not in ("1", "L", "LA", "RGB", "RGBA", "P", "I;16"):
        raise ParseError(f"unsupported PNG mode {img.mode}")
    gray = img.convert("L")
    return np.asarray(gray) > 127


def save_pgm(mask: np.ndarray) -> bytes:
    h, w = mask.shape
    header = f"P5\n{w} {h}\n255\n".encode()
    return header + (mask.astype(np.uint8) * 255).tobytes()


# ---------------------------------------------------------------------------
# symbols

def load_symbols(data: bytes | str) -> list[OpeningSymbol]:
    """Parse the door/window symbol JSON array."""
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(f"symbols file is not valid JSON: {e}") from None
    if not isinstance(doc, list):
        raise ParseError("symbols document must be a JSON array")
    out = []
    for i, entry in enumerate(doc):
        if not isinstance(entry, dict):
            raise ParseError(f"symbol {i}: expected an object")
        try:
            kind = entry["kind"]
            x, y = float(entry["x"]), float(entry["y"])
            w, h = float(entry["w"]), float(entry["h"])
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"symbol {i}: {e}") from None
        conf = float(entry.get("confidence", 1.0))
        try:
            out.append(OpeningSymbol(kind=kind, bbox=(x, y, w, h), confidence=conf))
        except ValueError as e:
            raise ParseError(f"symbol {i}: {e}") from None
    return out


def dump_symbols(symbols: list[OpeningSymbol]) -> bytes:
    doc = [
        {"kind": s.kind, "x": round(s.bbox[0], 6), "y": round(s.bbox[1], 6),
         "w": round(s.bbox[2], 6), "h": round(s.bbox[3], 6),
         "confidence": round(s.confidence, 6)}
        for s in symbols
    ]
    return (json.dumps(doc, indent=2) + "\n").encode()


# ---------------------------------------------------------------------------
# rasterization & metrics

def rasterize_walls(walls: list[WallBox], width: int, height: int) -> np.ndarray:
    """Union of the walls' rasterizations (pixel-center inclusion),
    clipped to a width x height canvas."""
    out = np.zeros((height, width), dtype=bool)
    for wall in walls:
        if wall.frame_angle_deg == 0.0:
            x0, x1 = boxfit._pixel_range(wall.x, wall.x + wall.w)
            y0, y1 = boxfit._pixel_range(wall.y, wall.y + wall.h)
            out[max(0, y0):max(0, y1), max(0, x0):max(0, x1)] = True
            continue
        corners = wall_corners(wall, width, height)
        bx0 = max(0, int(math.floor(corners[:, 0].min())))
        bx1 = min(width, int(math.ceil(corners[:, 0].max())) + 1)
        by0 = max(0, int(math.floor(corners[:, 1].min())))
        by1 = min(height, int(math.ceil(corners[:, 1].max())) + 1)
        if bx1 <= bx0 or by1 <= by0:
            continue
        gx, gy = np.meshgrid(np.arange(bx0, bx1) + 0.5,
                             np.arange(by0, by1) + 0.5)
        inside = np.ones(gx.shape, dtype=bool)
        for k in range(4):
            p = corners[k]
            q = corners[(k + 1) % 4]
            cross = (q[0] - p[0]) * (gy - p[1]) - (q[1] - p[1]) * (gx - p[0])
            inside &= cross >= -1e-9
        out[by0:by1, bx0:bx1] |= inside
    return out


def mean_iou(pred: np.ndarray, gt: np.ndarray) -> float:
    """Pixel IoU of two masks; both-empty is defined as 1.0."""
    if pred.shape != gt.shape:
        raise ValueError(f"dimension mismatch: {pred.shape} vs {gt.shape}")
    inter = int((pred & gt).sum())
    union = int((pred | gt).sum())
    if union == 0:
        return 1.0
    return inter / union


def crop_to_extent(image: np.ndarray, gt_mask: np.ndarray, pad: int = 2):
    """Crop both inputs to the ground-truth foreground extent plus a
    2 px pad. Returns (cropped_image, cropped_gt, diagnostics)."""
    if image.shape != gt_mask.shape:
        raise ValueError(f"dimension mismatch: {image.shape} vs {gt_mask.shape}")
    ys, xs = np.nonzero(gt_mask)
    if len(xs) == 0:
        return image, gt_mask, ["crop_to_extent: empty ground truth, not cropped"]
    h, w = gt_mask.shape
    x0 = max(0, int(xs.min()) - pad)
    x1 = min(w, int(xs.max()) + 1 + pad)
    y0 = max(0, int(ys.min()) - pad)
    y1 = min(h, int(ys.max()) + 1 + pad)
    return image[y0:y1, x0:x1], gt_mask[y0:y1, x0:x1], []


# ---------------------------------------------------------------------------
# SVG

_WALL_FILL = "#00A000"
_KIND_FILL = {"door": "#0000FF", "window": "#FF0000"}


def emit_svg(plan: PlanVectorization) -> bytes:
    """Walls in green, doors in blue, windows in red; deterministic
    element order (walls by id, then symbols in input order)."""
    w, h = plan.source_width, plan.source_height
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="0 0 {w} {h}">',
    ]
    for wall in sorted(plan.walls, key=lambda b: b.id):
        corners = wall_corners(wall, w, h)
        e1 = corners[1] - corners[0]
        bw = float(np.hypot(*e1))
        bh = float(np.hypot(*(corners[3] - corners[0])))
        cx, cy = corners.mean(axis=0)
        phi = math.degrees(math.atan2(e1[1], e1[0]))
        lines.append(
            f'<rect x="{cx - bw / 2:.3f}" y="{cy - bh / 2:.3f}" '
            f'width="{bw:.3f}" height="{bh:.3f}" fill="{_WALL_FILL}" '
            f'transform="rotate({phi:.3f} {cx:.3f} {cy:.3f})"/>')
    for sym in plan.symbols:
        x, y, sw, sh = sym.bbox
        fill = _KIND_FILL[sym.kind]
        lines.append(
            f'<rect x="{x:.3f}" y="{y:.3f}" width="{sw:.3f}" '
            f'height="{sh:.3f}" fill="{fill}"/>')
    lines.append("</svg>")
    return ("\n".join(lines) + "\n").encode()


# ---------------------------------------------------------------------------
# plan JSON (the vectorize -> reconstruct interchange file)

def plan_to_json(plan: PlanVectorization) -> bytes:
    doc = {
        "source_width": plan.source_width,
        "source_height": plan.source_height,
        "walls": [
            {"id": b.id, "frame_angle_deg": round(b.frame_angle_deg, 6),
             "x": round(b.x, 6), "y": round(b.y, 6),
             "w": round(b.w, 6), "h": round(b.h, 6),
             "orientation": b.orientation}
            for b in sorted(plan.walls, key=lambda b: b.id)
        ],
        "symbols": [
            {"kind": s.kind, "x": round(s.bbox[0], 6), "y": round(s.bbox[1], 6),
             "w": round(s.bbox[2], 6), "h": round(s.bbox[3], 6),
             "confidence": round(s.confidence, 6)}
            for s in plan.symbols
        ],
        "diagnostics": plan.diagnostics,
    }
    return (json.dumps(doc, indent=2) + "\n").encode()


def plan_from_json(data: bytes | str) -> PlanVectorization:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(f"plan file is not valid JSON: {e}") from None
    try:
        walls = [
            WallBox(int(w["id"]), float(w["frame_angle_deg"]),
                    float(w["x"]), float(w["y"]), float(w["w"]), float(w["h"]))
            for w in doc["walls"]
        ]
        symbols = [
            OpeningSymbol(kind=s["kind"],
                          bbox=(float(s["x"]), float(s["y"]),
                                float(s["w"]), float(s["h"])),
                          confidence=float(s.get("confidence", 1.0)))
            for s in doc.get("symbols", [])
        ]
        return PlanVectorization(
            source_width=int(doc["source_width"]),
            source_height=int(doc["source_height"]),
            walls=walls, symbols=symbols,
            diagnostics=list(doc.get("diagnostics", [])))
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"invalid plan document: {e}") from None


# ---------------------------------------------------------------------------
# synthetic plans

def synth_plan(spec: SynthSpec):
    """Deterministic synthetic floor plan: rectilinear perimeter plus
    internal partitions, optional inclined wing, door/window gaps, then
    speckle/hole degradation. Returns (mask, truth_walls, truth_symbols);
    the clean mask equals rasterize_walls(truth_walls) exactly."""
    w, h = spec.canvas
    if w < 64 or h < 64:
        raise GenerationError("canvas must be at least 64x64")
    if spec.n_rect_walls < 4:
        raise GenerationError("need at least the 4 perimeter walls")
    rng = np.random.default_rng(spec.seed)
    tlo, thi = spec.wall_thickness_px

    def thickness():
        return int(rng.integers(tlo, thi + 1))

    rects = []  # axis-aligned (x, y, w, h)
    t_top, t_bot, t_left, t_right = (thickness() for _ in range(4))
    rects.append((0, 0, w, t_top))
    rects.append((0, h - t_bot, w, t_bot))
    rects.append((0, 0, t_left, h))
    rects.append((w - t_right, 0, t_right, h))

    n_internal = spec.n_rect_walls - 4
    gap = 48  # min spacing between parallel partitions
    v_slots = list(range(t_left + gap, w - t_right - gap - thi, 8))
    h_slots = list(range(t_top + gap, h - t_bot - gap - thi, 8))
    used_v: list[int] = []
    used_h: list[int] = []
    for i in range(n_internal):
        placed = False
        for vertical in (True, False) if i % 2 == 0 else (False, True):
            slots = v_slots if vertical else h_slots
            used = used_v if vertical else used_h
            free = [s for s in slots if all(abs(s - u) >= gap for u in used)]
            if not free:
                continue
            pos = int(free[rng.integers(0, len(free))])
            used.append(pos)
            t = thickness()
            if vertical:
                rects.append((pos, t_top, t, h - t_top - t_bot))
            else:
                rects.append((t_left, pos, w - t_left - t_right, t))
            placed = True
            break
        if not placed:
            raise GenerationError(
                f"cannot place {n_internal} partitions on a {w}x{h} canvas")

    # cut door/window gaps: split a host rect in two, record the symbol
    symbols = []
    kinds = ["door"] * spec.n_doors + ["window"] * spec.n_windows
    cuttable = list(range(4, len(rects))) or [0, 1]
    for k, kind in enumerate(kinds):
        idx = int(cuttable[int(rng.integers(0, len(cuttable)))])
        x, y, rw, rh = rects[idx]
        opening = 40 if kind == "door" else 50
        horizontal = rw >= rh
        length = rw if horizontal else rh
        if length < opening + 2 * 20:
            continue
        start = int(rng.integers(20, length - opening - 20))
        if horizontal:
            rects[idx] = (x, y, start, rh)
            rects.append((x + start + opening, y, rw - start - opening, rh))
            bbox = (x + start - 4, y, opening + 8, rh)
        else:
            rects[idx] = (x, y, rw, start)
            rects.append((x, y + start + opening, rw, rh - start - opening))
            bbox = (x, y + start - 4, rw, opening + 8)
        symbols.append(OpeningSymbol(kind=kind, bbox=tuple(float(v) for v in bbox)))

    walls = [WallBox(i, 0.0, float(r[0]), float(r[1]), float(r[2]), float(r[3]))
             for i, r in enumerate(rects)]

    if spec.inclined_wing is not None:
        ang = float(spec.inclined_wing) % 90.0
        t = thickness()
        length = min(w, h) // 3
        cx, cy = w * 0.5, h * 0.5
        from .raster import rotation_map
        amap = rotation_map(w, h, -ang)
        rc = amap.apply_forward([(cx, cy)])[0]
        walls.append(WallBox(len(walls), ang,
                             float(rc[0] - length / 2), float(rc[1] - t / 2),
                             float(length), float(t)))

    clean = rasterize_walls(walls, w, h)
    mask = clean.copy()
    if spec.noise_speckle_density > 0:
        speckle = rng.random((h, w)) < spec.noise_speckle_density
        mask |= speckle & ~clean
    if spec.hole_density > 0:
        holes = rng.random((h, w)) < spec.hole_density
        mask &= ~(holes & clean)
    return mask, walls, symbols

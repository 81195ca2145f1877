"""Greedy rectangle fitting of wall components.

A component is vectorized by shrinking its bounding box one pixel at a
time from whichever side most improves IoU against the component's
pixels, then recursively fitting large leftover chunks. Overlaps between
the resulting boxes are resolved by minimum-information-loss trims.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import raster


@dataclass(frozen=True)
class Region:
    """Cropped component pixels plus the crop's offset in its frame."""

    mask: np.ndarray
    offset: tuple[int, int]


@dataclass(frozen=True)
class FitBox:
    x: float
    y: float
    w: float
    h: float
    achieved_iou: float


def _pixel_range(lo, hi):
    """Integer pixels i whose center i+0.5 lies in [lo, hi)."""
    a = math.ceil(lo - 0.5)
    b = math.ceil(hi - 0.5)
    return a, max(a, b)


def _integral(mask):
    ii = np.zeros((mask.shape[0] + 1, mask.shape[1] + 1), dtype=np.int64)
    np.cumsum(np.cumsum(mask, axis=0), axis=1, out=ii[1:, 1:])
    return ii


def _ii_sum(ii, x0, y0, x1, y1):
    h, w = ii.shape[0] - 1, ii.shape[1] - 1
    x0 = min(max(x0, 0), w)
    x1 = min(max(x1, 0), w)
    y0 = min(max(y0, 0), h)
    y1 = min(max(y1, 0), h)
    if x1 <= x0 or y1 <= y0:
        return 0
    return int(ii[y1, x1] - ii[y0, x1] - ii[y1, x0] + ii[y0, x0])


def region_box_iou(region: Region, box: FitBox) -> float:
    """IoU between a box (pixel-center rasterization) and the region's
    foreground pixels, both in the region's frame."""
    if box.w <= 0 or box.h <= 0:
        raise ValueError("box must have positive area")
    ox, oy = region.offset
    wall = int(region.mask.sum())
    bx0, bx1 = _pixel_range(box.x - ox, box.x - ox + box.w)
    by0, by1 = _pixel_range(box.y - oy, box.y - oy + box.h)
    box_px = (bx1 - bx0) * (by1 - by0)
    ii = _integral(region.mask)
    inter = _ii_sum(ii, bx0, by0, bx1, by1)
    union = wall + box_px - inter
    if union == 0:
        return 0.0
    return inter / union


def _shrink_one(mask, cfg):
    """Greedy shrink of the mask's bounding box; integer edges in crop
    coordinates. Returns (x0, y0, x1, y1, iou, trace) with trace the
    adopted IoU sequence (diagnostic for the monotonicity property)."""
    ii = _integral(mask)
    total = int(mask.sum())
    ys, xs = np.nonzero(mask)
    x0, x1 = int(xs.min()), int(xs.max()) + 1
    y0, y1 = int(ys.min()), int(ys.max()) + 1

    def iou(a, b, c, d):
        inter = _ii_sum(ii, a, b, c, d)
        union = total + (c - a) * (d - b) - inter
        return inter / union if union else 0.0

    cur = iou(x0, y0, x1, y1)
    trace = [cur]
    target = cfg.shrink_iou_target
    min_side = cfg.min_box_side_px
    while cur < target:
        v_ok = y1 - y0 - 1 >= min_side
        h_ok = x1 - x0 - 1 >= min_side
        cands = []
        if v_ok:
            cands.append((x0, y0 + 1, x1, y1))  # top
        if h_ok:
            cands.append((x0 + 1, y0, x1, y1))  # left
        if v_ok:
            cands.append((x0, y0, x1, y1 - 1))  # down
        if h_ok:
            cands.append((x0, y0, x1 - 1, y1))  # right
        if not cands:
            break
        scored = [(iou(*c), c) for c in cands]
        best_iou, best = max(scored, key=lambda t: t[0])
        if best_iou <= cur:
            break
        x0, y0, x1, y1 = best
        cur = best_iou
        trace.append(cur)
    return x0, y0, x1, y1, cur, trace


def refine_box(box: FitBox, mask: np.ndarray) -> FitBox:
    """Sub-pixel edge positions from boundary fill fractions.

    A straight edge at fractional position e leaves the adjacent pixel
    row/column partially filled in proportion to e; inverting that gives
    e back. Intended for boxes fitted to a rotated frame, where nearest-
    neighbor resampling and morphology leave jagged half-filled boundary
    lines; `mask` should be the full frame mask, not the directionally
    opened one. Exact integer edges (full inner line, empty outer line)
    are returned unchanged, so clean axis-aligned fits are unaffected.
    Outward extension is gated to partial fills in [0.25, 1) so a fully
    occupied neighbor (an abutting wall) or a thin perpendicular
    attachment can't drag an edge out.
    """
    h, w = mask.shape
    x0, y0 = int(round(box.x)), int(round(box.y))
    x1, y1 = x0 + int(round(box.w)), y0 + int(round(box.h))
    if x0 < 0 or y0 < 0 or x1 > w or y1 > h or x1 <= x0 or y1 <= y0:
        return box

    def fill(vals):
        return float(vals.mean()) if vals.size else 0.0

    def adjust(f_in, f_out):
        if not 0.25 <= f_out < 1.0:
            f_out = 0.0
        return (1.0 - f_in) - f_out  # inward positive

    empty_row = mask[:0, 0]
    empty_col = mask[0, :0]
    top = y0 + adjust(fill(mask[y0, x0:x1]),
                      fill(mask[y0 - 1, x0:x1] if y0 > 0 else empty_row))
    bot = y1 - adjust(fill(mask[y1 - 1, x0:x1]),
                      fill(mask[y1, x0:x1] if y1 < h else empty_row))
    left = x0 + adjust(fill(mask[y0:y1, x0]),
                       fill(mask[y0:y1, x0 - 1] if x0 > 0 else empty_col))
    right = x1 - adjust(fill(mask[y0:y1, x1 - 1]),
                        fill(mask[y0:y1, x1] if x1 < w else empty_col))
    if right - left < 1.0 or bot - top < 1.0:  # degenerate; keep as-is
        return box
    return FitBox(left, top, right - left, bot - top, box.achieved_iou)


def shrink_fit(region: Region, cfg, chunk_filter=None) -> list[FitBox]:
    """Fit boxes to a component: greedy bounding-box shrinking, then
    recursive fitting of leftover chunks >= cfg.min_chunk_area_px.

    chunk_filter(contour) -> bool, when given, vetoes recursion into a
    leftover chunk (its pixels are simply left unfitted); used by the
    extraction loop to defer tilted chunks to their own angle pass.
    """
    mask = region.mask
    if not mask.any():
        return []
    ys, xs = np.nonzero(mask)
    if (xs.max() - xs.min() + 1 < cfg.min_box_side_px
            or ys.max() - ys.min() + 1 < cfg.min_box_side_px):
        return []  # thinner than any legal box
    x0, y0, x1, y1, iou, _ = _shrink_one(mask, cfg)
    ox, oy = region.offset
    boxes = [FitBox(float(x0 + ox), float(y0 + oy),
                    float(x1 - x0), float(y1 - y0), iou)]
    residual = mask.copy()
    residual[y0:y1, x0:x1] = False
    if residual.any():
        for comp, contour, bbox in raster.components(residual):
            if int(comp.sum()) < cfg.min_chunk_area_px:
                continue
            if chunk_filter is not None and not chunk_filter(contour):
                continue
            sub = Region(comp, (ox + bbox[0], oy + bbox[1]))
            boxes.extend(shrink_fit(sub, cfg, chunk_filter))
    return boxes


def _trims(box, inter):
    """The four one-sided trims of `box` that empty `inter`.

    Each entry: (strip x0,y0,x1,y1 removed, new box tuple).
    """
    bx0, by0, bx1, by1 = box
    ix0, iy0, ix1, iy1 = inter
    return [
        ((bx0, by0, bx1, iy1), (bx0, iy1, bx1, by1)),  # trim top
        ((bx0, by0, ix1, by1), (ix1, by0, bx1, by1)),  # trim left
        ((bx0, iy0, bx1, by1), (bx0, by0, bx1, iy0)),  # trim bottom
        ((ix0, by0, bx1, by1), (bx0, by0, ix0, by1)),  # trim right
    ]


def _strip_loss(ii, strip, off):
    x0, x1 = _pixel_range(strip[0] - off[0], strip[2] - off[0])
    y0, y1 = _pixel_range(strip[1] - off[1], strip[3] - off[1])
    return _ii_sum(ii, x0, y0, x1, y1)


def resolve_overlaps(boxes: list[FitBox], regions: list[Region], cfg) -> list[FitBox]:
    """Make boxes pairwise interior-disjoint.

    Contained boxes are dropped. Partially overlapping pairs are resolved
    by the one-sided trim that removes the fewest wall pixels (region
    foreground); ties prefer trimming the smaller-area box, then the
    larger-id box. A trim that would leave a side below
    cfg.min_box_side_px removes the box instead.
    """
    if not boxes:
        return []
    # combined wall-pixel evidence over all regions
    if regions:
        minx = min(r.offset[0] for r in regions)
        miny = min(r.offset[1] for r in regions)
        maxx = max(r.offset[0] + r.mask.shape[1] for r in regions)
        maxy = max(r.offset[1] + r.mask.shape[0] for r in regions)
        occ = np.zeros((maxy - miny, maxx - minx), dtype=bool)
        for r in regions:
            rx, ry = r.offset[0] - minx, r.offset[1] - miny
            occ[ry:ry + r.mask.shape[0], rx:rx + r.mask.shape[1]] |= r.mask
        off = (minx, miny)
    else:
        occ = np.zeros((1, 1), dtype=bool)
        off = (0, 0)
    ii = _integral(occ)

    live = {i: [b.x, b.y, b.x + b.w, b.y + b.h] for i, b in enumerate(boxes)}
    iou_of = {i: b.achieved_iou for i, b in enumerate(boxes)}
    eps = 1e-9

    def inter_rect(a, b):
        x0 = max(a[0], b[0])
        y0 = max(a[1], b[1])
        x1 = min(a[2], b[2])
        y1 = min(a[3], b[3])
        if x1 - x0 > eps and y1 - y0 > eps:
            return (x0, y0, x1, y1)
        return None

    while True:
        pairs = []
        ids = sorted(live)
        for ai in range(len(ids)):
            for bi in range(ai + 1, len(ids)):
                i, j = ids[ai], ids[bi]
                r = inter_rect(live[i], live[j])
                if r is not None:
                    pairs.append(((r[2] - r[0]) * (r[3] - r[1]), i, j, r))
        if not pairs:
            break
        pairs.sort(key=lambda p: (-p[0], p[1], p[2]))
        _, i, j, r = pairs[0]
        a, b = live[i], live[j]

        def contains(outer, inner):
            return (outer[0] <= inner[0] + eps and outer[1] <= inner[1] + eps
                    and outer[2] >= inner[2] - eps and outer[3] >= inner[3] - eps)

        if contains(b, a):
            del live[i]
            continue
        if contains(a, b):
            del live[j]
            continue

        def best_trim(box):
            scored = []
            for strip, newbox in _trims(box, r):
                loss = _strip_loss(ii, strip, off)
                scored.append((loss, strip, newbox))
            return min(scored, key=lambda t: t[0])

        loss_a, _, new_a = best_trim(a)
        loss_b, _, new_b = best_trim(b)
        area_a = (a[2] - a[0]) * (a[3] - a[1])
        area_b = (b[2] - b[0]) * (b[3] - b[1])
        if loss_a < loss_b:
            victim, newbox = i, new_a
        elif loss_b < loss_a:
            victim, newbox = j, new_b
        elif area_a < area_b - eps:
            victim, newbox = i, new_a
        elif area_b < area_a - eps:
            victim, newbox = j, new_b
        else:
            victim, newbox = j, new_b  # larger id
        if (newbox[2] - newbox[0] < cfg.min_box_side_px - eps
                or newbox[3] - newbox[1] < cfg.min_box_side_px - eps):
            del live[victim]
        else:
            live[victim] = list(newbox)

    out = []
    for i in sorted(live):
        x0, y0, x1, y1 = live[i]
        out.append(FitBox(x0, y0, x1 - x0, y1 - y0, iou_of[i]))
    return out

"""Wall extraction pipeline: preprocessing, dominant-orientation
detection, and iterative per-angle extraction of rectangular wall boxes
from a binary mask."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from . import boxfit, raster


@dataclass(frozen=True)
class PipelineConfig:
    """Every tunable of the pipeline. All defaults are implementation
    choices; heights and pixel scale drive the 3D stage."""

    open_kernel_px: int = 3
    close_kernel_px: int = 5
    blur_sigma: float = 1.0
    blur_threshold: float = 0.5
    canny_low: float = 50.0
    canny_high: float = 150.0
    hough_theta_res_deg: float = 1.0
    hough_rho_res_px: float = 1.0
    hough_min_votes_frac: float = 0.05
    angle_peak_min_frac: float = 0.1
    angle_merge_tol_deg: float = 2.0
    hv_kernel_len_px: int = 11
    hv_kernel_thickness_px: int = 1
    tilt_tol_deg: float = 3.0
    shrink_iou_target: float = 0.9
    min_box_side_px: int = 3
    min_chunk_area_px: int = 25
    max_angle_iterations: int = 4
    pixel_scale_m_per_px: float = 0.02
    wall_height_m: float = 2.5
    door_height_m: float = 2.0
    window_sill_m: float = 0.9
    window_height_m: float = 1.2

    @classmethod
    def from_json(cls, text: str | bytes) -> "PipelineConfig":
        """Load from a JSON object; absent fields keep defaults, unknown
        fields are an error."""
        doc = json.loads(text)
        if not isinstance(doc, dict):
            raise ValueError("config document must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ValueError(f"unknown config fields: {', '.join(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class AngleClass:
    """One {theta, theta+90, ...} orientation family with its
    accumulated Hough vote weight."""

    angle_deg: float
    weight: float


@dataclass(frozen=True)
class WallBox:
    """A vectorized wall: an axis-aligned box in the frame obtained by
    rotating the source image by -frame_angle_deg."""

    id: int
    frame_angle_deg: float
    x: float
    y: float
    w: float
    h: float

    @property
    def orientation(self) -> str:
        return "horizontal" if self.w >= self.h else "vertical"

    @property
    def length(self) -> float:
        return max(self.w, self.h)

    @property
    def thickness(self) -> float:
        return min(self.w, self.h)


def wall_corners(wall: WallBox, src_w: int, src_h: int) -> np.ndarray:
    """The wall's 4 corners in source-image coordinates, starting at the
    box's (x, y) corner and winding through (x+w, y), (x+w, y+h),
    (x, y+h) in the rotated frame."""
    pts = np.array([
        [wall.x, wall.y],
        [wall.x + wall.w, wall.y],
        [wall.x + wall.w, wall.y + wall.h],
        [wall.x, wall.y + wall.h],
    ])
    if wall.frame_angle_deg == 0.0:
        return pts
    amap = raster.rotation_map(src_w, src_h, -wall.frame_angle_deg)
    return amap.apply_inverse(pts)


def preprocess(mask, cfg: PipelineConfig):
    """Speckle removal (opening), smoothing (Gaussian + re-threshold),
    hole filling (closing)."""
    k = cfg.open_kernel_px
    out = raster.morph(mask, "open", (k, k))
    out = raster.blur_threshold(out, cfg.blur_sigma, cfg.blur_threshold)
    k = cfg.close_kernel_px
    return raster.morph(out, "close", (k, k))


def _fold_angle(theta):
    return theta % 90.0


def _circ_dist(a, b):
    d = abs(a - b) % 90.0
    return min(d, 90.0 - d)


def detect_angles(mask, cfg: PipelineConfig) -> list[AngleClass]:
    """Histogram of dominant wall orientations, folded modulo 90 degrees.

    Empty mask -> []. Non-empty mask with no Hough peaks -> a single
    fallback class at 0 degrees with negligible weight.
    """
    mask = np.asarray(mask)
    if mask.size == 0 or not mask.any():
        return []
    h, w = mask.shape
    gray = (mask.astype(np.uint8)) * 255
    edges = raster.canny(gray, cfg.canny_low, cfg.canny_high)
    min_votes = max(1, int(round(cfg.hough_min_votes_frac * max(w, h))))
    peaks = raster.hough_peaks(edges, cfg.hough_theta_res_deg,
                               cfg.hough_rho_res_px, min_votes)
    if not peaks:
        return [AngleClass(0.0, 1e-6)]

    # Per theta keep only the strongest accumulator cell: summing every
    # cell would spread a long line's votes across many rho bins at
    # off-axis thetas and drown the true orientation peak. Folding
    # modulo 90 then sums the (up to two) orientations of one family.
    theta_max: dict[float, int] = {}
    for theta, _rho, votes in peaks:
        if votes > theta_max.get(theta, 0):
            theta_max[theta] = votes
    bins: dict[int, float] = {}
    n_bins = int(round(90.0 / cfg.hough_theta_res_deg))
    for theta, votes in theta_max.items():
        b = int(_fold_angle(theta) / cfg.hough_theta_res_deg + 0.5) % n_bins
        bins[b] = bins.get(b, 0.0) + votes

    entries = sorted(bins.items(), key=lambda kv: (-kv[1], kv[0]))
    classes: list[list[float]] = []  # [weighted angle sum basis, weight, seed]
    for b, weight in entries:
        angle = b * cfg.hough_theta_res_deg
        placed = False
        for cl in classes:
            if _circ_dist(angle, cl[2]) < cfg.angle_merge_tol_deg:
                # accumulate relative to the seed to keep the wrap simple
                d = angle - cl[2]
                if d > 45.0:
                    d -= 90.0
                elif d < -45.0:
                    d += 90.0
                cl[0] += weight * d
                cl[1] += weight
                placed = True
                break
        if not placed:
            classes.append([0.0, weight, angle])

    result = []
    for dsum, weight, seed in classes:
        ang = (seed + dsum / weight) % 90.0
        if min(ang, 90.0 - ang) < 0.25:
            ang = 0.0  # below raster resolution, keep the frame exact
        result.append(AngleClass(ang, weight))
    result.sort(key=lambda c: (-c.weight, c.angle_deg))
    cutoff = cfg.angle_peak_min_frac * result[0].weight
    return [c for c in result if c.weight >= cutoff]


def decompose_hv(mask, cfg: PipelineConfig):
    """Split an axis-aligned-frame mask into horizontal-run and
    vertical-run parts via directional morphological openings."""
    t = cfg.hv_kernel_thickness_px
    n = cfg.hv_kernel_len_px
    h_mask = raster.morph(mask, "open", (t, n))
    v_mask = raster.morph(mask, "open", (n, t))
    return h_mask, v_mask


def validate_tilt(contour, tol_deg: float) -> bool:
    """Keep a component iff its min-area rect is within tol_deg of being
    axis-aligned."""
    rect = raster.min_area_rect(contour)
    a = rect.angle_deg
    return min(a, 90.0 - a) <= tol_deg


def extract_walls(mask, cfg: PipelineConfig | None = None) -> list[WallBox]:
    """Full wall extraction: preprocess, then iterate over dominant
    orientations, extracting axis-aligned boxes in each rotated frame and
    subtracting them from the residual mask."""
    if cfg is None:
        cfg = PipelineConfig()
    mask = np.asarray(mask)
    if mask.size == 0:
        return []
    src_h, src_w = mask.shape
    remaining = preprocess(mask, cfg)

    walls: list[WallBox] = []
    # per frame angle: (fit boxes, regions) for overlap resolution
    groups: dict[float, tuple[list[boxfit.FitBox], list[boxfit.Region]]] = {}
    processed: list[float] = []
    next_id = 0

    for _ in range(cfg.max_angle_iterations):
        if int(remaining.sum()) < cfg.min_chunk_area_px:
            break
        classes = detect_angles(remaining, cfg)
        # a frame within tilt tolerance of a processed one would accept
        # the same components and is redundant
        sep = max(cfg.angle_merge_tol_deg, cfg.tilt_tol_deg)
        classes = [c for c in classes
                   if all(_circ_dist(c.angle_deg, p) >= sep
                          for p in processed)]
        if not classes:
            break
        angle = classes[0].angle_deg
        processed.append(angle)

        if angle == 0.0:
            rot, amap = remaining.copy(), None
            rot_raw = mask
        else:
            rot, amap = raster.rotate(remaining, -angle)
            rot_raw, _ = raster.rotate(mask, -angle)

        accepted: list[boxfit.FitBox] = []
        regions: list[boxfit.Region] = []

        def box_support_ok(fb, region):
            # tilt validation on the box's own pixel support: a component
            # may carry a tilted appendage (e.g. a wing of a different
            # orientation crossing a wall) without invalidating the box
            # fitted to its dominant axis-aligned part
            ox, oy = region.offset
            x0, x1 = boxfit._pixel_range(fb.x - ox, fb.x + fb.w - ox)
            y0, y1 = boxfit._pixel_range(fb.y - oy, fb.y + fb.h - oy)
            h, w = region.mask.shape
            sup = region.mask[max(0, y0):min(h, y1), max(0, x0):min(w, x1)]
            if not sup.any():
                return False
            parts = raster.components(sup)
            _, contour, _ = max(parts, key=lambda p: int(p[0].sum()))
            return validate_tilt(contour, cfg.tilt_tol_deg)

        def fit_direction(dmask):
            fits = []
            for comp, contour, bbox in raster.components(dmask):
                if int(comp.sum()) < cfg.min_chunk_area_px:
                    continue
                region = boxfit.Region(comp, (bbox[0], bbox[1]))
                regions.append(region)
                fits.extend(
                    fb for fb in boxfit.shrink_fit(
                        region, cfg,
                        chunk_filter=lambda c: validate_tilt(
                            c, cfg.tilt_tol_deg))
                    if box_support_ok(fb, region))
            return fits

        # Horizontal first; its boxes are carved out of the frame before
        # the vertical pass so crossing walls split into separate arms
        # at junctions instead of yielding two full-length boxes whose
        # overlap resolution would cut an arm off.
        # Boxes are refined against the rotated raw input: preprocessing,
        # directional opening and (in rotated frames) nearest-neighbor
        # resampling leave partially filled boundary lines that the
        # integer shrink either keeps whole or drops whole; the raw fill
        # fractions recover the sub-pixel edge.
        h_mask, _ = decompose_hv(rot, cfg)
        h_fits = [boxfit.refine_box(fb, rot_raw)
                  for fb in fit_direction(h_mask)]
        v_input = rot & ~_boxes_to_mask(h_fits, rot.shape)
        t = cfg.hv_kernel_thickness_px
        v_mask = raster.morph(v_input, "open", (cfg.hv_kernel_len_px, t))
        v_fits = [boxfit.refine_box(fb, rot_raw)
                  for fb in fit_direction(v_mask)]
        accepted = _merge_collinear(h_fits + v_fits,
                                    2.0 * cfg.hv_kernel_len_px, rot_raw)

        if accepted:
            grp = groups.setdefault(angle, ([], []))
            grp[0].extend(accepted)
            grp[1].extend(regions)
            remaining = _subtract_boxes(remaining, accepted, amap, rot.shape)

    for angle in sorted(groups):
        fits, regions = groups[angle]
        for fb in boxfit.resolve_overlaps(fits, regions, cfg):
            if fb.w > 0 and fb.h > 0:
                walls.append(WallBox(next_id, angle, fb.x, fb.y, fb.w, fb.h))
                next_id += 1

    if len(groups) > 1:
        walls = _drop_cross_frame_contained(walls, src_w, src_h)
    return walls


def _merge_collinear(fits, gap_tol, frame_raw):
    """Join boxes that continue each other along their run direction.

    Boxes fitted at a later orientation can arrive pre-split where an
    earlier frame's wall crossed them and was subtracted. Two boxes
    merge when their cross-run intervals overlap by at least half the
    thinner one, no other box of the frame occupies the gap (a junction
    split by the horizontal-first carve must stay split), and either the
    along-run gap is < gap_tol or the gap region is mostly foreground in
    the frame's raw mask (it held real wall pixels before an earlier
    frame carved them out; a door opening is background and never
    bridges).
    """
    fits = list(fits)

    def overlap_area(box, rect):
        gx0, gy0, gx1, gy1 = rect
        w = min(box.x + box.w, gx1) - max(box.x, gx0)
        h = min(box.y + box.h, gy1) - max(box.y, gy0)
        return max(0.0, w) * max(0.0, h)

    def raw_fill(rect):
        x0, x1 = boxfit._pixel_range(rect[0], rect[2])
        y0, y1 = boxfit._pixel_range(rect[1], rect[3])
        h, w = frame_raw.shape
        sub = frame_raw[max(0, y0):min(h, y1), max(0, x0):min(w, x1)]
        return float(sub.mean()) if sub.size else 0.0

    merged = True
    while merged:
        merged = False
        for i in range(len(fits)):
            for j in range(i + 1, len(fits)):
                a, b = fits[i], fits[j]
                horiz = a.w >= a.h
                if horiz != (b.w >= b.h):
                    continue
                if horiz:
                    ov = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
                    thin = min(a.h, b.h)
                    gap = max(a.x, b.x) - min(a.x + a.w, b.x + b.w)
                    gap_rect = (min(a.x + a.w, b.x + b.w), min(a.y, b.y),
                                max(a.x, b.x), max(a.y + a.h, b.y + b.h))
                else:
                    ov = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
                    thin = min(a.w, b.w)
                    gap = max(a.y, b.y) - min(a.y + a.h, b.y + b.h)
                    gap_rect = (min(a.x, b.x), min(a.y + a.h, b.y + b.h),
                                max(a.x + a.w, b.x + b.w), max(a.y, b.y))
                if ov < 0.5 * thin:
                    continue
                if gap >= gap_tol and raw_fill(gap_rect) < 0.6:
                    continue
                if gap > 0:
                    gap_area = ((gap_rect[2] - gap_rect[0])
                                * (gap_rect[3] - gap_rect[1]))
                    filled = sum(overlap_area(fits[k], gap_rect)
                                 for k in range(len(fits)) if k not in (i, j))
                    if gap_area > 0 and filled >= 0.25 * gap_area:
                        continue
                x0 = min(a.x, b.x)
                y0 = min(a.y, b.y)
                x1 = max(a.x + a.w, b.x + b.w)
                y1 = max(a.y + a.h, b.y + b.h)
                fits[i] = boxfit.FitBox(x0, y0, x1 - x0, y1 - y0,
                                        min(a.achieved_iou, b.achieved_iou))
                del fits[j]
                merged = True
                break
            if merged:
                break
    return fits


def _boxes_to_mask(fits, rot_shape, margin=0.0):
    rot_h, rot_w = rot_shape
    boxmask = np.zeros((rot_h, rot_w), dtype=bool)
    for fb in fits:
        x0, x1 = boxfit._pixel_range(fb.x - margin, fb.x + fb.w + margin)
        y0, y1 = boxfit._pixel_range(fb.y - margin, fb.y + fb.h + margin)
        boxmask[max(0, y0):max(0, y1), max(0, x0):max(0, x1)] = True
    return boxmask


def _subtract_boxes(remaining, fits, amap, rot_shape):
    """Clear every remaining-mask pixel whose rotated-frame image falls
    inside an accepted box. Boxes are inflated by a pixel so sub-pixel
    edges don't leave one-pixel straggler lines in the residual."""
    rot_h, rot_w = rot_shape
    boxmask = _boxes_to_mask(fits, rot_shape, margin=1.0)
    if amap is None:
        return remaining & ~boxmask
    ys, xs = np.nonzero(remaining)
    if len(xs) == 0:
        return remaining
    pts = np.stack([xs, ys], axis=1).astype(np.float64)
    rpts = amap.apply_forward(pts)
    rx = np.floor(rpts[:, 0] + 0.5).astype(np.int64)
    ry = np.floor(rpts[:, 1] + 0.5).astype(np.int64)
    valid = (rx >= 0) & (rx < rot_w) & (ry >= 0) & (ry < rot_h)
    hit = np.zeros(len(xs), dtype=bool)
    hit[valid] = boxmask[ry[valid], rx[valid]]
    out = remaining.copy()
    out[ys[hit], xs[hit]] = False
    return out


def _drop_cross_frame_contained(walls, src_w, src_h):
    """Across rotated frames only the containment rule applies: a wall
    whose rasterization is a subset of another's is dropped."""
    from . import planio
    pix = []
    for wall in walls:
        m = planio.rasterize_walls([wall], src_w, src_h)
        pix.append(set(np.flatnonzero(m).tolist()))
    drop = set()
    for i in range(len(walls)):
        for j in range(len(walls)):
            if i == j or i in drop or j in drop:
                continue
            if walls[i].frame_angle_deg == walls[j].frame_angle_deg:
                continue
            if pix[i] and pix[i] <= pix[j]:
                drop.add(i)
    return [w for k, w in enumerate(walls) if k not in drop]

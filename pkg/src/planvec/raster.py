"""Self-contained raster primitives for binary wall masks.

Conventions:
 - A binary mask is a 2D numpy bool array of shape (height, width);
   pixel (x, y) is mask[y, x] and occupies the unit square
   [x, x+1) x [y, y+1), center (x + 0.5, y + 0.5).
 - A gray image is a 2D numpy uint8 array, same indexing.
 - A contour is an (N, 2) int array of (x, y) points tracing an external
   boundary; closure is implicit, consecutive points are 8-neighbors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels

MORPH_KINDS = ("erode", "dilate", "open", "close")


@dataclass(frozen=True)
class RotatedRect:
    """Minimum-area rotated rectangle: center, size, angle in [0, 90)."""

    center: tuple[float, float]
    size: tuple[float, float]
    angle_deg: float


@dataclass(frozen=True)
class AffineMap:
    """Forward (input -> output) and inverse 2x3 affine matrices of a
    rotation, plus the output canvas size (width, height)."""

    forward: np.ndarray
    inverse: np.ndarray
    out_size: tuple[int, int]

    def apply_forward(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        return pts @ self.forward[:, :2].T + self.forward[:, 2]

    def apply_inverse(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        return pts @ self.inverse[:, :2].T + self.inverse[:, 2]


def _check_mask(mask):
    mask = np.asarray(mask)
    if mask.ndim != 2 or mask.dtype != np.bool_:
        raise ValueError("mask must be a 2D bool array")
    return mask


def morph(mask, kind, kernel):
    """Binary morphology with a rectangular kernel (height, width).

    Out-of-bounds pixels count as background, so foreground touching the
    border erodes and never grows past the canvas.
    """
    mask = _check_mask(mask)
    kh, kw = kernel
    if kh < 1 or kw < 1 or kh % 2 == 0 or kw % 2 == 0:
        raise ValueError(f"kernel dims must be odd and >= 1, got {kernel}")
    if kind not in MORPH_KINDS:
        raise ValueError(f"unknown morphology kind {kind!r}")
    if mask.size == 0 or (kh == 1 and kw == 1):
        return mask.copy()
    mask = np.ascontiguousarray(mask)
    if kind == "erode":
        return kernels.erode(mask, kh, kw)
    if kind == "dilate":
        return kernels.dilate(mask, kh, kw)
    if kind == "open":
        return kernels.dilate(kernels.erode(mask, kh, kw), kh, kw)
    # close: dilate then erode on a kernel-radius padded canvas, then
    # crop, so foreground touching the border survives (m is always a
    # subset of close(m))
    rh, rw = kh // 2, kw // 2
    h, w = mask.shape
    padded = np.zeros((h + 2 * rh, w + 2 * rw), dtype=bool)
    padded[rh:rh + h, rw:rw + w] = mask
    closed = kernels.erode(kernels.dilate(padded, kh, kw), kh, kw)
    return closed[rh:rh + h, rw:rw + w]


def gaussian_kernel_1d(sigma):
    radius = int(math.ceil(3.0 * sigma))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (xs / sigma) ** 2)
    return k / k.sum()


def _convolve_sep(img, k1d):
    # separable convolution, edge-replicate padding
    r = (len(k1d) - 1) // 2
    h, w = img.shape
    tmp = np.zeros((h, w), dtype=np.float64)
    padded = np.pad(img, ((0, 0), (r, r)), mode="edge")
    for i, kv in enumerate(k1d):
        tmp += kv * padded[:, i:i + w]
    out = np.zeros((h, w), dtype=np.float64)
    padded = np.pad(tmp, ((r, r), (0, 0)), mode="edge")
    for i, kv in enumerate(k1d):
        out += kv * padded[i:i + h, :]
    return out


def gaussian_blur(img, sigma):
    """Truncated (3-sigma) zero-padded Gaussian blur of a float image."""
    if sigma <= 0:
        return np.asarray(img, dtype=np.float64).copy()
    return _convolve_sep(np.asarray(img, dtype=np.float64), gaussian_kernel_1d(sigma))


def blur_threshold(mask, sigma, threshold):
    """Gaussian-smooth a binary mask (true=255) and re-binarize."""
    mask = _check_mask(mask)
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if not (0.0 < threshold < 1.0):
        raise ValueError("threshold must be in (0, 1)")
    if sigma == 0 or mask.size == 0:
        return mask.copy()
    blurred = gaussian_blur(mask.astype(np.float64) * 255.0, sigma)
    return blurred >= threshold * 255.0


def _sobel(img):
    gx = _convolve_pair(img, np.array([1.0, 2.0, 1.0]), np.array([-1.0, 0.0, 1.0]))
    gy = _convolve_pair(img, np.array([-1.0, 0.0, 1.0]), np.array([1.0, 2.0, 1.0]))
    return gx, gy


def _convolve_pair(img, kcol, krow):
    # separable 3x3: kcol applied down columns, krow across rows,
    # edge-replicate padding so constant images stay gradient-free
    h, w = img.shape
    tmp = np.zeros((h, w), dtype=np.float64)
    padded = np.pad(img, ((1, 1), (0, 0)), mode="edge")
    for i, kv in enumerate(kcol):
        if kv != 0.0:
            tmp += kv * padded[i:i + h, :]
    out = np.zeros((h, w), dtype=np.float64)
    padded = np.pad(tmp, ((0, 0), (1, 1)), mode="edge")
    for i, kv in enumerate(krow):
        if kv != 0.0:
            out += kv * padded[:, i:i + w]
    return out


def canny(image, low, high, smooth_sigma=1.0):
    """Canny edges: Gaussian smoothing, Sobel gradients, non-maximum
    suppression, double-threshold hysteresis."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError("image must be 2D")
    if not (0 <= low <= high):
        raise ValueError("need 0 <= low <= high")
    if image.size == 0:
        return np.zeros(image.shape, dtype=bool)
    img = gaussian_blur(image.astype(np.float64), smooth_sigma)
    gx, gy = _sobel(img)
    mag = np.hypot(gx, gy)
    h, w = mag.shape

    # quantize gradient direction into 4 sectors and pick neighbor offsets
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    sector = np.zeros((h, w), dtype=np.int8)
    sector[(angle >= 22.5) & (angle < 67.5)] = 1
    sector[(angle >= 67.5) & (angle < 112.5)] = 2
    sector[(angle >= 112.5) & (angle < 157.5)] = 3
    offsets = ((0, 1), (1, 1), (1, 0), (1, -1))  # (dy, dx) per sector

    padded = np.zeros((h + 2, w + 2), dtype=np.float64)
    padded[1:-1, 1:-1] = mag
    keep = np.zeros((h, w), dtype=bool)
    for s, (dy, dx) in enumerate(offsets):
        sel = sector == s
        fwd = padded[1 + dy:h + 1 + dy, 1 + dx:w + 1 + dx]
        bwd = padded[1 - dy:h + 1 - dy, 1 - dx:w + 1 - dx]
        # > on one side, >= on the other keeps exactly one pixel of a
        # two-pixel plateau straddling a symmetric step edge
        keep |= sel & (mag > bwd) & (mag >= fwd)

    nms = np.where(keep, mag, 0.0)
    strong = np.ascontiguousarray(nms >= high)
    weak = np.ascontiguousarray((nms >= low) & ~strong)
    if not strong.any():
        return np.zeros((h, w), dtype=bool)
    return kernels.hysteresis(strong, weak)


def hough_peaks(edges, theta_res_deg, rho_res_px, min_votes):
    """All (theta_deg, rho_px, votes) accumulator cells with votes >=
    min_votes, strongest first. Theta spans [0, 180), rho [-diag, diag]."""
    edges = _check_mask(edges)
    if theta_res_deg <= 0 or rho_res_px <= 0:
        raise ValueError("resolutions must be positive")
    ys, xs = np.nonzero(edges)
    if len(xs) == 0:
        return []
    h, w = edges.shape
    diag = math.hypot(w, h)
    n_theta = int(round(180.0 / theta_res_deg))
    thetas = np.arange(n_theta, dtype=np.float64) * theta_res_deg
    rad = np.deg2rad(thetas)
    acc = kernels.hough_accumulate(
        xs.astype(np.int64), ys.astype(np.int64),
        np.cos(rad), np.sin(rad), float(rho_res_px), diag)
    ti, ri = np.nonzero(acc >= min_votes)
    votes = acc[ti, ri]
    order = np.lexsort((ri, ti, -votes))
    return [
        (float(thetas[ti[i]]), float(ri[i] * rho_res_px - diag), int(votes[i]))
        for i in order
    ]


def rotation_map(width, height, angle_deg):
    """Affine map of rotating a width x height canvas by angle_deg about
    its center, with the output canvas expanded to hold the full rotated
    bounding box. Deterministic in (width, height, angle_deg)."""
    rad = math.radians(angle_deg)
    c, s = math.cos(rad), math.sin(rad)
    out_w = int(round(abs(c) * width + abs(s) * height))
    out_h = int(round(abs(s) * width + abs(c) * height))
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    ox, oy = (out_w - 1) / 2.0, (out_h - 1) / 2.0
    forward = np.array([
        [c, -s, ox - c * cx + s * cy],
        [s, c, oy - s * cx - c * cy],
    ])
    inverse = np.array([
        [c, s, cx - c * ox - s * oy],
        [-s, c, cy + s * ox - c * oy],
    ])
    return AffineMap(forward=forward, inverse=inverse, out_size=(out_w, out_h))


def rotate(mask, angle_deg):
    """Rotate a mask by angle_deg (expanded canvas, nearest neighbor).

    Returns (rotated, AffineMap); map.inverse converts output pixel
    coordinates back to input coordinates.
    """
    mask = _check_mask(mask)
    h, w = mask.shape
    if angle_deg % 360.0 == 0.0:
        ident = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        return mask.copy(), AffineMap(ident, ident.copy(), (w, h))
    amap = rotation_map(w, h, angle_deg)
    out_w, out_h = amap.out_size
    out = kernels.rotate_nn(np.ascontiguousarray(mask), amap.inverse, out_h, out_w)
    return out, amap


# Moore-neighbor offsets in clockwise order starting east (y grows down).
_MOORE = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


def _trace_external(mask, start_x, start_y):
    """Moore-neighbor boundary trace of the component containing the
    start pixel, which must be its topmost-then-leftmost pixel. Stops by
    Jacob's criterion (start pixel re-entered via the first move)."""
    h, w = mask.shape

    def fg(x, y):
        return 0 <= x < w and 0 <= y < h and mask[y, x]

    contour = [(start_x, start_y)]
    cx, cy = start_x, start_y
    backtrack = 4  # came from the west, guaranteed background for start
    first_move = None
    while True:
        move = None
        for i in range(1, 9):
            d = (backtrack + i) % 8
            nx, ny = cx + _MOORE[d][0], cy + _MOORE[d][1]
            if fg(nx, ny):
                move = (d, nx, ny)
                break
        if move is None:
            break  # isolated pixel
        d, nx, ny = move
        if first_move is None:
            first_move = (cx, cy, d)
        elif (cx, cy, d) == first_move:
            break
        contour.append((nx, ny))
        cx, cy = nx, ny
        backtrack = (d + 5) % 8
    if len(contour) > 1 and contour[-1] == contour[0]:
        contour.pop()
    return np.array(contour, dtype=np.int64)


def components(mask):
    """8-connected components with external contours.

    Returns a list of (component_mask, contour, bbox) where component_mask
    is cropped to bbox = (x, y, w, h) and the contour is in full-image
    coordinates.
    """
    mask = _check_mask(mask)
    if mask.size == 0 or not mask.any():
        return []
    labels, n = kernels.label8(np.ascontiguousarray(mask))
    out = []
    slices = _label_slices(labels, n)
    for i in range(1, n + 1):
        sl = slices[i - 1]
        if sl is None:
            continue
        ys, xs = sl
        comp = labels[ys, xs] == i
        x0, y0 = xs.start, ys.start
        cys, cxs = np.nonzero(comp)
        start = np.lexsort((cxs, cys))[0]
        contour = _trace_external(comp, int(cxs[start]), int(cys[start]))
        contour[:, 0] += x0
        contour[:, 1] += y0
        bbox = (x0, y0, xs.stop - x0, ys.stop - y0)
        out.append((comp, contour, bbox))
    return out


def _label_slices(labels, n):
    from scipy import ndimage
    return ndimage.find_objects(labels, max_label=n)


def _convex_hull(points):
    """Andrew monotone chain; returns hull in CCW order, collinear
    points dropped. Degenerate inputs yield < 3 points."""
    pts = np.unique(points, axis=0)
    if len(pts) <= 2:
        return pts
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = np.array(lower[:-1] + upper[:-1], dtype=np.float64)
    if len(hull) < 3:
        return np.unique(points, axis=0).astype(np.float64)
    return hull


def min_area_rect(points):
    """Minimum-area rotated rectangle over a point set (rotating calipers
    over the convex hull). Angle normalized to [0, 90)."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
        raise ValueError("need a non-empty (N, 2) point array")
    hull = _convex_hull(pts)
    if len(hull) == 1:
        return RotatedRect((float(hull[0, 0]), float(hull[0, 1])), (0.0, 0.0), 0.0)
    if len(hull) == 2:
        d = hull[1] - hull[0]
        length = float(np.hypot(d[0], d[1]))
        ang = math.degrees(math.atan2(d[1], d[0]))
        center = tuple((hull[0] + hull[1]) / 2.0)
        return _normalize_rect(center, length, 0.0, ang)

    best = None
    n = len(hull)
    for i in range(n):
        e = hull[(i + 1) % n] - hull[i]
        elen = np.hypot(e[0], e[1])
        if elen == 0:
            continue
        ux, uy = e / elen
        # project hull onto edge frame
        proj_u = hull[:, 0] * ux + hull[:, 1] * uy
        proj_v = -hull[:, 0] * uy + hull[:, 1] * ux
        du = proj_u.max() - proj_u.min()
        dv = proj_v.max() - proj_v.min()
        area = du * dv
        if best is None or area < best[0] - 1e-12:
            cu = (proj_u.max() + proj_u.min()) / 2.0
            cv = (proj_v.max() + proj_v.min()) / 2.0
            center = (cu * ux - cv * uy, cu * uy + cv * ux)
            ang = math.degrees(math.atan2(uy, ux))
            best = (area, center, du, dv, ang)

    _, center, du, dv, ang = best
    return _normalize_rect(center, du, dv, ang)


def _normalize_rect(center, along, perp, angle_deg):
    a = angle_deg % 180.0
    if a >= 90.0 - 1e-9:
        a -= 90.0
        along, perp = perp, along
    if a < 0:
        a = 0.0
    return RotatedRect((float(center[0]), float(center[1])),
                       (float(along), float(perp)), float(a))

"""Vectorized numpy/scipy implementations of the hot raster kernels.

Same signatures as _kernels_nb; see _backend for selection.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

_STRUCT8 = np.ones((3, 3), dtype=bool)


def _erode_axis(mask, k, axis):
    if k == 1:
        return mask
    r = k // 2
    h, w = mask.shape
    if axis == 1:
        padded = np.zeros((h, w + 2 * r), dtype=bool)
        padded[:, r:r + w] = mask
        return sliding_window_view(padded, k, axis=1).all(axis=-1)
    padded = np.zeros((h + 2 * r, w), dtype=bool)
    padded[r:r + h, :] = mask
    return sliding_window_view(padded, k, axis=0).all(axis=-1)


def _dilate_axis(mask, k, axis):
    if k == 1:
        return mask
    r = k // 2
    h, w = mask.shape
    if axis == 1:
        padded = np.zeros((h, w + 2 * r), dtype=bool)
        padded[:, r:r + w] = mask
        return sliding_window_view(padded, k, axis=1).any(axis=-1)
    padded = np.zeros((h + 2 * r, w), dtype=bool)
    padded[r:r + h, :] = mask
    return sliding_window_view(padded, k, axis=0).any(axis=-1)


def erode(mask, kh, kw):
    # rectangular kernel -> separable
    return _erode_axis(_erode_axis(mask, kw, 1), kh, 0)


def dilate(mask, kh, kw):
    return _dilate_axis(_dilate_axis(mask, kw, 1), kh, 0)


def hough_accumulate(xs, ys, cos_t, sin_t, rho_res, diag):
    n_theta = cos_t.shape[0]
    n_rho = int(np.floor(2.0 * diag / rho_res)) + 1
    acc = np.zeros((n_theta, n_rho), dtype=np.int64)
    xs = xs.astype(np.float64)
    ys = ys.astype(np.float64)
    for t in range(n_theta):
        rho = xs * cos_t[t] + ys * sin_t[t]
        bins = np.floor((rho + diag) / rho_res + 0.5).astype(np.int64)
        np.clip(bins, 0, n_rho - 1, out=bins)
        acc[t] = np.bincount(bins, minlength=n_rho)
    return acc


def rotate_nn(mask, inv, out_h, out_w):
    h, w = mask.shape
    xs = np.arange(out_w, dtype=np.float64)
    ys = np.arange(out_h, dtype=np.float64)
    gx, gy = np.meshgrid(xs, ys)
    sx = np.floor(inv[0, 0] * gx + inv[0, 1] * gy + inv[0, 2] + 0.5).astype(np.int64)
    sy = np.floor(inv[1, 0] * gx + inv[1, 1] * gy + inv[1, 2] + 0.5).astype(np.int64)
    valid = (sx >= 0) & (sx < w) & (sy >= 0) & (sy < h)
    out = np.zeros((out_h, out_w), dtype=bool)
    out[valid] = mask[sy[valid], sx[valid]]
    return out


def label8(mask):
    labels, n = ndimage.label(mask, structure=_STRUCT8)
    return labels.astype(np.int32), n


def hysteresis(strong, weak):
    both = strong | weak
    labels, n = ndimage.label(both, structure=_STRUCT8)
    if n == 0:
        return np.zeros_like(strong)
    keep = np.zeros(n + 1, dtype=bool)
    keep[np.unique(labels[strong])] = True
    keep[0] = False
    return keep[labels]

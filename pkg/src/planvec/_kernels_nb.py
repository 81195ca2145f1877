"""Numba @njit implementations of the hot raster kernels.

Same signatures as _kernels_np; see _backend for selection.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _erode_rows(mask, k):
    h, w = mask.shape
    r = k // 2
    out = np.zeros((h, w), dtype=np.bool_)
    for y in range(h):
        for x in range(w):
            ok = True
            for d in range(-r, r + 1):
                xx = x + d
                if xx < 0 or xx >= w or not mask[y, xx]:
                    ok = False
                    break
            out[y, x] = ok
    return out


@njit(cache=True)
def _erode_cols(mask, k):
    h, w = mask.shape
    r = k // 2
    out = np.zeros((h, w), dtype=np.bool_)
    for y in range(h):
        for x in range(w):
            ok = True
            for d in range(-r, r + 1):
                yy = y + d
                if yy < 0 or yy >= h or not mask[yy, x]:
                    ok = False
                    break
            out[y, x] = ok
    return out


@njit(cache=True)
def _dilate_rows(mask, k):
    h, w = mask.shape
    r = k // 2
    out = np.zeros((h, w), dtype=np.bool_)
    for y in range(h):
        for x in range(w):
            hit = False
            for d in range(-r, r + 1):
                xx = x + d
                if 0 <= xx < w and mask[y, xx]:
                    hit = True
                    break
            out[y, x] = hit
    return out


@njit(cache=True)
def _dilate_cols(mask, k):
    h, w = mask.shape
    r = k // 2
    out = np.zeros((h, w), dtype=np.bool_)
    for y in range(h):
        for x in range(w):
            hit = False
            for d in range(-r, r + 1):
                yy = y + d
                if 0 <= yy < h and mask[yy, x]:
                    hit = True
                    break
            out[y, x] = hit
    return out


@njit(cache=True)
def erode(mask, kh, kw):
    return _erode_cols(_erode_rows(mask, kw), kh)


@njit(cache=True)
def dilate(mask, kh, kw):
    return _dilate_cols(_dilate_rows(mask, kw), kh)


@njit(cache=True)
def hough_accumulate(xs, ys, cos_t, sin_t, rho_res, diag):
    n_theta = cos_t.shape[0]
    n_rho = int(np.floor(2.0 * diag / rho_res)) + 1
    acc = np.zeros((n_theta, n_rho), dtype=np.int64)
    for i in range(xs.shape[0]):
        x = float(xs[i])
        y = float(ys[i])
        for t in range(n_theta):
            rho = x * cos_t[t] + y * sin_t[t]
            b = int(np.floor((rho + diag) / rho_res + 0.5))
            if b < 0:
                b = 0
            elif b >= n_rho:
                b = n_rho - 1
            acc[t, b] += 1
    return acc


@njit(cache=True)
def rotate_nn(mask, inv, out_h, out_w):
    h, w = mask.shape
    out = np.zeros((out_h, out_w), dtype=np.bool_)
    for y in range(out_h):
        for x in range(out_w):
            sx = int(np.floor(inv[0, 0] * x + inv[0, 1] * y + inv[0, 2] + 0.5))
            sy = int(np.floor(inv[1, 0] * x + inv[1, 1] * y + inv[1, 2] + 0.5))
            if 0 <= sx < w and 0 <= sy < h:
                out[y, x] = mask[sy, sx]
    return out


@njit(cache=True)
def label8(mask):
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    stack = np.empty(h * w, dtype=np.int64)
    n = 0
    for y0 in range(h):
        for x0 in range(w):
            if mask[y0, x0] and labels[y0, x0] == 0:
                n += 1
                top = 0
                stack[top] = y0 * w + x0
                top += 1
                labels[y0, x0] = n
                while top > 0:
                    top -= 1
                    p = stack[top]
                    py = p // w
                    px = p % w
                    for dy in range(-1, 2):
                        for dx in range(-1, 2):
                            ny = py + dy
                            nx = px + dx
                            if 0 <= ny < h and 0 <= nx < w:
                                if mask[ny, nx] and labels[ny, nx] == 0:
                                    labels[ny, nx] = n
                                    stack[top] = ny * w + nx
                                    top += 1
    return labels, n


@njit(cache=True)
def hysteresis(strong, weak):
    h, w = strong.shape
    out = strong.copy()
    stack = np.empty(h * w, dtype=np.int64)
    top = 0
    for y in range(h):
        for x in range(w):
            if strong[y, x]:
                stack[top] = y * w + x
                top += 1
    while top > 0:
        top -= 1
        p = stack[top]
        py = p // w
        px = p % w
        for dy in range(-1, 2):
            for dx in range(-1, 2):
                ny = py + dy
                nx = px + dx
                if 0 <= ny < h and 0 <= nx < w:
                    if weak[ny, nx] and not out[ny, nx]:
                        out[ny, nx] = True
                        stack[top] = ny * w + nx
                        top += 1
    return out

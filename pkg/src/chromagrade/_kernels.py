"""Hot pixel kernels: parametric grading, unsharp masking, and 3D LUT lookup.

Each kernel has a numba @njit implementation and a pure-numpy twin. The numpy
path is selected when numba is unavailable or when the CHROMAGRADE_PURE_NUMPY
environment variable is set to a non-empty value other than 0/false.
`chromagrade bench` compares the two paths.

All kernels operate on float32 and preserve exact identity: with identity
parameters every branch reduces to forms like ``v * 1 + 0`` that are exact in
IEEE arithmetic.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

import numpy as np

from .imaging import LUMA_WEIGHTS

ENV_FLAG = "CHROMAGRADE_PURE_NUMPY"

try:
    import warnings

    # Old TBB builds make numba warn at threading-layer init before falling
    # back to omp/workqueue; the fallback is fine, the warning is noise.
    warnings.filterwarnings("ignore", message=".*TBB.*")
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env-flag path
    HAVE_NUMBA = False

FORCE_NUMPY = os.environ.get(ENV_FLAG, "").strip().lower() not in ("", "0", "false")

_WR = np.float32(LUMA_WEIGHTS[0])
_WG = np.float32(LUMA_WEIGHTS[1])
_WB = np.float32(LUMA_WEIGHTS[2])
_GAMMA_FLOOR = np.float32(1e-6)


def _gauss5(sigma: float = 1.0) -> np.ndarray:
    d = np.arange(-2, 3, dtype=np.float64)
    w = np.exp(-(d * d) / (2.0 * sigma * sigma))
    return (w / w.sum()).astype(np.float32)


# 5-tap Gaussian, sigma = 1.0, shared with the torch twin.
GAUSS5 = _gauss5()


def numba_active() -> bool:
    return HAVE_NUMBA and not FORCE_NUMPY


@contextmanager
def pure_numpy():
    """Temporarily force the numpy fallback (used by the benchmark and tests)."""
    global FORCE_NUMPY
    prev = FORCE_NUMPY
    FORCE_NUMPY = True
    try:
        yield
    finally:
        FORCE_NUMPY = prev


# ---------------------------------------------------------------------------
# Pointwise grading chain
# ---------------------------------------------------------------------------


def _grade_pixels_numpy(flat, temp_shift, brightness, contrast, contrast_off, gamma, saturation, hue_mat):
    out = flat.copy()
    out[:, 0] += temp_shift
    out[:, 2] -= temp_shift
    out += brightness
    out = out * contrast + contrast_off
    np.clip(out, 0.0, 1.0, out=out)
    if gamma != 1.0:
        out = np.exp(gamma * np.log(np.maximum(out, _GAMMA_FLOOR)))
    out = out @ hue_mat.T
    luma = out @ np.array([_WR, _WG, _WB], dtype=np.float32)
    out = out * saturation + luma[:, None] * (np.float32(1.0) - saturation)
    np.clip(out, 0.0, 1.0, out=out)
    return np.ascontiguousarray(out)


if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _grade_pixels_numba(flat, temp_shift, brightness, contrast, contrast_off, gamma, saturation, hue_mat):  # pragma: no cover - compiled
        n = flat.shape[0]
        out = np.empty_like(flat)
        one_minus_sat = np.float32(1.0) - saturation
        apply_gamma = gamma != np.float32(1.0)
        for i in prange(n):
            r = flat[i, 0] + temp_shift
            g = flat[i, 1]
            b = flat[i, 2] - temp_shift

            r += brightness
            g += brightness
            b += brightness

            r = r * contrast + contrast_off
            g = g * contrast + contrast_off
            b = b * contrast + contrast_off

            r = min(max(r, np.float32(0.0)), np.float32(1.0))
            g = min(max(g, np.float32(0.0)), np.float32(1.0))
            b = min(max(b, np.float32(0.0)), np.float32(1.0))

            if apply_gamma:
                r = np.exp(gamma * np.log(max(r, _GAMMA_FLOOR)))
                g = np.exp(gamma * np.log(max(g, _GAMMA_FLOOR)))
                b = np.exp(gamma * np.log(max(b, _GAMMA_FLOOR)))

            rr = hue_mat[0, 0] * r + hue_mat[0, 1] * g + hue_mat[0, 2] * b
            gg = hue_mat[1, 0] * r + hue_mat[1, 1] * g + hue_mat[1, 2] * b
            bb = hue_mat[2, 0] * r + hue_mat[2, 1] * g + hue_mat[2, 2] * b

            luma = _WR * rr + _WG * gg + _WB * bb
            rr = rr * saturation + luma * one_minus_sat
            gg = gg * saturation + luma * one_minus_sat
            bb = bb * saturation + luma * one_minus_sat

            out[i, 0] = min(max(rr, np.float32(0.0)), np.float32(1.0))
            out[i, 1] = min(max(gg, np.float32(0.0)), np.float32(1.0))
            out[i, 2] = min(max(bb, np.float32(0.0)), np.float32(1.0))
        return out


def grade_pixels(flat: np.ndarray, brightness: float, contrast: float, gamma: float,
                 saturation: float, temperature: float, hue_mat: np.ndarray) -> np.ndarray:
    """Run the pointwise grading chain over an (N, 3) float32 array."""
    flat = np.ascontiguousarray(flat, dtype=np.float32)
    args = (
        np.float32(0.3) * np.float32(temperature),
        np.float32(brightness),
        np.float32(contrast),
        np.float32(0.5) - np.float32(0.5) * np.float32(contrast),
        np.float32(gamma),
        np.float32(saturation),
        np.ascontiguousarray(hue_mat, dtype=np.float32),
    )
    if numba_active():
        return _grade_pixels_numba(flat, *args)
    return _grade_pixels_numpy(flat, *args)


# ---------------------------------------------------------------------------
# Unsharp mask (Gaussian 5x5, sigma 1.0, replicate borders)
# ---------------------------------------------------------------------------


def _blur_numpy(img, w):
    h = img.shape[0]
    padded = np.pad(img, ((2, 2), (0, 0), (0, 0)), mode="edge")
    tmp = np.zeros_like(img)
    for k in range(5):
        tmp += w[k] * padded[k:k + h]
    wd = img.shape[1]
    padded = np.pad(tmp, ((0, 0), (2, 2), (0, 0)), mode="edge")
    blur = np.zeros_like(img)
    for k in range(5):
        blur += w[k] * padded[:, k:k + wd]
    return blur


def _unsharp_numpy(img, amount, w):
    blur = _blur_numpy(img, w)
    out = img + amount * (img - blur)
    return np.clip(out, 0.0, 1.0)


if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _unsharp_numba(img, amount, w):  # pragma: no cover - compiled
        h, wd = img.shape[0], img.shape[1]
        tmp = np.empty_like(img)
        for y in prange(h):
            for x in range(wd):
                for c in range(3):
                    acc = np.float32(0.0)
                    for k in range(-2, 3):
                        yy = min(max(y + k, 0), h - 1)
                        acc += w[k + 2] * img[yy, x, c]
                    tmp[y, x, c] = acc
        out = np.empty_like(img)
        for y in prange(h):
            for x in range(wd):
                for c in range(3):
                    acc = np.float32(0.0)
                    for k in range(-2, 3):
                        xx = min(max(x + k, 0), wd - 1)
                        acc += w[k + 2] * tmp[y, xx, c]
                    v = img[y, x, c] + amount * (img[y, x, c] - acc)
                    out[y, x, c] = min(max(v, np.float32(0.0)), np.float32(1.0))
        return out


def unsharp(img: np.ndarray, amount: float) -> np.ndarray:
    """clamp(x + amount * (x - gauss_blur(x))) over an (H, W, 3) float32 image."""
    img = np.ascontiguousarray(img, dtype=np.float32)
    amount32 = np.float32(amount)
    if numba_active():
        return _unsharp_numba(img, amount32, GAUSS5)
    return _unsharp_numpy(img, amount32, GAUSS5)


# ---------------------------------------------------------------------------
# Trilinear 3D LUT application
# ---------------------------------------------------------------------------


def _lut_apply_numpy(flat, table):
    n = table.shape[0]
    pos = np.clip(flat, 0.0, 1.0) * np.float32(n - 1)
    i0 = np.minimum(pos.astype(np.int64), n - 2)
    f = pos - i0
    r0, g0, b0 = i0[:, 0], i0[:, 1], i0[:, 2]
    r1, g1, b1 = r0 + 1, g0 + 1, b0 + 1
    fr, fg, fb = f[:, 0:1], f[:, 1:2], f[:, 2:3]

    # table axes are (b, g, r); interpolate red first, then green, then blue.
    c00 = (1 - fr) * table[b0, g0, r0] + fr * table[b0, g0, r1]
    c10 = (1 - fr) * table[b0, g1, r0] + fr * table[b0, g1, r1]
    c01 = (1 - fr) * table[b1, g0, r0] + fr * table[b1, g0, r1]
    c11 = (1 - fr) * table[b1, g1, r0] + fr * table[b1, g1, r1]
    c0 = (1 - fg) * c00 + fg * c10
    c1 = (1 - fg) * c01 + fg * c11
    return ((1 - fb) * c0 + fb * c1).astype(np.float32)


if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _lut_apply_numba(flat, table):  # pragma: no cover - compiled
        n = table.shape[0]
        npx = flat.shape[0]
        out = np.empty_like(flat)
        scale = np.float32(n - 1)
        one = np.float32(1.0)
        for i in prange(npx):
            pr = min(max(flat[i, 0], np.float32(0.0)), one) * scale
            pg = min(max(flat[i, 1], np.float32(0.0)), one) * scale
            pb = min(max(flat[i, 2], np.float32(0.0)), one) * scale
            r0 = min(int(pr), n - 2)
            g0 = min(int(pg), n - 2)
            b0 = min(int(pb), n - 2)
            fr = pr - r0
            fg = pg - g0
            fb = pb - b0
            wr0 = one - fr
            wg0 = one - fg
            wb0 = one - fb
            for c in range(3):
                c00 = wr0 * table[b0, g0, r0, c] + fr * table[b0, g0, r0 + 1, c]
                c10 = wr0 * table[b0, g0 + 1, r0, c] + fr * table[b0, g0 + 1, r0 + 1, c]
                c01 = wr0 * table[b0 + 1, g0, r0, c] + fr * table[b0 + 1, g0, r0 + 1, c]
                c11 = wr0 * table[b0 + 1, g0 + 1, r0, c] + fr * table[b0 + 1, g0 + 1, r0 + 1, c]
                c0 = wg0 * c00 + fg * c10
                c1 = wg0 * c01 + fg * c11
                out[i, c] = wb0 * c0 + fb * c1
        return out


def lut_apply(flat: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Trilinear lookup of (N, 3) pixels in an (n, n, n, 3) table with (b, g, r) axes."""
    flat = np.ascontiguousarray(flat, dtype=np.float32)
    table = np.ascontiguousarray(table, dtype=np.float32)
    if numba_active():
        return _lut_apply_numba(flat, table)
    return _lut_apply_numpy(flat, table)


def warmup() -> None:
    """Force-compile the numba kernels on a tiny input (no-op on the numpy path)."""
    if not numba_active():
        return
    px = np.zeros((2, 3), dtype=np.float32)
    eye = np.eye(3, dtype=np.float32)
    grade_pixels(px, 0.0, 1.0, 1.0, 1.0, 0.0, eye)
    unsharp(np.zeros((3, 3, 3), dtype=np.float32), 0.5)
    lut_apply(px, np.zeros((2, 2, 2, 3), dtype=np.float32))

"""Kernel benchmark: numba @njit vs the pure-numpy fallback, and the
parametric grading path vs baked-LUT application."""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np

from . import _kernels
from .color_ops import GradingParams, apply_params
from .lut import apply_lut, bake_lut


def _time(fn, repeats: int = 5) -> float:
    fn()  # warmup / JIT
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats * 1000.0


def run_bench(height: int = 1080, width: int = 1920, repeats: int = 5,
              lut_size: int = 33, seed: int = 0) -> dict:
    """Benchmark both kernel paths on one synthetic frame; returns ms figures."""
    rng = np.random.default_rng(seed)
    frame = rng.random((height, width, 3)).astype(np.float32)
    params = GradingParams(brightness=0.05, contrast=1.2, gamma=1.1, hue=0.1,
                           saturation=1.2, sharpness=0.8, temperature=0.05)
    lut = bake_lut(params, lut_size)

    results: dict = {
        "frame": f"{height}x{width}",
        "repeats": repeats,
        "numba_available": _kernels.HAVE_NUMBA,
        "lut_size": lut_size,
        "ms": {},
    }

    def measure(tag: str) -> None:
        results["ms"][tag] = {
            "grade_parametric": round(_time(lambda: apply_params(frame, params), repeats), 3),
            "apply_lut": round(_time(lambda: apply_lut(frame, lut), repeats), 3),
        }

    if _kernels.numba_active():
        measure("numba")
        with _kernels.pure_numpy():
            measure("numpy")
        nb, np_ = results["ms"]["numba"], results["ms"]["numpy"]
        results["speedup_numba_vs_numpy"] = {
            k: round(np_[k] / nb[k], 2) if nb[k] > 0 else None for k in nb
        }
    else:
        with _kernels.pure_numpy():
            measure("numpy")

    fastest = results["ms"].get("numba") or results["ms"]["numpy"]
    if fastest["apply_lut"] > 0:
        results["lut_vs_parametric_throughput_ratio"] = round(
            fastest["grade_parametric"] / fastest["apply_lut"], 2
        )
    return results


def format_report(results: dict) -> str:
    lines = [f"frame {results['frame']}  (mean of {results['repeats']} runs, ms)"]
    for tag, ms in results["ms"].items():
        lines.append(f"  {tag:6s} grade_parametric={ms['grade_parametric']:9.3f}  "
                     f"apply_lut={ms['apply_lut']:9.3f}")
    if "speedup_numba_vs_numpy" in results:
        s = results["speedup_numba_vs_numpy"]
        lines.append(f"  numba speedup: grade {s['grade_parametric']}x, lut {s['apply_lut']}x")
    if "lut_vs_parametric_throughput_ratio" in results:
        lines.append(f"  LUT path is {results['lut_vs_parametric_throughput_ratio']}x "
                     f"the parametric path's throughput")
    return "\n".join(lines)


def write_results(results: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(results, indent=2) + "\n")

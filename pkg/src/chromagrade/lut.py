"""3D LUT baking and application, plus `.cube` interchange.

A grading parameter set is baked by evaluating the pointwise chain on an
equispaced lattice; sharpness is spatial and cannot be represented pointwise,
so it is excluded from baked tables. Grid values are i/(n-1) over [0, 1] so
both the black and white points land exactly on the lattice (matching the
`.cube` domain convention).

Table memory layout: (n, n, n, 3) with axes (b, g, r), so the flattened entry
order is red-fastest, exactly as `.cube` files store it.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .color_ops import GradingParams, apply_pointwise
from .imaging import RgbImage, validate_image

DEFAULT_LUT_SIZE = 33
MIN_LUT_SIZE = 2
MAX_LUT_SIZE = 129


class CubeParseError(ValueError):
    """Malformed `.cube` input; ``line`` is the 1-based offending line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Lut3D:
    """An n^3 RGB lattice in [0, 1]; table axes are (b, g, r).

    Entries are stored float64 so that `.cube` round-trips keep the full
    6-decimal quantization precision (parsing into float32 would double-round).
    """

    n: int
    table: np.ndarray

    def __post_init__(self) -> None:
        if self.n < MIN_LUT_SIZE:
            raise ValueError(f"LUT size must be >= {MIN_LUT_SIZE}, got {self.n}")
        expected = (self.n, self.n, self.n, 3)
        if self.table.shape != expected:
            raise ValueError(f"table shape {self.table.shape} != {expected}")
        if self.table.dtype != np.float64:
            object.__setattr__(self, "table", self.table.astype(np.float64))
        if not np.isfinite(self.table).all():
            raise ValueError("LUT contains non-finite entries")
        if self.table.min() < 0.0 or self.table.max() > 1.0:
            raise ValueError("LUT entries outside [0, 1]")

    @property
    def entries(self) -> np.ndarray:
        """(n^3, 3) view in red-fastest order."""
        return self.table.reshape(-1, 3)


def grid_coords(n: int) -> np.ndarray:
    """The identity lattice: value at [bi, gi, ri] is (ri, gi, bi)/(n-1)."""
    vals = (np.arange(n, dtype=np.float64) / (n - 1)).astype(np.float32)
    grid = np.empty((n, n, n, 3), dtype=np.float32)
    grid[..., 0] = vals[None, None, :]
    grid[..., 1] = vals[None, :, None]
    grid[..., 2] = vals[:, None, None]
    return grid


def bake_lut(p: GradingParams, n: int = DEFAULT_LUT_SIZE) -> Lut3D:
    """Sample the pointwise grading chain on an n^3 lattice (sharpness excluded)."""
    if not MIN_LUT_SIZE <= n <= MAX_LUT_SIZE:
        raise ValueError(f"LUT size must be in [{MIN_LUT_SIZE}, {MAX_LUT_SIZE}], got {n}")
    grid = grid_coords(n)
    graded = apply_pointwise(grid.reshape(-1, 3), p)
    return Lut3D(n=n, table=graded.reshape(n, n, n, 3))


def apply_lut(img: RgbImage, lut: Lut3D) -> RgbImage:
    """Trilinear interpolation of each pixel among its 8 surrounding lattice entries."""
    validate_image(img)
    flat = img.reshape(-1, 3)
    out = _kernels.lut_apply(flat, lut.table)
    return out.reshape(img.shape)


# ---------------------------------------------------------------------------
# .cube serialization (Adobe/Resolve text format, red index fastest)
# ---------------------------------------------------------------------------


def cube_text(lut: Lut3D, title: str = "chromagrade") -> str:
    title = title.replace('"', "'")
    lines = [
        f'TITLE "{title}"',
        f"LUT_3D_SIZE {lut.n}",
        "DOMAIN_MIN 0.0 0.0 0.0",
        "DOMAIN_MAX 1.0 1.0 1.0",
    ]
    for r, g, b in lut.entries:
        lines.append(f"{r:.6f} {g:.6f} {b:.6f}")
    return "\n".join(lines) + "\n"


def write_cube(lut: Lut3D, path: str | Path, title: str = "chromagrade") -> None:
    """Write a `.cube` file (LF line endings, 6-decimal entries)."""
    Path(path).write_text(cube_text(lut, title), newline="\n")


def parse_cube(text: str) -> Lut3D:
    """Parse `.cube` text; raises CubeParseError with a line number on any defect."""
    n: int | None = None
    entries: list[tuple[float, float, float]] = []
    last_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        last_line = lineno
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head = line.split(None, 1)[0]
        if head == "TITLE":
            continue
        if head == "LUT_3D_SIZE":
            parts = line.split()
            if len(parts) != 2 or not parts[1].isdigit():
                raise CubeParseError(lineno, f"malformed LUT_3D_SIZE: {line!r}")
            n = int(parts[1])
            if n < MIN_LUT_SIZE:
                raise CubeParseError(lineno, f"LUT_3D_SIZE must be >= {MIN_LUT_SIZE}, got {n}")
            continue
        if head in ("DOMAIN_MIN", "DOMAIN_MAX"):
            parts = line.split()
            try:
                vals = [float(v) for v in parts[1:]]
            except ValueError:
                raise CubeParseError(lineno, f"malformed {head}: {line!r}") from None
            want = 0.0 if head == "DOMAIN_MIN" else 1.0
            if len(vals) != 3 or any(v != want for v in vals):
                raise CubeParseError(lineno, f"unsupported {head} {vals}; only the [0,1] domain is supported")
            continue
        if head[0].isalpha():
            raise CubeParseError(lineno, f"unknown directive {head!r}")

        if n is None:
            raise CubeParseError(lineno, "data before LUT_3D_SIZE")
        parts = line.split()
        if len(parts) != 3:
            raise CubeParseError(lineno, f"expected 3 components, got {len(parts)}: {line!r}")
        try:
            rgb = tuple(float(v) for v in parts)
        except ValueError:
            raise CubeParseError(lineno, f"non-numeric entry: {line!r}") from None
        if any(not np.isfinite(v) for v in rgb):
            raise CubeParseError(lineno, f"non-finite entry: {line!r}")
        if any(v < 0.0 or v > 1.0 for v in rgb):
            raise CubeParseError(lineno, f"out-of-domain value in entry: {line!r}")
        if len(entries) >= (n ** 3):
            raise CubeParseError(lineno, f"more than {n ** 3} entries for LUT_3D_SIZE {n}")
        entries.append(rgb)

    if n is None:
        raise CubeParseError(last_line or 1, "missing LUT_3D_SIZE header")
    if len(entries) != n ** 3:
        raise CubeParseError(
            last_line or 1,
            f"expected {n ** 3} entries for LUT_3D_SIZE {n}, got {len(entries)} "
            f"(missing {n ** 3 - len(entries)})",
        )
    table = np.array(entries, dtype=np.float64).reshape(n, n, n, 3)
    return Lut3D(n=n, table=table)


def read_cube(path: str | Path) -> Lut3D:
    """Read and parse a `.cube` file."""
    return parse_cube(Path(path).read_text())

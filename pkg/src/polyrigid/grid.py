"""Uniform-grid fields and their plain-text file format.

Nodes are indexed ``values[j, i]`` with ``x = ox + i*h`` and ``y = oy + j*h``
(y outer, row major). The text format is a header line

    gridfield2 nx ny h ox oy k

followed by ``nx*ny`` lines of ``k`` floats in the same node order, where
``k`` is 1 (scalar), 2 (vector) or 4 (2x2 matrix, row major).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

MIN_NODES = 8


def _check_grid(values, h, trailing, mask):
    if values.ndim != 2 + len(trailing) or values.shape[2:] != trailing:
        raise ValueError(f"unexpected value shape {values.shape}")
    ny, nx = values.shape[:2]
    if nx < MIN_NODES or ny < MIN_NODES:
        raise ValueError(f"grid needs at least {MIN_NODES} nodes per side, got {nx}x{ny}")
    if not h > 0:
        raise ValueError("grid spacing must be positive")
    if not np.all(np.isfinite(values)):
        raise ValueError("grid values must be finite")
    if mask is not None and mask.shape != (ny, nx):
        raise ValueError("mask shape does not match the grid")


@dataclass
class GridField2:
    """A sampled map into R^2 (values ``(ny, nx, 2)``) or a 2x2 matrix field ``(ny, nx, 2, 2)``."""

    values: np.ndarray
    h: float
    origin: tuple = (0.0, 0.0)
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        trailing = (2, 2) if self.values.ndim == 4 else (2,)
        _check_grid(self.values, self.h, trailing, self.mask)
        self.origin = (float(self.origin[0]), float(self.origin[1]))

    @property
    def nx(self):
        return self.values.shape[1]

    @property
    def ny(self):
        return self.values.shape[0]

    @property
    def is_matrix(self):
        return self.values.ndim == 4

    def coords(self):
        return node_coords(self.nx, self.ny, self.h, self.origin)


@dataclass
class GridScalar:
    values: np.ndarray
    h: float
    origin: tuple = (0.0, 0.0)
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        _check_grid(self.values, self.h, (), self.mask)
        self.origin = (float(self.origin[0]), float(self.origin[1]))

    @property
    def nx(self):
        return self.values.shape[1]

    @property
    def ny(self):
        return self.values.shape[0]

    def coords(self):
        return node_coords(self.nx, self.ny, self.h, self.origin)


def node_coords(nx, ny, h, origin):
    x = origin[0] + h * np.arange(nx)
    y = origin[1] + h * np.arange(ny)
    return np.meshgrid(x, y)


def sample_map(f, cells, lo=-1.0, hi=1.0):
    """Sample ``f(X, Y) -> (u1, u2)`` on the square ``[lo, hi]^2`` with ``cells`` cells per side."""
    h = (hi - lo) / cells
    X, Y = node_coords(cells + 1, cells + 1, h, (lo, lo))
    u1, u2 = f(X, Y)
    return GridField2(np.stack([u1, u2], axis=-1), h, (lo, lo))


class FieldFormatError(ValueError):
    pass


def write_field(fh, field):
    vals = field.values
    k = 1 if vals.ndim == 2 else int(np.prod(vals.shape[2:]))
    fh.write(f"gridfield2 {field.nx} {field.ny} {field.h!r} {field.origin[0]!r} {field.origin[1]!r} {k}\n")
    for row in vals.reshape(field.nx * field.ny, k):
        fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def save_field(path, field):
    with open(path, "w") as fh:
        write_field(fh, field)


def load_field(path):
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_field(data)


def parse_field(data):
    """Parse bytes in the gridfield2 format. Errors report the byte offset of the bad line."""
    if isinstance(data, str):
        data = data.encode()
    lines = data.split(b"\n")
    offsets = np.concatenate([[0], np.cumsum([len(ln) + 1 for ln in lines])])

    header = lines[0].split()
    if len(header) != 7 or header[0] != b"gridfield2":
        raise FieldFormatError("at byte 0: expected header 'gridfield2 nx ny h ox oy k'")
    try:
        nx, ny = int(header[1]), int(header[2])
        h, ox, oy = float(header[3]), float(header[4]), float(header[5])
        k = int(header[6])
    except ValueError as exc:
        raise FieldFormatError(f"at byte 0: malformed header ({exc})") from None
    if k not in (1, 2, 4):
        raise FieldFormatError(f"at byte 0: components per node must be 1, 2 or 4, got {k}")

    body = lines[1:]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != nx * ny:
        raise FieldFormatError(
            f"at byte {offsets[min(len(body), nx * ny) + 1]}: "
            f"expected {nx * ny} node lines, found {len(body)}"
        )
    vals = np.empty((nx * ny, k))
    for n, ln in enumerate(body):
        parts = ln.split()
        try:
            if len(parts) != k:
                raise ValueError(f"expected {k} values, got {len(parts)}")
            vals[n] = [float(p) for p in parts]
        except ValueError as exc:
            raise FieldFormatError(f"at byte {offsets[n + 1]}: {exc}") from None

    try:
        if k == 1:
            return GridScalar(vals.reshape(ny, nx), h, (ox, oy))
        shape = (ny, nx, 2) if k == 2 else (ny, nx, 2, 2)
        return GridField2(vals.reshape(shape), h, (ox, oy))
    except ValueError as exc:
        raise FieldFormatError(f"at byte 0: {exc}") from None

"""Binary field files and boundary-data specifications.

Field file layout (all little-endian)::

    offset  size  content
    0       4     magic b"MHSF"
    4       4     uint32 format version (1)
    8       4     uint32 n_x
    12      4     uint32 n_y
    16      4     uint32 n_z   (number of z-intervals; 0 for surface fields)
    20      4     uint32 number of components
    24      8     float64 L
    32      32    zero padding
    64      ...   float64 values, row-major, shape (ncomp, n_z + 1, n_x, n_y)

A data specification is a ``key = value`` text file with keys ``f_minus``,
``f_plus``, ``g1``, ``g2`` (``f`` sets both faces).  A value is either an
arithmetic expression in ``x`` and ``y`` or ``@path`` naming a CSV node table
(relative paths resolve against the data file).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .boundary_data import BoundaryData, field_from_csv, field_from_expression
from .errors import ValidationError
from .spectral_core import TorusGrid2

MAGIC = b"MHSF"
VERSION = 1
HEADER = struct.Struct("<4sIIIIId")
HEADER_SIZE = 64


class FieldFormatError(ValueError):
    pass


@dataclass
class FieldFile:
    values: np.ndarray  # (ncomp, nz+1, nx, ny)
    L: float

    @property
    def n_z(self) -> int:
        return self.values.shape[1] - 1

    @property
    def surface(self) -> np.ndarray:
        """Values of a surface field, shape ``(ncomp, nx, ny)``."""
        return self.values[:, 0]


def encode_field(values: np.ndarray, L: float) -> bytes:
    """Serialize ``(ncomp, nz+1, nx, ny)`` or surface ``(ncomp, nx, ny)`` values."""
    v = np.asarray(values, dtype="<f8")
    if v.ndim == 3:
        v = v[:, None]
    if v.ndim != 4:
        raise ValueError("field values must have shape (ncomp, [nz+1,] nx, ny)")
    ncomp, levels, nx, ny = v.shape
    head = HEADER.pack(MAGIC, VERSION, nx, ny, levels - 1, ncomp, float(L))
    return head.ljust(HEADER_SIZE, b"\0") + np.ascontiguousarray(v).tobytes()


def decode_field(raw: bytes) -> FieldFile:
    if len(raw) < HEADER_SIZE:
        raise FieldFormatError("file shorter than the header")
    magic, version, nx, ny, nz, ncomp, L = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FieldFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FieldFormatError(f"unsupported version {version}")
    count = ncomp * (nz + 1) * nx * ny
    body = raw[HEADER_SIZE:]
    if len(body) != 8 * count:
        raise FieldFormatError(f"expected {8 * count} value bytes, found {len(body)}")
    vals = np.frombuffer(body, dtype="<f8").reshape(ncomp, nz + 1, nx, ny).astype(float)
    return FieldFile(vals, L)


def write_field(path: str | Path, values: np.ndarray, L: float) -> None:
    Path(path).write_bytes(encode_field(values, L))


def read_field(path: str | Path) -> FieldFile:
    return decode_field(Path(path).read_bytes())


# -- data specifications -----------------------------------------------------------

DATA_KEYS = ("f_minus", "f_plus", "g1", "g2")


def parse_data_spec(text: str, grid: TorusGrid2, base: Path | None = None) -> BoundaryData:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"data line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key == "f":
            entries["f_minus"] = entries["f_plus"] = val
        elif key in DATA_KEYS:
            entries[key] = val
        else:
            raise ValidationError(f"data line {lineno}: unknown key {key!r}")

    def load(key: str) -> np.ndarray:
        val = entries.get(key, "0")
        if val.startswith("@"):
            path = Path(val[1:].strip())
            if base is not None and not path.is_absolute():
                path = base / path
            return field_from_csv(path, grid)
        return field_from_expression(val, grid)

    return BoundaryData(load("f_minus"), load("f_plus"), np.stack([load("g1"), load("g2")]))


def load_data_spec(path: str | Path, grid: TorusGrid2) -> BoundaryData:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read data spec {path}: {exc.strerror}") from None
    return parse_data_spec(text, grid, path.parent)


def data_to_surface(data: BoundaryData) -> np.ndarray:
    """Stack ``(f_minus, f_plus, g1, g2)`` for storage as one surface field."""
    return np.stack([data.f_minus, data.f_plus, data.g[0], data.g[1]])


def data_from_surface(values: np.ndarray) -> BoundaryData:
    return BoundaryData(values[0].copy(), values[1].copy(), values[2:4].copy())


def write_csv_slice(path: str | Path, values: np.ndarray, grid: TorusGrid2) -> None:
    """Write one scalar slice as ``x,y,value`` rows for plotting."""
    x, y = grid.mesh
    table = np.column_stack([x.ravel(), y.ravel(), np.asarray(values).ravel()])
    np.savetxt(path, table, delimiter=",", header="x,y,value", comments="", fmt="%.17g")

"""Binary field snapshots and deterministic CSV output.

Snapshot layout (all little-endian)::

    magic      4 bytes  b"HPE1"
    version    u32      1
    Nx, Ny     u32, u32
    L, t       f64, f64
    count      u32
    count x    16-byte UTF-8 name (NUL padded) + u8 kind tag
    payload    per field, row-major f64: Nx*(Ny+1) values for grid fields,
               Nx values for pressure profiles

Kind tags: 0 free field, 1 field vanishing at the walls, 2 pressure profile.
"""

from __future__ import annotations

import csv
import io as _io
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .grid import DIRICHLET_ZERO, FREE, Grid, PressureProfile, ScalarField, make_grid

MAGIC = b"HPE1"
VERSION = 1
_HEADER = struct.Struct("<4sIIIddI")
_ENTRY = struct.Struct("<16sB")
_KIND = {FREE: 0, DIRICHLET_ZERO: 1}
_PRESSURE = 2


class SnapshotError(ValueError):
    pass


@dataclass
class Snapshot:
    grid: Grid
    t: float
    fields: dict

    def __getitem__(self, name):
        return self.fields[name]


def _encode_name(name: str) -> bytes:
    raw = name.encode("utf-8")
    if not raw or len(raw) > 16 or b"\x00" in raw:
        raise SnapshotError(f"field name {name!r} must be 1 to 16 UTF-8 bytes without NUL")
    return raw.ljust(16, b"\x00")


def encode_snapshot(fields: dict, t: float) -> bytes:
    """Serialize named :class:`ScalarField` / :class:`PressureProfile` objects."""
    if not fields:
        raise SnapshotError("snapshot needs at least one field")
    grids = {(f.grid.L, f.grid.Nx, f.grid.Ny) for f in fields.values()}
    if len(grids) != 1:
        raise SnapshotError("all fields of a snapshot must share one grid")
    L, Nx, Ny = grids.pop()
    parts = [_HEADER.pack(MAGIC, VERSION, Nx, Ny, float(L), float(t), len(fields))]
    payload = []
    for name, f in fields.items():
        if isinstance(f, PressureProfile):
            kind = _PRESSURE
        elif isinstance(f, ScalarField):
            kind = _KIND[f.bc_y]
        else:
            raise SnapshotError(f"field {name!r} has unsupported type {type(f).__name__}")
        parts.append(_ENTRY.pack(_encode_name(name), kind))
        payload.append(np.ascontiguousarray(f.values, dtype="<f8").tobytes())
    return b"".join(parts + payload)


def decode_snapshot(data: bytes) -> Snapshot:
    if len(data) < _HEADER.size:
        raise SnapshotError(f"length mismatch: {len(data)} bytes is shorter than the header")
    magic, version, Nx, Ny, L, t, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic {magic!r}; not a snapshot file")
    if version != VERSION:
        raise SnapshotError(f"unsupported version {version} (this reader handles {VERSION})")
    off = _HEADER.size
    if len(data) < off + count * _ENTRY.size:
        raise SnapshotError("length mismatch: truncated field table")
    entries = []
    for _ in range(count):
        raw, kind = _ENTRY.unpack_from(data, off)
        off += _ENTRY.size
        if kind not in (0, 1, 2):
            raise SnapshotError(f"unknown field kind tag {kind}")
        entries.append((raw.rstrip(b"\x00").decode("utf-8"), kind))
    sizes = [Nx if kind == _PRESSURE else Nx * (Ny + 1) for _, kind in entries]
    expected = off + 8 * sum(sizes)
    if len(data) != expected:
        raise SnapshotError(f"length mismatch: header implies {expected} bytes, file has {len(data)}")
    grid = make_grid(L, Nx, Ny)
    out = {}
    for (name, kind), n in zip(entries, sizes):
        arr = np.frombuffer(data, dtype="<f8", count=n, offset=off).astype(float)
        off += 8 * n
        if kind == _PRESSURE:
            out[name] = PressureProfile(grid, arr)
        else:
            bc = DIRICHLET_ZERO if kind == 1 else FREE
            out[name] = ScalarField(grid, arr.reshape(Nx, Ny + 1), bc)
    return Snapshot(grid, t, out)


def write_snapshot(path, fields: dict, t: float) -> None:
    Path(path).write_bytes(encode_snapshot(fields, t))


def read_snapshot(path) -> Snapshot:
    return decode_snapshot(Path(path).read_bytes())


# -- CSV ------------------------------------------------------------------------------

def format_value(v) -> str:
    """17 significant digits for floats; integers and booleans verbatim."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def csv_text(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} entries, header has {len(columns)}")
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def emit_csv(path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    Path(path).write_text(csv_text(columns, rows), encoding="utf-8", newline="")


def emit_norm_csv(path, records: Sequence, record_type=None) -> None:
    """Write NormSnapshot or IterateDiagnostics records with a header row.

    ``record_type`` supplies the header when ``records`` is empty.
    """
    from .norms import NormSnapshot
    from .picard import IterateDiagnostics

    kind = record_type if record_type is not None else (type(records[0]) if records else NormSnapshot)
    if kind is NormSnapshot:
        columns = NormSnapshot.columns()
    elif kind is IterateDiagnostics:
        columns = IterateDiagnostics.COLUMNS
    else:
        raise TypeError(f"unsupported record type {kind.__name__}")
    emit_csv(path, columns, (r.row() for r in records))


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]

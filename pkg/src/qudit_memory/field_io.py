"""CSV and binary serialization of :class:`ComplexField2D`.

Binary layout (little-endian)::

    bytes 0-3    magic b"VMS1"
    bytes 4-7    uint32 samples per side
    bytes 8-15   float64 physical extent (m)
    bytes 16-    complex amplitude as (re, im) float64 pairs, row-major

Neither format stores the wavelength; pass it back in when loading.
"""

from __future__ import annotations

import csv
import math
import struct
from pathlib import Path

import numpy as np

from .beam_optics import DEFAULT_WAVELENGTH, ComplexField2D, Grid2D
from .exceptions import ParameterError

MAGIC = b"VMS1"
_HEADER = struct.Struct("<4sId")
CSV_COLUMNS = ("x_m", "y_m", "re", "im")


def write_field_binary(field: ComplexField2D, path) -> None:
    grid = field.grid
    header = _HEADER.pack(MAGIC, grid.samples_per_side, grid.physical_extent)
    body = np.ascontiguousarray(field.amplitude, dtype="<c16").tobytes()
    Path(path).write_bytes(header + body)


def read_field_binary(path, wavelength: float = DEFAULT_WAVELENGTH) -> ComplexField2D:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ParameterError(f"{path}: truncated header")
    magic, side, extent = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ParameterError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 16 * side * side
    if len(data) != expected:
        raise ParameterError(f"{path}: expected {expected} bytes, found {len(data)}")
    amp = np.frombuffer(data, dtype="<c16", offset=_HEADER.size).reshape(side, side)
    return ComplexField2D(Grid2D(side, extent), amp, wavelength)


def write_field_csv(field: ComplexField2D, path) -> None:
    """One row per pixel, row-major; floats written with ``repr`` so they round-trip."""
    c = [float(v) for v in field.grid.coords()]
    amp = field.amplitude
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for i, y in enumerate(c):
            for j, x in enumerate(c):
                a = complex(amp[i, j])
                fh.write(f"{x!r},{y!r},{a.real!r},{a.imag!r}\n")


def _recover_extent(x0: float, x1: float, n: int) -> float:
    # The writer computed x_i = (i - n/2) * (extent / n); search the few
    # floats near the naive estimate for the one that reproduces x_0 and x_1.
    guess = -2.0 * x0
    candidates = [guess]
    lo = hi = guess
    for _ in range(8):
        lo, hi = math.nextafter(lo, 0.0), math.nextafter(hi, math.inf)
        candidates += [lo, hi]
    for ext in candidates:
        pitch = ext / n
        if (0 - n // 2) * pitch == x0 and (1 - n // 2) * pitch == x1:
            return ext
    return guess


def read_field_csv(path, wavelength: float = DEFAULT_WAVELENGTH) -> ComplexField2D:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_COLUMNS:
            raise ParameterError(f"{path}: expected header {','.join(CSV_COLUMNS)}")
        rows = [tuple(map(float, row)) for row in reader]
    n = math.isqrt(len(rows))
    if n * n != len(rows) or n < 2:
        raise ParameterError(f"{path}: {len(rows)} rows is not a square grid")
    arr = np.array(rows)
    extent = _recover_extent(arr[0, 0], arr[1, 0], n)
    amp = (arr[:, 2] + 1j * arr[:, 3]).reshape(n, n)
    return ComplexField2D(Grid2D(n, extent), amp, wavelength)

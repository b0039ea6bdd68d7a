"""Image similarity, cross-talk contrast and mode-overlap matrices."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .beam_optics import ComplexField2D
from .exceptions import DegenerateInputError, ParameterError
from .validation import check_labels, check_nonnegative


@dataclass(frozen=True, eq=False)
class CrosstalkMatrix:
    """``entries[m, n]``: signal in projected mode ``n`` for input mode ``m``."""

    labels: tuple[int, ...]
    entries: np.ndarray

    def __post_init__(self):
        e = np.array(self.entries, dtype=float)
        labels = check_labels(self.labels)
        if e.ndim != 2 or e.shape != (len(labels), len(labels)):
            raise ParameterError(f"entries must be {len(labels)}x{len(labels)}, got {e.shape}")
        if np.any(~np.isfinite(e)) or np.any(e < 0):
            raise ParameterError("entries must be finite and nonnegative")
        e.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "entries", e)

    def with_background(self, b: float) -> "CrosstalkMatrix":
        """Add a uniform detection background ``b`` to every entry."""
        return CrosstalkMatrix(self.labels, self.entries + check_nonnegative(b, "b"))


@dataclass(frozen=True)
class ContrastResult:
    per_mode: tuple[float, ...]
    average: float


def _image(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.size == 0:
        raise ParameterError(f"{name} must be a nonempty 2-D array")
    if np.any(~np.isfinite(a)) or np.any(a < 0):
        raise ParameterError(f"{name} must be finite and nonnegative")
    if not np.any(a > 0):
        raise DegenerateInputError(f"{name} has no positive pixel")
    return a


def similarity(a, b) -> float:
    """``sum A B / sqrt(sum A^2 sum B^2)`` for nonnegative images."""
    a = _image(a, "a")
    b = _image(b, "b")
    if a.shape != b.shape:
        raise ParameterError(f"image shapes differ: {a.shape} vs {b.shape}")
    # scale first so large pixel values cannot overflow the sums
    a = a / a.max()
    b = b / b.max()
    s = np.sum(a * b) / np.sqrt(np.sum(a * a) * np.sum(b * b))
    return float(min(s, 1.0))


def crosstalk_contrast(m: CrosstalkMatrix) -> ContrastResult:
    """Per-mode ``C_m = (E_mm - max_{n != m} E_mn) / E_mm`` and their mean."""
    e = m.entries
    diag = np.diag(e)
    if np.any(diag <= 0):
        raise ParameterError("every diagonal entry must be positive")
    if len(diag) == 1:
        return ContrastResult((1.0,), 1.0)
    off = e.copy()
    np.fill_diagonal(off, -np.inf)
    per_mode = (diag - off.max(axis=1)) / diag
    return ContrastResult(tuple(float(c) for c in per_mode), float(np.mean(per_mode)))


def mode_overlap_matrix(fields: Sequence[ComplexField2D], labels: Sequence[int] | None = None) -> CrosstalkMatrix:
    """``E_mn = |<field_m, field_n>|^2`` with the pixel-area inner product."""
    fields = list(fields)
    if not fields:
        raise ParameterError("need at least one field")
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise ParameterError("all fields must share one grid")
    stack = np.array([f.amplitude.ravel() for f in fields])
    gram = (stack.conj() @ stack.T) * grid.pixel_area
    e = np.abs(gram) ** 2
    e = 0.5 * (e + e.T)
    labels = tuple(range(len(fields))) if labels is None else tuple(labels)
    return CrosstalkMatrix(labels, e)


def crosstalk_csv(m: CrosstalkMatrix) -> str:
    """Matrix with a header row and first column of mode labels, 9 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["ell"] + [str(l) for l in m.labels])
    for label, row in zip(m.labels, m.entries):
        w.writerow([str(label)] + [f"{v:.9g}" for v in row])
    return buf.getvalue()


def read_crosstalk_csv(text: str) -> CrosstalkMatrix:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][0] != "ell":
        raise ParameterError("expected a header row starting with 'ell'")
    labels = tuple(int(v) for v in rows[0][1:])
    if [int(r[0]) for r in rows[1:]] != list(labels):
        raise ParameterError("row labels must match the header labels")
    return CrosstalkMatrix(labels, np.array([[float(v) for v in r[1:]] for r in rows[1:]]))

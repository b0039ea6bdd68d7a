"""Input validation helpers used by the public functions and estimators."""

from __future__ import annotations

import math
from numbers import Integral, Real

import numpy as np

from .exceptions import DegenerateInputError, ParameterError, ValidationError

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = -1e-9


def check_finite_scalar(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, Real):
        raise ParameterError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")
    return value


def check_positive(value, name: str) -> float:
    value = check_finite_scalar(value, name)
    if value <= 0:
        raise ParameterError(f"{name} > 0 required, got {value!r}")
    return value


def check_nonnegative(value, name: str) -> float:
    value = check_finite_scalar(value, name)
    if value < 0:
        raise ParameterError(f"{name} >= 0 required, got {value!r}")
    return value


def check_in_range(value, name: str, low: float, high: float) -> float:
    value = check_finite_scalar(value, name)
    if not low <= value <= high:
        raise ParameterError(f"{name} must lie in [{low}, {high}], got {value!r}")
    return value


def check_integer(value, name: str, low: int | None = None, high: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, Integral):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        else:
            raise ParameterError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if low is not None and value < low:
        raise ParameterError(f"{name} >= {low} required, got {value}")
    if high is not None and value > high:
        raise ParameterError(f"{name} <= {high} required, got {value}")
    return value


def check_labels(labels, name: str = "labels", bound: int = 40) -> tuple[int, ...]:
    """Distinct integer OAM labels within ``[-bound, bound]``."""
    out = tuple(check_integer(v, name, -bound, bound) for v in labels)
    if not out:
        raise ParameterError(f"{name} must be nonempty")
    if len(set(out)) != len(out):
        raise ParameterError(f"{name} must be distinct, got {list(out)}")
    return out


def check_square_matrix(m, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ParameterError(f"{name} must be a nonempty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ParameterError(f"{name} contains non-finite entries")
    return m


def check_density_matrix(rho, name: str = "rho", psd_tol: float = PSD_TOL) -> np.ndarray:
    """Return ``rho`` as complex array after checking Hermiticity, trace and PSD."""
    rho = check_square_matrix(rho, name).astype(complex)
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
        raise ValidationError(f"{name} is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValidationError(f"{name} must have unit trace, got {tr!r}")
    if np.linalg.eigvalsh(rho)[0] < psd_tol:
        raise ValidationError(f"{name} is not positive semidefinite")
    return rho


def check_counts(counts, name: str = "counts") -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    if counts.ndim != 1 or counts.size == 0:
        raise ParameterError(f"{name} must be a nonempty 1-D array")
    if not np.all(np.isfinite(counts)) or np.any(counts < 0):
        raise ParameterError(f"{name} must be finite and nonnegative")
    if counts.sum() <= 0:
        raise DegenerateInputError(f"{name} are all zero")
    return counts

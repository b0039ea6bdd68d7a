"""Qudit states over the OAM basis, the per-mode memory channel, fidelities
and the classical benchmarks a quantum memory has to beat."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import optimize, stats

from .exceptions import ChannelAnnihilationError, ParameterError, ValidationError
from .validation import (
    check_density_matrix,
    check_in_range,
    check_integer,
    check_labels,
    check_nonnegative,
    check_positive,
)

NORM_TOL = 1e-12
CONVENTIONS = ("literal", "physical")
SERIES_TAIL = 1e-12
EFFICIENCY_WEIGHTING = "retrieval-success 1-(1-eta)^N"

# Label sets of the benchmark uniform qudits, keyed by dimension.
BENCHMARK_LABELS: dict[int, tuple[int, ...]] = {
    2: (0, 12),
    5: tuple(range(-2, 3)),
    10: tuple(range(-5, 0)) + tuple(range(1, 6)),
    15: tuple(range(-7, 8)),
    20: tuple(range(-10, 0)) + tuple(range(1, 11)),
    25: tuple(range(-12, 13)),
}


@dataclass(frozen=True, eq=False)
class QuditState:
    labels: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        labels = check_labels(self.labels)
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (len(labels),):
            raise ParameterError("amplitudes must match labels in length")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(f"state must be unit-norm, got norm^2 = {norm!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_unnormalized(cls, labels, amplitudes) -> "QuditState":
        amps = np.asarray(amplitudes, dtype=complex)
        norm = math.sqrt(float(np.sum(np.abs(amps) ** 2)))
        if norm == 0:
            raise ChannelAnnihilationError("all amplitudes are zero")
        return cls(tuple(labels), amps / norm)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "re": [float(a.real) for a in self.amplitudes],
            "im": [float(a.imag) for a in self.amplitudes],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QuditState":
        try:
            re, im = np.asarray(data["re"], float), np.asarray(data["im"], float)
            return cls(tuple(data["labels"]), re + 1j * im)
        except KeyError as exc:
            raise ParameterError(f"state record is missing {exc}") from None


@dataclass(frozen=True, eq=False)
class EfficiencyVector:
    labels: tuple[int, ...]
    etas: np.ndarray

    def __post_init__(self):
        labels = check_labels(self.labels)
        etas = np.array(self.etas, dtype=float)
        if etas.shape != (len(labels),):
            raise ParameterError("etas must match labels in length")
        if np.any(~np.isfinite(etas)) or np.any(etas < 0) or np.any(etas > 1):
            raise ParameterError("every eta must lie in [0, 1]")
        etas.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "etas", etas)

    @classmethod
    def uniform(cls, labels, eta: float) -> "EfficiencyVector":
        labels = tuple(labels)
        return cls(labels, np.full(len(labels), eta))

    def lookup(self, labels) -> np.ndarray:
        index = dict(zip(self.labels, self.etas))
        missing = [l for l in labels if l not in index]
        if missing:
            raise ParameterError(f"no efficiency for labels {missing}")
        return np.array([index[l] for l in labels])


@dataclass(frozen=True)
class MemoryOutput:
    retrieved: QuditState
    channel_efficiency: float
    convention: str


def make_uniform_qudit(labels: Sequence[int]) -> QuditState:
    labels = check_labels(labels)
    d = len(labels)
    return QuditState(labels, np.full(d, 1 / math.sqrt(d), dtype=complex))


def apply_memory(state: QuditState, eff: EfficiencyVector, convention: str = "literal") -> MemoryOutput:
    """Weight each mode amplitude by its efficiency and renormalize.

    ``convention="literal"`` weights amplitudes by ``eta_m``; ``"physical"``
    weights them by ``sqrt(eta_m)``. The channel efficiency is the retrieval
    probability ``sum eta_m |a_m|^2`` in both conventions, so uniform
    efficiency ``eta`` returns the input state and ``eta``.
    """
    if convention not in CONVENTIONS:
        raise ParameterError(f"convention must be one of {CONVENTIONS}, got {convention!r}")
    etas = eff.lookup(state.labels)
    weights = etas if convention == "literal" else np.sqrt(etas)
    probs = np.abs(state.amplitudes) ** 2
    if np.all(weights * np.abs(state.amplitudes) == 0):
        raise ChannelAnnihilationError("memory maps the state to zero")
    if np.all(etas == etas[0]):
        # equal weights: renormalization is the identity, skip the rounding
        retrieved = state
    else:
        retrieved = QuditState.from_unnormalized(state.labels, weights * state.amplitudes)
    return MemoryOutput(retrieved, float(np.sum(etas * probs)), convention)


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    # eigenvalues at rounding level would enter the fidelity as sqrt(eps)
    cut = rho.shape[0] * 4 * np.finfo(float).eps * max(w[-1], 0.0)
    return (v * np.sqrt(np.where(w > cut, w, 0.0))) @ v.conj().T


def fidelity_general(rho_target, rho) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rT) r sqrt(rT)))^2``.

    Evaluated as the squared nuclear norm of ``sqrt(rT) sqrt(r)``, which
    keeps full precision when either state is rank deficient.
    """
    rho_target = check_density_matrix(rho_target, "rho_target")
    rho = check_density_matrix(rho, "rho")
    if rho_target.shape != rho.shape:
        raise ParameterError(f"dimension mismatch: {rho_target.shape} vs {rho.shape}")
    sv = np.linalg.svd(_psd_sqrt(rho_target) @ _psd_sqrt(rho), compute_uv=False)
    return float(min(np.sum(sv) ** 2, 1.0))


def fidelity_pure(target: QuditState, rho) -> float:
    rho = check_density_matrix(rho, "rho")
    if rho.shape != (target.dim, target.dim):
        raise ParameterError(f"rho has shape {rho.shape}, target has dimension {target.dim}")
    psi = target.amplitudes
    return float(np.real(psi.conj() @ rho @ psi))


def fidelity_vs_uniformity(d: int, kappas: Sequence[float]) -> float:
    """Fidelity ``(sum k)^2 / (d sum k^2)`` of the re-weighted uniform state."""
    d = check_integer(d, "d", 1)
    k = np.asarray(kappas, dtype=float)
    if k.shape != (d,):
        raise ParameterError(f"need {d} kappas, got shape {k.shape}")
    if np.any(~np.isfinite(k)) or np.any(k < 0) or np.any(k > 1):
        raise ParameterError("kappas must lie in [0, 1]")
    if k[0] != 1:
        raise ParameterError("the first kappa is the reference mode and must be 1")
    return float(np.sum(k) ** 2 / (d * np.sum(k**2)))


def _poisson_support(n: float) -> np.ndarray:
    # photon numbers 1..N_max with the Poisson tail beyond N_max below SERIES_TAIL
    n_max = max(int(stats.poisson.isf(SERIES_TAIL, n)) + 1, 2)
    while stats.poisson.sf(n_max, n) >= SERIES_TAIL:
        n_max += 1
    return np.arange(1, n_max + 1)


def classical_fidelity_bound(n: float) -> float:
    """Measure-and-prepare fidelity bound for a Poissonian input of mean ``n``.

    Photon-number terms ``(N+1)/(N+2)`` averaged over the Poisson weights
    conditioned on ``N >= 1``.
    """
    return classical_fidelity_bound_with_efficiency(n, 1.0)[0]


def classical_fidelity_bound_with_efficiency(n: float, eta: float) -> tuple[float, str]:
    """Classical bound when each ``N``-photon input is retrieved with probability
    ``1 - (1 - eta)^N``. Returns ``(value, model_name)``.

    The weighting favours multi-photon terms as ``eta`` drops, so the bound
    decreases with ``eta`` towards :func:`classical_fidelity_bound` at 1.
    """
    n = check_positive(n, "n")
    eta = check_in_range(eta, "eta", 0.0, 1.0)
    if eta == 0:
        raise ParameterError("eta > 0 required")
    big_n = _poisson_support(n)
    pmf = stats.poisson.pmf(big_n, n)
    # 1 - (1-eta)^N, accurate for small eta
    weights = -np.expm1(big_n * np.log1p(-eta)) if eta < 1 else np.ones_like(pmf)
    w = pmf * weights
    value = float(np.sum(w * (big_n + 1) / (big_n + 2)) / np.sum(w))
    return value, EFFICIENCY_WEIGHTING


def classical_bound_low_efficiency_limit(n: float) -> float:
    """``eta -> 0`` limit of the weighted bound: ``1 - (n^2 - 2n + 2 - 2 e^{-n}) / n^3``."""
    n = check_positive(n, "n")
    if n < 0.5:
        # the closed form cancels badly for small n; use 1 + 2 sum_{k>=3} (-1)^k n^(k-3) / k!
        return 1 + 2 * sum((-1) ** k * n ** (k - 3) / math.factorial(k) for k in range(3, 24))
    return 1 - (n * n - 2 * n + 2 - 2 * math.exp(-n)) / n**3


def cloning_bound(d: int) -> float:
    d = check_integer(d, "d", 2)
    return float(Fraction(1, 2) + Fraction(1, d + 1))


def _analyzer_rates(state: QuditState, phases: np.ndarray) -> np.ndarray:
    a, b = state.amplitudes
    return np.abs(a + np.exp(-1j * phases) * b) ** 2 / 2


def interference_fringe(
    state: QuditState, analyzer_phases, noise_floor: float = 0.0
) -> tuple[np.ndarray, float]:
    """Projection rates onto ``(|l1> + e^{i theta}|l2>)/sqrt 2`` and the
    fringe visibility. ``noise_floor`` is added to every rate."""
    if state.dim != 2:
        raise ParameterError(f"fringe needs a two-component state, got {state.dim}")
    b = check_nonnegative(noise_floor, "noise_floor")
    phases = np.asarray(analyzer_phases, dtype=float)
    if phases.ndim != 1 or phases.size < 2:
        raise ParameterError("analyzer_phases must be a 1-D sequence of at least two phases")
    rates = _analyzer_rates(state, phases) + b
    hi, lo = rates.max(), rates.min()
    return rates, float((hi - lo) / (hi + lo))


def ideal_visibility(state: QuditState, noise_floor: float = 0.0) -> float:
    """Visibility over a full analyzer turn, ``2|a||b| / (|a|^2 + |b|^2 + 2b)``."""
    if state.dim != 2:
        raise ParameterError(f"fringe needs a two-component state, got {state.dim}")
    a, b = np.abs(state.amplitudes)
    return float(2 * a * b / (a * a + b * b + 2 * noise_floor))


def noise_floor_for_visibility(state: QuditState, target: float) -> float:
    """Background rate that lowers the fringe visibility of ``state`` to ``target``."""
    v0 = ideal_visibility(state)
    target = check_in_range(target, "target", 0.0, v0)
    if target == 0:
        raise ParameterError("zero visibility needs an infinite floor")
    if target == v0:
        return 0.0
    hi = 1.0
    while ideal_visibility(state, hi) > target:
        hi *= 2
    return float(optimize.bisect(lambda b: ideal_visibility(state, b) - target, 0.0, hi, xtol=1e-15))


def fidelity_report_csv(rows: Sequence[tuple[str, float, str, str]]) -> str:
    """CSV text with header ``quantity,value,model,notes``; values at 9 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["quantity", "value", "model", "notes"])
    for quantity, value, model, notes in rows:
        w.writerow([quantity, f"{value:.9g}", model, notes])
    return buf.getvalue()

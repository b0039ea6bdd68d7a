"""EIT storage efficiency for a three-level Lambda medium.

The closed-form efficiency is a function of the effective optical depth
``D_eff`` seen by a mode. ``D_eff`` comes from the transverse overlap of the
mode's intensity with a Gaussian atomic density profile, so modes whose ring
radius does not depend on the topological charge see the same medium.

Rates are angular frequencies (rad/s); times are seconds; lengths meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize, special

from .beam_optics import (
    BeamSpec,
    ComplexField2D,
    Grid2D,
    pov_field_analytic,
    render_grid,
)
from .exceptions import DegenerateInputError, ParameterError
from .validation import check_nonnegative, check_positive

TWO_PI = 2 * math.pi
# Rb D1 natural linewidth.
GAMMA_D1 = TWO_PI * 5.75e6
CONTROL_RABI = TWO_PI * 20.07e6
SIGMA_R = 275e-6
MEDIUM_LENGTH = 0.02
# Peak OD reproducing eta = 0.60 for the ell = 0, k_r_index = 5 POV under the
# default medium, pulse and beam (see calibrate_peak_od).
CALIBRATED_D0 = 230.92
SQRT_LN2 = math.sqrt(math.log(2))


@dataclass(frozen=True)
class EITParams:
    """Medium and control-field parameters.

    ``gamma31`` defaults to ``Gamma / 2`` and ``gamma21`` to ``1e-3 * Gamma``.
    """

    Gamma: float = GAMMA_D1
    gamma31: float | None = None
    gamma21: float | None = None
    Omega_c: float = CONTROL_RABI
    delta_p: float = 0.0
    delta_c: float = 0.0
    D0: float = CALIBRATED_D0
    sigma_r: float = SIGMA_R
    L: float = MEDIUM_LENGTH

    def __post_init__(self):
        gamma = check_positive(self.Gamma, "Gamma")
        object.__setattr__(self, "Gamma", gamma)
        g31 = gamma / 2 if self.gamma31 is None else check_positive(self.gamma31, "gamma31")
        g21 = 1e-3 * gamma if self.gamma21 is None else check_nonnegative(self.gamma21, "gamma21")
        object.__setattr__(self, "gamma31", g31)
        object.__setattr__(self, "gamma21", g21)
        object.__setattr__(self, "Omega_c", check_nonnegative(self.Omega_c, "Omega_c"))
        object.__setattr__(self, "delta_p", float(self.delta_p))
        object.__setattr__(self, "delta_c", float(self.delta_c))
        object.__setattr__(self, "D0", check_nonnegative(self.D0, "D0"))
        object.__setattr__(self, "sigma_r", check_positive(self.sigma_r, "sigma_r"))
        object.__setattr__(self, "L", check_positive(self.L, "L"))

    def replace(self, **changes) -> "EITParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class PulseSpec:
    """Gaussian signal pulse; ``kappa`` sets the control switch-off at ``peak_time + kappa * T_p``."""

    T_p: float = 300e-9
    kappa: float = 1.1
    peak_time: float = 0.0
    shape: str = "gaussian"

    def __post_init__(self):
        object.__setattr__(self, "T_p", check_positive(self.T_p, "T_p"))
        object.__setattr__(self, "kappa", check_nonnegative(self.kappa, "kappa"))
        if self.shape != "gaussian":
            raise ParameterError(f"only gaussian pulses are supported, got {self.shape!r}")

    def amplitude(self, t):
        """Field envelope whose intensity has FWHM ``T_p``."""
        t = np.asarray(t, dtype=float)
        return np.exp(-2 * math.log(2) * ((t - self.peak_time) / self.T_p) ** 2)

    @property
    def off_time(self) -> float:
        return self.peak_time + self.kappa * self.T_p


@dataclass(frozen=True, eq=False)
class Waveform:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        v = np.array(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise ParameterError("times and values must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(t) <= 0):
            raise ParameterError("times must be strictly increasing")
        if np.any(v < 0):
            raise ParameterError("intensity values must be nonnegative")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def energy(self, start: float = -math.inf, stop: float = math.inf) -> float:
        mask = (self.times >= start) & (self.times <= stop)
        if mask.sum() < 2:
            return 0.0
        return float(np.trapezoid(self.values[mask], self.times[mask]))


def storage_efficiency_analytic(p: EITParams, pulse: PulseSpec, D_eff):
    """Closed-form storage efficiency as a function of effective OD.

    ``eta = exp(-2 g21 D G / Oc^2) / s * (erf(a kappa) + erf(a (D G/(T_p Oc^2) - kappa) / s)) / 2``
    with ``a = 2 sqrt(ln 2)`` and ``s = sqrt(1 + 32 ln 2 g31 D G / (T_p Oc^2)^2)``.
    Accepts a scalar or array ``D_eff``.
    """
    if p.Omega_c <= 0:
        raise ParameterError("Omega_c > 0 required for the closed-form efficiency")
    d = np.asarray(D_eff, dtype=float)
    if np.any(~np.isfinite(d)) or np.any(d < 0):
        raise ParameterError("D_eff must be finite and >= 0")
    oc2 = p.Omega_c**2
    delay = d * p.Gamma / (pulse.T_p * oc2)
    spread = np.sqrt(1 + 32 * math.log(2) * p.gamma31 * d * p.Gamma / (pulse.T_p * oc2) ** 2)
    decay = np.exp(-2 * p.gamma21 * d * p.Gamma / oc2)
    a = 2 * SQRT_LN2
    stored = 0.5 * (special.erf(a * pulse.kappa) + special.erf(a * (delay - pulse.kappa) / spread))
    eta = decay / spread * stored
    return float(eta) if eta.ndim == 0 else eta


def optimal_od(p: EITParams, pulse: PulseSpec, upper: float = 1e5) -> float:
    """Effective OD maximizing the closed-form efficiency."""
    res = optimize.minimize_scalar(
        lambda d: -storage_efficiency_analytic(p, pulse, d),
        bounds=(0.0, upper),
        method="bounded",
        options={"xatol": 1e-6},
    )
    return float(res.x)


def transverse_overlap(field: ComplexField2D, sigma_r: float) -> float:
    """Intensity-weighted mean of ``exp(-r^2 / (2 sigma_r^2))`` over ``field``."""
    inten = field.intensity
    total = inten.sum()
    if not total > 0:
        raise DegenerateInputError("field has zero power")
    r, _ = field.grid.polar()
    return float(np.sum(inten * np.exp(-(r**2) / (2 * sigma_r**2))) / total)


def effective_od(beam: BeamSpec, grid: Grid2D | None = None, p: EITParams | None = None) -> float:
    """``D0`` times the intensity-weighted transverse density of ``beam`` in the medium."""
    p = EITParams() if p is None else p
    grid = render_grid(beam, "medium") if grid is None else grid
    field = pov_field_analytic(beam, grid, plane="medium")
    return p.D0 * transverse_overlap(field, p.sigma_r)


def effective_od_of_field(field: ComplexField2D, p: EITParams) -> float:
    return p.D0 * transverse_overlap(field, p.sigma_r)


def susceptibility_ratio(p: EITParams, detunings) -> np.ndarray:
    """Steady-state ``sigma31 / Omega_p`` of the weak-probe Bloch equations."""
    dp = np.asarray(detunings, dtype=float)
    two_photon = dp - p.delta_c
    denom = 1j * dp - p.gamma31 + p.Omega_c**2 / (4 * (1j * two_photon - p.gamma21))
    return -0.5j / denom


def transmission_spectrum(p: EITParams, detunings, D_eff: float) -> np.ndarray:
    """Intensity transmission ``exp(-D_eff Im[chi] / Im[chi_0])``.

    ``chi_0`` is the on-resonance two-level value, so ``Omega_c = 0`` gives
    ``exp(-D_eff)`` on resonance.
    """
    D_eff = check_nonnegative(D_eff, "D_eff")
    if D_eff == 0:
        return np.ones(np.shape(detunings))
    chi = susceptibility_ratio(p, detunings)
    chi0 = 1.0 / (2 * p.gamma31)
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.exp(-D_eff * np.imag(chi) / chi0)
    return np.nan_to_num(out, nan=0.0)


def transparency_width(p: EITParams, D_eff: float, span: float | None = None) -> float:
    """Full width (rad/s) of the transparency window at half its depth.

    The depth runs from the transmission at two-photon resonance down to the
    minimum over ``+-span`` (default ``+-2 Omega_c``).
    """
    span = 2 * max(p.Omega_c, p.Gamma) if span is None else span
    centre = p.delta_c
    scan = centre + np.linspace(-span, span, 20001)
    t = transmission_spectrum(p, scan, D_eff)
    t_peak = float(transmission_spectrum(p, [centre], D_eff)[0])
    half = 0.5 * (t_peak + t.min())

    def edge(direction: int) -> float:
        side = scan[scan >= centre] if direction > 0 else scan[scan <= centre][::-1]
        vals = transmission_spectrum(p, side, D_eff)
        k = int(np.argmax(vals < half))
        if k == 0:
            raise ParameterError("transparency window extends beyond the scan span")
        f = lambda d: transmission_spectrum(p, [d], D_eff)[0] - half
        return optimize.brentq(f, side[k - 1], side[k], xtol=1e-9 * span)

    return float(edge(+1) - edge(-1))


def efficiency_from_waveforms(
    input: Waveform,
    output: Waveform,
    window: tuple[float, float] | None = None,
) -> float:
    """Ratio of output to input pulse energy (trapezoidal integrals).

    The two waveforms may have different time bases. ``window`` restricts
    the output integral.
    """
    e_in = input.energy()
    if not e_in > 0:
        raise DegenerateInputError("input waveform carries no energy")
    start, stop = (-math.inf, math.inf) if window is None else window
    return output.energy(start, stop) / e_in


def efficiency_vs_mode(
    p: EITParams,
    pulse: PulseSpec,
    beam_template: BeamSpec,
    ells: Iterable[int],
    k_r_index: float | None = None,
) -> np.ndarray:
    """Closed-form efficiency for each charge in ``ells`` at one ``k_r_index``."""
    beam = beam_template if k_r_index is None else replace(beam_template, k_r_index=k_r_index)
    d_eff = [effective_od(beam.with_ell(ell), p=p) for ell in ells]
    return np.atleast_1d(storage_efficiency_analytic(p, pulse, np.array(d_eff)))


def overlap_table(
    p: EITParams, beam_template: BeamSpec, k_r_range: Sequence[float], ell_range: Sequence[int]
) -> np.ndarray:
    """``D_eff / D0`` for every ``(k_r, ell)`` pair; shape ``(len(k_r), len(ell))``."""
    unit = p.replace(D0=1.0)
    cache: dict[tuple[float, int], float] = {}
    out = np.empty((len(k_r_range), len(ell_range)))
    for i, kr in enumerate(k_r_range):
        beam = replace(beam_template, k_r_index=float(kr))
        for j, ell in enumerate(ell_range):
            # the overlap only depends on |ell|
            key = (float(kr), abs(int(ell)))
            if key not in cache:
                cache[key] = effective_od(beam.with_ell(abs(int(ell))), p=unit)
            out[i, j] = cache[key]
    return out


def efficiency_map(
    p: EITParams,
    pulse: PulseSpec,
    k_r_range: Sequence[float],
    ell_range: Sequence[int],
    od_range: Sequence[float] | None = None,
    beam_template: BeamSpec | None = None,
) -> np.ndarray:
    """Efficiency on the ``(k_r, ell, peak OD)`` grid.

    ``od_range`` lists peak optical depths ``D0``; it defaults to ``[p.D0]``.
    Returns an array of shape ``(len(k_r), len(ell), len(od))``.
    """
    beam_template = BeamSpec() if beam_template is None else beam_template
    od_range = [p.D0] if od_range is None else list(od_range)
    overlap = overlap_table(p, beam_template, k_r_range, ell_range)
    d_eff = overlap[:, :, None] * np.asarray(od_range, dtype=float)[None, None, :]
    return np.asarray(storage_efficiency_analytic(p, pulse, d_eff))


def efficiency_map_rows(
    etas: np.ndarray, k_r_range, ell_range, od_range
) -> list[tuple[float, int, float, float]]:
    """Flatten an :func:`efficiency_map` result into ``(k_r, ell, od, eta)`` rows."""
    rows = []
    for i, kr in enumerate(k_r_range):
        for j, ell in enumerate(ell_range):
            for k, od in enumerate(od_range):
                rows.append((float(kr), int(ell), float(od), float(etas[i, j, k])))
    return rows


def uniform_mode_range(ells: Sequence[int], etas: Sequence[float], fraction: float = 0.95) -> int:
    """Largest ``m`` such that every mode with ``|ell| <= m`` keeps ``eta >= fraction * eta(0)``."""
    ells = [int(e) for e in ells]
    if 0 not in ells:
        raise ParameterError("ells must contain 0")
    eta = dict(zip(ells, (float(v) for v in etas)))
    floor = fraction * eta[0]
    m = 0
    for cand in range(1, max(abs(e) for e in ells) + 1):
        members = [e for e in (cand, -cand) if e in eta]
        if not members or any(eta[e] < floor for e in members):
            break
        m = cand
    return m


def calibrate_peak_od(
    p: EITParams,
    pulse: PulseSpec,
    beam: BeamSpec | None = None,
    target: float = 0.60,
) -> float:
    """Peak OD ``D0`` for which ``beam`` reaches efficiency ``target``.

    The root is taken on the rising branch, below the efficiency optimum.
    """
    beam = BeamSpec(ell=0, k_r_index=5.0) if beam is None else beam
    overlap = effective_od(beam, p=p.replace(D0=1.0))
    d_opt = optimal_od(p, pulse)
    eta_max = storage_efficiency_analytic(p, pulse, d_opt)
    if not 0 < target < eta_max:
        raise ParameterError(f"target {target} outside (0, {eta_max:.4f})")
    d_star = optimize.brentq(
        lambda d: storage_efficiency_analytic(p, pulse, d) - target, 0.0, d_opt, xtol=1e-12
    )
    return d_star / overlap

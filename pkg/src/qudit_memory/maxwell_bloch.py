"""Time-domain Maxwell-Bloch solver for EIT write, hold and read.

Works in the frame co-moving with the signal at ``c`` and in the normalized
coordinate ``zeta = z / L``. Weak-probe equations::

    d_zeta Omega  = i D G / 2 * s31
    d_t s31       = -(g31 - i dp) s31 + i/2 Oc(t) s21 + i/2 Omega
    d_t s21       = -(g21 - i (dp - dc)) s21 + i/2 Oc(t) s31

The field is obtained from the coherence by a cumulative trapezoid along
``zeta`` (method of lines) and the atomic variables are advanced with RK4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .eit_storage import EITParams, PulseSpec, Waveform, efficiency_from_waveforms
from .exceptions import ParameterError, ResolutionError
from .validation import check_integer, check_nonnegative, check_positive

SPEED_OF_LIGHT = 299_792_458.0
DT_FACTOR = 0.05
MIN_Z_STEPS = 200
# Control ramp duration as a fraction of T_p.
RAMP_FRACTION = 0.1
CONVERGENCE_TOL = 0.002
WINDOWS = ("retrieved", "total")


@dataclass(frozen=True)
class ControlTiming:
    """Control switch-off and switch-on times and the ramp duration (s)."""

    off_time: float
    on_time: float
    ramp: float

    def __post_init__(self):
        if not self.on_time > self.off_time:
            raise ParameterError("on_time must be later than off_time")
        check_positive(self.ramp, "ramp")

    def profile(self, t, omega_c: float):
        # tanh edges; 4 tau spans the 2%-98% rise, so ramp = 4 tau
        tau = self.ramp / 4
        off = 0.5 * (1 - np.tanh((t - self.off_time) / tau))
        on = 0.5 * (1 + np.tanh((t - self.on_time) / tau))
        return omega_c * (off + on)


@dataclass(frozen=True, eq=False)
class BlochState:
    """Decimated ``(t, zeta)`` snapshots of the solver state."""

    times: np.ndarray
    zeta: np.ndarray
    sigma31: np.ndarray
    sigma21: np.ndarray
    Omega_p: np.ndarray


@dataclass(frozen=True, eq=False)
class StorageResult:
    input: Waveform
    output: Waveform
    efficiency: float
    total_efficiency: float
    timing: ControlTiming
    window: str
    dt: float
    nz: int
    state: BlochState | None = None


def default_timing(pulse: PulseSpec, hold: float | None = None) -> ControlTiming:
    hold = pulse.T_p if hold is None else check_positive(hold, "hold")
    return ControlTiming(pulse.off_time, pulse.off_time + hold, RAMP_FRACTION * pulse.T_p)


def max_time_step(p: EITParams) -> float:
    return DT_FACTOR / max(p.Gamma, p.Omega_c)


def maxwell_bloch_store(
    p: EITParams,
    pulse: PulseSpec,
    D_eff: float,
    control_timing: ControlTiming | None = None,
    hold: float | None = None,
    *,
    nz: int = MIN_Z_STEPS,
    dt: float | None = None,
    window: str = "retrieved",
    amplitude: float = 1.0,
    record_every: int = 0,
) -> StorageResult:
    """Store and retrieve one pulse; return waveforms and efficiency.

    ``window="retrieved"`` integrates the output from half a ramp before the
    control switch-on; ``"total"`` integrates the whole record, leakage
    included. ``record_every > 0`` keeps every n-th time step of the state.
    """
    D_eff = check_nonnegative(D_eff, "D_eff")
    nz = check_integer(nz, "nz")
    if nz < MIN_Z_STEPS:
        raise ResolutionError(f"nz >= {MIN_Z_STEPS} required, got {nz}")
    dt_max = max_time_step(p)
    dt = dt_max if dt is None else check_positive(dt, "dt")
    if dt > dt_max * (1 + 1e-12):
        raise ResolutionError(f"dt = {dt:.3e} s exceeds 0.05/max(Gamma, Omega_c) = {dt_max:.3e} s")
    if window not in WINDOWS:
        raise ParameterError(f"window must be one of {WINDOWS}, got {window!r}")
    if p.Omega_c <= 0:
        raise ParameterError("Omega_c > 0 required to write and read the memory")
    amplitude = check_positive(amplitude, "amplitude")
    record_every = check_integer(record_every, "record_every", 0)
    timing = default_timing(pulse, hold) if control_timing is None else control_timing

    t0 = pulse.peak_time - 3 * pulse.T_p
    delay = D_eff * p.Gamma / p.Omega_c**2
    t1 = timing.on_time + delay + 4 * pulse.T_p
    n_steps = int(math.ceil((t1 - t0) / dt))
    dt = (t1 - t0) / n_steps
    times = t0 + dt * np.arange(n_steps + 1)

    zeta = np.linspace(0.0, 1.0, nz + 1)
    dz = zeta[1]
    coupling = 0.5j * D_eff * p.Gamma
    a31 = -(p.gamma31 - 1j * p.delta_p)
    a21 = -(p.gamma21 - 1j * (p.delta_p - p.delta_c))

    def field(s31, t):
        integral = np.empty_like(s31)
        integral[0] = 0.0
        np.cumsum(0.5 * (s31[1:] + s31[:-1]) * dz, out=integral[1:])
        return amplitude * pulse.amplitude(t) + coupling * integral

    def rhs(t, s31, s21):
        om = field(s31, t)
        oc = timing.profile(t, p.Omega_c)
        return a31 * s31 + 0.5j * (oc * s21 + om), a21 * s21 + 0.5j * oc * s31

    s31 = np.zeros(nz + 1, complex)
    s21 = np.zeros(nz + 1, complex)
    out = np.empty(n_steps + 1, complex)
    out[0] = field(s31, times[0])[-1]
    snaps: list[tuple] = []
    if record_every:
        snaps.append((times[0], s31.copy(), s21.copy(), field(s31, times[0])))
    h = dt
    for k in range(n_steps):
        t = times[k]
        k1 = rhs(t, s31, s21)
        k2 = rhs(t + h / 2, s31 + h / 2 * k1[0], s21 + h / 2 * k1[1])
        k3 = rhs(t + h / 2, s31 + h / 2 * k2[0], s21 + h / 2 * k2[1])
        k4 = rhs(t + h, s31 + h * k3[0], s21 + h * k3[1])
        s31 = s31 + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        s21 = s21 + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        om = field(s31, times[k + 1])
        out[k + 1] = om[-1]
        if record_every and (k + 1) % record_every == 0:
            snaps.append((times[k + 1], s31.copy(), s21.copy(), om))

    transit = p.L / SPEED_OF_LIGHT
    wave_in = Waveform(times, (amplitude * pulse.amplitude(times)) ** 2)
    wave_out = Waveform(times + transit, np.abs(out) ** 2)
    start = timing.on_time - timing.ramp / 2 + transit
    eta_ret = efficiency_from_waveforms(wave_in, wave_out, (start, math.inf))
    eta_tot = efficiency_from_waveforms(wave_in, wave_out)

    state = None
    if record_every:
        ts, a, b, c = zip(*snaps)
        state = BlochState(np.array(ts), zeta, np.array(a), np.array(b), np.array(c))
    return StorageResult(
        input=wave_in,
        output=wave_out,
        efficiency=eta_ret if window == "retrieved" else eta_tot,
        total_efficiency=eta_tot,
        timing=timing,
        window=window,
        dt=dt,
        nz=nz,
        state=state,
    )


def convergence_report(
    p: EITParams,
    pulse: PulseSpec,
    D_eff: float,
    control_timing: ControlTiming | None = None,
    hold: float | None = None,
    *,
    nz: int = MIN_Z_STEPS,
    window: str = "retrieved",
    tol: float = CONVERGENCE_TOL,
) -> dict:
    """Run at the base resolution and with ``dt`` and ``dz`` halved.

    Returns a JSON-compatible dict; ``converged`` is false when the
    efficiency moves by ``tol`` (absolute) or more.
    """
    kw = dict(control_timing=control_timing, hold=hold, window=window)
    base = maxwell_bloch_store(p, pulse, D_eff, nz=nz, **kw)
    fine = maxwell_bloch_store(p, pulse, D_eff, nz=2 * nz, dt=base.dt / 2, **kw)
    change = abs(fine.efficiency - base.efficiency)
    return {
        "D_eff": float(D_eff),
        "window": window,
        "nz": [nz, 2 * nz],
        "dt_s": [base.dt, fine.dt],
        "efficiency": [base.efficiency, fine.efficiency],
        "change": change,
        "tolerance": tol,
        "converged": bool(change < tol),
    }

"""Vortex-beam optics on square sampling grids.

Bessel-Gaussian (B-G) fields are generated in the SLM plane and taken to the
Fourier plane of a lens with a centered, unitary discrete Fourier transform.
The closed-form perfect optical vortex (POV) is available for comparison, and
a 4-f relay maps either onto the storage medium.

Three planes appear throughout:

``"slm"``
    Front focal plane of the Fourier lens, where the B-G field lives.
``"fourier"``
    Back focal plane of the Fourier lens; the POV ring has radius
    ``k_r_index * k_r_calibration`` here.
``"medium"``
    Image of the Fourier plane through the 4-f relay, scaled by
    ``four_f_ratio``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage, special

from .exceptions import (
    AliasingError,
    DegenerateInputError,
    EnvelopeTruncationError,
    ParameterError,
)
from .validation import check_integer, check_nonnegative, check_positive

# Rb D1 line.
DEFAULT_WAVELENGTH = 795e-9
# Focal lengths of the Fourier lens and the shrinking relay (300 mm / 500 mm).
DEFAULT_FOCAL_LENGTH = 0.075
DEFAULT_FOUR_F_RATIO = 300.0 / 500.0
# k_r_index = 5 must put the ring at 218 um in the medium.
MEDIUM_RADIUS_PER_INDEX = 218e-6 / 5
DEFAULT_KR_CALIBRATION = MEDIUM_RADIUS_PER_INDEX / DEFAULT_FOUR_F_RATIO
DEFAULT_OMEGA_G = 0.5e-3
DEFAULT_SAMPLES = 512

MAX_ABS_ELL = 40
BORDER_PIXELS = 2
BORDER_POWER_LIMIT = 1e-6
PLANES = ("slm", "fourier", "medium")


@dataclass(frozen=True)
class Grid2D:
    """Uniform square grid centred on the optical axis.

    Pixel ``i`` along either axis sits at ``(i - N/2) * pitch`` so the
    origin is an exact sample, as required for ``fftshift``-style ordering.
    """

    samples_per_side: int
    physical_extent: float

    def __post_init__(self):
        n = check_integer(self.samples_per_side, "samples_per_side", low=64)
        if n % 2:
            raise ParameterError(f"samples_per_side must be even, got {n}")
        object.__setattr__(self, "samples_per_side", n)
        object.__setattr__(
            self, "physical_extent", check_positive(self.physical_extent, "physical_extent")
        )

    @property
    def pitch(self) -> float:
        return self.physical_extent / self.samples_per_side

    @property
    def pixel_area(self) -> float:
        return self.pitch**2

    @property
    def shape(self) -> tuple[int, int]:
        return (self.samples_per_side, self.samples_per_side)

    def coords(self) -> np.ndarray:
        n = self.samples_per_side
        return (np.arange(n) - n // 2) * self.pitch

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """``(X, Y)`` with rows indexing y and columns indexing x."""
        c = self.coords()
        return np.meshgrid(c, c, indexing="xy")

    def polar(self) -> tuple[np.ndarray, np.ndarray]:
        x, y = self.mesh()
        return np.hypot(x, y), np.arctan2(y, x)

    def scaled(self, ratio: float) -> "Grid2D":
        return Grid2D(self.samples_per_side, self.physical_extent * ratio)


@dataclass(frozen=True, eq=False)
class ComplexField2D:
    """Complex amplitude sampled on a :class:`Grid2D`; immutable."""

    grid: Grid2D
    amplitude: np.ndarray
    wavelength: float = DEFAULT_WAVELENGTH

    def __post_init__(self):
        amp = np.array(self.amplitude, dtype=np.complex128, copy=True)
        if amp.shape != self.grid.shape:
            raise ParameterError(
                f"amplitude shape {amp.shape} does not match grid {self.grid.shape}"
            )
        amp.setflags(write=False)
        object.__setattr__(self, "amplitude", amp)
        object.__setattr__(self, "wavelength", check_positive(self.wavelength, "wavelength"))

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2

    def power(self) -> float:
        return float(np.sum(self.intensity) * self.grid.pixel_area)

    def normalized(self) -> "ComplexField2D":
        p = self.power()
        if not p > 0 or not math.isfinite(p):
            raise DegenerateInputError("field has zero or non-finite power")
        return replace(self, amplitude=self.amplitude / math.sqrt(p))

    def border_power_fraction(self, width: int = BORDER_PIXELS) -> float:
        inten = self.intensity
        total = inten.sum()
        if total <= 0:
            raise DegenerateInputError("field has zero power")
        inner = inten[width:-width, width:-width].sum()
        return float((total - inner) / total)


@dataclass(frozen=True)
class BeamSpec:
    """Parameters of one vortex mode.

    ``k_r_index`` is the dimensionless radial wave-vector label used in the
    efficiency sweeps; ``k_r_calibration`` converts it to the ring radius in
    the Fourier plane.
    """

    ell: int = 0
    k_r_index: float = 5.0
    k_r_calibration: float = DEFAULT_KR_CALIBRATION
    omega_g: float = DEFAULT_OMEGA_G
    focal_length: float = DEFAULT_FOCAL_LENGTH
    wavelength: float = DEFAULT_WAVELENGTH
    four_f_ratio: float = DEFAULT_FOUR_F_RATIO

    def __post_init__(self):
        object.__setattr__(
            self, "ell", check_integer(self.ell, "ell", -MAX_ABS_ELL, MAX_ABS_ELL)
        )
        object.__setattr__(self, "k_r_index", check_nonnegative(self.k_r_index, "k_r_index"))
        for name in ("k_r_calibration", "omega_g", "focal_length", "wavelength", "four_f_ratio"):
            object.__setattr__(self, name, check_positive(getattr(self, name), name))

    @property
    def wavenumber(self) -> float:
        return 2 * math.pi / self.wavelength

    @property
    def omega_0(self) -> float:
        """Focused Gaussian waist in the Fourier plane, ``2 f / (k omega_g)``."""
        return 2 * self.focal_length / (self.wavenumber * self.omega_g)

    @property
    def ring_radius_fourier(self) -> float:
        return self.k_r_index * self.k_r_calibration

    @property
    def ring_radius(self) -> float:
        """Ring radius in the storage medium."""
        return self.ring_radius_fourier * self.four_f_ratio

    @property
    def k_r(self) -> float:
        """Radial wave vector of the B-G field in rad/m."""
        return self.ring_radius_fourier * self.wavenumber / self.focal_length

    def radius_and_waist(self, plane: str = "fourier") -> tuple[float, float]:
        _check_plane(plane, allow_slm=False)
        if plane == "medium":
            return self.ring_radius, self.omega_0 * self.four_f_ratio
        return self.ring_radius_fourier, self.omega_0

    def with_ell(self, ell: int) -> "BeamSpec":
        return replace(self, ell=ell)


def _check_plane(plane: str, allow_slm: bool = True) -> None:
    allowed = PLANES if allow_slm else PLANES[1:]
    if plane not in allowed:
        raise ParameterError(f"plane must be one of {allowed}, got {plane!r}")


def default_grid(spec: BeamSpec, plane: str = "slm", samples: int = DEFAULT_SAMPLES) -> Grid2D:
    """Grid sized so every mode used in the sweeps leaves < 1e-6 power on the border.

    The SLM grid spans ``8 max(r_r, 3 omega_g)``; the Fourier grid is the one
    produced by transforming it, and the medium grid is that scaled by the
    4-f ratio. Use :func:`render_grid` for analytic-only rendering.
    """
    _check_plane(plane)
    slm_extent = 8 * max(spec.ring_radius_fourier, 3 * spec.omega_g)
    slm = Grid2D(samples, slm_extent)
    if plane == "slm":
        return slm
    fourier = Grid2D(samples, spec.wavelength * spec.focal_length / slm.pitch)
    if plane == "fourier":
        return fourier
    return fourier.scaled(spec.four_f_ratio)


def render_grid(spec: BeamSpec, plane: str = "medium", samples: int = 256) -> Grid2D:
    """Compact grid for evaluating the analytic POV in ``plane``."""
    r_r, w0 = spec.radius_and_waist(plane)
    half = max(r_r, 3 * w0, second_moment_width(spec.ell, w0, r_r))
    return Grid2D(samples, 4 * half)


def modified_bessel_scaled(order, x):
    """``exp(-x) * I_order(x)`` for ``x >= 0``; negative orders use ``I_{-n} = I_n``."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(x_arr)):
        raise ParameterError("x must not be NaN")
    if np.any(x_arr < 0):
        raise ParameterError("x >= 0 required")
    order = abs(check_integer(order, "order"))
    out = special.ive(order, x_arr)
    return float(out) if out.ndim == 0 else out


def bessel_gaussian_field(spec: BeamSpec, grid: Grid2D | None = None) -> ComplexField2D:
    """``J_l(k_r r) exp(-r^2/omega_g^2) exp(i l phi)`` in the SLM plane, unit power."""
    grid = default_grid(spec, "slm") if grid is None else grid
    if grid.physical_extent < 6 * spec.omega_g:
        raise EnvelopeTruncationError(
            f"grid extent {grid.physical_extent:.3e} m < 6 omega_g = {6 * spec.omega_g:.3e} m"
        )
    r, phi = grid.polar()
    amp = (
        special.jv(spec.ell, spec.k_r * r)
        * np.exp(-(r**2) / spec.omega_g**2)
        * np.exp(1j * spec.ell * phi)
    )
    return ComplexField2D(grid, amp, spec.wavelength).normalized()


def fourier_lens_transform(
    field: ComplexField2D, focal_length: float, check_border: bool = True
) -> ComplexField2D:
    """Field in the back focal plane of a thin lens.

    Implements ``E_f(u) = 1/(i lambda f) * integral E(x) exp(-2 pi i x.u / (lambda f)) dx``
    with a centered DFT. The output pitch is ``lambda f / extent`` and power is
    conserved exactly (up to rounding).
    """
    focal_length = check_positive(focal_length, "focal_length")
    if check_border:
        frac = field.border_power_fraction()
        if frac > BORDER_POWER_LIMIT:
            raise AliasingError(
                f"{frac:.2e} of the power lies in the outer {BORDER_PIXELS}-pixel border"
            )
    grid = field.grid
    lam_f = field.wavelength * focal_length
    spectrum = np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(field.amplitude)))
    amp = spectrum * (grid.pixel_area / (1j * lam_f))
    out_grid = Grid2D(grid.samples_per_side, lam_f / grid.pitch)
    return ComplexField2D(out_grid, amp, field.wavelength)


def pov_field_analytic(
    spec: BeamSpec, grid: Grid2D | None = None, plane: str = "fourier"
) -> ComplexField2D:
    """Closed-form perfect optical vortex, normalized to unit power.

    The product ``exp(-(r^2 + r_r^2)/w0^2) I_l(2 r_r r / w0^2)`` is evaluated as
    ``exp(-(r - r_r)^2 / w0^2) * ive(l, x)`` so it cannot overflow.
    """
    _check_plane(plane, allow_slm=False)
    grid = default_grid(spec, plane) if grid is None else grid
    r_r, w0 = spec.radius_and_waist(plane)
    r, phi = grid.polar()
    x = 2 * r_r * r / w0**2
    radial = np.exp(-((r - r_r) ** 2) / w0**2) * special.ive(abs(spec.ell), x)
    phase = (1j) ** (spec.ell - 1) * np.exp(1j * spec.ell * phi)
    amp = (spec.omega_g / spec.omega_0) * phase * radial
    out = ComplexField2D(grid, amp, spec.wavelength)
    if not out.power() > 0:
        raise DegenerateInputError(
            f"POV with ell={spec.ell} and r_r={r_r} has no power on this grid"
        )
    return out.normalized()


def second_moment_width(ell: int, omega_0: float, r_r: float) -> float:
    """``w0 sqrt(|l|+1) + r_r sqrt(1 + I_{|l|+1}(r_r^2/w0^2) / I_{|l|}(r_r^2/w0^2))``."""
    ell = abs(check_integer(ell, "ell"))
    omega_0 = check_positive(omega_0, "omega_0")
    r_r = check_nonnegative(r_r, "r_r")
    width = omega_0 * math.sqrt(ell + 1)
    if r_r == 0:
        return width
    x = (r_r / omega_0) ** 2
    den = special.ive(ell, x)
    # I_{l+1}(x)/I_l(x) -> x/(2(l+1)) once x^l underflows
    ratio = special.ive(ell + 1, x) / den if den > 0 else x / (2 * (ell + 1))
    return width + r_r * math.sqrt(1 + ratio)


def radial_profile(intensity: np.ndarray, grid: Grid2D) -> tuple[np.ndarray, np.ndarray]:
    """Azimuthally averaged intensity in annular bins one pixel wide.

    Returns ``(bin_centres, mean_intensity)``; bin ``k`` covers
    ``[k, k+1) * pitch``.
    """
    r, _ = grid.polar()
    idx = np.floor(r / grid.pitch).astype(int).ravel()
    n_bins = grid.samples_per_side // 2
    keep = idx < n_bins
    sums = np.bincount(idx[keep], weights=np.asarray(intensity).ravel()[keep], minlength=n_bins)
    hits = np.bincount(idx[keep], minlength=n_bins)
    prof = np.divide(sums, hits, out=np.zeros(n_bins), where=hits > 0)
    centres = (np.arange(n_bins) + 0.5) * grid.pitch
    return centres, prof


def measured_ring_radius(field: ComplexField2D) -> float:
    """Radius of the radial-profile maximum, refined by a 3-point parabola."""
    inten = field.intensity
    if not np.any(inten > 0):
        raise DegenerateInputError("field is identically zero")
    centres, prof = radial_profile(inten, field.grid)
    k = int(np.argmax(prof))
    if k == 0:
        return 0.0
    if k == len(prof) - 1:
        return float(centres[k])
    y0, y1, y2 = prof[k - 1], prof[k], prof[k + 1]
    denom = y0 - 2 * y1 + y2
    shift = 0.0 if denom == 0 else 0.5 * (y0 - y2) / denom
    return float(centres[k] + shift * field.grid.pitch)


def invert(amplitude: np.ndarray) -> np.ndarray:
    """Parity ``x -> -x`` on a centred grid (index ``i -> (N - i) mod N``)."""
    return np.roll(amplitude[::-1, ::-1], 1, axis=(0, 1))


def four_f_rescale(field: ComplexField2D, ratio: float, invert_image: bool = True) -> ComplexField2D:
    """Image through a 4-f relay with magnification ``ratio``.

    The sample values are kept and the grid is rescaled, so the operation is
    exact: amplitudes are divided by ``ratio`` to conserve power and the
    image is inverted unless ``invert_image`` is false.
    """
    ratio = check_positive(ratio, "ratio")
    amp = field.amplitude / ratio
    if invert_image:
        amp = invert(amp)
    return ComplexField2D(field.grid.scaled(ratio), amp, field.wavelength)


def sample_on_circle(values: np.ndarray, grid: Grid2D, radius: float, n_samples: int = 720):
    """Bilinear samples of ``values`` on a circle; returns ``(phi, samples)``."""
    phi = np.linspace(0, 2 * np.pi, n_samples, endpoint=False)
    n = grid.samples_per_side
    cols = radius * np.cos(phi) / grid.pitch + n // 2
    rows = radius * np.sin(phi) / grid.pitch + n // 2
    coords = np.vstack([rows, cols])
    values = np.asarray(values)
    if np.iscomplexobj(values):
        re = ndimage.map_coordinates(values.real, coords, order=1)
        im = ndimage.map_coordinates(values.imag, coords, order=1)
        return phi, re + 1j * im
    return phi, ndimage.map_coordinates(values, coords, order=1)


def phase_winding(field: ComplexField2D, radius: float, n_samples: int = 720) -> float:
    """Total unwrapped phase change around a circle of ``radius`` (2 pi l for a charge-l vortex)."""
    _, samples = sample_on_circle(field.amplitude, field.grid, radius, n_samples)
    ph = np.unwrap(np.angle(np.append(samples, samples[0])))
    return float(ph[-1] - ph[0])


def superposition_intensity(
    spec_a: BeamSpec,
    spec_b: BeamSpec,
    relative_phase: float,
    grid: Grid2D | None = None,
    plane: str = "fourier",
) -> np.ndarray:
    """``|E_a + exp(i theta) E_b|^2 / 2`` of two unit-power POV modes."""
    if spec_a.radius_and_waist(plane) != spec_b.radius_and_waist(plane):
        raise ParameterError("superposed modes must share ring radius and waist")
    grid = default_grid(spec_a, plane) if grid is None else grid
    ea = pov_field_analytic(spec_a, grid, plane).amplitude
    eb = pov_field_analytic(spec_b, grid, plane).amplitude
    return np.abs(ea + np.exp(1j * relative_phase) * eb) ** 2 / 2

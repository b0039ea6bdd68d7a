"""Simulation and analysis toolkit for a high-dimensional OAM qudit quantum memory.

Modules
-------
beam_optics      Bessel-Gaussian and perfect-optical-vortex fields on grids.
eit_storage      Closed-form EIT storage efficiency, effective OD, spectra.
maxwell_bloch    Time-domain Maxwell-Bloch solver used to check the closed form.
qudit_channel    Qudit states, the per-mode memory channel and fidelity bounds.
tomography       Gell-Mann bases, projector sets, linear inversion and MLE.
metrics          Image similarity and cross-talk contrast.
config_io        Configuration files and deterministic table output.
estimators       scikit-learn style wrappers.
"""

from ._version import __version__
from .beam_optics import (
    BeamSpec,
    ComplexField2D,
    Grid2D,
    bessel_gaussian_field,
    fourier_lens_transform,
    measured_ring_radius,
    pov_field_analytic,
    second_moment_width,
)
from .config_io import ExperimentConfig, dump_config, emit_table, load_config
from .eit_storage import (
    EITParams,
    PulseSpec,
    Waveform,
    effective_od,
    efficiency_from_waveforms,
    efficiency_map,
    efficiency_vs_mode,
    storage_efficiency_analytic,
    transmission_spectrum,
)
from .estimators import LinearInversionTomography, MLETomography, ModeEfficiencyModel
from .exceptions import ConvergenceError, ParameterError
from .maxwell_bloch import maxwell_bloch_store
from .metrics import CrosstalkMatrix, crosstalk_contrast, mode_overlap_matrix, similarity
from .qudit_channel import (
    EfficiencyVector,
    QuditState,
    apply_memory,
    classical_fidelity_bound,
    classical_fidelity_bound_with_efficiency,
    cloning_bound,
    fidelity_general,
    fidelity_pure,
    fidelity_vs_uniformity,
    interference_fringe,
    make_uniform_qudit,
)
from .tomography import (
    CountRecord,
    DensityMatrix,
    background_subtract,
    linear_inversion,
    mle_reconstruct,
    monte_carlo_errorbars,
    simulate_counts,
    standard_projector_set,
    su_d_generators,
)

__all__ = [name for name in dir() if not name.startswith("_")]

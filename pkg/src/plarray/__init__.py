"""Simulation and multipath-visibility analysis for physically large arrays.

Pipeline: polygonal scene -> image sources and per-element visibility ->
visibility-gated channel synthesis -> full-array spherical-wave spectra and
per-subarray sparse Bayesian multipath estimation -> association to
geometric predictions, amplitude/visibility maps, and energy reports.
"""

from .arrays import (
    AntennaPattern,
    ArrayGeometry,
    Subarray,
    antenna_gain,
    direction_unit,
    frame_from_boresight,
    make_ura,
    partition_subarrays,
    plane_wave_atom,
    spherical_steering,
)
from .assoc import (
    AssociationResult,
    EnergyReport,
    Gates,
    Prediction,
    associate,
    associate_subarray,
    energy_report,
    mismatch_score,
    predict,
    subarray_visibility,
    visibility_and_amplitude_maps,
)
from .beamform import BeamSpectrum, SpectrumGrid, find_peaks, marginals, spherical_spectrum
from .errors import ConfigError, DependencyError, InvalidGeometryError, ToolkitError
from .geometry import (
    SPEED_OF_LIGHT,
    EnvironmentModel,
    Facet,
    ImageSource,
    SpecularPath,
    compute_image_sources,
    mirror_point,
    trace_specular_path,
    visibility_mask,
)
from . import scenes
from .kernels import BACKEND as KERNEL_BACKEND
from .sbl import (
    MPCEstimate,
    SBLConfig,
    SubarrayResult,
    component_energy_frac,
    estimate_subarrays,
    reconstruct,
    sbl_estimate,
)
from .synth import (
    ChannelTensor,
    DiffuseSpec,
    SyntheticComponent,
    amplitude,
    path_params,
    snr_of,
    synthesize,
)

__version__ = "0.1.0"

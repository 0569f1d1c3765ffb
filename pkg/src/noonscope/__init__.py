"""Simulation and analysis of an entangled-photon (NOON-state) differential interference contrast microscope."""

from .analysis import (
    BiasSweepPoint,
    SnrReport,
    bias_sweep,
    fit_step,
    optimal_bias,
    quantum_advantage,
    snr_analytic,
    snr_max,
)
from .errors import ConfigError, FitError, OutOfDomainError, SchemaError, UnsupportedSizeError
from .fock import (
    PolarizationBasis,
    TwoModeFockState,
    apply_mode_phase,
    make_noon,
    odd_count_probability,
    oracle_fringe,
    rotate_to_diagonal,
)
from .interference import (
    InterferenceModel,
    PhotonBudget,
    detection_probability,
    expected_counts,
    fit_visibility,
    fringe_scan,
)
from .optics import BeamGeometry, MaterialModel, height_to_phase, overlap_xi, phase_to_height, window_weight
from .scan import (
    HeightMap,
    ScanConfig,
    ScanRecord,
    StepProfile,
    differential_probability,
    sample_counts,
    scan_1d,
    scan_2d,
)

__version__ = "0.1.0"

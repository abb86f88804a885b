"""Microwave imaging of highly conductive 2-D scatterers.

Reconstructs scatterer boundaries from single-frequency scattered-field
measurements by jointly-sparse contrast-source inversion (spectral
projected gradient with Pareto-curve root finding and CV stopping), with
linear-sampling-method baselines for comparison.
"""

from .bessel import hankel1, hankel1_neg, hankel2
from .errors import DataError, MwimageError, NumericalError
from .fields import (
    EPS_0,
    MU_0,
    SensingMatrix,
    Wavenumber,
    build_sensing_matrix,
    dipole_field_te,
    dipole_field_tm,
)
from .forward import (
    Circle,
    Contour,
    MeasurementSet,
    crescent_points,
    scatter_circle_te,
    scatter_circle_tm,
    scatter_mom_tm,
    sim1_scene,
    sim2_scene,
    synth_dataset,
)
from .geometry import (
    ImagingGrid,
    PolarizationMode,
    TransceiverLayout,
    build_circular_layout,
    build_grid,
    split_cv,
)
from .imaging import (
    IndicatorMap,
    boundary_energy_fraction,
    corr_coeff,
    db_scale,
    image_mmv,
)
from .dataio import (
    import_fresnel,
    load_dataset,
    load_map,
    save_dataset,
    save_map,
    save_pgm,
    select_transmitters,
)
from .lsm import improved_lsm_indicator, ilsm_order, lsm_indicator
from .pipeline import invert_ilsm, invert_lsm, invert_mmv
from .solver import (
    GroupStructure,
    SolveTrace,
    SolverConfig,
    cv_spgl1,
    group_norm_12,
    group_norm_inf2,
    group_norms,
    newton_root_bpsigma,
    pareto_value_and_slope,
    project_group_l1,
    spg_solve_lstau,
)

__version__ = "0.1.0"

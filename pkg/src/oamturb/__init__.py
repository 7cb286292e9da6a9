"""High-dimensional OAM entanglement through Kolmogorov turbulence.

Models how the quantum channel spanned by angular-phase-plate analyzers
degrades when one photon of an entangled pair crosses a turbulent
atmosphere: mode-coupling weights, coincidence fringes, Shannon
dimensionality of the channel, and the mapping to real-world horizontal
link distances. A seeded Monte Carlo phase-screen engine provides an
independent cross-check of the analytic quadrature route.
"""

from .channel import (
    CoincidenceCurve,
    DimensionalityReport,
    coincidence_bilinear,
    coincidence_curve,
    default_grid,
    dimensionality_scan,
    shannon_from_curve,
    shannon_operator,
)
from .errors import (
    CalibrationError,
    ConfigError,
    ConvergenceError,
    NumericalError,
)
from .modes import (
    AnalyzerState,
    AngularSpectrum,
    PhasePlate,
    dimensionality_no_turbulence,
    half_plate,
    plate_autocorrelation,
    plate_overlap,
    plate_spectrum,
    quadrant_plate,
    single_mode_spectrum,
    uniform_plate,
)
from .scattering import (
    AveragedDetectionOperator,
    CouplingTable,
    QuadratureSpec,
    angular_kernel,
    averaged_operator,
    coupling_table,
    purity,
    purity_from_spectrum,
)
from .screens import (
    BroadeningResult,
    PhaseScreen,
    dump_screen,
    ensemble_coherence,
    generate_screen,
    load_screen,
    long_exposure_broadening,
    mc_coupling,
    structure_function_estimate,
    validate_structure_function,
)
from .turbulence import (
    LinkBudget,
    LinkReport,
    TurbulenceModel,
    coherence,
    fried_from_link,
    link_distance_for_ratio,
    link_ratio_for_distance,
    ratio_from_broadening,
)

__version__ = "0.1.0"

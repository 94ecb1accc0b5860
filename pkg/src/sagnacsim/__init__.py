"""Simulator and analysis toolkit for a Sagnac-loop entangled-pair source."""

__version__ = "0.1.0"

from .states import (  # noqa: F401
    AnalysisSettings,
    TwoPhotonState,
    apply_phase_modulators,
    coincidence_probabilities,
    correlation_coefficient,
    make_source_state,
)
from .spectral import (  # noqa: F401
    BiphotonSpectrum,
    SpectralFilter,
    build_biphoton_spectrum,
    coherence_function,
    delay_from_fibre,
)
from .detection import (  # noqa: F401
    CoincidenceHistogram,
    DetectorSpec,
    ExperimentRun,
    TdcSpec,
    extract_coincidences,
    simulate_run,
)
from .analysis import (  # noqa: F401
    ChshResult,
    CorrelationPoint,
    FringeScan,
    VisibilityFit,
    chsh,
    expectation_from_counts,
    fit_fringe,
    subtract_accidentals,
)
from .dispersion import (  # noqa: F401
    DispersionFitResult,
    LengthScan,
    RulerCurve,
    build_ruler,
    dispersion_coefficient,
    fit_dispersion,
    fit_scaling_factor,
    sensitivity_report,
)
from .performance import (  # noqa: F401
    SourceBudget,
    heralding_efficiency,
    pairs_per_coherence_time,
    spectral_brightness,
)

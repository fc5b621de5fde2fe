"""Efficiency analysis and optimization of atomic-frequency-comb quantum memories."""

from .comb import (
    Convolved,
    Gaussian,
    GaussianLine,
    Lorentzian,
    LorentzianLine,
    MemoryParams,
    Shifted,
    Square,
    Tabulated,
    TabulatedLine,
    ToothShape,
    WithBackground,
    area,
    evaluate,
    load_tabulated_csv,
    save_tabulated_csv,
)
from .efficiency import (
    ETA_FORWARD_MAX,
    ConvolutionMode,
    EfficiencyComponents,
    EfficiencyMap,
    EfficiencyResult,
    MapKind,
    ToothFamily,
    build_map,
    difference_maps,
    efficiency,
    efficiency_convolved,
    efficiency_with_background,
    eta_gaussian,
    eta_lorentzian,
    eta_square,
    linewidth_scale_factor,
    optimal_square_efficiency,
    optimal_square_width,
    optimize_width,
)
from .errors import *  # noqa: F401,F403
from .mbsolver import EchoRecord, GaussianPulse, SimGrid, analytic_amplitudes, extract_echo, solve_mb
from .optimality import (
    DominanceReport,
    GeneralFunctionalSpec,
    generalized_optimality_check,
    lemma2_center_scan,
    lemma2_integral,
    random_bounded_shape,
    square_dominance_check,
    verify_dominance,
)
from .spectral import FourierPair, fourier_pair, phase_align

__version__ = "0.1.0"

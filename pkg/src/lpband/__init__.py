"""Impulse responses by multi-horizon projections in levels, identified
through an instrument for shock-volatility shifts, with simultaneous
bootstrap confidence bands and minimum-distance smoothing."""

__version__ = "0.1.0"

from .design import DesignSpec, Panel, RegressionProblem, build_design, least_squares
from .errors import (
    BandwidthTooLarge,
    ConfigError,
    DegenerateWeightWarning,
    ExplosiveRoots,
    IngestError,
    InsufficientSample,
    LPBandError,
    RankDeficient,
    SingularCovariance,
    WeakInstrumentWarning,
    ZeroGamma,
    ZeroSpread,
)
from .estimate import (
    IRFBundle,
    ResidualSet,
    ThetaVector,
    backward_recursion,
    estimate_c,
    estimate_gamma,
    estimate_residuals,
    estimate_sigma,
    estimate_theta,
    extend_irf,
    forward_c,
)
from .inference import (
    BandSet,
    DrawSet,
    KernelSpec,
    ScorePanel,
    SuptTestResult,
    bonferroni_bands,
    compute_scores,
    default_bandwidth,
    empirical_pointwise_cv,
    fevd_functional,
    gamma_functional,
    hac,
    impact_gap_functional,
    pointwise_bands,
    reduced_irf_functional,
    structural_irf_functional,
    supt_bands,
    supt_test,
    wild_draws,
)
from .simulate import (
    SimConfig,
    SimOutput,
    VolatilityProcess,
    companion_matrix,
    population_theta,
    replication_seed,
    simulate,
    spectral_radius,
    static_mixing_config,
    switching_var4_config,
    true_irf,
)
from .smooth import MDProblem, MDSolution, fit_md, md_weights, smoothed_irf
from .structural import (
    FEVDTable,
    ImpactVector,
    cholesky_impact,
    fevd,
    impact_vector,
    structural_irf,
)

__all__ = [name for name in dir() if not name.startswith("_")]

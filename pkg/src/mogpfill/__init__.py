"""Optical/radar time-series fusion with a two-output GP (semiparametric latent factor model)."""

from .assess import AssessmentReport, assess, metric_r2, rmse
from .covariance import (
    CoregVector,
    MultiInput,
    NoiseVariances,
    assemble_cross_covariance,
    assemble_full_covariance,
    coreg_matrix,
    stable_factorize,
)
from .errors import (
    ConstantReference,
    ConstantSeries,
    NotPositiveDefinite,
    OptimizerDiverged,
    TooFewPairs,
    TooFewSamples,
    ZeroDenominator,
)
from .gp import GpModel, TrainConfig, gp_log_marginal_likelihood, gp_predict, gp_train
from .kernel import KernelKind, KernelParams, kernel_eval, kernel_grad_lengthscale, kernel_matrix
from .mogp import (
    SlfmModel,
    SynergyClass,
    SynergyDiagnostics,
    build_slfm_model,
    diagnose,
    mogp_gradients,
    mogp_log_marginal_likelihood,
    mogp_predict,
    mogp_train,
)
from .phenosynth import ScenarioConfig, generate_scenario, merge_daily, pearson_temporal, rvi, select_descriptor
from .series import PredictionBand, TimeSeries

__version__ = "0.1.0"

"""Progressive multiverse analysis: sampling, sensitivity, and monitoring."""

from .model import (
    Decision,
    DecisionSpace,
    EmptyMultiverseError,
    EncodedDesign,
    ExclusionRule,
    ManifestError,
    Universe,
    encode_one_hot,
    enumerate_universes,
    parse_manifest,
    stratum,
)
from .sampling import (
    LeverageScores,
    SamplePlan,
    SamplerKind,
    inclusion_probability_round,
    leverage_scores,
    make_plan,
    plan_round_robin,
    plan_sketching,
    plan_uniform,
)
from .stats import (
    ConfidenceInterval,
    DegenerateSampleError,
    OutcomeSample,
    SensitivityScore,
    UndefinedCorrelationError,
    ad_k_sample,
    bootstrap_ci_bca,
    f_test,
    fit_linear,
    ks_sensitivity,
    lr_sensitivity,
    pearson,
    sensitivity_report,
    spearman,
    weighted_mean,
)
from .synth import PresetTuning, SynthMultiverse, SynthSpec, generate, load_table, preset

__version__ = "0.1.0"

__all__ = [
    "Decision",
    "DecisionSpace",
    "EmptyMultiverseError",
    "EncodedDesign",
    "ExclusionRule",
    "ManifestError",
    "Universe",
    "encode_one_hot",
    "enumerate_universes",
    "parse_manifest",
    "stratum",
    "LeverageScores",
    "SamplePlan",
    "SamplerKind",
    "inclusion_probability_round",
    "leverage_scores",
    "make_plan",
    "plan_round_robin",
    "plan_sketching",
    "plan_uniform",
    "ConfidenceInterval",
    "DegenerateSampleError",
    "OutcomeSample",
    "SensitivityScore",
    "UndefinedCorrelationError",
    "ad_k_sample",
    "bootstrap_ci_bca",
    "f_test",
    "fit_linear",
    "ks_sensitivity",
    "lr_sensitivity",
    "pearson",
    "sensitivity_report",
    "spearman",
    "weighted_mean",
    "PresetTuning",
    "SynthMultiverse",
    "SynthSpec",
    "generate",
    "load_table",
    "preset",
    "__version__",
]

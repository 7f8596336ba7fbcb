"""Guided autoregressive decoding with confidence-weighted cache perturbation."""

from .diagnostics import (
    TRACE_FIELDS,
    CachePerturbationReport,
    StepTrace,
    cache_perturbation_report,
    guidance_gap,
    normalized_entropy,
    read_traces_jsonl,
    write_traces_csv,
    write_traces_jsonl,
)
from .engine import SampleResult, generate_sample
from .grammar import (
    GridGrammar,
    GridScore,
    class_accuracy,
    read_grids,
    sample_grid,
    score_grid,
    write_grids,
)
from .guidance import (
    GuidanceConfig,
    WeightVector,
    combine_cfg,
    combine_softcfg,
    confidence_weights,
    cosine_gamma,
    delta_context,
    extract_confidence,
    gamma_at,
    step_normalize,
)
from .model import (
    BranchCache,
    LayerParams,
    ModelConfig,
    ModelParams,
    VocabLayout,
    default_config,
    forward_step,
    forward_step_dual,
    forward_step_scaled,
    init_caches,
    record_confidence,
)
from .sampler import SamplerConfig, SplitMix64, argmax, sample
from .tensor import gelu, layer_normalize, matmul, softmax
from .weights_io import (
    CheckpointFormatError,
    CheckpointValidationError,
    expected_tensors,
    load_checkpoint,
    named_tensors,
    random_checkpoint,
    save_checkpoint,
)

__version__ = "0.1.0"

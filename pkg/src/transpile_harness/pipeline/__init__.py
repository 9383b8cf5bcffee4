from transpile_harness.pipeline.bench import (
    OTHERS2ALL,
    PY2OTHERS,
    BenchmarkError,
    OracleProgram,
    build_any2any_pairs,
    build_others2all_bench,
    build_py2others_bench,
    group_by_problem,
)
from transpile_harness.pipeline.distill import (
    DistillationPair,
    DistillStats,
    PipelineError,
    distill,
    rejection_sample,
    rejection_sample_detailed,
    replay,
)
from transpile_harness.pipeline.prompts import (
    ModelResponse,
    build_prompt,
    parse_response,
    prompt_messages,
    render_response,
)
from transpile_harness.pipeline.sampling import (
    WeightedEntry,
    WeightedPool,
    sampling_weight,
    sampling_weights,
    sequential_weighted_sample,
    weighted_sample_without_replacement,
)
from transpile_harness.pipeline.testgen import synthesize_tests

__all__ = [
    "OTHERS2ALL",
    "PY2OTHERS",
    "BenchmarkError",
    "DistillStats",
    "DistillationPair",
    "ModelResponse",
    "OracleProgram",
    "PipelineError",
    "WeightedEntry",
    "WeightedPool",
    "build_any2any_pairs",
    "build_others2all_bench",
    "build_prompt",
    "build_py2others_bench",
    "distill",
    "group_by_problem",
    "parse_response",
    "prompt_messages",
    "rejection_sample",
    "rejection_sample_detailed",
    "render_response",
    "replay",
    "sampling_weight",
    "sampling_weights",
    "sequential_weighted_sample",
    "synthesize_tests",
    "weighted_sample_without_replacement",
]

"""Frequency sketches with joint low-bit sub-counters and deferred fusing,
plus instant-merge and Count-Min baselines, traffic/attack generation, and an
evaluation harness."""

from .analysis import (
    PairExperiment,
    PairOutcome,
    coupon_expect,
    harmonic,
    hyper_mean,
    hyper_pmf,
    hyper_var,
    make_order,
    simulate_pair,
    wrap_tally_batch,
)
from .baselines import (
    CountMinConfig,
    CountMinSketch,
    InstantMergeSketch,
    count_min_width_for,
    equal_memory_widths,
)
from .experiment import (
    ExperimentSpec,
    ExperimentResult,
    bench_throughput,
    run_experiment,
)
from .hashing import RowHasher, derive_seeds, hash_bytes, hash_u64, index_batch, mix64
from .metrics import (
    FlowSizeDistribution,
    detect_changes,
    detect_heavy_hitters,
    estimate_entropy,
    estimate_fsd,
    metric_are,
    metric_f1,
    metric_re,
    metric_rmse,
    metric_wmre,
    threshold_from_fraction,
    true_fsd,
    true_heavy_hitters,
)
from .oracle import ExactCounter
from .sketch import (
    GROUP_MERGED_WIDE,
    GROUP_SHARED_WIDE,
    MERGE_MAX,
    MERGE_SUM,
    PAIR_INDEPENDENT,
    PAIR_MERGED,
    PAIR_SHARED,
    CounterRef,
    CounterView,
    SiameseSketch,
    SketchConfig,
    group_code,
    pair_states,
)
from .snapshot import dump_bytes, load_bytes, load_sketch, save_sketch
from .traffic import (
    AttackPlan,
    Trace,
    TraceError,
    ZipfConfig,
    concat_traces,
    gen_attack,
    gen_zipf,
    interleave_traces,
    plan_attack,
    read_text_trace,
    read_trace,
    write_text_trace,
    write_trace,
)

__version__ = "0.1.0"

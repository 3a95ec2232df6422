"""Connector-space combination calculus, anchored partitions of unity, and
pointwise-limit verification on desk-scale model spaces."""

from .connectors import (
    ConnectorSpace,
    Contraction,
    FamilyError,
    HullWitness,
    OrderedWeightFamily,
    SimplexWeights,
    WeightError,
    affine_line,
    affine_space,
    contract_eval,
    contraction_from_connector,
    convex_combination,
    iterated_hull_contains,
    lambda_sum,
    make_contraction,
    straight_line_contraction,
    warped_line,
)
from .gallery import (
    CollapsingBump,
    FinSeq,
    GalleryError,
    SequentialPoint,
    TaggedReal,
    TwoCellInstance,
    ambiguity_gap,
    as_float,
    as_tagged,
    collapsing_bump,
    collapsing_instance,
    cosine_bump,
    dirichlet_tower,
    dirichlet_value,
    example1_eval,
    example1_function,
    example2_eval,
    example2_function,
    half_line_instance,
    in_core,
    nested_indicator,
    rational_enumeration,
    rational_prefix,
    same_real,
    sequential_convergence_probe,
    slice_modulus,
    spike_width,
    truncation_index,
)
from .harness import (
    ConfigError,
    REGISTRY,
    Scenario,
    ScenarioReport,
    load_scenario_file,
    render_csv,
    render_json,
    report_data,
    run_scenario,
    section_probe,
    suite_data,
)
from .operators import (
    AmbiguousCell,
    ApproximantSequence,
    BaireTower,
    DiscretenessError,
    GlueBump,
    PartitionViolationError,
    SectionedFunction,
    TailReport,
    ambiguous_limit,
    ambiguous_sequence,
    ambiguous_target,
    anchored_cells,
    anchored_sequence,
    blend_sequence,
    contractible_glue,
    lambda_blend,
    piecewise_anchor,
    tail_check,
    tower_tail,
)
from .partitions import (
    AnchoredScheme,
    AnchoringError,
    BumpFamily,
    CoverCellPartition,
    CoverError,
    DenseSet,
    DenseSetError,
    SupportBox,
    dense_from_iterable,
    disjointify,
    dyadic_dense,
    grid_scheme,
    pointwise_finiteness,
    quarter_strat_check,
    sorgenfrey_scheme,
    supplied_partition,
    tail_convergence_oracle,
    verify_anchoring,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"

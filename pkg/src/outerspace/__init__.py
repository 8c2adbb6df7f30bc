"""Exact computational toolkit for marked metric graphs on free groups."""

from .words import (
    Automorphism,
    AutomorphismError,
    Word,
    WordError,
    WhiteheadGraph,
    is_non_separable_certificate,
    whitehead_minimize,
)
from .graphs import (
    GraphError,
    MarkedGraph,
    cyclic_tighten_path,
    derive_labels,
    invert_images,
    reverse_path,
    tighten_path,
)
from .lipschitz import (
    GraphMap,
    OptimalMap,
    candidate_loops,
    lipschitz_distance,
    optimal_map,
    stretch_factor,
)
from .folding import (
    Axis,
    FoldingPath,
    ScanPoint,
    ScanResult,
    StreamingFold,
    geodesic,
    min_cycle_along,
    shortest_cycle_along,
)
from .train_track import (
    TrainTrackError,
    TrainTrackRep,
    expansion_factor,
    illegal_turns,
    is_irreducible,
    transition_matrix,
    verify_train_track,
)
from .core_complex import (
    CoreBudgetError,
    CoreComplex,
    Direction,
    QuadrantSearch,
    Square,
    Track,
    TreeContext,
    TwistReport,
    axis_edges,
    classify_end,
    core,
    geometric_twist,
    intersection_number,
    tracks_meeting_axis,
)
from .laminations import (
    INFINITE,
    LeafWindow,
    RationalLamination,
    SemicontinuityReport,
    axis_overlap_length,
    iterated_word_windows,
    lamination_twist_lower_bound,
    leaf_windows,
    n_cover_check,
    rational_twist,
    semicontinuity_monitor,
)
from .folding import min_cycle_streamed
from .experiments import (
    ConfigError,
    DEFAULT_FAMILY_CONFIG,
    FamilyReport,
    FamilyRow,
    SplittingSpec,
    TwistLawReport,
    dehn_twist,
    example_2_1_check,
    family_automorphism,
    family_sweep,
    linear_fit,
    parse_config,
    splitting_from_config,
)
from .plots import family_plots, plot_paths, scan_plot, twist_law_plot

__version__ = "0.1.0"

__all__ = [
    "Automorphism",
    "AutomorphismError",
    "Axis",
    "ConfigError",
    "CoreBudgetError",
    "CoreComplex",
    "DEFAULT_FAMILY_CONFIG",
    "Direction",
    "FamilyReport",
    "FamilyRow",
    "FoldingPath",
    "INFINITE",
    "LeafWindow",
    "RationalLamination",
    "SemicontinuityReport",
    "GraphError",
    "GraphMap",
    "MarkedGraph",
    "OptimalMap",
    "QuadrantSearch",
    "ScanPoint",
    "ScanResult",
    "SplittingSpec",
    "Square",
    "StreamingFold",
    "Track",
    "TrainTrackError",
    "TrainTrackRep",
    "TreeContext",
    "TwistLawReport",
    "TwistReport",
    "Word",
    "WordError",
    "WhiteheadGraph",
    "axis_edges",
    "axis_overlap_length",
    "candidate_loops",
    "classify_end",
    "core",
    "cyclic_tighten_path",
    "dehn_twist",
    "derive_labels",
    "example_2_1_check",
    "expansion_factor",
    "family_automorphism",
    "family_plots",
    "family_sweep",
    "geodesic",
    "geometric_twist",
    "illegal_turns",
    "intersection_number",
    "invert_images",
    "is_irreducible",
    "is_non_separable_certificate",
    "iterated_word_windows",
    "lamination_twist_lower_bound",
    "leaf_windows",
    "linear_fit",
    "lipschitz_distance",
    "min_cycle_along",
    "min_cycle_streamed",
    "n_cover_check",
    "optimal_map",
    "parse_config",
    "plot_paths",
    "rational_twist",
    "reverse_path",
    "scan_plot",
    "semicontinuity_monitor",
    "shortest_cycle_along",
    "splitting_from_config",
    "stretch_factor",
    "tighten_path",
    "twist_law_plot",
    "tracks_meeting_axis",
    "transition_matrix",
    "verify_train_track",
    "whitehead_minimize",
    "__version__",
]

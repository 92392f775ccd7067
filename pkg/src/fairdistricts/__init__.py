"""Fair-division redistricting engine.

Models states as parcel adjacency graphs, exhaustively enumerates viable
district divisions, computes geometric fairness targets, and runs the
split-sequence / preference / resolution / ranking protocol with automated
party agents.  Includes the classic two-party fair-division procedures
(cut-and-choose, Adjusted Winner) and a CLI with deterministic reports.
"""

from .enumeration import (
    InfeasibleSplit,
    NoViableDivisions,
    TargetReport,
    count_divisions,
    enumerate_divisions,
    enumerate_divisions_refining,
    extremal_rating,
    geometric_target,
    ksplit_geometric_target,
    optimal_piece_division,
)
from .fairdiv import (
    AdjustedWinnerResult,
    CutAndChooseResult,
    GoodsSplit,
    PiecewiseValuation,
    PointAllocation,
    adjusted_winner,
    cut_and_choose,
)
from .model import (
    Division,
    EngineError,
    InfeasibilityError,
    Parcel,
    ParcelMap,
    Split,
    SplitSequence,
    TableRating,
    ValidationFailure,
    VotingModel,
    WinRating,
    as_fraction,
    division_from_dict,
    division_to_dict,
    load_map,
    map_from_dict,
    map_to_dict,
    rate_division,
    validate_division,
    validate_map,
    validate_split,
)
from .protocol import (
    INDIFFERENT,
    OPTION_A,
    OPTION_B,
    NoSwitchPoint,
    OptionEvaluation,
    PartyAgent,
    PreferenceDeclaration,
    RandomGrowth,
    Resolution,
    SequenceGenerationFailed,
    Sweep,
    Transcript,
    declare_preferences,
    derive_seed,
    evaluate_option,
    evaluate_option_detail,
    generate_split_sequence,
    parse_strategy,
    ranking_protocol,
    realize_division,
    resolve,
    run_augmented,
    run_protocol,
)
from .rendering import render_division
from .reporting import (
    ExperimentConfig,
    ExperimentError,
    ExperimentReport,
    load_experiment_config,
    run_experiment,
    summary_csv,
    summary_rows,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

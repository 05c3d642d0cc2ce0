"""Cooperative relay networks: scheduling, induced channels, tradeoffs.

The package models a single-source single-sink relay network, builds
half-duplex amplify-and-forward schedules for the supported families,
turns (network, schedule, fading) into an explicit linear channel,
computes analytic diversity-multiplexing curves in exact arithmetic,
and checks them against Monte Carlo outage slopes.
"""

from .netgraph import (
    Classification,
    Edge,
    Network,
    NetworkError,
    Node,
    NotLayeredError,
    PathSet,
    UnreachableSinkError,
    classify,
    edge_disjoint_paths,
    expand_antennas,
    forward_paths,
    is_relay_bank,
    kpp_network,
    layered_network,
    load_network,
    min_cut,
    naf_network,
    network_from_dict,
    network_to_dict,
    path_delay,
    saf_network,
    save_network,
    single_link_network,
    two_hop_network,
)
from .protocol import (
    CausalReport,
    DelaySearchError,
    OrthogonalityReport,
    Schedule,
    SchedulingError,
    almost_continuous_schedule,
    auto_schedule,
    balance_delays_kpp3,
    check_causal_interference,
    color_kpp_general,
    color_kpp_three,
    color_kpp_two,
    color_regular,
    fd_schedule,
    kppD_schedule,
    kppI_schedule,
    layer_partner_map,
    layered_matching_schedule,
    load_schedule,
    naf_schedule,
    saf_schedule,
    save_schedule,
    schedule_from_dict,
    schedule_to_dict,
    single_link_schedule,
    validate_orthogonal,
)
from .channel import (
    FadingRealization,
    HalfDuplexError,
    PropagationError,
    PropagationProgram,
    StructureCertificate,
    TransferModel,
    extract_blocks,
    propagate,
    structure_certificate,
)
from .dmt import (
    CurveError,
    DmtCurve,
    FamilyAnalysis,
    UnsupportedFamilyError,
    curve_rows,
    curve_to_csv,
    family_dmt,
    linear_curve,
    mimo_dmt,
    mincut_schedule_dmt,
    parallel,
    parallel_repeated,
    pointwise_max,
    pointwise_sum,
    product_parallel,
    rate_scale,
    triangular_lower_bound,
)
from .montecarlo import (
    OutageEstimate,
    PairedSweep,
    SimPlan,
    SlopeFit,
    SweepResult,
    backflow_check,
    fit_slope,
    mutual_info,
    outage_sweep,
    whitening_check,
)

__version__ = "0.1.0"

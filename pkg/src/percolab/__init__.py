"""percolab: a simulation and verification laboratory for dependent 2D
site percolation models built from monotone functions of i.i.d. fields.

Three builtin models share one counter-based random field, so samples
are pure functions of (model, h, box, seed, replica): independent sites,
a block-majority field, and single-site heat-bath dynamics sampled
exactly from the past. On top of them sit percolation geometry, exact
enumeration of small events, Monte Carlo estimators with coupled seeds,
and a CLI that records every run as a replayable plan.
"""

from .grid import (
    Box,
    annulus_vertices,
    are_adjacent,
    box_boundary,
    l1_dist,
    l1_norm,
    neighbors,
)
from .randomfield import (
    STREAM_SITE,
    STREAM_Y,
    FieldKey,
    bernoulli_family,
    field_uniform,
    keyed_uniform,
)
from .models import (
    DEFAULT_DEPTH_CAP,
    DEFAULT_MAJORITY_CAP,
    MODEL_KINDS,
    CoalescenceError,
    MajorityCapError,
    ModelSpec,
    SpinWindow,
    bernoulli_model,
    ising_model,
    majority_model,
    q_conditional,
    sample_spins_batch,
    sample_window,
)
from .percolation import (
    circuits_batch,
    cluster_sizes_at,
    connects,
    connects_batch,
    crossing_complement_check,
    crossings_batch,
    dual_adjacency,
    has_circuit,
    has_crossing,
    label_clusters,
)
from .exact import (
    EventSpec,
    PolynomialInP,
    ThresholdAnomaly,
    builtin_event_suite,
    circuit_event,
    connects_event,
    corollary_32_check,
    crossing_event,
    custom_event,
    exact_pivotal_probability,
    exact_probability,
    fkg_and_sqrt_trick_check,
    pivotal_polynomials,
    russo_identity_check,
    sharp_threshold_diagnostic,
    singleton_event,
)
from .estimators import (
    CSV_COLUMNS,
    Estimate,
    HcResult,
    TailFit,
    band_width,
    center_keys,
    center_spin_event,
    cluster_tail,
    coalescence_tail,
    coalescence_uniformity,
    estimate_crossing,
    estimate_event,
    estimate_hc,
    estimates_to_csv,
    finite_size_report,
    mixing_bound,
    mixing_gap,
    mixing_gap_sweep,
    monotonicity_violations,
    pivotal_epsilon,
    report_as_dict,
    sweep,
    wilson_interval,
)
from .cli import RunPlan, execute, main, parse

__version__ = "0.1.0"

__all__ = [
    "Box", "annulus_vertices", "are_adjacent", "box_boundary", "l1_dist",
    "l1_norm", "neighbors",
    "STREAM_SITE", "STREAM_Y", "FieldKey", "bernoulli_family",
    "field_uniform", "keyed_uniform",
    "DEFAULT_DEPTH_CAP", "DEFAULT_MAJORITY_CAP", "MODEL_KINDS",
    "CoalescenceError", "MajorityCapError", "ModelSpec", "SpinWindow",
    "bernoulli_model", "ising_model", "majority_model", "q_conditional",
    "sample_spins_batch", "sample_window",
    "circuits_batch", "cluster_sizes_at", "connects", "connects_batch",
    "crossing_complement_check", "crossings_batch", "dual_adjacency",
    "has_circuit", "has_crossing", "label_clusters",
    "EventSpec", "PolynomialInP", "ThresholdAnomaly", "builtin_event_suite",
    "circuit_event", "connects_event", "corollary_32_check", "crossing_event",
    "custom_event", "exact_pivotal_probability", "exact_probability",
    "fkg_and_sqrt_trick_check", "pivotal_polynomials", "russo_identity_check",
    "sharp_threshold_diagnostic", "singleton_event",
    "CSV_COLUMNS", "Estimate", "HcResult", "TailFit", "band_width",
    "center_keys", "center_spin_event", "cluster_tail", "coalescence_tail",
    "coalescence_uniformity", "estimate_crossing", "estimate_event",
    "estimate_hc", "estimates_to_csv", "finite_size_report", "mixing_bound",
    "mixing_gap", "mixing_gap_sweep", "monotonicity_violations",
    "pivotal_epsilon", "report_as_dict", "sweep", "wilson_interval",
    "RunPlan", "execute", "main", "parse",
    "__version__",
]

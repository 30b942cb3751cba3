"""dwalk: a desk-scale laboratory for random walks on random digraphs.

Generates D(n, p) digraphs, computes exact walk quantities (stationary
distribution, mixing, taboo probabilities, hitting times, cover times),
and evaluates the analytic estimators they are compared against.
"""

__version__ = "0.1.0"

from .digraph import (
    Digraph,
    GenParams,
    complete_digraph,
    degrees,
    directed_cycle,
    from_edge_text,
    generate,
    is_strongly_connected,
    load,
    pathological_digraph,
    save,
    small_vertices,
    structural_report,
    to_edge_text,
    weak_distance,
)
from .chain import (
    Chain,
    HittingTimes,
    MixReport,
    avoid_prob,
    chain_from,
    contract,
    contracted_index,
    hitting_time,
    mixing,
    point_mass,
    stationary,
    stationary_dense,
    step,
    uniform_dist,
)
from .walker import (
    CoverSummary,
    ReturnPoly,
    WalkRun,
    cover_time_mc,
    eval_R,
    geometric_law_check,
    min_modulus_scan,
    return_poly,
    return_sum,
    simulate_cover,
)
from .trees import (
    LayeredTree,
    build_in_tree,
    build_out_tree,
    default_low_depth,
    upper_depths,
    z_lower,
    z_lower_report,
    z_upper_report,
)
from .degree_theory import (
    DegreeProfile,
    PiPrediction,
    classify_buckets,
    cover_coefficient,
    cover_formula,
    cover_upper_bound_estimate,
    dbar,
    degree_profile,
    predict_pi,
    v_star_count,
    v_star_floor,
    varsigma_star,
)
from .errors import ComputeError, DwalkError, InvariantError, ValidationError

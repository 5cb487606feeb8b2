"""40-ray Kochen-Specker toolkit: exact bounds, quantum values, and a photon-counting simulator."""

__version__ = "0.1.0"

from .rays import Ray, canonical_form, dot, overlap_prob, same_direction
from .pentagram import (
    Context,
    PauliWord,
    common_eigenrays,
    pentagram_contexts,
    pentagram_unsat,
    pentagram_words,
)
from .ksset import (
    EDGE_COUNT,
    N_OCTADS,
    N_RAYS,
    RAY_DEGREE,
    KSSet,
    OrthoGraph,
    build_graph,
    canonical_set,
    enumerate_octads,
    mermin_subset,
)
from .bounds import (
    Assignment,
    BoundReport,
    corrected_S_bound,
    corrected_sigma_bound,
    ks_colorable,
    max_ones,
    mermin_kappa_to_S,
)
from .states import NAMED_STATES, ProbabilityProfile, S_value, profile, sigma_value
from .simulate import (
    CountRecord,
    NoiseModel,
    PulseRun,
    SlitPreparation,
    convergence_trace,
    expected_record,
    mask_to_ray,
    ray_to_mask,
    run_exclusivity_campaign,
    run_ks_experiment,
)
from .analysis import (
    EstimateSet,
    SimilarityReport,
    bhattacharyya,
    estimate_probabilities,
    verdict,
)

__all__ = [name for name in dir() if not name.startswith("_")]

"""Topology-dependent privacy leakage in decentralized gradient averaging.

The package simulates peer-to-peer average consensus over random graphs,
quantifies what a passive coalition of corrupt nodes provably learns (the
input sums of the honest components left after removing them), and attacks
those revealed sums with gradient inversion and membership inference at
desk scale.
"""

from .adversary import (
    CorruptionStrategy,
    HonestPartition,
    component_size_profile,
    honest_partition,
    select_corrupt,
)
from .attacks import (
    AttackFailedError,
    AttackOutcome,
    InversionConfig,
    ReconstructionError,
    best_balanced_accuracy,
    gradient_inversion,
    matched_ssim,
    membership_attack_eval,
    membership_score,
    reconstruct_partial_sums,
    roc_auc,
    ssim,
    write_pgm,
)
from .consensus import (
    AdversaryView,
    HiddenMessageError,
    MixingMatrix,
    Transcript,
    adversary_view,
    metropolis_weights,
    run_consensus,
    uniform_complete_weights,
    verify_conditions,
)
from .fl import (
    GradientBundle,
    LinearRegressor,
    LocalDataset,
    MLPClassifier,
    decentralized_round,
    local_gradient,
    make_synthetic_images,
    split_among_nodes,
    train_centralized,
    train_decentralized,
    union_loss,
)
from .graphs import (
    EdgeListParseError,
    GenerationError,
    Graph,
    connected_components,
    degree_sequence,
    generate_connected,
    generate_poisson,
    generate_power_law,
    induced_subgraph,
    is_connected,
    read_edge_list,
    write_edge_list,
)
from .privacy import (
    FULL_DISCLOSURE,
    MIEstimate,
    PrivateDataModel,
    analytic_mi_asymptotic,
    analytic_mi_exact,
    ksg_mi,
    network_privacy_loss,
    simulate_component_mi,
)
from .seeding import derive_seed, rng_for

__version__ = "0.1.0"

"""Supervised binary-code learning by column generation.

Two trainers share one hash-function subproblem: `train_cghash` optimizes a
large-margin triplet loss, `train_structhash` optimizes multivariate ranking
losses (AUC, NDCG, simplified NDCG) through a 1-slack structured SVM solved by
cutting planes. Retrieval ranks by weighted Hamming distance over the learned
codes; `evaluation` scores the result and supplies the LSH baseline.
"""

from .cghash import CGConfig, MasterSolution, SolverError, recover_duals, solve_master, train_cghash
from .data import (
    ConfigError,
    Dataset,
    ParseError,
    QueryNeighborhood,
    TripletSet,
    build_cross_neighborhoods,
    build_neighborhoods,
    generate_triplets,
    load_dataset,
    save_dense_csv,
    synth_clusters,
)
from .evaluation import (
    MetricsReport,
    evaluate,
    lsh_baseline,
    mean_average_precision,
    ndcg_at_k,
    precision_at_k,
    precision_recall_curve,
)
from .hashcore import (
    HashFunction,
    HashModel,
    delta_h,
    encode,
    encode_all,
    rank_database,
    weighted_hamming,
)
from .hashlearn import (
    DualWeights,
    SubproblemConfig,
    learn_hash_function,
    smoothed_objective_and_gradient,
    spectral_init,
    triplet_objective,
)
from .rankloss import (
    RankScoreKind,
    brute_force_most_violated,
    inference_objective,
    label_loss,
    most_violated,
    most_violated_auc,
    most_violated_ndcg,
    most_violated_sndcg,
    score_auc,
    score_ndcg,
    score_sndcg,
)
from .structhash import (
    StructConfig,
    aggregate_mu,
    cutting_plane,
    delta_psi,
    joint_feature,
    solve_1slack_master,
    solve_stagewise_master,
    train_structhash,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"

"""Matthew effect and sparsity analytics for collaborative filtering."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DegenerateInputError,
    EmptyLogError,
    InsufficientDataError,
    ModeError,
    ParseError,
)
from .zipf import ZipfModel, fit_zipf_exponent, generalized_harmonic, zipf_pmf, zipf_sample  # noqa: E402
from .interactions import (  # noqa: E402
    GeneratorConfig,
    InteractionLog,
    InteractionMatrix,
    RankMap,
    build_interaction_matrix,
    generate_synthetic,
    ingest_lastfm_tsv,
    popularity_ranking,
)
from .similarity import (  # noqa: E402
    HeatmapGrid,
    NeighborhoodProfile,
    SimilarityMatrix,
    cosine_l1,
    cosine_l2,
    jaccard,
    neighborhood_sizes,
    pairwise_similarity,
    predict_rating_paper,
    rank_binned_grid,
)
from .expectation import (  # noqa: E402
    ExpectationConfig,
    ItemPairModel,
    OverlapDistribution,
    click_probability,
    elementary_symmetric,
    expected_item_neighbors,
    expected_item_similarity,
    expected_overlap_union,
    expected_similarity_user_pair,
    expected_user_neighbors,
    neighborhood_ratio,
    overlap_distribution,
    overlap_weights,
    poisson_binomial_pmf,
)
from .montecarlo import (  # noqa: E402
    EstimateReport,
    SimConfig,
    simulate_item_pair,
    simulate_neighborhoods,
    simulate_user_pair,
)

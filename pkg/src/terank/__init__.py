"""Transfer-entropy networks and centrality ranking for locating the
source of disturbances in multivariate process data."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    EmptySetError,
    EstimateUnreliable,
    IngestError,
    NumericalError,
    ParamError,
    ScalingError,
    SimulationError,
    TERankError,
)
from .signals import (
    TagMeta,
    TimeSeriesSet,
    filter_constant,
    limit_scale,
    load_csv,
    load_tag_metadata,
    standardise,
    subsample,
    window,
    write_csv,
    write_tag_metadata,
)
from .estimators import (
    EmbeddingSpec,
    EstimatorConfig,
    TEEstimate,
    auto_embed,
    embed,
    te_directional,
    te_kernel,
    te_ksg,
)
from .significance import (
    DirectionalityEvidence,
    SurrogatePolicy,
    directionality_test,
    rank_order_test,
    surrogate_iaaft,
    surrogate_shuffle,
)
from .engine import (
    DelaySweepSpec,
    EdgeResult,
    WeightedDigraph,
    analyse_pair,
    best_delay,
    build_itn,
    default_delays,
    sweep_delays,
)
from .ranking import (
    CentralityScores,
    RankSpec,
    eigenvector_centrality,
    katz_centrality,
    mix_with_reset,
    rank_graph,
    row_normalise,
    write_gml,
    write_ranking_csv,
)
from .mtr import MTRResult, WindowPlan, export_mtr_csv, mtr_rank, plan_windows
from .simulators import (
    ARConfig,
    MixingConfig,
    linear_te_oracle,
    simulate_mixing,
    simulate_switching_var,
    simulate_var,
)

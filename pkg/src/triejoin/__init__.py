"""Worst-case-optimal trie joins over ordered tree decompositions, with
adhesion-keyed caching, ranked separator enumeration, and a Yannakakis-style
baseline."""

from .query_model import (
    Atom,
    Const,
    FullCQ,
    Graph,
    QueryError,
    QuerySyntaxError,
    Var,
    gaifman_graph,
    gen_cycle_query,
    gen_path_query,
    gen_random_graph_query,
    parse_query,
    splitmix64,
)
from .trie_index import (
    Database,
    Relation,
    TrieError,
    TrieIndex,
    TrieIterator,
    build_trie,
    leapfrog_join,
)
from .td_model import (
    OrderedTD,
    TDError,
    VarOrdering,
    degree_rank,
    derive_ordering,
    is_compatible,
    is_strongly_compatible,
    parse_td,
    remove_redundant_bags,
    serialize_td,
    singleton_td,
    validate_td,
)
from .lftj import (
    CountOverflow,
    EngineStats,
    JoinPlan,
    PlanError,
    TimeoutExceeded,
    make_plan,
    tj_count,
    tj_eval,
)
from .clftj import (
    CacheConfig,
    CacheStats,
    CacheTable,
    CachedPlan,
    FRProduct,
    FRUnion,
    FRUnit,
    FR_UNIT,
    cached_tj_count,
    cached_tj_eval,
    fr_count,
    fr_enumerate,
    make_cached_plan,
)
from .decomp import (
    DecompError,
    SeparatorProblem,
    SeparatorResult,
    TDScore,
    best_td,
    default_chooser,
    enumerate_constrained_separators,
    enumerate_tds,
    generic_decompose,
    min_constrained_separator,
    recursive_td,
    score_td,
)
from .ytd import YTDError, YTDStats, ytd_count, ytd_eval
from .dataio import (
    DataError,
    Dataset,
    RelationStats,
    compute_stats,
    gen_zipf_graph,
    load_edge_list,
)

__version__ = "0.1.0"

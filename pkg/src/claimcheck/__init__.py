"""Zero-shot evidence-guided verification of image-text claims.

Claims are represented as entity-relationship graphs plus per-channel
visual feature bundles; verdicts come from rule-based graph and image
matching against retrieved cross-modal evidence.
"""

from .ergraph import (
    DateData,
    ERGraph,
    EntType,
    EntityNode,
    GraphTemplate,
    LocationData,
    RelationEdge,
    UNK,
    export_dot,
    make_template,
    parse_graph,
    validate_graph,
)
from .graphmatch import (
    ConflictRecord,
    EdgeStatus,
    MatchConfig,
    MatchReport,
    NodeMapping,
    find_conflict,
    find_support,
    graph_match,
    map_nodes,
)
from .imagematch import (
    ABSENT,
    Channel,
    ImageMatchResult,
    VisualFeatureBundle,
    channel_score,
    image_match,
    load_bundle,
    save_bundle,
)
from .providers import (
    EvidenceItem,
    SearchQuery,
    build_graph,
    build_graph_conditional,
    direct_search,
    refine_search_string,
    reverse_search,
)
from .retrieval import RetrievalConfig, RetrievalTrace, gather_cross_evidence, retrieve_visual_evidence
from .textembed import Embedding, StubEmbedder, cosine, stub_embed
from .verify import Code, Label, Verdict, decide, select_best_visual, verify_claim

__version__ = "0.1.0"

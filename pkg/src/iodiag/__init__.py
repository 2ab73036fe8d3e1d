"""iodiag: LLM-assisted diagnosis of HPC I/O performance issues.

Takes a trace in darshan-parser text form, reduces it to per-module summary
fragments, grounds each fragment in retrieved domain knowledge, and merges
per-fragment diagnoses pairwise into one referenced, issue-tagged report,
with a chat interface for follow-up questions and an LLM-ranking harness for
comparing diagnosis tools.
"""

from .engine import (
    ChatSession,
    DescriptiveFragment,
    EngineConfig,
    FinalDiagnosis,
    FragmentDiagnosis,
    MergeTree,
    SourceRef,
    answer_followup,
    build_merge_tree,
    describe_fragment,
    diagnose_fragment,
    diagnose_trace,
    filter_sources,
    merge_pair,
    new_session,
    retrieve_for_fragment,
    tree_merge,
)
from .evalharness import (
    Criterion,
    RankingOutcome,
    RankingTask,
    ScoreTable,
    TraceSample,
    TraceSource,
    build_ranking_prompt,
    compute_scores,
    label_match_score,
    load_manifest,
    run_ranking,
)
from .gateway import (
    ChatExchange,
    HttpGateway,
    MockGateway,
    MockRule,
    MockScript,
    ProviderConfig,
)
from .knowledge import (
    EmbeddedChunk,
    KnowledgeChunk,
    RetrievedSource,
    VectorIndex,
    build_index,
    chunk_document,
)
from .labels import IssueLabel, lookup_label
from .summaries import (
    ApplicationContext,
    SummaryCategory,
    SummaryFragment,
    compute_app_context,
    extract_fragments,
)
from .trace import (
    CounterRecord,
    ModuleId,
    TraceHeader,
    TraceProfile,
    aggregate_counter,
    parse_trace,
    split_modules,
)

__version__ = "0.1.0"

__all__ = [
    "ApplicationContext",
    "ChatExchange",
    "ChatSession",
    "CounterRecord",
    "Criterion",
    "DescriptiveFragment",
    "EmbeddedChunk",
    "EngineConfig",
    "FinalDiagnosis",
    "FragmentDiagnosis",
    "HttpGateway",
    "IssueLabel",
    "KnowledgeChunk",
    "MergeTree",
    "MockGateway",
    "MockRule",
    "MockScript",
    "ModuleId",
    "ProviderConfig",
    "RankingOutcome",
    "RankingTask",
    "RetrievedSource",
    "ScoreTable",
    "SourceRef",
    "SummaryCategory",
    "SummaryFragment",
    "TraceHeader",
    "TraceProfile",
    "TraceSample",
    "TraceSource",
    "VectorIndex",
    "aggregate_counter",
    "answer_followup",
    "build_index",
    "build_merge_tree",
    "build_ranking_prompt",
    "chunk_document",
    "compute_app_context",
    "compute_scores",
    "describe_fragment",
    "diagnose_fragment",
    "diagnose_trace",
    "extract_fragments",
    "filter_sources",
    "label_match_score",
    "load_manifest",
    "lookup_label",
    "merge_pair",
    "new_session",
    "parse_trace",
    "retrieve_for_fragment",
    "run_ranking",
    "split_modules",
    "tree_merge",
]

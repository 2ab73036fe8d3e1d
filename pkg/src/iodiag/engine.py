"""The diagnosis pipeline: describe, retrieve, filter, diagnose, tree-merge, chat.

Per summary fragment: the reasoning model turns the JSON payload into a
natural-language description; the description is embedded and the closest
knowledge chunks retrieved; a cheaper filter model rules out irrelevant
chunks (fail-open: a failed judgment keeps the source); the reasoning model
then diagnoses the fragment against the kept sources, emitting machine-
readable issue tags.

Fragment diagnoses are merged pairwise level by level until one remains.
Pairwise merging keeps each merge small enough for the model to preserve
every side's unique findings and citations; same-level merges are
independent and may run concurrently. Issue tags and origin sets merge
mechanically (set union), so they are immune to model behavior; reference
retention follows the model's ``[REFS]`` answer line, falling back to the
lossless full union when the model call fails.
"""

from __future__ import annotations

import json
import logging
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

from . import prompts
from .knowledge import VectorIndex
from .labels import IssueLabel, lookup_label, taxonomy_text
from .gateway import ChatExchange, ProviderError
from .summaries import (
    ApplicationContext,
    SummaryCategory,
    SummaryFragment,
    compute_app_context,
    extract_fragments,
)
from .trace import ModuleId, TraceProfile

logger = logging.getLogger(__name__)

DEFAULT_RETRIEVAL_K = 15

RELEVANCE_RETRIEVED = "retrieved"
RELEVANCE_KEPT = "kept"
RELEVANCE_RULED_OUT = "ruled_out"


@dataclass
class EngineConfig:
    retrieval_k: int = DEFAULT_RETRIEVAL_K
    max_workers: int = 8
    # Per-merge budget for inlined reference text; chunks beyond it are
    # cited without their body.
    merge_source_budget_chars: int = 6000
    temperature: float = 0.0
    reasoning_model: str = "gpt-4o"
    filter_model: str = "gpt-4o-mini"
    # None = every Table-valid (module, category) pair; otherwise only the
    # listed pairs flow into diagnosis.
    enabled_pairs: set[tuple[ModuleId, SummaryCategory]] | None = None


@dataclass(frozen=True)
class DescriptiveFragment:
    fragment: SummaryFragment
    description: str
    app_context: ApplicationContext

    def __post_init__(self):
        if not self.description:
            raise ValueError("description must be non-empty")


@dataclass(frozen=True)
class SourceRef:
    doc_id: str
    chunk_index: int
    citation: str
    text: str
    relevance: str = RELEVANCE_RETRIEVED

    @property
    def key(self) -> str:
        return f"{self.doc_id}#{self.chunk_index}"


@dataclass(frozen=True)
class FragmentDiagnosis:
    origin: frozenset[tuple[ModuleId, SummaryCategory]]
    text: str
    references: tuple[SourceRef, ...]
    issue_tags: frozenset[IssueLabel]

    def __post_init__(self):
        if not self.origin:
            raise ValueError("origin must be non-empty")
        keys = [r.key for r in self.references]
        if len(keys) != len(set(keys)):
            raise ValueError("references must be deduplicated")


# The root of a merge tree has the same shape as any other node.
FinalDiagnosis = FragmentDiagnosis


@dataclass
class MergeTree:
    leaves: list[FragmentDiagnosis]
    levels: list[list[FragmentDiagnosis]]
    merge_count: int

    @property
    def root(self) -> FinalDiagnosis:
        return self.levels[-1][0]


@dataclass
class ChatMessage:
    role: str
    text: str
    timestamp: float


@dataclass
class ChatSession:
    session_id: str
    diagnosis: FinalDiagnosis
    history: list[ChatMessage] = field(default_factory=list)


def _chat(gateway, config: EngineConfig, messages, model=None) -> str:
    return gateway.chat(
        ChatExchange(
            messages=messages,
            model=model or config.reasoning_model,
            temperature=config.temperature,
        )
    )


def describe_fragment(
    gateway,
    fragment: SummaryFragment,
    app_context: ApplicationContext,
    config: EngineConfig | None = None,
) -> DescriptiveFragment:
    """Turn a JSON summary fragment into a natural-language description.

    The prompt carries exactly three ingredient blocks: the extraction
    descriptor, the serialized payload, and the application context.
    """
    config = config or EngineConfig()
    prompt = prompts.DESCRIBE_TEMPLATE.format(
        module=fragment.module.value,
        category=fragment.category.value,
        descriptor=fragment.extraction_descriptor,
        payload=json.dumps(fragment.payload, indent=2, ensure_ascii=False),
        app_context=app_context.render(),
    )
    description = _chat(
        gateway,
        config,
        [("system", prompts.ANALYST_SYSTEM), ("user", prompt)],
    )
    return DescriptiveFragment(
        fragment=fragment, description=description, app_context=app_context
    )


def retrieve_for_fragment(
    index: VectorIndex,
    desc: DescriptiveFragment,
    gateway,
    k: int = DEFAULT_RETRIEVAL_K,
) -> list[SourceRef]:
    """Embed the description and pull the top-k closest knowledge chunks."""
    if len(index) == 0:
        return []
    vector = gateway.embed([desc.description])[0]
    return [
        SourceRef(
            doc_id=hit.embedded.chunk.doc_id,
            chunk_index=hit.embedded.chunk.chunk_index,
            citation=hit.embedded.citation,
            text=hit.embedded.chunk.text,
            relevance=RELEVANCE_RETRIEVED,
        )
        for hit in index.search(vector, k=k)
    ]


def filter_sources(
    gateway,
    desc: DescriptiveFragment,
    sources: list[SourceRef],
    config: EngineConfig | None = None,
) -> list[SourceRef]:
    """Self-reflection pass: one filter-model relevance judgment per source.

    Judgments run concurrently and independently; retrieval order is
    preserved in the result. A failed judgment keeps its source (fail-open),
    since losing a real reference hurts more than carrying an extra one.
    """
    config = config or EngineConfig()

    def judge(source: SourceRef) -> SourceRef:
        prompt = prompts.FILTER_TEMPLATE.format(
            description=desc.description,
            citation=source.citation,
            chunk=source.text,
        )
        try:
            answer = _chat(
                gateway, config, [("user", prompt)], model=config.filter_model
            )
        except Exception as exc:
            logger.warning("filter judgment failed for %s: %s", source.key, exc)
            return replace(source, relevance=RELEVANCE_KEPT)
        verdict = answer.strip().lower()
        ruled_out = bool(re.search(r"\birrelevant\b", verdict))
        return replace(
            source,
            relevance=RELEVANCE_RULED_OUT if ruled_out else RELEVANCE_KEPT,
        )

    if not sources:
        return []
    with ThreadPoolExecutor(max_workers=max(1, config.max_workers)) as pool:
        return list(pool.map(judge, sources))


def kept_only(sources: list[SourceRef]) -> list[SourceRef]:
    return [s for s in sources if s.relevance == RELEVANCE_KEPT]


def _render_sources(sources: list[SourceRef], budget_chars: int | None = None) -> str:
    if not sources:
        return "(none)"
    lines = []
    used = 0
    for s in sources:
        header = f"- [{s.key}] {s.citation}"
        if budget_chars is None or used + len(s.text) <= budget_chars:
            lines.append(f"{header}\n  {s.text}")
            used += len(s.text)
        else:
            lines.append(header)
    return "\n".join(lines)


def _parse_tag_block(text: str) -> frozenset[IssueLabel] | None:
    match = re.search(r"^\[TAGS\](.*)$", text, re.MULTILINE)
    if match is None:
        return None
    body = match.group(1).strip()
    if not body or body.lower() == "none":
        return frozenset()
    tags = set()
    for part in re.split(r"[;,]", body):
        label = lookup_label(part)
        if label is None:
            if part.strip():
                logger.warning("unknown issue tag ignored: %r", part.strip())
        else:
            tags.add(label)
    return frozenset(tags)


def _parse_refs_block(text: str) -> set[str] | None:
    match = re.search(r"^\[REFS\](.*)$", text, re.MULTILINE)
    if match is None:
        return None
    body = match.group(1).strip()
    if not body or body.lower() == "none":
        return set()
    return {part.strip().strip("[]") for part in re.split(r"[;,]", body) if part.strip()}


def _strip_answer_blocks(text: str) -> str:
    lines = [
        line
        for line in text.splitlines()
        if not line.startswith("[TAGS]") and not line.startswith("[REFS]")
    ]
    return "\n".join(lines).strip()


def diagnose_fragment(
    gateway,
    desc: DescriptiveFragment,
    kept_sources: list[SourceRef],
    config: EngineConfig | None = None,
) -> FragmentDiagnosis:
    """First true diagnosis of one fragment against its kept sources."""
    config = config or EngineConfig()
    prompt = prompts.DIAGNOSE_TEMPLATE.format(
        module=desc.fragment.module.value,
        category=desc.fragment.category.value,
        description=desc.description,
        sources=_render_sources(kept_sources),
        taxonomy=taxonomy_text(),
    )
    response = _chat(
        gateway, config, [("system", prompts.ANALYST_SYSTEM), ("user", prompt)]
    )

    tags = _parse_tag_block(response)
    if tags is None:
        logger.warning(
            "diagnosis response for %s/%s carried no parseable [TAGS] block",
            desc.fragment.module.value,
            desc.fragment.category.value,
        )
        tags = frozenset()

    cited = _parse_refs_block(response)
    if cited is None:
        references = tuple(kept_sources)
    else:
        references = tuple(s for s in kept_sources if s.key in cited)

    return FragmentDiagnosis(
        origin=frozenset({(desc.fragment.module, desc.fragment.category)}),
        text=_strip_answer_blocks(response),
        references=references,
        issue_tags=tags,
    )


def _union_references(
    a: tuple[SourceRef, ...], b: tuple[SourceRef, ...]
) -> tuple[SourceRef, ...]:
    seen = set()
    merged = []
    for ref in list(a) + list(b):
        if ref.key not in seen:
            seen.add(ref.key)
            merged.append(ref)
    return tuple(merged)


def merge_pair(
    gateway,
    a: FragmentDiagnosis,
    b: FragmentDiagnosis,
    config: EngineConfig | None = None,
) -> FragmentDiagnosis:
    """Merge two diagnoses into one; never loses tags, origin, or (on model
    failure) references."""
    config = config or EngineConfig()
    union = _union_references(a.references, b.references)
    budget = config.merge_source_budget_chars // 2
    prompt = prompts.MERGE_TEMPLATE.format(
        text_a=a.text,
        refs_a=_render_sources(list(a.references), budget),
        text_b=b.text,
        refs_b=_render_sources(list(b.references), budget),
    )
    try:
        response = _chat(
            gateway, config, [("system", prompts.ANALYST_SYSTEM), ("user", prompt)]
        )
    except (ProviderError, TimeoutError) as exc:
        logger.warning("merge call failed (%s); concatenating losslessly", exc)
        return FragmentDiagnosis(
            origin=a.origin | b.origin,
            text=a.text + "\n\n" + b.text,
            references=union,
            issue_tags=a.issue_tags | b.issue_tags,
        )

    retained = _parse_refs_block(response)
    if retained is None:
        references = union
    else:
        references = tuple(r for r in union if r.key in retained)
    return FragmentDiagnosis(
        origin=a.origin | b.origin,
        text=_strip_answer_blocks(response),
        references=references,
        issue_tags=a.issue_tags | b.issue_tags,
    )


def build_merge_tree(
    gateway,
    diagnoses: list[FragmentDiagnosis],
    config: EngineConfig | None = None,
) -> MergeTree:
    """Pairwise-merge diagnoses level by level until one remains.

    Pairs (0,1), (2,3), ... merge at each level; an odd trailing diagnosis is
    promoted unchanged. Same-level merges are independent and run
    concurrently; the result does not depend on their scheduling. Exactly
    ``len(diagnoses) - 1`` merge calls are made.
    """
    if not diagnoses:
        raise ValueError("need at least one diagnosis to merge")
    config = config or EngineConfig()
    levels = [list(diagnoses)]
    merges = 0
    while len(levels[-1]) > 1:
        current = levels[-1]
        pairs = [
            (current[i], current[i + 1]) for i in range(0, len(current) - 1, 2)
        ]
        with ThreadPoolExecutor(max_workers=max(1, config.max_workers)) as pool:
            merged = list(
                pool.map(lambda pair: merge_pair(gateway, *pair, config=config), pairs)
            )
        merges += len(pairs)
        if len(current) % 2 == 1:
            merged.append(current[-1])
        levels.append(merged)
    return MergeTree(leaves=list(diagnoses), levels=levels, merge_count=merges)


def tree_merge(
    gateway,
    diagnoses: list[FragmentDiagnosis],
    config: EngineConfig | None = None,
) -> FinalDiagnosis:
    return build_merge_tree(gateway, diagnoses, config).root


def diagnosis_to_dict(d: FragmentDiagnosis) -> dict:
    return {
        "origin": sorted([m.value, c.value] for m, c in d.origin),
        "text": d.text,
        "references": [
            {
                "key": r.key,
                "doc_id": r.doc_id,
                "chunk_index": r.chunk_index,
                "citation": r.citation,
                "text": r.text,
            }
            for r in d.references
        ],
        "issue_tags": sorted(t.display_name for t in d.issue_tags),
    }


def diagnosis_from_dict(data: dict) -> FragmentDiagnosis:
    return FragmentDiagnosis(
        origin=frozenset(
            (ModuleId(m), SummaryCategory(c)) for m, c in data["origin"]
        ),
        text=data["text"],
        references=tuple(
            SourceRef(
                doc_id=r["doc_id"],
                chunk_index=r["chunk_index"],
                citation=r["citation"],
                text=r["text"],
                relevance=RELEVANCE_KEPT,
            )
            for r in data["references"]
        ),
        issue_tags=frozenset(
            label
            for name in data["issue_tags"]
            if (label := lookup_label(name)) is not None
        ),
    )


def render_final_markdown(diagnosis: FinalDiagnosis) -> str:
    lines = [diagnosis.text, "", "## References"]
    if diagnosis.references:
        lines += [f"- [{r.key}] {r.citation}" for r in diagnosis.references]
    else:
        lines.append("- none")
    lines += ["", "## Issue Tags"]
    if diagnosis.issue_tags:
        lines += [f"- {t.display_name}" for t in sorted(
            diagnosis.issue_tags, key=lambda t: t.display_name
        )]
    else:
        lines.append("- none")
    return "\n".join(lines) + "\n"


def _write_json(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, ensure_ascii=False) + "\n")


def diagnose_trace(
    profile: TraceProfile,
    index: VectorIndex,
    gateway,
    config: EngineConfig | None = None,
    out_dir: Path | str | None = None,
    clock: Callable[[], float] = time.monotonic,
) -> FinalDiagnosis:
    """Run the full pipeline over a parsed trace.

    Per-fragment stages run concurrently across fragments. A fragment whose
    pipeline fails is dropped with a prominent warning and excluded from the
    merge tree. When ``out_dir`` is given, every stage artifact is written
    there (fragments/, descriptions/, retrievals/, diagnoses/, tree/,
    final.md, final.json, run.json).
    """
    config = config or EngineConfig()
    started = clock()
    out = Path(out_dir) if out_dir is not None else None

    fragments = extract_fragments(profile)
    if config.enabled_pairs is not None:
        fragments = [
            f for f in fragments if (f.module, f.category) in config.enabled_pairs
        ]
    app_context = compute_app_context(profile)
    stage_times: dict[str, float] = {"extract": clock() - started}

    names = [
        f"{i:02d}-{f.module.value}-{f.category.value}" for i, f in enumerate(fragments)
    ]
    if out is not None:
        for name, fragment in zip(names, fragments):
            _write_json(
                out / "fragments" / f"{name}.json",
                json.loads(fragment.to_json())
                | {"extraction_descriptor": fragment.extraction_descriptor},
            )

    def run_fragment(fragment: SummaryFragment):
        desc = describe_fragment(gateway, fragment, app_context, config)
        retrieved = retrieve_for_fragment(index, desc, gateway, k=config.retrieval_k)
        judged = filter_sources(gateway, desc, retrieved, config)
        diagnosis = diagnose_fragment(gateway, desc, kept_only(judged), config)
        return desc, judged, diagnosis

    stage_start = clock()
    results: list = [None] * len(fragments)
    last_provider_error: Exception | None = None
    with ThreadPoolExecutor(max_workers=max(1, config.max_workers)) as pool:
        futures = {
            pool.submit(run_fragment, fragment): i
            for i, fragment in enumerate(fragments)
        }
        for future in futures:
            i = futures[future]
            try:
                results[i] = future.result()
            except Exception as exc:
                if isinstance(exc, (ProviderError, TimeoutError)):
                    last_provider_error = exc
                logger.error(
                    "DROPPING fragment %s: pipeline failed with %s", names[i], exc
                )
    stage_times["fragments"] = clock() - stage_start

    diagnoses = []
    for name, result in zip(names, results):
        if result is None:
            continue
        desc, judged, diagnosis = result
        diagnoses.append(diagnosis)
        if out is not None:
            (out / "descriptions").mkdir(parents=True, exist_ok=True)
            (out / "descriptions" / f"{name}.txt").write_text(desc.description + "\n")
            _write_json(
                out / "retrievals" / f"{name}.json",
                [
                    {
                        "key": s.key,
                        "citation": s.citation,
                        "relevance": s.relevance,
                    }
                    for s in judged
                ],
            )
            _write_json(out / "diagnoses" / f"{name}.json", diagnosis_to_dict(diagnosis))
    if not diagnoses:
        if last_provider_error is not None:
            raise last_provider_error
        raise RuntimeError("every fragment failed; no diagnosis produced")

    stage_start = clock()
    tree = build_merge_tree(gateway, diagnoses, config)
    stage_times["merge"] = clock() - stage_start

    final = tree.root
    if out is not None:
        for level_no, level in enumerate(tree.levels):
            for node_no, node in enumerate(level):
                _write_json(
                    out / "tree" / f"level-{level_no}" / f"node-{node_no:02d}.json",
                    diagnosis_to_dict(node),
                )
        (out / "final.md").write_text(render_final_markdown(final))
        _write_json(out / "final.json", diagnosis_to_dict(final))
        counts = getattr(gateway, "call_counts", {})
        _write_json(
            out / "run.json",
            {
                "prompt_version": prompts.PROMPT_VERSION,
                "models": {
                    "reasoning": config.reasoning_model,
                    "filter": config.filter_model,
                },
                "fragment_count": len(fragments),
                "diagnosed_fragment_count": len(diagnoses),
                "merge_count": tree.merge_count,
                "call_counts": dict(counts),
                "timings_s": {k: round(v, 6) for k, v in stage_times.items()},
                "total_s": round(clock() - started, 6),
            },
        )
    return final


def new_session(
    session_id: str,
    diagnosis: FinalDiagnosis,
    clock: Callable[[], float] = time.time,
) -> ChatSession:
    """Open a follow-up session; the first assistant message is the diagnosis."""
    session = ChatSession(session_id=session_id, diagnosis=diagnosis)
    session.history.append(
        ChatMessage(role="assistant", text=diagnosis.text, timestamp=clock())
    )
    return session


def answer_followup(
    gateway,
    session: ChatSession,
    question: str,
    config: EngineConfig | None = None,
    clock: Callable[[], float] = time.time,
) -> str:
    """Answer a follow-up question with the diagnosis, its references, and the
    full message history as context; question and answer are appended to the
    history."""
    config = config or EngineConfig()
    system = prompts.CHAT_SYSTEM_TEMPLATE.format(
        diagnosis=session.diagnosis.text,
        references=_render_sources(list(session.diagnosis.references)),
    )
    messages = [("system", system)]
    messages += [(m.role, m.text) for m in session.history]
    messages.append(("user", question))
    answer = _chat(gateway, config, messages)
    session.history.append(ChatMessage(role="user", text=question, timestamp=clock()))
    session.history.append(
        ChatMessage(role="assistant", text=answer, timestamp=clock())
    )
    return answer


def session_to_dict(session: ChatSession) -> dict:
    return {
        "session_id": session.session_id,
        "diagnosis": diagnosis_to_dict(session.diagnosis),
        "history": [
            {"role": m.role, "text": m.text, "timestamp": m.timestamp}
            for m in session.history
        ],
    }


def session_from_dict(data: dict) -> ChatSession:
    return ChatSession(
        session_id=data["session_id"],
        diagnosis=diagnosis_from_dict(data["diagnosis"]),
        history=[
            ChatMessage(role=m["role"], text=m["text"], timestamp=m["timestamp"])
            for m in data["history"]
        ],
    )

"""Acceptance suite: every release criterion, one test and one printed
pass/fail line per criterion. Runs entirely against the offline mock
provider; the optional live smoke test only activates when
IODIAG_SMOKE_ENDPOINT is set.
"""

import functools
import itertools
import json
import math
import os
import random
import re
import time

import pytest

from iodiag.engine import (
    EngineConfig,
    FragmentDiagnosis,
    SourceRef,
    build_merge_tree,
    diagnose_trace,
    filter_sources,
    kept_only,
)
from iodiag.evalharness import (
    Criterion,
    RankingOutcome,
    RankingTask,
    TraceSample,
    TraceSource,
    compute_scores,
    load_manifest,
    make_permutation,
    run_ranking,
)
from iodiag.gateway import MockGateway, MockRule, MockScript
from iodiag.knowledge import (
    EmbeddedChunk,
    KnowledgeChunk,
    VectorIndex,
    build_index,
    chunk_document,
)
from iodiag.labels import IssueLabel
from iodiag.summaries import (
    CATEGORY_COVERAGE,
    SummaryCategory,
    extract_fragments,
    summarize_io_size,
)
from iodiag.trace import ModuleId, parse_trace, read_module_csv, split_modules

from conftest import CORPUS_DIR, SAMPLE_TRACE, make_profile, record, union_merge_response
from test_engine import DescriptiveFragment, app_ctx, sample_fragment, source
from test_eval import write_benchmark_manifest
from test_trace import TRANSCRIBED


def criterion(name):
    """Print one [PASS]/[FAIL] line per acceptance criterion."""

    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"[FAIL] {name}")
                raise
            print(f"[PASS] {name}")
            return result

        return wrapper

    return decorate


class FakeClock:
    def __init__(self):
        self.t = 0.0

    def __call__(self):
        self.t += 0.25
        return self.t


def scripted_pipeline_gateway():
    return MockGateway(
        MockScript(
            rules=[
                MockRule(pattern="Rewrite the I/O trace summary", response="described behavior"),
                MockRule(pattern="Answer with exactly one word", response="relevant"),
                MockRule(
                    pattern="Diagnose any potential I/O performance issues",
                    response="finding\n[TAGS] Shared File Access\n[REFS] none",
                ),
                MockRule(pattern="Merge the two I/O diagnoses", response=union_merge_response),
            ],
            default="OK",
        )
    )


@criterion("parser fixture: zero drops, 20 transcribed records, CSV round-trip, <1s")
def test_parser_fixture(tmp_path):
    start = time.perf_counter()
    text = SAMPLE_TRACE.read_text()
    profile = parse_trace(text)

    record_lines = [l for l in text.splitlines() if l.strip() and not l.startswith("#")]
    assert len(record_lines) >= 200
    assert len(profile.tables) >= 4
    assert profile.record_count == len(record_lines)  # zero drops

    for module, rank, rid, counter, value, path in TRANSCRIBED:
        matches = [
            r
            for r in profile.table(module)
            if r.rank == rank and r.record_id == rid and r.counter_name == counter
        ]
        assert len(matches) == 1, (module, counter)
        assert matches[0].value == value
        assert matches[0].file_path == path

    written = split_modules(profile, tmp_path)
    round_tripped = [r for path in written.values() for r in read_module_csv(path)]
    original = [r for table in profile.tables.values() for r in table]
    assert sorted(round_tripped, key=str) == sorted(original, key=str)  # multiset
    assert time.perf_counter() - start < 1.0


@criterion("coverage: all 16 module subsets emit exactly the valid categories")
def test_category_coverage_all_subsets():
    minimal = {
        ModuleId.POSIX: record("POSIX", "POSIX_OPENS", 1),
        ModuleId.MPIIO: record("MPIIO", "MPIIO_INDEP_OPENS", 1),
        ModuleId.STDIO: record("STDIO", "STDIO_OPENS", 1),
        ModuleId.LUSTRE: record("LUSTRE", "LUSTRE_STRIPE_WIDTH", 1),
    }
    expected_counts = {
        ModuleId.POSIX: 7,
        ModuleId.MPIIO: 5,
        ModuleId.STDIO: 3,
        ModuleId.LUSTRE: 3,
    }
    for size in range(5):
        for combo in itertools.combinations(list(ModuleId), size):
            profile = make_profile({m.value: [minimal[m]] for m in combo})
            fragments = extract_fragments(profile)
            got = [(f.module, f.category) for f in fragments]
            expected = [
                (m, c) for m in ModuleId if m in combo for c in CATEGORY_COVERAGE[m]
            ]
            assert got == expected, combo
            assert len(got) == sum(expected_counts[m] for m in combo)


@criterion("histograms: 100 randomized tables sum to 1 +- 1e-9; single bin exact")
def test_histogram_normalization():
    single = summarize_io_size(
        [record("POSIX", "POSIX_SIZE_READ_0_100", 7)], ModuleId.POSIX
    )
    assert single.payload["read_histogram"] == {"0-100": 1.0}

    suffixes = [
        "0_100", "100_1K", "1K_10K", "10K_100K", "100K_1M",
        "1M_4M", "4M_10M", "10M_100M", "100M_1G", "1G_PLUS",
    ]
    rng = random.Random(424242)
    for case in range(100):
        module = rng.choice([ModuleId.POSIX, ModuleId.MPIIO])
        agg = "_AGG" if module is ModuleId.MPIIO else ""
        table = []
        for rid in range(rng.randint(1, 5)):
            for direction in ("READ", "WRITE"):
                for suffix in suffixes:
                    if rng.random() < 0.35:
                        table.append(
                            record(
                                module.value,
                                f"{module.value}_SIZE_{direction}{agg}_{suffix}",
                                rng.randint(0, 10**7),
                                rid=str(rid),
                            )
                        )
        payload = summarize_io_size(table, module).payload
        for key in ("read_histogram", "write_histogram"):
            if key in payload:
                assert abs(sum(payload[key].values()) - 1.0) <= 1e-9, (case, key)


@criterion("retrieval: search(k=15) == brute-force oracle on 1000x50, <5s")
def test_retrieval_exactness():
    start = time.perf_counter()
    rng = random.Random(31337)
    dim = 32
    index = VectorIndex()
    entries = []
    for i in range(1000):
        vector = [rng.gauss(0, 1) for _ in range(dim)]
        doc_id = f"doc{rng.randint(0, 60):02d}"
        index.add(
            EmbeddedChunk(
                chunk=KnowledgeChunk(doc_id, i, f"chunk {i}", 2),
                vector=tuple(vector),
                norm=math.sqrt(sum(v * v for v in vector)),
            )
        )
        entries.append((doc_id, i, vector))

    for q in range(50):
        query = [rng.gauss(0, 1) for _ in range(dim)]
        qnorm = math.sqrt(sum(v * v for v in query))
        scored = []
        for doc_id, chunk_index, vector in entries:
            dot = sum(a * b for a, b in zip(vector, query))
            norm = math.sqrt(sum(v * v for v in vector))
            scored.append((dot / (norm * qnorm), doc_id, chunk_index))
        scored.sort(key=lambda t: (-t[0], t[1], t[2]))
        oracle = [(d, c) for _, d, c in scored[:15]]
        got = [
            (h.embedded.chunk.doc_id, h.embedded.chunk.chunk_index)
            for h in index.search(query, k=15)
        ]
        assert got == oracle, f"query {q}"
    assert time.perf_counter() - start < 5.0


@criterion("chunker: token lengths {1,511,512,513,1004,5000} match stride-492 oracle")
def test_chunker_boundaries():
    for n in (1, 511, 512, 513, 1004, 5000):
        tokens = [f"w{i}" for i in range(n)]
        chunks = chunk_document("doc", " ".join(tokens))
        expected = []
        start = 0
        while True:
            end = min(start + 512, n)
            expected.append((start, end))
            if end == n:
                break
            start += 492
        assert len(chunks) == len(expected), n
        for chunk, (start, end) in zip(chunks, expected):
            assert chunk.text.split() == tokens[start:end]
            assert chunk.token_count == end - start
            assert chunk.token_count <= 512


def leaf(i, n_refs=2):
    labels = list(IssueLabel)
    return FragmentDiagnosis(
        origin=frozenset({(ModuleId.POSIX, list(SummaryCategory)[i % 7])}),
        text=f"leaf {i} text",
        references=tuple(
            SourceRef(
                doc_id=f"d{i}",
                chunk_index=j,
                citation=f"citation {i}.{j}",
                text=f"reference body {i}.{j}",
            )
            for j in range(n_refs)
        ),
        issue_tags=frozenset({labels[i % len(labels)]}),
    )


@criterion("tree merge: n-1 calls, ceil-halving levels, reference/tag preservation, scheduling independence")
def test_tree_merge_structure():
    for n in range(1, 21):
        gw = MockGateway(
            MockScript(rules=[MockRule(pattern="Merge the two", response=union_merge_response)])
        )
        leaves = [leaf(i) for i in range(n)]
        tree = build_merge_tree(gw, leaves)
        merge_requests = [r for r in gw.chat_requests if "Merge the two I/O diagnoses" in r]
        assert tree.merge_count == n - 1
        assert len(merge_requests) == n - 1
        sizes = [len(level) for level in tree.levels]
        for a, b in zip(sizes, sizes[1:]):
            assert b == math.ceil(a / 2)
        root = tree.root
        assert {r.key for r in root.references} == {
            r.key for l in leaves for r in l.references
        }
        assert root.issue_tags == frozenset().union(*(l.issue_tags for l in leaves))
        assert root.origin == frozenset().union(*(l.origin for l in leaves))

    thirteen = build_merge_tree(
        MockGateway(MockScript(rules=[MockRule(pattern="Merge the two", response=union_merge_response)])),
        [leaf(i) for i in range(13)],
    )
    assert [len(level) for level in thirteen.levels] == [13, 7, 4, 2, 1]

    leaves = [leaf(i) for i in range(11)]
    roots = []
    for workers in (1, 6):
        gw = MockGateway(
            MockScript(rules=[MockRule(pattern="Merge the two", response=union_merge_response)])
        )
        roots.append(build_merge_tree(gw, leaves, EngineConfig(max_workers=workers)).root)
    assert roots[0] == roots[1]


@criterion("merge regression: sentinel findings and their references reach the root")
def test_four_fragment_merge_regression():
    gw = MockGateway(
        MockScript(rules=[MockRule(pattern="Merge the two", response=union_merge_response)])
    )
    nonseq_ref = source(1, doc="stride-study")
    lib_ref = source(2, doc="parallel-io-guide")
    leaves = [
        FragmentDiagnosis(
            origin=frozenset({(ModuleId.POSIX, SummaryCategory.IoSize)}),
            text="Size: bulk of writes between 100K and 1M bytes.",
            references=(source(10, doc="size-doc"),),
            issue_tags=frozenset(),
        ),
        FragmentDiagnosis(
            origin=frozenset({(ModuleId.POSIX, SummaryCategory.IoRequestCount)}),
            text="Request count: tens of thousands of writes.",
            references=(source(11, doc="count-doc"),),
            issue_tags=frozenset(),
        ),
        FragmentDiagnosis(
            origin=frozenset({(ModuleId.POSIX, SummaryCategory.Metadata)}),
            text="Metadata: SENTINEL-MPIIO switch multi-rank output to a higher-level parallel I/O library (MPI-IO).",
            references=(lib_ref,),
            issue_tags=frozenset(),
        ),
        FragmentDiagnosis(
            origin=frozenset({(ModuleId.POSIX, SummaryCategory.Order)}),
            text="Request order: SENTINEL-NONSEQ non-sequential patterns with large strides dominate.",
            references=(nonseq_ref,),
            issue_tags=frozenset(),
        ),
    ]
    root = build_merge_tree(gw, leaves).root
    assert "SENTINEL-NONSEQ" in root.text
    assert "SENTINEL-MPIIO" in root.text
    keys = {r.key for r in root.references}
    assert nonseq_ref.key in keys and lib_ref.key in keys


@criterion("self-reflection filter: scripted 8/15 kept in order, fail-open, parallel==sequential")
def test_self_reflection_filter():
    desc = DescriptiveFragment(
        fragment=sample_fragment(), description="observed behavior", app_context=app_ctx()
    )
    keep = {0, 2, 3, 5, 8, 9, 12, 14}
    rules = [
        MockRule(
            pattern=f"chunk body {i:02d}",
            response="relevant" if i in keep else "irrelevant",
        )
        for i in range(15)
    ]
    sources = [source(i) for i in range(15)]
    results = {}
    for workers in (1, 8):
        gw = MockGateway(MockScript(rules=rules))
        out = filter_sources(gw, desc, sources, EngineConfig(max_workers=workers))
        kept = kept_only(out)
        assert len(kept) == 8
        assert [s.chunk_index for s in kept] == sorted(keep)
        results[workers] = [(s.key, s.relevance) for s in out]
    assert results[1] == results[8]

    flaky = [MockRule(pattern="chunk body 01", raises="provider")] + rules
    gw = MockGateway(MockScript(rules=flaky))
    out = filter_sources(gw, desc, sources)
    assert out[1].relevance == "kept"  # fail-open


@criterion("eval scoring: S=4-Rank, NS bounds, 19/30 hand case, duplication, anonymization, rotation coverage, benchmark manifest totals")
def test_eval_scoring(tmp_path):
    def outcome(tool_ranks, sid, criterion_=Criterion.Utility, valid=True):
        task = RankingTask(
            sample_id=sid,
            criterion=criterion_,
            tool_outputs={t: "text" for t in tool_ranks},
            permutation=make_permutation(sorted(tool_ranks), 0),
            labels=frozenset({IssueLabel.SmallWrite}),
        )
        return RankingOutcome(task=task, ranks=tool_ranks if valid else None,
                              explanation="", valid=valid)

    def sb_sample(sid):
        return TraceSample(
            sample_id=sid,
            trace_path="x",
            labels=frozenset({IssueLabel.SmallWrite}),
            source=TraceSource.SimpleBench,
        )

    # Rank 1 scores 3 points.
    table = compute_scores([outcome({"a": 1, "b": 2}, "s0")], [sb_sample("s0")])
    assert table.raw[("a", Criterion.Utility, TraceSource.SimpleBench)] == 3.0

    # Hand-computed case: ranks over |D| = 10 -> S = 19, NS = 19/30.
    hand_ranks = [1, 2, 2, 3, 1, 4, 2, 1, 3, 2]
    samples = [sb_sample(f"s{i}") for i in range(10)]
    outcomes = []
    for i, rank in enumerate(hand_ranks):
        rest = [r for r in (1, 2, 3, 4) if r != rank]
        outcomes.append(
            outcome({"a": rank, "b": rest[0], "c": rest[1], "d": rest[2]}, f"s{i}")
        )
    table = compute_scores(outcomes, samples)
    key = ("a", Criterion.Utility, TraceSource.SimpleBench)
    assert table.raw[key] == 19.0
    assert abs(table.normalized[key] - 19 / 30) <= 1e-12

    # Duplicating every sample leaves NS unchanged.
    doubled = compute_scores(
        outcomes + [outcome(dict(o.ranks), o.task.sample_id + "x") for o in outcomes],
        samples + [sb_sample(f"s{i}x") for i in range(10)],
    )
    assert abs(doubled.normalized[key] - table.normalized[key]) <= 1e-12

    # NS bounds over randomized outcomes.
    rng = random.Random(8)
    rand_samples = [sb_sample(f"r{i}") for i in range(20)]
    rand_outcomes = []
    for s in rand_samples:
        for _ in range(4):
            ranks = rng.sample([1, 2, 3, 4], 4)
            rand_outcomes.append(outcome(dict(zip("abcd", ranks)), s.sample_id))
    rand_table = compute_scores(rand_outcomes, rand_samples)
    assert all(0.0 <= v <= 1.0 for v in rand_table.normalized.values())

    # Anonymization scan and rotation coverage over all generated prompts.
    real_names = ["rule-engine", "heuristic-checker", "llm-direct", "iodiag"]
    prompts_seen = []

    def recording_judge(prompt):
        prompts_seen.append(prompt)
        return "RANKS: Tool-1=1, Tool-2=2, Tool-3=3, Tool-4=4\nEXPLANATION: ok"

    rank_samples = [sb_sample(f"p{i}") for i in range(3)]
    tool_outputs = {
        name: {s.sample_id: f"anonymous body {i}" for s in rank_samples}
        for i, name in enumerate(real_names)
    }
    ranked = run_ranking(rank_samples, tool_outputs, Criterion.Accuracy, recording_judge)
    for prompt in prompts_seen:
        for name in real_names:
            assert name not in prompt
    per_sample_offsets = {}
    for o in ranked:
        per_sample_offsets.setdefault(o.task.sample_id, []).append(
            o.task.permutation.offset
        )
    for offsets in per_sample_offsets.values():
        assert sorted(offsets) == [0, 1, 2, 3]

    # Benchmark manifest: per-label totals and the 182 grand total.
    manifest = write_benchmark_manifest(tmp_path)
    loaded = load_manifest(manifest)
    totals = {}
    for s in loaded:
        for label in s.labels:
            totals[label] = totals.get(label, 0) + 1
    assert totals[IssueLabel.MisalignedWrite] == 18
    assert totals[IssueLabel.SharedFileAccess] == 19
    assert totals[IssueLabel.ServerLoadImbalance] == 24
    assert sum(totals.values()) == 182


@criterion("end-to-end mock run: manifest complete, full origin coverage, byte-identical repeats, <30s")
def test_end_to_end_mock_run(tmp_path):
    start = time.perf_counter()
    profile = parse_trace(SAMPLE_TRACE.read_text())
    fragments = extract_fragments(profile)

    def run(out_dir):
        gw = scripted_pipeline_gateway()
        index = build_index(CORPUS_DIR, gw.embed)
        assert len(index) == 10
        final = diagnose_trace(
            profile, index, gw, out_dir=out_dir, clock=FakeClock()
        )
        return final

    final = run(tmp_path / "run1")
    assert final.origin == {(f.module, f.category) for f in fragments}

    out1, out2 = tmp_path / "run1", tmp_path / "run2"
    run(out2)
    files1 = sorted(p.relative_to(out1) for p in out1.rglob("*") if p.is_file())
    files2 = sorted(p.relative_to(out2) for p in out2.rglob("*") if p.is_file())
    assert files1 == files2
    for rel in files1:
        assert (out1 / rel).read_bytes() == (out2 / rel).read_bytes(), rel

    for sub in ("fragments", "descriptions", "retrievals", "diagnoses"):
        assert len(list((out1 / sub).glob("*"))) == 18, sub
    assert (out1 / "tree" / "level-0").is_dir()
    assert (out1 / "final.md").exists()
    assert (out1 / "run.json").exists()
    run_info = json.loads((out1 / "run.json").read_text())
    assert run_info["merge_count"] == 17
    assert time.perf_counter() - start < 30.0


SMOKE_ENDPOINT = os.environ.get("IODIAG_SMOKE_ENDPOINT")


@pytest.mark.skipif(
    not SMOKE_ENDPOINT,
    reason="live smoke test runs only when IODIAG_SMOKE_ENDPOINT is set "
    "(quality scores against proprietary judges are out of scope)",
)
@criterion("live smoke: one fragment diagnosed against a configured endpoint")
def test_live_smoke(tmp_path):
    from iodiag.engine import describe_fragment, diagnose_fragment, retrieve_for_fragment
    from iodiag.gateway import HttpGateway, ProviderConfig

    config = ProviderConfig(
        endpoint_url=SMOKE_ENDPOINT,
        reasoning_model=os.environ.get("IODIAG_SMOKE_MODEL", "gpt-4o"),
        filter_model=os.environ.get("IODIAG_SMOKE_FILTER_MODEL", "gpt-4o-mini"),
        embedding_model=os.environ.get("IODIAG_SMOKE_EMBEDDING_MODEL", "text-embedding-3-large"),
    )
    gw = HttpGateway(config)
    index = build_index(CORPUS_DIR, gw.embed, index_path=tmp_path / "kb.jsonl")
    desc = describe_fragment(gw, sample_fragment(), app_ctx())
    sources = retrieve_for_fragment(index, desc, gw, k=5)
    judged = filter_sources(gw, desc, sources)
    diagnosis = diagnose_fragment(gw, desc, kept_only(judged))
    assert diagnosis.text.strip()
    assert len(diagnosis.references) >= 1

"""Labeled-trace benchmark handling and the anonymized LLM-ranking protocol.

Samples live in a JSON-Lines manifest (one object per trace: sample_id,
trace path, source in {SB, IO500, RA}, issue labels by display name). For
each sample and criterion, the judge ranks the anonymized tool outputs
``repetitions`` times (default 4). Three positional-bias counters are
applied to every prompt: real tool names are replaced by Tool-N aliases, the
rank-slot order in the response-format line rotates, and the order of the
diagnosis bodies rotates; repetition r uses rotation offset r for both, so
four repetitions cover content offsets {0,1,2,3} exactly once for four
tools.

Scoring: a rank r earns 4 - r points; per-sample points are averaged over
that sample's valid repetitions, summed over a source's samples, then
normalized by the maximum 3 * |samples| to a 0..1 score.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable

from . import prompts
from .engine import FinalDiagnosis
from .labels import IssueLabel, lookup_label

logger = logging.getLogger(__name__)

DEFAULT_REPETITIONS = 4
MAX_PARSE_ATTEMPTS = 3  # initial attempt + up to 2 reformat retries
_MAX_RANK_POINTS = 3  # best rank (1) earns 4 - 1 points


class UnknownLabel(Exception):
    def __init__(self, name: str):
        super().__init__(f"unknown issue label: {name!r}")
        self.name = name


class MissingTrace(Exception):
    def __init__(self, path: str):
        super().__init__(f"trace file not found: {path}")
        self.path = path


class EmptySource(Exception):
    def __init__(self, source: "TraceSource"):
        super().__init__(f"no valid ranking outcomes for source {source.value}")
        self.source = source


class TraceSource(str, Enum):
    SimpleBench = "SB"
    IO500 = "IO500"
    RealApplications = "RA"


class Criterion(str, Enum):
    Accuracy = "Accuracy"
    Utility = "Utility"
    Interpretability = "Interpretability"

    @property
    def description(self) -> str:
        return _CRITERION_DESCRIPTIONS[self]


_CRITERION_DESCRIPTIONS = {
    Criterion.Accuracy: (
        "evaluate how accurately the ground truth labels are diagnosed by "
        "each tool."
    ),
    Criterion.Utility: (
        "evaluate how useful the information provided in each diagnosis is "
        "for understanding the overall I/O behavior of the application, "
        "identifying performance issues, and determining how to address each "
        "noted issue (regardless of the factuality of such statements)."
    ),
    Criterion.Interpretability: (
        "evaluate how readable and understandable the provided information "
        "is for users at any level of familiarity with HPC I/O."
    ),
}


@dataclass(frozen=True)
class TraceSample:
    sample_id: str
    trace_path: str
    labels: frozenset[IssueLabel]
    source: TraceSource

    def __post_init__(self):
        if not self.labels:
            raise ValueError(f"sample {self.sample_id} has no labels")


def load_manifest(path: Path | str, check_traces: bool = True) -> list[TraceSample]:
    """Load a JSONL manifest, validating labels and trace paths."""
    manifest_path = Path(path)
    samples = []
    base = manifest_path.parent
    with manifest_path.open() as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            labels = set()
            for name in row["labels"]:
                label = lookup_label(name)
                if label is None:
                    raise UnknownLabel(name)
                labels.add(label)
            trace = row["trace"]
            trace_path = Path(trace)
            if not trace_path.is_absolute():
                trace_path = base / trace_path
            if check_traces and not trace_path.exists():
                raise MissingTrace(str(trace_path))
            samples.append(
                TraceSample(
                    sample_id=row["sample_id"],
                    trace_path=str(trace_path),
                    labels=frozenset(labels),
                    source=TraceSource(row["source"]),
                )
            )
    return samples


@dataclass(frozen=True)
class TaskPermutation:
    alias_of: dict  # tool_id -> "Tool-N"
    slot_order: tuple[str, ...]  # aliases, order used in the response-format line
    content_order: tuple[str, ...]  # aliases, order the bodies appear in
    offset: int


@dataclass(frozen=True)
class RankingTask:
    sample_id: str
    criterion: Criterion
    tool_outputs: dict  # tool_id -> diagnosis text
    permutation: TaskPermutation
    labels: frozenset[IssueLabel] = frozenset()

    def __post_init__(self):
        if not 2 <= len(self.tool_outputs) <= 4:
            raise ValueError("ranking needs 2-4 tools")


@dataclass
class RankingOutcome:
    task: RankingTask
    ranks: dict | None  # tool_id -> rank, None when invalid
    explanation: str
    valid: bool
    attempts: int = 1


def make_permutation(tool_ids: list[str], offset: int) -> TaskPermutation:
    """Alias tools in sorted order and rotate both orders by ``offset``."""
    ordered = sorted(tool_ids)
    aliases = [f"Tool-{i + 1}" for i in range(len(ordered))]
    alias_of = dict(zip(ordered, aliases))
    n = len(aliases)
    rotated = tuple(aliases[(i + offset) % n] for i in range(n))
    return TaskPermutation(
        alias_of=alias_of,
        slot_order=rotated,
        content_order=rotated,
        offset=offset % n,
    )


def build_ranking_prompt(task: RankingTask, include_labels: bool = True) -> str:
    """Render the anonymized, rotation-augmented ranking prompt."""
    by_alias = {task.permutation.alias_of[t]: text for t, text in task.tool_outputs.items()}
    bodies = "\n".join(
        f"### {alias}\n{by_alias[alias]}\n"
        for alias in task.permutation.content_order
    )
    slots = ", ".join(f"{alias}=<rank>" for alias in task.permutation.slot_order)
    labels_block = ""
    if include_labels and task.criterion is Criterion.Accuracy and task.labels:
        labels_block = prompts.RANKING_LABELS_BLOCK.format(
            labels="\n".join(
                f"- {label.display_name}"
                for label in sorted(task.labels, key=lambda l: l.display_name)
            )
        )
    return prompts.RANKING_TEMPLATE.format(
        n=len(task.tool_outputs),
        criterion=task.criterion.value,
        criterion_description=task.criterion.description,
        labels_block=labels_block,
        bodies=bodies,
        slots=slots,
    )


_RANK_LINE = re.compile(r"RANKS\s*:\s*(.+)", re.IGNORECASE)
_RANK_PAIR = re.compile(r"(Tool-\d+)\s*=\s*(\d+)")


def parse_ranking_response(text: str, aliases: list[str]) -> tuple[dict, str]:
    """Extract the alias->rank map and explanation; raises ValueError when the
    ranks are missing, incomplete, or not a permutation of 1..n."""
    match = _RANK_LINE.search(text)
    if match is None:
        raise ValueError("no RANKS line found")
    pairs = _RANK_PAIR.findall(match.group(1))
    ranks = {alias: int(rank) for alias, rank in pairs}
    if set(ranks) != set(aliases):
        raise ValueError(f"expected ranks for {aliases}, got {sorted(ranks)}")
    n = len(aliases)
    if sorted(ranks.values()) != list(range(1, n + 1)):
        raise ValueError(f"ranks must be a permutation of 1..{n}: {ranks}")
    explanation = ""
    expl_match = re.search(r"EXPLANATION\s*:\s*(.*)", text, re.IGNORECASE | re.DOTALL)
    if expl_match:
        explanation = expl_match.group(1).strip()
    return ranks, explanation


def run_ranking(
    samples: list[TraceSample],
    tool_outputs: dict,
    criterion: Criterion,
    judge: Callable[[str], str],
    repetitions: int = DEFAULT_REPETITIONS,
    include_labels: bool = True,
) -> list[RankingOutcome]:
    """Rank every sample ``repetitions`` times under one criterion.

    ``tool_outputs`` maps tool_id -> {sample_id -> diagnosis text}; every tool
    must cover every sample. Malformed judge responses are retried with a
    reformat reminder up to 2 times, then recorded as invalid outcomes.
    """
    tool_ids = sorted(tool_outputs)
    for tool_id in tool_ids:
        missing = [s.sample_id for s in samples if s.sample_id not in tool_outputs[tool_id]]
        if missing:
            raise ValueError(f"tool {tool_id} missing outputs for {missing}")

    outcomes = []
    for sample in samples:
        for rep in range(repetitions):
            permutation = make_permutation(tool_ids, offset=rep)
            task = RankingTask(
                sample_id=sample.sample_id,
                criterion=criterion,
                tool_outputs={
                    t: tool_outputs[t][sample.sample_id] for t in tool_ids
                },
                permutation=permutation,
                labels=sample.labels,
            )
            prompt = build_ranking_prompt(task, include_labels=include_labels)
            aliases = list(permutation.alias_of.values())
            ranks = None
            explanation = ""
            attempts = 0
            request = prompt
            while attempts < MAX_PARSE_ATTEMPTS:
                attempts += 1
                try:
                    response = judge(request)
                    by_alias, explanation = parse_ranking_response(response, aliases)
                except ValueError as exc:
                    logger.warning(
                        "judge response invalid for %s rep %d (attempt %d): %s",
                        sample.sample_id,
                        rep,
                        attempts,
                        exc,
                    )
                    request = prompt + "\n\n" + prompts.REFORMAT_REMINDER
                    continue
                ranks = {
                    tool_id: by_alias[alias]
                    for tool_id, alias in permutation.alias_of.items()
                }
                break
            outcomes.append(
                RankingOutcome(
                    task=task,
                    ranks=ranks,
                    explanation=explanation,
                    valid=ranks is not None,
                    attempts=attempts,
                )
            )
    invalid = sum(1 for o in outcomes if not o.valid)
    if invalid:
        logger.warning("%d of %d ranking outcomes invalid", invalid, len(outcomes))
    return outcomes


@dataclass
class ScoreTable:
    """Eq.-style aggregates: raw sums (S), normalized scores (NS), averages."""

    tools: list[str]
    criteria: list[Criterion]
    sources: list[TraceSource]
    per_sample: dict = field(default_factory=dict)  # (T, C, sample_id) -> mean pts
    raw: dict = field(default_factory=dict)  # (T, C, D) -> summed pts
    normalized: dict = field(default_factory=dict)  # (T, C, D) -> NS in [0, 1]
    source_average: dict = field(default_factory=dict)  # (T, C) -> mean NS over D
    criterion_average: dict = field(default_factory=dict)  # (T, D) -> mean NS over C
    overall: dict = field(default_factory=dict)  # T -> grand mean
    invalid_outcomes: int = 0

    def to_json(self) -> str:
        def key3(d):
            return {
                f"{t}|{c.value}|{s.value}": v for (t, c, s), v in sorted(d.items())
            }

        return json.dumps(
            {
                "tools": self.tools,
                "criteria": [c.value for c in self.criteria],
                "sources": [s.value for s in self.sources],
                "per_sample": {
                    f"{t}|{c.value}|{sid}": v
                    for (t, c, sid), v in sorted(self.per_sample.items())
                },
                "raw_scores": key3(self.raw),
                "normalized_scores": key3(self.normalized),
                "source_average": {
                    f"{t}|{c.value}": v
                    for (t, c), v in sorted(self.source_average.items())
                },
                "criterion_average": {
                    f"{t}|{s.value}": v
                    for (t, s), v in sorted(self.criterion_average.items())
                },
                "overall": dict(sorted(self.overall.items())),
                "invalid_outcomes": self.invalid_outcomes,
            },
            indent=2,
        )

    def to_markdown(self) -> str:
        """Metrics-by-source grid, one block per criterion plus the average."""
        headers = [s.value for s in self.sources] + ["Overall"]
        lines = []
        for criterion in self.criteria:
            lines.append(f"### {criterion.value}")
            lines.append("| Tool | " + " | ".join(headers) + " |")
            lines.append("|" + "---|" * (len(headers) + 1))
            for tool in self.tools:
                cells = [
                    _fmt_score(self.normalized.get((tool, criterion, s)))
                    for s in self.sources
                ]
                cells.append(_fmt_score(self.source_average.get((tool, criterion))))
                lines.append(f"| {tool} | " + " | ".join(cells) + " |")
            lines.append("")
        lines.append("### Average")
        lines.append("| Tool | " + " | ".join(headers) + " |")
        lines.append("|" + "---|" * (len(headers) + 1))
        for tool in self.tools:
            cells = [
                _fmt_score(self.criterion_average.get((tool, s))) for s in self.sources
            ]
            cells.append(_fmt_score(self.overall.get(tool)))
            lines.append(f"| {tool} | " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"


def _fmt_score(value) -> str:
    return "-" if value is None else f"{value:.3f}"


def compute_scores(
    outcomes: list[RankingOutcome], samples: list[TraceSample]
) -> ScoreTable:
    """Aggregate ranking outcomes into raw and normalized scores.

    Per (tool, criterion, sample): the mean of 4 - rank over that sample's
    valid repetitions. Per source: the sum over its samples, normalized by
    3 * |source samples|. Averages are arithmetic means of normalized scores.
    """
    by_sample = {s.sample_id: s for s in samples}
    valid = [o for o in outcomes if o.valid]
    invalid_count = len(outcomes) - len(valid)
    tools = sorted({t for o in valid for t in o.ranks})
    criteria = sorted({o.task.criterion for o in valid}, key=lambda c: c.value)
    sources = [
        s for s in TraceSource if any(x.source is s for x in samples)
    ]

    table = ScoreTable(
        tools=tools, criteria=criteria, sources=sources, invalid_outcomes=invalid_count
    )

    points: dict[tuple, list[float]] = {}
    for outcome in valid:
        for tool, rank in outcome.ranks.items():
            key = (tool, outcome.task.criterion, outcome.task.sample_id)
            points.setdefault(key, []).append(4.0 - rank)
    for key, values in points.items():
        table.per_sample[key] = sum(values) / len(values)

    for criterion in criteria:
        has_any = {
            s: any(
                o.task.criterion is criterion
                and by_sample[o.task.sample_id].source is s
                for o in valid
            )
            for s in sources
        }
        for source in sources:
            if not has_any[source]:
                raise EmptySource(source)
        for tool in tools:
            for source in sources:
                source_samples = [s for s in samples if s.source is source]
                total = sum(
                    table.per_sample.get((tool, criterion, s.sample_id), 0.0)
                    for s in source_samples
                )
                table.raw[(tool, criterion, source)] = total
                table.normalized[(tool, criterion, source)] = total / (
                    _MAX_RANK_POINTS * len(source_samples)
                )

    for tool in tools:
        for criterion in criteria:
            values = [table.normalized[(tool, criterion, s)] for s in sources]
            table.source_average[(tool, criterion)] = sum(values) / len(values)
        for source in sources:
            values = [table.normalized[(tool, c, source)] for c in criteria]
            table.criterion_average[(tool, source)] = sum(values) / len(values)
        table.overall[tool] = sum(
            table.source_average[(tool, c)] for c in criteria
        ) / len(criteria)
    return table


def label_match_score(
    diagnosis: FinalDiagnosis, sample: TraceSample
) -> tuple[float | None, float]:
    """Deterministic (precision, recall) of issue tags against ground truth.

    Precision is None (undefined) when the diagnosis carries no tags but the
    sample has labels; both are 1.0 when the diagnosis and sample agree on
    "nothing to report".
    """
    tags = set(diagnosis.issue_tags)
    labels = set(sample.labels)
    hits = len(tags & labels)
    if not tags:
        if not labels:
            return 1.0, 1.0
        return None, 0.0
    recall = hits / len(labels) if labels else 1.0
    return hits / len(tags), recall

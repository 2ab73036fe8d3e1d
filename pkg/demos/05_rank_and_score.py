#!/usr/bin/env python3
"""Walkthrough: anonymized LLM ranking of competing diagnoses and scoring.

Two synthetic tools are ranked by a scripted judge over a tiny two-sample
manifest; the demo prints one generated ranking prompt (note the Tool-N
aliases and rotated orders) and the resulting score table.
"""

import json
import tempfile
from pathlib import Path

from iodiag import Criterion, TraceSource, compute_scores, load_manifest, run_ranking
from iodiag.evalharness import RankingTask, build_ranking_prompt, make_permutation
from iodiag.labels import IssueLabel

workdir = Path(tempfile.mkdtemp(prefix="iodiag-demo-"))
for sid in ("s1", "s2"):
    (workdir / f"{sid}.txt").write_text("# nprocs: 1\n# run time: 1\n")
manifest = workdir / "manifest.jsonl"
manifest.write_text(
    "\n".join(
        json.dumps(
            {
                "sample_id": sid,
                "trace": str(workdir / f"{sid}.txt"),
                "source": "SB",
                "labels": ["Small Write I/O Requests"],
            }
        )
        for sid in ("s1", "s2")
    )
    + "\n"
)
samples = load_manifest(manifest)

tool_outputs = {
    "verbose-tool": {s.sample_id: "A long, thorough diagnosis." for s in samples},
    "terse-tool": {s.sample_id: "Short note." for s in samples},
}

task = RankingTask(
    sample_id="s1",
    criterion=Criterion.Utility,
    tool_outputs={t: tool_outputs[t]["s1"] for t in tool_outputs},
    permutation=make_permutation(sorted(tool_outputs), offset=1),
    labels=frozenset({IssueLabel.SmallWrite}),
)
print("== one generated ranking prompt (rotation offset 1) ==")
print(build_ranking_prompt(task))


def scripted_judge(prompt: str) -> str:
    # Always prefers the first alias; the rotation augmentations are what
    # keep such positional habits from skewing real scores.
    return "RANKS: Tool-1=1, Tool-2=2\nEXPLANATION: scripted preference"


outcomes = []
for criterion in Criterion:
    outcomes += run_ranking(samples, tool_outputs, criterion, scripted_judge)

table = compute_scores(outcomes, samples)
print("== score table ==")
print(table.to_markdown())

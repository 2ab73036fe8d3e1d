#!/usr/bin/env python3
"""Walkthrough: the full diagnosis pipeline against a scripted provider.

Runs describe -> retrieve -> filter -> diagnose -> pairwise tree merge over
the sample trace with a fully scripted mock model, then prints the final
document and the run manifest layout. Swap the MockGateway for an
HttpGateway (see README) to run against a real endpoint.
"""

import json
import re
from pathlib import Path

from iodiag import MockGateway, MockRule, MockScript, build_index, diagnose_trace, parse_trace

TRACE = Path(__file__).parent.parent / "tests" / "data" / "sample_trace.darshan.txt"
CORPUS = Path(__file__).parent.parent / "tests" / "data" / "corpus"
OUT = Path("demo_output/run")


def found_keys(request_text: str) -> list[str]:
    return list(dict.fromkeys(re.findall(r"\[([\w.-]+#\d+)\]", request_text)))


def scripted_merge(request_text: str) -> str:
    keys = found_keys(request_text)
    refs = "; ".join(keys) if keys else "none"
    return f"combined findings from both sides\n[REFS] {refs}"


def scripted_diagnosis(request_text: str) -> str:
    cited = "; ".join(found_keys(request_text)[:2]) or "none"
    return (
        "Writes are moderately sized but every hot file uses a stripe width "
        "of 1, serializing traffic onto single storage targets.\n"
        "[TAGS] Server Load Imbalance; No Collective I/O on Write\n"
        f"[REFS] {cited}"
    )


script = MockScript(
    rules=[
        MockRule(
            pattern="Rewrite the I/O trace summary",
            response="The application moves most of its bytes through POSIX "
            "writes in the 100K-1M byte range on a Lustre file system.",
        ),
        MockRule(pattern="Answer with exactly one word", response="relevant"),
        MockRule(
            pattern="Diagnose any potential I/O performance issues",
            response=scripted_diagnosis,
        ),
        MockRule(pattern="Merge the two I/O diagnoses", response=scripted_merge),
    ],
    default="OK",
)

gateway = MockGateway(script)
profile = parse_trace(TRACE.read_text())
index = build_index(CORPUS, gateway.embed)

final = diagnose_trace(profile, index, gateway, out_dir=OUT)

print("== final diagnosis ==")
print((OUT / "final.md").read_text())

print("== run manifest ==")
run = json.loads((OUT / "run.json").read_text())
print(json.dumps(run, indent=2))
print("\nstage artifacts:")
for sub in ("fragments", "descriptions", "retrievals", "diagnoses", "tree"):
    entries = sorted((OUT / sub).rglob("*"))
    print(f"  {sub}/: {sum(1 for e in entries if e.is_file())} files")

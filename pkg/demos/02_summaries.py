#!/usr/bin/env python3
"""Walkthrough: reducing module tables to categorized summary fragments.

Extracts all fragments from the sample trace, prints the coverage per
module, and dumps two interesting payloads: the POSIX access-size
histograms and the Lustre stripe settings.
"""

import json
from pathlib import Path

from iodiag import compute_app_context, extract_fragments, parse_trace

TRACE = Path(__file__).parent.parent / "tests" / "data" / "sample_trace.darshan.txt"

profile = parse_trace(TRACE.read_text())
fragments = extract_fragments(profile)
context = compute_app_context(profile)

print("== application context ==")
print(context.render())

print(f"\n== {len(fragments)} fragments ==")
for fragment in fragments:
    print(f"- {fragment.module.value}/{fragment.category.value}")

by_key = {(f.module.value, f.category.value): f for f in fragments}

print("\n== POSIX IoSize payload ==")
print(json.dumps(by_key[("POSIX", "IoSize")].payload, indent=2))

print("\n== LUSTRE StripeSetting payload ==")
print(json.dumps(by_key[("LUSTRE", "StripeSetting")].payload, indent=2))

print("\n== extraction descriptor that travels into prompts ==")
print(by_key[("POSIX", "IoSize")].extraction_descriptor)

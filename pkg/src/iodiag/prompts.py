"""Prompt templates for the diagnosis pipeline.

Templates are versioned text assets with named placeholder slots; the active
version is recorded in every run manifest so runs stay auditable. Downstream
parsing relies on the structured ``[TAGS]`` and ``[REFS]`` answer lines these
templates request.
"""

PROMPT_VERSION = "1"

ANALYST_SYSTEM = (
    "You are an HPC I/O performance analyst. Be precise, state concrete "
    "numbers with their units, and never invent values that are not in the "
    "material you are given."
)

DESCRIBE_TEMPLATE = """\
Rewrite the I/O trace summary below as a short natural-language description
of the application's I/O behavior. Name the interface ({module}) and the
aspect ({category}) you are describing, state the key numbers explicitly,
and remember that sizes are in bytes.

## Extraction logic
{descriptor}

## Summary values ({module} / {category})
{payload}

## Application context
{app_context}
"""

FILTER_TEMPLATE = """\
Decide whether the reference passage below contains information relevant to
diagnosing the I/O behavior described. Answer with exactly one word:
relevant or irrelevant.

## I/O behavior
{description}

## Reference passage ({citation})
{chunk}
"""

DIAGNOSE_TEMPLATE = """\
Diagnose any potential I/O performance issues in the behavior described
below. Ground every claim in the observed numbers, use the reference
passages where they apply, and cite them by their bracketed keys.

## Observed behavior ({module} / {category})
{description}

## Reference passages
{sources}

Known issue labels:
{taxonomy}

Respond with the diagnosis prose, then exactly two final lines:
[TAGS] the issue labels from the list above that apply, separated by `;` (or `none`)
[REFS] the keys of the reference passages your diagnosis relies on, separated by `;` (or `none`)
"""

MERGE_TEMPLATE = """\
Merge the two I/O diagnoses below into one combined diagnosis. Remove
redundant information, resolve contradictory details, and keep every finding
that is unique to either side, preserving its supporting citations.

## Diagnosis A
{text_a}

### References of A
{refs_a}

## Diagnosis B
{text_b}

### References of B
{refs_b}

Respond with the merged diagnosis prose, then one final line:
[REFS] the keys of all references the merged diagnosis still relies on, separated by `;` (or `none`)
"""

CHAT_SYSTEM_TEMPLATE = """\
You are an HPC I/O performance assistant continuing a conversation about a
completed diagnosis. Ground answers in the diagnosis and its reference
material below; give concrete, actionable guidance, including commands or
code when the user asks how to fix something.

## Diagnosis
{diagnosis}

## Reference material
{references}
"""

RANKING_TEMPLATE = """\
You are ranking the outputs of {n} anonymized I/O performance diagnosis
tools for the same application trace. Criterion: {criterion} - {criterion_description}
{labels_block}
{bodies}

Rank all {n} tools from 1 (best) to {n} (worst) under the stated criterion.
Use each rank exactly once; ties are not allowed.

Respond with exactly two lines:
RANKS: {slots}
EXPLANATION: a short justification of the assigned ranks
"""

RANKING_LABELS_BLOCK = """\
Ground-truth issues present in this trace:
{labels}
"""

REFORMAT_REMINDER = (
    "Your previous answer could not be parsed. Respond again using exactly "
    "the requested format."
)

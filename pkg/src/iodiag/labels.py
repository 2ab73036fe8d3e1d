"""The issue-label taxonomy shared by the diagnosis engine and the evaluation harness.

Sixteen labels covering the common HPC I/O performance problems a diagnosis
can claim. Each label has a stable display name (used in manifests, tag
blocks, and prompts) and a one-sentence description injected into diagnosis
prompts.
"""

from __future__ import annotations

from enum import Enum


class IssueLabel(Enum):
    HighMetadataLoad = (
        "High Metadata Load",
        "The application spends a significant amount of time performing "
        "metadata operations (e.g., directory lookups, file system operations).",
    )
    MisalignedRead = (
        "Misaligned Read Requests",
        "The application makes read requests that are not aligned with the "
        "file system's stripe boundaries.",
    )
    MisalignedWrite = (
        "Misaligned Write Requests",
        "The application makes write requests that are not aligned with the "
        "file system's stripe boundaries.",
    )
    RandomRead = (
        "Random Access Patterns on Read",
        "The application issues read requests in a random access pattern.",
    )
    RandomWrite = (
        "Random Access Patterns on Write",
        "The application issues write requests in a random access pattern.",
    )
    SharedFileAccess = (
        "Shared File Access",
        "The application has multiple processes or ranks accessing the same file.",
    )
    SmallRead = (
        "Small Read I/O Requests",
        "The application is making frequent read requests with a small "
        "number of bytes.",
    )
    SmallWrite = (
        "Small Write I/O Requests",
        "The application is making frequent write requests with a small "
        "number of bytes.",
    )
    RepetitiveRead = (
        "Repetitive Data Access on Read",
        "The application is making read requests to the same data repeatedly.",
    )
    ServerLoadImbalance = (
        "Server Load Imbalance",
        "The application issues a disproportionate amount of I/O traffic to "
        "some servers compared to others or does not properly utilize the "
        "available storage resources.",
    )
    RankLoadImbalance = (
        "Rank Load Imbalance",
        "The application has MPI ranks issuing a disproportionate amount of "
        "I/O traffic compared to others.",
    )
    MultiProcessWithoutMPI = (
        "Multi-Process Without MPI",
        "The application has multiple processes but does not leverage MPI.",
    )
    NoCollectiveRead = (
        "No Collective I/O on Read",
        "The application does not perform collective I/O on read operations.",
    )
    NoCollectiveWrite = (
        "No Collective I/O on Write",
        "The application does not perform collective I/O on write operations.",
    )
    LowLevelLibraryRead = (
        "Low-Level Library on Read",
        "The application relies on a low-level library like STDIO for a "
        "significant amount of read operations outside of loading/reading "
        "configuration or output files.",
    )
    LowLevelLibraryWrite = (
        "Low-Level Library on Write",
        "The application relies on a low-level library like STDIO for a "
        "significant amount of write operations outside of loading/reading "
        "configuration or output files.",
    )

    def __init__(self, display_name: str, description: str):
        self.display_name = display_name
        self.description = description


# Accepted spellings seen in manifests and model output, beyond display names
# and member names (all matched casefolded).
_ALIASES = {
    "misaligned read requests": IssueLabel.MisalignedRead,
    "misaligned write requests": IssueLabel.MisalignedWrite,
    "multi-process w/o mpi": IssueLabel.MultiProcessWithoutMPI,
}

_BY_NAME: dict[str, IssueLabel] = {}
for _label in IssueLabel:
    _BY_NAME[_label.name.casefold()] = _label
    _BY_NAME[_label.display_name.casefold()] = _label
_BY_NAME.update({k.casefold(): v for k, v in _ALIASES.items()})


def lookup_label(name: str) -> IssueLabel | None:
    """Resolve a label from a display name, member name, or known alias."""
    return _BY_NAME.get(name.strip().casefold())


def taxonomy_text() -> str:
    """All display names, one per line, for inclusion in prompts."""
    return "\n".join(f"- {label.display_name}" for label in IssueLabel)

"""Reduce per-module counter tables to compact, categorized summary fragments.

Each darshan module yields a fixed set of summary categories:

    POSIX : IoSize, IoRequestCount, File, Metadata, Rank, Alignment, Order
    MPIIO : IoSize, IoRequestCount, File, Metadata, Rank
    STDIO : IoSize, IoRequestCount, File
    LUSTRE: Mount, StripeSetting, ServerUsage

Fragments are small JSON-serializable payloads paired with a prose
``extraction_descriptor`` explaining how the numbers were computed; the
descriptor travels with the payload into downstream prompts. Counters the
trace does not carry yield ``"unavailable"`` entries instead of errors,
because counter sets vary across darshan builds.

All sizes are in bytes. Where a file has both a shared (rank -1) record and
per-rank records, the shared record wins for totals (see
``trace.shared_precedence``).
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .trace import (
    CounterRecord,
    ModuleId,
    TraceHeader,
    TraceProfile,
    aggregate_counter,
    shared_precedence,
)

UNAVAILABLE = "unavailable"

# Histogram bin labels and the matching counter-name fragments, smallest first.
SIZE_BINS = (
    "0-100",
    "100-1K",
    "1K-10K",
    "10K-100K",
    "100K-1M",
    "1M-4M",
    "4M-10M",
    "10M-100M",
    "100M-1G",
    "1G+",
)
_BIN_SUFFIXES = (
    "0_100",
    "100_1K",
    "1K_10K",
    "10K_100K",
    "100K_1M",
    "1M_4M",
    "4M_10M",
    "10M_100M",
    "100M_1G",
    "1G_PLUS",
)

TOP_FILES_LIMIT = 10
STRIDE_SLOTS = 4


class SummaryCategory(str, Enum):
    IoSize = "IoSize"
    IoRequestCount = "IoRequestCount"
    File = "File"
    Metadata = "Metadata"
    Rank = "Rank"
    Alignment = "Alignment"
    Order = "Order"
    Mount = "Mount"
    StripeSetting = "StripeSetting"
    ServerUsage = "ServerUsage"

    def __str__(self) -> str:
        return self.value


CATEGORY_COVERAGE: dict[ModuleId, tuple[SummaryCategory, ...]] = {
    ModuleId.POSIX: (
        SummaryCategory.IoSize,
        SummaryCategory.IoRequestCount,
        SummaryCategory.File,
        SummaryCategory.Metadata,
        SummaryCategory.Rank,
        SummaryCategory.Alignment,
        SummaryCategory.Order,
    ),
    ModuleId.MPIIO: (
        SummaryCategory.IoSize,
        SummaryCategory.IoRequestCount,
        SummaryCategory.File,
        SummaryCategory.Metadata,
        SummaryCategory.Rank,
    ),
    ModuleId.STDIO: (
        SummaryCategory.IoSize,
        SummaryCategory.IoRequestCount,
        SummaryCategory.File,
    ),
    ModuleId.LUSTRE: (
        SummaryCategory.Mount,
        SummaryCategory.StripeSetting,
        SummaryCategory.ServerUsage,
    ),
}


@dataclass(frozen=True)
class SummaryFragment:
    module: ModuleId
    category: SummaryCategory
    payload: dict
    extraction_descriptor: str

    def __post_init__(self):
        if self.category not in CATEGORY_COVERAGE[self.module]:
            raise ValueError(
                f"category {self.category} not valid for module {self.module}"
            )

    def to_json(self) -> str:
        return json.dumps(
            {
                "module": self.module.value,
                "category": self.category.value,
                "payload": self.payload,
            },
            indent=2,
            ensure_ascii=False,
        )


@dataclass(frozen=True)
class ApplicationContext:
    runtime_seconds: float
    nprocs: int
    io_proportions: dict[ModuleId, float]

    def render(self) -> str:
        """One-line prose rendering used in prompts."""
        shares = ", ".join(
            f"{m.value} {frac:.1%}" for m, frac in self.io_proportions.items()
        )
        return (
            f"total runtime: {_fmt(self.runtime_seconds)} seconds; "
            f"MPI processes: {self.nprocs}; "
            f"share of bytes moved per I/O interface: {shares or 'none recorded'}"
        )


def _fmt(value: float):
    return int(value) if float(value).is_integer() else value


def _counter(module: ModuleId, name: str) -> str:
    return f"{module.value}_{name}"


def _has(table: list[CounterRecord], counter: str) -> bool:
    return any(r.counter_name == counter for r in table)


def _sum(table: list[CounterRecord], counter: str) -> float:
    return aggregate_counter(table, counter)


def _sum_or_unavailable(table, counter):
    return _fmt(_sum(table, counter)) if _has(table, counter) else UNAVAILABLE


def _histogram(table, module: ModuleId, direction: str) -> tuple[dict, float]:
    """Normalized size histogram over the 10 darshan bins; zero bins omitted."""
    agg = "_AGG" if module is ModuleId.MPIIO else ""
    counts = []
    for suffix in _BIN_SUFFIXES:
        counts.append(_sum(table, f"{module.value}_SIZE_{direction}{agg}_{suffix}"))
    total = sum(counts)
    if total <= 0:
        return {}, total
    return {
        label: count / total
        for label, count in zip(SIZE_BINS, counts)
        if count > 0
    }, total


def summarize_io_size(table: list[CounterRecord], module: ModuleId) -> SummaryFragment:
    """Total bytes moved plus (POSIX/MPIIO) access-size histograms."""
    table = shared_precedence(table)
    payload = {
        "total_bytes_read": _sum_or_unavailable(table, _counter(module, "BYTES_READ")),
        "total_bytes_written": _sum_or_unavailable(
            table, _counter(module, "BYTES_WRITTEN")
        ),
    }
    descriptor = (
        f"Sums {module.value}_BYTES_READ and {module.value}_BYTES_WRITTEN over all "
        "file records (shared records take precedence over per-rank ones). "
        "All values are in bytes."
    )
    if module in (ModuleId.POSIX, ModuleId.MPIIO):
        read_hist, n_reads = _histogram(table, module, "READ")
        write_hist, n_writes = _histogram(table, module, "WRITE")
        if read_hist:
            payload["read_histogram"] = read_hist
        else:
            payload["reads_absent"] = True
        if write_hist:
            payload["write_histogram"] = write_hist
        else:
            payload["writes_absent"] = True
        descriptor += (
            " read_histogram/write_histogram give the proportion of operations "
            "per access-size bin, computed from the SIZE_READ_*/SIZE_WRITE_* "
            "counters; bin edges are in BYTES (e.g. '100K-1M' means 100 KB to "
            "1 MB requests); empty bins are omitted and a histogram is dropped "
            "entirely when that direction had no operations."
        )
    return SummaryFragment(module, SummaryCategory.IoSize, payload, descriptor)


def summarize_request_counts(
    table: list[CounterRecord], module: ModuleId
) -> SummaryFragment:
    """Operation counts for the module's defined operation kinds."""
    table = shared_precedence(table)
    payload: dict = {}
    if module is ModuleId.MPIIO:
        indep_r = _sum(table, "MPIIO_INDEP_READS")
        indep_w = _sum(table, "MPIIO_INDEP_WRITES")
        coll_r = _sum(table, "MPIIO_COLL_READS")
        coll_w = _sum(table, "MPIIO_COLL_WRITES")
        split = _sum(table, "MPIIO_SPLIT_READS") + _sum(table, "MPIIO_SPLIT_WRITES")
        nb = _sum(table, "MPIIO_NB_READS") + _sum(table, "MPIIO_NB_WRITES")
        total = indep_r + indep_w + coll_r + coll_w + split + nb
        payload.update(
            {
                "reads": _fmt(indep_r + coll_r),
                "writes": _fmt(indep_w + coll_w),
                "opens": _fmt(
                    _sum(table, "MPIIO_INDEP_OPENS") + _sum(table, "MPIIO_COLL_OPENS")
                ),
                "syncs": _sum_or_unavailable(table, "MPIIO_SYNCS"),
                "independent_reads": _fmt(indep_r),
                "independent_writes": _fmt(indep_w),
                "collective_reads": _fmt(coll_r),
                "collective_writes": _fmt(coll_w),
                "collective_fraction": (coll_r + coll_w) / total if total > 0 else 0.0,
            }
        )
        descriptor = (
            "Sums MPI-IO operation counters (MPIIO_INDEP_*/COLL_*), reporting "
            "independent vs collective operations separately; "
            "collective_fraction is collective reads+writes over all "
            "read/write operations (0.0 when no collective I/O happened)."
        )
    else:
        names = (
            ("reads", "READS"),
            ("writes", "WRITES"),
            ("opens", "OPENS"),
            ("seeks", "SEEKS"),
        )
        if module is ModuleId.POSIX:
            names += (("stats", "STATS"), ("fsyncs", "FSYNCS"))
        else:
            names += (("flushes", "FLUSHES"),)
        for key, counter in names:
            payload[key] = _sum_or_unavailable(table, _counter(module, counter))
        descriptor = (
            f"Sums the {module.value} operation-count counters "
            "(reads, writes, opens, seeks, ...) over all file records; shared "
            "records take precedence over per-rank ones."
        )
    return SummaryFragment(module, SummaryCategory.IoRequestCount, payload, descriptor)


def _per_file_groups(table: list[CounterRecord]) -> dict[str, list[CounterRecord]]:
    groups: dict[str, list[CounterRecord]] = {}
    for r in table:
        groups.setdefault(r.record_id, []).append(r)
    return groups


def summarize_files(table: list[CounterRecord], module: ModuleId) -> SummaryFragment:
    """File population: counts, shared vs unique, and the top movers by bytes."""
    groups = _per_file_groups(table)
    read_c = _counter(module, "BYTES_READ")
    write_c = _counter(module, "BYTES_WRITTEN")

    per_file = []
    shared = 0
    for record_id, records in groups.items():
        ranks = {r.rank for r in records}
        if -1 in ranks or len(ranks) > 1:
            shared += 1
        records = shared_precedence(records)
        per_file.append(
            {
                "file_path": records[0].file_path,
                "bytes_read": _fmt(_sum(records, read_c)),
                "bytes_written": _fmt(_sum(records, write_c)),
            }
        )
    per_file.sort(
        key=lambda f: (-(f["bytes_read"] + f["bytes_written"]), f["file_path"])
    )
    payload = {
        "file_count": len(groups),
        "shared_file_count": shared,
        "unique_file_count": len(groups) - shared,
        "top_files_by_bytes": per_file[:TOP_FILES_LIMIT],
    }
    descriptor = (
        "Counts distinct file records; a file is 'shared' when it has a "
        "rank -1 record or records from more than one rank. "
        f"top_files_by_bytes lists up to {TOP_FILES_LIMIT} files by total bytes "
        "moved (read+written, in bytes)."
    )
    return SummaryFragment(module, SummaryCategory.File, payload, descriptor)


def summarize_metadata(
    table: list[CounterRecord], module: ModuleId, header: TraceHeader
) -> SummaryFragment:
    """Metadata operation volume and cumulative metadata time."""
    table = shared_precedence(table)
    if module is ModuleId.MPIIO:
        meta_ops = (
            _sum(table, "MPIIO_INDEP_OPENS")
            + _sum(table, "MPIIO_COLL_OPENS")
            + _sum(table, "MPIIO_SYNCS")
        )
        op_names = "opens and syncs"
    else:
        meta_ops = sum(
            _sum(table, _counter(module, n))
            for n in ("OPENS", "SEEKS", "STATS", "FSYNCS", "FDSYNCS")
        )
        op_names = "opens, seeks, stats, and syncs"
    meta_time_c = _counter(module, "F_META_TIME")
    payload: dict = {"metadata_op_count": _fmt(meta_ops)}
    if _has(table, meta_time_c):
        meta_time = _sum(table, meta_time_c)
        payload["metadata_time_seconds"] = _fmt(meta_time)
        if header.runtime_seconds > 0:
            payload["metadata_time_fraction"] = meta_time / header.runtime_seconds
    else:
        payload["metadata_time_seconds"] = UNAVAILABLE
    descriptor = (
        f"Counts metadata operations ({op_names}) and sums "
        f"{meta_time_c} across records; metadata_time_fraction divides the "
        "cumulative metadata seconds by the job runtime (it can exceed 1.0 "
        "because the counter accumulates across ranks)."
    )
    return SummaryFragment(module, SummaryCategory.Metadata, payload, descriptor)


def summarize_rank_balance(
    table: list[CounterRecord], header: TraceHeader, module: ModuleId = ModuleId.POSIX
) -> SummaryFragment:
    """I/O balance across MPI ranks: extremes, variance, per-rank byte totals."""
    payload: dict = {}
    if header.nprocs == 1:
        payload.update(
            {
                "fastest_rank": 0,
                "slowest_rank": 0,
                "variance_rank_time": 0.0,
                "variance_rank_bytes": 0.0,
                "single_process": True,
            }
        )
    else:
        shared = [r for r in table if r.rank == -1]
        dominant = _dominant_shared_record_table(shared, module)
        for key, counter in (
            ("fastest_rank", "FASTEST_RANK"),
            ("fastest_rank_bytes", "FASTEST_RANK_BYTES"),
            ("fastest_rank_time", "F_FASTEST_RANK_TIME"),
            ("slowest_rank", "SLOWEST_RANK"),
            ("slowest_rank_bytes", "SLOWEST_RANK_BYTES"),
            ("slowest_rank_time", "F_SLOWEST_RANK_TIME"),
        ):
            payload[key] = _sum_or_unavailable(dominant, _counter(module, counter))
        for key, counter in (
            ("variance_rank_time", "F_VARIANCE_RANK_TIME"),
            ("variance_rank_bytes", "F_VARIANCE_RANK_BYTES"),
        ):
            name = _counter(module, counter)
            values = [r.value for r in shared if r.counter_name == name]
            payload[key] = _fmt(max(values)) if values else UNAVAILABLE

    per_rank: dict[int, float] = {}
    for r in table:
        if r.rank >= 0 and r.counter_name in (
            _counter(module, "BYTES_READ"),
            _counter(module, "BYTES_WRITTEN"),
        ):
            per_rank[r.rank] = per_rank.get(r.rank, 0.0) + r.value
    if per_rank:
        payload["per_rank_bytes"] = {
            str(rank): _fmt(per_rank[rank]) for rank in sorted(per_rank)
        }
        low, high = min(per_rank.values()), max(per_rank.values())
        if low > 0:
            payload["max_min_byte_ratio"] = high / low
    descriptor = (
        "Reports the fastest/slowest rank counters and the worst-case "
        "rank-time/rank-bytes variance across shared file records, plus total "
        "bytes per rank where per-rank records exist (max_min_byte_ratio is "
        "the heaviest rank's bytes over the lightest's). A single-process run "
        "is balanced by definition."
    )
    return SummaryFragment(module, SummaryCategory.Rank, payload, descriptor)


def _dominant_shared_record_table(shared, module: ModuleId):
    """Records of the shared file moving the most bytes (extremes are per-file)."""
    groups = _per_file_groups(shared)
    if not groups:
        return []
    read_c, write_c = _counter(module, "BYTES_READ"), _counter(module, "BYTES_WRITTEN")

    def volume(item):
        _, records = item
        return (-(_sum(records, read_c) + _sum(records, write_c)), item[0])

    return sorted(groups.items(), key=volume)[0][1]


def summarize_alignment(table: list[CounterRecord]) -> SummaryFragment:
    """File/memory alignment settings and the misaligned-access fractions."""
    table = shared_precedence(table)
    payload = {
        "file_alignment_bytes": _mode_value(table, "POSIX_FILE_ALIGNMENT"),
        "mem_alignment_bytes": _mode_value(table, "POSIX_MEM_ALIGNMENT"),
        "file_not_aligned_count": _sum_or_unavailable(table, "POSIX_FILE_NOT_ALIGNED"),
        "mem_not_aligned_count": _sum_or_unavailable(table, "POSIX_MEM_NOT_ALIGNED"),
    }
    ops = _sum(table, "POSIX_READS") + _sum(table, "POSIX_WRITES")
    if ops > 0:
        if _has(table, "POSIX_FILE_NOT_ALIGNED"):
            payload["file_misaligned_fraction"] = (
                _sum(table, "POSIX_FILE_NOT_ALIGNED") / ops
            )
        if _has(table, "POSIX_MEM_NOT_ALIGNED"):
            payload["mem_misaligned_fraction"] = (
                _sum(table, "POSIX_MEM_NOT_ALIGNED") / ops
            )
    descriptor = (
        "Reports POSIX_FILE_ALIGNMENT / POSIX_MEM_ALIGNMENT (most common value "
        "across files, in bytes) and the counts of accesses not aligned to "
        "them; the misaligned fractions divide those counts by total "
        "read+write operations."
    )
    return SummaryFragment(ModuleId.POSIX, SummaryCategory.Alignment, payload, descriptor)


def _mode_value(table, counter: str):
    values = [r.value for r in table if r.counter_name == counter and r.value > 0]
    if not values:
        return UNAVAILABLE
    counts = Counter(values)
    best = max(counts.items(), key=lambda kv: (kv[1], kv[0]))
    return _fmt(best[0])


def summarize_order(table: list[CounterRecord]) -> SummaryFragment:
    """Sequential/consecutive access fractions and the most common strides."""
    table = shared_precedence(table)
    reads = _sum(table, "POSIX_READS")
    writes = _sum(table, "POSIX_WRITES")
    payload: dict = {}
    for direction, total in (("read", reads), ("write", writes)):
        upper = direction.upper()
        if total > 0:
            seq = _sum(table, f"POSIX_SEQ_{upper}S") / total
            payload[f"sequential_{direction}_fraction"] = seq
            payload[f"consecutive_{direction}_fraction"] = (
                _sum(table, f"POSIX_CONSEC_{upper}S") / total
            )
            if seq < 0.5:
                payload[f"random_{direction}_dominant"] = True
        else:
            payload[f"{direction}s_absent"] = True

    stride_counts: dict[float, float] = {}
    for slot in range(1, STRIDE_SLOTS + 1):
        for r in table:
            if r.counter_name == f"POSIX_STRIDE{slot}_STRIDE" and r.value > 0:
                count = next(
                    (
                        c.value
                        for c in table
                        if c.record_id == r.record_id
                        and c.rank == r.rank
                        and c.counter_name == f"POSIX_STRIDE{slot}_COUNT"
                    ),
                    0.0,
                )
                if count > 0:
                    stride_counts[r.value] = stride_counts.get(r.value, 0.0) + count
    if stride_counts:
        top = sorted(stride_counts.items(), key=lambda kv: (-kv[1], kv[0]))
        payload["top_access_strides"] = [
            {"stride_bytes": _fmt(stride), "count": _fmt(count)}
            for stride, count in top[:STRIDE_SLOTS]
        ]
    descriptor = (
        "Divides POSIX_SEQ_*/POSIX_CONSEC_* by the read/write operation counts "
        "(sequential = increasing offsets, consecutive = immediately adjacent "
        "offsets); a direction is flagged random-dominant when under half its "
        "accesses are sequential. top_access_strides aggregates the "
        "POSIX_STRIDEn_STRIDE/COUNT counters (stride in bytes), most frequent "
        "first."
    )
    return SummaryFragment(ModuleId.POSIX, SummaryCategory.Order, payload, descriptor)


def summarize_lustre(table: list[CounterRecord]) -> list[SummaryFragment]:
    """Mount, stripe-setting, and server-usage fragments for the LUSTRE table."""
    groups = _per_file_groups(table)

    mounts: dict[tuple[str, str], int] = {}
    for records in groups.values():
        key = (records[0].mount_point, records[0].fs_type)
        mounts[key] = mounts.get(key, 0) + 1
    mount_payload = {
        "mounts": [
            {"mount_point": mp, "fs_type": fs, "file_count": count}
            for (mp, fs), count in sorted(mounts.items())
        ]
    }
    mount_fragment = SummaryFragment(
        ModuleId.LUSTRE,
        SummaryCategory.Mount,
        mount_payload,
        "Lists the distinct (mount point, file system type) pairs seen across "
        "LUSTRE file records with the number of files on each.",
    )

    sizes, widths, per_file = [], [], []
    for records in groups.values():
        size = next(
            (r.value for r in records if r.counter_name == "LUSTRE_STRIPE_SIZE"), None
        )
        width = next(
            (r.value for r in records if r.counter_name == "LUSTRE_STRIPE_WIDTH"), None
        )
        if size is not None:
            sizes.append(size)
        if width is not None:
            widths.append(width)
        per_file.append(
            {
                "file_path": records[0].file_path,
                "stripe_size": _fmt(size) if size is not None else UNAVAILABLE,
                "stripe_width": _fmt(width) if width is not None else UNAVAILABLE,
            }
        )
    per_file.sort(key=lambda f: f["file_path"])
    stripe_payload: dict = {"files": per_file[:TOP_FILES_LIMIT]}
    for name, values in (("stripe_size", sizes), ("stripe_width", widths)):
        if values:
            stripe_payload[f"min_{name}"] = _fmt(min(values))
            stripe_payload[f"max_{name}"] = _fmt(max(values))
            counts = Counter(values)
            stripe_payload[f"mode_{name}"] = _fmt(
                max(counts.items(), key=lambda kv: (kv[1], kv[0]))[0]
            )
        else:
            stripe_payload[f"mode_{name}"] = UNAVAILABLE
    stripe_fragment = SummaryFragment(
        ModuleId.LUSTRE,
        SummaryCategory.StripeSetting,
        stripe_payload,
        "Reports per-file LUSTRE_STRIPE_SIZE (bytes) and LUSTRE_STRIPE_WIDTH "
        "(number of storage targets a file is striped over) with min/max/mode "
        f"across files; at most {TOP_FILES_LIMIT} files listed.",
    )

    ost_files: dict[int, int] = {}
    for records in groups.values():
        osts = {
            int(r.value)
            for r in records
            if r.counter_name.startswith("LUSTRE_OST_ID_") and r.value >= 0
        }
        for ost in osts:
            ost_files[ost] = ost_files.get(ost, 0) + 1
    server_payload = {
        "distinct_ost_count": len(ost_files),
        "files_per_ost": {str(ost): ost_files[ost] for ost in sorted(ost_files)},
    }
    server_fragment = SummaryFragment(
        ModuleId.LUSTRE,
        SummaryCategory.ServerUsage,
        server_payload,
        "Collects the LUSTRE_OST_ID_* counters: how many distinct object "
        "storage targets the job touched and how many files sit on each.",
    )
    return [mount_fragment, stripe_fragment, server_fragment]


def summarize_counts_files_metadata(
    table: list[CounterRecord], module: ModuleId, header: TraceHeader
) -> list[SummaryFragment]:
    """The IoRequestCount, File, and (where covered) Metadata fragments."""
    fragments = [
        summarize_request_counts(table, module),
        summarize_files(table, module),
    ]
    if SummaryCategory.Metadata in CATEGORY_COVERAGE[module]:
        fragments.append(summarize_metadata(table, module, header))
    return fragments


def extract_fragments(profile: TraceProfile) -> list[SummaryFragment]:
    """All valid fragments for the modules present, in deterministic order.

    Module order POSIX, MPIIO, STDIO, LUSTRE; category order as declared in
    SummaryCategory. Absent modules contribute nothing.
    """
    by_key: dict[tuple[ModuleId, SummaryCategory], SummaryFragment] = {}
    for module in profile.known_modules_present():
        table = profile.table(module)
        if module is ModuleId.LUSTRE:
            produced = summarize_lustre(table)
        else:
            produced = [summarize_io_size(table, module)]
            produced += summarize_counts_files_metadata(table, module, profile.header)
            if SummaryCategory.Rank in CATEGORY_COVERAGE[module]:
                produced.append(
                    summarize_rank_balance(table, profile.header, module)
                )
            if module is ModuleId.POSIX:
                produced.append(summarize_alignment(table))
                produced.append(summarize_order(table))
        for fragment in produced:
            by_key[(fragment.module, fragment.category)] = fragment

    ordered = []
    for module in ModuleId:
        for category in CATEGORY_COVERAGE[module]:
            fragment = by_key.get((module, category))
            if fragment is not None:
                ordered.append(fragment)
    return ordered


def compute_app_context(profile: TraceProfile) -> ApplicationContext:
    """Runtime, process count, and per-module share of bytes moved."""
    volumes: dict[ModuleId, float] = {}
    for module in profile.known_modules_present():
        table = shared_precedence(profile.table(module))
        volumes[module] = _sum(table, _counter(module, "BYTES_READ")) + _sum(
            table, _counter(module, "BYTES_WRITTEN")
        )
    total = sum(volumes.values())
    proportions = {
        module: (volume / total if total > 0 else 0.0)
        for module, volume in volumes.items()
    }
    return ApplicationContext(
        runtime_seconds=profile.header.runtime_seconds,
        nprocs=profile.header.nprocs,
        io_proportions=proportions,
    )


def dump_fragments(
    fragments: list[SummaryFragment], out_dir: Path | str, stem: str = "trace"
) -> list[Path]:
    """Write each fragment to ``<stem>.<module>.<category>.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for fragment in fragments:
        path = out_dir / f"{stem}.{fragment.module.value}.{fragment.category.value}.json"
        path.write_text(fragment.to_json() + "\n")
        paths.append(path)
    return paths

"""Parse darshan-parser text output into typed per-module counter tables.

Input is the complete text dump produced by ``darshan-parser <log>``:
``#``-prefixed header lines followed by one record line per
(module, rank, record, counter) in eight tab-separated columns:

    <module> <rank> <record id> <counter> <value> <file name> <mount pt> <fs type>

Counter values are stored as floats; integer-valued counters round-trip
exactly up to 2**53. Records from modules other than POSIX/MPIIO/STDIO/LUSTRE
are preserved under their own names but carry no summary categories.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

logger = logging.getLogger(__name__)

_MAX_EXACT_INT = 2**53


class ModuleId(str, Enum):
    """The four darshan modules that feed summary extraction."""

    POSIX = "POSIX"
    MPIIO = "MPIIO"
    STDIO = "STDIO"
    LUSTRE = "LUSTRE"

    def __str__(self) -> str:
        return self.value


# darshan-parser prints the MPI-IO module under a hyphenated name; counters
# use the MPIIO_ prefix, so the hyphenated form is normalized away.
_MODULE_NAME_NORMALIZATION = {"MPI-IO": "MPIIO"}

KNOWN_MODULES = tuple(m.value for m in ModuleId)


class TraceParseError(Exception):
    """Base class for trace parsing failures."""


class MalformedLine(TraceParseError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class MissingHeaderField(TraceParseError):
    def __init__(self, field_name: str):
        super().__init__(f"required header field not found: {field_name}")
        self.field_name = field_name


class IoFailure(Exception):
    """Raised when emitting per-module CSV files fails."""


@dataclass(frozen=True)
class TraceHeader:
    exe: str
    jobid: str
    nprocs: int
    runtime_seconds: float
    start_time: int
    end_time: int
    darshan_version: str

    def __post_init__(self):
        if self.nprocs < 1:
            raise ValueError(f"nprocs must be >= 1, got {self.nprocs}")
        if self.runtime_seconds < 0:
            raise ValueError("runtime_seconds must be >= 0")
        if self.end_time < self.start_time:
            raise ValueError("end_time must be >= start_time")


@dataclass(frozen=True)
class CounterRecord:
    module: str
    rank: int
    record_id: str
    counter_name: str
    value: float
    file_path: str
    mount_point: str
    fs_type: str

    def __post_init__(self):
        if not self.counter_name:
            raise ValueError("counter_name must be non-empty")
        if self.rank < -1:
            raise ValueError(f"rank must be >= -1, got {self.rank}")


@dataclass
class TraceProfile:
    """A parsed trace: header metadata plus per-module counter tables.

    ``tables`` is keyed by canonical module name; the four known modules use
    the ModuleId values, anything else keeps its opaque name. Immutable by
    convention after parsing; safe to share across threads read-only.
    """

    header: TraceHeader
    tables: dict[str, list[CounterRecord]] = field(default_factory=dict)
    files: dict[str, str] = field(default_factory=dict)

    @property
    def record_count(self) -> int:
        return sum(len(t) for t in self.tables.values())

    def table(self, module: ModuleId | str) -> list[CounterRecord]:
        key = module.value if isinstance(module, ModuleId) else module
        return self.tables.get(key, [])

    def known_modules_present(self) -> list[ModuleId]:
        """Known modules with at least one record, in canonical order."""
        return [m for m in ModuleId if self.tables.get(m.value)]

    def validate(self) -> None:
        for key, records in self.tables.items():
            for record in records:
                if record.module != key:
                    raise ValueError(
                        f"record module {record.module!r} filed under {key!r}"
                    )
                if record.record_id not in self.files:
                    raise ValueError(f"record id {record.record_id} missing from files")


def _parse_header_line(line: str, fields: dict) -> None:
    body = line[1:].strip()
    if ":" not in body:
        return
    key, _, value = body.partition(":")
    key = key.strip()
    value = value.strip()
    try:
        if key == "exe":
            fields["exe"] = value
        elif key == "jobid":
            fields["jobid"] = value
        elif key == "nprocs":
            fields["nprocs"] = int(value)
        elif key == "run time":
            fields["runtime_seconds"] = float(value)
        elif key == "start_time":
            fields["start_time"] = int(value)
        elif key == "end_time":
            fields["end_time"] = int(value)
        elif key == "darshan log version":
            fields["darshan_version"] = value
    except ValueError:
        logger.warning("unparseable header value for %r: %r", key, value)


def parse_trace(text: str) -> TraceProfile:
    """Parse complete darshan-parser output into a TraceProfile.

    Raises MalformedLine for record lines with fewer than 8 columns and
    MissingHeaderField when nprocs or the run time cannot be found.
    """
    header_fields: dict = {}
    tables: dict[str, list[CounterRecord]] = {}
    files: dict[str, str] = {}
    extra_column_lines = 0

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        if line.startswith("#"):
            _parse_header_line(line, header_fields)
            continue

        columns = line.split("\t")
        if len(columns) == 1:
            columns = line.split()
        if len(columns) < 8:
            raise MalformedLine(line_no, f"expected 8 columns, got {len(columns)}")
        if len(columns) > 8:
            extra_column_lines += 1
            columns = columns[:8]

        module = _MODULE_NAME_NORMALIZATION.get(columns[0], columns[0])
        try:
            rank = int(columns[1])
            value = float(columns[4])
        except ValueError as exc:
            raise MalformedLine(line_no, str(exc)) from exc
        try:
            record = CounterRecord(
                module=module,
                rank=rank,
                record_id=columns[2],
                counter_name=columns[3],
                value=value,
                file_path=columns[5],
                mount_point=columns[6],
                fs_type=columns[7],
            )
        except ValueError as exc:
            raise MalformedLine(line_no, str(exc)) from exc
        tables.setdefault(module, []).append(record)
        files.setdefault(record.record_id, record.file_path)

    if extra_column_lines:
        logger.warning(
            "ignored extra columns on %d record line(s)", extra_column_lines
        )
    if "nprocs" not in header_fields:
        raise MissingHeaderField("nprocs")
    if "runtime_seconds" not in header_fields:
        raise MissingHeaderField("run time")

    header = TraceHeader(
        exe=header_fields.get("exe", ""),
        jobid=header_fields.get("jobid", ""),
        nprocs=header_fields["nprocs"],
        runtime_seconds=header_fields["runtime_seconds"],
        start_time=header_fields.get("start_time", 0),
        end_time=header_fields.get("end_time", header_fields.get("start_time", 0)),
        darshan_version=header_fields.get("darshan_version", ""),
    )
    return TraceProfile(header=header, tables=tables, files=files)


def format_value(value: float) -> str:
    """Canonical text form: integers without a decimal point, floats via repr."""
    if value.is_integer() and abs(value) < _MAX_EXACT_INT:
        return str(int(value))
    return repr(value)


CSV_COLUMNS = (
    "module",
    "rank",
    "record_id",
    "counter_name",
    "value",
    "file_path",
    "mount_point",
    "fs_type",
)


def split_modules(
    profile: TraceProfile, out_dir: Path | str, stem: str = "trace"
) -> dict[str, Path]:
    """Write one CSV per module present in the profile.

    Files are named ``<stem>.<module>.csv``; row order preserves input order.
    Returns a map from module name to the written path.
    """
    out_dir = Path(out_dir)
    written: dict[str, Path] = {}
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for module, records in profile.tables.items():
            safe = module.replace("/", "_")
            path = out_dir / f"{stem}.{safe}.csv"
            with path.open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(CSV_COLUMNS)
                for r in records:
                    writer.writerow(
                        (
                            r.module,
                            r.rank,
                            r.record_id,
                            r.counter_name,
                            format_value(r.value),
                            r.file_path,
                            r.mount_point,
                            r.fs_type,
                        )
                    )
            written[module] = path
    except OSError as exc:
        raise IoFailure(f"failed writing module CSV: {exc}") from exc
    return written


def read_module_csv(path: Path | str) -> list[CounterRecord]:
    """Read back a CSV produced by split_modules."""
    records = []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            records.append(
                CounterRecord(
                    module=row["module"],
                    rank=int(row["rank"]),
                    record_id=row["record_id"],
                    counter_name=row["counter_name"],
                    value=float(row["value"]),
                    file_path=row["file_path"],
                    mount_point=row["mount_point"],
                    fs_type=row["fs_type"],
                )
            )
    return records


def aggregate_counter(table: list[CounterRecord], counter_name: str) -> float:
    """Sum of ``value`` over records matching counter_name; 0.0 when absent."""
    return sum(r.value for r in table if r.counter_name == counter_name)


def shared_precedence(table: list[CounterRecord]) -> list[CounterRecord]:
    """Drop per-rank records for files that also have a shared (rank -1) record.

    Darshan reports a file either per-rank or as one aggregated shared record;
    if both appear, counting both would double the totals.
    """
    shared_ids = {r.record_id for r in table if r.rank == -1}
    return [r for r in table if r.rank == -1 or r.record_id not in shared_ids]

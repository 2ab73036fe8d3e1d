"""Shared fixtures: the sample trace, synthetic tables, scripted providers."""

import re
from pathlib import Path

import pytest

from iodiag.gateway import MockGateway, MockRule, MockScript
from iodiag.trace import CounterRecord, TraceHeader, TraceProfile, parse_trace

DATA_DIR = Path(__file__).parent / "data"
SAMPLE_TRACE = DATA_DIR / "sample_trace.darshan.txt"
CORPUS_DIR = DATA_DIR / "corpus"


@pytest.fixture(scope="session")
def sample_trace_text() -> str:
    return SAMPLE_TRACE.read_text()


@pytest.fixture(scope="session")
def sample_profile(sample_trace_text):
    return parse_trace(sample_trace_text)


def record(
    module,
    counter,
    value,
    rank=-1,
    rid="1000",
    path="/scratch/file_a",
    mount="/scratch",
    fs="lustre",
):
    return CounterRecord(
        module=module,
        rank=rank,
        record_id=rid,
        counter_name=counter,
        value=float(value),
        file_path=path,
        mount_point=mount,
        fs_type=fs,
    )


def make_header(nprocs=8, runtime=722.0):
    return TraceHeader(
        exe="app.x",
        jobid="1",
        nprocs=nprocs,
        runtime_seconds=runtime,
        start_time=100,
        end_time=100 + int(runtime),
        darshan_version="3.41",
    )


def make_profile(tables: dict, nprocs=8, runtime=722.0) -> TraceProfile:
    files = {}
    for records in tables.values():
        for r in records:
            files.setdefault(r.record_id, r.file_path)
    return TraceProfile(header=make_header(nprocs, runtime), tables=tables, files=files)


_REF_KEY = re.compile(r"\[([\w.-]+#\d+)\]")


def union_merge_response(request_text: str) -> str:
    """Scripted merge behavior: keep both texts' sentinel sentences and
    every reference key mentioned in the prompt."""
    keys = []
    for key in _REF_KEY.findall(request_text):
        if key not in keys:
            keys.append(key)
    sentinels = re.findall(r"[^\n]*SENTINEL[^\n]*", request_text)
    body = "merged diagnosis"
    if sentinels:
        body += "\n" + "\n".join(dict.fromkeys(sentinels))
    refs = "; ".join(keys) if keys else "none"
    return f"{body}\n[REFS] {refs}"


@pytest.fixture
def union_mock():
    """Gateway whose merge calls preserve the union of references and any
    SENTINEL-marked sentences; other calls get simple canned responses."""
    script = MockScript(
        rules=[
            MockRule(
                pattern="Merge the two I/O diagnoses", response=union_merge_response
            ),
            MockRule(
                pattern="Rewrite the I/O trace summary",
                response="description of the fragment",
            ),
            MockRule(pattern="Answer with exactly one word", response="relevant"),
            MockRule(
                pattern="Diagnose any potential I/O performance issues",
                response="fragment diagnosis\n[TAGS] none\n[REFS] none",
            ),
        ],
        default="OK",
    )
    return MockGateway(script)

"""Parser, CSV split, and aggregation tests against the sample trace."""

import pytest

from iodiag.trace import (
    CounterRecord,
    MalformedLine,
    MissingHeaderField,
    ModuleId,
    aggregate_counter,
    format_value,
    parse_trace,
    read_module_csv,
    shared_precedence,
    split_modules,
)

from conftest import record

MINIMAL_HEADER = "# nprocs: 8\n# run time: 722.0000\n"


def make_line(
    module="POSIX",
    rank="-1",
    rid="42",
    counter="POSIX_OPENS",
    value="1",
    path="/scratch/f",
    mount="/scratch",
    fs="lustre",
):
    return "\t".join([module, rank, rid, counter, value, path, mount, fs])


class TestHeaderParsing:
    def test_nprocs_and_runtime(self, sample_profile):
        assert sample_profile.header.nprocs == 8
        assert sample_profile.header.runtime_seconds == 722.0

    def test_identity_fields(self, sample_profile):
        h = sample_profile.header
        assert h.jobid == "7412966"
        assert h.exe.endswith("inputs_3d")
        assert h.darshan_version == "3.41"
        assert h.start_time == 1706801520
        assert h.end_time == 1706802242

    def test_missing_nprocs(self):
        with pytest.raises(MissingHeaderField) as err:
            parse_trace("# run time: 10\n" + make_line())
        assert err.value.field_name == "nprocs"

    def test_missing_runtime(self):
        with pytest.raises(MissingHeaderField):
            parse_trace("# nprocs: 4\n" + make_line())

    def test_header_only_trace(self):
        profile = parse_trace(MINIMAL_HEADER)
        assert profile.tables == {}
        assert profile.record_count == 0


class TestRecordParsing:
    def test_too_few_columns(self):
        bad = "POSIX\t-1\t42\tPOSIX_OPENS\t1\t/scratch/f\t/scratch"
        with pytest.raises(MalformedLine) as err:
            parse_trace(MINIMAL_HEADER + bad + "\n")
        assert err.value.line_no == 3

    def test_extra_columns_ignored(self, caplog):
        line = make_line() + "\textra\tmore"
        with caplog.at_level("WARNING"):
            profile = parse_trace(MINIMAL_HEADER + line + "\n")
        assert profile.record_count == 1
        assert "extra columns" in caplog.text

    def test_bad_rank(self):
        with pytest.raises(MalformedLine):
            parse_trace(MINIMAL_HEADER + make_line(rank="abc") + "\n")

    def test_rank_below_minus_one(self):
        with pytest.raises(MalformedLine):
            parse_trace(MINIMAL_HEADER + make_line(rank="-2") + "\n")

    def test_whitespace_separated_fallback(self):
        line = "POSIX -1 42 POSIX_OPENS 1 /scratch/f /scratch lustre"
        profile = parse_trace(MINIMAL_HEADER + line + "\n")
        assert profile.record_count == 1

    def test_mpiio_module_name_normalized(self, sample_profile):
        assert "MPI-IO" not in sample_profile.tables
        assert len(sample_profile.table(ModuleId.MPIIO)) == 42

    def test_unknown_module_preserved(self, sample_profile):
        assert len(sample_profile.tables["HEATMAP"]) == 4
        assert "HEATMAP" not in [m.value for m in ModuleId]

    def test_files_map_covers_all_records(self, sample_profile):
        sample_profile.validate()
        assert sample_profile.files["15896918368349797673"] == "/scratch/inputs_3d"


# Twenty records transcribed by hand from tests/data/sample_trace.darshan.txt,
# spanning every module, shared and per-rank rows, int and float values.
TRANSCRIBED = [
    ("POSIX", -1, "9457796068806373448", "POSIX_OPENS", 8.0, "/scratch/plt00000/Header"),
    ("POSIX", -1, "9457796068806373448", "POSIX_BYTES_WRITTEN", 4096.0, "/scratch/plt00000/Header"),
    ("POSIX", -1, "12668297848628394852", "POSIX_WRITES", 24576.0, "/scratch/plt00000/Cell_D_00000"),
    ("POSIX", -1, "12668297848628394852", "POSIX_SIZE_WRITE_100K_1M", 24576.0, "/scratch/plt00000/Cell_D_00000"),
    ("POSIX", -1, "12668297848628394852", "POSIX_F_VARIANCE_RANK_TIME", 84.3, "/scratch/plt00000/Cell_D_00000"),
    ("POSIX", -1, "7712783229432171633", "POSIX_BYTES_WRITTEN", 6442450944.0, "/scratch/plt00000/Cell_D_00001"),
    ("POSIX", -1, "7712783229432171633", "POSIX_STRIDE1_STRIDE", 262144.0, "/scratch/plt00000/Cell_D_00001"),
    ("POSIX", 0, "4084016852329535633", "POSIX_BYTES_WRITTEN", 536870912.0, "/scratch/chk00050/Cell_D_00000"),
    ("POSIX", 7, "4084016852329535633", "POSIX_BYTES_WRITTEN", 544210944.0, "/scratch/chk00050/Cell_D_00000"),
    ("POSIX", 0, "15896918368349797673", "POSIX_READS", 96.0, "/scratch/inputs_3d"),
    ("POSIX", 0, "11233779274482187569", "POSIX_SIZE_WRITE_0_100", 1200.0, "/scratch/diag00000"),
    ("MPIIO", -1, "16592106915301738621", "MPIIO_INDEP_WRITES", 8192.0, "/scratch/plt00000/MultiFab_D_00000"),
    ("MPIIO", -1, "16592106915301738621", "MPIIO_COLL_WRITES", 0.0, "/scratch/plt00000/MultiFab_D_00000"),
    ("MPIIO", -1, "16592106915301738621", "MPIIO_BYTES_WRITTEN", 4294967296.0, "/scratch/plt00000/MultiFab_D_00000"),
    ("STDIO", 0, "6301063301872746974", "STDIO_WRITES", 88.0, "<STDOUT>"),
    ("STDIO", 0, "13919476349827316494", "STDIO_BYTES_WRITTEN", 51200.0, "/scratch/run.log"),
    ("LUSTRE", -1, "9457796068806373448", "LUSTRE_STRIPE_WIDTH", 1.0, "/scratch/plt00000/Header"),
    ("LUSTRE", -1, "16592106915301738621", "LUSTRE_OST_ID_0", 12.0, "/scratch/plt00000/MultiFab_D_00000"),
    ("LUSTRE", -1, "4084016852329535633", "LUSTRE_STRIPE_SIZE", 1048576.0, "/scratch/chk00050/Cell_D_00000"),
    ("HEATMAP", -1, "17855860376439794775", "HEATMAP_F_BIN_WIDTH_SECONDS", 10.0, "heatmap:POSIX"),
]


class TestTranscribedRecords:
    @pytest.mark.parametrize("expected", TRANSCRIBED, ids=lambda e: f"{e[0]}-{e[3]}-{e[1]}")
    def test_record_matches(self, sample_profile, expected):
        module, rank, rid, counter, value, path = expected
        matches = [
            r
            for r in sample_profile.table(module)
            if r.rank == rank and r.record_id == rid and r.counter_name == counter
        ]
        assert len(matches) == 1
        r = matches[0]
        assert r.value == value
        assert r.file_path == path


class TestSplitModules:
    def test_one_csv_per_module(self, sample_profile, tmp_path):
        written = split_modules(sample_profile, tmp_path, stem="sample")
        assert set(written) == {"POSIX", "MPIIO", "STDIO", "LUSTRE", "HEATMAP"}
        assert written["POSIX"].name == "sample.POSIX.csv"

    def test_partition_preserves_cardinality(self, sample_profile, tmp_path):
        written = split_modules(sample_profile, tmp_path)
        total = 0
        for module, path in written.items():
            rows = read_module_csv(path)
            assert len(rows) == len(sample_profile.tables[module])
            total += len(rows)
        assert total == sample_profile.record_count

    def test_round_trip_reproduces_records(self, sample_profile, tmp_path):
        written = split_modules(sample_profile, tmp_path)
        for module, path in written.items():
            assert read_module_csv(path) == sample_profile.tables[module]

    def test_module_subset(self, tmp_path):
        profile = parse_trace(
            MINIMAL_HEADER
            + make_line(module="POSIX")
            + "\n"
            + make_line(module="LUSTRE", counter="LUSTRE_STRIPE_WIDTH")
            + "\n"
        )
        written = split_modules(profile, tmp_path)
        assert set(written) == {"POSIX", "LUSTRE"}

    def test_paths_with_commas_quoted(self, tmp_path):
        profile = parse_trace(
            MINIMAL_HEADER + make_line(path="/scratch/odd,name") + "\n"
        )
        written = split_modules(profile, tmp_path)
        rows = read_module_csv(written["POSIX"])
        assert rows[0].file_path == "/scratch/odd,name"


class TestValueFormatting:
    @pytest.mark.parametrize(
        "value,expected",
        [
            (10.0, "10"),
            (0.0, "0"),
            (-3.0, "-3"),
            (2.0**53, repr(2.0**53)),
            (84.3, "84.3"),
            (6442450944.0, "6442450944"),
        ],
    )
    def test_canonical_form(self, value, expected):
        assert format_value(value) == expected

    def test_round_trip_exact(self):
        for value in (10.0, 84.3, 2.0**52 + 1, 1e-9, 722.0001):
            assert float(format_value(value)) == value


class TestAggregateCounter:
    def test_sum(self):
        table = [
            record("POSIX", "POSIX_READS", 10, rid="1"),
            record("POSIX", "POSIX_READS", 32, rid="2"),
        ]
        assert aggregate_counter(table, "POSIX_READS") == 42

    def test_absent_counter(self):
        assert aggregate_counter([], "POSIX_READS") == 0.0

    def test_fixture_hand_sum(self, sample_profile):
        # 3 shared plot files: 16 + 24576 + 24576; per-rank: 512 * 8 + 1200.
        assert (
            aggregate_counter(sample_profile.table(ModuleId.POSIX), "POSIX_WRITES")
            == 16 + 24576 + 24576 + 512 * 8 + 1200
        )


class TestSharedPrecedence:
    def test_shared_wins_over_per_rank(self):
        table = [
            record("POSIX", "POSIX_WRITES", 100, rank=-1, rid="1"),
            record("POSIX", "POSIX_WRITES", 60, rank=0, rid="1"),
            record("POSIX", "POSIX_WRITES", 40, rank=1, rid="1"),
            record("POSIX", "POSIX_WRITES", 7, rank=0, rid="2"),
        ]
        kept = shared_precedence(table)
        assert aggregate_counter(kept, "POSIX_WRITES") == 107


class TestInvariantProperties:
    def test_partition_property_random_traces(self):
        import random

        rng = random.Random(7)
        modules = ["POSIX", "MPI-IO", "STDIO", "LUSTRE", "APXC", "H5F"]
        for _ in range(20):
            n = rng.randint(1, 120)
            lines = [MINIMAL_HEADER.rstrip("\n")]
            for i in range(n):
                lines.append(
                    make_line(
                        module=rng.choice(modules),
                        rank=str(rng.choice([-1, 0, 1, 2])),
                        rid=str(rng.randint(1, 9)),
                        counter=f"C_{rng.randint(0, 5)}",
                        value=str(rng.randint(0, 10**6)),
                    )
                )
            profile = parse_trace("\n".join(lines) + "\n")
            assert profile.record_count == n

    def test_no_silent_drops_every_line_in_exactly_one_table(self, sample_trace_text, sample_profile):
        record_lines = [
            line
            for line in sample_trace_text.splitlines()
            if line.strip() and not line.startswith("#")
        ]
        assert sample_profile.record_count == len(record_lines)
        assert len(record_lines) >= 200
        assert len(sample_profile.tables) >= 4

from __future__ import annotations


import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from speechqa.manifest import (
    ManifestError,
    read_manifest,
    read_predictions,
    read_triplet_manifest,
    sniff_manifest_kind,
    split_dataset,
    write_manifest,
)
from speechqa.records import FilterStatus, LabelSource, Provenance, UtteranceRecord

from conftest import make_triplet, make_utterance


class TestReadManifest:
    def test_plain_nemo_row_maps_to_real_label(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text('{"audio_filepath":"a.wav","duration":2.5,"text":"hello"}\n')
        records = read_manifest(path)
        assert records == [UtteranceRecord("a.wav", 2.5, "hello", LabelSource.REAL)]

    def test_empty_file_gives_empty_list(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text("")
        assert read_manifest(path) == []

    def test_negative_duration_reports_line_number(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(
            '{"audio_filepath":"a.wav","duration":1.0,"text":"x"}\n'
            '{"audio_filepath":"b.wav","duration":-1.0,"text":"y"}\n'
        )
        with pytest.raises(ManifestError) as exc_info:
            read_manifest(path)
        assert exc_info.value.line == 2
        assert "duration" in str(exc_info.value)

    def test_invalid_json_reports_line_number(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text('{"audio_filepath":"a.wav","duration":1.0,"text":"x"}\n{oops\n')
        with pytest.raises(ManifestError) as exc_info:
            read_manifest(path)
        assert exc_info.value.line == 2

    def test_missing_required_field(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text('{"duration":1.0,"text":"x"}\n')
        with pytest.raises(ManifestError, match="audio_filepath"):
            read_manifest(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ManifestError, match="cannot open"):
            read_manifest(tmp_path / "nope.jsonl")

    def test_empty_text_infers_unlabeled(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text('{"audio_filepath":"a.wav","duration":1.0,"text":""}\n')
        assert read_manifest(path)[0].label_source is LabelSource.NONE

    def test_unknown_fields_preserved(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(
            '{"audio_filepath":"a.wav","duration":1.0,"text":"x","speaker":"spk1","snr":12.5}\n'
        )
        rec = read_manifest(path)[0]
        assert rec.extra == {"speaker": "spk1", "snr": 12.5}
        out = tmp_path / "out.jsonl"
        write_manifest([rec], out)
        assert read_manifest(out) == [rec]


class TestRoundTrip:
    def test_three_records(self, tmp_path):
        records = [make_utterance(i, text=f"utterance number {i}") for i in range(3)]
        path = tmp_path / "m.jsonl"
        write_manifest(records, path)
        assert read_manifest(path) == records

    def test_empty_list_writes_zero_byte_file(self, tmp_path):
        path = tmp_path / "m.jsonl"
        write_manifest([], path)
        assert path.stat().st_size == 0

    def test_newline_in_text_stays_one_record_per_line(self, tmp_path):
        rec = UtteranceRecord("a.wav", 1.0, "line one\nline two", LabelSource.REAL)
        path = tmp_path / "m.jsonl"
        write_manifest([rec], path)
        raw = path.read_text(encoding="utf-8")
        assert raw.count("\n") == 1  # one record, one line
        assert read_manifest(path) == [rec]

    def test_triplet_round_trip(self, tmp_path):
        triplets = [
            make_triplet(0),
            make_triplet(1, provenance=Provenance.PSEUDO_LABEL, status=FilterStatus.ACCEPTED),
            make_triplet(2, context_audio="x.wav", context_duration=7.25),
        ]
        path = tmp_path / "t.jsonl"
        write_manifest(triplets, path)
        assert read_triplet_manifest(path) == triplets

    def test_duration_keeps_full_precision(self, tmp_path):
        rec = make_utterance(0, duration=3.0000000001)
        path = tmp_path / "m.jsonl"
        write_manifest([rec], path)
        assert read_manifest(path)[0].duration == 3.0000000001

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(
            st.tuples(
                st.text(
                    st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=30
                ),
                st.floats(min_value=0, max_value=1e6, allow_nan=False),
                st.text(st.characters(blacklist_categories=("Cs",)), max_size=50),
            ),
            max_size=10,
        )
    )
    def test_round_trip_identity_property(self, tmp_path_factory, rows):
        records = [
            UtteranceRecord(
                audio_filepath=path,
                duration=duration,
                text=text,
                label_source=LabelSource.REAL if text else LabelSource.NONE,
            )
            for path, duration, text in rows
        ]
        path = tmp_path_factory.mktemp("rt") / "m.jsonl"
        write_manifest(records, path)
        assert read_manifest(path) == records


class TestSniff:
    def test_kinds(self, tmp_path):
        upath = tmp_path / "u.jsonl"
        write_manifest([make_utterance(0)], upath)
        tpath = tmp_path / "t.jsonl"
        write_manifest([make_triplet(0)], tpath)
        epath = tmp_path / "e.jsonl"
        epath.write_text("")
        assert sniff_manifest_kind(upath) == "utterance"
        assert sniff_manifest_kind(tpath) == "triplet"
        assert sniff_manifest_kind(epath) == "empty"


class TestPredictions:
    def test_read(self, tmp_path):
        path = tmp_path / "p.jsonl"
        path.write_text('{"id":"a","text":"one"}\n{"id":"b","text":"two"}\n')
        assert read_predictions(path) == [("a", "one"), ("b", "two")]

    def test_missing_key(self, tmp_path):
        path = tmp_path / "p.jsonl"
        path.write_text('{"id":"a"}\n')
        with pytest.raises(ManifestError, match="text"):
            read_predictions(path)


class TestSplitDataset:
    def test_paper_scale_sizes(self):
        records = list(range(111_000))
        train, dev, test = split_dataset(records, seed=13, dev_size=1000, test_size=1000)
        assert (len(train), len(dev), len(test)) == (109_000, 1000, 1000)

    def test_zero_sizes_keep_everything_in_train(self):
        records = list(range(10))
        train, dev, test = split_dataset(records, seed=1, dev_size=0, test_size=0)
        assert len(train) == 10 and dev == [] and test == []

    def test_deterministic_for_fixed_seed(self):
        records = [make_utterance(i) for i in range(200)]
        first = split_dataset(records, seed=42, dev_size=20, test_size=30)
        second = split_dataset(records, seed=42, dev_size=20, test_size=30)
        assert first == second
        different = split_dataset(records, seed=43, dev_size=20, test_size=30)
        assert first != different

    def test_sizes_exceeding_corpus_rejected(self):
        with pytest.raises(ValueError, match="exceeds"):
            split_dataset(list(range(5)), seed=1, dev_size=3, test_size=3)

    @settings(max_examples=100, deadline=None)
    @given(
        n=st.integers(min_value=0, max_value=300),
        seed=st.integers(min_value=0, max_value=2**64 - 1),
        data=st.data(),
    )
    def test_partition_is_disjoint_and_exhaustive(self, n, seed, data):
        dev_size = data.draw(st.integers(min_value=0, max_value=n))
        test_size = data.draw(st.integers(min_value=0, max_value=n - dev_size))
        records = list(range(n))
        train, dev, test = split_dataset(records, seed, dev_size, test_size)
        assert len(train) + len(dev) + len(test) == n
        assert sorted(train + dev + test) == records  # union equals input multiset

from __future__ import annotations

import pytest

from speechqa.records import (
    FilterStatus,
    LabelSource,
    PipelineConfig,
    Provenance,
    SamplingParams,
    UtteranceRecord,
    ValidationError,
    make_triplet_id,
)

from conftest import make_triplet


class TestUtteranceRecord:
    def test_valid_record(self):
        rec = UtteranceRecord("a.wav", 2.5, "hello", LabelSource.REAL)
        assert rec.duration == 2.5
        assert rec.label_source is LabelSource.REAL

    def test_negative_duration_rejected(self):
        with pytest.raises(ValidationError, match="duration"):
            UtteranceRecord("a.wav", -1.0, "hello")

    def test_empty_path_rejected(self):
        with pytest.raises(ValidationError, match="audio_filepath"):
            UtteranceRecord("", 1.0, "hello")

    def test_unlabeled_requires_empty_text(self):
        with pytest.raises(ValidationError, match="empty text"):
            UtteranceRecord("a.wav", 1.0, "hello", LabelSource.NONE)
        rec = UtteranceRecord("a.wav", 1.0, "", LabelSource.NONE)
        assert rec.text == ""

    def test_with_transcript(self):
        rec = UtteranceRecord("a.wav", 1.0, "", LabelSource.NONE)
        labeled = rec.with_transcript("found words", LabelSource.PSEUDO)
        assert labeled.text == "found words"
        assert labeled.label_source is LabelSource.PSEUDO
        assert rec.text == ""  # original untouched


class TestQATriplet:
    @pytest.mark.parametrize("kwargs,field", [
        ({"question": ""}, "question"),
        ({"context": ""}, "context_text"),
        ({"answer": ""}, "answer"),
    ])
    def test_empty_fields_rejected(self, kwargs, field):
        with pytest.raises(ValidationError, match=field):
            make_triplet(**kwargs)

    def test_status_transition_once_only(self):
        t = make_triplet()
        accepted = t.with_status(FilterStatus.ACCEPTED)
        assert accepted.filter_status is FilterStatus.ACCEPTED
        with pytest.raises(ValidationError):
            accepted.with_status(FilterStatus.REJECTED)
        with pytest.raises(ValidationError):
            t.with_status(FilterStatus.UNFILTERED)

    def test_with_audio(self):
        t = make_triplet().with_audio("out/x.wav", 4.5)
        assert t.context_audio == "out/x.wav"
        assert t.context_duration == 4.5


class TestSamplingParams:
    def test_defaults_match_decoding_settings(self):
        params = SamplingParams()
        assert params.temperature == 1.0
        assert params.top_p == 0.95
        assert params.max_tokens == 2048

    @pytest.mark.parametrize("kwargs", [
        {"temperature": -0.1},
        {"top_p": 0.0},
        {"top_p": 1.5},
        {"max_tokens": 0},
    ])
    def test_invalid_params(self, kwargs):
        with pytest.raises(ValidationError):
            SamplingParams(**kwargs)


class TestPipelineConfig:
    def test_defaults(self):
        cfg = PipelineConfig()
        assert cfg.qa_pairs_per_generation == 20
        assert cfg.max_synth_duration == 20.0
        assert cfg.upsample_factor == 3

    @pytest.mark.parametrize("kwargs", [
        {"qa_pairs_per_generation": 0},
        {"upsample_factor": 0},
        {"max_synth_duration": 0.0},
        {"rng_seed": -1},
        {"rng_seed": 2**64},
    ])
    def test_invalid_config(self, kwargs):
        with pytest.raises(ValidationError):
            PipelineConfig(**kwargs)


def test_triplet_id_is_stable_and_distinct():
    a = make_triplet_id("u.wav", 3, 1, "q", "a")
    assert a == make_triplet_id("u.wav", 3, 1, "q", "a")
    assert a != make_triplet_id("u.wav", 3, 2, "q", "a")
    assert len(a) == 16


def test_provenance_and_status_serialize_to_plain_strings():
    assert Provenance.TTS_SYNTHESIZED.value == "tts_synthesized"
    assert FilterStatus.UNFILTERED.value == "unfiltered"
    assert LabelSource.PSEUDO.value == "pseudo"

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from speechqa.parsing import (
    FailedGeneration,
    FilterVerdict,
    JudgeDecision,
    ParsedQAPair,
    VerdictMissing,
    parse_filter_verdict,
    parse_qa_list,
    render_qa_list,
)

WELL_FORMED = (
    "1. Instruction: What is X?\n"
    "1. Output: X is Y.\n"
    "2. Instruction: Who?\n"
    "2. Output: Bob."
)


class TestParseQAList:
    def test_two_pairs(self):
        pairs, malformed = parse_qa_list(WELL_FORMED, expected_pairs=2)
        assert malformed == 0
        assert [(p.question, p.answer) for p in pairs] == [
            ("What is X?", "X is Y."),
            ("Who?", "Bob."),
        ]
        assert [p.index for p in pairs] == [1, 2]

    def test_free_prose_is_a_failed_generation(self):
        with pytest.raises(FailedGeneration):
            parse_qa_list("Here are some thoughts about the passage instead.", 20)

    def test_transcript_echo_lines_are_skipped(self):
        completion = (
            "1. Instruction: Summarize the passage.\n"
            "1. Corresponding Transcript: the full transcript echoed back\n"
            "1. Output: A summary."
        )
        pairs, malformed = parse_qa_list(completion, 1)
        assert malformed == 0
        assert pairs[0].answer == "A summary."

    def test_repeated_numbering_tolerated_and_reindexed(self):
        # The exemplar format itself numbers every line of the first pair "1."
        completion = (
            "1. Instruction: First?\n"
            "1. Output: One.\n"
            "1. Instruction: Second?\n"
            "1. Output: Two."
        )
        pairs, _ = parse_qa_list(completion, 2)
        assert [p.index for p in pairs] == [1, 2]
        assert pairs[1].question == "Second?"

    def test_empty_answer_pair_skipped_and_counted(self):
        completion = (
            "1. Instruction: Fine question?\n"
            "1. Output: \n"
            "2. Instruction: Also fine?\n"
            "2. Output: Yes."
        )
        pairs, malformed = parse_qa_list(completion, 2)
        assert len(pairs) == 1
        assert malformed == 1
        assert pairs[0].question == "Also fine?"

    def test_partial_success_below_expected_is_ok(self):
        pairs, _ = parse_qa_list(WELL_FORMED, expected_pairs=20)
        assert len(pairs) == 2

    def test_strict_mode_requires_full_clean_output(self):
        with pytest.raises(FailedGeneration):
            parse_qa_list(WELL_FORMED, expected_pairs=20, strict=True)
        pairs, _ = parse_qa_list(WELL_FORMED, expected_pairs=2, strict=True)
        assert len(pairs) == 2

    def test_continuation_lines_join_previous_field(self):
        completion = (
            "1. Instruction: A question\n"
            "that wraps onto a second line?\n"
            "1. Output: An answer\n"
            "that also wraps."
        )
        pairs, malformed = parse_qa_list(completion, 1)
        assert malformed == 0
        assert pairs[0].question == "A question\nthat wraps onto a second line?"
        assert pairs[0].answer == "An answer\nthat also wraps."

    def test_preamble_prose_ignored(self):
        completion = "Sure! Here are the pairs you asked for:\n\n" + WELL_FORMED
        pairs, malformed = parse_qa_list(completion, 2)
        assert len(pairs) == 2 and malformed == 0

    def test_instruction_without_output_is_malformed(self):
        completion = "1. Instruction: Dangling?\n2. Instruction: Complete?\n2. Output: Yes."
        pairs, malformed = parse_qa_list(completion, 2)
        assert len(pairs) == 1 and malformed == 1

    def test_orphan_output_is_malformed(self):
        completion = "1. Output: orphan answer\n2. Instruction: Q?\n2. Output: A."
        pairs, malformed = parse_qa_list(completion, 2)
        assert len(pairs) == 1 and malformed == 1

    def test_never_more_pairs_than_instruction_markers(self):
        completion = WELL_FORMED + "\n3. Output: extra\n4. Output: more"
        pairs, _ = parse_qa_list(completion, 2)
        assert len(pairs) <= completion.count("Instruction:")

    def test_unnumbered_keyword_lines_do_not_match(self):
        with pytest.raises(FailedGeneration):
            parse_qa_list("Instruction: no number\nOutput: no number", 1)

    def test_lowercase_keywords_do_not_match(self):
        with pytest.raises(FailedGeneration):
            parse_qa_list("1. instruction: lower\n1. output: case", 1)

    def test_expected_pairs_must_be_positive(self):
        with pytest.raises(ValueError):
            parse_qa_list(WELL_FORMED, expected_pairs=0)


_WORDS = st.text(alphabet="abcdefghijklmnopqrstuvwxyz ", min_size=1, max_size=40).filter(
    lambda s: s.strip()
)


class TestRoundTrip:
    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.tuples(_WORDS, _WORDS), min_size=1, max_size=25))
    def test_render_then_parse_reproduces_pairs(self, qa):
        qa = [(q.strip(), a.strip()) for q, a in qa]
        completion = render_qa_list(qa)
        pairs, malformed = parse_qa_list(completion, expected_pairs=len(qa), strict=True)
        assert malformed == 0
        assert [(p.question, p.answer) for p in pairs] == qa

    def test_twenty_pair_round_trip(self):
        rng = random.Random(7)
        qa = [
            (f"question number {i} about {rng.randint(0, 99)}?", f"answer text {i}")
            for i in range(1, 21)
        ]
        completion = render_qa_list(qa)
        pairs, _ = parse_qa_list(completion, expected_pairs=20, strict=True)
        assert len(pairs) == 20
        assert [(p.question, p.answer) for p in pairs] == qa


class TestParseFilterVerdict:
    def test_reasoning_then_accept(self):
        verdict = parse_filter_verdict("The question is relevant...\nACCEPT")
        assert verdict.decision is JudgeDecision.ACCEPT
        assert verdict.reasoning == "The question is relevant..."

    def test_bare_reject(self):
        verdict = parse_filter_verdict("REJECT")
        assert verdict == FilterVerdict(JudgeDecision.REJECT, "")

    def test_prose_ending_is_missing(self):
        with pytest.raises(VerdictMissing):
            parse_filter_verdict("I accept this.")

    def test_trailing_blank_lines_ignored(self):
        verdict = parse_filter_verdict("reasoning here\nACCEPT\n\n  \n")
        assert verdict.decision is JudgeDecision.ACCEPT
        assert verdict.reasoning == "reasoning here"

    def test_leading_whitespace_on_token_line_ok(self):
        assert parse_filter_verdict("why\n  REJECT  ").decision is JudgeDecision.REJECT

    @pytest.mark.parametrize("completion", [
        "",
        "   \n \n",
        "accept",
        "Accept",
        "ACCEPT.",
        "ACCEPTED",
        "REJECTS",
        "ACCEPT REJECT",
        "the verdict is ACCEPT",
        "ACCEPT\nbut actually let me think more",
    ])
    def test_non_token_final_lines_raise(self, completion):
        with pytest.raises(VerdictMissing):
            parse_filter_verdict(completion)

    def test_embedded_token_in_reasoning_is_fine(self):
        verdict = parse_filter_verdict("I könnte ACCEPT this or not.\nREJECT")
        assert verdict.decision is JudgeDecision.REJECT

    @settings(max_examples=200, deadline=None)
    @given(st.text(max_size=200))
    def test_total_over_strings(self, completion):
        # Every input yields accept, reject, or VerdictMissing; never anything else.
        try:
            verdict = parse_filter_verdict(completion)
            assert verdict.decision in (JudgeDecision.ACCEPT, JudgeDecision.REJECT)
        except VerdictMissing:
            pass


def test_parsed_pair_validation():
    with pytest.raises(ValueError):
        ParsedQAPair(index=0, question="q", answer="a")
    with pytest.raises(ValueError):
        ParsedQAPair(index=1, question=" ", answer="a")

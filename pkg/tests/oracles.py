"""Independent brute-force oracles used to validate the metric implementations.

These deliberately avoid the production code paths: the LCS oracle
enumerates candidate subsequences outright, and the edit-distance oracle
explores alignment choices top-down. A pure no-memo alignment enumerator
cross-checks the memoized one on short inputs.
"""

from __future__ import annotations

from itertools import combinations
from typing import Sequence


def is_subsequence(needle: Sequence[str], haystack: Sequence[str]) -> bool:
    it = iter(haystack)
    return all(tok in it for tok in needle)


def lcs_brute_force(candidate: Sequence[str], reference: Sequence[str]) -> int:
    """Longest common subsequence by enumerating every candidate subsequence."""
    best = 0
    n = len(candidate)
    for length in range(min(n, len(reference)), best, -1):
        for positions in combinations(range(n), length):
            if is_subsequence([candidate[i] for i in positions], reference):
                return length
    return 0


def subsequence_sets(sequence: Sequence[str]) -> list[set[tuple[str, ...]]]:
    """All distinct subsequences of ``sequence``, grouped (indexed) by length."""
    by_len: list[set[tuple[str, ...]]] = [set() for _ in range(len(sequence) + 1)]
    n = len(sequence)
    for mask in range(1 << n):
        sub = tuple(sequence[i] for i in range(n) if mask >> i & 1)
        by_len[len(sub)].add(sub)
    return by_len


def lcs_via_subsequence_sets(
    candidate_subs: list[set[tuple[str, ...]]],
    reference: Sequence[str],
) -> int:
    """LCS length: longest pre-enumerated candidate subsequence inside reference."""
    for length in range(len(candidate_subs) - 1, 0, -1):
        for sub in candidate_subs[length]:
            if is_subsequence(sub, reference):
                return length
    return 0


def edit_distance_all_alignments(ref: Sequence[str], hyp: Sequence[str]) -> int:
    """Minimal unit-cost edits by walking every alignment path, no sharing."""

    def walk(i: int, j: int) -> int:
        if i == len(ref):
            return len(hyp) - j
        if j == len(hyp):
            return len(ref) - i
        best = walk(i + 1, j + 1) + (ref[i] != hyp[j])
        best = min(best, walk(i + 1, j) + 1)  # deletion
        best = min(best, walk(i, j + 1) + 1)  # insertion
        return best

    return walk(0, 0)


def edit_distance_memo(
    ref: tuple[str, ...],
    hyp: tuple[str, ...],
    memo: dict[tuple[tuple[str, ...], tuple[str, ...]], int],
) -> int:
    """Same alignment exploration, sharing suffix subproblems across calls.

    The shared memo makes the exhaustive all-pairs sweep tractable; its
    agreement with the pure enumerator is itself asserted on short inputs.
    """
    key = (ref, hyp)
    cached = memo.get(key)
    if cached is not None:
        return cached
    if not ref:
        result = len(hyp)
    elif not hyp:
        result = len(ref)
    else:
        result = edit_distance_memo(ref[1:], hyp[1:], memo) + (ref[0] != hyp[0])
        if result > 0:
            deletion = edit_distance_memo(ref[1:], hyp, memo) + 1
            if deletion < result:
                result = deletion
            insertion = edit_distance_memo(ref, hyp[1:], memo) + 1
            if insertion < result:
                result = insertion
    memo[key] = result
    return result

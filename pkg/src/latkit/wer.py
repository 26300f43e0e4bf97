"""Word error rate scoring and length-bucketed improvement tables.

Scoring is case-insensitive and ignores sentinel/epsilon tokens. Corpus WER
pools error and reference-word counts over utterances before dividing; it is
not the mean of per-utterance rates.

Reference transcripts use one line per utterance:

    UTT=<id> :: w1 w2 ... wn
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import LatkitError
from .lattice import END_WORD, NULL_WORD, START_WORD

_DROP = (START_WORD, END_WORD, NULL_WORD)


def normalize_tokens(tokens: Iterable[str]) -> list[str]:
    """Lowercase and strip sentinel/epsilon tokens."""
    return [t.lower() for t in tokens if t not in _DROP]


@dataclass
class WerCounts:
    substitutions: int = 0
    insertions: int = 0
    deletions: int = 0
    ref_words: int = 0

    @property
    def errors(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def rate(self) -> float | None:
        """Errors over reference words; None when the reference is empty."""
        if self.ref_words == 0:
            return None
        return self.errors / self.ref_words

    def __add__(self, other: "WerCounts") -> "WerCounts":
        return WerCounts(
            self.substitutions + other.substitutions,
            self.insertions + other.insertions,
            self.deletions + other.deletions,
            self.ref_words + other.ref_words,
        )


def wer(ref: Sequence[str], hyp: Sequence[str]) -> WerCounts:
    """Minimum-edit alignment counts between one reference and one hypothesis.

    Unit costs for substitution, insertion, and deletion. When several
    alignments reach the minimum, the backtrace prefers substitution/match,
    then insertion, then deletion, which fixes the count split
    deterministically.
    """
    r = normalize_tokens(ref)
    h = normalize_tokens(hyp)
    nr, nh = len(r), len(h)
    # dist[i][j]: edit distance between r[:i] and h[:j]
    dist = [[0] * (nh + 1) for _ in range(nr + 1)]
    for i in range(1, nr + 1):
        dist[i][0] = i
    for j in range(1, nh + 1):
        dist[0][j] = j
    for i in range(1, nr + 1):
        ri = r[i - 1]
        row = dist[i]
        prev = dist[i - 1]
        for j in range(1, nh + 1):
            sub = prev[j - 1] + (ri != h[j - 1])
            ins = row[j - 1] + 1
            dele = prev[j] + 1
            row[j] = min(sub, ins, dele)

    counts = WerCounts(ref_words=nr)
    i, j = nr, nh
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + (r[i - 1] != h[j - 1]):
            if r[i - 1] != h[j - 1]:
                counts.substitutions += 1
            i -= 1
            j -= 1
        elif j > 0 and dist[i][j] == dist[i][j - 1] + 1:
            counts.insertions += 1
            j -= 1
        else:
            counts.deletions += 1
            i -= 1
    return counts


@dataclass
class CorpusWer:
    counts: WerCounts
    per_utterance: dict[str, WerCounts]

    @property
    def rate(self) -> float | None:
        return self.counts.rate


def corpus_wer(
    refs: Mapping[str, Sequence[str]], hyps: Mapping[str, Sequence[str]]
) -> CorpusWer:
    """Pooled-count WER over a whole set; utterance id sets must match."""
    if set(refs) != set(hyps):
        only_ref = sorted(set(refs) - set(hyps))
        only_hyp = sorted(set(hyps) - set(refs))
        raise LatkitError(
            f"utterance sets differ (refs only: {only_ref[:5]}, hyps only: {only_hyp[:5]})"
        )
    per: dict[str, WerCounts] = {}
    pooled = WerCounts()
    for utt in sorted(refs):
        counts = wer(refs[utt], hyps[utt])
        per[utt] = counts
        pooled = pooled + counts
    return CorpusWer(counts=pooled, per_utterance=per)


@dataclass
class LengthBucket:
    label: str
    lo: int
    hi: int | None  # None means unbounded
    num_utts: int
    baseline: WerCounts
    system: WerCounts

    @property
    def werr(self) -> float | None:
        """Relative error-rate reduction; None when the baseline has no errors
        or the bucket is empty."""
        base = self.baseline.rate
        sys_ = self.system.rate
        if base is None or sys_ is None or base == 0.0:
            return None
        return (base - sys_) / base


def werr_by_length(
    baseline: Mapping[str, Sequence[str]],
    system: Mapping[str, Sequence[str]],
    refs: Mapping[str, Sequence[str]],
    buckets: Sequence[int] = (5, 10, 15, 20, 30),
) -> list[LengthBucket]:
    """Relative improvement of ``system`` over ``baseline`` by reference length.

    ``buckets`` gives ascending upper bounds; an unbounded bucket is added on
    top. An utterance falls in the first bucket whose bound is >= its
    normalized reference word count.
    """
    bounds = list(buckets)
    if bounds != sorted(bounds) or len(set(bounds)) != len(bounds) or any(b < 1 for b in bounds):
        raise ValueError("buckets must be strictly ascending positive bounds")
    base_scores = corpus_wer(refs, baseline).per_utterance
    sys_scores = corpus_wer(refs, system).per_utterance

    edges: list[tuple[int, int | None, str]] = []
    lo = 1
    for b in bounds:
        edges.append((lo, b, f"{lo}-{b}"))
        lo = b + 1
    edges.append((lo, None, f">{bounds[-1]}" if bounds else "all"))

    out = []
    for lo, hi, label in edges:
        num = 0
        base_pool = WerCounts()
        sys_pool = WerCounts()
        for utt in refs:
            length = len(normalize_tokens(refs[utt]))
            if length < lo or (hi is not None and length > hi):
                continue
            num += 1
            base_pool = base_pool + base_scores[utt]
            sys_pool = sys_pool + sys_scores[utt]
        out.append(
            LengthBucket(label=label, lo=lo, hi=hi, num_utts=num, baseline=base_pool, system=sys_pool)
        )
    return out


# ---------------------------------------------------------------------------
# transcript files


def parse_transcripts(text: str) -> dict[str, list[str]]:
    """Read ``UTT=<id> :: words`` lines; empty transcripts are legal."""
    out: dict[str, list[str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, tail = line.partition("::")
        head = head.strip()
        if not sep or not head.startswith("UTT="):
            raise LatkitError(f"line {lineno}: expected 'UTT=<id> :: words'")
        utt = head[4:].strip()
        if not utt:
            raise LatkitError(f"line {lineno}: empty utterance id")
        if utt in out:
            raise LatkitError(f"line {lineno}: duplicate utterance id {utt!r}")
        out[utt] = tail.split()
    return out


def format_transcripts(hyps: Mapping[str, Sequence[str]]) -> str:
    lines = [f"UTT={utt} :: {' '.join(hyps[utt])}".rstrip() for utt in sorted(hyps)]
    return "\n".join(lines) + "\n" if lines else ""

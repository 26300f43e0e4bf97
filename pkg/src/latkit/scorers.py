"""Auto-regressive word scorers behind a single chain-rule contract.

A scorer assigns ``log P(word | history)`` one word at a time. States are
opaque, immutable values so a caller may branch from any intermediate state
(lattices fan out). ``score_sequence`` is the fold of ``score_word`` over a
whole sentence plus the end-of-sentence term, and every implementation must
keep the two routes exactly consistent.

Scorers that look at the audio (or any per-frame feature) set
``time_sensitive`` so that caching layers know the frame argument matters.
"""

from __future__ import annotations

import json
import math
import zlib
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ScorerError
from .lattice import END_WORD, START_WORD, is_scorable_word

UNK_PIECE = "<unk>"


@dataclass(frozen=True)
class StepResult:
    """One autoregressive step: the successor state and the word's log probability."""

    state: object
    logprob: float


def _check_word(word: str) -> None:
    if not is_scorable_word(word):
        raise ScorerError(f"score_word got reserved token {word!r}")


class Scorer(ABC):
    """Contract for label-synchronous sentence scorers."""

    name: str = "scorer"
    time_sensitive: bool = False

    @abstractmethod
    def begin_utterance(self, utterance_id: str, duration_frames: int = 0) -> object:
        """Fresh state for one utterance. ``duration_frames`` is advisory."""

    @abstractmethod
    def score_word(self, state: object, word: str, node_time: int = 0) -> StepResult:
        """Score one word in context. ``word`` must be a real vocabulary
        token, never a sentinel or epsilon."""

    @abstractmethod
    def finish(self, state: object) -> float:
        """log P(end of sentence | history)."""

    def score_sequence(self, utterance_id: str, words: Sequence[str]) -> float:
        """Whole-sentence log probability, including the end term.

        Equal by construction to folding :meth:`score_word` from
        :meth:`begin_utterance` and adding :meth:`finish`.
        """
        state = self.begin_utterance(utterance_id)
        total = 0.0
        for word in words:
            step = self.score_word(state, word)
            state = step.state
            total += step.logprob
        return total + self.finish(state)


class UniformScorer(Scorer):
    """Assigns -ln(V) to every word, including unknown ones and the end token."""

    name = "uniform"

    def __init__(self, vocab_size: int):
        if vocab_size < 1:
            raise ValueError("vocab_size must be at least 1")
        self.vocab_size = vocab_size
        self._logprob = -math.log(vocab_size)

    def begin_utterance(self, utterance_id: str, duration_frames: int = 0) -> object:
        return ()

    def score_word(self, state: object, word: str, node_time: int = 0) -> StepResult:
        _check_word(word)
        return StepResult(state, self._logprob)

    def finish(self, state: object) -> float:
        return self._logprob


class ConstantScorer(Scorer):
    """Replies a fixed log probability everywhere. Handy as a protocol probe."""

    name = "constant"

    def __init__(self, logprob: float):
        self.logprob = float(logprob)

    def begin_utterance(self, utterance_id: str, duration_frames: int = 0) -> object:
        return ()

    def score_word(self, state: object, word: str, node_time: int = 0) -> StepResult:
        _check_word(word)
        return StepResult(state, self.logprob)

    def finish(self, state: object) -> float:
        return self.logprob


class NgramScorer(Scorer):
    """Count-based n-gram model with interpolated absolute discounting.

    Every level interpolates toward the next shorter context with mass
    ``discount * distinct_successors(ctx) / count(ctx)``; the zero-length
    context interpolates toward the uniform distribution over the vocabulary
    (which includes the end-of-sentence token). For each seen context the
    probabilities over the vocabulary sum to one. Unknown words fall outside
    the distribution and get the fixed ``unk_floor`` log score.
    """

    name = "ngram"

    def __init__(
        self,
        order: int,
        counts: dict[tuple[str, ...], Counter],
        discount: float = 0.75,
        unk_floor: float = -20.0,
    ):
        if order < 1:
            raise ValueError("order must be at least 1")
        if not 0.0 < discount < 1.0:
            raise ValueError("discount must lie strictly between 0 and 1")
        self.order = order
        self.discount = discount
        self.unk_floor = float(unk_floor)
        self._counts = counts
        self._totals = {ctx: sum(c.values()) for ctx, c in counts.items()}
        vocab = set()
        for ctx, c in counts.items():
            vocab.update(c)
        vocab.discard(START_WORD)
        self.vocab = frozenset(vocab)
        if not self.vocab:
            raise ValueError("empty model: no events counted")

    # -- contract -----------------------------------------------------------

    def begin_utterance(self, utterance_id: str, duration_frames: int = 0) -> object:
        return (START_WORD,)

    def score_word(self, state: object, word: str, node_time: int = 0) -> StepResult:
        _check_word(word)
        history: tuple[str, ...] = state  # type: ignore[assignment]
        new_state = history + (word,)
        if word not in self.vocab:
            return StepResult(new_state, self.unk_floor)
        return StepResult(new_state, math.log(self.prob(word, self._context(history))))

    def finish(self, state: object) -> float:
        history: tuple[str, ...] = state  # type: ignore[assignment]
        return math.log(self.prob(END_WORD, self._context(history)))

    def _context(self, history: tuple[str, ...]) -> tuple[str, ...]:
        if self.order == 1:
            return ()
        return history[-(self.order - 1):]

    def prob(self, word: str, ctx: tuple[str, ...]) -> float:
        """Smoothed P(word | ctx) for an in-vocabulary word."""
        if word not in self.vocab:
            raise ScorerError(f"{word!r} is outside the model vocabulary")
        counts = self._counts.get(ctx)
        if counts is None:
            if not ctx:
                return 1.0 / len(self.vocab)
            return self.prob(word, ctx[1:])
        total = self._totals[ctx]
        lam = self.discount * len(counts) / total
        lower = self.prob(word, ctx[1:]) if ctx else 1.0 / len(self.vocab)
        return max(counts.get(word, 0) - self.discount, 0.0) / total + lam * lower

    # -- persistence ---------------------------------------------------------

    def save(self, path: str) -> None:
        payload = {
            "format": "latkit-ngram",
            "order": self.order,
            "discount": self.discount,
            "unk_floor": self.unk_floor,
            "counts": [
                {"ctx": list(ctx), "events": dict(events)}
                for ctx, events in sorted(self._counts.items())
            ],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "NgramScorer":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("format") != "latkit-ngram":
            raise ScorerError(f"{path} is not an n-gram model file")
        counts = {
            tuple(entry["ctx"]): Counter(entry["events"]) for entry in payload["counts"]
        }
        return cls(
            order=payload["order"],
            counts=counts,
            discount=payload["discount"],
            unk_floor=payload["unk_floor"],
        )


def train_ngram(
    corpus: str | Iterable[str],
    order: int,
    discount: float = 0.75,
    unk_floor: float = -20.0,
) -> NgramScorer:
    """Count an n-gram model from line-per-sentence text.

    Each line is whitespace-tokenized; a sentence-start context is prepended
    and an end-of-sentence event appended. Contexts of every length up to
    ``order - 1`` are counted so queries with short histories back off to the
    matching lower-order estimate.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    lines = corpus.splitlines() if isinstance(corpus, str) else corpus
    counts: dict[tuple[str, ...], Counter] = {}
    any_event = False
    for line in lines:
        tokens = line.split()
        if not tokens:
            continue
        any_event = True
        padded = [START_WORD] + tokens + [END_WORD]
        for i in range(1, len(padded)):
            for ctx_len in range(0, order):
                if ctx_len > i:
                    break
                ctx = tuple(padded[i - ctx_len:i])
                counts.setdefault(ctx, Counter())[padded[i]] += 1
    if not any_event:
        raise ValueError("empty corpus: nothing to count")
    return NgramScorer(order=order, counts=counts, discount=discount, unk_floor=unk_floor)


@dataclass(frozen=True)
class _MockState:
    history: tuple[str, ...]
    last_time: int


class MockTimeScorer(Scorer):
    """Deterministic stand-in for an audio-grounded scorer.

    The log probability depends on the entire word history and on the frame
    at which the word is consumed (bucketed by ``time_grain`` frames), so
    both finite-history clustering and timestamp-free state reuse are real
    approximations for it. Useful for exercising cache semantics without a
    neural model in the loop.
    """

    name = "mock-time"
    time_sensitive = True

    def __init__(self, time_grain: int = 10):
        if time_grain < 1:
            raise ValueError("time_grain must be at least 1")
        self.time_grain = time_grain

    def _logprob(self, history: tuple[str, ...], word: str, node_time: int) -> float:
        key = "\x1f".join(history) + "\x1f" + word
        h = zlib.crc32(key.encode("utf-8"))
        bucket = (node_time // self.time_grain) % 13
        return -1.0 - (h % 997) / 997.0 - bucket / 13.0

    def begin_utterance(self, utterance_id: str, duration_frames: int = 0) -> object:
        return _MockState(history=(START_WORD,), last_time=0)

    def score_word(self, state: object, word: str, node_time: int = 0) -> StepResult:
        _check_word(word)
        st: _MockState = state  # type: ignore[assignment]
        lp = self._logprob(st.history, word, node_time)
        return StepResult(_MockState(st.history + (word,), node_time), lp)

    def finish(self, state: object) -> float:
        st: _MockState = state  # type: ignore[assignment]
        return self._logprob(st.history, END_WORD, st.last_time)


# ---------------------------------------------------------------------------
# word pieces


@dataclass(frozen=True)
class WordPieceVocab:
    """A set of sub-word pieces plus the floor for unmappable words."""

    pieces: frozenset[str]
    unk_floor: float = -20.0

    def __post_init__(self):
        if not self.pieces:
            raise ValueError("piece inventory is empty")
        if any(not p for p in self.pieces):
            raise ValueError("empty string is not a valid piece")


def tokenize(vocab: WordPieceVocab, word: str) -> list[str]:
    """Greedy longest-match split of ``word`` into pieces.

    The pieces concatenate back to the word. When no split exists under the
    greedy scan the single unknown marker ``[UNK_PIECE]`` is returned, so the
    function is total over arbitrary strings.
    """
    if not word:
        return [UNK_PIECE]
    longest = max(len(p) for p in vocab.pieces)
    out: list[str] = []
    i = 0
    while i < len(word):
        for length in range(min(longest, len(word) - i), 0, -1):
            piece = word[i:i + length]
            if piece in vocab.pieces:
                out.append(piece)
                i += length
                break
        else:
            return [UNK_PIECE]
    return out


class WordPieceScorer(Scorer):
    """Adapts a piece-level scorer to the word-level contract.

    A word's log probability is the sum over its pieces; unmappable words
    get the vocabulary's floor while the underlying state still advances by
    the unknown marker so later context stays aligned.
    """

    def __init__(self, inner: Scorer, vocab: WordPieceVocab, name: str | None = None):
        self.inner = inner
        self.vocab = vocab
        self.name = name if name is not None else f"wp-{inner.name}"
        self.time_sensitive = inner.time_sensitive

    def begin_utterance(self, utterance_id: str, duration_frames: int = 0) -> object:
        return self.inner.begin_utterance(utterance_id, duration_frames)

    def score_word(self, state: object, word: str, node_time: int = 0) -> StepResult:
        _check_word(word)
        pieces = tokenize(self.vocab, word)
        if pieces == [UNK_PIECE]:
            step = self.inner.score_word(state, UNK_PIECE, node_time)
            return StepResult(step.state, self.vocab.unk_floor)
        total = 0.0
        for piece in pieces:
            step = self.inner.score_word(state, piece, node_time)
            state = step.state
            total += step.logprob
        return StepResult(state, total)

    def finish(self, state: object) -> float:
        return self.inner.finish(state)


# ---------------------------------------------------------------------------
# scorer specs


def scorer_from_spec(spec: str) -> Scorer:
    """Build a scorer from a compact command-line spec.

    Supported forms:

    * ``ngram:<model-path>`` - trained model saved by :meth:`NgramScorer.save`
    * ``uniform:<vocab-size>``
    * ``constant:<logprob>``
    * ``mock-time``
    * ``external:<command>`` - child process speaking the JSON line protocol
    """
    from .external import ExternalScorer

    if spec == "mock-time":
        return MockTimeScorer()
    kind, sep, arg = spec.partition(":")
    if not sep or not arg:
        raise ValueError(f"bad scorer spec {spec!r}")
    if kind == "ngram":
        return NgramScorer.load(arg)
    if kind == "uniform":
        return UniformScorer(int(arg))
    if kind == "constant":
        return ConstantScorer(float(arg))
    if kind == "external":
        return ExternalScorer(arg)
    raise ValueError(f"unknown scorer kind {kind!r}")

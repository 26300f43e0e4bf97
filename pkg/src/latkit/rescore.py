"""On-the-fly n-gram expansion and cached label-synchronous lattice rescoring.

Expansion rewrites a lattice so that every node is reachable under exactly
one (ngram-1)-word history: nodes split when distinct histories flow in and
copies merge again where histories collapse to the same tuple. Path word
sequences (and their first-pass scores) are preserved exactly.

Rescoring walks the expanded lattice in topological order and assigns each
arc ``log P(word | clustered history)`` from an autoregressive scorer. The
scorer states live in a two-level cache keyed by history tuple and then by
node timestamp: a lookup matches the nearest stored timestamp within
``collar`` frames, so the same phrase recurring later in the utterance gets
its own state instead of silently reusing one computed hundreds of frames
earlier. When two paths write the same (history, timestamp) entry the one
whose recent arcs carry more posterior mass wins, and the entry's memoized
word predictions are dropped so scores always reflect the stored state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

from .combine import Coefficients
from .errors import MissingPosteriorError, RescoreError
from .lattice import (
    Arc,
    Lattice,
    Node,
    _wire,
    is_scorable_word,
    topological_order,
)
from .nbest import Hypothesis, extract_nbest
from .scorers import Scorer

_END_KEY = ("</s>",)  # all expanded copies of the end node merge


@dataclass
class RescoreConfig:
    """Knobs for expansion and cache behavior.

    ``ngram`` is the expansion order: histories keep the last ``ngram - 1``
    words. ``collar`` is the timestamp tolerance in frames for cache hits;
    0 demands exact times and ``math.inf`` ignores time entirely.
    ``score_eos`` controls whether arcs into the end node receive the
    scorer's end-of-sentence term (on by default). ``stream_name`` defaults
    to the scorer's name.
    """

    ngram: int = 3
    collar: float = 9
    stream_name: str | None = None
    score_eos: bool = True

    def __post_init__(self):
        if self.ngram < 2:
            raise ValueError("ngram must be at least 2")
        if self.collar < 0:
            raise ValueError("collar must be non-negative")


@dataclass
class CacheEntry:
    """Scorer state reached under one history at one timestamp.

    ``post`` holds the posteriors of the up-to-(ngram-1) most recent arcs of
    the path that wrote the entry; renewal compares these sums. ``pred``
    memoizes word log probabilities computed from ``state``.
    """

    state: object
    post: tuple[float, ...]
    pred: dict[str, float] = field(default_factory=dict)


class CacheHit(NamedTuple):
    time: int
    entry: CacheEntry


class RescoreCache:
    """Two-level scorer-state cache: history tuple, then node timestamp."""

    def __init__(
        self,
        scorer: Scorer,
        utterance_id: str,
        collar: float = 9,
        duration_frames: int = 0,
        start_time: int = 0,
    ):
        self.scorer = scorer
        self.collar = collar
        self._store: dict[tuple[str, ...], dict[int, CacheEntry]] = {}
        initial = scorer.begin_utterance(utterance_id, duration_frames)
        self._store[()] = {start_time: CacheEntry(state=initial, post=())}

    def lookup(self, hist: tuple[str, ...], time: int) -> CacheHit | None:
        """Nearest entry for ``hist`` within the collar, if any.

        Equidistant stored timestamps resolve to the smaller one. A history
        whose stored timestamps all lie outside the collar is a miss.
        """
        times = self._store.get(hist)
        if not times:
            return None
        best = min(times, key=lambda t: (abs(t - time), t))
        if abs(best - time) <= self.collar:
            return CacheHit(best, times[best])
        return None

    def _resolve(self, hist: tuple[str, ...], time: int) -> CacheEntry:
        hit = self.lookup(hist, time)
        if hit is None:
            raise RescoreError(f"cache has no entry for history {hist!r} near frame {time}")
        return hit.entry

    def get_post(self, hist: tuple[str, ...], time: int) -> tuple[float, ...]:
        return self._resolve(hist, time).post

    def get_pred(self, hist: tuple[str, ...], time: int, word: str, node_time: int) -> float:
        entry = self._resolve(hist, time)
        if word not in entry.pred:
            entry.pred[word] = self.scorer.score_word(entry.state, word, node_time).logprob
        return entry.pred[word]

    def get_eos(self, hist: tuple[str, ...], time: int) -> float:
        entry = self._resolve(hist, time)
        key = _END_KEY[0]
        if key not in entry.pred:
            entry.pred[key] = self.scorer.finish(entry.state)
        return entry.pred[key]

    def renew(
        self,
        src_hist: tuple[str, ...],
        src_time: int,
        dst_hist: tuple[str, ...],
        store_time: int,
        word: str | None,
        post: tuple[float, ...],
        node_time: int | None = None,
    ) -> float | None:
        """Write the state extending (src_hist, src_time) by ``word`` into
        the entry (dst_hist, store_time), replacing whatever was there.

        ``word=None`` extends by epsilon: the state is carried unchanged.
        ``node_time`` is the frame at which the word is actually consumed;
        it can differ from ``store_time`` when a hit is renewed in place.
        Returns the memoized log probability of ``word`` from the source
        state (None for epsilon). Callers must use it rather than calling
        ``get_pred`` after a renewal: when history truncation makes the
        destination slot alias the source entry, the source is no longer
        resolvable once replaced.
        """
        src = self._resolve(src_hist, src_time)
        logprob = None
        if word is None:
            state = src.state
        else:
            when = node_time if node_time is not None else store_time
            step = self.scorer.score_word(src.state, word, when)
            src.pred.setdefault(word, step.logprob)
            logprob = src.pred[word]
            state = step.state
        self._store.setdefault(dst_hist, {})[store_time] = CacheEntry(state=state, post=post)
        return logprob

    # -- introspection (used by tests and diagnostics) -----------------------

    def times(self, hist: tuple[str, ...]) -> list[int]:
        return sorted(self._store.get(hist, ()))

    def num_entries(self) -> int:
        return sum(len(times) for times in self._store.values())


class _Copy:
    """One expanded instance of an original node under a fixed history."""

    __slots__ = ("orig_id", "hist", "new_id")

    def __init__(self, orig_id: int, hist: tuple[str, ...]):
        self.orig_id = orig_id
        self.hist = hist
        self.new_id = -1


def _traverse(lat: Lattice, ngram: int, on_arc=None) -> Lattice:
    """Shared expansion walk. ``on_arc(src_copy, dst_node, hist, arc, is_end)``
    may return a model score to attach; None attaches nothing."""
    order = topological_order(lat)
    by_hist: list[dict[tuple[str, ...], _Copy]] = [dict() for _ in lat.nodes]
    created: list[list[_Copy]] = [[] for _ in lat.nodes]

    start_copy = _Copy(lat.start_node_id, ())
    by_hist[lat.start_node_id][()] = start_copy
    created[lat.start_node_id].append(start_copy)

    keep = ngram - 1
    arc_records: list[tuple[_Copy, _Copy, Arc, tuple[str, float] | None]] = []
    for orig_id in order:
        for copy in created[orig_id]:
            for arc_id in lat.nodes[orig_id].exits:
                arc = lat.arcs[arc_id]
                dst = lat.nodes[arc.dest]
                is_end = arc.dest == lat.end_node_id
                if is_end:
                    key = _END_KEY
                    hist = ()
                elif is_scorable_word(dst.word):
                    key = hist = (copy.hist + (dst.word,))[-keep:]
                else:
                    key = hist = copy.hist
                dst_copy = by_hist[arc.dest].get(key)
                if dst_copy is None:
                    dst_copy = _Copy(arc.dest, hist)
                    by_hist[arc.dest][key] = dst_copy
                    created[arc.dest].append(dst_copy)
                score = on_arc(copy, dst, hist, arc, is_end) if on_arc else None
                arc_records.append((copy, dst_copy, arc, score))

    nodes: list[Node] = []
    for orig_id in order:
        for copy in created[orig_id]:
            copy.new_id = len(nodes)
            orig = lat.nodes[orig_id]
            nodes.append(Node(id=copy.new_id, word=orig.word, time=orig.time))
    new = Lattice(
        utterance_id=lat.utterance_id, frame_shift_ms=lat.frame_shift_ms, nodes=nodes
    )
    for src_copy, dst_copy, arc, score in arc_records:
        new_arc = Arc(
            id=len(new.arcs),
            source=src_copy.new_id,
            dest=dst_copy.new_id,
            ac_score=arc.ac_score,
            lm_score=arc.lm_score,
            post=arc.post,
            model_scores=dict(arc.model_scores),
        )
        if score is not None:
            stream, value = score
            new_arc.model_scores[stream] = value
        new.arcs.append(new_arc)
    _wire(new)
    return new


def expand_ngram(lat: Lattice, ngram: int) -> Lattice:
    """Expand so each node's (ngram-1)-word history is unique.

    Pure topology transform: no scorer involved, path word sequences and
    their scores are preserved as a multiset. Expanding an already expanded
    lattice at the same order is an isomorphism.
    """
    if ngram < 2:
        raise ValueError("ngram must be at least 2")
    return _traverse(lat, ngram)


def rescore_lattice(
    lat: Lattice,
    scorer: Scorer,
    config: RescoreConfig | None = None,
    cache: RescoreCache | None = None,
) -> Lattice:
    """Expand and attach one scorer stream to every arc.

    Requires arc posteriors (they drive cache renewal). Arcs into epsilon
    nodes score 0 for the stream; arcs into the end node get the
    end-of-sentence term unless ``score_eos`` is off. Passing an explicit
    ``cache`` lets callers inspect or reuse it; by default a fresh one is
    built for the utterance.
    """
    config = config if config is not None else RescoreConfig()
    if not lat.has_posteriors():
        raise MissingPosteriorError(
            f"lattice {lat.utterance_id!r} lacks arc posteriors; run compute_arc_posteriors"
        )
    stream = config.stream_name if config.stream_name is not None else scorer.name
    if cache is None:
        duration = lat.nodes[lat.end_node_id].time if lat.end_node_id >= 0 else 0
        start_time = lat.nodes[lat.start_node_id].time if lat.start_node_id >= 0 else 0
        cache = RescoreCache(
            scorer,
            lat.utterance_id,
            collar=config.collar,
            duration_frames=duration,
            start_time=start_time,
        )
    keep = config.ngram - 1

    def on_arc(src_copy: _Copy, dst: Node, hist: tuple[str, ...], arc: Arc, is_end: bool):
        src_time = lat.nodes[src_copy.orig_id].time
        try:
            post = (cache.get_post(src_copy.hist, src_time) + (arc.post,))[-keep:]
            if is_end:
                value = cache.get_eos(src_copy.hist, src_time) if config.score_eos else 0.0
                return (stream, value)
            word = dst.word if is_scorable_word(dst.word) else None
            hit = cache.lookup(hist, dst.time)
            if hit is None:
                value = cache.renew(src_copy.hist, src_time, hist, dst.time, word, post)
            elif sum(post) > sum(hit.entry.post):
                value = cache.renew(
                    src_copy.hist, src_time, hist, hit.time, word, post, node_time=dst.time
                )
            else:
                value = None
            if word is None:
                return (stream, 0.0)
            if value is None:
                value = cache.get_pred(src_copy.hist, src_time, word, dst.time)
            return (stream, value)
        except Exception as exc:
            raise RescoreError(
                f"scoring arc {arc.id} (into {dst.word!r} at frame {dst.time}) "
                f"of {lat.utterance_id!r}: {exc}"
            ) from exc

    return _traverse(lat, config.ngram, on_arc)


def best_path(lat: Lattice, coeffs: Coefficients | None = None) -> Hypothesis:
    """Highest combined-score path through a (rescored) lattice.

    Same scoring and tie-break rules as n-best extraction followed by
    selection, so the two routes always agree. Coefficients referencing a
    stream absent from any arc raise.
    """
    nb = extract_nbest(lat, 1, coeffs, dedup=False)
    return nb.hypotheses[0]

"""Exact n-best extraction from lattices, n-best rescoring, and selection.

The n-best file format is one hypothesis per line, grouped by utterance and
ordered by rank:

    UTT=<id> RANK=<k> ac=<v> lm=<v> [<stream>=<v>]... NW=<n> :: w1 w2 ... wn
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .combine import Coefficients, combined_score
from .errors import LatkitError, MissingStreamError, NoPathError
from .lattice import Lattice, is_scorable_word, topological_order
from .scorers import Scorer


@dataclass
class Hypothesis:
    """One word sequence with its per-stream score totals."""

    utterance_id: str
    words: tuple[str, ...]
    scores: dict[str, float] = field(default_factory=dict)

    @property
    def num_words(self) -> int:
        return len(self.words)


@dataclass
class NBestList:
    utterance_id: str
    hypotheses: list[Hypothesis] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.hypotheses)

    def __iter__(self):
        return iter(self.hypotheses)


def _arc_streams(lat: Lattice) -> list[str]:
    streams: set[str] = set()
    for arc in lat.arcs:
        streams.update(arc.model_scores)
    return sorted(streams)


def _check_coeff_streams(lat: Lattice, coeffs: Coefficients) -> None:
    for stream in coeffs.stream_weights:
        for arc in lat.arcs:
            if stream not in arc.model_scores:
                raise MissingStreamError(
                    f"arc {arc.id} of {lat.utterance_id!r} lacks stream {stream!r}"
                )


def extract_nbest(
    lat: Lattice,
    n: int | None,
    coeffs: Coefficients | None = None,
    dedup: bool = True,
) -> NBestList:
    """The ``n`` best word sequences by combined first-pass score.

    Exact best-first search over the lattice: partial paths are expanded in
    order of their best achievable completion, so hypotheses come out in
    strictly non-increasing score order with no beam. With ``dedup`` (the
    default) paths that read the same words are folded together and the
    best-scoring path supplies the stream totals. ``n=None`` returns every
    (distinct) sequence. Ties are broken toward the lexicographically
    smaller word sequence.
    """
    coeffs = coeffs if coeffs is not None else Coefficients()
    _check_coeff_streams(lat, coeffs)
    if lat.start_node_id < 0 or lat.end_node_id < 0:
        raise NoPathError(f"lattice {lat.utterance_id} lacks start or end")
    streams = _arc_streams(lat)
    order = topological_order(lat)

    def arc_gain(arc) -> float:
        total = coeffs.ac * arc.ac_score + coeffs.gamma * arc.lm_score
        for stream, weight in coeffs.stream_weights.items():
            total += weight * arc.model_scores[stream]
        return total

    # Best completion score from each node to the end, counting the word
    # bonus of nodes still to be consumed. Exact, so the search pops complete
    # paths in true best-first order.
    best_out = [-math.inf] * lat.num_nodes
    best_out[lat.end_node_id] = 0.0
    for i in reversed(order):
        for j in lat.nodes[i].exits:
            arc = lat.arcs[j]
            dst = lat.nodes[arc.dest]
            gain = arc_gain(arc) + (coeffs.kappa if is_scorable_word(dst.word) else 0.0)
            cand = gain + best_out[arc.dest]
            if cand > best_out[i]:
                best_out[i] = cand
    if best_out[lat.start_node_id] == -math.inf:
        raise NoPathError(f"lattice {lat.utterance_id} has no complete path")

    limit = math.inf if n is None else int(n)
    if limit != math.inf and limit < 1:
        raise ValueError("n must be at least 1")

    counter = itertools.count()
    zero = (0.0,) * len(streams)
    start = lat.start_node_id
    # queue items: (-f, words, tiebreak, node, g, ac, lm, per-stream totals)
    heap = [(-best_out[start], (), next(counter), start, 0.0, 0.0, 0.0, zero)]
    seen: set[tuple[str, ...]] = set()
    out: list[Hypothesis] = []
    while heap and len(out) < limit:
        neg_f, words, _, node, g, ac, lm, totals = heapq.heappop(heap)
        if node == lat.end_node_id:
            if dedup:
                if words in seen:
                    continue
                seen.add(words)
            scores = {"ac": ac, "lm": lm}
            scores.update(zip(streams, totals))
            out.append(Hypothesis(utterance_id=lat.utterance_id, words=words, scores=scores))
            continue
        for j in lat.nodes[node].exits:
            arc = lat.arcs[j]
            dst = lat.nodes[arc.dest]
            real = is_scorable_word(dst.word)
            g2 = g + arc_gain(arc) + (coeffs.kappa if real else 0.0)
            words2 = words + (dst.word,) if real else words
            totals2 = tuple(
                t + arc.model_scores.get(s, 0.0) for t, s in zip(totals, streams)
            )
            heapq.heappush(
                heap,
                (
                    -(g2 + best_out[arc.dest]),
                    words2,
                    next(counter),
                    arc.dest,
                    g2,
                    ac + arc.ac_score,
                    lm + arc.lm_score,
                    totals2,
                ),
            )
    return NBestList(utterance_id=lat.utterance_id, hypotheses=out)


def rescore_nbest(
    nbest: NBestList,
    scorer: Scorer,
    stream_name: str | None = None,
    length_normalize: bool = False,
) -> NBestList:
    """Attach a whole-sentence scorer stream to every hypothesis.

    The stream value is ``score_sequence`` over the hypothesis words (end
    term included). With ``length_normalize`` the total is divided by the
    number of scored tokens, words plus one for the end token; this is off
    by default. Order is preserved.
    """
    stream = stream_name if stream_name is not None else scorer.name
    out = NBestList(utterance_id=nbest.utterance_id)
    for hyp in nbest:
        total = scorer.score_sequence(nbest.utterance_id, list(hyp.words))
        if length_normalize:
            total /= hyp.num_words + 1
        scores = dict(hyp.scores)
        scores[stream] = total
        out.hypotheses.append(
            Hypothesis(utterance_id=hyp.utterance_id, words=hyp.words, scores=scores)
        )
    return out


def select_best(nbest: NBestList | Sequence[Hypothesis], coeffs: Coefficients) -> Hypothesis:
    """The hypothesis with the highest combined score.

    Ties go to the lexicographically smaller word sequence, so selection is
    deterministic for any candidate order.
    """
    hyps = list(nbest.hypotheses if isinstance(nbest, NBestList) else nbest)
    if not hyps:
        raise LatkitError("cannot select from an empty candidate list")
    best = None
    best_key = None
    for hyp in hyps:
        key = (-combined_score(hyp, coeffs), hyp.words)
        if best_key is None or key < best_key:
            best = hyp
            best_key = key
    return best


# ---------------------------------------------------------------------------
# n-best files


def format_nbest(lists: NBestList | Iterable[NBestList]) -> str:
    if isinstance(lists, NBestList):
        lists = [lists]
    lines = []
    for nb in lists:
        for rank, hyp in enumerate(nb.hypotheses, start=1):
            extras = sorted(k for k in hyp.scores if k not in ("ac", "lm"))
            parts = [
                f"UTT={nb.utterance_id}",
                f"RANK={rank}",
                f"ac={hyp.scores['ac']:.6f}",
                f"lm={hyp.scores['lm']:.6f}",
            ]
            parts += [f"{s}={hyp.scores[s]:.6f}" for s in extras]
            parts.append(f"NW={hyp.num_words}")
            parts.append("::")
            parts.extend(hyp.words)
            lines.append(" ".join(parts))
    return "\n".join(lines) + "\n" if lines else ""


def parse_nbest(text: str) -> list[NBestList]:
    """Read n-best lines grouped by utterance, in file order."""
    lists: dict[str, NBestList] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, tail = line.partition("::")
        if not sep:
            raise LatkitError(f"line {lineno}: missing '::' separator")
        words = tuple(tail.split())
        fields: dict[str, str] = {}
        for tok in head.split():
            key, eq, val = tok.partition("=")
            if not eq:
                raise LatkitError(f"line {lineno}: bad field {tok!r}")
            fields[key] = val
        try:
            utt = fields.pop("UTT")
            rank = int(fields.pop("RANK"))
            declared = int(fields.pop("NW"))
            scores = {k: float(v) for k, v in fields.items()}
            scores["ac"]
            scores["lm"]
        except (KeyError, ValueError) as exc:
            raise LatkitError(f"line {lineno}: malformed n-best entry ({exc})") from exc
        if declared != len(words):
            raise LatkitError(f"line {lineno}: NW={declared} but {len(words)} words")
        nb = lists.setdefault(utt, NBestList(utterance_id=utt))
        if rank != len(nb.hypotheses) + 1:
            raise LatkitError(f"line {lineno}: rank {rank} out of order for {utt!r}")
        nb.hypotheses.append(Hypothesis(utterance_id=utt, words=words, scores=scores))
    return list(lists.values())

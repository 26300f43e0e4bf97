"""Word-lattice data model, text format, and first-pass score operations.

Lattices are DAGs with words and frame times on nodes and scores on arcs.
The text format is line oriented:

    UTT=<id> FRAMESHIFT=<ms> N=<num-nodes> L=<num-arcs>
    I=<node-id> t=<frame> W=<word>
    J=<arc-id> S=<src-node> E=<dst-node> a=<ac> l=<lm> [p=<post>] [m:<stream>=<score>]...

Node ids and arc ids are dense, 0-based. Scores are printed with six
decimals. Anything from ``#`` to the end of a line is a comment. The first
node is the sentence-start sentinel ``<s>`` at frame 0 and the last word is
the sentence-end sentinel ``</s>``; interior nodes may carry the epsilon
word ``!NULL``, which is transparent to n-gram histories.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from .errors import (
    LatticeError,
    LatticeSyntaxError,
    LatticeValidationError,
    MissingPosteriorError,
    NoPathError,
)

START_WORD = "<s>"
END_WORD = "</s>"
NULL_WORD = "!NULL"


def is_scorable_word(word: str) -> bool:
    """True for real vocabulary words: not a sentinel, not epsilon."""
    return word != START_WORD and word != END_WORD and word != NULL_WORD


@dataclass
class Node:
    """A lattice node: one word hypothesis ending at one frame."""

    id: int
    word: str
    time: int
    entries: list[int] = field(default_factory=list)
    exits: list[int] = field(default_factory=list)


@dataclass
class Arc:
    """A transition between nodes carrying per-stream log scores.

    ``ac_score`` and ``lm_score`` come from the first pass. ``post`` is the
    arc posterior under the scaled first-pass scores, filled by
    :func:`compute_arc_posteriors`. ``model_scores`` maps stream name to the
    log probability contributed by a second-pass scorer.
    """

    id: int
    source: int
    dest: int
    ac_score: float
    lm_score: float
    post: float | None = None
    model_scores: dict[str, float] = field(default_factory=dict)


@dataclass
class Lattice:
    utterance_id: str
    frame_shift_ms: float = 10.0
    nodes: list[Node] = field(default_factory=list)
    arcs: list[Arc] = field(default_factory=list)
    start_node_id: int = -1
    end_node_id: int = -1

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_arcs(self) -> int:
        return len(self.arcs)

    @property
    def duration_sec(self) -> float:
        """Audio span in seconds: end-node frame times the frame shift."""
        if self.end_node_id < 0:
            return 0.0
        return self.nodes[self.end_node_id].time * self.frame_shift_ms / 1000.0

    def has_posteriors(self) -> bool:
        return all(a.post is not None for a in self.arcs)


@dataclass
class LatticeStats:
    num_nodes: int
    num_arcs: int
    duration_sec: float
    density: float | None


def build_lattice(
    utterance_id: str,
    nodes: list[tuple[str, int]],
    arcs: list[tuple],
    frame_shift_ms: float = 10.0,
) -> Lattice:
    """Assemble a lattice from (word, time) pairs and arc tuples.

    Arc tuples are ``(source, dest, ac, lm)`` with an optional fifth
    posterior element. Entry/exit lists and start/end nodes are derived.
    The result is not validated; call :func:`validate` if the input is
    untrusted.
    """
    lat = Lattice(utterance_id=utterance_id, frame_shift_ms=frame_shift_ms)
    for i, (word, time) in enumerate(nodes):
        lat.nodes.append(Node(id=i, word=word, time=int(time)))
    for j, spec in enumerate(arcs):
        src, dst, ac, lm = spec[:4]
        post = spec[4] if len(spec) > 4 else None
        lat.arcs.append(
            Arc(id=j, source=src, dest=dst, ac_score=float(ac), lm_score=float(lm), post=post)
        )
    _wire(lat)
    return lat


def _wire(lat: Lattice) -> None:
    """Recompute entry/exit lists and locate the start and end nodes."""
    for node in lat.nodes:
        node.entries = []
        node.exits = []
    n = len(lat.nodes)
    for arc in lat.arcs:
        if 0 <= arc.source < n:
            lat.nodes[arc.source].exits.append(arc.id)
        if 0 <= arc.dest < n:
            lat.nodes[arc.dest].entries.append(arc.id)
    starts = [nd.id for nd in lat.nodes if not nd.entries]
    ends = [nd.id for nd in lat.nodes if not nd.exits]
    lat.start_node_id = starts[0] if len(starts) == 1 else -1
    lat.end_node_id = ends[0] if len(ends) == 1 else -1


def copy_lattice(lat: Lattice) -> Lattice:
    new = Lattice(
        utterance_id=lat.utterance_id,
        frame_shift_ms=lat.frame_shift_ms,
        start_node_id=lat.start_node_id,
        end_node_id=lat.end_node_id,
    )
    new.nodes = [
        Node(id=n.id, word=n.word, time=n.time, entries=list(n.entries), exits=list(n.exits))
        for n in lat.nodes
    ]
    new.arcs = [
        Arc(
            id=a.id,
            source=a.source,
            dest=a.dest,
            ac_score=a.ac_score,
            lm_score=a.lm_score,
            post=a.post,
            model_scores=dict(a.model_scores),
        )
        for a in lat.arcs
    ]
    return new


# ---------------------------------------------------------------------------
# text format


def _parse_fields(tokens: list[str], lineno: int) -> dict[str, str]:
    out: dict[str, str] = {}
    for tok in tokens:
        if "=" not in tok:
            raise LatticeSyntaxError(f"expected key=value field, got {tok!r}", lineno)
        key, val = tok.split("=", 1)
        if key in out:
            raise LatticeSyntaxError(f"duplicate field {key!r}", lineno)
        out[key] = val
    return out


def _field(fields: dict[str, str], key: str, lineno: int) -> str:
    try:
        return fields[key]
    except KeyError:
        raise LatticeSyntaxError(f"missing field {key!r}", lineno) from None


def _to_int(text: str, what: str, lineno: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise LatticeSyntaxError(f"bad integer for {what}: {text!r}", lineno) from None


def _to_float(text: str, what: str, lineno: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise LatticeSyntaxError(f"bad number for {what}: {text!r}", lineno) from None


def parse_lattice(text: str) -> Lattice:
    """Parse one lattice from text. Raises on syntax or invariant violations.

    Serializing the result with :func:`serialize_lattice` and re-parsing
    yields an identical structure.
    """
    header = None
    lat = Lattice(utterance_id="")
    seen_nodes: set[int] = set()
    seen_arcs: set[int] = set()
    declared_nodes = declared_arcs = 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        fields = _parse_fields(tokens, lineno)
        if header is None:
            for key in ("UTT", "FRAMESHIFT", "N", "L"):
                _field(fields, key, lineno)
            lat.utterance_id = fields["UTT"]
            lat.frame_shift_ms = _to_float(fields["FRAMESHIFT"], "FRAMESHIFT", lineno)
            if lat.frame_shift_ms <= 0:
                raise LatticeSyntaxError("FRAMESHIFT must be positive", lineno)
            declared_nodes = _to_int(fields["N"], "N", lineno)
            declared_arcs = _to_int(fields["L"], "L", lineno)
            lat.nodes = [Node(id=i, word="", time=-1) for i in range(declared_nodes)]
            header = fields
        elif "I" in fields:
            nid = _to_int(fields["I"], "I", lineno)
            if not 0 <= nid < declared_nodes:
                raise LatticeSyntaxError(f"node id {nid} outside 0..{declared_nodes - 1}", lineno)
            if nid in seen_nodes:
                raise LatticeSyntaxError(f"duplicate node id {nid}", lineno)
            seen_nodes.add(nid)
            t = _to_int(_field(fields, "t", lineno), "t", lineno)
            if t < 0:
                raise LatticeSyntaxError(f"negative frame time {t}", lineno)
            word = _field(fields, "W", lineno)
            lat.nodes[nid].word = word
            lat.nodes[nid].time = t
        elif "J" in fields:
            jid = _to_int(fields["J"], "J", lineno)
            if not 0 <= jid < declared_arcs:
                raise LatticeSyntaxError(f"arc id {jid} outside 0..{declared_arcs - 1}", lineno)
            if jid in seen_arcs:
                raise LatticeSyntaxError(f"duplicate arc id {jid}", lineno)
            seen_arcs.add(jid)
            arc = Arc(
                id=jid,
                source=_to_int(_field(fields, "S", lineno), "S", lineno),
                dest=_to_int(_field(fields, "E", lineno), "E", lineno),
                ac_score=_to_float(_field(fields, "a", lineno), "a", lineno),
                lm_score=_to_float(_field(fields, "l", lineno), "l", lineno),
            )
            if "p" in fields:
                arc.post = _to_float(fields["p"], "p", lineno)
            for key, val in fields.items():
                if key.startswith("m:"):
                    stream = key[2:]
                    if not stream:
                        raise LatticeSyntaxError("empty stream name in m: field", lineno)
                    arc.model_scores[stream] = _to_float(val, f"m:{stream}", lineno)
                elif key not in ("J", "S", "E", "a", "l", "p"):
                    raise LatticeSyntaxError(f"unknown arc field {key!r}", lineno)
            lat.arcs.append(arc)
        else:
            raise LatticeSyntaxError("expected a node (I=) or arc (J=) line", lineno)

    if header is None:
        raise LatticeSyntaxError("empty input: no header line found", None)
    if len(seen_nodes) != declared_nodes:
        missing = sorted(set(range(declared_nodes)) - seen_nodes)
        raise LatticeSyntaxError(f"header declares N={declared_nodes} but nodes {missing} are missing", None)
    if len(lat.arcs) != declared_arcs:
        raise LatticeSyntaxError(
            f"header declares L={declared_arcs} but {len(lat.arcs)} arc lines found", None
        )
    lat.arcs.sort(key=lambda a: a.id)
    _wire(lat)
    violations = validate(lat)
    if violations:
        raise LatticeValidationError(violations)
    return lat


def serialize_lattice(lat: Lattice) -> str:
    """Render a lattice in canonical form: header, nodes, then arcs, ascending ids."""
    out = [f"UTT={lat.utterance_id} FRAMESHIFT={lat.frame_shift_ms:g} N={lat.num_nodes} L={lat.num_arcs}"]
    for node in lat.nodes:
        out.append(f"I={node.id} t={node.time} W={node.word}")
    for arc in lat.arcs:
        parts = [
            f"J={arc.id}",
            f"S={arc.source}",
            f"E={arc.dest}",
            f"a={arc.ac_score:.6f}",
            f"l={arc.lm_score:.6f}",
        ]
        if arc.post is not None:
            parts.append(f"p={arc.post:.6f}")
        for stream in sorted(arc.model_scores):
            parts.append(f"m:{stream}={arc.model_scores[stream]:.6f}")
        out.append(" ".join(parts))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# validation and ordering


def validate(lat: Lattice) -> list[str]:
    """Check every structural invariant; return human-readable violations.

    An empty list means the lattice is valid. The checks cover id density,
    arc endpoint sanity, unique start/end nodes with the right sentinel
    words, time monotonicity along arcs, acyclicity, full connectivity
    (every node on some complete path), posterior range, and score
    finiteness.
    """
    v: list[str] = []
    n = len(lat.nodes)
    if n == 0:
        return ["lattice has no nodes"]

    for i, node in enumerate(lat.nodes):
        if node.id != i:
            v.append(f"node ids not dense at position {i} (found {node.id})")
        if node.time < 0:
            v.append(f"node {i} has negative time {node.time}")

    ok_arcs = []
    for j, arc in enumerate(lat.arcs):
        if arc.id != j:
            v.append(f"arc ids not dense at position {j} (found {arc.id})")
        if not (0 <= arc.source < n and 0 <= arc.dest < n):
            v.append(f"arc {arc.id} references missing node {arc.source if not 0 <= arc.source < n else arc.dest}")
            continue
        if arc.source == arc.dest:
            v.append(f"arc {arc.id} is a self loop on node {arc.source}")
            continue
        ok_arcs.append(arc)
        for stream, score in (("a", arc.ac_score), ("l", arc.lm_score)):
            if not math.isfinite(score):
                v.append(f"arc {arc.id} has non-finite {stream} score")
        for stream, score in arc.model_scores.items():
            if not math.isfinite(score):
                v.append(f"arc {arc.id} has non-finite m:{stream} score")
        if arc.post is not None and not (0.0 <= arc.post <= 1.0):
            v.append(f"arc {arc.id} posterior {arc.post:.6f} outside [0,1]")
        src, dst = lat.nodes[arc.source], lat.nodes[arc.dest]
        if dst.time < src.time:
            v.append(
                f"arc {arc.id} non-monotonic time (node {src.id} t={src.time} -> node {dst.id} t={dst.time})"
            )

    entries = [[] for _ in range(n)]
    exits = [[] for _ in range(n)]
    for arc in ok_arcs:
        exits[arc.source].append(arc.id)
        entries[arc.dest].append(arc.id)
    for node in lat.nodes:
        if 0 <= node.id < n:
            if sorted(node.entries) != sorted(entries[node.id]):
                v.append(f"node {node.id} entry list inconsistent with arcs")
            if sorted(node.exits) != sorted(exits[node.id]):
                v.append(f"node {node.id} exit list inconsistent with arcs")

    starts = [i for i in range(n) if not entries[i]]
    ends = [i for i in range(n) if not exits[i]]
    if len(starts) == 0:
        v.append("no start node")
    elif len(starts) > 1:
        v.append("multiple start nodes: " + ",".join(map(str, starts)))
    if len(ends) == 0:
        v.append("no end node")
    elif len(ends) > 1:
        v.append("multiple end nodes: " + ",".join(map(str, ends)))

    start = starts[0] if len(starts) == 1 else None
    end = ends[0] if len(ends) == 1 else None
    if start is not None:
        nd = lat.nodes[start]
        if nd.word != START_WORD:
            v.append(f"start node {start} carries word {nd.word!r}, expected {START_WORD!r}")
        if nd.time != 0:
            v.append(f"start node {start} has time {nd.time}, expected 0")
    if end is not None and lat.nodes[end].word != END_WORD:
        v.append(f"end node {end} carries word {lat.nodes[end].word!r}, expected {END_WORD!r}")
    for node in lat.nodes:
        if node.id in (start, end):
            continue
        if node.word in (START_WORD, END_WORD):
            v.append(f"node {node.id} interior node carries sentinel word {node.word!r}")

    # Double Kahn peel: forward survivors are reachable from a cycle,
    # reverse survivors can reach one; the intersection is the cycles.
    def peel(degrees, follow, endpoint):
        deg = list(degrees)
        queue = [i for i in range(n) if deg[i] == 0]
        alive = n
        while queue:
            i = queue.pop()
            alive -= 1
            for j in follow[i]:
                d = endpoint(lat.arcs[j])
                deg[d] -= 1
                if deg[d] == 0:
                    queue.append(d)
        return [i for i in range(n) if deg[i] > 0], alive

    fwd_stuck, unpeeled = peel([len(e) for e in entries], exits, lambda a: a.dest)
    if unpeeled:
        bwd_stuck, _ = peel([len(e) for e in exits], entries, lambda a: a.source)
        cyclic = sorted(set(fwd_stuck) & set(bwd_stuck))
        v.append("cycle involving nodes " + ",".join(map(str, cyclic)))

    # Reachability against the designated endpoints. When in/out degrees do
    # not single out a start or end, fall back to the sentinel words so that
    # islands and dead ends are still reported individually.
    def designate(by_degree, word):
        if by_degree is not None:
            return by_degree
        named = [nd.id for nd in lat.nodes if nd.word == word]
        return named[0] if len(named) == 1 else None

    des_start = designate(start, START_WORD)
    des_end = designate(end, END_WORD)
    if des_start is not None and des_end is not None and not unpeeled:
        fwd = _reach(n, exits, lat.arcs, des_start, forward=True)
        bwd = _reach(n, entries, lat.arcs, des_end, forward=False)
        for i in range(n):
            if not (fwd[i] and bwd[i]):
                v.append(f"node {i} not on any complete path")
    return v


def _reach(n: int, adj: list[list[int]], arcs: list[Arc], origin: int, forward: bool) -> list[bool]:
    seen = [False] * n
    seen[origin] = True
    stack = [origin]
    while stack:
        i = stack.pop()
        for j in adj[i]:
            nxt = arcs[j].dest if forward else arcs[j].source
            if not seen[nxt]:
                seen[nxt] = True
                stack.append(nxt)
    return seen


def topological_order(lat: Lattice) -> list[int]:
    """Node ids in an order where every arc points forward.

    Among simultaneously available nodes the one with the smaller
    (time, id) comes first, so the order is unique. Raises on cycles.
    """
    n = len(lat.nodes)
    indeg = [0] * n
    for arc in lat.arcs:
        indeg[arc.dest] += 1
    heap = [(lat.nodes[i].time, i) for i in range(n) if indeg[i] == 0]
    heapq.heapify(heap)
    order: list[int] = []
    while heap:
        _, i = heapq.heappop(heap)
        order.append(i)
        for j in lat.nodes[i].exits:
            d = lat.arcs[j].dest
            indeg[d] -= 1
            if indeg[d] == 0:
                heapq.heappush(heap, (lat.nodes[d].time, d))
    if len(order) != n:
        cyclic = sorted(i for i in range(n) if indeg[i] > 0)
        raise LatticeError("cycle involving nodes " + ",".join(map(str, cyclic)))
    return order


# ---------------------------------------------------------------------------
# posteriors, pruning, stats


def _logadd(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


def compute_arc_posteriors(lat: Lattice, ac_scale: float = 1.0, lm_scale: float = 1.0) -> Lattice:
    """Forward-backward arc posteriors under scaled first-pass scores.

    Returns a new lattice whose arcs carry ``post`` values. Posteriors of
    the arcs crossing any start/end cut sum to one; a single-path lattice
    gets 1.0 everywhere. Raises on empty lattices and on total-probability
    underflow, which signals badly scaled scores.
    """
    if not lat.nodes or not lat.arcs:
        raise LatticeError("cannot compute posteriors of an empty lattice")
    if lat.start_node_id < 0 or lat.end_node_id < 0:
        raise LatticeError("lattice lacks a unique start or end node")
    order = topological_order(lat)

    def weight(arc: Arc) -> float:
        return ac_scale * arc.ac_score + lm_scale * arc.lm_score

    fwd = [-math.inf] * lat.num_nodes
    fwd[lat.start_node_id] = 0.0
    for i in order:
        if fwd[i] == -math.inf:
            continue
        for j in lat.nodes[i].exits:
            arc = lat.arcs[j]
            fwd[arc.dest] = _logadd(fwd[arc.dest], fwd[i] + weight(arc))

    bwd = [-math.inf] * lat.num_nodes
    bwd[lat.end_node_id] = 0.0
    for i in reversed(order):
        if bwd[i] == -math.inf:
            continue
        for j in lat.nodes[i].entries:
            arc = lat.arcs[j]
            bwd[arc.source] = _logadd(bwd[arc.source], weight(arc) + bwd[i])

    total = fwd[lat.end_node_id]
    if not math.isfinite(total):
        raise LatticeError("total probability underflow; rescale the lattice scores")

    new = copy_lattice(lat)
    for arc in new.arcs:
        logp = fwd[arc.source] + weight(arc) + bwd[arc.dest] - total
        arc.post = min(1.0, math.exp(min(logp, 0.0)))
    return new


def _viterbi(lat: Lattice, order: list[int], ac_scale: float, lm_scale: float):
    """Best-path scores into and out of every node, plus the best-path arc set."""
    fwd = [-math.inf] * lat.num_nodes
    fwd_choice = [-1] * lat.num_nodes
    fwd[lat.start_node_id] = 0.0
    for i in order:
        if fwd[i] == -math.inf:
            continue
        for j in lat.nodes[i].exits:
            arc = lat.arcs[j]
            cand = fwd[i] + ac_scale * arc.ac_score + lm_scale * arc.lm_score
            # ties resolved toward the lower source node id, then lower arc id
            if cand > fwd[arc.dest] or (
                cand == fwd[arc.dest]
                and fwd_choice[arc.dest] >= 0
                and (i, j) < (lat.arcs[fwd_choice[arc.dest]].source, fwd_choice[arc.dest])
            ):
                fwd[arc.dest] = cand
                fwd_choice[arc.dest] = j
    bwd = [-math.inf] * lat.num_nodes
    bwd[lat.end_node_id] = 0.0
    for i in reversed(order):
        if bwd[i] == -math.inf:
            continue
        for j in lat.nodes[i].entries:
            arc = lat.arcs[j]
            cand = ac_scale * arc.ac_score + lm_scale * arc.lm_score + bwd[i]
            if cand > bwd[arc.source]:
                bwd[arc.source] = cand
    best_arcs = set()
    node = lat.end_node_id
    while node != lat.start_node_id and fwd_choice[node] >= 0:
        j = fwd_choice[node]
        best_arcs.add(j)
        node = lat.arcs[j].source
    return fwd, bwd, best_arcs


def prune(
    lat: Lattice,
    beam: float = math.inf,
    max_density: float = math.inf,
    ac_scale: float = 1.0,
    lm_scale: float = 1.0,
) -> Lattice:
    """Beam-prune then density-cap a lattice.

    First every arc whose best-through-path score falls more than ``beam``
    below the global best is dropped. Then, while the density (arcs per
    second) exceeds ``max_density``, the lowest-posterior arcs are dropped
    (ties: the higher arc id goes first). The Viterbi-best path under the
    given scales always survives. Nodes left off every complete path are
    removed and ids are renumbered densely, preserving relative order.
    """
    if beam == math.inf and max_density == math.inf:
        return copy_lattice(lat)
    if beam < 0:
        raise ValueError("beam must be non-negative")
    order = topological_order(lat)
    fwd, bwd, protected = _viterbi(lat, order, ac_scale, lm_scale)
    global_best = fwd[lat.end_node_id]
    if global_best == -math.inf:
        raise NoPathError(f"lattice {lat.utterance_id} has no complete path")

    alive = set()
    for arc in lat.arcs:
        through = fwd[arc.source] + ac_scale * arc.ac_score + lm_scale * arc.lm_score + bwd[arc.dest]
        if arc.id in protected or through >= global_best - beam:
            alive.add(arc.id)

    duration = lat.duration_sec
    if max_density != math.inf and duration > 0:
        limit = max_density * duration
        if any(lat.arcs[j].post is None for j in alive):
            raise MissingPosteriorError(
                "density pruning needs arc posteriors; run compute_arc_posteriors first"
            )
        removable = sorted(
            (j for j in alive if j not in protected),
            key=lambda j: (lat.arcs[j].post, -j),
        )
        k = 0
        while len(alive) > limit and k < len(removable):
            alive.discard(removable[k])
            k += 1

    return _subgraph(lat, alive)


def _subgraph(lat: Lattice, arc_ids: set[int]) -> Lattice:
    """Restrict to the given arcs, keep nodes on complete paths, renumber."""
    n = len(lat.nodes)
    exits: list[list[int]] = [[] for _ in range(n)]
    entries: list[list[int]] = [[] for _ in range(n)]
    for j in sorted(arc_ids):
        arc = lat.arcs[j]
        exits[arc.source].append(j)
        entries[arc.dest].append(j)
    fwd = _reach(n, exits, lat.arcs, lat.start_node_id, forward=True)
    bwd = _reach(n, entries, lat.arcs, lat.end_node_id, forward=False)
    keep_nodes = [i for i in range(n) if fwd[i] and bwd[i]]
    remap = {old: new for new, old in enumerate(keep_nodes)}
    new = Lattice(utterance_id=lat.utterance_id, frame_shift_ms=lat.frame_shift_ms)
    for old in keep_nodes:
        nd = lat.nodes[old]
        new.nodes.append(Node(id=remap[old], word=nd.word, time=nd.time))
    next_arc = 0
    for j in sorted(arc_ids):
        arc = lat.arcs[j]
        if arc.source in remap and arc.dest in remap:
            new.arcs.append(
                Arc(
                    id=next_arc,
                    source=remap[arc.source],
                    dest=remap[arc.dest],
                    ac_score=arc.ac_score,
                    lm_score=arc.lm_score,
                    post=arc.post,
                    model_scores=dict(arc.model_scores),
                )
            )
            next_arc += 1
    _wire(new)
    return new


def stats(lat: Lattice) -> LatticeStats:
    """Size and density summary. Density is arcs per second of audio;
    a zero-duration lattice has undefined density, reported as None."""
    duration = lat.duration_sec
    density = lat.num_arcs / duration if duration > 0 else None
    return LatticeStats(
        num_nodes=lat.num_nodes,
        num_arcs=lat.num_arcs,
        duration_sec=duration,
        density=density,
    )

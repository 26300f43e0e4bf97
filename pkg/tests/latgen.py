"""Random valid-lattice generator for property tests.

Nodes come out in topological id order with non-decreasing times and all
arcs pointing id-forward, so every generated lattice satisfies the full
validator by construction. Scores are pre-rounded to the serialized
precision, which makes parse(serialize(L)) == L exact.
"""

import random

from latkit import build_lattice

WORDS = ("the", "a", "cat", "sat", "on", "mat", "dog", "ran", "to", "see", "it", "now")


def random_lattice(
    rng: random.Random,
    max_interior: int = 10,
    n_interior: int | None = None,
    extra_arcs: int | None = None,
    null_prob: float = 0.0,
    allow_parallel: bool = False,
    unique_times: bool = False,
    utterance_id: str = "rand",
    vocab: tuple = WORDS,
):
    if n_interior is None:
        n_interior = rng.randint(0, max_interior)
    words = ["<s>"]
    for _ in range(n_interior):
        if null_prob and rng.random() < null_prob:
            words.append("!NULL")
        else:
            words.append(rng.choice(vocab))
    words.append("</s>")

    if unique_times:
        times = sorted(rng.sample(range(1, 301), n_interior))
    else:
        times = sorted(rng.randint(1, 300) for _ in range(n_interior))
    times = [0] + times + [max(times, default=0) + rng.randint(1, 50)]
    nodes = list(zip(words, times))
    end_id = n_interior + 1

    def score():
        return (round(rng.uniform(-30.0, -0.5), 6), round(rng.uniform(-5.0, -0.1), 6))

    arcs = []
    pairs = set()

    def add(src, dst):
        if not allow_parallel and (src, dst) in pairs:
            return
        pairs.add((src, dst))
        ac, lm = score()
        arcs.append((src, dst, ac, lm))

    # spine: every interior node reachable from some earlier node
    for i in range(1, end_id):
        add(rng.randint(0, i - 1), i)
    # every non-end node must leave somewhere
    for i in range(end_id):
        if not any(a[0] == i for a in arcs):
            add(i, rng.randint(i + 1, end_id))
    if not any(a[1] == end_id for a in arcs):
        add(rng.randint(0, end_id - 1), end_id)

    if extra_arcs is None:
        extra_arcs = rng.randint(0, max(1, n_interior))
    for _ in range(extra_arcs):
        src = rng.randint(0, end_id - 1)
        dst = rng.randint(src + 1, end_id)
        add(src, dst)

    return build_lattice(utterance_id, nodes, arcs)


def random_token_pair(rng: random.Random, alphabet=("a", "b", "c", "d", "e")):
    """A reference and a mutated hypothesis for edit-distance checks."""
    ref = [rng.choice(alphabet) for _ in range(rng.randint(0, 12))]
    hyp = []
    for tok in ref:
        r = rng.random()
        if r < 0.12:
            continue  # deletion
        if r < 0.24:
            hyp.append(rng.choice(alphabet))  # substitution
        else:
            hyp.append(tok)
        if rng.random() < 0.1:
            hyp.append(rng.choice(alphabet))  # insertion
    return ref, hyp

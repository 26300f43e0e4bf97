import random
from collections import Counter

import pytest

from latkit import expand_ngram, topological_order, validate
from conftest import make_branch_lattice, make_chain
from latgen import random_lattice
from oracles import enumerate_paths, path_first_pass_totals, scorable_words


def history_of(lat, node_id, n):
    """Recompute a node's clustering history by walking entry arcs backward.

    In an expanded lattice each node has a single history, so following any
    one entry arc is enough; epsilon and sentinel words are skipped.
    """
    words = []
    cur = node_id
    while True:
        node = lat.nodes[cur]
        if node.word not in ("<s>", "</s>", "!NULL"):
            words.append(node.word)
        if not node.entries:
            break
        cur = lat.arcs[node.entries[0]].source
    words.reverse()
    return tuple(words[-(n - 1):]) if n > 1 else ()


def path_multiset(lat):
    rows = []
    for words, _, arcs in enumerate_paths(lat):
        ac, lm = path_first_pass_totals(lat, arcs)
        rows.append((scorable_words(words), round(ac, 9), round(lm, 9)))
    return Counter(rows)


def copies_by_word(original, expanded):
    count = Counter(nd.word for nd in expanded.nodes)
    base = Counter(nd.word for nd in original.nodes)
    return {w: count[w] for w in base}


def test_branch_fixture_split_and_merge():
    lat = make_branch_lattice()
    out = expand_ngram(lat, 3)
    assert validate(out) == []
    words = Counter(nd.word for nd in out.nodes)
    # "cat" is reachable under histories (the,cat) and (a,cat): it splits.
    assert words["cat"] == 2
    # both "cat" copies lead into the same bigram history ending at "sat",
    # so "sat" and "on" stay single
    assert words["sat"] == 1
    assert words["on"] == 1
    # "mat" is reachable under (a,mat) and (the,mat): it splits again
    assert words["mat"] == 2
    assert words["</s>"] == 1
    assert out.num_nodes == lat.num_nodes + 2


def test_branch_fixture_histories_unique_per_original_word():
    out = expand_ngram(make_branch_lattice(), 3)
    hists = [history_of(out, nd.id, 3) for nd in out.nodes]
    by_node = Counter(zip((nd.word for nd in out.nodes), hists))
    assert max(by_node.values()) == 1


def test_chain_isomorphic_any_order(chain):
    for n in (2, 3, 4, 7):
        out = expand_ngram(chain, n)
        assert out.num_nodes == chain.num_nodes
        assert out.num_arcs == chain.num_arcs
        assert [nd.word for nd in out.nodes] == [nd.word for nd in chain.nodes]


def test_expansion_preserves_path_multiset():
    rng = random.Random(17)
    for _ in range(40):
        lat = random_lattice(rng, max_interior=8, null_prob=0.15, allow_parallel=True)
        for n in (2, 3, 4):
            out = expand_ngram(lat, n)
            assert validate(out) == []
            assert path_multiset(out) == path_multiset(lat)


def test_expanded_histories_unique():
    # unique node times make (word, time) identify the originating node, so
    # per-original-node history uniqueness is directly observable
    rng = random.Random(19)
    for _ in range(30):
        lat = random_lattice(rng, max_interior=8, null_prob=0.1, unique_times=True)
        for n in (2, 3, 4):
            out = expand_ngram(lat, n)
            seen = Counter()
            for nd in out.nodes:
                if nd.id == out.end_node_id:
                    continue
                seen[(nd.word, nd.time, history_of(out, nd.id, n))] += 1
            assert max(seen.values()) == 1


def test_all_entry_arcs_agree_on_history():
    rng = random.Random(21)
    for _ in range(20):
        lat = random_lattice(rng, max_interior=7, null_prob=0.1)
        out = expand_ngram(lat, 3)
        for nd in out.nodes:
            if nd.id in (out.start_node_id, out.end_node_id):
                continue
            hists = set()
            for j in nd.entries:
                src = out.arcs[j].source
                h = history_of(out, src, 3)
                if nd.word not in ("<s>", "</s>", "!NULL"):
                    h = (h + (nd.word,))[-2:]
                hists.add(h)
            assert len(hists) == 1


def test_expand_second_application_isomorphic():
    rng = random.Random(27)
    for _ in range(15):
        lat = random_lattice(rng, max_interior=7)
        once = expand_ngram(lat, 3)
        twice = expand_ngram(once, 3)
        assert twice.num_nodes == once.num_nodes
        assert twice.num_arcs == once.num_arcs
        assert path_multiset(twice) == path_multiset(once)


def test_expand_rejects_bad_order(chain):
    with pytest.raises(ValueError):
        expand_ngram(chain, 1)


def test_expanded_output_is_topologically_ordered():
    rng = random.Random(33)
    for _ in range(10):
        out = expand_ngram(random_lattice(rng, max_interior=8), 3)
        order = topological_order(out)
        pos = {nid: k for k, nid in enumerate(order)}
        for arc in out.arcs:
            assert pos[arc.source] < pos[arc.dest]

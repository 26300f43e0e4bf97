import random

import pytest

from latkit import (
    Coefficients,
    Hypothesis,
    LatkitError,
    MissingStreamError,
    MockTimeScorer,
    NBestList,
    RescoreConfig,
    best_path,
    build_lattice,
    compute_arc_posteriors,
    extract_nbest,
    format_nbest,
    parse_nbest,
    rescore_lattice,
    rescore_nbest,
    select_best,
    train_ngram,
)
from latgen import random_lattice
from oracles import brute_nbest, combined_total, enumerate_paths, scorable_words


def hyp(words, ac, lm, utt="u", **extra):
    scores = {"ac": ac, "lm": lm, **extra}
    return Hypothesis(utterance_id=utt, words=tuple(words), scores=scores)


def test_nbest_matches_bruteforce():
    rng = random.Random(71)
    sc = MockTimeScorer()
    coeffs = Coefficients(gamma=0.9, stream_weights={"mock-time": 0.5}, kappa=-0.2)
    for _ in range(25):
        lat = compute_arc_posteriors(
            random_lattice(rng, max_interior=8, null_prob=0.1, allow_parallel=True)
        )
        lat = rescore_lattice(lat, sc, RescoreConfig(ngram=3))
        got = extract_nbest(lat, 50, coeffs)
        want = brute_nbest(lat, 50, coeffs, extra_streams=("mock-time",))
        assert [h.words for h in got] == [w for w, _ in want]
        for h, (_, scores) in zip(got, want):
            for key in scores:
                assert h.scores[key] == pytest.approx(scores[key], abs=1e-9)


def test_nbest_scores_non_increasing():
    rng = random.Random(72)
    for _ in range(10):
        lat = compute_arc_posteriors(random_lattice(rng, max_interior=9))
        hyps = extract_nbest(lat, None, Coefficients()).hypotheses
        totals = [combined_total(h.scores, h.num_words, Coefficients()) for h in hyps]
        assert totals == sorted(totals, reverse=True)


def test_prefix_property():
    rng = random.Random(73)
    lat = compute_arc_posteriors(random_lattice(rng, max_interior=9, extra_arcs=10))
    full = extract_nbest(lat, None).hypotheses
    for n in (1, 5, 20, 100):
        part = extract_nbest(lat, n).hypotheses
        assert part == full[: min(n, len(full))]


def test_none_enumerates_all_distinct():
    rng = random.Random(74)
    for _ in range(10):
        lat = random_lattice(rng, max_interior=8, extra_arcs=6, allow_parallel=True)
        paths = list(enumerate_paths(lat))
        distinct = {tuple(scorable_words(words)) for words, _, _ in paths}
        assert len(extract_nbest(lat, None)) == len(distinct)
        assert len(extract_nbest(lat, None, dedup=False)) == len(paths)


def make_parallel_pair():
    return build_lattice(
        "par",
        [("<s>", 0), ("w", 10), ("</s>", 20)],
        [(0, 1, -1.0, -0.5), (0, 1, -5.0, -0.5), (1, 2, -2.0, -0.5)],
    )


def test_dedup_keeps_best_scoring_path():
    nb = extract_nbest(make_parallel_pair(), None)
    assert len(nb) == 1
    assert nb.hypotheses[0].words == ("w",)
    assert nb.hypotheses[0].scores["ac"] == pytest.approx(-3.0)


def test_keep_duplicates_lists_both_paths():
    nb = extract_nbest(make_parallel_pair(), None, dedup=False)
    assert [h.words for h in nb] == [("w",), ("w",)]
    assert [h.scores["ac"] for h in nb] == [pytest.approx(-3.0), pytest.approx(-7.0)]


def test_nbest_requires_weighted_streams(diamond_post):
    with pytest.raises(MissingStreamError):
        extract_nbest(diamond_post, 5, Coefficients(stream_weights={"ghost": 1.0}))


def test_nbest_n_validation(diamond_post):
    with pytest.raises(ValueError):
        extract_nbest(diamond_post, 0)


def test_rescore_nbest_totals_match_isolated_scoring(fig_branch):
    nb = extract_nbest(fig_branch, None)
    sc = train_ngram("the cat sat on the mat\na cat sat on a mat", order=2)
    out = rescore_nbest(nb, sc)
    assert [h.words for h in out] == [h.words for h in nb]
    for before, after in zip(nb, out):
        assert "ngram" not in before.scores
        want = sc.score_sequence("branchy", list(after.words))
        assert after.scores["ngram"] == pytest.approx(want, abs=1e-12)


def test_rescore_nbest_no_state_leakage():
    # whole-sentence scoring of one hypothesis must not depend on which
    # hypotheses were scored before it
    sc = MockTimeScorer()
    first = hyp(["alpha", "beta"], -1.0, -1.0)
    second = hyp(["gamma"], -2.0, -1.0)
    both = rescore_nbest(NBestList("u", [first, second]), sc)
    alone = rescore_nbest(NBestList("u", [second]), sc)
    assert both.hypotheses[1].scores["mock-time"] == alone.hypotheses[0].scores["mock-time"]


def test_rescore_nbest_length_normalization():
    sc = MockTimeScorer()
    nb = NBestList("u", [hyp(["a", "b", "c"], -1.0, -1.0)])
    plain = rescore_nbest(nb, sc).hypotheses[0].scores["mock-time"]
    normed = rescore_nbest(nb, sc, length_normalize=True).hypotheses[0].scores["mock-time"]
    assert normed == pytest.approx(plain / 4)


def test_rescore_nbest_stream_name_override():
    out = rescore_nbest(NBestList("u", [hyp(["a"], -1.0, -1.0)]), MockTimeScorer(), "tfm")
    assert "tfm" in out.hypotheses[0].scores


def test_select_best_hand_computed():
    coeffs = Coefficients(gamma=2.0, stream_weights={"rnn": 0.5}, kappa=-1.0)
    a = hyp(["x", "y"], -4.0, -1.0, rnn=-2.0)
    b = hyp(["x"], -5.0, -0.5, rnn=-1.0)
    score_a = -4.0 + 2.0 * -1.0 + 0.5 * -2.0 + -1.0 * 2
    score_b = -5.0 + 2.0 * -0.5 + 0.5 * -1.0 + -1.0 * 1
    assert score_b > score_a
    assert select_best([a, b], coeffs) is b
    assert combined_total(a.scores, a.num_words, coeffs) == pytest.approx(score_a)


def test_select_best_tie_lexicographic():
    a = hyp(["zebra"], -1.0, -1.0)
    b = hyp(["aardvark"], -1.0, -1.0)
    assert select_best([a, b], Coefficients()).words == ("aardvark",)


def test_select_best_scaling_invariance():
    rng = random.Random(75)
    for _ in range(100):
        hyps = [
            hyp(
                [rng.choice("abcdef") for _ in range(rng.randint(1, 6))],
                rng.uniform(-30, -1),
                rng.uniform(-10, -1),
                rnn=rng.uniform(-20, -1),
            )
            for _ in range(rng.randint(1, 8))
        ]
        coeffs = Coefficients(
            gamma=rng.uniform(0.1, 2.0),
            stream_weights={"rnn": rng.uniform(0.1, 2.0)},
            kappa=rng.uniform(-1.0, 1.0),
        )
        factor = rng.uniform(0.25, 4.0)
        assert select_best(hyps, coeffs) is select_best(hyps, coeffs.scaled(factor))


def test_select_best_missing_stream():
    with pytest.raises(MissingStreamError):
        select_best([hyp(["a"], -1.0, -1.0)], Coefficients(stream_weights={"rnn": 1.0}))


def test_select_best_empty():
    with pytest.raises(LatkitError):
        select_best([], Coefficients())


def test_format_parse_roundtrip(fig_branch, diamond):
    sc = MockTimeScorer()
    lists = [
        rescore_nbest(extract_nbest(compute_arc_posteriors(lat), 5), sc)
        for lat in (fig_branch, diamond)
    ]
    text = format_nbest(lists)
    assert "UTT=branchy RANK=1" in text
    assert "::" in text
    back = parse_nbest(text)
    assert [nb.utterance_id for nb in back] == ["branchy", "diamond"]
    for orig, rt in zip(lists, back):
        assert [h.words for h in rt] == [h.words for h in orig]
        for a, b in zip(orig, rt):
            for key, val in a.scores.items():
                assert b.scores[key] == pytest.approx(val, abs=5e-7)


def test_parse_nbest_errors():
    with pytest.raises(LatkitError, match="separator"):
        parse_nbest("UTT=u RANK=1 ac=-1 lm=-1 NW=1 w\n")
    with pytest.raises(LatkitError, match="NW=2 but 1"):
        parse_nbest("UTT=u RANK=1 ac=-1 lm=-1 NW=2 :: w\n")
    with pytest.raises(LatkitError, match="rank"):
        parse_nbest("UTT=u RANK=2 ac=-1 lm=-1 NW=1 :: w\n")
    with pytest.raises(LatkitError, match="malformed"):
        parse_nbest("UTT=u RANK=1 lm=-1 NW=1 :: w\n")


def test_parse_nbest_comments_and_blanks():
    text = "# header\n\nUTT=u RANK=1 ac=-1.0 lm=-1.0 NW=1 :: w  # trailing\n"
    (nb,) = parse_nbest(text)
    assert nb.hypotheses[0].words == ("w",)


def test_nbest_selection_agrees_with_lattice_best_path():
    # when every distinct sequence is extracted and the lattice rescorer is
    # given full-length histories, both routes rank the same stream totals
    rng = random.Random(76)
    sc = train_ngram("the cat sat on a mat\nsee a dog run\nnow the dog ran to it", order=3)
    coeffs = Coefficients(gamma=0.7, stream_weights={"ngram": 0.8}, kappa=-0.4)
    for _ in range(15):
        lat = compute_arc_posteriors(random_lattice(rng, max_interior=7))
        via_lattice = best_path(
            rescore_lattice(lat, sc, RescoreConfig(ngram=32)), coeffs
        )
        via_nbest = select_best(rescore_nbest(extract_nbest(lat, None), sc), coeffs)
        assert via_lattice.words == via_nbest.words

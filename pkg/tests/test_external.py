import io
import json
import sys

import pytest

from latkit import (
    Coefficients,
    ExternalScorer,
    ExternalScorerError,
    RescoreConfig,
    best_path,
    compute_arc_posteriors,
    rescore_lattice,
    serialize_lattice,
    train_ngram,
)
from latkit.scorers import ConstantScorer
from latkit.stub import handle, serve

STUB = [sys.executable, "-m", "latkit.stub"]


def test_handle_hello():
    reply = handle(ConstantScorer(-2.0), {"op": "hello"})
    assert reply == {"name": "constant", "time_sensitive": False}


def test_handle_score_and_eos():
    sc = train_ngram("a b\na b\na c", order=2)
    word = handle(sc, {"op": "score", "utt": "u", "history": ["a"], "word": "b", "time": 5})
    state = sc.score_word(sc.begin_utterance("u"), "a").state
    assert word["logprob"] == pytest.approx(sc.score_word(state, "b").logprob)
    eos = handle(sc, {"op": "score", "utt": "u", "history": ["a", "b"], "word": "</s>"})
    two = sc.score_word(state, "b").state
    assert eos["logprob"] == pytest.approx(sc.finish(two))


def test_handle_sequence():
    sc = ConstantScorer(-1.5)
    reply = handle(sc, {"op": "sequence", "utt": "u", "words": ["x", "y", "z"]})
    assert reply["logprob"] == pytest.approx(-6.0)  # three words plus the end token


def test_handle_unknown_op():
    assert "error" in handle(ConstantScorer(-1.0), {"op": "frobnicate"})


def test_serve_emits_compact_lines():
    requests = "\n".join(
        [
            json.dumps({"op": "hello"}),
            "",
            json.dumps({"op": "score", "utt": "u", "history": [], "word": "w", "time": 0}),
            "this is not json",
            json.dumps({"op": "sequence", "utt": "u", "words": ["w"]}),
        ]
    )
    out = io.StringIO()
    serve(ConstantScorer(-2.0), stdin=io.StringIO(requests + "\n"), stdout=out)
    lines = out.getvalue().splitlines()
    assert lines[0] == '{"name":"constant","time_sensitive":false}'
    assert lines[1] == '{"logprob":-2.0}'
    assert lines[2].startswith('{"error":')
    assert lines[3] == '{"logprob":-4.0}'
    assert len(lines) == 4  # the blank input line produces no reply


def test_external_handshake_and_scoring():
    with ExternalScorer(STUB + ["--scorer", "constant:-2.0"]) as sc:
        assert sc.name == "constant"
        assert sc.time_sensitive is False
        state = sc.begin_utterance("u")
        step = sc.score_word(state, "hello", 10)
        assert step.logprob == pytest.approx(-2.0)
        assert sc.finish(step.state) == pytest.approx(-2.0)
        assert sc.score_sequence("u", ["a", "b", "c"]) == pytest.approx(-8.0)


def test_external_matches_builtin_ngram(tmp_path):
    inner = train_ngram("the cat sat\na cat ran\nthe dog sat", order=3)
    model = tmp_path / "model.json"
    inner.save(str(model))
    with ExternalScorer(STUB + ["--scorer", f"ngram:{model}"]) as sc:
        assert sc.name == "ngram"
        state_b = inner.begin_utterance("u")
        state_e = sc.begin_utterance("u")
        for word in ["the", "cat", "sat"]:
            step_b = inner.score_word(state_b, word)
            step_e = sc.score_word(state_e, word)
            assert step_e.logprob == pytest.approx(step_b.logprob, abs=1e-9)
            state_b, state_e = step_b.state, step_e.state
        assert sc.finish(state_e) == pytest.approx(inner.finish(state_b), abs=1e-9)
        words = ["a", "dog", "sat"]
        assert sc.score_sequence("u", words) == pytest.approx(
            inner.score_sequence("u", words), abs=1e-9
        )


def test_external_rescore_equals_builtin(tmp_path, fig_branch_post):
    inner = train_ngram("the cat sat on the mat\na cat sat on a mat", order=3)
    model = tmp_path / "model.json"
    inner.save(str(model))
    config = RescoreConfig(ngram=3, collar=9)
    builtin_out = rescore_lattice(fig_branch_post, inner, config)
    with ExternalScorer(STUB + ["--scorer", f"ngram:{model}"]) as sc:
        external_out = rescore_lattice(fig_branch_post, sc, config)
    for a, b in zip(builtin_out.arcs, external_out.arcs):
        assert b.model_scores["ngram"] == pytest.approx(a.model_scores["ngram"], abs=1e-9)
    coeffs = Coefficients(stream_weights={"ngram": 1.0})
    assert best_path(external_out, coeffs).words == best_path(builtin_out, coeffs).words


def test_external_server_error_surfaces():
    with ExternalScorer(STUB + ["--scorer", "constant:-1.0"]) as sc:
        with pytest.raises(ExternalScorerError, match="unknown op"):
            sc.request({"op": "nope"})


def test_external_process_dies():
    cmd = [sys.executable, "-c", "import sys; sys.exit(3)"]
    with pytest.raises(ExternalScorerError):
        ExternalScorer(cmd)


def test_external_garbage_reply():
    cmd = [
        sys.executable,
        "-c",
        "import sys; print('not json'); sys.stdout.flush(); sys.stdin.read()",
    ]
    with pytest.raises(ExternalScorerError, match="malformed"):
        ExternalScorer(cmd)


def test_external_missing_command():
    with pytest.raises(ExternalScorerError, match="cannot start"):
        ExternalScorer(["/no/such/binary-anywhere"])


def test_external_closed_rejects_requests():
    sc = ExternalScorer(STUB + ["--scorer", "constant:-1.0"])
    sc.close()
    with pytest.raises(ExternalScorerError, match="exited"):
        sc.request({"op": "hello"})


def test_external_deterministic_across_connections(diamond_post):
    config = RescoreConfig(ngram=2)
    outs = []
    for _ in range(2):
        with ExternalScorer(STUB + ["--scorer", "uniform:50"]) as sc:
            outs.append(serialize_lattice(rescore_lattice(diamond_post, sc, config)))
    assert outs[0] == outs[1]

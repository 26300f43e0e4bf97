"""Reference server for the external scorer line protocol.

Wraps any built-in scorer spec behind the stdin/stdout JSON protocol
documented in :mod:`latkit.external`. Run as:

    python -m latkit.stub --scorer ngram:/path/to/model.json
    python -m latkit.stub --scorer constant:-2.0

Each request is served statelessly by replaying the explicit history, which
is exact for time-insensitive models (the protocol only carries the scored
word's frame, so a time-sensitive inner model would see zeros on the
history replay).
"""

from __future__ import annotations

import argparse
import json
import sys

from .lattice import END_WORD
from .scorers import Scorer, scorer_from_spec


def handle(scorer: Scorer, request: dict) -> dict:
    op = request.get("op")
    if op == "hello":
        return {"name": scorer.name, "time_sensitive": scorer.time_sensitive}
    if op == "score":
        state = scorer.begin_utterance(str(request.get("utt", "")), 0)
        for word in request.get("history", []):
            state = scorer.score_word(state, word, 0).state
        word = request["word"]
        time = int(request.get("time", 0))
        if word == END_WORD:
            return {"logprob": scorer.finish(state)}
        return {"logprob": scorer.score_word(state, word, time).logprob}
    if op == "sequence":
        return {"logprob": scorer.score_sequence(str(request.get("utt", "")), request["words"])}
    return {"error": f"unknown op {op!r}"}


def serve(scorer: Scorer, stdin=None, stdout=None) -> None:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        try:
            request = json.loads(line)
            reply = handle(scorer, request)
        except Exception as exc:  # a broken request must not kill the server
            reply = {"error": str(exc)}
        stdout.write(json.dumps(reply, separators=(",", ":")) + "\n")
        stdout.flush()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="latkit.stub", description="serve a built-in scorer over the JSON line protocol"
    )
    parser.add_argument("--scorer", default="uniform:100", help="scorer spec to wrap")
    args = parser.parse_args(argv)
    serve(scorer_from_spec(args.scorer))
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Bridge to scorers living in a child process.

The wire protocol is one JSON object per line on stdin/stdout. Requests are
stateless: every scoring request carries the utterance id and the explicit
word history, so worker processes can each hold their own connection and no
request ordering is assumed beyond one-reply-per-request.

    {"op": "hello"}
        -> {"name": "<scorer-name>", "time_sensitive": true|false}
    {"op": "score", "utt": "<id>", "history": ["w1", "w2"], "word": "w3", "time": 123}
        -> {"logprob": -3.141593}
    {"op": "sequence", "utt": "<id>", "words": ["w1", "w2"]}
        -> {"logprob": -42.0}

Log probabilities are natural-log. The end-of-sequence probability is
requested through the ``score`` op with the reserved word ``</s>``. A server
reports failures as ``{"error": "<message>"}``; anything malformed raises
:class:`ExternalScorerError` on this side.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import threading
from dataclasses import dataclass

from .errors import ExternalScorerError
from .lattice import END_WORD
from .scorers import Scorer, StepResult, _check_word


@dataclass(frozen=True)
class _ExternalState:
    utterance_id: str
    duration_frames: int
    history: tuple[str, ...]


class ExternalScorer(Scorer):
    """Client side of the JSON line protocol.

    The child process is spawned at construction and the hello handshake
    fills in ``name`` and ``time_sensitive``. Requests on one connection are
    serialized with a lock; use one scorer instance per worker for
    parallelism.
    """

    def __init__(self, command: str | list[str]):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self._command = argv
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ExternalScorerError(f"cannot start external scorer {argv!r}: {exc}") from exc
        self._lock = threading.Lock()
        hello = self.request({"op": "hello"})
        try:
            self.name = str(hello["name"])
            self.time_sensitive = bool(hello["time_sensitive"])
        except KeyError as exc:
            raise ExternalScorerError(f"hello reply missing field {exc}") from exc

    def request(self, payload: dict) -> dict:
        """Send one request line and read one reply line."""
        line = json.dumps(payload, separators=(",", ":"))
        with self._lock:
            if self._proc.poll() is not None:
                raise ExternalScorerError(
                    f"external scorer exited with code {self._proc.returncode}"
                )
            try:
                self._proc.stdin.write(line + "\n")
                self._proc.stdin.flush()
                reply = self._proc.stdout.readline()
            except (BrokenPipeError, OSError) as exc:
                raise ExternalScorerError(f"external scorer connection broke: {exc}") from exc
        if not reply:
            raise ExternalScorerError("external scorer closed its output stream")
        try:
            obj = json.loads(reply)
        except json.JSONDecodeError as exc:
            raise ExternalScorerError(f"malformed reply {reply!r}") from exc
        if not isinstance(obj, dict):
            raise ExternalScorerError(f"malformed reply {reply!r}")
        if "error" in obj:
            raise ExternalScorerError(f"external scorer error: {obj['error']}")
        return obj

    def _logprob(self, payload: dict) -> float:
        reply = self.request(payload)
        try:
            return float(reply["logprob"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ExternalScorerError(f"reply lacks a numeric logprob: {reply!r}") from exc

    # -- contract -----------------------------------------------------------

    def begin_utterance(self, utterance_id: str, duration_frames: int = 0) -> object:
        return _ExternalState(utterance_id, duration_frames, ())

    def score_word(self, state: object, word: str, node_time: int = 0) -> StepResult:
        _check_word(word)
        st: _ExternalState = state  # type: ignore[assignment]
        lp = self._logprob(
            {
                "op": "score",
                "utt": st.utterance_id,
                "history": list(st.history),
                "word": word,
                "time": node_time,
            }
        )
        return StepResult(
            _ExternalState(st.utterance_id, st.duration_frames, st.history + (word,)), lp
        )

    def finish(self, state: object) -> float:
        st: _ExternalState = state  # type: ignore[assignment]
        return self._logprob(
            {
                "op": "score",
                "utt": st.utterance_id,
                "history": list(st.history),
                "word": END_WORD,
                "time": st.duration_frames,
            }
        )

    def score_sequence(self, utterance_id: str, words) -> float:
        return self._logprob({"op": "sequence", "utt": utterance_id, "words": list(words)})

    # -- lifecycle ----------------------------------------------------------

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self) -> "ExternalScorer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass

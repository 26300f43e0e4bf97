"""Log-linear combination of per-stream hypothesis scores.

The combined score of a hypothesis is

    ac * acoustic + gamma * first_pass_lm
        + sum_s stream_weights[s] * scores[s] + kappa * num_words

The acoustic weight is the scale gauge and stays fixed at 1 in normal use;
it exists as a field so the representation is closed under joint positive
rescaling, which leaves every argmax-based selection unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

from .errors import MissingStreamError


@dataclass
class Coefficients:
    gamma: float = 1.0
    stream_weights: dict[str, float] = field(default_factory=dict)
    kappa: float = 0.0
    ac: float = 1.0

    def scaled(self, factor: float) -> "Coefficients":
        """Every weight multiplied by ``factor`` (the equivalence transform)."""
        return Coefficients(
            gamma=self.gamma * factor,
            stream_weights={s: w * factor for s, w in self.stream_weights.items()},
            kappa=self.kappa * factor,
            ac=self.ac * factor,
        )

    def to_dict(self) -> dict:
        return {
            "ac": self.ac,
            "gamma": self.gamma,
            "stream_weights": dict(sorted(self.stream_weights.items())),
            "kappa": self.kappa,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Coefficients":
        if "best_coeffs" in data:  # accept a whole tuning report
            data = data["best_coeffs"]
        return cls(
            gamma=float(data.get("gamma", 1.0)),
            stream_weights={str(k): float(v) for k, v in data.get("stream_weights", {}).items()},
            kappa=float(data.get("kappa", 0.0)),
            ac=float(data.get("ac", 1.0)),
        )

    @classmethod
    def from_json(cls, text: str) -> "Coefficients":
        return cls.from_dict(json.loads(text))


def combined_score(hyp, coeffs: Coefficients) -> float:
    """Combined log score of one hypothesis; raises if a weighted stream is absent."""
    scores = hyp.scores
    try:
        total = coeffs.ac * scores["ac"] + coeffs.gamma * scores["lm"]
    except KeyError as exc:
        raise MissingStreamError(f"hypothesis lacks first-pass stream {exc}") from exc
    for stream, weight in coeffs.stream_weights.items():
        try:
            total += weight * scores[stream]
        except KeyError:
            raise MissingStreamError(
                f"hypothesis for {hyp.utterance_id!r} lacks stream {stream!r}"
            ) from None
    return total + coeffs.kappa * hyp.num_words

"""Interpolation-weight tuning: minimize corpus WER over candidate lists.

The tuned vector is [gamma, one weight per scorer stream (sorted by name),
kappa]; the acoustic weight stays pinned as the scale gauge. The objective
is the pooled corpus WER of per-utterance argmax selection, a step function
of the weights, which CMA-ES handles without gradients. Per-candidate error
counts are computed once up front so each evaluation is a few array ops.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .cmaes import CmaEs, default_popsize, minimize
from .combine import Coefficients
from .errors import LatkitError, MissingStreamError
from .nbest import Hypothesis, NBestList
from .wer import corpus_wer, wer


@dataclass
class TuneReport:
    best_coeffs: Coefficients
    dev_wer: float
    evaluations: int
    history: list[float]
    init_wer: float
    note: str | None = None

    def to_dict(self) -> dict:
        out = {
            "best_coeffs": self.best_coeffs.to_dict(),
            "dev_wer": self.dev_wer,
            "evaluations": self.evaluations,
            "history": self.history,
            "init_wer": self.init_wer,
        }
        if self.note is not None:
            out["note"] = self.note
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _as_candidate_map(
    candidates: Mapping[str, Sequence[Hypothesis]] | Sequence[NBestList],
) -> dict[str, list[Hypothesis]]:
    if isinstance(candidates, Mapping):
        return {utt: list(hyps) for utt, hyps in candidates.items()}
    out: dict[str, list[Hypothesis]] = {}
    for nb in candidates:
        if nb.utterance_id in out:
            raise LatkitError(f"duplicate candidate list for utterance {nb.utterance_id!r}")
        out[nb.utterance_id] = list(nb.hypotheses)
    return out


def tune_cmaes(
    candidates: Mapping[str, Sequence[Hypothesis]] | Sequence[NBestList],
    refs: Mapping[str, Sequence[str]],
    init: Coefficients | None = None,
    sigma0: float | None = None,
    budget: int = 2000,
    freeze_kappa: bool = False,
    seed: int | None = 0,
    popsize: int | None = None,
) -> TuneReport:
    """Search combination weights that minimize dev-set corpus WER.

    ``sigma0`` defaults to 0.3 times the norm of the initial vector, or 0.3
    when that norm is zero. The returned coefficients are never worse than
    ``init`` on the dev set: best-ever bookkeeping falls back to the initial
    point if the search finds nothing better. Degenerate inputs where every
    utterance has exactly one candidate make the objective constant; that is
    detected after one population's worth of evaluations and reported.
    """
    cand = _as_candidate_map(candidates)
    init = init if init is not None else Coefficients()
    if set(cand) != set(refs):
        raise LatkitError("candidate and reference utterance sets differ")
    if not cand:
        raise LatkitError("no utterances to tune on")
    for utt, hyps in cand.items():
        if not hyps:
            raise LatkitError(f"utterance {utt!r} has an empty candidate list")

    streams = sorted({s for hyps in cand.values() for h in hyps for s in h.scores} - {"ac", "lm"})
    for utt, hyps in cand.items():
        for h in hyps:
            for s in streams:
                if s not in h.scores:
                    raise MissingStreamError(
                        f"candidate in {utt!r} lacks stream {s!r}; rescore the n-best lists first"
                    )

    dims = 1 + len(streams) + (0 if freeze_kappa else 1)
    x0 = np.array(
        [init.gamma]
        + [init.stream_weights.get(s, 0.0) for s in streams]
        + ([] if freeze_kappa else [init.kappa]),
        dtype=float,
    )
    if sigma0 is None:
        norm = float(np.linalg.norm(x0))
        sigma0 = 0.3 * norm if norm > 0 else 0.3

    def decode(vec: np.ndarray) -> Coefficients:
        return Coefficients(
            gamma=float(vec[0]),
            stream_weights={s: float(vec[1 + i]) for i, s in enumerate(streams)},
            kappa=init.kappa if freeze_kappa else float(vec[-1]),
            ac=init.ac,
        )

    # Fixed per-candidate data: feature matrix columns are
    # [ac, lm, streams..., num_words]; errors come from precomputed
    # alignments; lex_rank breaks score ties toward the smaller sequence.
    utts = sorted(cand)
    feats = []
    errors = []
    lex_rank = []
    total_ref = 0
    for utt in utts:
        hyps = cand[utt]
        mat = np.array(
            [
                [h.scores["ac"], h.scores["lm"]]
                + [h.scores[s] for s in streams]
                + [h.num_words]
                for h in hyps
            ],
            dtype=float,
        )
        feats.append(mat)
        counts = [wer(refs[utt], list(h.words)) for h in hyps]
        errors.append(np.array([c.errors for c in counts], dtype=float))
        total_ref += counts[0].ref_words
        order = sorted(range(len(hyps)), key=lambda i: hyps[i].words)
        rank = np.empty(len(hyps), dtype=int)
        for r, i in enumerate(order):
            rank[i] = r
        lex_rank.append(rank)
    if total_ref == 0:
        raise LatkitError("reference corpus is empty; WER objective undefined")

    def objective(vec: np.ndarray) -> float:
        weights = np.concatenate(([init.ac, vec[0]], vec[1 : 1 + len(streams)],
                                  [init.kappa if freeze_kappa else vec[-1]]))
        total_err = 0.0
        for mat, err, rank in zip(feats, errors, lex_rank):
            combined = mat @ weights
            best = combined.max()
            tied = np.flatnonzero(combined == best)
            pick = tied[np.argmin(rank[tied])]
            total_err += err[pick]
        return total_err / total_ref

    init_wer = float(objective(x0))
    popsize_resolved = popsize if popsize else default_popsize(dims)
    if budget < popsize_resolved:
        raise ValueError(f"budget {budget} is below the population size {popsize_resolved}")

    if all(len(hyps) == 1 for hyps in cand.values()):
        es = CmaEs(x0, sigma0, popsize=popsize_resolved, rng=np.random.default_rng(seed))
        fs = [float(objective(x)) for x in es.ask()]
        return TuneReport(
            best_coeffs=init,
            dev_wer=init_wer,
            evaluations=len(fs),
            history=[min(fs)],
            init_wer=init_wer,
            note="objective constant: every utterance has a single candidate",
        )

    result = minimize(
        objective,
        x0,
        sigma0,
        max_evals=budget,
        seed=np.random.default_rng(seed),
        popsize=popsize_resolved,
    )
    if result.f < init_wer and result.x is not None:
        best_coeffs = decode(result.x)
        dev = float(result.f)
        note = None
    else:
        best_coeffs = init
        dev = init_wer
        note = "search found nothing better than the initial coefficients"
    if math.isinf(dev):
        raise LatkitError("objective never evaluated; raise the budget")
    return TuneReport(
        best_coeffs=best_coeffs,
        dev_wer=dev,
        evaluations=result.evaluations,
        history=result.history,
        init_wer=init_wer,
        note=note,
    )


def select_transcripts(
    candidates: Mapping[str, Sequence[Hypothesis]] | Sequence[NBestList],
    coeffs: Coefficients,
) -> dict[str, list[str]]:
    """Per-utterance argmax selection, as used by the tuning objective."""
    from .nbest import select_best

    cand = _as_candidate_map(candidates)
    return {utt: list(select_best(hyps, coeffs).words) for utt, hyps in cand.items()}


def eval_selection(
    candidates: Mapping[str, Sequence[Hypothesis]] | Sequence[NBestList],
    refs: Mapping[str, Sequence[str]],
    coeffs: Coefficients,
) -> float | None:
    """Corpus WER of argmax selection under the given coefficients."""
    return corpus_wer(refs, select_transcripts(candidates, coeffs)).rate

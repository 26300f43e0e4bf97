"""Command-line pipeline over lattice, n-best, and transcript files.

Subcommands chain through files: ``validate`` / ``posteriors`` / ``prune`` /
``stats`` work on lattices, ``rescore-lattice`` attaches a scorer stream,
``nbest`` / ``rescore-nbest`` handle candidate lists, ``select`` produces
transcripts from either route, ``tune`` fits combination weights, and
``score`` reports WER. There is no interactive surface; everything is meant
for scripts.

Exit codes: 0 success, 1 data or validation error, 2 usage error,
3 external scorer failure. Batch inputs may be files, directories (taken
sorted, non-recursive), or ``--manifest`` lists with one path per line.
Outputs are written atomically. Flags with a ``LATKIT_*`` environment
variable (JOBS, NGRAM, COLLAR, SEED) take their default from it.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import lattice as lat_mod
from .combine import Coefficients
from .errors import ExternalScorerError, LatkitError
from .nbest import NBestList, extract_nbest, format_nbest, parse_nbest, rescore_nbest, select_best
from .rescore import RescoreConfig, best_path, rescore_lattice
from .scorers import scorer_from_spec, train_ngram
from .tune import tune_cmaes
from .wer import corpus_wer, format_transcripts, parse_transcripts, werr_by_length


class CliUsageError(Exception):
    pass


def _env_default(name: str, fallback, cast=str):
    raw = os.environ.get(f"LATKIT_{name}")
    if raw is None:
        return fallback
    try:
        return cast(raw)
    except ValueError:
        raise CliUsageError(f"environment variable LATKIT_{name}={raw!r} is not a valid {cast.__name__}")


def _gather_inputs(
    paths: list[str], manifest: str | None, suffixes: tuple[str, ...] = (".lat",)
) -> list[str]:
    """Input files from positional paths plus an optional manifest.

    Directories contribute their files with one of ``suffixes`` (sorted,
    non-recursive); files named explicitly or via the manifest are taken as
    given, whatever they are called.
    """
    out: list[str] = []
    if manifest:
        with open(manifest, encoding="utf-8") as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if line:
                    out.append(line)
    for path in paths:
        if os.path.isdir(path):
            names = sorted(os.listdir(path))
            matched = [
                os.path.join(path, n)
                for n in names
                if n.endswith(suffixes) and os.path.isfile(os.path.join(path, n))
            ]
            if not matched:
                raise CliUsageError(f"directory {path} has no {'/'.join(suffixes)} files")
            out.extend(matched)
        else:
            out.append(path)
    if not out:
        raise CliUsageError("no input files given")
    return out


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    tmp = os.path.join(directory, f".{os.path.basename(path)}.{os.getpid()}.tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _emit_per_file(
    inputs: list[str], texts: list[str], out: str | None, out_suffix: str | None = None
) -> None:
    """Write one output per input: to stdout (single input, no -o), to a
    file (single input), or mirrored by basename into a directory. When the
    command changes formats, ``out_suffix`` replaces the mirrored extension."""
    if out is None:
        if len(inputs) > 1:
            raise CliUsageError("-o/--out is required with multiple inputs")
        sys.stdout.write(texts[0])
        return
    if len(inputs) == 1 and not os.path.isdir(out) and not out.endswith(os.sep):
        _write_atomic(out, texts[0])
        return
    names = [os.path.basename(p) for p in inputs]
    if out_suffix:
        names = [os.path.splitext(n)[0] + out_suffix for n in names]
    if len(set(names)) != len(names):
        raise LatkitError("duplicate input basenames; cannot mirror into one directory")
    os.makedirs(out, exist_ok=True)
    for name, text in zip(names, texts):
        _write_atomic(os.path.join(out, name), text)


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load_coeffs(arg: str | None) -> Coefficients:
    if arg is None:
        return Coefficients()
    text = arg if arg.lstrip().startswith("{") else _read(arg)
    try:
        return Coefficients.from_json(text)
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise CliUsageError(f"bad coefficients {arg!r}: {exc}") from exc


def _run_batch(worker, jobs_args: list[tuple], jobs: int) -> list:
    """Apply ``worker`` over per-file argument tuples, optionally in a
    process pool. Results keep input order."""
    if jobs <= 1 or len(jobs_args) <= 1:
        return [worker(*a) for a in jobs_args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(worker, *a) for a in jobs_args]
        return [f.result() for f in futures]


_SCORER_CACHE: dict[str, object] = {}


def _shared_scorer(spec: str):
    """One scorer per spec per process; workers each build their own."""
    scorer = _SCORER_CACHE.get(spec)
    if scorer is None:
        scorer = scorer_from_spec(spec)
        _SCORER_CACHE[spec] = scorer
    return scorer


# ---------------------------------------------------------------------------
# per-file workers (top level so process pools can pickle them)


def _job_validate(path: str) -> tuple[str, list[str]]:
    try:
        lat_mod.parse_lattice(_read(path))
        return path, []
    except lat_mod.LatticeValidationError as exc:
        return path, exc.violations
    except (lat_mod.LatticeSyntaxError, OSError) as exc:
        return path, [str(exc)]


def _job_posteriors(path: str, ac_scale: float, lm_scale: float) -> str:
    lat = lat_mod.parse_lattice(_read(path))
    return lat_mod.serialize_lattice(lat_mod.compute_arc_posteriors(lat, ac_scale, lm_scale))


def _job_prune(path: str, beam: float, max_density: float, ac_scale: float, lm_scale: float) -> str:
    lat = lat_mod.parse_lattice(_read(path))
    return lat_mod.serialize_lattice(lat_mod.prune(lat, beam, max_density, ac_scale, lm_scale))


def _job_stats(path: str) -> tuple[str, str, lat_mod.LatticeStats]:
    lat = lat_mod.parse_lattice(_read(path))
    return path, lat.utterance_id, lat_mod.stats(lat)


def _job_rescore_lattice(
    path: str, spec: str, ngram: int, collar: float, stream: str | None, score_eos: bool
) -> str:
    lat = lat_mod.parse_lattice(_read(path))
    scorer = _shared_scorer(spec)
    config = RescoreConfig(ngram=ngram, collar=collar, stream_name=stream, score_eos=score_eos)
    return lat_mod.serialize_lattice(rescore_lattice(lat, scorer, config))


def _job_nbest(path: str, n: int, coeffs_json: str, dedup: bool) -> str:
    lat = lat_mod.parse_lattice(_read(path))
    coeffs = Coefficients.from_json(coeffs_json)
    return format_nbest(extract_nbest(lat, n, coeffs, dedup=dedup))


def _job_rescore_nbest(path: str, spec: str, stream: str | None, norm: bool) -> str:
    scorer = _shared_scorer(spec)
    out = [
        format_nbest(rescore_nbest(nb, scorer, stream_name=stream, length_normalize=norm))
        for nb in parse_nbest(_read(path))
    ]
    return "".join(out)


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    inputs = _gather_inputs(args.inputs, args.manifest)
    results = _run_batch(_job_validate, [(p,) for p in inputs], args.jobs)
    bad = 0
    for path, violations in results:
        if violations:
            bad += 1
            print(f"INVALID {path}: " + "; ".join(violations))
        else:
            print(f"OK {path}")
    print(f"checked {len(results)} file(s), {bad} invalid")
    return 1 if bad else 0


def cmd_posteriors(args) -> int:
    inputs = _gather_inputs(args.inputs, args.manifest)
    texts = _run_batch(
        _job_posteriors, [(p, args.ac_scale, args.lm_scale) for p in inputs], args.jobs
    )
    _emit_per_file(inputs, texts, args.out)
    return 0


def cmd_prune(args) -> int:
    inputs = _gather_inputs(args.inputs, args.manifest)
    texts = _run_batch(
        _job_prune,
        [(p, args.beam, args.max_density, args.ac_scale, args.lm_scale) for p in inputs],
        args.jobs,
    )
    _emit_per_file(inputs, texts, args.out)
    return 0


def cmd_stats(args) -> int:
    inputs = _gather_inputs(args.inputs, args.manifest)
    results = _run_batch(_job_stats, [(p,) for p in inputs], args.jobs)
    densities = []
    for path, utt, st in results:
        density = "undef" if st.density is None else f"{st.density:.1f}"
        print(
            f"{path} utt={utt} nodes={st.num_nodes} arcs={st.num_arcs} "
            f"duration={st.duration_sec:.2f}s density={density}"
        )
        if st.density is not None:
            densities.append(st.density)
    mean = f"{sum(densities) / len(densities):.1f}" if densities else "undef"
    print(f"corpus mean density over {len(results)} file(s): {mean}")
    return 0


def cmd_rescore_lattice(args) -> int:
    inputs = _gather_inputs(args.inputs, args.manifest)
    try:
        collar = math.inf if args.collar == "inf" else float(args.collar)
    except ValueError:
        raise CliUsageError(f"--collar must be a number or 'inf', got {args.collar!r}") from None
    texts = _run_batch(
        _job_rescore_lattice,
        [(p, args.scorer, args.ngram, collar, args.stream, not args.no_eos) for p in inputs],
        args.jobs,
    )
    _emit_per_file(inputs, texts, args.out)
    return 0


def cmd_nbest(args) -> int:
    inputs = _gather_inputs(args.inputs, args.manifest)
    coeffs_json = json.dumps(_load_coeffs(args.coeffs).to_dict())
    texts = _run_batch(
        _job_nbest, [(p, args.n, coeffs_json, not args.keep_duplicates) for p in inputs], args.jobs
    )
    _emit_per_file(inputs, texts, args.out, out_suffix=".nb")
    return 0


def cmd_rescore_nbest(args) -> int:
    inputs = _gather_inputs(args.inputs, args.manifest, suffixes=(".nb",))
    texts = _run_batch(
        _job_rescore_nbest,
        [(p, args.scorer, args.stream, args.length_norm) for p in inputs],
        args.jobs,
    )
    _emit_per_file(inputs, texts, args.out, out_suffix=".nb")
    return 0


def _looks_like_nbest(text: str) -> bool:
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            return "RANK=" in line.split("::", 1)[0]
    return False


def cmd_select(args) -> int:
    inputs = _gather_inputs(args.inputs, args.manifest, suffixes=(".lat", ".nb"))
    coeffs = _load_coeffs(args.coeffs)
    hyps: dict[str, list[str]] = {}

    def take(utt: str, words) -> None:
        if utt in hyps:
            raise LatkitError(f"utterance {utt!r} appears in more than one input")
        hyps[utt] = list(words)

    for path in inputs:
        text = _read(path)
        if _looks_like_nbest(text):
            for nb in parse_nbest(text):
                take(nb.utterance_id, select_best(nb, coeffs).words)
        else:
            lat = lat_mod.parse_lattice(text)
            take(lat.utterance_id, best_path(lat, coeffs).words)
    out_text = format_transcripts(hyps)
    if args.out:
        _write_atomic(args.out, out_text)
    else:
        sys.stdout.write(out_text)
    return 0


def cmd_tune(args) -> int:
    inputs = _gather_inputs(args.nbest, args.manifest, suffixes=(".nb",))
    lists: list[NBestList] = []
    for path in inputs:
        lists.extend(parse_nbest(_read(path)))
    refs = parse_transcripts(_read(args.refs))
    report = tune_cmaes(
        lists,
        refs,
        init=_load_coeffs(args.init),
        sigma0=args.sigma0,
        budget=args.budget,
        freeze_kappa=args.freeze_kappa,
        seed=args.seed,
        popsize=args.popsize,
    )
    if report.note:
        print(f"latkit: warning: {report.note}", file=sys.stderr)
    text = report.to_json()
    if args.out:
        _write_atomic(args.out, text)
        print(
            f"tuned on {len(refs)} utterance(s): WER {100 * report.init_wer:.2f}% -> "
            f"{100 * report.dev_wer:.2f}% in {report.evaluations} evaluations"
        )
    else:
        sys.stdout.write(text)
    return 0


def _fmt_rate(rate: float | None) -> str:
    return "undef" if rate is None else f"{100 * rate:.2f}%"


def cmd_score(args) -> int:
    refs = parse_transcripts(_read(args.refs))
    hyps = parse_transcripts(_read(args.hyps))
    result = corpus_wer(refs, hyps)
    counts = result.counts
    print(
        f"WER {_fmt_rate(result.rate)} "
        f"(sub={counts.substitutions} ins={counts.insertions} del={counts.deletions} "
        f"ref_words={counts.ref_words}, {len(refs)} utterances)"
    )
    baseline = parse_transcripts(_read(args.baseline)) if args.baseline else None
    if baseline is not None:
        base = corpus_wer(refs, baseline)
        print(f"baseline WER {_fmt_rate(base.rate)}")
    if args.buckets:
        bounds = [int(b) for b in args.buckets.split(",") if b.strip()]
        table = werr_by_length(baseline or hyps, hyps, refs, bounds)
        header = f"{'bucket':>8} {'utts':>5} {'ref':>6} {'wer':>8}"
        if baseline is not None:
            header += f" {'base':>8} {'werr':>8}"
        print(header)
        for bucket in table:
            row = (
                f"{bucket.label:>8} {bucket.num_utts:>5} {bucket.system.ref_words:>6} "
                f"{_fmt_rate(bucket.system.rate):>8}"
            )
            if baseline is not None:
                werr = "undef" if bucket.werr is None else f"{100 * bucket.werr:.1f}%"
                row += f" {_fmt_rate(bucket.baseline.rate):>8} {werr:>8}"
            print(row)
    return 0


def cmd_train_ngram(args) -> int:
    scorer = train_ngram(
        _read(args.corpus), order=args.order, discount=args.discount, unk_floor=args.unk_floor
    )
    scorer.save(args.out)
    print(f"trained order-{args.order} model on {args.corpus} -> {args.out} "
          f"({len(scorer.vocab)} word vocabulary)")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_batch_flags(p: argparse.ArgumentParser, with_out: bool = True) -> None:
    p.add_argument("--manifest", help="file listing one input path per line")
    p.add_argument(
        "--jobs",
        type=int,
        default=_env_default("JOBS", 1, int),
        help="worker processes for batch inputs (default 1)",
    )
    if with_out:
        p.add_argument("-o", "--out", help="output file, or directory for multiple inputs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latkit", description="word-lattice rescoring and combination pipeline"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check lattice files against every invariant")
    p.add_argument("inputs", nargs="*")
    _add_batch_flags(p, with_out=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("posteriors", help="attach forward-backward arc posteriors")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--ac-scale", type=float, default=1.0)
    p.add_argument("--lm-scale", type=float, default=1.0)
    _add_batch_flags(p)
    p.set_defaults(func=cmd_posteriors)

    p = sub.add_parser("prune", help="beam- and density-prune lattices")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--beam", type=float, default=math.inf)
    p.add_argument("--max-density", type=float, default=math.inf)
    p.add_argument("--ac-scale", type=float, default=1.0)
    p.add_argument("--lm-scale", type=float, default=1.0)
    _add_batch_flags(p)
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("stats", help="per-file and corpus-mean lattice density")
    p.add_argument("inputs", nargs="*")
    _add_batch_flags(p, with_out=False)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("rescore-lattice", help="expand and attach a scorer stream")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--scorer", required=True, help="ngram:PATH | uniform:V | constant:LP | mock-time | external:CMD")
    p.add_argument("--ngram", type=int, default=_env_default("NGRAM", 3, int))
    p.add_argument("--collar", default=_env_default("COLLAR", "9"), help="frames, or 'inf'")
    p.add_argument("--stream", help="stream name (default: scorer name)")
    p.add_argument("--no-eos", action="store_true", help="skip the end-of-sentence term")
    _add_batch_flags(p)
    p.set_defaults(func=cmd_rescore_lattice)

    p = sub.add_parser("nbest", help="extract exact n-best lists")
    p.add_argument("inputs", nargs="*")
    p.add_argument("-N", "--n", type=int, default=20)
    p.add_argument("--coeffs", help="coefficients JSON (inline or a file path)")
    p.add_argument("--keep-duplicates", action="store_true",
                   help="keep repeated word sequences from distinct alignments")
    _add_batch_flags(p)
    p.set_defaults(func=cmd_nbest)

    p = sub.add_parser("rescore-nbest", help="attach whole-sentence scorer totals")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--scorer", required=True)
    p.add_argument("--stream", help="stream name (default: scorer name)")
    p.add_argument("--length-norm", action="store_true",
                   help="divide totals by the number of scored tokens")
    _add_batch_flags(p)
    p.set_defaults(func=cmd_rescore_nbest)

    p = sub.add_parser("select", help="pick the best hypothesis per utterance")
    p.add_argument("inputs", nargs="*", help="rescored lattices or n-best files")
    p.add_argument("--coeffs", help="coefficients or tuning-report JSON")
    p.add_argument("--manifest")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("tune", help="fit combination weights by corpus WER")
    p.add_argument("--nbest", nargs="+", required=True, help="rescored n-best files")
    p.add_argument("--refs", required=True)
    p.add_argument("--init", help="initial coefficients JSON")
    p.add_argument("--sigma0", type=float)
    p.add_argument("--budget", type=int, default=2000, help="objective evaluation budget")
    p.add_argument("--freeze-kappa", action="store_true", help="keep the word bonus fixed")
    p.add_argument("--seed", type=int, default=_env_default("SEED", 0, int))
    p.add_argument("--popsize", type=int)
    p.add_argument("--manifest")
    p.add_argument("-o", "--out", help="write the tuning report here")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("score", help="corpus WER, optionally bucketed by length")
    p.add_argument("--refs", required=True)
    p.add_argument("--hyps", required=True)
    p.add_argument("--baseline", help="baseline transcripts for relative improvement")
    p.add_argument("--buckets", help="comma list of length bounds, e.g. 5,10,15,20,30")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("train-ngram", help="count a smoothed n-gram model")
    p.add_argument("corpus", help="line-per-sentence training text")
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--discount", type=float, default=0.75)
    p.add_argument("--unk-floor", type=float, default=-20.0)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_train_ngram)

    return parser


def _exit_code(exc: BaseException) -> int:
    cause: BaseException | None = exc
    while cause is not None:
        if isinstance(cause, ExternalScorerError):
            return 3
        cause = cause.__cause__
    return 1


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CliUsageError as exc:
        print(f"latkit: {exc}", file=sys.stderr)
        return 2
    except (LatkitError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"latkit: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())

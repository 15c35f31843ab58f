"""Command-line front end.

Exit codes: 0 success, 2 bad flags or bad data, 3 I/O failure, 4 alphabet
checksum mismatch.  Diagnostics go to stderr; data goes to stdout or the
--out file.  Every command is deterministic given its flags, inputs and
seed.
"""

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import List, Optional

from . import __version__
from .alphabet import Alphabet, tag_map, tag_unmap, strip_tags
from .decoder import BatchItemError, DecodeConfig, decode_batch
from .evalkit import evaluate_ner, format_report_table, wer_corpus
from .ngram_lm import build_from_corpus, load_arpa, score_sequence, write_arpa
from .posteriorgram import read_posteriorgram, synth_generate, write_posteriorgram
from .semlm import (DEFAULT_CLASS_LITERALS, DEFAULT_GAMMA, decode_with_class_lm,
                    load_name_dict, oov_stats, transform_corpus)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_CHECKSUM = 4


class ChecksumMismatch(ValueError):
    """Posteriorgram bound to a different alphabet than the one supplied."""


@dataclass
class ManifestRecord:
    utt_id: str
    path: str
    ref: Optional[str]


def _fail(message: str) -> None:
    print("tagbeam: %s" % message, file=sys.stderr)


def _read_lines(path) -> List[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh]


def _write_lines(lines: List[str], out: Optional[str]) -> None:
    text = "\n".join(lines) + ("\n" if lines else "")
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_alphabet(path: Optional[str]) -> Alphabet:
    return Alphabet.load(path) if path else Alphabet.default()


def _read_manifest(path) -> List[ManifestRecord]:
    base = os.path.dirname(os.path.abspath(path))
    records = []
    seen = set()
    for n, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) < 2:
            raise ValueError("manifest line %d: expected id<TAB>path[<TAB>ref]" % n)
        utt_id, pg_path = fields[0], fields[1]
        if utt_id in seen:
            raise ValueError("manifest line %d: duplicate id %r" % (n, utt_id))
        seen.add(utt_id)
        if not os.path.isabs(pg_path):
            pg_path = os.path.join(base, pg_path)
        ref = fields[2] if len(fields) > 2 else None
        records.append(ManifestRecord(utt_id, pg_path, ref))
    return records


def _decode_config(args, lm) -> DecodeConfig:
    return DecodeConfig(
        alpha=args.alpha,
        beta=args.beta,
        beam_width=args.beam_width,
        lm=lm,
        oov_floor=math.log(args.oov_floor),
    )


def _load_pgs(records, alphabet):
    """Read and checksum-verify every posteriorgram; failures name the utterance."""
    want = alphabet.checksum
    pgs = []
    for rec in records:
        try:
            pg = read_posteriorgram(rec.path)
        except OSError as exc:
            raise OSError("utterance %s: %s" % (rec.utt_id, exc)) from exc
        except ValueError as exc:
            raise ValueError("utterance %s: %s" % (rec.utt_id, exc)) from exc
        if pg.alphabet_hash != want:
            raise ChecksumMismatch(
                "utterance %s: posteriorgram alphabet checksum %#x does not match "
                "the supplied alphabet (%#x)" % (rec.utt_id, pg.alphabet_hash, want)
            )
        pgs.append(pg)
    return pgs


def _cmd_decode(args) -> int:
    alphabet = _load_alphabet(args.alphabet)
    records = _read_manifest(args.manifest)
    lm = load_arpa(args.lm) if args.lm else None
    config = _decode_config(args, lm)
    pgs = _load_pgs(records, alphabet)
    try:
        results = decode_batch(pgs, alphabet, config, jobs=args.jobs)
    except BatchItemError as exc:
        raise ValueError("utterance %s: %s" % (records[exc.index].utt_id, exc.__cause__)) from exc
    lines = ["%s\t%s\t%.6f" % (rec.utt_id, text, q)
             for rec, (text, q) in zip(records, results)]
    _write_lines(lines, args.out)
    return EXIT_OK


def _cmd_decode_class(args) -> int:
    alphabet = _load_alphabet(args.alphabet)
    records = _read_manifest(args.manifest)
    lm = load_arpa(args.lm)
    config = _decode_config(args, lm)
    name_dict = load_name_dict(args.name_dict) if args.name_dict else {}
    categories = args.categories.split(",") if args.categories else ["PER"]
    pgs = _load_pgs(records, alphabet)
    lines = []
    for rec, pg in zip(records, pgs):
        try:
            text, q = decode_with_class_lm(
                pg, alphabet, config, name_dict,
                gamma=args.gamma, categories=categories,
            )
        except ValueError as exc:
            raise ValueError("utterance %s: %s" % (rec.utt_id, exc)) from exc
        lines.append("%s\t%s\t%.6f" % (rec.utt_id, text, q))
    _write_lines(lines, args.out)
    return EXIT_OK


def _synth_one(ref, alphabet, noise, dur_max, seed, path) -> None:
    write_posteriorgram(synth_generate(ref, alphabet, noise, dur_max, seed), path)


def _cmd_synth(args) -> int:
    alphabet = _load_alphabet(args.alphabet)
    if not 0.0 <= args.noise < 1.0:
        raise ValueError("--noise must be in [0, 1), got %r" % args.noise)
    refs = _read_lines(args.refs)
    os.makedirs(args.outdir, exist_ok=True)
    work = []
    manifest_lines = []
    for idx, ref in enumerate(refs):
        utt_id = "utt%05d" % idx
        filename = utt_id + ".lpg"
        alphabet.encode(ref)  # fail on unencodable characters before any file is written
        work.append((ref, alphabet, args.noise, args.dur_max, args.seed + idx,
                     os.path.join(args.outdir, filename)))
        manifest_lines.append("%s\t%s\t%s" % (utt_id, filename, ref))
    if args.jobs > 1 and len(work) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            list(pool.map(_synth_one, *zip(*work)))
    else:
        for item in work:
            _synth_one(*item)
    manifest_path = os.path.join(args.outdir, "manifest.tsv")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(manifest_lines) + ("\n" if manifest_lines else ""))
    print(manifest_path)
    return EXIT_OK


def _cmd_eval_ner(args) -> int:
    alphabet = _load_alphabet(args.alphabet)
    refs = _read_lines(args.refs)
    hyps = _read_lines(args.hyps)
    report = evaluate_ner(refs, hyps, alphabet.tag_scheme)
    print(format_report_table(report))
    payload = json.dumps(report.to_json_dict(), indent=2)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)
    if args.plot:
        from .plotting import save_ner_report_figure

        save_ner_report_figure(report, args.plot)
    return EXIT_OK


def _cmd_eval_wer(args) -> int:
    alphabet = _load_alphabet(args.alphabet)
    refs = _read_lines(args.refs)
    hyps = _read_lines(args.hyps)
    rate = wer_corpus(refs, hyps, alphabet.tag_scheme)
    print("%.6f" % rate)
    return EXIT_OK


def _cmd_lm_build(args) -> int:
    lines = [line.split() for line in _read_lines(args.corpus)]
    model = build_from_corpus(lines, order=args.order, discount=args.discount)
    write_arpa(model, args.out)
    return EXIT_OK


def _cmd_lm_score(args) -> int:
    model = load_arpa(args.lm)
    out = []
    for line in _read_lines(args.text):
        out.append("%.6f\t%s" % (score_sequence(model, line.split()), line))
    _write_lines(out, args.out)
    return EXIT_OK


def _cmd_lm_info(args) -> int:
    model = load_arpa(args.lm)
    print("order\t%d" % model.order)
    for k in range(1, model.order + 1):
        print("ngram %d\t%d" % (k, len(model.tables.get(k, {}))))
    print("vocab\t%d" % len(model.vocab))
    return EXIT_OK


def _map_lines(args, func) -> int:
    out = []
    for n, line in enumerate(_read_lines(args.text), start=1):
        try:
            out.append(func(line))
        except ValueError as exc:
            raise ValueError("line %d: %s" % (n, exc)) from exc
    _write_lines(out, args.out)
    return EXIT_OK


def _cmd_tag_map(args) -> int:
    scheme = _load_alphabet(args.alphabet).tag_scheme
    return _map_lines(args, lambda line: tag_map(line, scheme))


def _cmd_tag_unmap(args) -> int:
    scheme = _load_alphabet(args.alphabet).tag_scheme
    return _map_lines(args, lambda line: tag_unmap(line, scheme))


def _cmd_strip_tags(args) -> int:
    scheme = _load_alphabet(args.alphabet).tag_scheme
    return _map_lines(args, lambda line: strip_tags(line, scheme))


def _cmd_semlm_transform(args) -> int:
    scheme = _load_alphabet(args.alphabet).tag_scheme
    categories = args.categories.split(",") if args.categories else ["PER"]
    for cat in categories:
        if cat not in DEFAULT_CLASS_LITERALS:
            raise ValueError("unknown category %r" % cat)
    lines = transform_corpus(_read_lines(args.corpus), scheme, categories)
    _write_lines(lines, args.out)
    return EXIT_OK


def _cmd_oov_stats(args) -> int:
    scheme = _load_alphabet(args.alphabet).tag_scheme
    vocab = set()
    for line in _read_lines(args.train):
        vocab.update(line.split())
    stats = oov_stats(vocab, _read_lines(args.eval), scheme)
    print(json.dumps(stats.to_json_dict(), indent=2))
    if args.plot:
        from .plotting import save_oov_figure

        save_oov_figure(stats, args.plot)
    return EXIT_OK


def _add_alphabet_flag(sp) -> None:
    sp.add_argument("--alphabet", help="alphabet JSON file (default: built-in 32-symbol alphabet)")


def _add_decode_flags(sp) -> None:
    sp.add_argument("--alpha", type=float, default=1.96, help="LM weight (default 1.96)")
    sp.add_argument("--beta", type=float, default=6.0, help="word count bonus (default 6.0)")
    sp.add_argument("--beam-width", type=int, default=1024, help="beam width (default 1024)")
    sp.add_argument("--oov-floor", type=float, default=1e-10,
                    help="probability floor for OOV words (default 1e-10)")
    sp.add_argument("--out", help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tagbeam",
        description="Entity-aware CTC decoding: beam search with LM fusion, "
                    "entity extraction and evaluation.",
    )
    parser.add_argument("--version", action="version", version="tagbeam " + __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("decode", help="prefix beam search over a manifest of posteriorgrams")
    sp.add_argument("manifest", help="TSV manifest: id<TAB>posteriorgram[<TAB>reference]")
    _add_alphabet_flag(sp)
    sp.add_argument("--lm", help="ARPA language model")
    _add_decode_flags(sp)
    sp.add_argument("--jobs", type=int, default=1, help="parallel workers (default 1)")
    sp.set_defaults(func=_cmd_decode)

    sp = sub.add_parser("decode-class", help="beam search against a class-token LM")
    sp.add_argument("manifest")
    _add_alphabet_flag(sp)
    sp.add_argument("--lm", required=True, help="ARPA class-token language model")
    sp.add_argument("--name-dict", help="JSON map of category to surface list")
    sp.add_argument("--gamma", type=float, default=DEFAULT_GAMMA,
                    help="log-score bonus for dictionary names (default ln 2)")
    sp.add_argument("--categories", default="PER",
                    help="comma-separated class-mapped categories (default PER)")
    _add_decode_flags(sp)
    sp.set_defaults(func=_cmd_decode_class)

    sp = sub.add_parser("synth", help="synthesize posteriorgrams for reference transcripts")
    sp.add_argument("refs", help="one tagged transcript per line")
    _add_alphabet_flag(sp)
    sp.add_argument("--noise", type=float, default=0.0, help="noise mass in [0, 1)")
    sp.add_argument("--dur-max", type=int, default=1, help="max frames per character")
    sp.add_argument("--seed", type=int, default=0, help="RNG seed")
    sp.add_argument("--outdir", required=True, help="directory for .lpg files and manifest.tsv")
    sp.add_argument("--jobs", type=int, default=1, help="parallel workers (default 1)")
    sp.set_defaults(func=_cmd_synth)

    sp = sub.add_parser("eval-ner", help="entity precision/recall/F1 report")
    sp.add_argument("refs")
    sp.add_argument("hyps")
    _add_alphabet_flag(sp)
    sp.add_argument("--json", help="write the JSON report here instead of stdout")
    sp.add_argument("--plot", help="render the report figure to this file")
    sp.set_defaults(func=_cmd_eval_ner)

    sp = sub.add_parser("eval-wer", help="corpus word error rate (tags stripped)")
    sp.add_argument("refs")
    sp.add_argument("hyps")
    _add_alphabet_flag(sp)
    sp.set_defaults(func=_cmd_eval_wer)

    sp = sub.add_parser("lm-build", help="estimate an ARPA model from a token corpus")
    sp.add_argument("corpus", help="one whitespace-tokenized sentence per line")
    sp.add_argument("--order", type=int, default=4)
    sp.add_argument("--discount", type=float, default=0.4)
    sp.add_argument("--out", required=True, help="ARPA output path")
    sp.set_defaults(func=_cmd_lm_build)

    sp = sub.add_parser("lm-score", help="score sentences with an ARPA model")
    sp.add_argument("text", help="one sentence per line")
    sp.add_argument("--lm", required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_lm_score)

    sp = sub.add_parser("lm-info", help="print model order, table sizes and vocabulary size")
    sp.add_argument("lm")
    sp.set_defaults(func=_cmd_lm_info)

    for name, func, help_text in (
        ("tag-map", _cmd_tag_map, "bracket annotation to symbol markup"),
        ("tag-unmap", _cmd_tag_unmap, "symbol markup to bracket annotation"),
        ("strip-tags", _cmd_strip_tags, "remove tag symbols"),
    ):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("text", help="input file, one line per transcript")
        _add_alphabet_flag(sp)
        sp.add_argument("--out")
        sp.set_defaults(func=func)

    sp = sub.add_parser("semlm-transform", help="replace entity spans with class tokens")
    sp.add_argument("corpus")
    _add_alphabet_flag(sp)
    sp.add_argument("--categories", default="PER")
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_semlm_transform)

    sp = sub.add_parser("oov-stats", help="OOV statistics of an eval corpus against a vocabulary")
    sp.add_argument("--train", required=True, help="corpus file whose tokens form the vocabulary")
    sp.add_argument("--eval", required=True, help="tagged evaluation corpus")
    _add_alphabet_flag(sp)
    sp.add_argument("--plot", help="render the OOV figure to this file")
    sp.set_defaults(func=_cmd_oov_stats)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ChecksumMismatch as exc:
        _fail(str(exc))
        return EXIT_CHECKSUM
    except OSError as exc:
        _fail(str(exc))
        return EXIT_IO
    except (ValueError, RuntimeError) as exc:
        _fail(str(exc))
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

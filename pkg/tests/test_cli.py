import json

import pytest

from tagbeam.cli import main
from tagbeam.alphabet import Alphabet

REFS = [
    "|MODI] LIVES IN $DELHI]",
    "|SITA] WORKS AT {TCS]",
    "THE TEAM AT {TCS] MET |SITA]",
]


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines))


@pytest.fixture
def synth_dir(tmp_path):
    refs = tmp_path / "refs.txt"
    write_lines(refs, REFS)
    outdir = tmp_path / "pg"
    code = main(["synth", str(refs), "--noise", "0", "--dur-max", "2",
                 "--seed", "7", "--outdir", str(outdir)])
    assert code == 0
    return outdir


def read_decode_output(path):
    rows = [line.split("\t") for line in path.read_text().splitlines()]
    assert all(len(r) == 3 for r in rows)
    return rows


def test_bad_flags_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["decode"])  # missing manifest
    assert info.value.code == 2
    capsys.readouterr()


def test_unknown_command_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2
    capsys.readouterr()


def test_synth_then_decode_reproduces_references(tmp_path, synth_dir):
    out = tmp_path / "hyps.tsv"
    code = main(["decode", str(synth_dir / "manifest.tsv"), "--out", str(out)])
    assert code == 0
    rows = read_decode_output(out)
    assert [r[1] for r in rows] == REFS
    assert [r[0] for r in rows] == ["utt%05d" % i for i in range(len(REFS))]


def test_synth_is_deterministic(tmp_path):
    refs = tmp_path / "refs.txt"
    write_lines(refs, REFS)
    dirs = []
    for name in ("a", "b"):
        outdir = tmp_path / name
        assert main(["synth", str(refs), "--noise", "0.3", "--dur-max", "3",
                     "--seed", "11", "--outdir", str(outdir)]) == 0
        dirs.append(outdir)
    for child in sorted(dirs[0].iterdir()):
        assert child.read_bytes() == (dirs[1] / child.name).read_bytes()


def test_synth_jobs_byte_identical(tmp_path):
    refs = tmp_path / "refs.txt"
    write_lines(refs, REFS)
    dirs = []
    for name, jobs in (("a", "1"), ("b", "4")):
        outdir = tmp_path / name
        assert main(["synth", str(refs), "--noise", "0.2", "--dur-max", "3",
                     "--seed", "5", "--jobs", jobs, "--outdir", str(outdir)]) == 0
        dirs.append(outdir)
    for child in sorted(dirs[0].iterdir()):
        assert child.read_bytes() == (dirs[1] / child.name).read_bytes()


def test_synth_rejects_noise_one(tmp_path, capsys):
    refs = tmp_path / "refs.txt"
    write_lines(refs, ["A"])
    code = main(["synth", str(refs), "--noise", "1.0", "--outdir", str(tmp_path / "x")])
    assert code == 2
    assert "noise" in capsys.readouterr().err


def test_synth_names_unencodable_character(tmp_path, capsys):
    refs = tmp_path / "refs.txt"
    write_lines(refs, ["HI."])
    code = main(["synth", str(refs), "--outdir", str(tmp_path / "x")])
    assert code == 2
    assert "'.'" in capsys.readouterr().err


def test_decode_alpha_zero_lm_invariance(tmp_path, synth_dir):
    corpus = tmp_path / "corpus.txt"
    write_lines(corpus, REFS)
    arpa = tmp_path / "lm.arpa"
    assert main(["lm-build", str(corpus), "--order", "2", "--out", str(arpa)]) == 0
    with_lm = tmp_path / "with.tsv"
    without = tmp_path / "without.tsv"
    base = ["decode", str(synth_dir / "manifest.tsv"), "--alpha", "0", "--beta", "0"]
    assert main(base + ["--lm", str(arpa), "--out", str(with_lm)]) == 0
    assert main(base + ["--out", str(without)]) == 0
    assert with_lm.read_bytes() == without.read_bytes()


def test_decode_missing_file_exit_3(tmp_path, synth_dir, capsys):
    (synth_dir / "utt00001.lpg").unlink()
    code = main(["decode", str(synth_dir / "manifest.tsv"), "--out", str(tmp_path / "o")])
    assert code == 3
    assert "utt00001" in capsys.readouterr().err


def test_decode_checksum_mismatch_exit_4(tmp_path, synth_dir, capsys):
    other = tmp_path / "other.json"
    Alphabet.from_text_symbols("AB").save(other)
    code = main(["decode", str(synth_dir / "manifest.tsv"), "--alphabet", str(other),
                 "--out", str(tmp_path / "o")])
    assert code == 4
    assert "utt00000" in capsys.readouterr().err


def test_decode_jobs_byte_identical(tmp_path, synth_dir):
    out1 = tmp_path / "j1.tsv"
    out2 = tmp_path / "j2.tsv"
    manifest = str(synth_dir / "manifest.tsv")
    assert main(["decode", manifest, "--jobs", "1", "--out", str(out1)]) == 0
    assert main(["decode", manifest, "--jobs", "4", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_eval_ner_identity_and_report(tmp_path, capsys):
    refs = tmp_path / "refs.txt"
    write_lines(refs, REFS)
    report_json = tmp_path / "report.json"
    plot = tmp_path / "report.png"
    code = main(["eval-ner", str(refs), str(refs),
                 "--json", str(report_json), "--plot", str(plot)])
    assert code == 0
    table = capsys.readouterr().out
    assert "Micro average" in table and "Macro average" in table
    report = json.loads(report_json.read_text())
    assert report["micro"] == {"precision": 1.0, "recall": 1.0, "f1": 1.0}
    assert plot.stat().st_size > 0


def test_eval_ner_half_label_not_charged(tmp_path, capsys):
    refs = tmp_path / "refs.txt"
    hyps = tmp_path / "hyps.txt"
    write_lines(refs, ["{T.C.S.] CEO |RAJESH GOPINATHAN] IN $BANGLORE]"])
    write_lines(hyps, ["{T.C.S.] CEO |RAJESH GOPINATHAN IN $BANGLORE]"])
    assert main(["eval-ner", str(refs), str(hyps)]) == 0
    out = capsys.readouterr().out
    report = json.loads(out[out.index("{"):])
    assert report["per_category"]["PER"]["fp"] == 0
    assert report["per_category"]["PER"]["fn"] == 1
    assert report["dropped_hyp_tags"] == 1


def test_eval_ner_empty_files(tmp_path, capsys):
    refs = tmp_path / "empty.txt"
    refs.write_text("")
    assert main(["eval-ner", str(refs), str(refs)]) == 0
    capsys.readouterr()


def test_eval_ner_length_mismatch_exit_2(tmp_path, capsys):
    refs = tmp_path / "refs.txt"
    hyps = tmp_path / "hyps.txt"
    write_lines(refs, ["|A]"])
    write_lines(hyps, ["|A]", "|B]"])
    assert main(["eval-ner", str(refs), str(hyps)]) == 2
    capsys.readouterr()


def test_eval_wer(tmp_path, capsys):
    refs = tmp_path / "refs.txt"
    hyps = tmp_path / "hyps.txt"
    write_lines(refs, ["A B C D"])
    write_lines(hyps, ["A X C D"])
    assert main(["eval-wer", str(refs), str(hyps)]) == 0
    assert capsys.readouterr().out.strip() == "0.250000"


def test_lm_build_score_info(tmp_path, capsys):
    corpus = tmp_path / "corpus.txt"
    write_lines(corpus, REFS)
    arpa = tmp_path / "lm.arpa"
    assert main(["lm-build", str(corpus), "--order", "3", "--out", str(arpa)]) == 0
    assert main(["lm-score", str(corpus), "--lm", str(arpa)]) == 0
    out = capsys.readouterr().out
    scores = [float(line.split("\t")[0]) for line in out.splitlines()]
    assert len(scores) == len(REFS)
    assert all(s < 0 for s in scores)
    assert main(["lm-info", str(arpa)]) == 0
    info = capsys.readouterr().out
    assert "order\t3" in info


def test_lm_build_empty_corpus_exit_2(tmp_path, capsys):
    corpus = tmp_path / "corpus.txt"
    corpus.write_text("")
    assert main(["lm-build", str(corpus), "--out", str(tmp_path / "x.arpa")]) == 2
    capsys.readouterr()


def test_tag_map_unmap_strip(tmp_path, capsys):
    bracket = tmp_path / "bracket.txt"
    write_lines(bracket, ["[PER BOB] RAN TO [LOC AGRA]"])
    mapped = tmp_path / "mapped.txt"
    assert main(["tag-map", str(bracket), "--out", str(mapped)]) == 0
    assert mapped.read_text() == "|BOB] RAN TO $AGRA]\n"
    assert main(["tag-unmap", str(mapped)]) == 0
    assert capsys.readouterr().out == "[PER BOB] RAN TO [LOC AGRA]\n"
    assert main(["strip-tags", str(mapped)]) == 0
    assert capsys.readouterr().out == "BOB RAN TO AGRA\n"


def test_tag_unmap_reports_line_number(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    write_lines(bad, ["|A] FINE", "|B BROKEN"])
    assert main(["tag-unmap", str(bad)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_semlm_transform(tmp_path, capsys):
    corpus = tmp_path / "corpus.txt"
    write_lines(corpus, ["MY NAME IS |MODI].", "|SITA] WENT TO $AGRA]"])
    assert main(["semlm-transform", str(corpus), "--categories", "PER,LOC"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out == ["MY NAME IS <PER>.", "<PER> WENT TO <LOC>"]


def test_semlm_transform_unknown_category(tmp_path, capsys):
    corpus = tmp_path / "corpus.txt"
    write_lines(corpus, ["X"])
    assert main(["semlm-transform", str(corpus), "--categories", "BAD"]) == 2
    capsys.readouterr()


def test_oov_stats_command(tmp_path, capsys):
    train = tmp_path / "train.txt"
    eval_file = tmp_path / "eval.txt"
    plot = tmp_path / "oov.png"
    write_lines(train, ["MY NAME IS"])
    write_lines(eval_file, ["MY NAME IS |MODI]"])
    assert main(["oov-stats", "--train", str(train), "--eval", str(eval_file),
                 "--plot", str(plot)]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["total_words"] == 4
    assert stats["oov_words"] == 1
    assert stats["entity_share_of_oov"] == 1.0
    assert plot.stat().st_size > 0


def test_decode_class_end_to_end(tmp_path):
    refs = tmp_path / "refs.txt"
    write_lines(refs, ["MY NAME IS |MODI]"])
    outdir = tmp_path / "pg"
    assert main(["synth", str(refs), "--noise", "0", "--dur-max", "2",
                 "--seed", "3", "--outdir", str(outdir)]) == 0
    corpus = tmp_path / "slm_corpus.txt"
    write_lines(corpus, ["MY NAME IS <PER>"])
    arpa = tmp_path / "slm.arpa"
    assert main(["lm-build", str(corpus), "--order", "2", "--out", str(arpa)]) == 0
    names = tmp_path / "names.json"
    names.write_text('{"PER": ["MODI"]}')
    out = tmp_path / "hyps.tsv"
    assert main(["decode-class", str(outdir / "manifest.tsv"), "--lm", str(arpa),
                 "--name-dict", str(names), "--out", str(out)]) == 0
    rows = read_decode_output(out)
    assert rows[0][1] == "MY NAME IS |MODI]"

import json
import re
from pathlib import Path

import numpy as np
import pytest

import sge
from sge.cli import EXIT_IO, EXIT_OK, EXIT_VALIDATION, main, sha256
from sge.vectorize import read_sparse_text

TOY = Path(sge.__file__).parent / "data" / "toy"


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def toy(tmp_path):
    return TOY / "edges.tsv", TOY / "labels.tsv"


def test_sample_writes_corpus_dump_and_manifest(tmp_path, toy):
    edges, _ = toy
    out = tmp_path / "w.bin"
    assert run("sample", "--edges", edges, "--dist", "uniform", "-s", 5, "--nu", 50,
               "--seed", 7, "--out", out, "--dump-walks", tmp_path / "d.txt") == EXIT_OK
    manifest = json.loads((tmp_path / "w.bin.manifest.json").read_text())
    assert manifest["seed"] == 7
    assert manifest["parameters"]["nu"] == 50 and manifest["parameters"]["s"] == 5
    for path, digest in manifest["outputs"].items():
        assert sha256(path) == digest
    lines = (tmp_path / "d.txt").read_text().splitlines()
    assert len(lines) == 60
    assert re.fullmatch(r"v\d{5}\t(\(v\d{5},\d\):\d+ ?)+", lines[0])


def test_sample_rerun_is_byte_identical(tmp_path, toy):
    edges, _ = toy
    for name in ("a", "b"):
        assert run("sample", "--edges", edges, "--nu", 30, "--seed", 3, "--out",
                   tmp_path / f"{name}.bin", "--dump-walks", tmp_path / f"{name}.txt") == 0
    assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()


def test_missing_edge_file_is_io_error(tmp_path, capsys):
    missing = tmp_path / "nope.tsv"
    assert run("sample", "--edges", missing, "--out", tmp_path / "w.bin") == EXIT_IO
    assert str(missing) in capsys.readouterr().err


def test_malformed_edge_file_is_validation_error(tmp_path, capsys):
    bad = tmp_path / "bad.tsv"
    bad.write_text("a\tb\nonlyone\n")
    assert run("sample", "--edges", bad, "--out", tmp_path / "w.bin") == EXIT_VALIDATION
    assert f"{bad}:2" in capsys.readouterr().err


def test_bad_flag_value_is_validation_error(tmp_path, toy):
    assert run("sample", "--edges", toy[0], "-s", "five", "--out", tmp_path / "w") == \
        EXIT_VALIDATION
    assert run("sample", "--edges", toy[0], "-s", 0, "--out", tmp_path / "w") == \
        EXIT_VALIDATION


def _pipeline(tmp_path, toy, tag, workers=1, extra_eval=()):
    edges, labels = toy
    walks = tmp_path / f"{tag}.bin"
    assert run("sample", "--edges", edges, "--labels", labels, "--nu", 100, "--seed", 11,
               "--out", walks, "--workers", workers) == 0
    assert run("embed", "--walks", walks, "--scheme", "binary", "-k", 3, "-d", 200,
               "--out-prefix", tmp_path / tag, "--workers", workers) == 0
    assert run("evaluate", "--embedding", tmp_path / f"{tag}.embedding.txt", "--labels",
               labels, "--repetitions", 10, "--out-prefix", tmp_path / f"{tag}.report",
               "--workers", workers, *extra_eval) == 0
    return tmp_path / f"{tag}.embedding.txt", tmp_path / f"{tag}.report.csv"


def test_full_pipeline_on_toy_dataset(tmp_path, toy):
    emb, report = _pipeline(tmp_path, toy, "t")
    m = read_sparse_text(emb)
    assert m.shape[0] == 60 and 0 < m.shape[1] <= 200
    rows = report.read_text().splitlines()
    assert rows[0] == "fraction,repetition,micro_f1,macro_f1"
    assert len(rows) - 1 == 9 * 10
    md = (tmp_path / "t.report.md").read_text()
    assert md.startswith("| Metric / Percentage | 10% | 20% |")
    manifest = json.loads((tmp_path / "t.manifest.json").read_text())
    assert 0 < manifest["summary"]["embedding"]["storage_ratio"]
    for path, digest in manifest["outputs"].items():
        assert sha256(path) == digest
    assert sum(1 for _ in open(tmp_path / "t.vocab.tsv")) == m.shape[1]


def test_pipeline_identical_across_worker_counts(tmp_path, toy):
    a = _pipeline(tmp_path, toy, "one", workers=1)
    b = _pipeline(tmp_path, toy, "four", workers=4)
    assert a[0].read_bytes() == b[0].read_bytes()
    assert a[1].read_bytes() == b[1].read_bytes()


def test_single_fraction_gives_ten_rows(tmp_path, toy):
    _, report = _pipeline(tmp_path, toy, "f", extra_eval=("--fractions", "0.1"))
    assert len(report.read_text().splitlines()) == 11


def test_evaluate_requires_labels(tmp_path, toy):
    emb, _ = _pipeline(tmp_path, toy, "x", extra_eval=("--fractions", "0.5"))
    assert run("evaluate", "--embedding", emb, "--out-prefix", tmp_path / "r") == \
        EXIT_VALIDATION
    assert run("evaluate", "--embedding", emb, "--labels", tmp_path / "none.tsv",
               "--out-prefix", tmp_path / "r") == EXIT_IO


def test_embed_from_graph_with_fp_growth(tmp_path, toy):
    edges, _ = toy
    assert run("embed", "--edges", edges, "--nu", 40, "--scheme", "fp-growth", "--support", 3,
               "--max-size", 2, "--out-prefix", tmp_path / "fp") == 0
    for line in (tmp_path / "fp.vocab.tsv").read_text().splitlines():
        j, freq, desc = line.split("\t")
        assert int(freq) >= 3 and 1 <= desc.count(";") + 1 <= 2
    m = read_sparse_text(tmp_path / "fp.embedding.txt")
    assert set(np.unique(m.data)) <= {1.0}


def test_embed_empty_corpus_warns_and_writes_zero_columns(tmp_path, capsys):
    edges = tmp_path / "e.tsv"
    edges.write_text("a\tb\n")
    subset = tmp_path / "subset.txt"
    subset.write_text("b\n")  # b has no out-edges, so its document is empty
    assert run("embed", "--edges", edges, "--node-subset", subset, "--out-prefix",
               tmp_path / "empty") == EXIT_OK
    assert "warning" in capsys.readouterr().err
    m = read_sparse_text(tmp_path / "empty.embedding.txt")
    assert m.shape == (1, 0)


def test_config_file_supplies_defaults(tmp_path, toy):
    edges, _ = toy
    conf = tmp_path / "c.toml"
    conf.write_text(f'seed = 5\n[sample]\nedges = "{edges}"\nnu = 20\ns = 3\n')
    assert run("sample", "--config", conf, "--out", tmp_path / "w.bin") == 0
    manifest = json.loads((tmp_path / "w.bin.manifest.json").read_text())
    assert manifest["parameters"]["nu"] == 20 and manifest["seed"] == 5
    # command-line flags beat the config file
    assert run("sample", "--config", conf, "--nu", 25, "--out", tmp_path / "v.bin") == 0
    assert json.loads((tmp_path / "v.bin.manifest.json").read_text())["parameters"]["nu"] == 25
    conf.write_text("bogus = 1\n")
    assert run("sample", "--config", conf, "--edges", edges, "--out", tmp_path / "u") == \
        EXIT_VALIDATION


def test_bench_single_and_two_configs(tmp_path, capsys):
    assert run("bench", "--random-nodes", 200, "--grid", "10x3", "--repeats", 1) == 0
    out = capsys.readouterr().out
    assert "time vs linear prediction: 1.00" in out
    table = tmp_path / "b.tsv"
    assert run("bench", "--random-nodes", 200, "--grid", "10x3,100x3", "--repeats", 1,
               "--backends", "python", "--out", table) == 0
    lines = table.read_text().splitlines()
    assert len(lines) == 3 and lines[0].startswith("backend\tnu\ts")


def test_bench_empty_graph_and_bad_grid():
    assert run("bench", "--random-nodes", 0) == EXIT_VALIDATION
    assert run("bench", "--random-nodes", 10, "--grid", "ten") == EXIT_VALIDATION


def test_generate_sbm(tmp_path):
    assert run("generate-sbm", "--sizes", "5,5", "--out-dir", tmp_path / "g") == 0
    assert len((tmp_path / "g" / "labels.tsv").read_text().splitlines()) == 10


@pytest.mark.parametrize("command,flags", [
    ("sample", ["-s", "--nu", "--dist", "--seed"]),
    ("embed", ["-k", "-d", "--support", "--scheme", "--nu"]),
    ("evaluate", ["--fractions", "--repetitions", "--l2"]),
    ("bench", ["--grid", "--backends"]),
])
def test_help_documents_parameters(command, flags, capsys):
    assert main([command, "--help"]) == 0
    text = capsys.readouterr().out
    for flag in flags:
        assert flag in text

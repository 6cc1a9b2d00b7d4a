import hashlib
from pathlib import Path

import pytest

from conftest import GOLDEN
from kmsquot.cli import RunConfig, build_config, main, make_parser, read_config_file
from kmsquot.errors import ConfigError


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path / "out")])


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\np = 7\nk=5\nvariant = sp\nmax-len = 20\n")
    assert read_config_file(cfg) == {"p": 7, "k": 5, "variant": "sp", "max_len": 20}
    args = make_parser().parse_args(["verify", "--config", str(cfg), "--k", "11"])
    c = build_config(args)
    assert (c.p, c.k, c.variant, c.max_len, c.mode) == (7, 11, "sp", 20, "envelope")
    assert c.tag == "p7r1k11-sp"


@pytest.mark.parametrize("body", ["p 7\n", "colour = red\n", "p = seven\n"])
def test_bad_config_file(tmp_path, body):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(body)
    with pytest.raises(ConfigError):
        read_config_file(cfg)
    assert run(tmp_path, "seed", "--config", str(cfg)) == 2


def test_defaults():
    c = build_config(make_parser().parse_args(["complex"]))
    assert c == RunConfig(mode="links")


@pytest.mark.parametrize("argv,hyp", [
    (["seed", "--p", "5", "--k", "5"], "distinct primes"),
    (["seed", "--p", "6", "--k", "5"], "p prime"),
    (["verify", "--p", "5", "--k", "3"], "k > 3"),
    (["verify", "--mode", "links"], "mode"),
    (["complex", "--mode", "full", "--p", "5", "--k", "7"], "k = 1 for full mode"),
])
def test_rejections_exit_2(tmp_path, capsys, argv, hyp):
    assert run(tmp_path, *argv) == 2
    assert f"[{hyp}]" in capsys.readouterr().err


def test_seed_command_and_versions(tmp_path, capsys):
    assert run(tmp_path, "seed", "--p", "7", "--k", "5") == 0
    assert run(tmp_path, "seed", "--p", "7", "--k", "5") == 0
    seeds = sorted((tmp_path / "out" / "seeds").iterdir())
    assert [p.name for p in seeds] == ["p7r1k5-sl.v1.seed", "p7r1k5-sl.v2.seed"]
    assert seeds[0].read_text() == seeds[1].read_text() == (GOLDEN / "p7r1k5-sl.seed").read_text()
    assert "all pass" in capsys.readouterr().out


def test_manifest_hashes(tmp_path):
    run(tmp_path, "seed", "--p", "7", "--k", "5", "--variant", "sp")
    out = tmp_path / "out"
    lines = (out / "manifest.tsv").read_text().splitlines()[2:]
    assert lines
    for line in lines:
        digest, size, rel = line.split("\t")
        data = (out / rel).read_bytes()
        assert hashlib.sha256(data).hexdigest() == digest and len(data) == int(size)


def test_corrupted_seed_file(tmp_path, capsys):
    bad = tmp_path / "bad.seed"
    bad.write_text((GOLDEN / "p7r1k5-sl.seed").read_text()[:200])
    assert run(tmp_path, "verify", "--seed-file", str(bad)) == 2
    assert "parse error" in capsys.readouterr().err


def test_verify_is_byte_identical(tmp_path):
    argv = ["verify", "--p", "7", "--k", "5", "--variant", "sp", "--trials", "5", "--rng-seed", "3"]
    assert run(tmp_path, *argv) == 1  # envelope budget 12 is not enough
    assert run(tmp_path, *argv) == 1
    rep = tmp_path / "out" / "reports"
    a, b = rep / "p7r1k5-sp.verify.v1.txt", rep / "p7r1k5-sp.verify.v2.txt"
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert "envelope.dim" in text and "evidence, not proof" in text
    for line in text.splitlines():
        if "\terratum\t" in line:
            assert (rep / line.split("\t")[3]).is_file()


def test_verify_passes_with_longer_words(tmp_path):
    argv = ["verify", "--seed-file", str(GOLDEN / "p7r1k5-sl.seed"), "--trials", "5", "--max-len", "18"]
    assert run(tmp_path, *argv) == 0


def test_complex_links_and_report(tmp_path, capsys):
    assert run(tmp_path, "complex", "--p", "7", "--k", "5") == 0
    d = tmp_path / "out" / "complex" / "p7r1k5-sl.links.v1"
    assert {p.name for p in d.iterdir()} == {"hdx.txt", "spectra.csv", "link-a.tsv", "link-b.tsv", "link-c.tsv"}
    assert "bound_vacuous yes" in (d / "hdx.txt").read_text()
    assert "vacuous" in capsys.readouterr().out
    run(tmp_path, "seed", "--p", "7", "--k", "5")
    assert run(tmp_path, "report") == 0
    summary = (tmp_path / "out" / "reports" / "summary.v1.txt").read_text()
    assert "p7r1k5-sl.links\tv1\tpass" in summary
    assert "p7r1k5-sl.conditions\tv1\tpass" in summary


def test_full_mode_cap(tmp_path, capsys):
    argv = ["complex", "--mode", "full", "--p", "5", "--k", "1", "--variant", "sp", "--cap", "1000"]
    assert run(tmp_path, *argv) == 2
    assert "cap exceeded" in capsys.readouterr().err


def test_report_without_output(tmp_path):
    assert run(tmp_path, "report") == 2


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "0.1.0" in capsys.readouterr().out

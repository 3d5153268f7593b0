"""CLI behavior: file formats, exit codes, one-shot tokens."""

import json
import os

import pytest

from osslab import cli

WORLD_SEED = "ab" * 32


def run(*argv):
    return cli.main(list(argv))


@pytest.fixture
def world(tmp_path):
    path = tmp_path / "world.json"
    assert (
        run(
            "world", "new", "--n", "8", "--r", "3", "--l", "2",
            "--seed", WORLD_SEED, "--out", str(path),
        )
        == 0
    )
    return path


def keypair(tmp_path, world, **extra):
    pk = tmp_path / "pk.json"
    sk = tmp_path / "sk.json"
    code = run(
        "gen", "--world", str(world), "--rng-seed", "0fe1",
        "--pk-out", str(pk), "--sk-out", str(sk), "--unsafe-test-io",
    )
    assert code == 0
    return pk, sk


def test_world_file_shape_and_determinism(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["world", "new", "--n", "8", "--r", "3", "--l", "2", "--seed", WORLD_SEED]
    assert run(*args, "--out", str(a)) == 0
    assert run(*args, "--out", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["v"] == 1 and doc["kind"] == "world"
    assert doc["params"]["l"] == 2 and doc["seed"] == WORLD_SEED


def test_world_show(world, capsys):
    assert run("world", "show", "--world", str(world), "--json") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["buildable"] is True and doc["params"]["n"] == 8


def test_sign_verify_round_trip(tmp_path, world):
    pk, sk = keypair(tmp_path, world)
    sig = tmp_path / "sig.json"
    assert (
        run("sign", "--sk", str(sk), "--msg", "10", "--rng-seed", "aa",
            "--out", str(sig), "--unsafe-test-io")
        == 0
    )
    assert run("verify", "--pk", str(pk), "--msg", "10", "--sig", str(sig)) == 0
    assert run("verify", "--pk", str(pk), "--msg", "01", "--sig", str(sig)) == 1


def test_second_sign_exits_two(tmp_path, world):
    pk, sk = keypair(tmp_path, world)
    out = tmp_path / "sig.json"
    base = ["sign", "--sk", str(sk), "--msg", "11", "--out", str(out), "--unsafe-test-io"]
    assert run(*base) == 0
    assert json.loads(sk.read_text())["consumed"] is True
    assert run(*base) == 2


def test_sign_requires_unsafe_flag(tmp_path, world):
    _, sk = keypair(tmp_path, world)
    assert run("sign", "--sk", str(sk), "--msg", "11") == 64


def test_sk_out_requires_unsafe_flag(tmp_path, world):
    code = run(
        "gen", "--world", str(world),
        "--pk-out", str(tmp_path / "p.json"), "--sk-out", str(tmp_path / "s.json"),
    )
    assert code == 64


def test_bad_message_is_usage_error(tmp_path, world):
    _, sk = keypair(tmp_path, world)
    assert run("sign", "--sk", str(sk), "--msg", "10110", "--unsafe-test-io") == 64
    assert run("sign", "--sk", str(sk), "--msg", "2x", "--unsafe-test-io") == 64
    # the failed attempts must not have burned the token
    assert json.loads(sk.read_text())["consumed"] is False


def test_malformed_files_exit_64(tmp_path, world):
    pk, sk = keypair(tmp_path, world)
    # wrong kind
    assert run("world", "show", "--world", str(pk)) == 64
    # version bump
    doc = json.loads(world.read_text())
    doc["v"] = 2
    bad = tmp_path / "v2.json"
    bad.write_text(json.dumps(doc))
    assert run("world", "show", "--world", str(bad)) == 64
    # not JSON at all
    junk = tmp_path / "junk.json"
    junk.write_text("{")
    assert run("world", "show", "--world", str(junk)) == 64
    # missing file
    assert run("world", "show", "--world", str(tmp_path / "absent.json")) == 64


def test_unknown_subcommand_exits_64():
    with pytest.raises(SystemExit) as exc:
        run("frobnicate")
    assert exc.value.code == 64


def test_deterministic_signing(tmp_path, world):
    pk1, sk1 = keypair(tmp_path, world)
    sig1 = tmp_path / "s1.json"
    run("sign", "--sk", str(sk1), "--msg", "10", "--rng-seed", "beef",
        "--out", str(sig1), "--unsafe-test-io")
    # regenerate with the same rng seed in a fresh directory
    other = tmp_path / "again"
    other.mkdir()
    pk2, sk2 = keypair(other, world)
    sig2 = other / "s2.json"
    run("sign", "--sk", str(sk2), "--msg", "10", "--rng-seed", "beef",
        "--out", str(sig2), "--unsafe-test-io")
    assert json.loads(sig1.read_text()) == json.loads(sig2.read_text())


def test_hash_mode_round_trip(tmp_path):
    world = tmp_path / "w.json"
    run("world", "new", "--n", "12", "--r", "4", "--l", "4",
        "--seed", WORLD_SEED, "--out", str(world))
    pk, sk = keypair(tmp_path, world)
    msg = tmp_path / "msg.bin"
    msg.write_bytes(os.urandom(300))
    sig = tmp_path / "sig.json"
    assert (
        run("sign", "--sk", str(sk), "--msg-file", str(msg), "--hash",
            "--out", str(sig), "--unsafe-test-io")
        == 0
    )
    assert run("verify", "--pk", str(pk), "--msg-file", str(msg), "--hash",
               "--sig", str(sig)) == 0
    assert run("verify", "--pk", str(pk), "--msg", "something else", "--hash",
               "--sig", str(sig)) == 1


def test_incompressible_cli_flow(tmp_path):
    world = tmp_path / "w.json"
    run("world", "new", "--n", "8", "--r", "3", "--l", "2", "--variant",
        "incompressible", "--seed", WORLD_SEED, "--out", str(world))
    pk, sk = keypair(tmp_path, world)
    sig = tmp_path / "sig.json"
    # message width is l - 1 = 1 bit on this variant
    assert run("sign", "--sk", str(sk), "--msg", "1", "--out", str(sig),
               "--unsafe-test-io") == 0
    assert run("verify", "--pk", str(pk), "--msg", "1", "--sig", str(sig)) == 0
    assert run("verify", "--pk", str(pk), "--msg", "0", "--sig", str(sig)) == 1


def test_lambda_world_written_with_warning(tmp_path, capsys):
    out = tmp_path / "lam.json"
    assert run("world", "new", "--lambda", "2", "--out", str(out)) == 0
    err = capsys.readouterr().err
    assert "not buildable" in err
    doc = json.loads(out.read_text())
    assert doc["params"] == {
        "n": 82, "r": 32, "l": 2, "s": 32,
        "variant": "standard", "perm_mode": "feistel", "lambda": 2,
    }
    # gen on an unbuildable world is a domain rejection
    assert run("gen", "--world", str(out), "--pk-out", str(tmp_path / "p.json")) == 1


def test_experiments_subcommand(tmp_path, capsys):
    out = tmp_path / "report.json"
    code = run("experiments", "--suite", "queries", "--out", str(out), "--json")
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert [r["name"] for r in doc["reports"]] == ["query-profiles"]
    stored = json.loads(out.read_text())
    assert stored["kind"] == "experiments"
    assert all(m["pass"] for r in stored["reports"] for m in r["metrics"])


def test_distinguisher_subcommand(capsys):
    code = run("distinguisher", "--case", "hash-only", "--trials", "50", "--json")
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert all(m["pass"] for m in doc["metrics"])


def test_bench_subcommand(world, capsys):
    assert run("bench", "--world", str(world), "--ops", "5", "--json") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["ops"] == 5
    assert doc["query_delta"]["D"] == 10  # l = 2 dual queries per sign
    assert doc["query_delta"]["Pinv"] == 5


def test_no_temp_files_left_behind(tmp_path, world):
    keypair(tmp_path, world)
    leftovers = [p for p in os.listdir(tmp_path) if p.startswith(".osslab-tmp-")]
    assert leftovers == []

import hashlib

import pytest

from bea1.main import WARNING, ExitCode, main
from conftest import VECTORS
from test_cipher import ZERO_KEY_SCHEDULE

KEY = "0123456789ABCDEF0123456789ABCD"


def test_expand_key(capsys):
    assert main(["expand-key", "--key", "0" * 30]) == ExitCode.OK
    captured = capsys.readouterr()
    assert captured.out.splitlines() == ZERO_KEY_SCHEDULE
    assert WARNING in captured.err


def test_expand_key_first_line_is_the_key_prefix(capsys):
    main(["expand-key", "--key", KEY])
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 12
    assert lines[0] == KEY[:20]


@pytest.mark.parametrize(
    "argv",
    [
        ["expand-key", "--key", "XYZ"],
        ["expand-key", "--key", "0" * 29],
        ["analyze", "nothing"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as e:
        main(argv)
    assert e.value.code == ExitCode.USAGE


def test_encrypt_decrypt_round_trip(tmp_path):
    plain = tmp_path / "plain.bin"
    sealed = tmp_path / "sealed.bea1"
    opened = tmp_path / "opened.bin"
    data = bytes(range(256)) * 4099
    plain.write_bytes(data)

    argv = ["encrypt", "--key", KEY, "--in", str(plain), "--out", str(sealed)]
    assert main(argv + ["--iv", "0" * 20]) == ExitCode.OK
    assert sealed.read_bytes()[:16] == b"BEA1\x01\x01" + bytes(10)
    argv = ["decrypt", "--key", KEY, "--in", str(sealed), "--out", str(opened)]
    assert main(argv + ["--workers", "2"]) == ExitCode.OK
    assert opened.read_bytes() == data

    argv[2] = "F" * 30
    assert main(argv) == ExitCode.OK
    assert hashlib.sha256(opened.read_bytes()).digest() != hashlib.sha256(data).digest()


def test_encrypt_picks_a_fresh_iv(tmp_path):
    plain = tmp_path / "plain.bin"
    plain.write_bytes(b"attack at dawn")
    first, second = tmp_path / "a", tmp_path / "b"
    main(["encrypt", "--key", KEY, "--in", str(plain), "--out", str(first)])
    main(["encrypt", "--key", KEY, "--in", str(plain), "--out", str(second)])
    assert first.read_bytes()[6:16] != second.read_bytes()[6:16]


def test_empty_input_gives_a_bare_header(tmp_path):
    plain = tmp_path / "empty"
    plain.write_bytes(b"")
    sealed = tmp_path / "sealed"
    main(["encrypt", "--key", KEY, "--in", str(plain), "--out", str(sealed)])
    assert len(sealed.read_bytes()) == 16


def test_bad_container_is_a_format_error(tmp_path):
    junk = tmp_path / "junk"
    junk.write_bytes(b"NOPE" + bytes(40))
    out = tmp_path / "out"
    argv = ["decrypt", "--key", KEY, "--in", str(junk), "--out", str(out)]
    assert main(argv) == ExitCode.FORMAT


def test_missing_input_is_a_usage_error(tmp_path):
    missing, out = tmp_path / "nope", tmp_path / "out"
    argv = ["encrypt", "--key", KEY, "--in", str(missing), "--out", str(out)]
    assert main(argv) == ExitCode.USAGE


def test_kat_generate_and_verify(tmp_path, capsys):
    path = tmp_path / "kat.txt"
    argv = ["kat", "generate", str(path), "--count", "5", "--seed", "3"]
    assert main(argv) == ExitCode.OK
    assert main(["kat", "verify", str(path)]) == ExitCode.OK
    assert "OK 5 records" in capsys.readouterr().out

    text = path.read_text().replace("CT=", "CT=F", 1)
    lines = [
        line[:23] if line.startswith("CT=") else line for line in text.splitlines()
    ]
    path.write_text("\n".join(lines) + "\n")
    assert main(["kat", "verify", str(path)]) == ExitCode.VERIFICATION
    assert "MISMATCH record 0" in capsys.readouterr().out


def test_pinned_kat_verifies():
    assert main(["kat", "verify", str(VECTORS / "bea1_kat.txt")]) == ExitCode.OK


def test_malformed_kat_is_a_format_error(tmp_path):
    path = tmp_path / "kat.txt"
    path.write_text("KEY=12\n")
    assert main(["kat", "verify", str(path)]) == ExitCode.FORMAT


def test_analyze_bounds(capsys):
    assert main(["analyze", "bounds", "--rounds", "10"]) == ExitCode.OK
    out = capsys.readouterr().out
    assert "-116.95" in out and "-50.00" in out
    assert main(["analyze", "bounds", "--lu", "512"]) == ExitCode.VERIFICATION


def test_analyze_matrix(capsys):
    assert main(["analyze", "matrix"]) == ExitCode.OK
    out = capsys.readouterr().out
    assert "CLAIM differential branch number of M: 5" in out
    assert "CLAIM linear branch number of M: 5" in out
    assert "FAIL" not in out


def test_analyze_sbox(capsys, tmp_path):
    argv = ["analyze", "sbox", "--index", "0", "--export-csv", str(tmp_path)]
    assert main(argv) == ExitCode.OK
    out = capsys.readouterr().out
    assert "S0 differential uniformity" in out and "PASS" in out
    assert (tmp_path / "ddt_s0.csv").exists()


def test_randtest_negative_control(capsys):
    argv = ["randtest", "--stub", "constant", "--sequences", "3", "--bits", "1000"]
    assert main(argv) == ExitCode.VERIFICATION
    assert "RESULT FAIL" in capsys.readouterr().out


def test_randtest_is_deterministic(capsys):
    argv = ["randtest", "--key", KEY, "--sequences", "3", "--bits", "2000"]
    main(argv)
    first = capsys.readouterr().out
    main(argv + ["--workers", "2"])
    assert capsys.readouterr().out == first
    assert "summary:" in first


def test_tables(capsys):
    assert main(["tables"]) == ExitCode.OK
    out = capsys.readouterr().out
    digest = "e97d5e7005977e1357e6fa41bedff3c945b4f073d091147e1232f557148128c0"
    assert f"{digest}  linear_m.txt" in out

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from bea1.bundles import Block, MasterKey
from bea1.cipher import (
    HEADER_LENGTH,
    Bea1,
    FormatError,
    KeySchedule,
    Mode,
    build_header,
    bundles_to_bytes,
    bytes_to_bundles,
    counter_blocks,
    ctr_transform,
    decrypt_block,
    encrypt_block,
    expand_key,
    open_ctr,
    parse_header,
    round_constant,
    seal_ctr,
)
from conftest import random_block, random_key

ZERO_KEY_SCHEDULE = [
    "00000000000000000000",
    "00000000002EC214BA00",
    "2EC214BA002EC214BA00",
    "1E9032FD743052264774",
    "1E9032FD74512790D6BB",
    "6175B691CF7FE5846CBB",
    "43B2E6838722C7501248",
    "5D22D47EF3FDBE9A8C89",
    "DF79CA9EC1825B1EE032",
    "9283EC40B64DFA26DE77",
    "CFA1383E45DA713BACF8",
    "978B1D728F582A254CCA",
]

COUNTING_KEY = "0123456789ABCDEF0123456789ABCD"


@pytest.mark.parametrize(
    "key, pt, ct",
    [
        ("0" * 30, "00000000000000000000", "E7045E29B908D2422FD3"),
        ("0" * 30, "00000000000000000001", "2B2F50DFE2EE7D5047DA"),
        ("0" * 30, "FFFFFFFFFFFFFFFFFFFF", "B4B9BF8295D8CFD31354"),
        (COUNTING_KEY, "0123456789ABCDEF0123", "40D84FC050839A450AB0"),
        (
            "66A2E482A1EBA0A2E3B52634278749",
            "AF9375847647CD2663B0",
            "59A97EF7C70E3FE0940F",
        ),
    ],
)
def test_known_answers(key, pt, ct):
    K = MasterKey.from_hex(key)
    assert encrypt_block(K, Block.from_hex(pt)).to_hex() == ct
    assert decrypt_block(K, Block.from_hex(ct)).to_hex() == pt


def test_round_constants():
    assert [round_constant(i) for i in range(7)] == [1, 3, 9, 27, 81, 243, 729]
    assert round_constant(7) == 2187 % 1024


def test_zero_key_schedule(zero_key):
    schedule = expand_key(zero_key)
    assert [rk.to_hex() for rk in schedule.round_keys] == ZERO_KEY_SCHEDULE
    assert len(schedule.flat) == 96


def test_schedule_starts_with_master_key():
    schedule = expand_key(MasterKey.from_hex(COUNTING_KEY))
    assert schedule[0].to_hex() == COUNTING_KEY[:20]
    assert schedule[1].bundles[:4] == MasterKey.from_hex(COUNTING_KEY).bundles[8:]
    assert schedule[11].to_hex() == "6F77D01C431FEFDB8D9E"


def test_key_schedule_length_is_checked():
    with pytest.raises(ValueError):
        KeySchedule(round_keys=())


def test_decrypt_inverts_encrypt(rng):
    for _ in range(100):
        cipher = Bea1(random_key(rng))
        blocks = rng.integers(0, 1024, size=(100, 8), dtype=np.uint16)
        ciphertexts = cipher.encrypt_blocks(blocks)
        assert_array_equal(cipher.decrypt_blocks(ciphertexts), blocks)


def test_batch_matches_single_block(rng):
    cipher = Bea1(random_key(rng))
    plaintexts = [random_block(rng) for _ in range(20)]
    batch = cipher.encrypt_blocks(np.array([p.bundles for p in plaintexts]))
    for p, row in zip(plaintexts, batch):
        c = cipher.encrypt(p)
        assert c.bundles == tuple(int(b) for b in row)
        assert cipher.decrypt(c) == p


def test_batch_rejects_bad_shapes(zero_cipher):
    with pytest.raises(ValueError):
        zero_cipher.encrypt_blocks(np.zeros((3, 7), dtype=np.uint16))
    with pytest.raises(ValueError):
        zero_cipher.encrypt_blocks(np.full((1, 8), 1024))


def test_round_traces(rng):
    cipher = Bea1(random_key(rng))
    p = random_block(rng)
    forward = cipher.encrypt_trace(p)
    assert len(forward) == 11
    assert forward[-1] == cipher.encrypt(p)

    backward = cipher.decrypt_trace(forward[-1])
    assert len(backward) == 11
    for i in range(10):
        assert backward[i] == forward[9 - i]
    assert backward[-1] == p


def test_plaintext_avalanche(rng):
    cipher = Bea1(random_key(rng))
    flips = []
    for _ in range(1000):
        x = int.from_bytes(rng.bytes(10), "big")
        bit = int(rng.integers(0, 80))
        c1 = cipher.encrypt(Block.from_int(x)).to_int()
        c2 = cipher.encrypt(Block.from_int(x ^ (1 << bit))).to_int()
        flips.append((c1 ^ c2).bit_count())
    assert 36 <= np.mean(flips) <= 44


def test_bundle_byte_conversion(rng):
    blocks = rng.integers(0, 1024, size=(5, 8), dtype=np.uint16)
    data = bundles_to_bytes(blocks)
    assert len(data) == 50
    assert data[:10] == Block(tuple(int(b) for b in blocks[0])).pack()
    assert_array_equal(bytes_to_bundles(data), blocks)
    with pytest.raises(ValueError):
        bytes_to_bundles(bytes(11))


def test_counter_blocks_carry_and_wrap():
    low_edge = counter_blocks(Block.from_int((1 << 40) - 1), 0, 2)
    assert Block(tuple(int(b) for b in low_edge[1])) == Block.from_int(1 << 40)

    top = counter_blocks(Block.from_int((1 << 80) - 1), 0, 2)
    assert_array_equal(top[0], np.full(8, 0x3FF))
    assert_array_equal(top[1], np.zeros(8))

    shifted = counter_blocks(Block.from_int(5), 3, 1)
    assert Block(tuple(int(b) for b in shifted[0])) == Block.from_int(8)


def test_ctr_keystream_is_encrypted_counter(zero_key):
    out = ctr_transform(zero_key, Block.zero(), bytes(20))
    assert out.hex().upper() == "E7045E29B908D2422FD3" + "2B2F50DFE2EE7D5047DA"
    assert ctr_transform(zero_key, Block.zero(), b"") == b""


def test_ctr_is_an_involution_and_thread_count_invariant(rng):
    key = random_key(rng)
    iv = random_block(rng)
    data = rng.bytes(1 << 20)
    sealed = ctr_transform(key, iv, data)
    assert ctr_transform(key, iv, data, workers=4) == sealed
    assert ctr_transform(key, iv, sealed, workers=3) == data


def test_partial_final_block(zero_key):
    out = ctr_transform(zero_key, Block.zero(), b"\x00" * 13)
    assert out == bytes.fromhex("E7045E29B908D2422FD3" + "2B2F50")


def test_file_container_round_trip(rng):
    key = random_key(rng)
    iv = random_block(rng)
    data = rng.bytes(1 << 20)
    blob = seal_ctr(key, iv, data)
    assert len(blob) == HEADER_LENGTH + len(data)
    assert blob[:6] == b"BEA1\x01\x01"
    assert blob[6:16] == iv.pack()
    assert open_ctr(key, blob) == data
    assert open_ctr(random_key(rng), blob) != data


def test_empty_file_is_only_a_header(zero_key):
    iv = Block.from_hex("0123456789ABCDEF0123")
    assert seal_ctr(zero_key, iv, b"") == b"BEA1\x01\x01" + bytes.fromhex(
        "0123456789ABCDEF0123"
    )
    assert parse_header(build_header(iv)) == (Mode.CTR, iv)


@pytest.mark.parametrize(
    "blob, message",
    [
        (b"BEA1\x01\x01" + bytes(9), "Truncated"),
        (b"BEA2\x01\x01" + bytes(10), "magic"),
        (b"BEA1\x02\x01" + bytes(10), "version"),
        (b"BEA1\x01\x07" + bytes(10), "mode"),
    ],
)
def test_bad_headers(blob, message, zero_key):
    with pytest.raises(FormatError, match=message):
        parse_header(blob)
    with pytest.raises(FormatError):
        open_ctr(zero_key, blob)

"""BEA-1: key schedule, block encryption and decryption, CTR mode.

BEA-1 contains a deliberate backdoor. It is implemented for research on
that backdoor and must never be used to protect real data.
"""

from __future__ import annotations

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from bea1 import settings
from bea1.bundles import BUNDLE_BITS, BUNDLE_MASK, Block, MasterKey, RoundKey
from bea1.tables import BeaTables, LinearMapTable, apply_linear, load_tables

logger = logging.getLogger(__name__)
logger.setLevel(settings.LOG_LEVEL)

ROUNDS = 10
ROUND_KEYS = 12
KEY_SCHEDULE_ITERATIONS = 7
SHIFT_ROWS = (0, 5, 2, 7, 4, 1, 6, 3)

MAGIC = b"BEA1"
FORMAT_VERSION = 0x01
HEADER_LENGTH = len(MAGIC) + 2 + Block.byte_length()

_HALF_BITS = Block.bit_length() // 2
_HALF_MASK = (1 << _HALF_BITS) - 1
_BIT_SHIFTS = np.arange(BUNDLE_BITS - 1, -1, -1, dtype=np.uint16)
_SHIFT_ROWS_INDEX = np.array(SHIFT_ROWS)


class Mode(enum.IntEnum):
    CTR = 0x01


class FormatError(ValueError):
    pass


def round_constant(i: int) -> int:
    return pow(3, i, 1 << BUNDLE_BITS)


@dataclass(frozen=True)
class KeySchedule:
    round_keys: tuple[RoundKey, ...]

    def __post_init__(self):
        if len(self.round_keys) != ROUND_KEYS:
            raise ValueError(
                f"A key schedule holds {ROUND_KEYS} round keys, "
                f"got {len(self.round_keys)}"
            )

    @property
    def flat(self) -> tuple[int, ...]:
        return tuple(b for round_key in self.round_keys for b in round_key)

    def __getitem__(self, r: int) -> RoundKey:
        return self.round_keys[r]


def expand_key(K: MasterKey, tables: BeaTables | None = None) -> KeySchedule:
    tables = tables or load_tables()
    s0, s1, s2, s3 = tables.sboxes
    m = tables.m

    k = list(K.bundles)
    for i in range(KEY_SCHEDULE_ITERATIONS):
        base = 12 * i
        x = apply_linear(m, k[base + 8 : base + 12])
        x = (s0(x[0]) ^ round_constant(i), s1(x[1]), s2(x[2]), s3(x[3]))
        first = [k[base + j] ^ x[j] for j in range(4)]
        k.extend(first)
        second = [k[base + 4 + j] ^ k[base + 12 + j] for j in range(4)]
        k.extend(second)
        third = [k[base + 8 + j] ^ k[base + 16 + j] for j in range(4)]
        k.extend(third)

    assert len(k) == Block.size * ROUND_KEYS, len(k)
    return KeySchedule(
        tuple(RoundKey(tuple(k[8 * r : 8 * r + 8])) for r in range(ROUND_KEYS))
    )


def _mix(lut: np.ndarray, half: np.ndarray) -> np.ndarray:
    return (
        lut[0][half[:, 0]]
        ^ lut[1][half[:, 1]]
        ^ lut[2][half[:, 2]]
        ^ lut[3][half[:, 3]]
    )


def _mix_columns(map: LinearMapTable, x: np.ndarray) -> np.ndarray:
    lut = map.lut_array
    return np.concatenate([_mix(lut, x[:, :4]), _mix(lut, x[:, 4:])], axis=1)


def _substitute(x: np.ndarray, boxes: list[np.ndarray]) -> np.ndarray:
    out = np.empty_like(x)
    for i in range(Block.size):
        out[:, i] = boxes[i % 4][x[:, i]]
    return out


def bundles_to_bytes(blocks: np.ndarray) -> bytes:
    bits = (blocks[..., None] >> _BIT_SHIFTS) & 1
    return np.packbits(bits.reshape(len(blocks), -1).astype(np.uint8), axis=1).tobytes()


def bytes_to_bundles(data: bytes) -> np.ndarray:
    if len(data) % Block.byte_length():
        raise ValueError(f"{len(data)} bytes is not a whole number of blocks")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8)).reshape(
        -1, Block.size, BUNDLE_BITS
    )
    return (bits.astype(np.uint16) << _BIT_SHIFTS).sum(axis=2, dtype=np.uint16)


def counter_blocks(iv: Block, start: int, count: int) -> np.ndarray:
    """Bundles of iv + start, iv + start + 1, ... modulo 2**80."""
    base = (iv.to_int() + start) % (1 << Block.bit_length())
    lows = np.uint64(base & _HALF_MASK) + np.arange(count, dtype=np.uint64)
    carry = lows >> np.uint64(_HALF_BITS)
    highs = (np.uint64(base >> _HALF_BITS) + carry) & np.uint64(_HALF_MASK)
    lows &= np.uint64(_HALF_MASK)
    blocks = np.empty((count, Block.size), dtype=np.uint16)
    for i in range(4):
        shift = np.uint64(BUNDLE_BITS * (3 - i))
        blocks[:, i] = (highs >> shift) & np.uint64(BUNDLE_MASK)
        blocks[:, 4 + i] = (lows >> shift) & np.uint64(BUNDLE_MASK)
    return blocks


class Bea1:
    """BEA-1 under one master key; the key schedule is expanded once."""

    def __init__(self, key: MasterKey, tables: BeaTables | None = None):
        self.key = key
        self.tables = tables or load_tables()
        self.schedule = expand_key(key, self.tables)
        self._round_keys = [rk.bundles for rk in self.schedule.round_keys]
        self._round_key_array = np.array(self._round_keys, dtype=np.uint16)
        self._forward = [sbox.forward for sbox in self.tables.sboxes]
        self._inverse = [sbox.inverse for sbox in self.tables.sboxes]

    def __repr__(self):
        return f"<Bea1(key={self.key.to_hex()})>"

    def _encrypt(self, x: list[int], trace: list[tuple[int, ...]] | None) -> list[int]:
        fw = self._forward
        rk = self._round_keys
        m = self.tables.m
        for r in range(ROUNDS):
            x = [x[i] ^ rk[r][i] for i in range(8)]
            x = [fw[i & 3][x[i]] for i in range(8)]
            x = [x[i] for i in SHIFT_ROWS]
            x = [*apply_linear(m, x[:4]), *apply_linear(m, x[4:])]
            if trace is not None:
                trace.append(tuple(x))
        x = [x[i] ^ rk[10][i] for i in range(8)]
        x = [fw[i & 3][x[i]] for i in range(8)]
        x = [x[i] ^ rk[11][j] for j, i in enumerate(SHIFT_ROWS)]
        if trace is not None:
            trace.append(tuple(x))
        return x

    def _decrypt(self, x: list[int], trace: list[tuple[int, ...]] | None) -> list[int]:
        inv = self._inverse
        rk = self._round_keys
        m_inv = self.tables.m_inv
        x = [x[i] ^ rk[11][i] for i in range(8)]
        x = [x[i] for i in SHIFT_ROWS]
        x = [inv[i & 3][x[i]] ^ rk[10][i] for i in range(8)]
        if trace is not None:
            trace.append(tuple(x))
        for r in range(ROUNDS - 1, -1, -1):
            x = [*apply_linear(m_inv, x[:4]), *apply_linear(m_inv, x[4:])]
            x = [x[i] for i in SHIFT_ROWS]
            x = [inv[i & 3][x[i]] ^ rk[r][i] for i in range(8)]
            if trace is not None:
                trace.append(tuple(x))
        return x

    def encrypt(self, p: Block) -> Block:
        return Block(tuple(self._encrypt(list(p.bundles), None)))

    def decrypt(self, c: Block) -> Block:
        return Block(tuple(self._decrypt(list(c.bundles), None)))

    def encrypt_trace(self, p: Block) -> list[Block]:
        """State after each of the ten full rounds, then the ciphertext."""
        trace: list[tuple[int, ...]] = []
        self._encrypt(list(p.bundles), trace)
        return [Block(state) for state in trace]

    def decrypt_trace(self, c: Block) -> list[Block]:
        """State after undoing the final round, then after undoing rounds 9..0."""
        trace: list[tuple[int, ...]] = []
        self._decrypt(list(c.bundles), trace)
        return [Block(state) for state in trace]

    def encrypt_blocks(self, blocks: np.ndarray) -> np.ndarray:
        x = self._check_blocks(blocks)
        boxes = [sbox.forward_array for sbox in self.tables.sboxes]
        rk = self._round_key_array
        for r in range(ROUNDS):
            x = _substitute(x ^ rk[r], boxes)[:, _SHIFT_ROWS_INDEX]
            x = _mix_columns(self.tables.m, x)
        x = _substitute(x ^ rk[10], boxes)[:, _SHIFT_ROWS_INDEX]
        return x ^ rk[11]

    def decrypt_blocks(self, blocks: np.ndarray) -> np.ndarray:
        x = self._check_blocks(blocks)
        boxes = [sbox.inverse_array for sbox in self.tables.sboxes]
        rk = self._round_key_array
        x = _substitute((x ^ rk[11])[:, _SHIFT_ROWS_INDEX], boxes) ^ rk[10]
        for r in range(ROUNDS - 1, -1, -1):
            x = _mix_columns(self.tables.m_inv, x)[:, _SHIFT_ROWS_INDEX]
            x = _substitute(x, boxes) ^ rk[r]
        return x

    @staticmethod
    def _check_blocks(blocks: np.ndarray) -> np.ndarray:
        x = np.array(blocks, dtype=np.uint16)
        if x.ndim != 2 or x.shape[1] != Block.size:
            raise ValueError(f"Expected an (n, {Block.size}) array, got {x.shape}")
        if x.size and x.max() > BUNDLE_MASK:
            raise ValueError("Bundle out of range in block array")
        return x

    def keystream(self, iv: Block, start: int, count: int) -> bytes:
        return bundles_to_bytes(self.encrypt_blocks(counter_blocks(iv, start, count)))

    def ctr_transform(self, iv: Block, data: bytes, workers: int = 1) -> bytes:
        if not data:
            return b""
        n_blocks = -(-len(data) // Block.byte_length())
        if workers <= 1 or n_blocks < workers:
            stream = self.keystream(iv, 0, n_blocks)
        else:
            chunk = -(-n_blocks // workers)
            starts = range(0, n_blocks, chunk)
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = pool.map(
                    lambda start: self.keystream(
                        iv, start, min(chunk, n_blocks - start)
                    ),
                    starts,
                )
                stream = b"".join(parts)
        keystream = np.frombuffer(stream, dtype=np.uint8)[: len(data)]
        return (np.frombuffer(data, dtype=np.uint8) ^ keystream).tobytes()


def encrypt_block(K: MasterKey, p: Block) -> Block:
    return Bea1(K).encrypt(p)


def decrypt_block(K: MasterKey, c: Block) -> Block:
    return Bea1(K).decrypt(c)


def ctr_transform(K: MasterKey, iv: Block, data: bytes, workers: int = 1) -> bytes:
    return Bea1(K).ctr_transform(iv, data, workers=workers)


def build_header(iv: Block, mode: Mode = Mode.CTR) -> bytes:
    return MAGIC + bytes([FORMAT_VERSION, mode]) + iv.pack()


def parse_header(blob: bytes) -> tuple[Mode, Block]:
    if len(blob) < HEADER_LENGTH:
        raise FormatError(f"Truncated header: {len(blob)} of {HEADER_LENGTH} bytes")
    if blob[: len(MAGIC)] != MAGIC:
        raise FormatError(f"Bad magic {blob[:len(MAGIC)]!r}, expected {MAGIC!r}")
    version, mode = blob[len(MAGIC)], blob[len(MAGIC) + 1]
    if version != FORMAT_VERSION:
        raise FormatError(f"Unsupported format version {version:#04x}")
    try:
        mode = Mode(mode)
    except ValueError:
        raise FormatError(f"Unsupported mode {mode:#04x}") from None
    return mode, Block.unpack(blob[len(MAGIC) + 2 : HEADER_LENGTH])


def seal_ctr(K: MasterKey, iv: Block, data: bytes, workers: int = 1) -> bytes:
    return build_header(iv) + ctr_transform(K, iv, data, workers=workers)


def open_ctr(K: MasterKey, blob: bytes, workers: int = 1) -> bytes:
    _, iv = parse_header(blob)
    logger.debug("Opening %d ciphertext bytes with IV %s", len(blob), iv)
    return ctr_transform(K, iv, blob[HEADER_LENGTH:], workers=workers)

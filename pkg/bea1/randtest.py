"""Randomness testing of BEA-1 output.

Four tests of the NIST statistical test suite (frequency, block frequency,
runs and forward cumulative sums) and a battery that runs them over many
keystream sequences and checks the pass proportions.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
import pandas as pd

from bea1 import settings, special
from bea1.bundles import Block, MasterKey
from bea1.cipher import Bea1, bundles_to_bytes, counter_blocks

logger = logging.getLogger(__name__)
logger.setLevel(settings.LOG_LEVEL)

MIN_LENGTH = 100

TEST_NAMES = ("monobit", "block_frequency", "runs", "cusum")

StreamSource = Callable[[int, int], "BitStream"]


@dataclass(frozen=True, eq=False)
class BitStream:
    bits: np.ndarray
    origin: str

    @classmethod
    def from_bytes(cls, data: bytes, n_bits: int, origin: str) -> BitStream:
        bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))[:n_bits]
        return cls(bits=bits, origin=origin)

    @classmethod
    def from_string(cls, text: str, origin: str = "literal") -> BitStream:
        bits = np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0")
        if bits.size and bits.max() > 1:
            raise ValueError("Bit strings may only contain 0 and 1")
        return cls(bits=bits.astype(np.uint8), origin=origin)

    def complement(self) -> BitStream:
        return BitStream(bits=1 - self.bits, origin=f"complement of {self.origin}")

    def __len__(self) -> int:
        return int(self.bits.size)

    def __repr__(self):
        return f"<BitStream(origin={self.origin}, n={len(self)})>"


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    test_name: str
    p_value: float
    passed: bool
    applicable: bool = True

    @classmethod
    def judge(cls, test_name: str, p_value: float, alpha: float) -> TestResult:
        p_value = min(max(p_value, 0.0), 1.0)
        return cls(test_name=test_name, p_value=p_value, passed=p_value >= alpha)

    @classmethod
    def not_applicable(cls, test_name: str) -> TestResult:
        return cls(test_name=test_name, p_value=0.0, passed=False, applicable=False)

    @property
    def verdict(self) -> str:
        if not self.applicable:
            return "N/A"
        return "PASS" if self.passed else "FAIL"


def _require_length(s: BitStream, minimum: int, test_name: str) -> int:
    n = len(s)
    if n < minimum:
        raise ValueError(f"{test_name} needs at least {minimum} bits, got {n}")
    return n


def generate_stream(K: MasterKey, iv: Block, n_bits: int) -> BitStream:
    """Packed ciphertext bits of E_K(iv), E_K(iv + 1), ... (CTR keystream)."""
    if n_bits < 1:
        raise ValueError(f"n_bits must be positive, got {n_bits}")
    n_blocks = -(-n_bits // Block.bit_length())
    data = Bea1(K).keystream(iv, 0, n_blocks)
    return BitStream.from_bytes(
        data, n_bits, origin=f"ctr key={K.to_hex()} iv={iv.to_hex()} n={n_bits}"
    )


def key_avalanche_stream(K: MasterKey, iv: Block, n_bits: int) -> BitStream:
    """E_K(iv + i) xor E_K'(iv + i) where K' flips key bit i mod 120."""
    if n_bits < 1:
        raise ValueError(f"n_bits must be positive, got {n_bits}")
    key_bits = MasterKey.bit_length()
    n_blocks = -(-n_bits // Block.bit_length())
    counters = counter_blocks(iv, 0, n_blocks)
    out = Bea1(K).encrypt_blocks(counters)
    key = K.to_int()
    for j in range(min(key_bits, n_blocks)):
        flipped = MasterKey.from_int(key ^ (1 << (key_bits - 1 - j)))
        out[j::key_bits] ^= Bea1(flipped).encrypt_blocks(counters[j::key_bits])
    return BitStream.from_bytes(
        bundles_to_bytes(out),
        n_bits,
        origin=f"key-avalanche key={K.to_hex()} iv={iv.to_hex()} n={n_bits}",
    )


def monobit_test(s: BitStream, alpha: float = settings.ALPHA) -> TestResult:
    n = _require_length(s, MIN_LENGTH, "monobit")
    total = 2 * int(s.bits.sum()) - n
    p_value = special.erfc(abs(total) / math.sqrt(2 * n))
    return TestResult.judge("monobit", p_value, alpha)


def block_frequency_test(
    s: BitStream,
    block_len: int = settings.BLOCK_FREQUENCY_LEN,
    alpha: float = settings.ALPHA,
) -> TestResult:
    if block_len < 1:
        raise ValueError(f"block_len must be positive, got {block_len}")
    n = _require_length(s, block_len, "block_frequency")
    n_blocks = n // block_len
    blocks = s.bits[: n_blocks * block_len].reshape(n_blocks, block_len)
    proportions = blocks.sum(axis=1) / block_len
    chi_squared = 4.0 * block_len * float(((proportions - 0.5) ** 2).sum())
    p_value = special.igamc(n_blocks / 2.0, chi_squared / 2.0)
    return TestResult.judge("block_frequency", p_value, alpha)


def runs_test(s: BitStream, alpha: float = settings.ALPHA) -> TestResult:
    n = _require_length(s, MIN_LENGTH, "runs")
    pi = float(s.bits.sum()) / n
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        logger.debug("runs test not applicable to %s: pi=%.4f", s.origin, pi)
        return TestResult.not_applicable("runs")
    runs = 1 + int(np.count_nonzero(s.bits[1:] != s.bits[:-1]))
    spread = 2.0 * n * pi * (1.0 - pi)
    scale = 2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi)
    p_value = special.erfc(abs(runs - spread) / scale)
    return TestResult.judge("runs", p_value, alpha)


def cusum_test(s: BitStream, alpha: float = settings.ALPHA) -> TestResult:
    """Forward cumulative sums; k ranges truncate toward zero like the suite."""
    n = _require_length(s, MIN_LENGTH, "cusum")
    partial = np.cumsum(2 * s.bits.astype(np.int64) - 1)
    z = int(np.abs(partial).max())
    root = math.sqrt(n)

    sum1 = 0.0
    for k in range(int((-n / z + 1) / 4), int((n / z - 1) / 4) + 1):
        sum1 += special.normal_cdf((4 * k + 1) * z / root)
        sum1 -= special.normal_cdf((4 * k - 1) * z / root)
    sum2 = 0.0
    for k in range(int((-n / z - 3) / 4), int((n / z - 1) / 4) + 1):
        sum2 += special.normal_cdf((4 * k + 3) * z / root)
        sum2 -= special.normal_cdf((4 * k + 1) * z / root)
    return TestResult.judge("cusum", 1.0 - sum1 + sum2, alpha)


def apply_tests(
    s: BitStream,
    alpha: float = settings.ALPHA,
    block_len: int = settings.BLOCK_FREQUENCY_LEN,
) -> list[TestResult]:
    return [
        monobit_test(s, alpha=alpha),
        block_frequency_test(s, block_len=block_len, alpha=alpha),
        runs_test(s, alpha=alpha),
        cusum_test(s, alpha=alpha),
    ]


def ctr_source(K: MasterKey) -> StreamSource:
    return lambda index, n_bits: generate_stream(K, Block.from_int(index), n_bits)


def key_avalanche_source(K: MasterKey) -> StreamSource:
    return lambda index, n_bits: key_avalanche_stream(K, Block.from_int(index), n_bits)


def constant_source(bit: int = 0) -> StreamSource:
    return lambda index, n_bits: BitStream(
        bits=np.full(n_bits, bit, dtype=np.uint8), origin=f"constant {bit}"
    )


def alternating_source() -> StreamSource:
    return lambda index, n_bits: BitStream(
        bits=(np.arange(n_bits) % 2).astype(np.uint8), origin="alternating"
    )


def proportion_interval(
    n: int, p_hat: float = settings.PROPORTION_P_HAT
) -> tuple[float, float]:
    margin = 3.0 * math.sqrt(p_hat * (1.0 - p_hat) / n)
    return p_hat - margin, p_hat + margin


@dataclass
class BatteryReport:
    results: pd.DataFrame
    origin: str
    alpha: float
    p_hat: float

    def summary(self) -> pd.DataFrame:
        rows = []
        for name in TEST_NAMES:
            group = self.results[self.results["test"] == name]
            applicable = group[group["applicable"]]
            n = len(applicable)
            passed = int(applicable["passed"].sum())
            if n:
                proportion = passed / n
                low, high = proportion_interval(n, self.p_hat)
                within = low <= proportion <= high
            else:
                proportion = low = high = float("nan")
                within = False
            rows.append(
                {
                    "test": name,
                    "applicable": n,
                    "passed": passed,
                    "proportion": proportion,
                    "low": low,
                    "high": high,
                    "within": within,
                }
            )
        return pd.DataFrame(rows)

    @property
    def passed(self) -> bool:
        return bool(self.summary()["within"].all())

    def render(self) -> str:
        lines = [f"battery: {self.origin}, alpha={self.alpha}"]
        for row in self.results.itertuples(index=False):
            if not row.applicable:
                verdict = "N/A"
            else:
                verdict = "PASS" if row.passed else "FAIL"
            lines.append(
                f"{row.sequence:4d} {row.test:<16} {row.p_value:.6f} {verdict}"
            )
        lines.append("summary:")
        for row in self.summary().itertuples(index=False):
            if row.applicable:
                detail = (
                    f"{row.passed}/{row.applicable} = {row.proportion:.4f} "
                    f"interval [{row.low:.4f}, {row.high:.4f}]"
                )
            else:
                detail = "no applicable sequences"
            verdict = "PASS" if row.within else "FAIL"
            lines.append(f"  {row.test:<16} {detail} {verdict}")
        lines.append(f"RESULT {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def run_battery(
    K: MasterKey | None,
    n_sequences: int = settings.BATTERY_SEQUENCES,
    bits_per_sequence: int = settings.BATTERY_BITS,
    alpha: float = settings.ALPHA,
    p_hat: float = settings.PROPORTION_P_HAT,
    block_len: int = settings.BLOCK_FREQUENCY_LEN,
    source: StreamSource | None = None,
    workers: int = 1,
) -> BatteryReport:
    """Test ``n_sequences`` streams, sequence i generated with IV = i.

    ``source`` replaces the CTR keystream of ``K``, which is how the negative
    controls run through the same battery.
    """
    if n_sequences < 1:
        raise ValueError(f"n_sequences must be positive, got {n_sequences}")
    if bits_per_sequence < max(MIN_LENGTH, block_len):
        raise ValueError(
            f"bits_per_sequence must be at least {max(MIN_LENGTH, block_len)}"
        )
    if source is None:
        if K is None:
            raise ValueError("run_battery needs a key or a stream source")
        source = ctr_source(K)

    def test_sequence(index: int) -> tuple[str, list[dict]]:
        stream = source(index, bits_per_sequence)
        return stream.origin, [
            {"sequence": index, "test": r.test_name, "p_value": r.p_value,
             "passed": r.passed, "applicable": r.applicable}
            for r in apply_tests(stream, alpha=alpha, block_len=block_len)
        ]

    logger.info(
        "Running battery: %d sequences of %d bits", n_sequences, bits_per_sequence
    )
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        outcomes = list(pool.map(test_sequence, range(n_sequences)))
    rows = [row for _, sequence_rows in outcomes for row in sequence_rows]
    origin = outcomes[0][0].split(" iv=")[0]
    report = BatteryReport(
        results=pd.DataFrame(rows), origin=origin, alpha=alpha, p_hat=p_hat
    )
    logger.info("Battery %s", "passed" if report.passed else "failed")
    return report

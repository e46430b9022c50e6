"""Known-answer test files.

Records are separated by blank lines and carry ``KEY=``, ``PT=`` and ``CT=``
lines in uppercase hex. Record ``i`` of seed ``s`` is derived from
SHA-256("BEA1-KAT:{s}:{i}"): the key is the first 30 hex digits, the
plaintext the next 20, and the ciphertext is computed.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from bea1 import settings
from bea1.bundles import Block, MasterKey
from bea1.cipher import Bea1, FormatError

logger = logging.getLogger(__name__)
logger.setLevel(settings.LOG_LEVEL)

FIELDS = ("KEY", "PT", "CT")


class KatFormatError(FormatError):
    pass


@dataclass(frozen=True)
class KatRecord:
    key: MasterKey
    pt: Block
    ct: Block

    def render(self) -> str:
        return (
            f"KEY={self.key.to_hex()}\n"
            f"PT={self.pt.to_hex()}\n"
            f"CT={self.ct.to_hex()}\n"
        )

    def check(self) -> bool:
        return Bea1(self.key).encrypt(self.pt) == self.ct


def derive_record(seed: int, index: int) -> KatRecord:
    digest = hashlib.sha256(f"BEA1-KAT:{seed}:{index}".encode()).hexdigest().upper()
    key = MasterKey.from_hex(digest[:30])
    pt = Block.from_hex(digest[30:50])
    return KatRecord(key=key, pt=pt, ct=Bea1(key).encrypt(pt))


def generate_records(
    count: int = settings.KAT_COUNT, seed: int = settings.KAT_SEED
) -> list[KatRecord]:
    if count < 0:
        raise ValueError(f"count must be non-negative, got {count}")
    return [derive_record(seed, index) for index in range(count)]


def render_records(records: Iterable[KatRecord]) -> str:
    return "\n".join(record.render() for record in records)


def parse_records(text: str) -> Iterator[KatRecord]:
    fields: dict[str, str] = {}
    start = 1
    for number, line in enumerate([*text.splitlines(), ""], start=1):
        line = line.strip()
        if not line:
            if fields:
                yield _build_record(fields, start)
                fields = {}
            continue
        if line.startswith("#"):
            continue
        if not fields:
            start = number
        name, sep, value = line.partition("=")
        name = name.strip().upper()
        if not sep or name not in FIELDS:
            raise KatFormatError(
                f"line {number}: expected KEY=, PT= or CT=, got {line!r}"
            )
        if name in fields:
            raise KatFormatError(f"line {number}: duplicate {name} field")
        fields[name] = value.strip()


def _build_record(fields: dict[str, str], line: int) -> KatRecord:
    missing = [name for name in FIELDS if name not in fields]
    if missing:
        raise KatFormatError(f"record at line {line}: missing {', '.join(missing)}")
    try:
        return KatRecord(
            key=MasterKey.from_hex(fields["KEY"]),
            pt=Block.from_hex(fields["PT"]),
            ct=Block.from_hex(fields["CT"]),
        )
    except ValueError as e:
        raise KatFormatError(f"record at line {line}: {e}") from e


def read_records(path: Path | str) -> list[KatRecord]:
    return list(parse_records(Path(path).read_text(encoding="ascii")))


def write_records(path: Path | str, records: Iterable[KatRecord]) -> None:
    Path(path).write_text(render_records(records), encoding="ascii")


def verify_records(records: Iterable[KatRecord]) -> int | None:
    """Index of the first record whose ciphertext does not match, or None."""
    checked = 0
    for index, record in enumerate(records):
        if not record.check():
            logger.error(
                "KAT record %d mismatch: KEY=%s PT=%s", index, record.key, record.pt
            )
            return index
        checked += 1
    logger.info("Verified %d KAT records", checked)
    return None

"""Bundle and block value types.

A bundle is a 10-bit unsigned integer. Blocks, master keys and round keys are
fixed-length tuples of bundles, packed MSB-first in index order: bit j
(0 = MSB) of bundle i sits at bit position 10*i + j of the packed string.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from typing import TYPE_CHECKING, ClassVar, Iterable, Iterator

if TYPE_CHECKING:
    from typing import Self

BUNDLE_BITS = 10
BUNDLE_SIZE = 1 << BUNDLE_BITS
BUNDLE_MASK = BUNDLE_SIZE - 1

_HEX_DIGITS = frozenset("0123456789abcdefABCDEF")


def check_bundle(value: int) -> int:
    value = operator.index(value)
    if not 0 <= value <= BUNDLE_MASK:
        raise ValueError(f"Bundle out of range: {value}")
    return value


def bundle_from_hex(text: str) -> int:
    if len(text) != 3 or not _HEX_DIGITS.issuperset(text):
        raise ValueError(f"Not a 3-digit hex bundle: {text!r}")
    value = int(text, 16)
    if value > BUNDLE_MASK:
        raise ValueError(f"Bundle {text!r} does not fit in {BUNDLE_BITS} bits")
    return value


def bundle_to_hex(value: int) -> str:
    return f"{check_bundle(value):03X}"


@dataclass(frozen=True)
class BundleVector:
    bundles: tuple[int, ...]

    size: ClassVar[int] = 0

    def __post_init__(self):
        bundles = tuple(check_bundle(b) for b in self.bundles)
        if len(bundles) != self.size:
            raise ValueError(
                f"{type(self).__name__} needs {self.size} bundles, got {len(bundles)}"
            )
        object.__setattr__(self, "bundles", bundles)

    @classmethod
    def of(cls, bundles: Iterable[int]) -> Self:
        return cls(tuple(bundles))

    @classmethod
    def zero(cls) -> Self:
        return cls((0,) * cls.size)

    @classmethod
    def bit_length(cls) -> int:
        return cls.size * BUNDLE_BITS

    @classmethod
    def byte_length(cls) -> int:
        return cls.bit_length() // 8

    @classmethod
    def from_int(cls, value: int) -> Self:
        if not 0 <= value < 1 << cls.bit_length():
            raise ValueError(f"{value:#x} does not fit in {cls.bit_length()} bits")
        return cls(
            tuple(
                (value >> (BUNDLE_BITS * (cls.size - 1 - i))) & BUNDLE_MASK
                for i in range(cls.size)
            )
        )

    def to_int(self) -> int:
        value = 0
        for b in self.bundles:
            value = (value << BUNDLE_BITS) | b
        return value

    def pack(self) -> bytes:
        return self.to_int().to_bytes(self.byte_length(), "big")

    @classmethod
    def unpack(cls, data: bytes) -> Self:
        if len(data) != cls.byte_length():
            raise ValueError(
                f"{cls.__name__} needs {cls.byte_length()} bytes, got {len(data)}"
            )
        return cls.from_int(int.from_bytes(data, "big"))

    @classmethod
    def from_hex(cls, text: str) -> Self:
        text = text.strip()
        if len(text) != 2 * cls.byte_length() or not _HEX_DIGITS.issuperset(text):
            raise ValueError(
                f"{cls.__name__} needs {2 * cls.byte_length()} hex digits, got {text!r}"
            )
        return cls.unpack(bytes.fromhex(text))

    def to_hex(self) -> str:
        return self.pack().hex().upper()

    @classmethod
    def from_bundle_hex(cls, text: str) -> Self:
        return cls(tuple(bundle_from_hex(t) for t in text.split()))

    def to_bundle_hex(self) -> str:
        return " ".join(bundle_to_hex(b) for b in self.bundles)

    def __xor__(self, other: BundleVector) -> Self:
        if not isinstance(other, BundleVector) or len(other) != self.size:
            return NotImplemented
        return type(self)(tuple(a ^ b for a, b in zip(self.bundles, other.bundles)))

    def __iter__(self) -> Iterator[int]:
        return iter(self.bundles)

    def __getitem__(self, index: int) -> int:
        return self.bundles[index]

    def __len__(self) -> int:
        return self.size

    def __repr__(self):
        return f"<{type(self).__name__}({self.to_bundle_hex()})>"

    def __str__(self):
        return self.to_hex()


class Block(BundleVector):
    size = 8


class MasterKey(BundleVector):
    size = 12


class RoundKey(BundleVector):
    size = 8


def pack_block(b: Block) -> bytes:
    return b.pack()


def unpack_block(data: bytes) -> Block:
    return Block.unpack(data)


def pack_key(k: MasterKey) -> bytes:
    return k.pack()


def unpack_key(data: bytes) -> MasterKey:
    return MasterKey.unpack(data)

"""S-boxes S0..S3 and the linear map M with its inverse.

The constants are stored as text assets in ``bea1/data`` (3-digit hex
bundles, row-major) and verified every time they are loaded.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from functools import cache, cached_property
from importlib import resources
from typing import NamedTuple, Sequence

import numpy as np

from bea1 import settings
from bea1.bundles import BUNDLE_BITS, BUNDLE_SIZE, bundle_from_hex

logger = logging.getLogger(__name__)
logger.setLevel(settings.LOG_LEVEL)

SBOX_ASSETS = ("sbox_0.txt", "sbox_1.txt", "sbox_2.txt", "sbox_3.txt")
M_ASSET = "linear_m.txt"
M_INV_ASSET = "linear_m_inv.txt"

MAP_BUNDLES = 4
MAP_BITS = MAP_BUNDLES * BUNDLE_BITS

Vector4 = tuple[int, int, int, int]

ZERO_VECTOR: Vector4 = (0, 0, 0, 0)

_BIT_SHIFTS = np.arange(BUNDLE_BITS - 1, -1, -1)
_BIT_WEIGHTS = 1 << _BIT_SHIFTS


class TableIntegrityError(Exception):
    pass


def read_asset(name: str) -> list[int]:
    text = resources.files("bea1").joinpath("data", name).read_text(encoding="ascii")
    return [bundle_from_hex(token) for token in text.split()]


def table_digests() -> dict[str, str]:
    return {
        name: hashlib.sha256(
            resources.files("bea1").joinpath("data", name).read_bytes()
        ).hexdigest()
        for name in (*SBOX_ASSETS, M_ASSET, M_INV_ASSET)
    }


@dataclass(frozen=True)
class SBoxTable:
    name: str
    forward: tuple[int, ...]
    inverse: tuple[int, ...]

    @classmethod
    def from_forward(cls, name: str, forward: Sequence[int]) -> SBoxTable:
        if len(forward) != BUNDLE_SIZE:
            raise TableIntegrityError(
                f"{name}: length invariant violated, {len(forward)} entries"
            )
        inverse = [-1] * BUNDLE_SIZE
        for x, y in enumerate(forward):
            if inverse[y] != -1:
                raise TableIntegrityError(
                    f"{name}: permutation invariant violated, {y:03X} appears twice"
                )
            inverse[y] = x
        return cls(name=name, forward=tuple(forward), inverse=tuple(inverse))

    @cached_property
    def forward_array(self) -> np.ndarray:
        return np.array(self.forward, dtype=np.uint16)

    @cached_property
    def inverse_array(self) -> np.ndarray:
        return np.array(self.inverse, dtype=np.uint16)

    def check(self) -> None:
        if sorted(self.forward) != list(range(BUNDLE_SIZE)):
            raise TableIntegrityError(f"{self.name}: permutation invariant violated")
        for x in range(BUNDLE_SIZE):
            if self.inverse[self.forward[x]] != x:
                raise TableIntegrityError(
                    f"{self.name}: inverse invariant violated at {x:03X}"
                )

    def __call__(self, x: int) -> int:
        return self.forward[x]

    def __repr__(self):
        return f"<SBoxTable(name={self.name})>"


@dataclass(frozen=True)
class LinearMapTable:
    """A linear map on four bundles, given by the images of the 40 basis vectors.

    ``basis_images[10 * j + t]`` is the image of the vector holding ``1 << t``
    in position ``j`` and zero elsewhere, the order the appendix lists them in.
    ``per_bundle_lut[j][b]`` is the image of ``b`` alone in position ``j``.
    """

    name: str
    basis_images: tuple[Vector4, ...]
    per_bundle_lut: tuple[tuple[Vector4, ...], ...]

    @classmethod
    def from_basis_images(
        cls, name: str, images: Sequence[Sequence[int]]
    ) -> LinearMapTable:
        images = tuple(tuple(int(b) for b in image) for image in images)
        if len(images) != MAP_BITS or any(len(i) != MAP_BUNDLES for i in images):
            raise TableIntegrityError(f"{name}: expected {MAP_BITS} 4-bundle images")
        lut = []
        for j in range(MAP_BUNDLES):
            table = [ZERO_VECTOR] * BUNDLE_SIZE
            for b in range(1, BUNDLE_SIZE):
                low = b & -b
                prev = table[b ^ low]
                image = images[BUNDLE_BITS * j + low.bit_length() - 1]
                table[b] = (
                    prev[0] ^ image[0],
                    prev[1] ^ image[1],
                    prev[2] ^ image[2],
                    prev[3] ^ image[3],
                )
            lut.append(tuple(table))
        return cls(name=name, basis_images=images, per_bundle_lut=tuple(lut))

    @cached_property
    def lut_array(self) -> np.ndarray:
        return np.array(self.per_bundle_lut, dtype=np.uint16)

    def check(self) -> None:
        for j in range(MAP_BUNDLES):
            if self.per_bundle_lut[j][0] != ZERO_VECTOR:
                raise TableIntegrityError(
                    f"{self.name}: zero-image invariant violated in position {j}"
                )
            for b in range(BUNDLE_SIZE):
                expected = [0, 0, 0, 0]
                for t in range(BUNDLE_BITS):
                    if b >> t & 1:
                        image = self.basis_images[BUNDLE_BITS * j + t]
                        for o in range(MAP_BUNDLES):
                            expected[o] ^= image[o]
                if tuple(expected) != self.per_bundle_lut[j][b]:
                    raise TableIntegrityError(
                        f"{self.name}: linearity invariant violated at "
                        f"position {j}, bundle {b:03X}"
                    )

    def __repr__(self):
        return f"<LinearMapTable(name={self.name})>"


class BeaTables(NamedTuple):
    sboxes: tuple[SBoxTable, SBoxTable, SBoxTable, SBoxTable]
    m: LinearMapTable
    m_inv: LinearMapTable


def apply_linear(map: LinearMapTable, v: Sequence[int]) -> Vector4:
    lut = map.per_bundle_lut
    a = lut[0][v[0]]
    b = lut[1][v[1]]
    c = lut[2][v[2]]
    d = lut[3][v[3]]
    return (
        a[0] ^ b[0] ^ c[0] ^ d[0],
        a[1] ^ b[1] ^ c[1] ^ d[1],
        a[2] ^ b[2] ^ c[2] ^ d[2],
        a[3] ^ b[3] ^ c[3] ^ d[3],
    )


def basis_vector(index: int) -> Vector4:
    """The basis vector at ``basis_images[index]``."""
    vector = [0, 0, 0, 0]
    vector[index // BUNDLE_BITS] = 1 << (index % BUNDLE_BITS)
    return tuple(vector)


def vector_to_bits(v: Sequence[int]) -> np.ndarray:
    return ((np.asarray(v, dtype=np.int64)[:, None] >> _BIT_SHIFTS) & 1).astype(
        np.uint8
    ).ravel()


def bits_to_vector(bits: np.ndarray) -> Vector4:
    bundles = np.asarray(bits, dtype=np.int64).reshape(MAP_BUNDLES, BUNDLE_BITS)
    return tuple(int(b) for b in bundles @ _BIT_WEIGHTS)


def as_binary_matrix(map: LinearMapTable) -> np.ndarray:
    """40x40 matrix over GF(2) acting on MSB-first packed 4-bundle vectors.

    Column ``10 * j + t`` is the image of bit ``9 - t`` in position ``j``.
    """
    matrix = np.zeros((MAP_BITS, MAP_BITS), dtype=np.uint8)
    for j in range(MAP_BUNDLES):
        for t in range(BUNDLE_BITS):
            image = map.basis_images[BUNDLE_BITS * j + BUNDLE_BITS - 1 - t]
            matrix[:, BUNDLE_BITS * j + t] = vector_to_bits(image)
    return matrix


def linear_map_from_matrix(matrix: np.ndarray, name: str = "matrix") -> LinearMapTable:
    matrix = np.asarray(matrix, dtype=np.uint8)
    if matrix.shape != (MAP_BITS, MAP_BITS):
        raise ValueError(f"Expected a {MAP_BITS}x{MAP_BITS} matrix, got {matrix.shape}")
    images = [
        bits_to_vector(matrix[:, BUNDLE_BITS * j + BUNDLE_BITS - 1 - s])
        for j in range(MAP_BUNDLES)
        for s in range(BUNDLE_BITS)
    ]
    return LinearMapTable.from_basis_images(name, images)


def _load_map(name: str, asset: str) -> LinearMapTable:
    values = read_asset(asset)
    if len(values) != MAP_BITS * MAP_BUNDLES:
        raise TableIntegrityError(f"{name}: length invariant violated")
    images = [values[i : i + MAP_BUNDLES] for i in range(0, len(values), MAP_BUNDLES)]
    return LinearMapTable.from_basis_images(name, images)


@cache
def load_tables() -> BeaTables:
    sboxes = tuple(
        SBoxTable.from_forward(f"S{i}", read_asset(asset))
        for i, asset in enumerate(SBOX_ASSETS)
    )
    for sbox in sboxes:
        sbox.check()

    m = _load_map("M", M_ASSET)
    m_inv = _load_map("M^-1", M_INV_ASSET)
    m.check()
    m_inv.check()

    for index in range(MAP_BITS):
        e = basis_vector(index)
        if apply_linear(m_inv, apply_linear(m, e)) != e:
            raise TableIntegrityError(
                f"M^-1 o M identity invariant violated on basis vector {index}"
            )
        if apply_linear(m, apply_linear(m_inv, e)) != e:
            raise TableIntegrityError(
                f"M o M^-1 identity invariant violated on basis vector {index}"
            )

    logger.info("Tables verified: S0..S3 bijective, M and M^-1 linear and inverse")
    return BeaTables(sboxes=sboxes, m=m, m_inv=m_inv)

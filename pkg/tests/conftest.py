from pathlib import Path

import numpy as np
import pytest

from bea1.bundles import Block, MasterKey
from bea1.cipher import Bea1
from bea1.tables import BeaTables, load_tables

VECTORS = Path(__file__).parent / "vectors"


@pytest.fixture(scope="session")
def tables() -> BeaTables:
    return load_tables()


@pytest.fixture(scope="session")
def zero_key() -> MasterKey:
    return MasterKey.zero()


@pytest.fixture(scope="session")
def zero_cipher(zero_key) -> Bea1:
    return Bea1(zero_key)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20170)


def random_key(rng: np.random.Generator) -> MasterKey:
    return MasterKey.unpack(rng.bytes(MasterKey.byte_length()))


def random_block(rng: np.random.Generator) -> Block:
    return Block.unpack(rng.bytes(Block.byte_length()))

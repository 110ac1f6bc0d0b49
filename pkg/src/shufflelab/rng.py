"""Seed handling and per-replica random streams.

Every replica of every experiment draws from its own child stream of a
``numpy.random.SeedSequence``.  The child is addressed by
``(master_seed, measure_tag, replica_index)`` only, so splitting replicas
across workers never changes what any replica sees.
"""

from __future__ import annotations

import os
import zlib

import numpy as np

SEED_ENV_VAR = "SHUFFLE_LAB_SEED"
DEFAULT_SEED = 0
_SEED_MAX = 2**64


def parse_seed(value: int | str) -> int:
    """Parse a 64-bit unsigned seed given as an int, a decimal string or 0x-hex."""
    if isinstance(value, (int, np.integer)):
        seed = int(value)
    else:
        text = str(value).strip().lower().replace("_", "")
        try:
            seed = int(text, 16) if text.startswith("0x") else int(text, 10)
        except ValueError:
            raise ValueError(f"invalid seed {value!r}: expected decimal or 0x-hex") from None
    if not 0 <= seed < _SEED_MAX:
        raise ValueError(f"seed {seed} outside the unsigned 64-bit range")
    return seed


def resolve_seed(value: int | str | None = None) -> int:
    """Return ``value`` parsed, else the ``SHUFFLE_LAB_SEED`` env var, else 0."""
    if value is not None:
        return parse_seed(value)
    env = os.environ.get(SEED_ENV_VAR)
    if env:
        return parse_seed(env)
    return DEFAULT_SEED


def tag_code(tag: str) -> int:
    # crc32 is stable across processes, unlike hash()
    return zlib.crc32(tag.encode("utf-8"))


def replica_seed_sequence(master_seed: int, tag: str, replica: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(parse_seed(master_seed), spawn_key=(tag_code(tag), int(replica)))


def replica_rng(master_seed: int, tag: str, replica: int = 0) -> np.random.Generator:
    """Generator for one replica: child ``(tag, replica)`` of the master seed."""
    return np.random.Generator(np.random.PCG64(replica_seed_sequence(master_seed, tag, replica)))

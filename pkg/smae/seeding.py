"""Seed fan-out.

Every random stream is derived from one master seed, a role name and
integer keys (graph index, epoch, repeat...), so results never depend on
execution order.
"""

import hashlib

import numpy as np

_SEED_MASK = (1 << 64) - 1


def derive_seed(master: int, role: str, *keys: int) -> int:
    """Derive a child seed.

    :param master: Master seed
    :param role: What the stream is used for
    :param keys: Integer keys identifying the stream
    :return: 64-bit seed, ``master XOR md5(role:keys)[:8]``
    """
    tag = ":".join([role] + [str(int(key)) for key in keys])
    digest = hashlib.md5(tag.encode("utf-8")).digest()
    return (int(master) & _SEED_MASK) ^ int.from_bytes(digest[:8], "little")


def stream(master: int, role: str, *keys: int) -> np.random.Generator:
    """Get an independent random stream.

    :param master: Master seed
    :param role: What the stream is used for
    :param keys: Integer keys identifying the stream
    :return: Seeded generator
    """
    return np.random.default_rng(derive_seed(master, role, *keys))

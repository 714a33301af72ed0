"""Deterministic derivation of independent random substreams.

Every stochastic draw in the package (learner responses, Leitner tie-breaks,
answer-choice sampling, evaluation shuffles) comes from a generator derived
here from a root seed plus a tuple of context keys.  Derivation is stateless:
the same (root, keys) always yields the same stream, no matter how many other
streams were consumed in between.  That property is what makes trial-by-trial
replay and matched-population comparisons bit-exact.
"""

from __future__ import annotations

import zlib

import numpy as np

_Key = int | str | float | bytes


def _key_words(key: _Key) -> tuple[int, ...]:
    """Map one context key to 32-bit words for a numpy SeedSequence."""
    if isinstance(key, bool):
        return (int(key),)
    if isinstance(key, int):
        if key < 0:
            key = (-key << 1) | 1
        else:
            key <<= 1
        words = []
        while True:
            words.append(key & 0xFFFFFFFF)
            key >>= 32
            if key == 0:
                break
        return tuple(words)
    if isinstance(key, float):
        bits = int(np.float64(key).view(np.uint64))
        return (bits & 0xFFFFFFFF, bits >> 32)
    if isinstance(key, str):
        key = key.encode("utf-8")
    if isinstance(key, bytes):
        return (zlib.crc32(key), len(key) & 0xFFFFFFFF)
    raise TypeError(f"unsupported substream key type: {type(key)!r}")


def substream(root_seed: int, *keys: _Key) -> np.random.Generator:
    """A generator reproducibly determined by ``root_seed`` and ``keys``."""
    words: list[int] = list(_key_words(root_seed))
    for key in keys:
        words.extend(_key_words(key))
    return np.random.default_rng(np.random.SeedSequence(words))


def substream_uniform(root_seed: int, *keys: _Key) -> float:
    """First uniform draw of the derived stream, in [0, 1)."""
    return float(substream(root_seed, *keys).random())

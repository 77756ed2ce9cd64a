"""Deterministic splittable RNG streams.

Every random decision in the pipeline draws from a stream derived from
(global seed, identity id, stage tag, sample index, ...) so that identities
and samples can be generated in any order, or in parallel, without changing
any output. String tags hash through crc32 (stable across processes, unlike
builtin hash()).
"""

from __future__ import annotations

import zlib

import numpy as np

_U64 = 0xFFFFFFFFFFFFFFFF


def _key_word(key: int | str | np.integer) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key) & _U64
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    raise TypeError(f"stream key must be int or str, got {type(key).__name__}")


def seed_sequence(seed: int, *keys: int | str) -> np.random.SeedSequence:
    """SeedSequence keyed by the global seed plus any mix of int/str keys."""
    return np.random.SeedSequence([_key_word(seed)] + [_key_word(k) for k in keys])


def substream(seed: int, *keys: int | str) -> np.random.Generator:
    """Independent Generator for one (seed, *keys) slot."""
    return np.random.default_rng(seed_sequence(seed, *keys))


def stream_token(seed: int, *keys: int | str) -> int:
    """64-bit token derived from a stream slot.

    The pipeline seeds per-sample augmentation rngs with
    `np.random.default_rng(token)` and records the token in the manifest,
    so the token alone replays that sample's augmentation.
    """
    return int(seed_sequence(seed, *keys).generate_state(1, dtype=np.uint64)[0])

"""Seeded, splittable random streams.

Every stream is a Philox4x64 counter-based generator keyed through numpy's
``SeedSequence`` with ``entropy=seed`` and ``spawn_key=(label_hash, *index)``.
The label hash is the first 8 bytes of BLAKE2b over the UTF-8 label, so
streams are stable across processes and Python versions, and deriving one
stream never advances another.
"""

from __future__ import annotations

import hashlib

import numpy as np

from degeneracy.errors import InvalidInputError

_U64 = 2**64


def _label_key(label: str) -> int:
    return int.from_bytes(hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest(), "little")


class SeededRng:
    """A 64-bit seed plus a recipe for independent labelled sub-streams."""

    __slots__ = ("seed",)

    algorithm = "philox4x64/seedsequence-blake2b"

    def __init__(self, seed: int):
        if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
            raise InvalidInputError(f"seed must be an integer, got {seed!r}")
        seed = int(seed)
        if not 0 <= seed < _U64:
            raise InvalidInputError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed

    def __repr__(self) -> str:
        return f"SeededRng({self.seed})"

    def __eq__(self, other) -> bool:
        return isinstance(other, SeededRng) and other.seed == self.seed

    def __hash__(self) -> int:
        return hash(("SeededRng", self.seed))

    def seed_sequence(self, label: str, *index: int) -> np.random.SeedSequence:
        key = (_label_key(label),) + tuple(int(i) for i in index)
        return np.random.SeedSequence(entropy=self.seed, spawn_key=key)

    def stream(self, label: str, *index: int) -> np.random.Generator:
        """A fresh generator for ``(label, *index)``; same arguments, same stream."""
        return np.random.Generator(np.random.Philox(self.seed_sequence(label, *index)))

    def child(self, label: str, *index: int) -> "SeededRng":
        """A derived seed, for handing to code that takes a ``SeededRng``."""
        word = self.seed_sequence(label, *index).generate_state(1, dtype=np.uint64)[0]
        return SeededRng(int(word))


def as_rng(rng) -> SeededRng:
    """Accept a ``SeededRng`` or a bare integer seed."""
    return rng if isinstance(rng, SeededRng) else SeededRng(rng)

"""Entropy sources.

Everything random in the system (codebooks, shuffle labels, selection plans,
salts, session tokens) is drawn through one of these objects, so a run can be
replayed exactly from a recorded byte stream.
"""
from __future__ import annotations

import hashlib
import secrets
from typing import Protocol

from .errors import EntropyError


class Entropy(Protocol):
    def randbelow(self, n: int) -> int: ...

    def token_bytes(self, n: int) -> bytes: ...


class SystemEntropy:
    """Operating-system CSPRNG via :mod:`secrets`."""

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        try:
            return secrets.randbelow(n)
        except (OSError, NotImplementedError) as exc:  # pragma: no cover
            raise EntropyError(detail=str(exc)) from exc

    def token_bytes(self, n: int) -> bytes:
        try:
            return secrets.token_bytes(n)
        except (OSError, NotImplementedError) as exc:  # pragma: no cover
            raise EntropyError(detail=str(exc)) from exc


class StreamEntropy:
    """Replays a recorded byte stream.

    ``randbelow(n)`` reads the minimal number of big-endian bytes and rejects
    values at or above the largest multiple of ``n``; for ``n <= 256`` a
    recorded byte ``v < n`` therefore yields exactly ``v``, which is what
    lets fixtures script individual draws.

    When the recording runs out the source either raises
    :class:`EntropyError` or, with ``extend=True``, continues with a
    SHAKE-256 expansion of the recording so short hex seeds still drive a
    full, reproducible run.
    """

    _CHUNK = 4096

    def __init__(self, data: bytes, extend: bool = False, seed: bytes | None = None):
        self._data = bytes(data)
        self._seed = self._data if seed is None else bytes(seed)
        self._pos = 0
        self._extend = extend
        self._counter = 0
        self._consumed = 0

    @classmethod
    def from_seed(cls, seed: bytes | str) -> "StreamEntropy":
        if isinstance(seed, str):
            seed = bytes.fromhex(seed)
        return cls(seed, extend=True)

    @classmethod
    def derived(cls, label: bytes | str) -> "StreamEntropy":
        """Pure expansion of ``label``; nothing is replayed verbatim."""
        if isinstance(label, str):
            label = label.encode("utf-8")
        return cls(b"", extend=True, seed=label)

    @property
    def consumed(self) -> int:
        return self._consumed

    def _refill(self) -> None:
        block = hashlib.shake_256(
            b"trident-stream" + self._counter.to_bytes(8, "big") + self._seed
        ).digest(self._CHUNK)
        self._counter += 1
        self._data = self._data[self._pos:] + block
        self._pos = 0

    def read(self, n: int) -> bytes:
        if n < 0:
            raise ValueError("n must be non-negative")
        if self._pos + n > len(self._data):
            if not self._extend:
                raise EntropyError(detail="recorded entropy stream exhausted")
            while self._pos + n > len(self._data):
                self._refill()
        out = self._data[self._pos:self._pos + n]
        self._pos += n
        self._consumed += n
        return out

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        width = max(1, ((n - 1).bit_length() + 7) // 8)
        space = 1 << (8 * width)
        limit = space - space % n
        while True:
            x = int.from_bytes(self.read(width), "big")
            if x < limit:
                return x % n

    def token_bytes(self, n: int) -> bytes:
        return self.read(n)


def choice(entropy: Entropy, seq):
    return seq[entropy.randbelow(len(seq))]

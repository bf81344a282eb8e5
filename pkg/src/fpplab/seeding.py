"""Deterministic seed derivation.

All randomness in the package flows from a single 64-bit master seed.
Independent streams (graph topology, edge weights, flooding source, ...)
are derived by mixing the master seed with a labeled path through
``numpy.random.SeedSequence``, whose expansion is stable across platforms
and numpy versions.  Identical ``(master, path)`` pairs therefore yield
bit-identical random streams.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

# Fixed purpose labels; strings outside this table are hashed with crc32,
# so arbitrary labels remain usable but the common ones are readable ints.
_PURPOSE_CODES = {
    "topology": 1,
    "weights": 2,
    "flood": 3,
    "trial": 4,
    "sequence": 5,
    "construct": 6,
    "probe": 7,
    "hubs": 8,
    "pairs": 9,
}


def _encode_label(label) -> int:
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError("seed path labels must be non-negative")
        return int(label)
    if isinstance(label, str):
        return _PURPOSE_CODES.get(label, 0x80000000 | zlib.crc32(label.encode()))
    raise TypeError(f"unsupported seed path label: {label!r}")


@dataclass(frozen=True)
class Seed:
    """A master seed plus a derivation path of labeled integers."""

    master: int
    path: tuple = field(default_factory=tuple)

    def derive(self, *labels) -> "Seed":
        """Child seed extending the derivation path; streams are independent."""
        return Seed(self.master, self.path + tuple(_encode_label(l) for l in labels))

    def sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.master, spawn_key=self.path)

    def generator(self) -> np.random.Generator:
        """Fresh PCG64 generator positioned at the start of this stream."""
        return np.random.Generator(np.random.PCG64(self.sequence()))

    def __str__(self):
        if self.path:
            return f"{self.master}/" + ".".join(str(p) for p in self.path)
        return str(self.master)

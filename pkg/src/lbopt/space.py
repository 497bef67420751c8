"""Mixed continuous/integer/categorical search spaces.

A space is an ordered list of dimension descriptors. Points are plain
tuples of values (one per dimension). Numeric dimensions are min-max
scaled to [0, 1] in the encoded representation; categoricals are
one-hot. The encoding is the input fed to the feature networks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "Continuous",
    "Integer",
    "Categorical",
    "SearchSpace",
    "SpaceError",
]


class SpaceError(ValueError):
    """Invalid space declaration or out-of-domain point."""


@dataclass(frozen=True)
class Continuous:
    name: str
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise SpaceError(f"dimension {self.name!r}: need lo < hi")

    width = 1

    def validate(self, v):
        if not np.isfinite(v) or v < self.lo or v > self.hi:
            raise SpaceError(f"dimension {self.name!r}: value {v} outside [{self.lo}, {self.hi}]")

    def encode(self, v):
        return [(float(v) - self.lo) / (self.hi - self.lo)]

    def decode(self, enc):
        return self.lo + float(enc[0]) * (self.hi - self.lo)

    def sample(self, rng):
        return float(rng.uniform(self.lo, self.hi))


@dataclass(frozen=True)
class Integer:
    name: str
    lo: int
    hi: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise SpaceError(f"dimension {self.name!r}: need lo < hi")

    width = 1

    def validate(self, v):
        if v < self.lo or v > self.hi:
            raise SpaceError(f"dimension {self.name!r}: value {v} outside [{self.lo}, {self.hi}]")

    def encode(self, v):
        return [(float(v) - self.lo) / (self.hi - self.lo)]

    def decode(self, enc):
        v = self.lo + float(enc[0]) * (self.hi - self.lo)
        return int(np.clip(round(v), self.lo, self.hi))

    def sample(self, rng):
        return int(rng.integers(self.lo, self.hi + 1))


@dataclass(frozen=True)
class Categorical:
    name: str
    labels: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) < 2:
            raise SpaceError(f"dimension {self.name!r}: need at least 2 labels")

    @property
    def width(self):
        return len(self.labels)

    def validate(self, v):
        if v not in self.labels:
            raise SpaceError(f"dimension {self.name!r}: unknown label {v!r}")

    def encode(self, v):
        onehot = [0.0] * len(self.labels)
        onehot[self.labels.index(v)] = 1.0
        return onehot

    def decode(self, enc):
        return self.labels[int(np.argmax(enc))]

    def sample(self, rng):
        return self.labels[int(rng.integers(len(self.labels)))]


class SearchSpace:
    """Ordered collection of dimensions with a canonical [0,1] encoding."""

    def __init__(self, dims: Sequence):
        dims = list(dims)
        if not dims:
            raise SpaceError("space needs at least one dimension")
        names = [d.name for d in dims]
        if len(set(names)) != len(names):
            raise SpaceError("duplicate dimension names")
        self.dims = dims

    @property
    def width(self) -> int:
        return sum(d.width for d in self.dims)

    def __len__(self):
        return len(self.dims)

    def validate(self, point):
        if len(point) != len(self.dims):
            raise SpaceError(f"point has {len(point)} values, space has {len(self.dims)} dimensions")
        for d, v in zip(self.dims, point):
            d.validate(v)

    def encode(self, point) -> np.ndarray:
        self.validate(point)
        out = []
        for d, v in zip(self.dims, point):
            out.extend(d.encode(v))
        return np.asarray(out, dtype=float)

    def decode(self, enc) -> tuple:
        enc = np.asarray(enc, dtype=float)
        if enc.shape != (self.width,):
            raise SpaceError(f"encoded vector has shape {enc.shape}, expected ({self.width},)")
        vals, i = [], 0
        for d in self.dims:
            vals.append(d.decode(enc[i:i + d.width]))
            i += d.width
        return tuple(vals)

    def encode_many(self, points) -> np.ndarray:
        return np.asarray([self.encode(p) for p in points])

    def sample_uniform(self, n: int, rng: np.random.Generator) -> list:
        if n < 1:
            raise SpaceError("n must be >= 1")
        return [tuple(d.sample(rng) for d in self.dims) for _ in range(n)]

    def as_dict(self, point) -> dict:
        return {d.name: v for d, v in zip(self.dims, point)}

    def from_dict(self, d: dict) -> tuple:
        return tuple(d[dim.name] for dim in self.dims)

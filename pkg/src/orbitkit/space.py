"""Ambient chart model and l1 coefficient arithmetic.

A :class:`ChartSpace` is a coordinate space standing for an open set of a
Banach space: plain R^n, or the first ``dimension`` coordinates of a summable
sequence space when ``truncation_of_l1`` is set.  All radius and ball
computations downstream use the chart's ``norm_kind``.

:class:`L1Coefficients` is a finitely supported coefficient family with an
explicit non-negative tail bound, so that countable parameter families can be
handled losslessly at desk scale: the stored entries are the retained support
and the tail bound dominates everything that was dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

NORM_KINDS = ("sup", "euclidean", "l1")

_NORM_CONSERVATION_TOL = 1e-12


def vector_norm(v: np.ndarray, kind: str) -> float:
    """Norm of a coordinate vector under one of the supported norm kinds."""
    v = np.asarray(v, dtype=float)
    if kind == "euclidean":
        return float(np.linalg.norm(v))
    if kind == "l1":
        return float(np.sum(np.abs(v)))
    if kind == "sup":
        return float(np.max(np.abs(v))) if v.size else 0.0
    raise ValueError(f"unknown norm kind {kind!r}")


def operator_norm(m: np.ndarray, kind: str) -> float:
    """Exact induced operator norm of a matrix for the supported norms."""
    m = np.asarray(m, dtype=float)
    if kind == "euclidean":
        return float(np.linalg.norm(m, 2))
    if kind == "l1":
        # induced by the l1 vector norm: max absolute column sum
        return float(np.max(np.sum(np.abs(m), axis=0))) if m.size else 0.0
    if kind == "sup":
        return float(np.max(np.sum(np.abs(m), axis=1))) if m.size else 0.0
    raise ValueError(f"unknown norm kind {kind!r}")


@dataclass(frozen=True)
class ChartSpace:
    """A coordinate chart of dimension ``dimension``.

    ``norm_kind`` defaults to ``l1`` when the chart is flagged as a
    truncation of a summable sequence space and to ``euclidean`` otherwise,
    matching the model space of each builtin family.
    """

    dimension: int
    norm_kind: str | None = None
    truncation_of_l1: bool = False

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.norm_kind is None:
            kind = "l1" if self.truncation_of_l1 else "euclidean"
            object.__setattr__(self, "norm_kind", kind)
        elif self.norm_kind not in NORM_KINDS:
            raise ValueError(f"unknown norm kind {self.norm_kind!r}")

    def norm(self, v: np.ndarray) -> float:
        return vector_norm(v, self.norm_kind)

    def op_norm(self, m: np.ndarray) -> float:
        return operator_norm(m, self.norm_kind)

    def zero(self) -> np.ndarray:
        return np.zeros(self.dimension)

    def unit_vector(self, rng: np.random.Generator) -> np.ndarray:
        """A random vector of norm 1 under this chart's norm."""
        v = rng.standard_normal(self.dimension)
        n = self.norm(v)
        while n < 1e-12:  # essentially never
            v = rng.standard_normal(self.dimension)
            n = self.norm(v)
        return v / n


@dataclass(frozen=True)
class Ball:
    """A norm ball used as working region / domain throughout the toolkit."""

    center: np.ndarray
    radius: float
    norm_kind: str

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        c.flags.writeable = False
        object.__setattr__(self, "center", c)
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.norm_kind not in NORM_KINDS:
            raise ValueError(f"unknown norm kind {self.norm_kind!r}")

    def contains(self, point: np.ndarray, inflate: float = 0.0) -> bool:
        d = vector_norm(np.asarray(point) - self.center, self.norm_kind)
        return d <= self.radius + inflate

    def distance_to_boundary(self, point: np.ndarray) -> float:
        """radius - ||point - center||; negative outside the ball."""
        return self.radius - vector_norm(np.asarray(point) - self.center, self.norm_kind)

    def contains_ball(self, other: "Ball", slack: float = 1e-12) -> bool:
        d = vector_norm(other.center - self.center, self.norm_kind)
        return d + other.radius <= self.radius + slack


def ball(center, radius: float, norm_kind: str = "euclidean") -> Ball:
    return Ball(np.asarray(center, dtype=float), float(radius), norm_kind)


@dataclass(frozen=True)
class L1Coefficients:
    """Finitely supported coefficients with an explicit summable tail bound.

    ``entries`` is a sorted tuple of ``(index, value)`` pairs with no
    duplicate indices and no stored zeros.  ``tail_bound`` dominates the mass
    of everything beyond the stored support (0 for exactly finite support).
    """

    entries: tuple[tuple[int, float], ...] = ()
    tail_bound: float = 0.0
    cached_norm1: float = field(default=None, compare=False)  # type: ignore[assignment]

    def __post_init__(self):
        ent = tuple((int(i), float(v)) for i, v in self.entries)
        if any(v == 0.0 for _, v in ent):
            raise ValueError("stored zero value")
        idx = [i for i, _ in ent]
        if sorted(idx) != idx or len(set(idx)) != len(idx):
            raise ValueError("entries must be sorted by index with no duplicates")
        if any(i < 0 for i in idx):
            raise ValueError("indices must be non-negative")
        if self.tail_bound < 0:
            raise ValueError("tail bound must be non-negative")
        object.__setattr__(self, "entries", ent)
        n1 = sum(abs(v) for _, v in ent) + self.tail_bound
        if self.cached_norm1 is None:
            object.__setattr__(self, "cached_norm1", n1)
        elif abs(self.cached_norm1 - n1) > _NORM_CONSERVATION_TOL:
            raise ValueError("cached_norm1 inconsistent with entries")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]], tail_bound: float = 0.0) -> "L1Coefficients":
        acc: dict[int, float] = {}
        for i, v in pairs:
            acc[int(i)] = acc.get(int(i), 0.0) + float(v)
        ent = tuple(sorted((i, v) for i, v in acc.items() if v != 0.0))
        return cls(ent, float(tail_bound))

    @classmethod
    def from_dense(cls, values, tail_bound: float = 0.0) -> "L1Coefficients":
        return cls.from_pairs(enumerate(np.asarray(values, dtype=float)), tail_bound)

    @classmethod
    def zero(cls) -> "L1Coefficients":
        return cls()

    @property
    def norm1(self) -> float:
        return self.cached_norm1

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.entries)

    def get(self, index: int) -> float:
        for i, v in self.entries:
            if i == index:
                return v
        return 0.0

    def to_dense(self, dimension: int) -> np.ndarray:
        out = np.zeros(dimension)
        for i, v in self.entries:
            if i >= dimension:
                raise IndexError(f"index {i} exceeds dimension {dimension}")
            out[i] = v
        return out

    def truncate(self, n: int) -> tuple["L1Coefficients", float]:
        """Keep the first ``n`` entries in index order.

        Returns the kept coefficients (tail bound 0) and the scalar tail,
        i.e. the l1 mass of everything dropped plus the original tail bound.
        Mass is conserved: ``kept.norm1 + tail == self.norm1``.
        """
        if n < 0:
            raise ValueError("n must be >= 0")
        kept = self.entries[:n]
        dropped = self.entries[n:]
        tail = sum(abs(v) for _, v in dropped) + self.tail_bound
        return L1Coefficients(kept, 0.0), tail

    def combine(self, other: "L1Coefficients", a: float = 1.0, b: float = 1.0) -> "L1Coefficients":
        """a*self + b*other on the merged support (tail bounds add likewise)."""
        acc: dict[int, float] = {}
        for i, v in self.entries:
            acc[i] = acc.get(i, 0.0) + a * v
        for i, v in other.entries:
            acc[i] = acc.get(i, 0.0) + b * v
        ent = tuple(sorted((i, v) for i, v in acc.items() if v != 0.0))
        return L1Coefficients(ent, abs(a) * self.tail_bound + abs(b) * other.tail_bound)

    def scaled(self, a: float) -> "L1Coefficients":
        if a == 0.0:
            return L1Coefficients((), 0.0)
        return L1Coefficients(tuple((i, a * v) for i, v in self.entries), abs(a) * self.tail_bound)


def norm1(tau: L1Coefficients) -> float:
    """Sum of absolute stored values plus the tail bound."""
    return tau.norm1


def truncate(tau: L1Coefficients, n: int) -> tuple[L1Coefficients, float]:
    """Module-level alias for :meth:`L1Coefficients.truncate`."""
    return tau.truncate(n)

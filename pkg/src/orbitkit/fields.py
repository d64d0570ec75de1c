"""Local vector fields, indexed families, and jet-bound estimation.

A :class:`VectorField` is an evaluable field on a ball-shaped domain with an
optional analytic Jacobian.  A :class:`FieldFamily` is an ordered, indexed
collection sharing a common domain.  :func:`eval_jet_norm` measures the size
of a field's jet at a point up to order 3, and :func:`estimate_lb_bound`
turns a sampled (or declared) supremum of jet norms over a region into an
:class:`LbRecord`, the bound record that powers every existence-radius guard
downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import OrderTooHigh, OutOfDomain
from .space import Ball, ChartSpace, operator_norm, vector_norm

# Finite-difference steps per derivative order (relative, scaled by 1+|x|):
# standard truncation/round-off balance for first, second, third order.
FD_STEP_1 = 1e-5
FD_STEP_2 = 1e-3
FD_STEP_3 = 1e-2

DEFAULT_SAFETY = 1.25
MIN_UNIT_TUPLES = 64

MAX_JET_ORDER = 3


@dataclass(frozen=True)
class VectorField:
    """An evaluable local vector field on a chart.

    ``eval_fn`` maps a point (1-d array) to a vector of the same dimension.
    ``jacobian_fn`` is optional; when absent, Jacobians are produced by
    central finite differences.  Evaluation must be pure.
    """

    domain: Ball
    eval_fn: Callable[[np.ndarray], np.ndarray]
    jacobian_fn: Callable[[np.ndarray], np.ndarray] | None = None
    label: str = "X"

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.eval_fn(np.asarray(x, dtype=float)), dtype=float)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        """Analytic Jacobian when available, else central differences."""
        x = np.asarray(x, dtype=float)
        if self.jacobian_fn is not None:
            return np.asarray(self.jacobian_fn(x), dtype=float)
        return finite_difference_jacobian(self, x)

    @property
    def has_analytic_jacobian(self) -> bool:
        return self.jacobian_fn is not None


def finite_difference_jacobian(field: VectorField, x: np.ndarray, step: float | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = x.size
    h = step if step is not None else FD_STEP_1 * (1.0 + float(np.linalg.norm(x)))
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        cols.append((field(x + e) - field(x - e)) / (2.0 * h))
    return np.stack(cols, axis=1)


def polynomial_field(domain: Ball, components: Sequence[Sequence[tuple[float, tuple[int, ...]]]],
                     label: str = "X") -> VectorField:
    """Vector field whose components are given by monomial tables.

    ``components[i]`` lists ``(coefficient, exponents)`` terms of component
    ``i``, with ``exponents`` a tuple of per-coordinate powers.  The analytic
    Jacobian is derived from the same tables.
    """
    comp = tuple(tuple((float(c), tuple(int(e) for e in exps)) for c, exps in terms)
                 for terms in components)
    dim = len(comp)

    def ev(x: np.ndarray) -> np.ndarray:
        out = np.zeros(dim)
        for i, terms in enumerate(comp):
            acc = 0.0
            for c, exps in terms:
                t = c
                for j, e in enumerate(exps):
                    if e:
                        t *= x[j] ** e
                acc += t
            out[i] = acc
        return out

    def jac(x: np.ndarray) -> np.ndarray:
        m = np.zeros((dim, dim))
        for i, terms in enumerate(comp):
            for c, exps in terms:
                for j, e in enumerate(exps):
                    if not e:
                        continue
                    t = c * e
                    for k, ek in enumerate(exps):
                        p = ek - 1 if k == j else ek
                        if p:
                            t *= x[k] ** p
                    m[i, j] += t
        return m

    return VectorField(domain=domain, eval_fn=ev, jacobian_fn=jac, label=label)


def constant_field(domain: Ball, vector, label: str = "c") -> VectorField:
    v = np.asarray(vector, dtype=float).copy()
    v.flags.writeable = False
    n = v.size
    return VectorField(domain=domain, eval_fn=lambda x: v.copy(),
                       jacobian_fn=lambda x: np.zeros((n, n)), label=label)


@dataclass(frozen=True)
class FieldFamily:
    """Ordered indexed family of vector fields with a common domain.

    ``declared_lb`` optionally maps a jet order to an analytic bound valid on
    the whole common domain; :func:`estimate_lb_bound` passes such bounds
    through instead of sampling.  ``truncation_factory``, when present, maps
    a member count to the corresponding truncation of a countable family.
    """

    space: ChartSpace
    members: tuple[VectorField, ...]
    common_domain: Ball
    declared_lb: dict[int, float] | None = None
    truncation_factory: Callable[[int], "FieldFamily"] | None = None

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ValueError("family needs at least one member")
        for m in self.members:
            if not m.domain.contains_ball(self.common_domain):
                raise ValueError(f"common domain not contained in domain of {m.label}")

    def __len__(self) -> int:
        return len(self.members)

    def __getitem__(self, i: int) -> VectorField:
        return self.members[i]

    def labels(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.members)


@dataclass(frozen=True)
class LbRecord:
    """A jet bound ``bound_k`` of order ``order_s`` valid on ``region``.

    ``method`` records provenance: ``"sampled"`` bounds come from a finite
    sample inflated by a safety factor, ``"declared"`` bounds were supplied
    analytically.  Numerical jets stop at order 3, so smoothness claims
    beyond C^1 for compositions are noted but not certified.
    """

    order_s: int
    bound_k: float
    region: Ball
    method: str = "sampled"

    def __post_init__(self):
        if self.order_s < 0:
            raise ValueError("order must be >= 0")
        if not self.bound_k > 0:
            raise ValueError("bound must be positive")
        if self.method not in ("sampled", "declared"):
            raise ValueError("method must be 'sampled' or 'declared'")


def _unit_vectors(space: ChartSpace, rng: np.random.Generator, count: int) -> list[np.ndarray]:
    vecs = [space.unit_vector(rng) for _ in range(count)]
    # canonical directions sharpen the sampled maximum at no real cost
    for j in range(space.dimension):
        e = np.zeros(space.dimension)
        e[j] = 1.0
        vecs.append(e)
        vecs.append(-e)
    return vecs


def _directional_jacobian_diff(field: VectorField, x: np.ndarray, v: np.ndarray, h: float) -> np.ndarray:
    """(J(x+h v) - J(x-h v)) / 2h, the second derivative contracted with v."""
    return (field.jacobian(x + h * v) - field.jacobian(x - h * v)) / (2.0 * h)


def eval_jet_norm(field: VectorField, x: np.ndarray, s: int, space: ChartSpace,
                  rng: np.random.Generator | None = None,
                  tuple_samples: int = MIN_UNIT_TUPLES) -> float:
    """Sum over orders 0..s of the size of the field's derivatives at x.

    Order 0 is the chart norm of the value, order 1 the exact induced
    operator norm of the Jacobian.  Orders 2 and 3 come from nested central
    differences contracted against unit directions; their multilinear norms
    are estimated by maximizing over canonical and random unit tuples
    (at least ``tuple_samples`` random ones).
    """
    x = np.asarray(x, dtype=float)
    if not field.domain.contains(x, inflate=1e-12):
        raise OutOfDomain(f"{field.label}: point outside domain")
    if s > MAX_JET_ORDER:
        raise OrderTooHigh(f"jet order {s} > {MAX_JET_ORDER}: nested differences are noise-dominated")
    if rng is None:
        rng = np.random.default_rng(0)

    total = vector_norm(field(x), space.norm_kind)
    if s >= 1:
        total += operator_norm(field.jacobian(x), space.norm_kind)
    if s >= 2:
        scale = 1.0 + float(np.linalg.norm(x))
        h2 = FD_STEP_2 * scale
        dirs = _unit_vectors(space, rng, tuple_samples)
        best2 = 0.0
        for v in dirs:
            m = _directional_jacobian_diff(field, x, v, h2)
            # ||D2[.,v]|| as a matrix norm is exact over the first slot
            best2 = max(best2, operator_norm(m, space.norm_kind))
        total += best2
        if s >= 3:
            h3 = FD_STEP_3 * scale
            best3 = 0.0
            for v in dirs:
                for w in dirs[: max(4, len(dirs) // 8)]:
                    mp = _directional_jacobian_diff_shifted(field, x, v, w, h2, h3)
                    best3 = max(best3, operator_norm(mp, space.norm_kind))
            total += best3
    return float(total)


def _directional_jacobian_diff_shifted(field: VectorField, x, v, w, h2, h3) -> np.ndarray:
    """Central difference in direction w of the order-2 contraction with v."""
    a = _directional_jacobian_diff(field, x + h3 * w, v, h2)
    b = _directional_jacobian_diff(field, x - h3 * w, v, h2)
    return (a - b) / (2.0 * h3)


def sample_in_ball(region: Ball, space: ChartSpace, rng: np.random.Generator,
                   count: int) -> list[np.ndarray]:
    """Uniform-ish samples in the ball: random unit direction, radial factor
    u^(1/n).  The center is always included, and with the same seed the
    sample set of a concentric sub-ball is the radial contraction of the
    larger one, which keeps sampled suprema nested."""
    pts = [region.center.copy()]
    n = space.dimension
    for _ in range(max(0, count - 1)):
        u = space.unit_vector(rng)
        rho = rng.uniform() ** (1.0 / n)
        pts.append(region.center + region.radius * rho * u)
    return pts


def estimate_lb_bound(family: FieldFamily, region: Ball, s: int, samples: int,
                      rng_seed: int = 0, safety: float = DEFAULT_SAFETY,
                      force_sampled: bool = False) -> LbRecord:
    """Bound the order-s jets of all members over ``region``.

    Families carrying a declared analytic bound for order ``s`` pass it
    through unchanged (``method="declared"``).  Otherwise the sampled
    supremum over ``samples`` region points and all members is inflated by
    ``safety`` so that downstream radius guards stay conservative.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if not family.common_domain.contains_ball(region):
        raise OutOfDomain("region not contained in the family's common domain")
    if family.declared_lb and not force_sampled and s in family.declared_lb:
        return LbRecord(order_s=s, bound_k=float(family.declared_lb[s]),
                        region=region, method="declared")
    rng = np.random.default_rng(rng_seed)
    pts = sample_in_ball(region, family.space, rng, samples)
    jet_rng = np.random.default_rng(rng_seed + 1)
    best = 0.0
    for y in pts:
        for m in family.members:
            best = max(best, eval_jet_norm(m, y, s, family.space, rng=jet_rng))
    if best <= 0.0:
        best = 1e-30  # identically-zero family still needs a positive record
    return LbRecord(order_s=s, bound_k=best * safety, region=region, method="sampled")

"""Controlled-flow engine: integrate sums of family members driven by
piecewise-constant controls, with existence-radius guards and variational
(first-order sensitivity) co-integration.

The integrator is an adaptive embedded Dormand-Prince 5(4) pair.  Control
piece boundaries are hard restart points: the right-hand side is smooth in
the state but discontinuous in time exactly there, so no step ever straddles
a boundary.  The combination ``sum_a u_a(t) X_a(x)`` is evaluated lazily over
the support of the active piece only; bang-bang controls therefore cost one
field evaluation per stage regardless of family size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainTooSmall, GuardViolated, LeftDomain, StepUnderflow
from .fields import FieldFamily, LbRecord, VectorField
from .space import Ball, L1Coefficients

DEFAULT_TOL = 1e-9
DOMAIN_INFLATE = 1e-12

# Dormand-Prince 5(4) tableau (FSAL: stage 7 equals stage 1 of the next step)
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


@dataclass(frozen=True)
class Control:
    """A piecewise-constant map from time to coefficient families.

    ``pieces`` is a sorted tuple of ``(t_start, t_end, coefficients)``; gaps
    between pieces mean the zero control.  ``interval`` is the declared time
    window; ``None`` stands for the whole real line (the natural window for
    bang-bang parameters, which vanish outside a finite span anyway).
    """

    pieces: tuple[tuple[float, float, L1Coefficients], ...]
    interval: tuple[float, float] | None = None

    def __post_init__(self):
        ps = tuple(sorted(((float(a), float(b), c) for a, b, c in self.pieces),
                          key=lambda p: p[0]))
        for (a, b, _) in ps:
            if not b > a:
                raise ValueError("piece must have positive length")
        for (_, b, _), (a2, _, _) in zip(ps, ps[1:]):
            if a2 < b - 1e-15:
                raise ValueError("pieces overlap")
        object.__setattr__(self, "pieces", ps)
        if self.interval is not None:
            lo, hi = self.interval
            if ps and (ps[0][0] < lo - 1e-15 or ps[-1][1] > hi + 1e-15):
                raise ValueError("pieces exceed declared interval")

    @property
    def sup_norm(self) -> float:
        """Largest instantaneous coefficient mass (the constant c of the guards)."""
        return max((c.norm1 for _, _, c in self.pieces), default=0.0)

    @property
    def l1_norm(self) -> float:
        return sum((b - a) * c.norm1 for a, b, c in self.pieces)

    def boundaries(self) -> list[float]:
        ts: list[float] = []
        for a, b, _ in self.pieces:
            ts.append(a)
            ts.append(b)
        return sorted(set(ts))

    def piece_at(self, t: float) -> L1Coefficients | None:
        for a, b, c in self.pieces:
            if a <= t < b:
                return c
        return None


def constant_control(coefficients: L1Coefficients, t_start: float, t_end: float,
                     interval: tuple[float, float] | None = None) -> Control:
    return Control(pieces=((t_start, t_end, coefficients),), interval=interval)


@dataclass(frozen=True)
class ExistenceCertificate:
    """Outcome of the flow-existence guard.

    ``margin = min(r/(k c), T') - T0``; the guard is satisfied exactly when
    the margin is positive (the time bound is strict) and the doubled ball
    around the start point fits in the working region, which is how ``r`` is
    chosen in the first place.
    """

    r: float
    k: float
    c: float
    T_prime: float
    T0: float
    satisfied: bool
    margin: float


def existence_radius(lb: LbRecord, x0: np.ndarray) -> float:
    """Largest r with the closed ball of radius 2r around x0 inside the region."""
    slack = lb.region.distance_to_boundary(x0)
    r = slack / 2.0
    if not r > 0:
        raise DomainTooSmall("no positive existence radius at this start point")
    return r


def check_existence(family: FieldFamily, lb: LbRecord, u: Control, x0: np.ndarray,
                    T0: float, t0: float = 0.0) -> ExistenceCertificate:
    """Pure guard predicate; no integration happens here."""
    x0 = np.asarray(x0, dtype=float)
    r = existence_radius(lb, x0)
    k = lb.bound_k
    c = u.sup_norm
    if u.interval is None:
        t_prime = math.inf
    else:
        lo, hi = u.interval
        t_prime = min(t0 - lo, hi - t0)
    time_bound = math.inf if c == 0.0 else r / (k * c)
    margin = min(time_bound, t_prime) - T0
    return ExistenceCertificate(r=r, k=k, c=c, T_prime=t_prime, T0=T0,
                                satisfied=margin > 0, margin=margin)


@dataclass(frozen=True)
class FlowResult:
    """Trajectory samples at accepted steps plus endpoint and diagnostics.

    ``variational`` holds the first-derivative matrices of the endpoint map
    with respect to the start point, aligned with ``times`` (identity at the
    start).
    """

    times: np.ndarray
    points: np.ndarray
    endpoint: np.ndarray
    variational: list[np.ndarray] | None
    steps_taken: int
    est_local_error: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def endpoint_variational(self) -> np.ndarray:
        if self.variational is None:
            raise ValueError("flow was integrated without variational data")
        return self.variational[-1]


class _Rhs:
    """Right-hand side for one control piece: support-local sum of members."""

    __slots__ = ("members", "idxs", "vals", "with_var", "dim")

    def __init__(self, family: FieldFamily, coeff: L1Coefficients, with_var: bool):
        self.members = [family.members[i] for i in coeff.support]
        self.idxs = coeff.support
        self.vals = [v for _, v in coeff.entries]
        self.with_var = with_var
        self.dim = family.space.dimension

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        d = self.dim
        x = y[:d]
        out = np.zeros_like(y)
        for m, v in zip(self.members, self.vals):
            out[:d] += v * m(x)
        if self.with_var:
            V = y[d:].reshape(d, d)
            J = np.zeros((d, d))
            for m, v in zip(self.members, self.vals):
                J += v * m.jacobian(x)
            out[d:] = (J @ V).ravel()
        return out


def _integrate_segment(rhs, t0: float, t1: float, y0: np.ndarray, dim: int, tol: float,
                       region: Ball | None, times: list[float], states: list[np.ndarray],
                       stats: dict) -> np.ndarray:
    """Advance y through [t0, t1] (either direction) with DP 5(4) steps."""
    span = t1 - t0
    if span == 0.0:
        return y0
    direction = 1.0 if span > 0 else -1.0
    t = t0
    y = y0
    h = direction * min(abs(span), max(abs(span) * 0.1, 1e-3))
    k1 = rhs(t, y)
    ks = [None] * 7
    while (t1 - t) * direction > 1e-15 * max(1.0, abs(t1)):
        if abs(h) > abs(t1 - t):
            h = t1 - t
        if abs(h) < 1e-14 * max(1.0, abs(t)):
            raise StepUnderflow(f"step size underflow at t={t}")
        ks[0] = k1
        for i in range(1, 7):
            yi = y.copy()
            for j, a in enumerate(_A[i]):
                if a:
                    yi += (h * a) * ks[j]
            ks[i] = rhs(t + _C[i] * h, yi)
        y5 = y.copy()
        for j, b in enumerate(_B5):
            if b:
                y5 += (h * b) * ks[j]
        err_vec = np.zeros_like(y)
        for j, e in enumerate(_E):
            if e:
                err_vec += (h * e) * ks[j]
        scale = tol * abs(h) * (1.0 + float(np.max(np.abs(y))))
        err = float(np.max(np.abs(err_vec)))
        if err <= scale:
            t = t + h
            y = y5
            k1 = ks[6]  # FSAL
            stats["steps"] += 1
            stats["err"] += err
            if region is not None and not region.contains(y[:dim], inflate=DOMAIN_INFLATE):
                raise LeftDomain(f"trajectory left the working region at t={t}",
                                 last_point=y[:dim].copy(), last_time=t)
            times.append(t)
            states.append(y.copy())
            grow = 5.0 if err == 0.0 else min(5.0, 0.9 * (scale / err) ** 0.2)
            h *= grow
        else:
            h *= max(0.2, 0.9 * (scale / err) ** 0.2)
    return y


def flow_control(family: FieldFamily, u: Control, x0: np.ndarray, t0: float, T0: float,
                 with_variational: bool = False, tol: float = DEFAULT_TOL,
                 lb: LbRecord | None = None, unsafe: bool = False,
                 region: Ball | None = None) -> FlowResult:
    """Integrate the controlled combination of family members from t0 over T0.

    When ``lb`` is given, the existence guard is enforced before integration
    (``unsafe=True`` overrides it, recorded in diagnostics) and the trajectory
    is confined to ``lb.region``; otherwise it is confined to the family's
    common domain.  ``T0`` may be negative for backward integration.
    """
    x0 = np.asarray(x0, dtype=float)
    dim = family.space.dimension
    if x0.size != dim:
        raise ValueError("start point dimension mismatch")

    diagnostics: dict = {"unsafe": unsafe, "guard_checked": False}
    if lb is not None:
        cert = check_existence(family, lb, u, x0, abs(T0), t0=t0)
        diagnostics["guard_checked"] = True
        diagnostics["certificate"] = cert
        if not cert.satisfied and not unsafe:
            raise GuardViolated(
                f"existence guard failed: margin {cert.margin:.6g} "
                f"(r={cert.r:.6g}, k={cert.k:.6g}, c={cert.c:.6g}, T0={cert.T0:.6g})")
    work_region = region if region is not None else (lb.region if lb is not None else family.common_domain)
    if not work_region.contains(x0, inflate=DOMAIN_INFLATE):
        raise LeftDomain("start point outside the working region", last_point=x0, last_time=t0)

    t_end = t0 + T0
    direction = 1.0 if T0 >= 0 else -1.0
    cuts = [t0] + [b for b in u.boundaries() if (t0 - b) * direction < 0 and (t_end - b) * direction > 0]
    cuts = sorted(set(cuts + [t_end]), reverse=(direction < 0))

    y = x0.copy()
    if with_variational:
        y = np.concatenate([y, np.eye(dim).ravel()])
    times = [t0]
    states = [y.copy()]
    stats = {"steps": 0, "err": 0.0}

    for a, b in zip(cuts, cuts[1:]):
        mid = 0.5 * (a + b)
        coeff = u.piece_at(mid)
        if coeff is None or not coeff.entries:
            # zero control: the trajectory is stationary on this span
            times.append(b)
            states.append(states[-1].copy())
            y = states[-1]
            continue
        rhs = _Rhs(family, coeff, with_variational)
        y = _integrate_segment(rhs, a, b, y, dim, tol, work_region, times, states, stats)
        if abs(times[-1] - b) > 1e-12 * max(1.0, abs(b)):
            times.append(b)
            states.append(y.copy())

    pts = np.array([s[:dim] for s in states])
    var = None
    if with_variational:
        var = [s[dim:].reshape(dim, dim) for s in states]
    return FlowResult(times=np.array(times), points=pts, endpoint=pts[-1].copy(),
                      variational=var, steps_taken=stats["steps"],
                      est_local_error=stats["err"], diagnostics=diagnostics)


def flow_single(X: VectorField, x0: np.ndarray, t: float, tol: float = DEFAULT_TOL,
                with_variational: bool = False, region: Ball | None = None) -> FlowResult:
    """Flow of a single field for a signed time.

    Negative ``t`` integrates the reversed field; ``t == 0`` returns the
    start point (and an exact identity variational matrix) without stepping.
    """
    x0 = np.asarray(x0, dtype=float)
    dim = x0.size
    if t == 0.0:
        var = [np.eye(dim)] if with_variational else None
        return FlowResult(times=np.array([0.0]), points=x0[None, :].copy(),
                          endpoint=x0.copy(), variational=var, steps_taken=0,
                          est_local_error=0.0, diagnostics={"unsafe": False, "guard_checked": False})
    work_region = region if region is not None else X.domain
    if not work_region.contains(x0, inflate=DOMAIN_INFLATE):
        raise LeftDomain("start point outside the working region", last_point=x0, last_time=0.0)
    sign = 1.0 if t > 0 else -1.0

    class _SingleRhs:
        def __call__(self, s, y):
            out = np.empty_like(y)
            out[:dim] = sign * X(y[:dim])
            if with_variational:
                V = y[dim:].reshape(dim, dim)
                out[dim:] = (sign * X.jacobian(y[:dim]) @ V).ravel()
            return out

    y0 = x0.copy()
    if with_variational:
        y0 = np.concatenate([y0, np.eye(dim).ravel()])
    times = [0.0]
    states = [y0.copy()]
    stats = {"steps": 0, "err": 0.0}
    y = _integrate_segment(_SingleRhs(), 0.0, abs(t), y0, dim, tol, work_region, times, states, stats)
    pts = np.array([s[:dim] for s in states])
    var = [s[dim:].reshape(dim, dim) for s in states] if with_variational else None
    return FlowResult(times=np.array(times) * sign, points=pts, endpoint=pts[-1].copy(),
                      variational=var, steps_taken=stats["steps"],
                      est_local_error=stats["err"], diagnostics={"unsafe": False, "guard_checked": False})

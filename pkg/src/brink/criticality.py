"""Critical couplings and the zero-energy existence dichotomy.

Binding is decided by the Sturm criterion at ``E = sigma = 0``: the problem
has a negative eigenvalue iff the regular zero-energy solution has a node,
either on the grid or beyond it.  A node beyond ``r_max`` is detected by
comparing the solution's last ratio with that of the decaying asymptotic
branch: a regular solution that falls faster than the decaying one carries
a negative multiple of the growing branch and must cross zero.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BracketError
from .potentials import (
    Grid,
    RadialPotential,
    RadialProblem,
    SquareWell,
    Tabulated,
    WellCoulombTail,
    WellFiniteBarrier,
    WellGlobalCoulomb,
)
from .radial import (
    Discretization,
    TailClass,
    _tail_profile,
    decaying_solution,
    l2_tail_classify,
    log_tail_classify,
)

__all__ = [
    "Direction",
    "CouplingFamily",
    "FAMILIES",
    "family",
    "critical_grid",
    "binds",
    "critical_coupling",
    "TailComparison",
    "TailVerdict",
    "classify_tail",
    "existence_crosscheck",
]


class Direction(enum.Enum):
    BINDS_ABOVE = "BindsAbove"
    BINDS_BELOW = "BindsBelow"


def critical_grid(r_max: float = 1e4, kind: str = "log") -> Grid:
    """Grid used by the threshold computations: ``r_max = 1e4`` on a fine log mesh."""
    step = math.log(2.0) / 1024 if kind == "log" else 1e-3
    return Grid(r_max=r_max, step=step, kind=kind)


@dataclass(frozen=True)
class CouplingFamily:
    """One-parameter family of radial problems with monotone binding."""

    builder: Callable[[float], RadialProblem]
    coupling_name: str
    direction: Direction
    interval: tuple[float, float] | None = None

    def __call__(self, coupling: float) -> RadialProblem:
        return self.builder(coupling)


_FAMILY_DEFAULTS = {
    # name: (potential class, coupling name, direction, dimension, interval)
    "well_coulomb_tail": (WellCoulombTail, "lambda", Direction.BINDS_ABOVE, 1, (0.3, 1.0)),
    "well_global_coulomb": (WellGlobalCoulomb, "c", Direction.BINDS_BELOW, 1, (2.0, 4.0)),
    "well_finite_barrier": (WellFiniteBarrier, "c", Direction.BINDS_BELOW, 1, (2.0, 4.0)),
    "square_well": (SquareWell, "depth", Direction.BINDS_ABOVE, 3, (1.0, 4.0)),
}
FAMILIES = tuple(_FAMILY_DEFAULTS)


def family(name: str, dimension: int | None = None, grid: Grid | None = None, mass_factor: float = 1.0) -> CouplingFamily:
    """Built-in family by name; the well models default to ``d = 1``, the plain well to ``d = 3``."""
    try:
        cls, cname, direction, d0, interval = _FAMILY_DEFAULTS[name]
    except KeyError:
        raise ValueError(f"unknown family {name!r}; choose from {', '.join(FAMILIES)}") from None
    d = d0 if dimension is None else int(dimension)
    g = critical_grid() if grid is None else grid
    if name == "square_well" and d != 3:
        # the threshold depth is the first zero of J_{d/2-2}; widen the default search
        interval = (0.5, 25.0)

    def build(x: float) -> RadialProblem:
        return RadialProblem(cls(float(x)), d, mass_factor, 0.0, g)

    return CouplingFamily(build, cname, direction, interval)


def binds(problem: RadialProblem) -> bool:
    """True iff the zero-energy regular solution has a node in ``(0, inf)``."""
    if problem.sigma != 0:
        raise ValueError("binding test needs sigma = 0")
    disc = Discretization(problem)
    disc.check_resolution(0.0)
    nodes, y_prev, y_last = disc.outward_nodes(0.0)
    if nodes > 0:
        return True
    if y_last == 0.0:
        return True
    r_prev, r_last = disc.r[-2], disc.r[-1]
    if disc.log:
        y_prev *= math.sqrt(r_prev)
        y_last *= math.sqrt(r_last)
    ratio = y_last / y_prev
    try:
        log_u = _tail_profile(problem)
    except ValueError:
        return False
    return bool(ratio < math.exp(float(log_u(r_last) - log_u(r_prev))))


def critical_coupling(family: CouplingFamily, interval: tuple[float, float] | None = None, tol: float = 1e-7) -> float:
    """Bisect the binding predicate to an interval of width ``<= tol``; returns its midpoint."""
    if interval is None:
        interval = family.interval
    if interval is None:
        raise ValueError("no search interval given")
    lo, hi = map(float, interval)
    if not lo < hi:
        raise ValueError("interval must satisfy lo < hi")
    if tol <= 0:
        raise ValueError("tol must be positive")
    b_lo, b_hi = binds(family(lo)), binds(family(hi))
    if b_lo == b_hi:
        state = "binds" if b_lo else "does not bind"
        raise BracketError(
            f"critical_coupling: {family.coupling_name} {state} at both {lo:.6g} and {hi:.6g}"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if binds(family(mid)) == b_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Tail comparison with the borderline potential
# ---------------------------------------------------------------------------


class TailVerdict(enum.Enum):
    NON_EXISTENCE_SIDE = "NonExistenceSide"
    EXISTENCE_SIDE = "ExistenceSide"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class TailComparison:
    d: int
    R0: float = 10.0
    eps: float = 1e-3

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError("d must be a positive integer")
        if not self.R0 > math.e:
            raise ValueError("R0 must exceed e")
        if not self.eps > 0:
            raise ValueError("eps must be positive")


_R_SPLIT = 1e9
_MAX_DEPTH = 60


def _quad_range(a: float, b: float, c: float, x0: float, x1: float) -> tuple[float, float]:
    """Exact range of ``a x^2 + b x + c`` over ``[x0, x1]``; ``x1`` may be infinite."""

    def at(x):
        if math.isinf(x):
            if a != 0:
                return math.copysign(math.inf, a)
            if b != 0:
                return math.copysign(math.inf, b)
            return c
        return (a * x + b) * x + c

    vals = [at(x0), at(x1)]
    if a != 0:
        xv = -b / (2 * a)
        if x0 < xv < x1:
            vals.append(at(xv))
    return min(vals), max(vals)


def _cubic_range(c3: float, c2: float, c1: float, x0: float, x1: float) -> tuple[float, float]:
    """Exact range of ``c3 x^3 + c2 x^2 + c1 x`` over ``[x0, x1]``; ``x1`` may be infinite."""

    def at(x):
        if math.isinf(x):
            for c in (c3, c2, c1):
                if c != 0:
                    return math.copysign(math.inf, c)
            return 0.0
        return ((c3 * x + c2) * x + c1) * x

    vals = [at(x0), at(x1)]
    # stationary points: 3 c3 x^2 + 2 c2 x + c1 = 0
    if c3 != 0:
        disc = c2 * c2 - 3.0 * c3 * c1
        if disc >= 0:
            s = math.sqrt(disc)
            crit = [(-c2 + s) / (3 * c3), (-c2 - s) / (3 * c3)]
        else:
            crit = []
    elif c2 != 0:
        crit = [-c1 / (2 * c2)]
    else:
        crit = []
    vals += [at(x) for x in crit if x0 < x < x1]
    return min(vals), max(vals)


def _pieces(V: RadialPotential, R0: float):
    """Closed-form pieces covering ``[R0, inf)``.

    Each piece is ``(lo, hi, c3, c2, c1, a2, b, g)`` with
    ``r^2 V = c3 r^3 + c2 r^2 + c1 r + a2 + b/ln r + g/ln^2 r``.
    """
    if isinstance(V, Tabulated):
        r = np.asarray(V.r)
        v = np.asarray(V.v)
        out = []
        if R0 < r[0]:
            out.append((R0, r[0], 0.0, v[0], 0.0, 0.0, 0.0, 0.0))
        for i in range(r.size - 1):
            lo, hi = max(r[i], R0), r[i + 1]
            if hi <= lo:
                continue
            slope = (v[i + 1] - v[i]) / (r[i + 1] - r[i])
            out.append((lo, hi, slope, v[i] - slope * r[i], 0.0, 0.0, 0.0, 0.0))
        out.append((max(r[-1], R0), math.inf, 0.0, v[-1], 0.0, 0.0, 0.0, 0.0))
        return out
    tail = V.tail_form()
    if tail is None:
        raise ValueError(f"{type(V).__name__} has no closed-form tail")
    if tail.start > R0:
        raise ValueError(f"R0 = {R0} lies before the closed-form tail, which starts at {tail.start}")
    return [(R0, math.inf, 0.0, tail.c0, tail.c1, tail.a2, tail.b, tail.g)]


def _decide(pieces, A: float, kb: float, kg: float, want: str) -> bool | None:
    """Check ``r^2 V - (A + kb/ln r + kg/ln^2 r)`` against zero on every piece.

    ``want='max<=0'`` or ``'min>=0'``.  Returns True when proven, False when a
    certain violation is found, None when refinement runs out.
    """
    stack = []
    for lo, hi, *coef in pieces:
        edges = []
        x = lo
        while x < min(hi, _R_SPLIT):
            nxt = min(2 * x, hi, _R_SPLIT)
            edges.append((x, nxt))
            x = nxt
        if hi > _R_SPLIT:
            edges.append((max(lo, _R_SPLIT), hi))
        stack.extend((e0, e1, coef, 0) for e0, e1 in edges)
    undecided = False
    while stack:
        lo, hi, coef, depth = stack.pop()
        c3, c2, c1, a2, b, g = coef
        r_lo, r_hi = _cubic_range(c3, c2, c1, lo, hi)
        t0 = 0.0 if math.isinf(hi) else 1.0 / math.log(hi)
        t1 = 1.0 / math.log(lo)
        t_lo, t_hi = _quad_range(g - kg, b - kb, a2 - A, t0, t1)
        low, high = r_lo + t_lo, r_hi + t_hi
        if want == "max<=0":
            if high <= 0:
                continue
            if low > 0:
                return False
        else:
            if low >= 0:
                continue
            if high < 0:
                return False
        if depth >= _MAX_DEPTH or math.isinf(hi):
            undecided = True
            continue
        mid = math.sqrt(lo * hi)
        stack.append((lo, mid, coef, depth + 1))
        stack.append((mid, hi, coef, depth + 1))
    return None if undecided else True


def classify_tail(V_tail: RadialPotential, cmp: TailComparison) -> TailVerdict:
    """Compare the tail with ``d(4-d)/(4r^2) + 1/(r^2 ln r) + 3/(4 r^2 ln^2 r)`` on ``[R0, inf)``.

    The comparison is rigorous up to rounding: each piece of ``r^2 V`` is a
    cubic in ``r`` plus a quadratic in ``1/ln r``, and both parts have
    exact ranges on any interval, so interval bounds on a geometric
    partition (refined adaptively) prove the inequality or expose a
    violation.  The verdict states which hypothesis holds; existence itself
    also needs the potential to be critical.
    """
    pieces = _pieces(V_tail, cmp.R0)
    A = cmp.d * (4 - cmp.d) / 4.0
    if _decide(pieces, A, 1.0, 0.75, "max<=0"):
        return TailVerdict.NON_EXISTENCE_SIDE
    if _decide(pieces, A, 1.0 + cmp.eps, (3.0 + cmp.eps) / 4.0, "min>=0"):
        return TailVerdict.EXISTENCE_SIDE
    return TailVerdict.INCONCLUSIVE


def existence_crosscheck(problem: RadialProblem) -> TailClass:
    """Classify the decaying zero-energy branch by its tail exponent.

    The exponent fit runs on ``[r_max/20, r_max]``.  On the ``r^{-1/2}``
    border it is followed by a fit of the logarithmic correction.
    """
    if problem.sigma != 0:
        raise ValueError("existence_crosscheck needs sigma = 0")
    u = decaying_solution(problem)
    R = u.radii[-1] / 20.0
    verdict = l2_tail_classify(u, R)
    if verdict is TailClass.INCONCLUSIVE and R > 1.0:
        verdict = log_tail_classify(u, R)
    return verdict

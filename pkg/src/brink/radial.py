"""Radial Schroedinger solver.

The reduced equation ``u'' = W(r) u`` with
``W = mass_factor * (V - E) + (d-1)(d-3)/(4 r**2)`` is integrated with the
Numerov recurrence.  On a uniform grid the recurrence acts on ``u``; on a
log grid (``r = e**x``) it acts on ``y = u / sqrt(r)``, which obeys
``y'' = (r**2 W + 1/4) y``.  Integration starts from a Frobenius series so
that the centrifugal singularity at the origin is never evaluated.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq

from . import _kernels
from .errors import BracketError, NoBoundStateError, ResolutionError
from .potentials import RadialProblem

__all__ = [
    "GridFunction",
    "EigenResult",
    "TailClass",
    "Discretization",
    "integrate",
    "ground_state",
    "zero_energy_solution",
    "decaying_solution",
    "l2_tail_classify",
    "log_tail_classify",
    "count_nodes",
]

RESOLUTION_LIMIT = 0.1
EXPONENT_FLOOR = 1e-6


def count_nodes(values: NDArray[np.float64]) -> int:
    """Strict sign changes, skipping exact zeros."""
    s = np.sign(np.asarray(values, dtype=float))
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a radial function ``u(r)``; ``node_count`` is derived."""

    radii: NDArray[np.float64]
    values: NDArray[np.float64]
    normalized: bool = False
    node_count: int = field(init=False)

    def __post_init__(self):
        r = np.array(self.radii, dtype=float)
        v = np.array(self.values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape:
            raise ValueError("radii and values must be 1-D arrays of equal length")
        if r.size > 1 and np.any(np.diff(r) <= 0):
            raise ValueError("radii must be strictly increasing")
        r.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "node_count", count_nodes(v))

    def __len__(self):
        return self.radii.size

    def norm(self) -> float:
        return math.sqrt(float(np.trapezoid(self.values**2, self.radii)))

    def normalize(self) -> "GridFunction":
        return GridFunction(self.radii, self.values / self.norm(), normalized=True)

    def restrict(self, lo: float, hi: float = math.inf) -> "GridFunction":
        mask = (self.radii >= lo) & (self.radii <= hi)
        return GridFunction(self.radii[mask], self.values[mask], self.normalized)

    def radial_amplitude(self, dimension: int) -> "GridFunction":
        """``psi = u / r**((d-1)/2)`` on the same radii."""
        return GridFunction(self.radii, self.values * self.radii ** (-(dimension - 1) / 2.0))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("r,u\n")
        for r, u in zip(self.radii, self.values):
            buf.write(f"{r:.11e},{u:.11e}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, normalized: bool = False) -> "GridFunction":
        lines = text.splitlines()
        if not lines or lines[0].strip() != "r,u":
            raise ValueError("expected header 'r,u'")
        data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:] if ln.strip()])
        return cls(data[:, 0], data[:, 1], normalized)


@dataclass(frozen=True)
class EigenResult:
    energy: float
    wavefunction: GridFunction
    residual: float


class TailClass(enum.Enum):
    SQUARE_SUMMABLE = "SquareSummable"
    DIVERGENT = "Divergent"
    INCONCLUSIVE = "Inconclusive"


class Discretization:
    """Grid arrays for one problem, with ``Q(E) = qa - E * qb`` in the Numerov variable."""

    def __init__(self, problem: RadialProblem):
        self.problem = problem
        grid = problem.grid
        pot = problem.potential
        r = grid.nodes()
        v = np.asarray(pot(r), dtype=float)
        for b in pot.breakpoints:
            hit = np.nonzero(np.abs(r - b) <= 1e-9 * b)[0]
            if hit.size:
                left, right = pot.jump_limits(b)
                v[hit] = 0.5 * (left + right)
        m = problem.mass_factor
        s = (problem.dimension - 1) / 2.0
        self.r = r
        self.s = s
        self.h = grid.step
        self.log = grid.kind == "log"
        if self.log:
            self.qa = m * r**2 * v + (s - 0.5) ** 2
            self.qb = m * r**2
        else:
            self.qa = m * v + s * (s - 1.0) / r**2
            self.qb = np.full_like(r, m)
        # Start the march at a seed radius where the Frobenius series is
        # accurate and the regular solution is not swamped by the other one.
        _, _, radius = pot.origin_form()
        r_seed = 0.05
        if not self.log:
            r_seed = max(r_seed, 10.0 * self.h * math.sqrt(abs(s * (s - 1.0))))
        r_seed = min(r_seed, 0.5 * radius, 0.5)
        self.i0 = max(0, int(np.searchsorted(r, r_seed)) - 1)
        self.n = r.size
        if self.n - self.i0 < 4:
            raise ValueError("grid too short")

    # -- conversions ------------------------------------------------------
    def to_u(self, y):
        return y * np.sqrt(self.r) if self.log else y

    def from_u(self, u, idx):
        return u / np.sqrt(self.r[idx]) if self.log else u

    # -- Frobenius start ---------------------------------------------------
    def series(self, energy: float, r: NDArray[np.float64]) -> NDArray[np.float64]:
        """Regular solution ``r**s * sum a_k r**k`` with ``a_0 = 1``."""
        z, v0, _ = self.problem.potential.origin_form()
        m = self.problem.mass_factor
        c1 = m * z
        c0 = m * (v0 - energy)
        d = self.problem.dimension
        r = np.asarray(r, dtype=float)
        a_prev2, a_prev = 0.0, 1.0
        total = np.ones_like(r)
        power = np.ones_like(r)
        small = 0
        for k in range(1, 400):
            denom = k * (k + d - 2)
            a_k = 0.0 if denom == 0 else (c1 * a_prev + c0 * a_prev2) / denom
            power = power * r
            term = a_k * power
            total = total + term
            if np.all(np.abs(term) <= 1e-18 * np.abs(total)):
                small += 1
                if small >= 3:
                    break
            else:
                small = 0
            a_prev2, a_prev = a_prev, a_k
        return r**self.s * total

    def q(self, energy: float) -> NDArray[np.float64]:
        return self.qa - energy * self.qb

    def check_resolution(self, energy: float, start: int = 0) -> None:
        """Require ``h sqrt(-Q) <= 0.1`` where the solution oscillates.

        In forbidden regions only positivity of the Numerov weights is
        required; the decay rate there does not feed back into the energy.
        """
        lo = max(start, self.i0)
        q = self.q(energy)[lo:]
        allowed = np.where(q < 0, self.h * np.sqrt(np.abs(q)), 0.0)
        forbidden = self.h**2 * np.where(q > 0, q, 0.0) / 12.0
        bad = np.nonzero((allowed > RESOLUTION_LIMIT) | (forbidden >= 0.5))[0]
        if bad.size:
            r_bad = self.r[lo + bad[0]]
            raise ResolutionError(
                f"integrate: step {self.h:.3g} does not resolve the local wavelength "
                f"at r={r_bad:.6g}, E={energy:.6g}"
            )

    # -- marches -----------------------------------------------------------
    def outward(self, energy: float, stop: int | None = None, initial=None):
        """Fill ``y`` outward; returns ``(y, nodes)``; entries past ``stop`` stay zero."""
        stop = self.n - 1 if stop is None else stop
        y = np.zeros(self.n)
        i0 = self.i0
        if initial is None:
            y[: i0 + 2] = self.from_u(self.series(energy, self.r[: i0 + 2]), slice(0, i0 + 2))
        else:
            y[i0] = self.from_u(initial[0], i0)
            y[i0 + 1] = self.from_u(initial[1], i0 + 1)
        nodes = _kernels.numerov_fill(self.qa, self.qb, float(energy), self.h, y, i0, stop, 1)
        return y, int(nodes)

    def inward(self, energy: float, stop: int, last: tuple[float, float] = (0.0, 1.0)):
        """Fill ``y`` inward from the outer edge down to index ``stop``."""
        y = np.zeros(self.n)
        y[-1], y[-2] = last
        _kernels.numerov_fill(self.qa, self.qb, float(energy), self.h, y, self.n - 1, stop, -1)
        return y

    def outward_nodes(self, energy: float):
        i0 = self.i0
        seed = self.from_u(self.series(energy, self.r[i0 : i0 + 2]), slice(i0, i0 + 2))
        nodes, y_prev, y_last = _kernels.numerov_nodes(
            self.qa, self.qb, float(energy), self.h, float(seed[0]), float(seed[1]), i0, self.n - 1
        )
        return int(nodes), float(y_prev), float(y_last)

    def matching_index(self, energy: float) -> int:
        q = self.q(energy)
        lo = self.i0 + 2
        hi = self.n - 3
        allowed = np.nonzero(q[lo:hi] < 0)[0]
        if allowed.size:
            return lo + int(allowed[-1])
        return lo + (hi - lo) // 10

    def residual(self, y: NDArray[np.float64], energy: float) -> float:
        c = self.h**2 / 12.0
        q = self.q(energy)
        f = 1.0 - c * q
        i = np.arange(max(self.i0, 1), self.n - 1)
        defect = f[i + 1] * y[i + 1] - 2.0 * (1.0 + 5.0 * c * q[i]) * y[i] + f[i - 1] * y[i - 1]
        scale = np.max(np.abs(y))
        return float(np.max(np.abs(defect)) / scale) if scale > 0 else 0.0


def _grid_function(disc: Discretization, y, start: int = 0, normalized=False) -> GridFunction:
    u = disc.to_u(y)[start:]
    return GridFunction(disc.r[start:], u, normalized)


def integrate(problem: RadialProblem, energy: float, initial: tuple[float, float] | None = None) -> GridFunction:
    """Outward solution at ``energy`` with the regular start at the origin.

    ``initial`` overrides the two seed values of ``u``; the returned function
    then starts at the seed radius instead of the first grid node.  Values are
    rescaled internally when they approach overflow, so only their shape is
    meaningful for strongly growing solutions.
    """
    if not math.isfinite(energy):
        raise ValueError("energy must be finite")
    disc = Discretization(problem)
    disc.check_resolution(energy)
    y, _ = disc.outward(energy, initial=initial)
    return _grid_function(disc, y, start=disc.i0 if initial is not None else 0)


def ground_state(
    problem: RadialProblem,
    bracket: tuple[float, float] | None = None,
    tol: float = 1e-11,
) -> EigenResult:
    """Lowest eigenvalue of the discrete problem with ``u(r_max) = 0``.

    Bisection on the node count of the outward solution brackets the
    eigenvalue; a root search on the log-derivative mismatch between the
    outward and inward solutions at the outermost classically allowed node
    refines it.
    """
    disc = Discretization(problem)
    sigma = float(problem.sigma)
    if bracket is None:
        r = disc.r
        vmin = float(np.min(problem.potential(r[r >= 0.1])))
        hi = sigma - 1e-12 * max(1.0, abs(sigma))
        lo = min(vmin, sigma) - 1e-9 * max(1.0, abs(vmin))
        # Long log grids cannot march deep below threshold; raise the lower
        # end toward sigma while it stays resolvable and node-free.
        for _ in range(60):
            try:
                disc.check_resolution(lo)
                break
            except ResolutionError:
                lo = sigma - 0.5 * (sigma - lo)
        bracket = (lo, hi)
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise ValueError("bracket must satisfy E_lo < E_hi")
    disc.check_resolution(lo)
    disc.check_resolution(hi)
    if disc.outward_nodes(lo)[0] != 0:
        raise BracketError(f"ground_state: lower bracket end E={lo:.6g} is already above the ground state")
    if disc.outward_nodes(hi)[0] == 0:
        raise NoBoundStateError(f"ground_state: no bound state in bracket ({lo:.6g}, {hi:.6g})")

    coarse = max(tol, 1e-7 * max(1.0, abs(lo), abs(hi)))
    while hi - lo > coarse:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if disc.outward_nodes(mid)[0] == 0:
            lo = mid
        else:
            hi = mid

    def mismatch(e):
        m = disc.matching_index(e)
        yo, _ = disc.outward(e, stop=m + 1)
        yi = disc.inward(e, stop=m)
        return yo[m + 1] / yo[m] - yi[m + 1] / yi[m]

    energy = 0.5 * (lo + hi)
    try:
        f_lo, f_hi = mismatch(lo), mismatch(hi)
        if f_lo * f_hi < 0:
            energy = brentq(mismatch, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps)
        else:
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if mid in (lo, hi):
                    break
                if disc.outward_nodes(mid)[0] == 0:
                    lo = mid
                else:
                    hi = mid
            energy = 0.5 * (lo + hi)
    except (ZeroDivisionError, FloatingPointError):
        pass

    m = disc.matching_index(energy)
    yo, _ = disc.outward(energy, stop=m)
    yi = disc.inward(energy, stop=m)
    y = np.where(np.arange(disc.n) <= m, yo, yi * (yo[m] / yi[m]))
    u = disc.to_u(y)
    u = u * np.sign(u[np.argmax(np.abs(u))])
    norm = math.sqrt(float(np.trapezoid(u**2, disc.r)))
    u = u / norm
    residual = disc.residual(y / norm, energy)
    return EigenResult(float(energy), GridFunction(disc.r, u, normalized=True), residual)


def zero_energy_solution(problem: RadialProblem, branch: str = "regular") -> GridFunction:
    """Solution at ``E = 0``: the regular (outward) one or the decaying (backward) one."""
    if problem.sigma != 0:
        raise ValueError("zero_energy_solution needs sigma = 0")
    if branch == "regular":
        return integrate(problem, 0.0)
    if branch == "decaying":
        return decaying_solution(problem)
    raise ValueError("branch must be 'regular' or 'decaying'")


def _tail_profile(problem: RadialProblem):
    """Leading asymptotic form of the zero-energy solution that decays at infinity."""
    tail = problem.potential.tail_form()
    m = problem.mass_factor
    s = (problem.dimension - 1) / 2.0
    if tail is None:
        if problem.potential.threshold != 0.0:
            raise ValueError("tail must vanish at infinity")
        c1, a2 = 0.0, 0.0
    else:
        if tail.c0 != 0.0:
            raise ValueError("tail must vanish at infinity")
        c1, a2 = tail.c1, tail.a2
    if c1 > 0:
        k = math.sqrt(m * c1)
        return lambda r: 0.25 * np.log(r) - 2.0 * k * np.sqrt(r)
    if c1 < 0:
        raise ValueError("an attractive Coulomb tail has no decaying zero-energy solution")
    disc = (s - 0.5) ** 2 + m * a2
    if disc < 0:
        raise ValueError("oscillatory inverse-square tail has no decaying zero-energy solution")
    p = 0.5 - math.sqrt(disc)
    return lambda r: p * np.log(r)


def decaying_solution(problem: RadialProblem, energy: float = 0.0) -> GridFunction:
    """Backward integration from ``r_max`` seeded with the decaying asymptotic form."""
    disc = Discretization(problem)
    disc.check_resolution(energy)
    log_u = _tail_profile(problem)
    r_last, r_prev = disc.r[-1], disc.r[-2]
    u_last = 1.0
    u_prev = math.exp(float(log_u(r_prev) - log_u(r_last)))
    y_last = disc.from_u(u_last, disc.n - 1)
    y_prev = disc.from_u(u_prev, disc.n - 2)
    y = disc.inward(energy, stop=disc.i0, last=(float(y_last), float(y_prev)))
    return _grid_function(disc, y, start=disc.i0)


def _tail_fit(u: GridFunction, R: float, transform):
    if u.radii[-1] < 10 * R * (1 - 1e-12):
        raise ValueError("grid must extend to at least 10 R")
    sel = (u.radii >= R) & (u.values != 0)
    if np.count_nonzero(sel) < 50:
        raise ValueError("fewer than 50 tail samples")
    x, yv = transform(u.radii[sel], np.abs(u.values[sel]))
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, yv, rcond=None)
    resid = yv - A @ coef
    dof = max(x.size - 2, 1)
    sxx = float(np.sum((x - x.mean()) ** 2))
    se = math.sqrt(float(np.sum(resid**2)) / dof / sxx) if sxx > 0 else math.inf
    return float(coef[0]), se


def _verdict(exponent: float, se: float, border: float) -> TailClass:
    margin = 3.0 * max(se, EXPONENT_FLOOR)
    if exponent < border - margin:
        return TailClass.SQUARE_SUMMABLE
    if exponent > border + margin:
        return TailClass.DIVERGENT
    return TailClass.INCONCLUSIVE


def l2_tail_classify(u: GridFunction, R: float) -> TailClass:
    """Fit ``|u| ~ r**p`` on ``[R, r_max]`` and compare ``2p`` with ``-1``.

    The margin is three fit standard errors, floored at ``EXPONENT_FLOOR``
    so that an exact power law on the border stays inconclusive.
    """
    p, se = _tail_fit(u, R, lambda r, a: (np.log(r), np.log(a)))
    return _verdict(p, se, -0.5)


def log_tail_classify(u: GridFunction, R: float) -> TailClass:
    """Second-order test on the border ``|u| ~ r**(-1/2) (ln r)**q``; summable iff ``2q < -1``."""
    if R <= 1.0:
        raise ValueError("R must exceed 1")
    q, se = _tail_fit(u, R, lambda r, a: (np.log(np.log(r)), np.log(a) + 0.5 * np.log(r)))
    return _verdict(q, se, -0.5)

"""Radial potential families and the fixed-nucleus many-electron Coulomb potential.

Every radial kind is an immutable dataclass that evaluates vectorised over
``r``.  Besides point values each kind exposes the structure the solvers
need: where it jumps, its form near the origin (for the Frobenius start of
the radial integration) and, where one exists, a closed form of its tail.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from typing import ClassVar

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import _kernels

__all__ = [
    "RadialPotential",
    "WellCoulombTail",
    "WellGlobalCoulomb",
    "WellFiniteBarrier",
    "SquareWell",
    "Coulomb",
    "PowerLogTail",
    "Tabulated",
    "TailForm",
    "Grid",
    "RadialProblem",
    "ManyBodyConfig",
    "eval_radial",
    "effective_radial_term",
    "many_body_potential",
    "potential_from_dict",
    "potential_from_json",
]


@dataclass(frozen=True)
class TailForm:
    """``V(r) = c0 + c1/r + a2/r**2 + b/(r**2 ln r) + g/(r**2 ln**2 r)`` for ``r >= start``."""

    start: float
    c0: float = 0.0
    c1: float = 0.0
    a2: float = 0.0
    b: float = 0.0
    g: float = 0.0


def _as_radii(r: ArrayLike) -> NDArray[np.float64]:
    arr = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("radius must be finite")
    if np.any(arr <= 0):
        raise ValueError("radius must be positive")
    return arr


class RadialPotential:
    """Base class for the radial kinds.

    Subclasses set ``kind`` (the JSON tag) and implement ``_values``.
    """

    kind: ClassVar[str] = ""
    breakpoints: ClassVar[tuple[float, ...]] = ()

    def __call__(self, r: ArrayLike) -> NDArray[np.float64] | float:
        arr = _as_radii(r)
        out = self._values(arr)
        return float(out) if out.ndim == 0 else out

    def _values(self, r: NDArray[np.float64]) -> NDArray[np.float64]:
        raise NotImplementedError

    @property
    def threshold(self) -> float:
        """Large-r limit of the potential."""
        return 0.0

    def origin_form(self) -> tuple[float, float, float]:
        """``(z, v0, radius)`` such that ``V = z/r + v0`` exactly on ``(0, radius)``."""
        raise NotImplementedError

    def tail_form(self) -> TailForm | None:
        return None

    def jump_limits(self, b: float) -> tuple[float, float]:
        eps = 1e-9 * b
        return float(self._values(np.array(b - eps))), float(self._values(np.array(b + eps)))

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        for f in fields(self):
            v = getattr(self, f.name)
            d[_JSON_NAMES.get(f.name, f.name)] = list(v) if isinstance(v, tuple) else v
        return d


@dataclass(frozen=True)
class WellCoulombTail(RadialPotential):
    """Unit well of depth ``lam`` with a ``1/r`` repulsion outside it."""

    lam: float
    kind: ClassVar[str] = "well_coulomb_tail"
    breakpoints: ClassVar[tuple[float, ...]] = (1.0,)

    def _values(self, r):
        with np.errstate(divide="ignore"):
            return np.where(r <= 1.0, -self.lam, 1.0 / r)

    def origin_form(self):
        return 0.0, -self.lam, 1.0

    def tail_form(self):
        return TailForm(start=1.0, c1=1.0)


@dataclass(frozen=True)
class WellGlobalCoulomb(RadialPotential):
    """Unit well of depth one with a ``c/r`` repulsion outside it."""

    c: float
    kind: ClassVar[str] = "well_global_coulomb"
    breakpoints: ClassVar[tuple[float, ...]] = (1.0,)

    def _values(self, r):
        return np.where(r <= 1.0, -1.0, self.c / r)

    def origin_form(self):
        return 0.0, -1.0, 1.0

    def tail_form(self):
        return TailForm(start=1.0, c1=self.c)


@dataclass(frozen=True)
class WellFiniteBarrier(RadialPotential):
    """Unit well of depth one, barrier of height ``c`` on ``1 < r < 2``, zero beyond."""

    c: float
    kind: ClassVar[str] = "well_finite_barrier"
    breakpoints: ClassVar[tuple[float, ...]] = (1.0, 2.0)

    def _values(self, r):
        return np.where(r <= 1.0, -1.0, np.where(r < 2.0, self.c, 0.0))

    def origin_form(self):
        return 0.0, -1.0, 1.0

    def tail_form(self):
        return TailForm(start=2.0)


@dataclass(frozen=True)
class SquareWell(RadialPotential):
    """Plain well: ``-depth`` on ``r <= 1`` and zero outside."""

    depth: float
    kind: ClassVar[str] = "square_well"
    breakpoints: ClassVar[tuple[float, ...]] = (1.0,)

    def _values(self, r):
        return np.where(r <= 1.0, -self.depth, 0.0)

    def origin_form(self):
        return 0.0, -self.depth, 1.0

    def tail_form(self):
        return TailForm(start=1.0)


@dataclass(frozen=True)
class Coulomb(RadialPotential):
    """Attractive point charge ``-z/r`` (hydrogen-like benchmark)."""

    z: float
    kind: ClassVar[str] = "coulomb"

    def _values(self, r):
        return -self.z / r

    def origin_form(self):
        return -self.z, 0.0, math.inf

    def tail_form(self):
        return TailForm(start=0.0, c1=-self.z)


@dataclass(frozen=True)
class PowerLogTail(RadialPotential):
    """Constant ``-inner`` inside ``R0``, log-corrected inverse-square tail outside.

    ``V(r) = a2/r**2 + b/(r**2 ln r) + g/(r**2 ln**2 r)`` for ``r >= R0``.
    """

    a2: float
    b: float = 0.0
    g: float = 0.0
    R0: float = 3.0
    inner: float = 0.0
    kind: ClassVar[str] = "power_log_tail"

    def __post_init__(self):
        if not self.R0 > 1.0:
            raise ValueError("PowerLogTail needs R0 > 1 so that ln r > 0 on the tail")

    @property
    def breakpoints(self):  # type: ignore[override]
        return (self.R0,)

    def _values(self, r):
        rr = np.maximum(r, self.R0)
        lg = np.log(rr)
        tail = (self.a2 + self.b / lg + self.g / lg**2) / rr**2
        return np.where(r < self.R0, -self.inner, tail)

    def origin_form(self):
        return 0.0, -self.inner, self.R0

    def tail_form(self):
        return TailForm(start=self.R0, a2=self.a2, b=self.b, g=self.g)


@dataclass(frozen=True)
class Tabulated(RadialPotential):
    """Piecewise-linear interpolation of samples, held constant outside the table."""

    r: tuple[float, ...]
    v: tuple[float, ...]
    kind: ClassVar[str] = "tabulated"

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or r.size < 2:
            raise ValueError("tabulated potential needs matching 1-D r and v with at least 2 samples")
        if np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise ValueError("tabulated radii must be positive and strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("tabulated values must be finite")
        object.__setattr__(self, "r", tuple(float(x) for x in r))
        object.__setattr__(self, "v", tuple(float(x) for x in v))

    def _values(self, r):
        return np.interp(r, self.r, self.v)

    @property
    def threshold(self):
        return self.v[-1]

    def origin_form(self):
        return 0.0, self.v[0], self.r[0]

    def tail_form(self):
        return None


_JSON_NAMES = {"lam": "lambda"}
_KINDS: dict[str, type[RadialPotential]] = {
    cls.kind: cls
    for cls in (WellCoulombTail, WellGlobalCoulomb, WellFiniteBarrier, SquareWell, Coulomb, PowerLogTail, Tabulated)
}


def potential_from_dict(spec: dict) -> RadialPotential:
    """Build a potential from ``{"kind": ..., <parameters>}``; unknown fields are rejected."""
    spec = dict(spec)
    try:
        cls = _KINDS[spec.pop("kind")]
    except KeyError as exc:
        raise ValueError(f"unknown or missing potential kind: {exc}") from None
    reverse = {v: k for k, v in _JSON_NAMES.items()}
    allowed = {_JSON_NAMES.get(f.name, f.name) for f in fields(cls)}
    unknown = set(spec) - allowed
    if unknown:
        raise ValueError(f"unknown fields for {cls.kind}: {sorted(unknown)}")
    kwargs = {reverse.get(k, k): (tuple(v) if isinstance(v, list) else v) for k, v in spec.items()}
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ValueError(str(exc)) from None


def potential_from_json(text: str) -> RadialPotential:
    return potential_from_dict(json.loads(text))


def eval_radial(p: RadialPotential, r: ArrayLike):
    """Evaluate ``p`` at positive, finite radius (or array of radii)."""
    return p(r)


def effective_radial_term(d: int, r: ArrayLike):
    """``(d-1)(d-3)/(4 r**2)``, the centrifugal-like term left by ``u = r**((d-1)/2) psi``."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    arr = _as_radii(r)
    out = (d - 1) * (d - 3) / (4.0 * arr**2)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Grids and problems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Radial grid on which the well edges ``r = 1`` and ``r = 2`` are nodes.

    ``uniform``: nodes ``i*step`` for ``i >= 1`` with ``1/step`` an integer.
    ``log``: nodes ``exp(j*step)`` with ``ln(2)/step`` an integer, starting
    at the node just below ``r_min``.  The requested step is shrunk to the
    nearest aligned value.
    """

    r_max: float = 200.0
    step: float = 0.01
    kind: str = "uniform"
    r_min: float = 1e-6

    def __post_init__(self):
        if self.kind not in ("uniform", "log"):
            raise ValueError("grid kind must be 'uniform' or 'log'")
        if not (0 < self.r_min < 1 < self.r_max):
            raise ValueError("need 0 < r_min < 1 < r_max")
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.kind == "uniform":
            aligned = 1.0 / math.ceil(1.0 / self.step - 1e-9)
        else:
            aligned = math.log(2.0) / math.ceil(math.log(2.0) / self.step - 1e-9)
        object.__setattr__(self, "step", aligned)

    def nodes(self) -> NDArray[np.float64]:
        if self.kind == "uniform":
            n = int(math.ceil(self.r_max / self.step - 1e-9))
            return np.arange(1, n + 1) * self.step
        j0 = int(math.floor(math.log(self.r_min) / self.step))
        j1 = int(math.ceil(math.log(self.r_max) / self.step - 1e-9))
        return np.exp(np.arange(j0, j1 + 1) * self.step)


@dataclass(frozen=True)
class RadialProblem:
    """``-(1/mass_factor) u'' + [V + (d-1)(d-3)/(4 mass_factor r**2)] u = E u``.

    ``mass_factor`` is ``2m``; ``mass_factor = 1`` gives the ``-Delta``
    convention used by the well models.  ``sigma`` defaults to the large-r
    limit of the potential.
    """

    potential: RadialPotential
    dimension: int = 3
    mass_factor: float = 1.0
    sigma: float | None = None
    grid: Grid = field(default_factory=Grid)

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ValueError("dimension must be a positive integer")
        if self.mass_factor <= 0:
            raise ValueError("mass_factor must be positive")
        if self.sigma is None:
            object.__setattr__(self, "sigma", self.potential.threshold)
        if self.dimension == 1 and self.potential.origin_form()[0] != 0.0:
            raise ValueError("a 1/r singularity at the origin is not supported in d = 1")

    def with_potential(self, potential: RadialPotential) -> "RadialProblem":
        return RadialProblem(potential, self.dimension, self.mass_factor, None, self.grid)


# ---------------------------------------------------------------------------
# Many-body configurations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ManyBodyConfig:
    """Electron positions around a fixed nucleus at the origin."""

    positions: NDArray[np.float64]
    Z: float
    K: int = 0

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise ValueError("positions must have shape (N, 3) with N >= 1")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        n = pos.shape[0]
        if not (0 <= self.K < n):
            raise ValueError("need 0 <= K < N")
        radii = np.linalg.norm(pos, axis=1)
        if np.any(radii <= 0):
            raise ValueError("an electron sits on the nucleus")
        if n > 1:
            iu, ju = np.triu_indices(n, k=1)
            if np.any(np.linalg.norm(pos[iu] - pos[ju], axis=1) <= 0):
                raise ValueError("coincident electrons")
            srt = np.sort(radii)
            if np.any(np.diff(srt) <= 0):
                raise ValueError("electron distances to the nucleus must be pairwise distinct")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def N(self) -> int:
        return self.positions.shape[0]

    @property
    def radii(self) -> NDArray[np.float64]:
        return np.linalg.norm(self.positions, axis=1)

    @classmethod
    def from_dict(cls, d: dict) -> "ManyBodyConfig":
        unknown = set(d) - {"Z", "K", "positions"}
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(np.asarray(d["positions"], dtype=float), float(d["Z"]), int(d.get("K", 0)))

    def to_dict(self) -> dict:
        return {"Z": self.Z, "K": self.K, "positions": self.positions.tolist()}


def many_body_potential(cfg: ManyBodyConfig) -> float:
    """Sum over electrons of ``-Z/|x_j|`` plus all pair repulsions."""
    return float(_kernels.coulomb_energy_py(cfg.positions[None, :, :], cfg.Z)[0])


def problem_from_dict(spec: dict) -> RadialProblem:
    """``{"potential": {...}, "dimension": 3, "mass_factor": 1, "sigma": 0, "grid": {...}}``.

    A bare potential document (one with ``"kind"``) gets the default problem settings.
    """
    if "kind" in spec:
        return RadialProblem(potential_from_dict(spec))
    allowed = {"potential", "dimension", "mass_factor", "sigma", "grid"}
    unknown = set(spec) - allowed
    if unknown:
        raise ValueError(f"unknown problem fields: {sorted(unknown)}")
    if "potential" not in spec:
        raise ValueError("problem needs a 'potential'")
    grid_spec = dict(spec.get("grid", {}))
    unknown = set(grid_spec) - {f.name for f in fields(Grid)}
    if unknown:
        raise ValueError(f"unknown grid fields: {sorted(unknown)}")
    return RadialProblem(
        potential_from_dict(spec["potential"]),
        int(spec.get("dimension", 3)),
        float(spec.get("mass_factor", 1.0)),
        spec.get("sigma"),
        Grid(**grid_spec),
    )

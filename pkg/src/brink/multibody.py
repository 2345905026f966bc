"""Helium and N-electron region bounds, envelope evaluators and volume scaling.

Distances are sorted so that ``|x|_1 < ... < |x|_N``; for two electrons
``|x|_0`` and ``|x|_inf`` denote the smaller and larger distance.  All
potential bounds are lower bounds on the full Coulomb energy

    U = sum_j (-Z/|x_j|) + sum_{j<k} 1/|x_j - x_k|.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import _kernels
from .potentials import ManyBodyConfig

__all__ = [
    "RegionParams",
    "HeliumEnvelopeParams",
    "HeliumRegion",
    "NAtomRegion",
    "SplitStep",
    "Z_CRITICAL",
    "c1_preset",
    "helium_region",
    "helium_bound_inside",
    "helium_bound_outside",
    "chi_cutoff",
    "m_n_correction",
    "helium_upper_envelope",
    "helium_lower_envelope",
    "global_lower_envelope",
    "sorted_distances",
    "natom_region",
    "inner_potential_UM",
    "natom_lower_bound",
    "iterative_split_trace",
    "natom_envelope",
    "region_volumes",
    "region_volume_exponent",
    "random_configs",
    "SweepCell",
    "sweep_natom",
    "sweep_helium",
    "run_natom_sweeps",
    "sweep_csv",
    "worker_count",
]

Z_CRITICAL = 0.91


@dataclass(frozen=True)
class RegionParams:
    delta: float
    alpha: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not 0.5 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [1/2, 1]")
        if self.alpha == 1.0 and not self.delta < 1.0:
            raise ValueError("alpha = 1 requires delta < 1")


@dataclass(frozen=True)
class HeliumEnvelopeParams:
    """Constants of the two-electron envelopes; ``E1`` defaults to the hydrogenic ``-Z_c^2/2``."""

    c1: float
    E1: float = -0.5 * Z_CRITICAL**2
    K0: float = 1.0
    Kinf: float = 1.0
    eps0: float = 0.75
    epsinf: float = 0.25
    n: float = 2.0
    eta: float = 1.0
    eps: float = 0.25
    amplitude: float = 1.0
    R: float = 1.0
    C: float = 1.0

    def __post_init__(self):
        if not self.E1 < 0:
            raise ValueError("E1 must be negative")
        if not 1.0 > self.eps0 > 0.5 > self.epsinf > 0.0:
            raise ValueError("need 1 > eps0 > 1/2 > epsinf > 0")
        for name in ("n", "eta", "eps", "amplitude", "c1"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.R >= 0 or not self.C >= 0:
            raise ValueError("R and C must be non-negative")


def c1_preset(alpha: float, u: float, delta: float | None = None, L: float | None = None) -> float:
    """Outer rate constant for the upper envelope.

    ``u`` (and ``L`` for ``alpha = 1/2``) are inputs: they are not fixed by
    a closed formula.
    """
    if 0.5 < alpha < 1.0:
        arg = 8.0 * (u - 1.0)
    elif alpha == 1.0:
        if delta is None:
            raise ValueError("alpha = 1 needs delta")
        if not delta < u - 1.0:
            raise ValueError("alpha = 1 needs delta < u - 1")
        arg = 8.0 * u / (1.0 + delta) - 8.0
    elif alpha == 0.5:
        if delta is None or L is None:
            raise ValueError("alpha = 1/2 needs delta and L")
        if not L > 0:
            raise ValueError("L must be positive")
        arg = 8.0 * (u - 1.0 - L / delta**2)
    else:
        raise ValueError("alpha must lie in [1/2, 1]")
    if not arg > 0:
        raise ValueError("parameters give a non-positive c1^2")
    return math.sqrt(arg)


# ---------------------------------------------------------------------------
# Helium
# ---------------------------------------------------------------------------


class HeliumRegion(enum.Enum):
    INSIDE = "Inside"
    OUTSIDE = "Outside"


def _two_radii(x1: ArrayLike, x2: ArrayLike) -> tuple[float, float]:
    r1 = float(np.linalg.norm(np.asarray(x1, dtype=float)))
    r2 = float(np.linalg.norm(np.asarray(x2, dtype=float)))
    if r1 <= 0 or r2 <= 0:
        raise ValueError("electron positions must be nonzero")
    return min(r1, r2), max(r1, r2)


def helium_region(x1: ArrayLike, x2: ArrayLike, rp: RegionParams) -> HeliumRegion:
    r0, rinf = _two_radii(x1, x2)
    return HeliumRegion.INSIDE if r0 >= rp.delta * rinf**rp.alpha else HeliumRegion.OUTSIDE


def helium_bound_inside(x1: ArrayLike, x2: ArrayLike, Z: float, rp: RegionParams) -> float:
    """``(1/2 - Z)/|x|_inf - Z/(delta |x|_inf^alpha)``."""
    if helium_region(x1, x2, rp) is not HeliumRegion.INSIDE:
        raise ValueError("configuration lies outside the region")
    _, rinf = _two_radii(x1, x2)
    return (0.5 - Z) / rinf - Z / (rp.delta * rinf**rp.alpha)


def helium_bound_outside(x1: ArrayLike, x2: ArrayLike, Z: float, rp: RegionParams) -> float:
    """``-Z/|x|_0 + (1/(1 + delta |x|_inf^(alpha-1)) - Z)/|x|_inf``."""
    if helium_region(x1, x2, rp) is not HeliumRegion.OUTSIDE:
        raise ValueError("configuration lies inside the region")
    r0, rinf = _two_radii(x1, x2)
    return -Z / r0 + (1.0 / (1.0 + rp.delta * rinf ** (rp.alpha - 1.0)) - Z) / rinf


def chi_cutoff(s):
    """1 on ``[0, 1]``, ``cos(pi (s-1)/2)`` on ``(1, 2)``, 0 from 2 on."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("s must be non-negative")
    out = np.where(s <= 1.0, 1.0, np.where(s < 2.0, np.cos(0.5 * math.pi * (s - 1.0)), 0.0))
    return float(out) if out.ndim == 0 else out


def m_n_correction(tau, n: float):
    """``(tau+n)^n`` up to ``n``, ``(3n)^n`` from ``3n`` on, bridged by ``t = n + (tau-n)/2``."""
    if not n > 0:
        raise ValueError("n must be positive")
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be non-negative")
    t = np.where(tau <= n, tau, np.where(tau < 3 * n, n + 0.5 * (tau - n), 2.0 * n))
    out = (t + n) ** n
    return float(out) if out.ndim == 0 else out


def helium_upper_envelope(x1: ArrayLike, x2: ArrayLike, p: HeliumEnvelopeParams, rp: RegionParams) -> float:
    """Log of the upper envelope."""
    r0, rinf = _two_radii(x1, x2)
    outer = -p.c1 * math.sqrt(rinf) + p.Kinf * rinf**p.epsinf
    if helium_region(x1, x2, rp) is HeliumRegion.INSIDE:
        return -math.sqrt(2.0 * abs(p.E1)) * r0 + p.K0 * r0**p.eps0 + outer
    return outer


def helium_lower_envelope(x1: ArrayLike, x2: ArrayLike, p: HeliumEnvelopeParams, rp: RegionParams) -> float:
    """``N chi(|x|_0/(delta |x|_inf^alpha)) exp(-sqrt(2|E1|)|x|_0 - c1 sqrt|x|_inf - eta |x|_inf^eps)``.

    Defined for ``|x|_inf > R``; the cutoff switches it off deep inside the region.
    """
    r0, rinf = _two_radii(x1, x2)
    if not rinf > p.R:
        raise ValueError("lower envelope needs |x|_inf > R")
    s = r0 / (rp.delta * rinf**rp.alpha)
    expo = -math.sqrt(2.0 * abs(p.E1)) * r0 - p.c1 * math.sqrt(rinf) - p.eta * rinf**p.eps
    return p.amplitude * chi_cutoff(s) * math.exp(expo)


def global_lower_envelope(x1: ArrayLike, x2: ArrayLike, p: HeliumEnvelopeParams) -> float:
    """``N M_n(|x1 - x2|) exp(-sqrt(2|E1|)|x|_0 - C |x|_inf)``."""
    r0, rinf = _two_radii(x1, x2)
    if not rinf > p.R:
        raise ValueError("global envelope needs |x|_inf > R")
    tau = float(np.linalg.norm(np.asarray(x1, dtype=float) - np.asarray(x2, dtype=float)))
    return p.amplitude * m_n_correction(tau, p.n) * math.exp(-math.sqrt(2.0 * abs(p.E1)) * r0 - p.C * rinf)


# ---------------------------------------------------------------------------
# N electrons
# ---------------------------------------------------------------------------


class NAtomRegion(enum.Enum):
    A_GREATER = "AGreater"
    A_LESS = "ALess"


@dataclass(frozen=True)
class SplitStep:
    label: str
    bound: float


def sorted_distances(cfg: ManyBodyConfig) -> tuple[NDArray[np.float64], NDArray[np.intp]]:
    """Increasing distances and the 0-based permutation ``perm[k]`` = original index of ``x~_k``."""
    radii = cfg.radii
    perm = np.argsort(radii, kind="stable")
    d = radii[perm]
    if np.any(np.diff(d) <= 0):
        raise ValueError("tied electron distances")
    return d, perm


def _check_split(cfg: ManyBodyConfig) -> None:
    if not 1 <= cfg.K < cfg.N:
        raise ValueError("need 1 <= K < N")


def natom_region(cfg: ManyBodyConfig, delta: float) -> NAtomRegion:
    """``AGreater`` iff ``|x|_{N-K} > delta |x|_{N-K+1}``."""
    _check_split(cfg)
    d, _ = sorted_distances(cfg)
    inner = cfg.N - cfg.K
    return NAtomRegion.A_GREATER if d[inner - 1] > delta * d[inner] else NAtomRegion.A_LESS


def _tilde(cfg: ManyBodyConfig) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    d, perm = sorted_distances(cfg)
    return d, cfg.positions[perm]


def inner_potential_UM(cfg: ManyBodyConfig, M: int) -> float:
    """Energy of the ``M`` innermost electrons with the nucleus, their mutual repulsion included."""
    if not 0 <= M <= cfg.N:
        raise ValueError("need 0 <= M <= N")
    if M == 0:
        return 0.0
    _, xt = _tilde(cfg)
    return float(_kernels.coulomb_energy_py(xt[None, :M, :], cfg.Z)[0])


def natom_lower_bound(cfg: ManyBodyConfig, delta: float) -> float:
    """Two-region lower bound on the Coulomb energy."""
    _check_split(cfg)
    d, _ = sorted_distances(cfg)
    inner = cfg.N - cfg.K
    outer_inv = float(np.sum(1.0 / d[inner:]))
    if natom_region(cfg, delta) is NAtomRegion.A_GREATER:
        return inner_potential_UM(cfg, inner - 1) - cfg.Z / (delta * d[inner]) - cfg.Z * outer_inv
    return inner_potential_UM(cfg, inner) + (inner / (1.0 + delta) - cfg.Z) * outer_inv


def iterative_split_trace(cfg: ManyBodyConfig, delta: float) -> list[SplitStep]:
    """Split on the inner electrons one at a time, outermost threshold ``delta |x|_{N-K+1}``.

    Step ``k`` tests ``|x|_k > delta |x|_{N-K+1}``.  On ``A_k`` the electron
    ``N-K`` is far from the nucleus, which yields the ``AGreater`` bound and
    ends the chain.  On the complement, every repulsion between electron
    ``k`` and an outer electron ``j`` is at least ``1/((1+delta)|x|_j)``.
    With several outer electrons a last step drops their mutual
    repulsion.  Each bound is at most the previous one, and the last one
    equals :func:`natom_lower_bound`.
    """
    _check_split(cfg)
    d, xt = _tilde(cfg)
    Z = cfg.Z
    inner = cfg.N - cfg.K
    outer = range(inner, cfg.N)
    pair = np.zeros((cfg.N, cfg.N))
    for i in range(cfg.N):
        for j in range(i):
            pair[i, j] = pair[j, i] = 1.0 / np.linalg.norm(xt[i] - xt[j])
    u_inner = inner_potential_UM(cfg, inner)
    outer_outer = sum(pair[i, j] for i in outer for j in outer if j < i)
    steps: list[SplitStep] = []
    for k in range(1, inner + 1):
        if d[k - 1] > delta * d[inner]:
            bound = inner_potential_UM(cfg, inner - 1) - Z / (delta * d[inner]) - Z * float(np.sum(1.0 / d[inner:]))
            steps.append(SplitStep(f"A_{k}", bound))
            return steps
        bound = u_inner + outer_outer
        for j in outer:
            bound += (k / (1.0 + delta) - Z) / d[j] + sum(pair[i, j] for i in range(k, inner))
        steps.append(SplitStep(f"A_{k}^c", bound))
    if cfg.K > 1:
        bound = u_inner + sum((inner / (1.0 + delta) - Z) / d[j] for j in outer)
        steps.append(SplitStep("outer", bound))
    return steps


def natom_envelope(cfg: ManyBodyConfig, C: ArrayLike, K_rates: ArrayLike, delta_tilde: float) -> float:
    """Log of the N-electron fall-off with caller-supplied constants.

    ``-sum C_j sqrt|x|_j`` over the ``K`` outer electrons when
    ``|x|_{N-K} < delta_tilde |x|_{N-K+1}``, else ``-sum K_j |x|_j``.
    """
    _check_split(cfg)
    C = np.asarray(C, dtype=float)
    K_rates = np.asarray(K_rates, dtype=float)
    if C.shape != (cfg.K,) or K_rates.shape != (cfg.K,):
        raise ValueError("C and K_rates need one entry per outer electron")
    if np.any(C <= 0) or np.any(K_rates <= 0):
        raise ValueError("constants must be positive")
    d, _ = sorted_distances(cfg)
    inner = cfg.N - cfg.K
    outer = d[inner:]
    if d[inner - 1] < delta_tilde * d[inner]:
        return float(-np.sum(C * np.sqrt(outer)))
    return float(-np.sum(K_rates * outer))


# ---------------------------------------------------------------------------
# Region volume
# ---------------------------------------------------------------------------

DEFAULT_RADII = (1.0, 10.0, 100.0, 1000.0)
_CHUNK = 1 << 20


def region_volumes(rp: RegionParams, R_list: ArrayLike = DEFAULT_RADII, samples: int = 10**6, seed: int = 0) -> NDArray[np.float64]:
    """Monte Carlo volume of ``{(u, v) : 0 <= u <= R, |v| <= delta u^alpha}``, ``v`` in the plane.

    Points are uniform in the bounding box; each radius draws from its own
    PCG64 stream spawned from ``seed``.
    """
    R_list = np.asarray(R_list, dtype=float)
    if R_list.ndim != 1 or np.any(R_list <= 0):
        raise ValueError("radii must be positive")
    if samples < 10**5:
        raise ValueError("need at least 1e5 samples per radius")
    streams = np.random.SeedSequence(seed).spawn(R_list.size)
    out = np.empty(R_list.size)
    for i, (R, ss) in enumerate(zip(R_list, streams)):
        rng = np.random.Generator(np.random.PCG64(ss))
        half = rp.delta * R**rp.alpha
        hits = 0
        left = samples
        while left > 0:
            m = min(left, _CHUNK)
            u = rng.uniform(0.0, R, m)
            v = rng.uniform(-half, half, (2, m))
            hits += _kernels.cone_hits(u, v[0], v[1], rp.delta, rp.alpha)
            left -= m
        out[i] = R * (2.0 * half) ** 2 * hits / samples
    return out


def region_volume_exponent(rp: RegionParams, R_list: ArrayLike = DEFAULT_RADII, samples: int = 10**6, seed: int = 0) -> float:
    """Slope of log volume against log R; the exact value is ``1 + 2 alpha``."""
    R_list = np.asarray(R_list, dtype=float)
    if R_list.size < 4 or np.unique(R_list).size < 4:
        raise ValueError("need at least 4 distinct radii")
    if np.any(R_list <= 0) or math.log10(R_list.max() / R_list.min()) < 2.0:
        raise ValueError("radii must span at least two decades")
    vols = region_volumes(rp, R_list, samples, seed)
    if np.any(vols <= 0):
        raise ValueError("a radius produced no hits; raise samples")
    slope, _ = np.polyfit(np.log(R_list), np.log(vols), 1)
    return float(slope)


# ---------------------------------------------------------------------------
# Soundness sweeps
# ---------------------------------------------------------------------------


def worker_count() -> int:
    """Thread cap from ``BRINK_THREADS``, else the CPU count."""
    env = os.environ.get("BRINK_THREADS", "").strip()
    if env:
        n = int(env)
        if n < 1:
            raise ValueError("BRINK_THREADS must be a positive integer")
        return n
    return os.cpu_count() or 1


def random_configs(rng: np.random.Generator, M: int, N: int, r_lo: float = 1e-2, r_hi: float = 1e3) -> NDArray[np.float64]:
    """``M`` configurations of ``N`` electrons: log-uniform radii, isotropic directions."""
    radii = np.exp(rng.uniform(math.log(r_lo), math.log(r_hi), (M, N)))
    dirs = rng.standard_normal((M, N, 3))
    dirs /= np.linalg.norm(dirs, axis=2, keepdims=True)
    return dirs * radii[:, :, None]


def _slack(pos: NDArray[np.float64], Z: float) -> NDArray[np.float64]:
    # rounding allowance: 64 ulps of the total magnitude of the Coulomb terms
    radii = np.linalg.norm(pos, axis=2)
    scale = Z * np.sum(1.0 / radii, axis=1)
    n = pos.shape[1]
    if n > 1:
        iu, ju = np.triu_indices(n, k=1)
        scale = scale + np.sum(1.0 / np.linalg.norm(pos[:, iu] - pos[:, ju], axis=2), axis=1)
    return 64.0 * np.finfo(float).eps * scale


@dataclass(frozen=True)
class SweepCell:
    N: int
    K: int
    delta: float
    samples: int
    violations: int


def sweep_natom(N: int, K: int, delta: float, samples: int, seed, Z: float = Z_CRITICAL) -> SweepCell:
    """Count configurations where the two-region bound exceeds the exact energy."""
    if not 1 <= K < N:
        raise ValueError("need 1 <= K < N")
    rng = np.random.Generator(np.random.PCG64(seed))
    violations = 0
    left = samples
    while left > 0:
        m = min(left, 1 << 16)
        pos = random_configs(rng, m, N)
        _, bound = _kernels.natom_bound(pos, Z, K, delta)
        exact = _kernels.coulomb_energy(pos, Z)
        violations += int(np.count_nonzero(bound - exact > _slack(pos, Z)))
        left -= m
    return SweepCell(N, K, float(delta), samples, violations)


def sweep_helium(rp: RegionParams, samples: int, seed, Z: float = Z_CRITICAL) -> dict[str, int]:
    """Violation and sample counts of both helium bounds in their regions."""
    rng = np.random.Generator(np.random.PCG64(seed))
    counts = {"inside": 0, "outside": 0, "inside_violations": 0, "outside_violations": 0}
    left = samples
    while left > 0:
        m = min(left, 1 << 16)
        pos = random_configs(rng, m, 2)
        inside, bound = _kernels.helium_bound(pos, Z, rp.delta, rp.alpha)
        bad = bound - _kernels.coulomb_energy(pos, Z) > _slack(pos, Z)
        counts["inside"] += int(np.count_nonzero(inside))
        counts["outside"] += int(np.count_nonzero(~inside))
        counts["inside_violations"] += int(np.count_nonzero(bad & inside))
        counts["outside_violations"] += int(np.count_nonzero(bad & ~inside))
        left -= m
    return counts


def run_natom_sweeps(
    samples: int = 10**5,
    seed: int = 0,
    N_max: int = 5,
    deltas: tuple[float, ...] = (0.1, 0.3, 0.5),
    Z: float = Z_CRITICAL,
    threads: int | None = None,
) -> list[SweepCell]:
    """All cells ``2 <= N <= N_max``, ``1 <= K < N``, ``delta`` in ``deltas``.

    Each cell draws from its own stream spawned from ``seed``, so results do
    not depend on the thread count.
    """
    cells = [(N, K, dl) for N in range(2, N_max + 1) for K in range(1, N) for dl in deltas]
    seeds = np.random.SeedSequence(seed).spawn(len(cells))
    workers = threads if threads is not None else worker_count()
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = [pool.submit(sweep_natom, N, K, dl, samples, ss, Z) for (N, K, dl), ss in zip(cells, seeds)]
        return [f.result() for f in futures]


def sweep_csv(cells: list[SweepCell]) -> str:
    lines = ["N,K,delta,samples,violations"]
    lines += [f"{c.N},{c.K},{c.delta:.11e},{c.samples},{c.violations}" for c in cells]
    return "\n".join(lines) + "\n"

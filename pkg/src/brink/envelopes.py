"""Decay envelopes, closed-form bounds and decay-law fits.

An envelope is a rate function ``F`` with ``F'^2 / mass_factor`` strictly
below the local gap ``sigma - E + U``; it certifies
``|u(r)| <= C exp(-F(r) - log_correction(r))`` beyond ``valid_from``.
"""

from __future__ import annotations

import enum
import io
import json
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .potentials import RadialProblem
from .radial import GridFunction

__all__ = [
    "EnvelopeSpec",
    "DecayModel",
    "DecayFit",
    "Dominates",
    "Violated",
    "adaptive_simpson",
    "build_envelope",
    "subcritical_bound",
    "critical_asymptotic",
    "upper_bound_critical",
    "lower_bound_critical",
    "fit_decay",
    "verify_envelope",
]

QUAD_TOL = 1e-10


def adaptive_simpson(f, a, b, tol: float = QUAD_TOL, max_depth: int = 40) -> NDArray[np.float64]:
    """Integrals of a vectorised ``f`` over each ``[a[i], b[i]]`` by adaptive Simpson.

    All open subintervals are refined together, one level per pass.  A
    subinterval is accepted when the two-half estimate differs from the
    whole by at most ``15 * tol_local``; the local tolerance halves with
    each split so every original interval meets ``tol``.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    out = np.zeros(a.shape)
    owner = np.arange(a.size)
    lo, hi = a.copy(), b.copy()
    mid = 0.5 * (lo + hi)
    flo, fmid, fhi = f(lo), f(mid), f(hi)
    whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
    tloc = np.full(a.size, float(tol))
    for depth in range(max_depth + 1):
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        diff = left + right - whole
        done = np.abs(diff) <= 15.0 * tloc
        if depth == max_depth:
            done[:] = True
        np.add.at(out, owner[done], (left + right + diff / 15.0)[done])
        keep = ~done
        if not keep.any():
            break
        k = keep
        owner = np.concatenate([owner[k], owner[k]])
        lo, mid, hi = np.concatenate([lo[k], mid[k]]), np.concatenate([lm[k], rm[k]]), np.concatenate([mid[k], hi[k]])
        flo, fmid, fhi = (
            np.concatenate([flo[k], fmid[k]]),
            np.concatenate([flm[k], frm[k]]),
            np.concatenate([fmid[k], fhi[k]]),
        )
        whole = np.concatenate([left[k], right[k]])
        tloc = np.concatenate([tloc[k], tloc[k]]) / 2.0
    return out


@dataclass(frozen=True, eq=False)
class EnvelopeSpec:
    radii: NDArray[np.float64]
    F_values: NDArray[np.float64]
    log_correction: NDArray[np.float64]
    valid_from: float

    def __post_init__(self):
        r = np.array(self.radii, dtype=float)
        F = np.array(self.F_values, dtype=float)
        lc = np.array(self.log_correction, dtype=float)
        if r.ndim != 1 or F.shape != r.shape or lc.shape != r.shape:
            raise ValueError("radii, F_values and log_correction must be 1-D of equal length")
        if np.any(np.diff(r) <= 0):
            raise ValueError("radii must be strictly increasing")
        if np.any(np.diff(F) < 0):
            raise ValueError("F must be non-decreasing")
        if not F[-1] > F[0] + 10.0:
            raise ValueError("F does not grow by more than 10 over the grid; extend r_max")
        for arr in (r, F, lc):
            arr.setflags(write=False)
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "F_values", F)
        object.__setattr__(self, "log_correction", lc)

    def log_envelope(self, r) -> NDArray[np.float64]:
        """``-F(r) - log_correction(r)`` by linear interpolation."""
        return -(np.interp(r, self.radii, self.F_values) + np.interp(r, self.radii, self.log_correction))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("r,F,logcorr\n")
        for r, F, lc in zip(self.radii, self.F_values, self.log_correction):
            buf.write(f"{r:.11e},{F:.11e},{lc:.11e}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, valid_from: float) -> "EnvelopeSpec":
        lines = text.splitlines()
        if not lines or lines[0].strip() != "r,F,logcorr":
            raise ValueError("expected header 'r,F,logcorr'")
        data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:] if ln.strip()])
        return cls(data[:, 0], data[:, 1], data[:, 2], valid_from)


def build_envelope(
    problem: RadialProblem,
    E: float,
    shave: float,
    R: float,
    radii: NDArray[np.float64] | None = None,
) -> EnvelopeSpec:
    """``F(r) = int_R^r sqrt(mass_factor (1 - shave) (sigma - E + V(s))) ds`` on the problem grid.

    ``V`` on ``[R, inf)`` plays the role of the repulsive tail ``U``.  The
    returned log correction is ``0.5 * ln(shave * gap)``.
    """
    if not 0.0 < shave < 1.0:
        raise ValueError("shave must lie strictly between 0 and 1")
    if not R > 0:
        raise ValueError("R must be positive")
    r = problem.grid.nodes() if radii is None else np.asarray(radii, dtype=float)
    r = r[r >= R]
    if r.size < 2:
        raise ValueError("no grid points beyond R")
    if r[0] > R:
        r = np.concatenate([[R], r])
    sigma = float(problem.sigma)
    pot = problem.potential
    m = problem.mass_factor

    def gap(s):
        return sigma - E + np.asarray(pot(s), dtype=float)

    g = gap(r)
    if np.any(g <= 0):
        bad = r[np.argmax(g <= 0)]
        raise ValueError(f"build_envelope: non-positive gap sigma - E + U at r={bad:.6g}, E={E:.6g}")

    def rate(s):
        gs = gap(s)
        if np.any(gs <= 0):
            raise ValueError(f"build_envelope: non-positive gap inside [{R}, {r[-1]}] at E={E:.6g}")
        return np.sqrt(m * (1.0 - shave) * gs)

    pieces = adaptive_simpson(rate, r[:-1], r[1:])
    F = np.concatenate([[0.0], np.cumsum(pieces)])
    logcorr = 0.5 * np.log(shave * g)
    return EnvelopeSpec(r, F, logcorr, max(R, 2.0))


def subcritical_bound(E: float, eps: float, r):
    """Exponent ``-int_0^r sqrt(|E| + (1-eps)/s) ds`` of the subcritical upper bound.

    Closed form ``-sqrt(|E| + (1-eps)/r) r - (1-eps)/sqrt|E| asinh(sqrt(|E| r/(1-eps)))``;
    the second term is the polynomial correction ``~ ln r``.
    """
    if not E < 0:
        raise ValueError("E must be negative")
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    r = np.asarray(r, dtype=float)
    if np.any(r < 1.0):
        raise ValueError("r must be >= 1")
    a = abs(E)
    b = 1.0 - eps
    out = -np.sqrt(a + b / r) * r - (b / math.sqrt(a)) * np.arcsinh(np.sqrt(a * r / b))
    return float(out) if out.ndim == 0 else out


def critical_asymptotic(r, amplitude: float = 1.0):
    """``N sqrt(pi/2) e^{-2 sqrt r} / (2 r^{3/4})``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("r must be positive")
    out = amplitude * math.sqrt(math.pi / 2.0) * np.exp(-2.0 * np.sqrt(r)) / (2.0 * r**0.75)
    return float(out) if out.ndim == 0 else out


def upper_bound_critical(r, eps: float, amplitude: float = 1.0):
    """``N e^{-2 sqrt((1-eps) r)}``."""
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    r = np.asarray(r, dtype=float)
    out = amplitude * np.exp(-2.0 * np.sqrt((1.0 - eps) * r))
    return float(out) if out.ndim == 0 else out


def lower_bound_critical(r, eps: float, amplitude: float = 1.0):
    """``N e^{-2 sqrt((1+eps) r)}``."""
    if not eps >= 0.0:
        raise ValueError("eps must be non-negative")
    r = np.asarray(r, dtype=float)
    if np.any(r < 1.0):
        raise ValueError("r must be >= 1")
    out = amplitude * np.exp(-2.0 * np.sqrt((1.0 + eps) * r))
    return float(out) if out.ndim == 0 else out


class DecayModel(enum.Enum):
    EXP_LINEAR = "ExpLinear"
    EXP_SQRT = "ExpSqrt"


@dataclass(frozen=True)
class DecayFit:
    model: DecayModel
    rate: float
    power: float
    residual: float
    window: tuple[float, float]

    def to_json(self) -> str:
        return json.dumps(
            {
                "model": self.model.value,
                "rate": self.rate,
                "power": self.power,
                "residual": self.residual,
                "window": list(self.window),
            }
        )


def fit_decay(u: GridFunction, model: DecayModel | str, window: tuple[float, float]) -> DecayFit:
    """Least squares for ``ln u = -a phi(r) + p ln r + c`` with ``phi = r`` or ``sqrt r``."""
    model = DecayModel(model)
    lo, hi = map(float, window)
    if not lo < hi:
        raise ValueError("window must satisfy lo < hi")
    sel = (u.radii >= lo) & (u.radii <= hi)
    r = u.radii[sel]
    v = u.values[sel]
    if r.size < 100:
        raise ValueError(f"fit_decay: only {r.size} samples in window; need at least 100")
    if np.any(v <= 0) and np.any(v >= 0):
        raise ValueError("fit_decay: u changes sign or vanishes in the window")
    phi = r if model is DecayModel.EXP_LINEAR else np.sqrt(r)
    A = np.column_stack([-phi, np.log(r), np.ones_like(r)])
    y = np.log(np.abs(v))
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    rms = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return DecayFit(model, float(coef[0]), float(coef[1]), rms, (lo, hi))


@dataclass(frozen=True)
class Dominates:
    C: float


@dataclass(frozen=True)
class Violated:
    r_star: float


def verify_envelope(u: GridFunction, env: EnvelopeSpec) -> Dominates | Violated:
    """Smallest ``C`` with ``|u| <= C exp(-F - log_correction)`` on the common range past ``valid_from``.

    The ratio is declared unbounded when it increases strictly across the
    last decade of the common range; ``r_star`` is where that run starts.
    """
    hi = min(u.radii[-1], env.radii[-1])
    sel = (u.radii >= env.valid_from) & (u.radii >= env.radii[0]) & (u.radii <= hi)
    r = u.radii[sel]
    if r.size < 2:
        raise ValueError("verify_envelope: grids do not overlap beyond valid_from")
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = np.log(np.abs(u.values[sel])) - env.log_envelope(r)
        inc = np.diff(log_ratio) > 0
    tail = r[1:] >= r[-1] / 10.0
    if r[0] <= r[-1] / 10.0 and np.all(inc[tail]):
        run_start = inc.size
        while run_start > 0 and inc[run_start - 1]:
            run_start -= 1
        return Violated(float(r[run_start]))
    return Dominates(float(np.exp(np.max(log_ratio))))

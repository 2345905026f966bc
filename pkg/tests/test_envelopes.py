import json
import math

import numpy as np
import pytest
from scipy.integrate import quad

from brink.criticality import critical_coupling, critical_grid, family
from brink.envelopes import (
    DecayFit,
    DecayModel,
    Dominates,
    EnvelopeSpec,
    Violated,
    adaptive_simpson,
    build_envelope,
    critical_asymptotic,
    fit_decay,
    lower_bound_critical,
    subcritical_bound,
    upper_bound_critical,
    verify_envelope,
)
from brink.potentials import Coulomb, Grid, RadialProblem, SquareWell, WellCoulombTail
from brink.radial import GridFunction, ground_state

LOG_GRID = Grid(r_max=2000.0, step=math.log(2.0) / 256, kind="log")


def test_adaptive_simpson_vectorised():
    a = np.array([0.0, 1.0, 2.0])
    b = np.array([1.0, 3.0, 10.0])
    got = adaptive_simpson(np.sqrt, a, b, tol=1e-12)
    want = (2.0 / 3.0) * (b**1.5 - a**1.5)
    assert np.allclose(got, want, atol=1e-9)


def test_coulomb_tail_rate_tends_to_two_sqrt_r():
    prob = RadialProblem(WellCoulombTail(0.7), dimension=1, grid=LOG_GRID)
    eps, R = 1e-9, 4.0
    env = build_envelope(prob, 0.0, eps, R)
    want = 2.0 * math.sqrt(1.0 - eps) * (np.sqrt(env.radii) - math.sqrt(R))
    assert np.allclose(env.F_values, want, atol=1e-8)
    assert env.valid_from == 4.0


def test_agmon_rate_for_flat_tail():
    prob = RadialProblem(SquareWell(1.0), dimension=3, grid=LOG_GRID)
    eps, R = 1e-9, 2.0
    env = build_envelope(prob, -1.0, eps, R)
    assert np.allclose(env.F_values, math.sqrt(1.0 - eps) * (env.radii - R), atol=1e-8)
    # the rate is sqrt(gap (1 - eps)) uniformly
    rates = np.diff(env.F_values) / np.diff(env.radii)
    assert np.allclose(rates, math.sqrt(1.0 - eps), rtol=1e-9)


def test_subcritical_envelope_matches_closed_form():
    prob = RadialProblem(WellCoulombTail(0.8), dimension=1, grid=LOG_GRID)
    E, eps, R = -0.04, 1e-12, 2.0
    env = build_envelope(prob, E, eps, R)
    closed = subcritical_bound(E, 0.0, R) - subcritical_bound(E, 0.0, env.radii)
    assert np.max(np.abs(env.F_values - closed)) < 1e-8


def test_gap_hypothesis_holds_on_grid():
    prob = RadialProblem(WellCoulombTail(0.8), dimension=1, grid=LOG_GRID)
    env = build_envelope(prob, -0.1, 0.05, 10.0)
    slope = np.diff(env.F_values) / np.diff(env.radii)
    # the gap 0.1 + 1/r is largest at the left end of each cell
    gap_left = 0.1 + 1.0 / env.radii[:-1]
    assert np.all(slope**2 <= (1 - 0.05) * gap_left * (1 + 1e-12))
    assert np.all(slope**2 < gap_left)
    assert np.all(np.isfinite(env.log_correction))


def test_monotone_shaving():
    prob = RadialProblem(WellCoulombTail(0.8), dimension=1, grid=LOG_GRID)
    F1 = build_envelope(prob, -0.1, 0.01, 10.0).F_values
    F2 = build_envelope(prob, -0.1, 0.2, 10.0).F_values
    assert np.all(F1 >= F2)


def test_build_envelope_validation():
    prob = RadialProblem(WellCoulombTail(0.8), dimension=1, grid=LOG_GRID)
    for shave in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            build_envelope(prob, -0.1, shave, 10.0)
    with pytest.raises(ValueError, match="gap"):
        build_envelope(RadialProblem(SquareWell(1.0), grid=LOG_GRID), 0.5, 0.05, 2.0)


def test_envelope_spec_invariants_and_csv():
    r = np.linspace(1.0, 30.0, 50)
    env = EnvelopeSpec(r, r, np.zeros_like(r), 2.0)
    back = EnvelopeSpec.from_csv(env.to_csv(), 2.0)
    assert np.allclose(back.F_values, env.F_values, rtol=1e-11)
    assert env.to_csv().startswith("r,F,logcorr\n")
    with pytest.raises(ValueError, match="non-decreasing"):
        EnvelopeSpec(r, -r, np.zeros_like(r), 2.0)
    with pytest.raises(ValueError, match="extend"):
        EnvelopeSpec(r, np.full_like(r, 3.0), np.zeros_like(r), 2.0)


def _integrand_sub(E, eps, r):
    # substitute s = t^2 to remove the endpoint singularity
    val, _ = quad(lambda t: 2.0 * math.sqrt(abs(E) * t * t + (1.0 - eps)), 0.0, math.sqrt(r), epsabs=1e-13, epsrel=1e-13)
    return -val


def test_subcritical_bound_against_quadrature():
    assert subcritical_bound(-0.25, 0.1, 100.0) == pytest.approx(_integrand_sub(-0.25, 0.1, 100.0), abs=1e-6)
    rng = np.random.default_rng(3)
    for _ in range(20):
        E = -rng.uniform(0.01, 2.0)
        eps = rng.uniform(0.0, 0.99)
        r = rng.uniform(1.0, 500.0)
        assert subcritical_bound(E, eps, r) == pytest.approx(_integrand_sub(E, eps, r), abs=1e-6)


def test_subcritical_bound_limits():
    # 1 - eps -> 0 leaves the pure Agmon exponent
    assert subcritical_bound(-1.0, 1.0 - 1e-12, 50.0) == pytest.approx(-50.0, abs=1e-4)
    # |E| -> 0 recovers the stretched exponent -2 sqrt(r)
    assert subcritical_bound(-1e-12, 0.0, 400.0) == pytest.approx(-40.0, abs=1e-3)
    with pytest.raises(ValueError):
        subcritical_bound(0.0, 0.1, 10.0)
    with pytest.raises(ValueError):
        subcritical_bound(-1.0, 1.0, 10.0)
    with pytest.raises(ValueError):
        subcritical_bound(-1.0, 0.1, 0.5)


def test_critical_asymptotic_values():
    assert critical_asymptotic(1.0) == pytest.approx(math.sqrt(math.pi / 2) * math.exp(-2) / 2, rel=1e-14)
    assert critical_asymptotic(1.0) == pytest.approx(0.084807, abs=5e-6)
    vals = critical_asymptotic(np.linspace(1.0, 1e4, 1000))
    assert np.all(np.diff(vals) < 0)
    with pytest.raises(ValueError):
        critical_asymptotic(0.0)


def test_critical_bounds():
    assert lower_bound_critical(4.0, 0.0) == pytest.approx(math.exp(-4.0), rel=1e-14)
    assert lower_bound_critical(9.0, 3.0) == pytest.approx(math.exp(-4.0 * 3.0), rel=1e-14)
    assert upper_bound_critical(4.0, 0.0, 2.0) == pytest.approx(2 * math.exp(-4.0), rel=1e-14)
    r = np.linspace(1.0, 1e3, 100)
    assert np.all(lower_bound_critical(r, 0.1) < upper_bound_critical(r, 0.1))
    with pytest.raises(ValueError):
        lower_bound_critical(4.0, -0.1)
    with pytest.raises(ValueError):
        upper_bound_critical(4.0, 1.0)


def _synthetic(fn, lo=1.0, hi=2000.0, n=4000):
    r = np.geomspace(lo, hi, n)
    return GridFunction(r, fn(r))


def test_fit_decay_exact_models():
    u = _synthetic(lambda r: np.exp(-2.0 * np.sqrt(r)) * r**-0.75)
    fit = fit_decay(u, DecayModel.EXP_SQRT, (100.0, 1600.0))
    assert fit.rate == pytest.approx(2.0, abs=1e-6)
    assert fit.power == pytest.approx(-0.75, abs=1e-6)
    assert fit.residual < 1e-9
    u = _synthetic(lambda r: np.exp(-0.5 * r), hi=1000.0)
    fit = fit_decay(u, "ExpLinear", (10.0, 500.0))
    assert fit.rate == pytest.approx(0.5, abs=1e-6)


def test_fit_decay_json_and_validation():
    u = _synthetic(lambda r: np.exp(-0.5 * r), hi=1000.0)
    fit = fit_decay(u, "ExpLinear", (10.0, 500.0))
    doc = json.loads(fit.to_json())
    assert doc["model"] == "ExpLinear" and doc["window"] == [10.0, 500.0]
    assert isinstance(fit, DecayFit)
    with pytest.raises(ValueError, match="samples"):
        fit_decay(u, "ExpLinear", (10.0, 11.0))
    with pytest.raises(ValueError):
        fit_decay(u, "ExpLinear", (500.0, 10.0))
    flip = GridFunction(u.radii, np.cos(u.radii))
    with pytest.raises(ValueError, match="sign"):
        fit_decay(flip, "ExpLinear", (10.0, 500.0))
    with pytest.raises(ValueError):
        fit_decay(u, "ExpCubic", (10.0, 500.0))


def _flat_env():
    r = np.linspace(1.0, 100.0, 2000)
    return EnvelopeSpec(r, r - 1.0, 0.5 * np.log(0.5) * np.ones_like(r), 2.0)


def test_verify_exact_and_scaled():
    env = _flat_env()
    u = GridFunction(env.radii, np.exp(env.log_envelope(env.radii)))
    res = verify_envelope(u, env)
    assert isinstance(res, Dominates) and res.C == pytest.approx(1.0, rel=1e-12)
    res = verify_envelope(GridFunction(u.radii, 2.0 * u.values), env)
    assert res.C == pytest.approx(2.0, rel=1e-12)


def test_verify_detects_slower_decay():
    env = _flat_env()
    u = GridFunction(env.radii, np.exp(-0.5 * env.radii))
    res = verify_envelope(u, env)
    assert isinstance(res, Violated)
    assert res.r_star <= 10.0


def test_hydrogen_under_agmon_envelope():
    prob = RadialProblem(Coulomb(2.0), dimension=3, grid=Grid(r_max=60.0, step=0.002))
    res = ground_state(prob)
    env = build_envelope(prob, res.energy, 0.01, 10.0)
    verdict = verify_envelope(res.wavefunction, env)
    assert isinstance(verdict, Dominates) and math.isfinite(verdict.C)


def test_three_dimensional_critical_decay_law():
    # In d = 3 the amplitude psi = u/r carries the r^(-3/4) correction.
    fam = family("well_coulomb_tail", dimension=3, grid=critical_grid(5000.0))
    lam = critical_coupling(fam, (3.0, 5.0), tol=1e-8)
    res = ground_state(fam(lam + 1e-6))
    psi = res.wavefunction.radial_amplitude(3)
    fit = fit_decay(psi, "ExpSqrt", (100.0, 1600.0))
    assert fit.rate == pytest.approx(2.0, rel=0.05)
    assert fit.power == pytest.approx(-0.75, abs=0.15)

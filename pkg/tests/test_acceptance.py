"""Acceptance criteria, one test and one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python tests/test_acceptance.py``.
"""

import math
import sys
import time

import numpy as np
import pytest
from scipy.integrate import quad

from brink.criticality import (
    TailComparison,
    TailVerdict,
    classify_tail,
    critical_coupling,
    critical_grid,
    existence_crosscheck,
    family,
)
from brink.envelopes import Dominates, build_envelope, fit_decay, subcritical_bound, verify_envelope
from brink.multibody import (
    HeliumRegion,
    NAtomRegion,
    RegionParams,
    chi_cutoff,
    helium_bound_outside,
    helium_region,
    m_n_correction,
    natom_lower_bound,
    natom_region,
    random_configs,
    region_volume_exponent,
    run_natom_sweeps,
    sweep_helium,
)
from brink.potentials import Coulomb, Grid, ManyBodyConfig, RadialProblem
from brink.radial import TailClass, ground_state
from conftest import ACCEPTANCE_LINES

LAMBDA_CR = 0.634366
C_CR = 3.11693
C_TILDE_CR = 2.7938776


def report(number: int, title: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} | {detail}")


def _timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def near_critical():
    """Ground state at lambda_cr + 1e-6 on r_max = 5000, with the wall time."""
    t0 = time.perf_counter()
    fam = family("well_coulomb_tail", grid=critical_grid(5000.0))
    lam = critical_coupling(fam, tol=1e-9)
    prob = fam(lam + 1e-6)
    res = ground_state(prob)
    return prob, res, time.perf_counter() - t0


def _subcritical(lam):
    prob = family("well_coulomb_tail", grid=critical_grid(5000.0))(lam)
    return prob, ground_state(prob)


def test_criterion_1_critical_couplings():
    rows = []
    ok = True
    for name, ref, tol in (
        ("well_coulomb_tail", LAMBDA_CR, 5e-4),
        ("well_global_coulomb", C_CR, 5e-3),
        ("well_finite_barrier", C_TILDE_CR, 5e-4),
    ):
        value, secs = _timed(critical_coupling, family(name, grid=critical_grid(1e4)))
        good = abs(value - ref) <= tol and secs < 30.0
        ok &= good
        rows.append(f"{name}={value:.7f} ({secs:.2f}s)")
    report(1, "critical couplings", ok, "; ".join(rows))
    assert ok


def test_criterion_2_exact_benchmarks():
    hyd = ground_state(RadialProblem(Coulomb(2.0), dimension=3, grid=Grid(r_max=60.0, step=0.002)))
    well = critical_coupling(family("square_well", 3), tol=1e-9)
    e_err = abs(hyd.energy + 1.0)
    w_err = abs(well - math.pi**2 / 4)
    ok = e_err < 1e-6 and w_err < 1e-4
    report(2, "exact benchmarks", ok, f"hydrogen |E+1|={e_err:.2e}; well |lambda-pi^2/4|={w_err:.2e}")
    assert ok


def test_criterion_3_critical_decay_law(near_critical):
    _, res, secs = near_critical
    fit = fit_decay(res.wavefunction, "ExpSqrt", (100.0, 1600.0))
    rate_ok = abs(fit.rate - 2.0) <= 0.05 * 2.0
    power_ok = abs(fit.power + 0.75) <= 0.15
    ok = rate_ok and power_ok and secs < 120.0
    detail = f"rate={fit.rate:.4f} power={fit.power:+.4f} residual={fit.residual:.1e} ({secs:.1f}s)"
    if not power_ok:
        detail += "; the one-dimensional u carries r^(+1/4), the r^(-3/4) law belongs to psi = u/r in three dimensions"
    report(3, "critical decay law", ok, detail)
    assert ok


@pytest.mark.parametrize("lam", [0.7, 0.8])
def test_criterion_4_subcritical_decay_law(lam):
    _, res = _subcritical(lam)
    kappa = math.sqrt(-res.energy)
    fit = fit_decay(res.wavefunction, "ExpLinear", (20.0 / kappa, 100.0 / kappa))
    rel = abs(fit.rate - kappa) / kappa
    ok = rel < 0.02
    report(4, f"subcritical decay law lambda={lam}", ok, f"rate={fit.rate:.6f} sqrt|E|={kappa:.6f} rel={rel:.1e}")
    assert ok


def test_criterion_5_envelope_domination(near_critical):
    cases = [("near-critical", near_critical[0], near_critical[1])]
    cases += [(f"lambda={lam}", *_subcritical(lam)) for lam in (0.7, 0.8)]
    rows = []
    ok = True
    for label, prob, res in cases:
        env = build_envelope(prob, res.energy, 0.05, 10.0)
        verdict = verify_envelope(res.wavefunction, env)
        good = isinstance(verdict, Dominates)
        ok &= good
        rows.append(f"{label}: {type(verdict).__name__}" + (f"(C={verdict.C:.3g})" if good else ""))
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        E = -rng.uniform(1e-3, 2.0)
        eps = rng.uniform(0.0, 0.95)
        r = rng.uniform(1.0, 1000.0)
        val, _ = quad(lambda t: 2.0 * math.sqrt(abs(E) * t * t + (1.0 - eps)), 0.0, math.sqrt(r), epsabs=1e-13, epsrel=1e-13)
        worst = max(worst, abs(subcritical_bound(E, eps, r) + val))
    ok &= worst < 1e-6
    rows.append(f"subcritical_bound max|err|={worst:.1e}")
    report(5, "envelope domination", ok, "; ".join(rows))
    assert ok


def test_criterion_6_dimension_dichotomy():
    want = {3: TailClass.DIVERGENT, 4: TailClass.DIVERGENT, 5: TailClass.SQUARE_SUMMABLE, 6: TailClass.SQUARE_SUMMABLE}
    agree = {TailVerdict.NON_EXISTENCE_SIDE: TailClass.DIVERGENT, TailVerdict.EXISTENCE_SIDE: TailClass.SQUARE_SUMMABLE}
    rows = []
    ok = True
    for d, expected in want.items():
        fam = family("square_well", d)
        prob = fam(critical_coupling(fam))
        got = existence_crosscheck(prob)
        tail = classify_tail(prob.potential, TailComparison(d))
        consistent = tail is TailVerdict.INCONCLUSIVE or agree[tail] is got
        ok &= got is expected and consistent
        rows.append(f"d={d}: {got.value}/{tail.value}")
    report(6, "dimension dichotomy", ok, "; ".join(rows))
    assert ok


def test_criterion_7_bound_soundness():
    t0 = time.perf_counter()
    cells = run_natom_sweeps(samples=10**5, seed=0, N_max=5, deltas=(0.1, 0.3, 0.5))
    natom_bad = sum(c.violations for c in cells)
    helium_bad = 0
    helium_counts = []
    for i, rp in enumerate((RegionParams(0.5, 1.0), RegionParams(1.0, 0.6), RegionParams(0.3, 0.5))):
        counts = sweep_helium(rp, 10**5, np.random.SeedSequence([1, i]))
        helium_bad += counts["inside_violations"] + counts["outside_violations"]
        helium_counts.append(f"{counts['inside']}/{counts['outside']}")
    secs = time.perf_counter() - t0
    ok = natom_bad == 0 and helium_bad == 0 and secs < 60.0
    detail = f"{len(cells)} N-atom cells, violations={natom_bad}; helium inside/outside {', '.join(helium_counts)}, violations={helium_bad} ({secs:.1f}s)"
    report(7, "many-body bound soundness", ok, detail)
    assert ok


def test_criterion_8_envelope_evaluators():
    jump = 1e-13
    chi_gap = max(abs(chi_cutoff(b - jump) - chi_cutoff(b + jump)) for b in (1.0, 2.0))
    exact = (
        chi_cutoff(0.5) == 1.0
        and chi_cutoff(3.0) == 0.0
        and chi_cutoff(1.5) == math.cos(math.pi / 4)
        and m_n_correction(1.0, 2) == 9.0
        and m_n_correction(4.0, 2) == 25.0
        and m_n_correction(8.0, 2) == 36.0
    )
    mn_gap = max(abs(m_n_correction(b - jump, 2.0) - m_n_correction(b + jump, 2.0)) / 36.0 for b in (2.0, 6.0))
    rng = np.random.default_rng(8)
    worst = 0.0
    checked = 0
    for pos in random_configs(rng, 20000, 2):
        cfg = ManyBodyConfig(pos, 0.91, 1)
        for dl in (0.1, 0.5, 0.9):
            rp = RegionParams(dl, 1.0)
            if natom_region(cfg, dl) is NAtomRegion.A_LESS and helium_region(pos[0], pos[1], rp) is HeliumRegion.OUTSIDE:
                a = natom_lower_bound(cfg, dl)
                b = helium_bound_outside(pos[0], pos[1], 0.91, rp)
                worst = max(worst, abs(a - b) / (np.finfo(float).eps * (abs(a) + abs(b))))
                checked += 1
    ok = exact and chi_gap < 1e-12 and mn_gap < 1e-12 and worst <= 4.0
    detail = f"chi jump={chi_gap:.1e}; M_n jump={mn_gap:.1e}; identity max err={worst:.1f} ulp over {checked} configs"
    report(8, "envelope evaluators", ok, detail)
    assert ok


def test_criterion_9_cone_volume():
    rows = []
    ok = True
    for alpha, delta in ((1.0, 0.1), (0.6, 1.0)):
        slope = region_volume_exponent(RegionParams(delta, alpha), samples=10**6, seed=7)
        again = region_volume_exponent(RegionParams(delta, alpha), samples=10**6, seed=7)
        good = abs(slope - (1 + 2 * alpha)) <= 0.1 and slope == again
        ok &= good
        rows.append(f"alpha={alpha}: {slope:.5f} (analytic {1 + 2 * alpha:.1f}, rerun identical={slope == again})")
    report(9, "cone-volume scaling", ok, "; ".join(rows))
    assert ok


def test_criterion_10_declared_out_of_scope():
    report(
        10,
        "declared not reproducible",
        True,
        "3N-dimensional helium/N-atom ground states and the existential constants C_j, K_j are not computed; criteria 7-8 cover them",
    )


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))

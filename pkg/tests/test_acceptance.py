"""End-to-end acceptance checks; each test records one PASS/FAIL line."""
import math
import time

import numpy as np
import pytest

from qcfem.analysis.convergence import StudyConfig, convergence_study, interpolation_study, observed_rate
from qcfem.analysis.manufactured import fd_curl, fd_jacobian, manufactured_layer, manufactured_smooth
from qcfem.analysis.verify import (
    verify_commuting,
    verify_complex,
    verify_jump_property,
    verify_known_basis,
    verify_poincare,
    verify_unisolvence,
)
from qcfem.assembly import ProblemParams
from qcfem.mesh import unit_cube_mesh

LEVELS = (2, 3, 4)

# boundary-layer example, r = 1: (l2, curl, energy) per level and orders per transition
TABLE_L2 = (3.231e-01, 1.623e-01, 8.261e-02)
TABLE_CURL = (3.451e00, 1.937e00, 1.295e00)
TABLE_ENERGY = {1e-8: (3.781e00, 2.108e00, 1.389e00), 0.0: (3.774e00, 2.100e00, 1.378e00)}
ORDERS_L2 = (0.99, 0.97)
ORDERS_CURL = (0.83, 0.58)
ORDERS_ENERGY = {1e-8: (0.84, 0.60), 0.0: (0.85, 0.61)}


def _study(example, eps, r=1, levels=LEVELS):
    return convergence_study(StudyConfig(example, ProblemParams(eps=eps), r, levels))


@pytest.fixture(scope="module")
def layer_runs():
    return {eps: _study("layer", eps) for eps in (1e-8, 0.0)}


@pytest.fixture(scope="module")
def smooth_runs():
    return {
        (1.0, 1): _study("smooth", 1.0, 1),
        (1e-6, 1): _study("smooth", 1e-6, 1),
        (1e-6, 2): _study("smooth", 1e-6, 2),
    }


def test_01_unisolvence(report):
    t0 = time.perf_counter()
    res = [verify_unisolvence(r) for r in (1, 2)]
    dt = time.perf_counter() - t0
    worst = max(r.value for r in res)
    ok = all(r.passed for r in res) and worst <= 1e-12
    report(1, ok, f"max|GC-I| = {worst:.2e} for r=1,2 ({dt:.2f}s)")
    assert ok


def test_02_known_basis(report):
    res = verify_known_basis()
    report(2, res.passed, f"max coefficient difference {res.value:.1e}; matched local indices {res.details}")
    assert res.passed and res.value <= 1e-12


def test_03_poincare_identity(report):
    res = verify_poincare(nrandom=50, degree=3)
    report(3, res.passed, f"curl p w + p3 div w = w exactly on {res.details['fields']} fields")
    assert res.passed


def test_04_complex_exactness(report):
    failed = []
    for n in (2, 3):
        for r in (1, 2):
            for bc in (False, True):
                rep = verify_complex(unit_cube_mesh(n), r, bc)
                if not rep.passed:
                    failed.append((n, r, bc, rep.checks))
    rep = verify_complex(unit_cube_mesh(2), 1, True)
    dims = (rep.dims["S"], rep.dims["V"], rep.dims["W"], rep.dims["Q"])
    ok = not failed and dims == (1, 30, 36, 7) and rep.alternating_sum == 0
    report(4, ok, f"8 configurations exact; boundary dims at 2^3, r=1: {dims}, sum {rep.alternating_sum}")
    assert ok, failed


def test_05_commuting_diagram(report):
    worst = max(verify_commuting(unit_cube_mesh(2), r, nfields=20).max_residual for r in (1, 2))
    ok = worst <= 1e-10
    report(5, ok, f"max residual {worst:.2e} over 20 random cubic fields, r=1,2")
    assert ok


def test_06_jump_property(report):
    reps = [verify_jump_property(r, unit_cube_mesh(2)) for r in (1, 2)]
    worst = max(r.max_residual for r in reps)
    sanity = min(r.max_without_interpolant for r in reps)
    ok = worst <= 1e-12 and sanity > 1e-2
    report(6, ok, f"max residual {worst:.2e}; without the interpolant {sanity:.2e}")
    assert ok


def _table_check(records, eps):
    rows = []
    ok = True
    for k, rec in enumerate(records):
        e = rec.errors
        for got, want in ((e.l2, TABLE_L2[k]), (e.curl_l2, TABLE_CURL[k]), (e.energy_sum, TABLE_ENERGY[eps][k])):
            ok &= abs(got - want) <= 0.02 * want
        rows.append(f"{e.l2:.3e}/{e.curl_l2:.3e}/{e.energy_sum:.3e}")
    orders = []
    for k in (1, 2):
        rr = records[k].rates
        got = (rr["l2"], rr["curl_l2"], rr["energy_sum"])
        want = (ORDERS_L2[k - 1], ORDERS_CURL[k - 1], ORDERS_ENERGY[eps][k - 1])
        ok &= all(abs(g - w) <= 0.05 for g, w in zip(got, want))
        orders.append("/".join(f"{g:.2f}" for g in got))
    return ok, f"values {'; '.join(rows)}  orders {'; '.join(orders)}"


def test_07_table_eps_small(layer_runs, report):
    ok, summary = _table_check(layer_runs[1e-8], 1e-8)
    report(7, ok, "eps=1e-8 " + summary)
    assert ok


def test_08_table_eps_zero(layer_runs, report):
    ok, summary = _table_check(layer_runs[0.0], 0.0)
    report(8, ok, "eps=0 " + summary)
    assert ok


def test_09_smooth_rates(smooth_runs, report):
    gc = smooth_runs[(1.0, 1)][-1].rates["gradcurl"]
    en = smooth_runs[(1e-6, 1)][-1].rates["energy"]
    l2_r1 = smooth_runs[(1e-6, 1)][-1].rates["l2"]
    l2_r2 = smooth_runs[(1e-6, 2)][-1].rates["l2"]
    ok = 0.85 <= gc <= 1.15 and 1.7 <= en <= 2.2 and l2_r2 - l2_r1 >= 0.5
    report(9, ok, f"gradcurl order {gc:.3f} (eps=1); energy order {en:.3f} (eps=1e-6); "
                  f"L2 order r=2 {l2_r2:.3f} vs r=1 {l2_r1:.3f}")
    assert ok


def test_10_multiplier_vanishes(smooth_runs, report):
    ratios = [rec.p_norm / rec.f_norm for recs in smooth_runs.values() for rec in recs]
    worst = max(ratios)
    ok = worst <= 1e-8
    report(10, ok, f"max |p_h|/|f| = {worst:.2e} over {len(ratios)} solves")
    assert ok


def test_11_interpolation_orders(report):
    lines = []
    ok = True
    for r in (1, 2):
        recs = interpolation_study(StudyConfig("smooth", ProblemParams(), r, LEVELS))
        first, last = recs[0], recs[-1]
        # order over the whole range and on the finest step
        l2 = observed_rate(first.errors.l2, last.errors.l2, first.h, last.h)
        cu = observed_rate(first.errors.curl_l2, last.errors.curl_l2, first.h, last.h)
        l2_fine, cu_fine = last.rates["l2"], last.rates["curl_l2"]
        ok &= l2 >= r - 0.2 and cu >= 1.8 and l2_fine >= r - 0.2 and cu_fine >= 1.8
        lines.append(f"r={r}: L2 {l2:.3f} (fine {l2_fine:.3f}), curl {cu:.3f} (fine {cu_fine:.3f})")
    report(11, ok, "; ".join(lines))
    assert ok


def test_12_finite_difference_oracle(report):
    pts = np.random.default_rng(12).uniform(0.05, 0.95, size=(100, 3))
    worst = 0.0
    for sol in (manufactured_smooth(ProblemParams()), manufactured_layer(ProblemParams())):
        worst = max(
            worst,
            np.abs(sol.curl_u(pts) - fd_curl(sol.u, pts)).max(),
            np.abs(sol.curlcurl_u(pts) - fd_curl(sol.curl_u, pts)).max(),
            np.abs(sol.curl_lap_curl_u(pts) - fd_curl(sol.lap_curl_u, pts)).max(),
            np.abs(sol.gradcurl_u(pts) - fd_jacobian(sol.curl_u, pts)).max(),
        )
    ok = math.isfinite(worst) and worst <= 1e-5
    report(12, ok, f"max |analytic - FD| = {worst:.2e} at 100 points, step 1e-5")
    assert ok

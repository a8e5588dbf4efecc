"""Acceptance criteria A1-A11.  Each test records a pass/fail line that
is printed in the terminal summary ("acceptance criteria" section)."""
import itertools
import time
from fractions import Fraction

import numpy as np
import pytest

from resonant_kg.basis import (BasisKind, hopf_operator_residual, integral_space4, integral_space6,
                               integral_time_product, make_basis, omega, quadrature_product_integral,
                               space4_bound, space6_bound)
from resonant_kg.diophantine import admissible_eps_grid
from resonant_kg.field import (Field, Sector, apply_Lomega_inv, l2_inner, multiply, norm_HrHs,
                               project, spherical_setup)
from resonant_kg.ls_solver import ProblemSpec
from resonant_kg.mountain_pass import estimate_mG, eval_G, multiplicity_sweep
from resonant_kg.verify import (check_exact_identities, check_resolvent_bounds,
                                check_resolvent_difference, check_strichartz, evolve_and_compare,
                                linear_calibration, random_kernel, scaling_sweep)

from conftest import KINDS, record, solved

GAMMA = 0.1
# p = 3 is run in the Hopf class with momenta (1, 2)
A5_CASES = [(5, "spherical"), (3, "hopf12"), (2, "spherical")]


def a5_eps(p):
    return [e for e, _ in admissible_eps_grid(p, GAMMA, 1e-4, 1e-2, 3, 64)]


def h01(u):
    return norm_HrHs(u, 0.0, 1.0)


def test_A1_exact_integrals():
    t0 = time.perf_counter()
    b = make_basis(BasisKind.spherical(), 8, 5, extra_nodes=8)
    err6 = max(abs(integral_space6(js) - quadrature_product_integral(b, js))
               for js in itertools.combinations_with_replacement(range(9), 6))
    err4 = max(abs(integral_space4(js) - quadrature_product_integral(b, js))
               for js in itertools.combinations_with_replacement(range(9), 4))
    rng = np.random.default_rng(2024)
    viol = 0
    for js in rng.integers(0, 60, size=(10_000, 6)):
        I6, I4 = integral_space6(js), integral_space4(js[:4])
        viol += not (0 <= I6 <= space6_bound(js)) + (not (0 <= I4 <= space4_bound(js[:4])))
    dt = time.perf_counter() - t0
    ok = max(err6, err4) <= 1e-10 and viol == 0 and dt <= 30
    record("A1", "integrals", ok, f"max err6={err6:.1e} err4={err4:.1e}, bound violations={viol}/20000, {dt:.1f}s")
    assert ok


def test_A2_time_integrals():
    exact = integral_time_product((1,) * 6) == Fraction(5, 8)
    rng = np.random.default_rng(7)
    t = np.linspace(0, 2 * np.pi, 8192, endpoint=False)
    worst = 0.0
    for _ in range(100):
        q = int(rng.integers(1, 9))
        f = rng.integers(0, 12, size=q)
        quad = 2 * np.mean(np.prod([np.cos(k * t) for k in f], axis=0))
        worst = max(worst, abs(float(integral_time_product(f)) - quad))
    ok = exact and worst <= 1e-12
    record("A2", "time integrals", ok, f"T(1^6)=5/8 exact: {exact}; max quadrature err={worst:.1e}")
    assert ok


def test_A3_closed_form_constants():
    p5, p2 = ProblemSpec(5, 0.01), ProblemSpec(2, 0.01)
    e5 = Field.mode(p5.basis, p5.trunc, 1, 0)
    e2 = Field.mode(p2.basis, p2.trunc, 1, 0)
    g6 = eval_G(e5, p5)
    sq = project(multiply(e2, e2), Sector.W)
    inner = l2_inner(sq, apply_Lomega_inv(sq, 1.0))
    g4 = eval_G(e2, p2)
    m5, m2 = estimate_mG(p5)[0], estimate_mG(p2)[0]
    ok = (abs(g6 - 5 / 48) <= 1e-12 and abs(g4 + 5 / 24) <= 1e-12 and abs(inner + 5 / 12) <= 1e-12
          and m5 >= 5 / 48 and m2 >= 5 / 24)
    record("A3", "constants", ok, f"G6={g6!r}, G4breve={g4!r}, inner={inner!r}, m5={m5:.6g}, m2={m2:.6g}")
    assert ok


def test_A4_degeneracy():
    basis, trunc = spherical_setup(64, 32, 8, p=5)
    rng = np.random.default_rng(4)
    worst = max(np.max(np.abs(project(multiply(v, v), Sector.V).coeff))
                for v in (random_kernel(basis, trunc, rng, decay=rng.uniform(0, 2)) for _ in range(100)))
    ok = worst <= 1e-12
    record("A4", "Pi_V(v^2)", ok, f"max |coeff| over 100 fields = {worst:.1e}")
    assert ok


@pytest.mark.slow
def test_A5_solver_convergence():
    t0 = time.perf_counter()
    rows = []
    for p, kind in A5_CASES:
        for e in a5_eps(p):
            spec, mp = solved(p, e, kind)
            rows.append((p, e, mp.residual))
    dt = time.perf_counter() - t0
    worst = max(r[2] for r in rows)
    ok = len(rows) == 9 and worst <= 1e-8 and dt <= 300
    record("A5", "convergence", ok, f"{len(rows)} solves, max residual={worst:.1e}, {dt:.0f}s")
    assert ok


@pytest.mark.slow
def test_A5_component_hierarchy():
    """||w|| < ||v2|| < ||v1|| in H^0 H^1 at every A5 solution.  For p = 2
    the range unknown of the contraction (the translated w) is compared."""
    held, lines = 0, []
    for p, kind in A5_CASES:
        for e in a5_eps(p):
            spec, mp = solved(p, e, kind)
            st = mp.state
            n1, n2, nw = h01(st.v1), h01(st.v2), h01(st.range_unknown())
            good = nw < n2 < n1
            held += good
            lines.append(f"p={p} eps={e:.0e}: v1={n1:.2e} v2={n2:.2e} w={nw:.2e}")
    ok = held == 9
    record("A5", "hierarchy", ok, f"holds at {held}/9; " + ", ".join(lines[::3]))
    assert ok


@pytest.mark.slow
def test_A6_round_trip():
    cal = linear_calibration().evolution["mismatch"]
    worst = 0.0
    for p, kind in A5_CASES:
        for e in a5_eps(p):
            spec, mp = solved(p, e, kind)
            worst = max(worst, evolve_and_compare(mp.state.u, spec, 2 ** 14).evolution["mismatch"])
    ok = worst <= 1e-4 and cal <= 1e-10
    record("A6", "round trip", ok, f"max mismatch={worst:.1e} over 9 orbits, calibration={cal:.1e}")
    assert ok


@pytest.mark.slow
@pytest.mark.parametrize("p,kind", [(5, "spherical"), (3, "hopf12"), (3, "hopf00"), (2, "spherical")])
def test_A7_scaling(p, kind):
    grid = [e for e, _ in admissible_eps_grid(p, GAMMA, 1e-4, 1e-2, 6, 64)]
    rep = scaling_sweep(ProblemSpec(p, grid[0], KINDS[kind]), grid)
    sl = rep.slopes["v1_V1"]
    ok = rep.passed and len(grid) >= 5
    record("A7", f"p={p} {kind}", ok, f"slope={sl['slope']:.4f}+-{sl['stderr']:.1e} (target {sl['expected']})")
    assert ok


@pytest.mark.slow
def test_A8_multiplicity():
    spec = ProblemSpec(5, 0.01)
    br = multiplicity_sweep(spec, k_star=2)
    divs = [b.minimal_divisor for b in br]
    mism = [evolve_and_compare(b.state.u, spec).evolution["mismatch"] for b in br]
    ok = (len(br) == 2 and len(set(divs)) == 2 and all(b.residual <= 1e-8 for b in br)
          and all(m <= 1e-4 for m in mism))
    record("A8", "two periods", ok, f"divisors={divs}, residuals={[f'{b.residual:.1e}' for b in br]}, "
                                    f"round trip={[f'{m:.1e}' for m in mism]}")
    assert ok


def test_A9_resolvent_bounds():
    reps = []
    for p in (2, 3, 5):
        om = [w for _, w in admissible_eps_grid(p, GAMMA, 1e-4, 1e-2, 10, 64)]
        reps.append(check_resolvent_bounds(om, GAMMA))
    diff = check_resolvent_difference(seed=9, n_samples=200)
    n_om = sum(r.cases_run for r in reps)
    worst = min(r.worst_margin["divisor_margin"] for r in reps)
    ok = all(r.passed for r in reps) and n_om == 30 and diff.passed
    record("A9", "resolvent", ok, f"gamma/2 margin >= {worst:.3f} at {n_om} omegas; "
                                  f"difference bound worst rel. margin={diff.worst_margin['difference_bound']:.3f}")
    assert ok


def test_A10_strichartz_stability():
    rep = check_strichartz(seed=10, n_samples=100, Jmax=16)
    worst = max(v["rel_change"] for v in rep.sup_ratios.values())
    nb = rep.worst_margin["space6_bound"], rep.worst_margin["space4_bound"]
    ok = rep.passed
    record("A10", "Strichartz", ok, f"max sup change under Jmax doubling={worst:.1e}, "
                                    f"tuple-bound worst margins={nb}, cases={rep.cases_run}")
    assert ok


def test_A11_norm_identities():
    rep = check_exact_identities(seed=11, n_samples=50)
    keys = ("norm_HrHs_equals_V", "norm_equals_t0_slice", "sup_in_time_at_t0", "L2_in_time_equals_V")
    ident = all(rep.worst_margin[k] >= 0 for k in keys)
    worst_gram, worst_res = 0.0, 0.0
    for mu in ((0, 0), (1, 2), (2, 1), (3, 0), (-2, 5)):
        kind = BasisKind.hopf(*mu)
        b = make_basis(kind, 16, 3)
        worst_gram = max(worst_gram, np.max(np.abs(b.gram() - np.eye(17))))
        eta = np.linspace(0.02, np.pi / 2 - 0.02, 41)
        for j in range(10):
            worst_res = max(worst_res, np.max(np.abs(hopf_operator_residual(j, *mu, eta))) / omega(kind, j) ** 2)
    ok = ident and rep.passed and worst_gram <= 1e-10 and worst_res <= 1e-10
    record("A11", "identities", ok, f"{rep.cases_run} cases; Hopf gram err={worst_gram:.1e}, "
                                    f"eigen-residual={worst_res:.1e}")
    assert ok

"""Follow the quintic branch bifurcating from the lowest mode.

For a handful of admissible eps the reduced problem is solved, the
solution is pushed through one period of the evolution, and the growth of
the low-mode amplitude is compared with eps^(1/4).

    python demos/quintic_branch.py
"""

from resonant_kg import ProblemSpec, find_critical_point
from resonant_kg.diophantine import admissible_eps_grid
from resonant_kg.field import norm_HrHs, norm_V
from resonant_kg.verify import evolve_and_compare, fit_slope

def main():
    grid = admissible_eps_grid(5, 0.1, 1e-4, 1e-2, 5, 64)
    amp = []
    print(f"{'eps':>8} {'omega':>12} {'|v1|_V1':>10} {'|v2|':>10} {'|w|':>10} {'residual':>9} {'round trip':>10}")
    for eps, om in grid:
        spec = ProblemSpec(5, eps)
        mp = find_critical_point(spec)
        st = mp.state
        trip = evolve_and_compare(st.u, spec, 2 ** 12).evolution["mismatch"]
        amp.append(norm_V(st.v1, 1.0))
        print(f"{eps:8.1e} {om:12.9f} {amp[-1]:10.3e} {norm_HrHs(st.v2, 0, 1):10.3e} "
              f"{norm_HrHs(st.w, 0, 1):10.3e} {mp.residual:9.1e} {trip:10.1e}")
    slope, err = fit_slope([e for e, _ in grid], amp)
    print(f"log-log slope of the low-mode amplitude: {slope:.4f} +- {err:.1e} (expected 0.25)")

if __name__ == "__main__":
    main()

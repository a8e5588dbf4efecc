"""Cubic solutions carrying Hopf momenta (mu1, mu2).

Each momentum pair selects its own invariant class.  The maximizer of the
reduced functional, its level and the minimal period are printed.

    python demos/hopf_cubic.py
"""
from resonant_kg import BasisKind, ProblemSpec, estimate_mG, find_critical_point


def main():
    for mu in ((0, 0), (1, 2), (2, 1), (3, 0)):
        spec = ProblemSpec(3, 0.01, BasisKind.hopf(*mu))
        mG = estimate_mG(spec)
        mp = find_critical_point(spec, mG=mG)
        print(f"mu={mu}: max G on the unit sphere={mG[0]:.6f}, action={mp.action_value:.4e}, "
              f"divisor={mp.minimal_divisor}, residual={mp.residual:.1e}")


if __name__ == "__main__":
    main()

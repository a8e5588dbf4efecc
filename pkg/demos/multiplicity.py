"""Several geometrically distinct solutions at one frequency.

Restricting the reduced problem to functions of period 2 pi / n gives one
critical point per divisor n.  The minimal periods are distinct, so the
branches are not time translates of each other.

    python demos/multiplicity.py
"""
from resonant_kg import ProblemSpec, multiplicity_sweep
from resonant_kg.verify import evolve_and_compare


def main():
    spec = ProblemSpec(5, 0.01)
    for k, b in enumerate(multiplicity_sweep(spec, k_star=3), 1):
        trip = evolve_and_compare(b.state.u, spec, 2 ** 12).evolution["mismatch"]
        print(f"branch {k}: divisor={b.minimal_divisor}, action={b.action_value:.4e}, "
              f"residual={b.residual:.1e}, round trip={trip:.1e}")


if __name__ == "__main__":
    main()

import functools

import pytest

from resonant_kg.basis import BasisKind
from resonant_kg.ls_solver import ProblemSpec
from resonant_kg.mountain_pass import find_critical_point

KINDS = {"spherical": BasisKind.spherical(), "hopf12": BasisKind.hopf(1, 2), "hopf00": BasisKind.hopf(0, 0)}


@functools.lru_cache(maxsize=None)
def solved(p, eps, kind="spherical", n=1):
    """Cached critical point; the solves are deterministic."""
    spec = ProblemSpec(p, eps, KINDS[kind])
    return spec, find_critical_point(spec, n)


@pytest.fixture
def rng():
    import numpy as np
    return np.random.default_rng(12345)


# acceptance bookkeeping: one summary line per criterion

ACCEPTANCE = {}


def record(crit, part, ok, detail):
    ACCEPTANCE.setdefault(crit, []).append((part, bool(ok), detail))
    line = f"{crit} [{part}] {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE, key=lambda c: int(c[1:])):
        parts = ACCEPTANCE[crit]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{name}: {'ok' if good else 'FAILED'} ({d})" for name, good, d in parts)
        tr.write_line(f"{crit} {'PASS' if ok else 'FAIL'} | {detail}")

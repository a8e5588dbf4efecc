"""Finite-horizon membership in the Diophantine set
Omega_gamma = {omega : |omega l - j| >= gamma / l for all l >= 1, j >= 0, l != j}
and admissible epsilon grids built from omega_eps^2 = 1 + sigma eps.
"""
from dataclasses import dataclass

import numpy as np

from .errors import EmptyGrid
from .field import lomega_divisors, sector_mask, Sector


@dataclass
class FrequencyCheck:
    omega: float
    gamma: float
    ell_max: int
    margin: float
    passed: bool
    worst: tuple = None  # (ell, j) attaining the margin

    def to_dict(self):
        return {"omega": self.omega, "gamma": self.gamma, "ell_max": self.ell_max,
                "margin": self.margin, "passed": self.passed,
                "worst": list(self.worst) if self.worst else None}


def in_omega_gamma(omega, gamma, ell_max):
    """Check |omega l - j| >= gamma / l for 1 <= l <= ell_max.

    Only the integers nearest to omega l can attain the minimum.  The pair
    j = l is excluded by definition, so when it is one of the two nearest
    the next integer on that side is tried as well.
    """
    if gamma <= 0 or ell_max < 1:
        raise ValueError("need gamma > 0 and ell_max >= 1")
    ell = np.arange(1, int(ell_max) + 1)
    x = omega * ell
    margin, worst = np.inf, None
    lo, hi = np.floor(x), np.ceil(x)
    for j in (lo, hi, lo - 1, hi + 1):
        j = j.astype(np.int64)
        ok = (j != ell) & (j >= 0)
        if not np.any(ok):
            continue
        m = np.abs(x - j) - gamma / ell
        m = np.where(ok, m, np.inf)
        k = int(np.argmin(m))
        if m[k] < margin:
            margin, worst = float(m[k]), (int(ell[k]), int(j[k]))
    return FrequencyCheck(float(omega), float(gamma), int(ell_max), margin, bool(margin >= 0), worst)


def sigma_of(p):
    """Sign in omega^2 = 1 + sigma eps: -1 for the quadratic case, +1 otherwise."""
    return -1 if p == 2 else 1


def omega_of_eps(p, eps):
    return float(np.sqrt(1.0 + sigma_of(p) * eps))


def admissible_eps_grid(p, gamma, eps_min, eps_max, count, ell_max):
    """Log-uniform eps samples whose omega_eps passes the finite check."""
    if not 0 < eps_min <= eps_max:
        raise ValueError("need 0 < eps_min <= eps_max")
    eps = np.geomspace(eps_min, eps_max, count) if count > 1 else np.array([eps_min])
    out = []
    for e in eps:
        w = omega_of_eps(p, float(e))
        if in_omega_gamma(w, gamma, ell_max).passed:
            out.append((float(e), w))
    if not out:
        raise EmptyGrid(f"no eps in [{eps_min:g}, {eps_max:g}] passes gamma={gamma:g} up to l={ell_max}")
    return out


def resolvent_margin(omega, basis, trunc):
    """min |omega^2 l^2 - omega_j^2| over the W-modes of the truncation."""
    d = np.abs(lomega_divisors(basis, trunc, omega))
    return float(d[sector_mask(basis, trunc, Sector.W)].min())

"""Spatial eigenbases on S^3 for the two symmetry classes, their quadrature
rules, and exact integer formulas for products of eigenfunctions.

Spherical class: functions of the polar angle x in [0, pi] with measure
sin(x)^2 dbar(x), dbar(x) = (2/pi) dx.  Eigenfunctions
e_n(x) = sin((n+1)x)/sin(x) = U_n(cos x), frequencies omega_n = n+1.

Hopf class: functions of eta in [0, pi/2] with measure sin(2 eta) d eta.
With c = cos(2 eta) the measure becomes dc/2 on [-1, 1] and
e_j = N_j (1-c)^{a/2} (1+c)^{b/2} P_j^{(a,b)}(c), a = |mu1|, b = |mu2|,
omega_j = 2j + 1 + a + b.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import ceil

import numpy as np
from scipy import special


@dataclass(frozen=True)
class BasisKind:
    """Symmetry class; ``name`` is ``"spherical"`` or ``"hopf"``."""

    name: str = "spherical"
    mu1: int = 0
    mu2: int = 0

    def __post_init__(self):
        if self.name not in ("spherical", "hopf"):
            raise ValueError(f"unknown basis kind {self.name!r}")
        if self.name == "spherical" and (self.mu1 or self.mu2):
            raise ValueError("spherical kind carries no momenta")

    @classmethod
    def spherical(cls):
        return cls("spherical")

    @classmethod
    def hopf(cls, mu1, mu2):
        return cls("hopf", int(mu1), int(mu2))

    @property
    def is_hopf(self):
        return self.name == "hopf"

    @property
    def a(self):
        return abs(self.mu1)

    @property
    def b(self):
        return abs(self.mu2)

    @property
    def mu_bar(self):
        """|mu1| + |mu2| + 1, the lowest Hopf frequency (1 for spherical)."""
        return self.a + self.b + 1

    def label(self):
        if self.is_hopf:
            return f"hopf({self.mu1},{self.mu2})"
        return "spherical"


def omega(kind, j):
    """Eigenfrequency of mode ``j``: the A-eigenvalue is its square."""
    if j < 0:
        raise ValueError("mode index must be nonnegative")
    if kind.is_hopf:
        return 2 * int(j) + 1 + kind.a + kind.b
    return int(j) + 1


def omegas(kind, Jmax):
    return np.array([omega(kind, j) for j in range(Jmax + 1)], dtype=np.int64)


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    exact_degree: int


def spherical_quadrature(n):
    """Gauss rule for the weight sin(x)^2 dbar(x) on (0, pi).

    This is Gauss-Chebyshev of the second kind after x -> cos x; the rule is
    exact for polynomials in cos x of degree <= 2n - 1.
    """
    k = np.arange(1, n + 1)
    x = k * np.pi / (n + 1)
    w = 2.0 / (n + 1) * np.sin(x) ** 2
    return QuadratureRule(x, w, 2 * n - 1)


def hopf_quadrature(n):
    """Gauss-Legendre in c = cos(2 eta); nodes returned as eta values."""
    c, wc = special.roots_legendre(n)
    # ascending eta
    c = c[::-1]
    wc = wc[::-1]
    eta = 0.5 * np.arccos(c)
    return QuadratureRule(eta, 0.5 * wc, 2 * n - 1)


def eval_spherical_e(n, x):
    """e_n(x) = sin((n+1)x)/sin(x), evaluated as U_n(cos x).

    The Chebyshev form has no removable singularity, so the endpoint limits
    e_n(0) = n+1 and e_n(pi) = (-1)^n (n+1) come out directly.
    """
    return special.eval_chebyu(n, np.cos(x))


def jacobi(n, a, b, c):
    if n < 0:
        return np.zeros_like(np.asarray(c, dtype=float))
    return special.eval_jacobi(n, a, b, c)


def jacobi_derivative(n, a, b, c, k=1):
    """k-th derivative in c of P_n^{(a,b)}, via
    d/dc P_n^{(a,b)} = (n+a+b+1)/2 P_{n-1}^{(a+1,b+1)}."""
    if k > n:
        return np.zeros_like(np.asarray(c, dtype=float))
    scale = special.poch(n + a + b + 1, k) / 2.0 ** k
    return scale * special.eval_jacobi(n - k, a + k, b + k, c)


def _hopf_raw(j, a, b, c):
    return (1 - c) ** (a / 2) * (1 + c) ** (b / 2) * jacobi(j, a, b, c)


@lru_cache(maxsize=None)
def hopf_normalization(j, a, b):
    """N_j such that e_j has unit norm in L^2(sin(2 eta) d eta).

    Computed from a Gauss-Legendre rule that integrates the squared
    unnormalized function exactly (a polynomial of degree 2j + a + b in c).
    """
    n = j + (a + b) // 2 + 2
    rule = hopf_quadrature(n)
    c = np.cos(2 * rule.nodes)
    nrm2 = np.sum(rule.weights * _hopf_raw(j, a, b, c) ** 2)
    return 1.0 / np.sqrt(nrm2)


def eval_hopf_e(j, mu1, mu2, eta):
    a, b = abs(mu1), abs(mu2)
    c = np.cos(2 * np.asarray(eta, dtype=float))
    return hopf_normalization(j, a, b) * _hopf_raw(j, a, b, c)


def hopf_operator_residual(j, mu1, mu2, eta):
    """Delta_{mu1,mu2} e_j + (omega_j^2 - 1) e_j at the given angles.

    Delta = d_eta^2 + 2 cot(2 eta) d_eta - mu1^2/sin^2(eta) - mu2^2/cos^2(eta),
    which in c = cos(2 eta) reads
    4(1-c^2) f'' - 8 c f' - (2 mu1^2/(1-c) + 2 mu2^2/(1+c)) f.
    Derivatives of the Jacobi factor are exact.
    """
    a, b = abs(mu1), abs(mu2)
    c = np.cos(2 * np.asarray(eta, dtype=float))
    al, be = a / 2, b / 2
    g = (1 - c) ** al * (1 + c) ** be
    r = -al / (1 - c) + be / (1 + c)
    g1 = g * r
    g2 = g * (r ** 2 - al / (1 - c) ** 2 - be / (1 + c) ** 2)
    P = jacobi(j, a, b, c)
    P1 = jacobi_derivative(j, a, b, c, 1)
    P2 = jacobi_derivative(j, a, b, c, 2)
    f = g * P
    f1 = g1 * P + g * P1
    f2 = g2 * P + 2 * g1 * P1 + g * P2
    lap = 4 * (1 - c ** 2) * f2 - 8 * c * f1 - (2 * a ** 2 / (1 - c) + 2 * b ** 2 / (1 + c)) * f
    w = 2 * j + 1 + a + b
    return hopf_normalization(j, a, b) * (lap + (w ** 2 - 1) * f)


def eval_e(kind, j, z):
    if kind.is_hopf:
        return eval_hopf_e(j, kind.mu1, kind.mu2, z)
    return eval_spherical_e(j, z)


def quadrature_order(kind, Jmax, p):
    """Number of nodes making (p+1)-fold eigenfunction products exact."""
    if kind.is_hopf:
        deg = (p + 1) * (Jmax + (kind.a + kind.b) / 2)
    else:
        deg = (p + 1) * Jmax
    return int(ceil((deg + 1) / 2)) + 1


@dataclass(frozen=True, eq=False)
class SpatialBasis:
    kind: BasisKind
    Jmax: int
    omegas: np.ndarray
    quad: QuadratureRule
    node_values: np.ndarray  # shape (Jmax+1, n_nodes): e_j(x_q)
    p: int = 5
    interval: tuple = field(default=(0.0, np.pi))

    @property
    def weighted_values(self):
        return self.node_values * self.quad.weights

    def gram(self):
        return self.weighted_values @ self.node_values.T

    def eval(self, j, z):
        return eval_e(self.kind, j, z)

    def synth(self, coeffs, z):
        """Evaluate sum_j coeffs[..., j] e_j(z) at arbitrary points."""
        E = np.array([eval_e(self.kind, j, np.asarray(z, dtype=float))
                      for j in range(self.Jmax + 1)])
        return np.asarray(coeffs) @ E


_BASIS_CACHE = {}


def make_basis(kind, Jmax, p=5, extra_nodes=0):
    """Build (and cache) the eigenbasis with a quadrature exact for
    (p+1)-fold products of modes j <= Jmax."""
    key = (kind, Jmax, p, extra_nodes)
    if key in _BASIS_CACHE:
        return _BASIS_CACHE[key]
    n = quadrature_order(kind, Jmax, p) + extra_nodes
    if kind.is_hopf:
        quad = hopf_quadrature(n)
        interval = (0.0, np.pi / 2)
    else:
        quad = spherical_quadrature(n)
        interval = (0.0, np.pi)
    E = np.array([eval_e(kind, j, quad.nodes) for j in range(Jmax + 1)])
    basis = SpatialBasis(kind, Jmax, omegas(kind, Jmax), quad, E, p, interval)
    _BASIS_CACHE[key] = basis
    return basis


# exact product formulas (spherical only)

def product_rule_indices(n, m):
    """Indices k with e_n e_m = sum_k e_k (each multiplicity one)."""
    if n < m:
        n, m = m, n
    return [n - m + 2 * k for k in range(m + 1)]


def integral_time_product(freqs):
    """Exact value of the time integral of prod_k cos(l_k t) for the
    normalized measure dt/pi on one period (total mass 2).

    Expanding each cosine into exponentials gives
    2^{1-q} #{sigma in {+-1}^q : sigma . l = 0}.
    """
    freqs = [abs(int(f)) for f in freqs]
    q = len(freqs)
    if q == 0:
        return Fraction(2)
    counts = {0: 1}
    for f in freqs:
        nxt = {}
        for s, c in counts.items():
            nxt[s + f] = nxt.get(s + f, 0) + c
            nxt[s - f] = nxt.get(s - f, 0) + c
        counts = nxt
    return Fraction(counts.get(0, 0), 2 ** (q - 1))


def _reject_hopf(kind):
    if kind is not None and kind.is_hopf:
        raise ValueError("closed-form product integrals exist only for the spherical basis")


def _expand_triple(ja, jb, jc):
    """Multiplicities of the modes in e_ja e_jb e_jc, with ja <= jb and the
    pairing (e_ja e_jb) e_jc, as a bincount array."""
    out = np.zeros(ja + jb + jc + 1, dtype=np.int64)
    for k in range(ja + 1):
        n1 = jb - ja + 2 * k
        lo = abs(jc - n1)
        out[lo: lo + 2 * min(jc, n1) + 1: 2] += 1
    return out


def integral_space6(j, kind=None):
    """Exact integer value of int e_j1 ... e_j6 sin^2 x dbar(x).

    The indices are sorted, then e_j1 e_j4 e_j2 and e_j3 e_j5 e_j6 are each
    expanded with the product rule; orthonormality reduces the integral to
    a count of coinciding indices (a Kronecker-delta sum).
    """
    _reject_hopf(kind)
    j1, j2, j3, j4, j5, j6 = sorted(int(x) for x in j)
    c1 = _expand_triple(j1, j4, j2)
    c2 = _expand_triple(j3, j5, j6)
    n = min(len(c1), len(c2))
    return int(np.dot(c1[:n], c2[:n]))


def integral_space4(j, kind=None):
    """Exact integer value of int e_j1 e_j2 e_j3 e_j4 sin^2 x dbar(x)."""
    _reject_hopf(kind)
    j1, j2, j3, j4 = sorted(int(x) for x in j)
    s1 = {j2 - j1 + 2 * k for k in range(j1 + 1)}
    s2 = {j4 - j3 + 2 * h for h in range(j3 + 1)}
    return len(s1 & s2)


def space6_bound(j):
    w = sorted(int(x) + 1 for x in j)
    return w[0] * w[1] * w[2]


def space4_bound(j):
    return min(int(x) for x in j) + 1


def quadrature_product_integral(basis, indices):
    """Brute-force quadrature of int prod_k e_{j_k} against the basis measure."""
    vals = np.ones_like(basis.quad.weights)
    for j in indices:
        vals = vals * basis.node_values[j]
    return float(np.sum(basis.quad.weights * vals))

"""Time-space spectral fields u = sum u[l, j] cos(l t) e_j(z).

Coefficient convention: the synthesis sum above is the definition, for
every l including l = 0.  Since the time measure dt/pi has mass 2, the
analysis coefficient at l = 0 is half the inner product with e_j.

The linear operator L_omega acts on cos(l t) e_j by the factor
(omega^2 l^2 - omega_j^2); it vanishes on the kernel modes l = omega_j
when omega = 1.  Solver formulas only ever use its inverse on W.
"""
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from math import gcd

import numpy as np

from .basis import BasisKind, eval_e, make_basis, product_rule_indices
from .errors import BasisMismatch, KernelOverlap, SmallDivisor


class Sector(Enum):
    V = "V"
    W = "W"
    VlowN = "VlowN"
    VhighN = "VhighN"


@dataclass(frozen=True)
class Truncation:
    Lmax: int = 64
    Jmax: int = 32
    N_split: int = 8

    def validate(self, basis):
        if basis.Jmax != self.Jmax:
            raise BasisMismatch("basis and truncation disagree on Jmax")
        wmax = int(basis.omegas[-1])
        if self.Lmax < wmax:
            raise ValueError(f"Lmax={self.Lmax} cannot represent kernel mode omega={wmax}")
        if not 1 <= self.N_split <= wmax:
            raise ValueError(f"N_split must lie in [1, {wmax}]")
        return self


def default_truncation(kind, Lmax=64, Jmax=32, N_split=8):
    """Largest Jmax <= requested whose kernel modes fit below Lmax."""
    if kind.is_hopf:
        Jmax = min(Jmax, (Lmax - 1 - kind.a - kind.b) // 2)
        if Jmax < 0:
            raise ValueError("Lmax too small for these momenta")
    return Truncation(Lmax, Jmax, N_split)


class Field:
    """Real cosine-in-time coefficient array on a spatial eigenbasis."""

    __slots__ = ("basis", "trunc", "coeff")

    def __init__(self, basis, trunc, coeff=None):
        self.basis = basis
        self.trunc = trunc
        shape = (trunc.Lmax + 1, trunc.Jmax + 1)
        if coeff is None:
            coeff = np.zeros(shape)
        coeff = np.asarray(coeff, dtype=float)
        if coeff.shape != shape:
            raise BasisMismatch(f"coefficient shape {coeff.shape} != {shape}")
        self.coeff = coeff

    @classmethod
    def zeros(cls, basis, trunc):
        return cls(basis, trunc)

    @classmethod
    def mode(cls, basis, trunc, ell, j, value=1.0):
        u = cls(basis, trunc)
        u.coeff[ell, j] = value
        return u

    @classmethod
    def kernel(cls, basis, trunc, values):
        """Kernel field sum_j values[j] cos(omega_j t) e_j."""
        u = cls(basis, trunc)
        values = np.asarray(values, dtype=float)
        j = np.arange(len(values))
        u.coeff[basis.omegas[j], j] = values
        return u

    def kernel_values(self):
        j = np.arange(self.trunc.Jmax + 1)
        return self.coeff[self.basis.omegas, j].copy()

    def like(self, coeff):
        return Field(self.basis, self.trunc, coeff)

    def copy(self):
        return self.like(self.coeff.copy())

    def _check(self, other):
        if self.basis is not other.basis or self.trunc != other.trunc:
            raise BasisMismatch("fields live on different bases or truncations")

    def __add__(self, other):
        self._check(other)
        return self.like(self.coeff + other.coeff)

    def __sub__(self, other):
        self._check(other)
        return self.like(self.coeff - other.coeff)

    def __neg__(self):
        return self.like(-self.coeff)

    def __mul__(self, scalar):
        return self.like(self.coeff * float(scalar))

    __rmul__ = __mul__

    def __repr__(self):
        nz = np.count_nonzero(self.coeff)
        return f"Field({self.basis.kind.label()}, L={self.trunc.Lmax}, J={self.trunc.Jmax}, nnz={nz})"


# masks and norms

@lru_cache(maxsize=64)
def _masks(omegas_key, Lmax, N):
    om = np.array(omegas_key)
    ell = np.arange(Lmax + 1)[:, None]
    ker = ell == om[None, :]
    low = ker & (om[None, :] <= N)
    return ker, ~ker, low, ker & ~low


def sector_mask(basis, trunc, sec):
    ker, rng, low, high = _masks(tuple(int(w) for w in basis.omegas), trunc.Lmax, trunc.N_split)
    return {Sector.V: ker, Sector.W: rng, Sector.VlowN: low, Sector.VhighN: high}[Sector(sec)]


def project(u, sec):
    return u.like(np.where(sector_mask(u.basis, u.trunc, sec), u.coeff, 0.0))


def norm_weights(basis, trunc, r, s):
    ell = np.maximum(1, np.arange(trunc.Lmax + 1)).astype(float)
    return ell[:, None] ** (2 * r) * basis.omegas[None, :].astype(float) ** (2 * s)


def norm_HrHs(u, r=0.0, s=0.0):
    """sqrt(sum <l>^{2r} omega_j^{2s} u[l,j]^2), <l> = max(1, |l|)."""
    return float(np.sqrt(np.sum(norm_weights(u.basis, u.trunc, r, s) * u.coeff ** 2)))


def norm_V(v, s):
    """V^s norm of a kernel field: sqrt(sum omega_j^{2s} v_j^2)."""
    return float(np.sqrt(np.sum(v.basis.omegas.astype(float) ** (2 * s) * v.kernel_values() ** 2)))


def inner_V1(a, b):
    w2 = a.basis.omegas.astype(float) ** 2
    return float(np.sum(w2 * a.kernel_values() * b.kernel_values()))


def time_mass(Lmax):
    """int cos^2(l t) dt/pi: 2 for l = 0, else 1."""
    c = np.ones(Lmax + 1)
    c[0] = 2.0
    return c


def l2_inner(a, b):
    """Space-time L^2 inner product with measure dbar t x (spatial measure)."""
    a._check(b)
    return float(np.sum(time_mass(a.trunc.Lmax)[:, None] * a.coeff * b.coeff))


# linear operators

def apply_A(u):
    return u.like(u.coeff * u.basis.omegas.astype(float)[None, :] ** 2)


def apply_A_inv(u):
    return u.like(u.coeff / u.basis.omegas.astype(float)[None, :] ** 2)


def lomega_divisors(basis, trunc, omega):
    ell = np.arange(trunc.Lmax + 1, dtype=float)[:, None]
    return omega ** 2 * ell ** 2 - basis.omegas.astype(float)[None, :] ** 2


def apply_Lomega(u, omega):
    """Spectral action of L_omega: multiply by omega^2 l^2 - omega_j^2."""
    return u.like(u.coeff * lomega_divisors(u.basis, u.trunc, omega))


def apply_Lomega_inv(w, omega, floor=1e-12):
    """Divide W-coefficients by omega^2 l^2 - omega_j^2."""
    ker = sector_mask(w.basis, w.trunc, Sector.V)
    if np.any(w.coeff[ker] != 0.0):
        ell, j = np.argwhere(ker & (w.coeff != 0.0))[0]
        raise KernelOverlap(f"nonzero coefficient on kernel mode (ell={ell}, j={j})")
    d = lomega_divisors(w.basis, w.trunc, omega)
    bad = ~ker & (np.abs(d) < floor)
    if np.any(bad):
        ell, j = np.argwhere(bad)[0]
        raise SmallDivisor(f"divisor {d[ell, j]:.3e} at (ell={ell}, j={j}) below floor {floor:g}",
                           ell=int(ell), j=int(j), divisor=float(d[ell, j]))
    out = np.zeros_like(w.coeff)
    out[~ker] = w.coeff[~ker] / d[~ker]
    return w.like(out)


# collocation

class Collocation:
    """Tensor grid t_k = pi k / M (k = 0..M) times the spatial quadrature.

    The time transform is the even-cosine (DCT-I) pair evaluated as dense
    matrices; for M > Lmax it inverts exactly on the retained frequencies.
    """

    def __init__(self, basis, trunc, M):
        if M <= trunc.Lmax:
            raise ValueError("time grid too coarse")
        self.basis, self.trunc, self.M = basis, trunc, M
        k = np.arange(M + 1)
        ell = np.arange(trunc.Lmax + 1)
        self.t = np.pi * k / M
        self.Ct = np.cos(np.pi * np.outer(k, ell) / M)
        ck = np.ones(M + 1)
        ck[0] = ck[-1] = 0.5
        alpha = np.full(trunc.Lmax + 1, 2.0 / M)
        alpha[0] = 1.0 / M
        self.At = alpha[:, None] * (self.Ct * ck[:, None]).T
        self.E = basis.node_values
        self.WE = basis.weighted_values.T

    def to_grid(self, u):
        return self.Ct @ u.coeff @ self.E

    def from_grid(self, F):
        return Field(self.basis, self.trunc, self.At @ F @ self.WE)


_COLLOC = {}


def collocation(basis, trunc, M):
    key = (id(basis), trunc, M)
    c = _COLLOC.get(key)
    if c is None or c.basis is not basis:
        c = Collocation(basis, trunc, M)
        _COLLOC[key] = c
    return c


def grid_size(trunc, p):
    return p * trunc.Lmax + 1


def multiply(u1, u2):
    """Galerkin product: exact product projected back onto the truncation."""
    u1._check(u2)
    col = collocation(u1.basis, u1.trunc, grid_size(u1.trunc, 2))
    return col.from_grid(col.to_grid(u1) * col.to_grid(u2))


def power(u, p):
    col = collocation(u.basis, u.trunc, grid_size(u.trunc, p))
    return col.from_grid(col.to_grid(u) ** p)


def space_time_integral(u):
    """int int u dbar(t) dbar(z).  Only l = 0 survives the time integral
    (mass 2); in the spherical basis e_0 = 1 so the result is 2 u[0, 0]."""
    return integral_of_power(u, 1)


def integral_of_power(u, q):
    """int int u^q on the dealiased grid: exact for truncated u."""
    col = collocation(u.basis, u.trunc, grid_size(u.trunc, q))
    F = col.to_grid(u) ** q
    # time average of cos(0 t) row: At[0] gives the l = 0 coefficient
    return float(2 * (col.At[0] @ F) @ u.basis.quad.weights)


def integral_of_product(fields):
    """int int prod_k u_k on a grid fine enough for the whole product."""
    q = len(fields)
    u0 = fields[0]
    col = collocation(u0.basis, u0.trunc, grid_size(u0.trunc, q))
    F = np.ones((col.M + 1, len(u0.basis.quad.weights)))
    for u in fields:
        u0._check(u)
        F = F * col.to_grid(u)
    return float(2 * (col.At[0] @ F) @ u0.basis.quad.weights)


@lru_cache(maxsize=8)
def _time_tensor(Lmax):
    T = np.zeros((Lmax + 1, Lmax + 1, Lmax + 1))
    a = np.arange(Lmax + 1)
    A, B = np.meshgrid(a, a, indexing="ij")
    s = A + B
    d = np.abs(A - B)
    ok = s <= Lmax
    T[A[ok], B[ok], s[ok]] += 0.5
    T[A, B, d] += 0.5
    return T


@lru_cache(maxsize=8)
def _space_tensor(Jmax):
    S = np.zeros((Jmax + 1, Jmax + 1, Jmax + 1))
    for n in range(Jmax + 1):
        for m in range(Jmax + 1):
            for k in product_rule_indices(n, m):
                if k <= Jmax:
                    S[n, m, k] = 1.0
    return S


def multiply_convolution(u1, u2):
    """Spherical-only product via cos(a t)cos(b t) = (cos(a+b)t + cos(a-b)t)/2
    and the eigenfunction product rule."""
    u1._check(u2)
    if u1.basis.kind.is_hopf:
        raise BasisMismatch("the convolution product needs the spherical product rule")
    T = _time_tensor(u1.trunc.Lmax)
    S = _space_tensor(u1.trunc.Jmax)
    X = np.einsum("abc,ai,bk->cik", T, u1.coeff, u2.coeff, optimize=True)
    return u1.like(np.einsum("cik,ikj->cj", X, S, optimize=True))


# period subspaces

def restrict_to_period_subspace(v, n):
    """Keep the kernel modes whose time frequency is a multiple of n."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    ker = sector_mask(v.basis, v.trunc, Sector.V)
    ell = np.arange(v.trunc.Lmax + 1)[:, None]
    keep = ker & (ell % n == 0)
    return v.like(np.where(keep, v.coeff, 0.0))


def period_subspace_modes(basis, trunc, n, low_only=True):
    """Mode indices j of V_{<=N, n}."""
    om = basis.omegas
    sel = om % n == 0
    if low_only:
        sel &= om <= trunc.N_split
    return np.nonzero(sel)[0]


def minimal_period_divisor(u, rtol=1e-10):
    """gcd g of the active time frequencies; the minimal period is 2 pi / g.

    l = 0 is absorbing (gcd(0, l) = l).  A field with no nonzero
    frequency (zero or constant in time) returns 0.
    """
    c = np.abs(u.coeff)
    top = c.max()
    if top == 0.0:
        return 0
    active = np.nonzero(np.any(c > rtol * top, axis=1))[0]
    g = 0
    for ell in active:
        g = gcd(g, int(ell))
    return g


# export

def write_coeff_csv(path, u, nonzero_only=False):
    with open(path, "w") as fh:
        fh.write("ell,j,coeff\n")
        for ell in range(u.trunc.Lmax + 1):
            for j in range(u.trunc.Jmax + 1):
                c = u.coeff[ell, j]
                if nonzero_only and c == 0.0:
                    continue
                fh.write(f"{ell},{j},{c:.17g}\n")


def read_coeff_csv(path, basis, trunc):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    u = Field(basis, trunc)
    if data.size:
        u.coeff[data[:, 0].astype(int), data[:, 1].astype(int)] = data[:, 2]
    return u


def realspace(u, nt=65, nz=65):
    """Samples of u on a uniform (t, z) plot grid over one period."""
    t = np.linspace(0.0, 2 * np.pi, nt)
    lo, hi = u.basis.interval
    z = np.linspace(lo, hi, nz)
    ell = np.arange(u.trunc.Lmax + 1)
    Ct = np.cos(np.outer(t, ell))
    E = np.array([eval_e(u.basis.kind, j, z) for j in range(u.trunc.Jmax + 1)])
    return t, z, Ct @ u.coeff @ E


def write_realspace_csv(path, u, nt=65, nz=65):
    t, z, U = realspace(u, nt, nz)
    with open(path, "w") as fh:
        fh.write("t,x,u\n")
        for a, ti in enumerate(t):
            for b, zi in enumerate(z):
                fh.write(f"{ti:.17g},{zi:.17g},{U[a, b]:.17g}\n")


def spherical_setup(Lmax=64, Jmax=32, N_split=8, p=5):
    kind = BasisKind.spherical()
    basis = make_basis(kind, Jmax, p)
    return basis, Truncation(Lmax, Jmax, N_split).validate(basis)

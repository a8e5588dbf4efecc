"""Lyapunov-Schmidt fixed-point solvers.

The truncated equation L_omega u = P(u^p) is split as u = v1 + v2 + w with
v1 in the low kernel modes (omega_j <= N), v2 in the high kernel modes and
w in the range W.  On the kernel L_omega acts as (omega^2 - 1) A =
sigma eps A, so

    v2 = (sigma eps)^{-1} A^{-1} Pi_{V>N} P(u^p),
    w  = L_omega^{-1} Pi_W P(u^p).

For p = 2 the kernel part of P(v^2) vanishes, and the range unknown is
translated, w = L_omega^{-1} P(v^2) + w_tilde with v = v1 + v2; the maps act
on (v2, w_tilde) through B = P(u^2) - P(v^2) = P(2 v w + w^2).
"""
from dataclasses import dataclass, field as dc_field

import numpy as np

from .basis import BasisKind, make_basis
from .diophantine import in_omega_gamma, omega_of_eps, sigma_of
from .errors import Diverged, FrequencyRejected, UnsupportedExponent
from .field import (Field, Sector, Truncation, apply_A, apply_A_inv, apply_Lomega,
                    apply_Lomega_inv, default_truncation, multiply, norm_HrHs, norm_V,
                    power, project)

SUPPORTED = {2: ("spherical",), 3: ("spherical", "hopf"), 5: ("spherical",)}


@dataclass
class ProblemSpec:
    p: int
    eps: float
    kind: BasisKind = dc_field(default_factory=BasisKind.spherical)
    gamma: float = 0.1
    trunc: Truncation = None
    R: float = 4.0
    fp_tol: float = 1e-12
    grad_tol: float = 1e-10
    max_iter: int = 200
    divergence_factor: float = 100.0
    delta: float = 0.01
    c2: float = 10.0
    c3: float = 10.0
    ell_max: int = None
    check_frequency: bool = True

    def __post_init__(self):
        if self.p not in SUPPORTED:
            raise UnsupportedExponent(f"unsupported exponent p={self.p}")
        if self.kind.name not in SUPPORTED[self.p]:
            raise UnsupportedExponent(f"unsupported exponent p={self.p} for {self.kind.label()} symmetry")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.trunc is None:
            self.trunc = default_truncation(self.kind)
        self.trunc.validate(self.basis)
        if self.ell_max is None:
            self.ell_max = self.trunc.Lmax
        self.frequency_check = in_omega_gamma(self.omega, self.gamma, self.ell_max)
        if self.check_frequency and not self.frequency_check.passed:
            fc = self.frequency_check
            raise FrequencyRejected(
                f"frequency rejected: omega={self.omega:.17g} fails gamma={self.gamma:g} "
                f"at (l, j)={fc.worst} (horizon {self.ell_max})")

    @property
    def sigma(self):
        return sigma_of(self.p)

    @property
    def omega(self):
        return omega_of_eps(self.p, self.eps)

    @property
    def basis(self):
        return make_basis(self.kind, self.trunc.Jmax, self.p)

    @property
    def q(self):
        """Homogeneity degree of the leading reduced functional."""
        return 4 if self.p == 2 else self.p + 1

    @property
    def N(self):
        return self.trunc.N_split

    @property
    def rho(self):
        e, R, N, g, d = self.eps, self.R, self.N, self.gamma, self.delta
        if self.p == 5:
            return (e ** 0.25 * R, self.c2 * N ** (10 * d) * R ** 5 * e ** 0.25,
                    self.c3 / g * N ** (5 + 10 * d) * R ** 5 * e ** 1.25)
        if self.p == 3:
            return (e ** 0.5 * R, self.c2 * R ** 3 * N ** (4 * d) * e ** 0.5,
                    self.c3 / g * N ** (3 + 6 * d) * R ** 3 * e ** 1.5)
        return (R * e ** 0.5, self.c2 / g * R ** 3 * e ** 0.5,
                self.c3 / g ** 2 * e ** 1.5 * R ** 3 * N ** (3 + 6 * d))

    def zeros(self):
        return Field(self.basis, self.trunc)

    def snapshot(self):
        return {"p": self.p, "symmetry": self.kind.name, "mu1": self.kind.mu1, "mu2": self.kind.mu2,
                "eps": self.eps, "omega": self.omega, "sigma": self.sigma, "gamma": self.gamma,
                "Lmax": self.trunc.Lmax, "Jmax": self.trunc.Jmax, "N_split": self.trunc.N_split,
                "R": self.R, "fp_tol": self.fp_tol, "grad_tol": self.grad_tol,
                "max_iter": self.max_iter, "delta": self.delta, "c2": self.c2, "c3": self.c3,
                "rho": list(self.rho), "ell_max": self.ell_max,
                "frequency_check": self.frequency_check.to_dict()}


def v2_norm(v2, spec):
    return norm_V(v2, 2 + 2 * spec.delta)


def w_norm(w, spec):
    return norm_HrHs(w, 0.5 + spec.delta, 1.5 + spec.delta)


@dataclass
class LSState:
    v1: Field
    v2: Field
    w: Field
    w_tilde: Field = None
    residuals: dict = dc_field(default_factory=dict)
    iters: int = 0
    history: list = dc_field(default_factory=list)

    @property
    def u(self):
        return self.v1 + self.v2 + self.w

    def range_unknown(self):
        """The field the range contraction acts on (w_tilde when p = 2)."""
        return self.w if self.w_tilde is None else self.w_tilde


def _sup(u):
    return float(np.max(np.abs(u.coeff))) if u.coeff.size else 0.0


def _v2_from(F, spec):
    """(sigma eps)^{-1} A^{-1} Pi_{V>N} F."""
    return apply_A_inv(project(F, Sector.VhighN)) * (1.0 / (spec.sigma * spec.eps))


class _Maps:
    """Forcing evaluations shared by the v2 and range maps."""

    def __init__(self, v1, spec):
        self.v1, self.spec = v1, spec

    def translation(self, v2):
        v = self.v1 + v2
        sq = multiply(v, v)
        return v, sq, apply_Lomega_inv(project(sq, Sector.W), self.spec.omega)

    def forcing(self, v2, r):
        """Return (F, w): F drives both maps, w is the reconstructed range part.

        p in {3, 5}: F = P(u^p) with u = v1 + v2 + r.
        p = 2: r is w_tilde, w = L^{-1} P(v^2) + r and F = P(2 v w + w^2).
        """
        spec = self.spec
        if spec.p == 2:
            v, _, Q = self.translation(v2)
            w = Q + r
            return multiply(v * 2.0 + w, w), w
        return power(self.v1 + v2 + r, spec.p), r

    def T_v2(self, F):
        return _v2_from(F, self.spec)

    def T_range(self, F):
        return apply_Lomega_inv(project(F, Sector.W), self.spec.omega)

    def residuals(self, v2, r, F):
        spec = self.spec
        rv = project(F, Sector.VhighN) - apply_A(v2) * (spec.sigma * spec.eps)
        rw = project(F, Sector.W) - apply_Lomega(r, spec.omega)
        return _sup(rv), _sup(rw)


def _check_ball(spec, v2, r, it):
    rho1, rho2, rho3 = spec.rho
    f = spec.divergence_factor
    with np.errstate(over="ignore", invalid="ignore"):
        n2, n3 = v2_norm(v2, spec), w_norm(r, spec)
    if not (np.isfinite(n2) and np.isfinite(n3)):
        raise Diverged(f"non-finite iterate at sweep {it}", equation="v2" if not np.isfinite(n2) else "w")
    if n2 > f * rho2:
        raise Diverged(f"v2 left the ball: {n2:.3e} > {f:g} * rho2 = {f * rho2:.3e}", equation="v2")
    if n3 > f * rho3:
        raise Diverged(f"range unknown left the ball: {n3:.3e} > {f:g} * rho3 = {f * rho3:.3e}", equation="w")


def solve_v2(v1, w, spec):
    """Fixed point of the high-frequency kernel map with the range part held.

    For p = 2 ``w`` is the translated unknown w_tilde.
    """
    maps = _Maps(v1, spec)
    v2 = spec.zeros()
    F, _ = maps.forcing(v2, w)
    tol = spec.fp_tol * max(_sup(F), np.finfo(float).tiny)
    for it in range(1, spec.max_iter + 1):
        new = maps.T_v2(F)
        inc = _sup(apply_A(new - v2)) * spec.eps
        v2 = new
        F, _ = maps.forcing(v2, w)
        tol = spec.fp_tol * max(_sup(F), np.finfo(float).tiny)
        _check_ball(spec, v2, spec.zeros(), it)
        res, _ = maps.residuals(v2, spec.zeros(), F)
        if inc <= tol and res <= tol:
            return v2
    raise Diverged(f"v2 map did not reach fp_tol in {spec.max_iter} sweeps", equation="v2")


def solve_range(v1, spec, init=None):
    """Joint fixed point of the v2 and range maps by alternating sweeps.

    Starting point is zero unless ``init`` (an LSState) is given.  Exit
    requires both the increments and both equation residuals, measured in
    the units of the forcing F, to be <= fp_tol * max|F|.
    """
    maps = _Maps(v1, spec)
    if init is None:
        v2, r = spec.zeros(), spec.zeros()
    else:
        v2, r = init.v2.copy(), init.range_unknown().copy()
    F, w = maps.forcing(v2, r)
    history = []
    tiny = np.finfo(float).tiny
    for it in range(1, spec.max_iter + 1):
        v2_new = maps.T_v2(F)
        F, _ = maps.forcing(v2_new, r)
        r_new = maps.T_range(F)
        inc2 = _sup(apply_A(v2_new - v2)) * spec.eps
        incw = _sup(apply_Lomega(r_new - r, spec.omega))
        v2, r = v2_new, r_new
        _check_ball(spec, v2, r, it)
        F, w = maps.forcing(v2, r)
        res2, resw = maps.residuals(v2, r, F)
        tol = spec.fp_tol * max(_sup(F), tiny)
        history.append((inc2, incw, res2, resw))
        if max(inc2, incw, res2, resw) <= tol:
            break
    else:
        stalled = "v2" if max(history[-1][0], history[-1][2]) > max(history[-1][1], history[-1][3]) else "w"
        raise Diverged(f"range/v2 sweeps did not reach fp_tol in {spec.max_iter} sweeps ({stalled} stalled)",
                       equation=stalled, history=history)
    state = LSState(v1, v2, w, r if spec.p == 2 else None, iters=it, history=history)
    state.residuals = {"v2": res2, "w": resw, "scale": _sup(F), "full": residual_full(state.u, spec)}
    return state


def residual_full(u, spec, omega=None):
    """||L_omega u - P(u^p)|| / ||P(u^p)|| in H^0 H^0 (0 for u = 0)."""
    om = spec.omega if omega is None else omega
    Fp = power(u, spec.p)
    den = norm_HrHs(Fp)
    if den == 0.0:
        return 0.0 if norm_HrHs(u) == 0.0 else float("inf")
    return norm_HrHs(apply_Lomega(u, om) - Fp) / den


def kernel_gradient(state, spec):
    """V^1-Riesz representative of the reduced-action differential on all
    low kernel modes: (sigma eps omega_j^2 v_j - [P u^p]_{omega_j, j}) / omega_j^2."""
    Fu = power(state.u, spec.p)
    g = project(apply_A(state.v1) * (spec.sigma * spec.eps) - Fu, Sector.VlowN)
    return apply_A_inv(g)

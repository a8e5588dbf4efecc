"""Variational solution of the low-frequency bifurcation equation.

The reduced action is Psi_red(v1) = Psi(v1 + v2(v1) + w(v1)) with
Psi(u) = 1/2 <L_omega u, u> - 1/(p+1) int int u^{p+1}.  Near zero it
behaves like sigma eps/2 ||v1||^2 - G(v1), where G = G_{p+1} for p = 3, 5
and G = G4_breve(v) = 1/2 int int v^2 L_1^{-1} v^2 for p = 2.  The
scheme: maximize the 0-homogeneous ratio s G(y)/||y||^q on the unit sphere
(s = +1, or -1 for p = 2), scale the maximizer to the critical level of the
model functional, then run damped Newton on the gradient.
"""
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import optimize

from .errors import Diverged, EmptySubspace, InsufficientBranches, Stalled
from .field import (Field, Sector, apply_A, apply_Lomega, apply_Lomega_inv, inner_V1,
                    integral_of_power, l2_inner, minimal_period_divisor, multiply,
                    norm_V, period_subspace_modes, power, project)
from .ls_solver import kernel_gradient, solve_range


def _sign(spec):
    return -1.0 if spec.p == 2 else 1.0


def eval_G(v, spec):
    """Leading reduced nonlinearity on a kernel field."""
    if spec.p == 2:
        sq = project(multiply(v, v), Sector.W)
        return 0.5 * l2_inner(sq, apply_Lomega_inv(sq, 1.0))
    return integral_of_power(v, spec.p + 1) / (spec.p + 1)


def grad_G_values(v, spec):
    """Coefficients [dG(v)]_j on the kernel modes (L^2 pairing)."""
    if spec.p == 2:
        sq = project(multiply(v, v), Sector.W)
        F = multiply(v, apply_Lomega_inv(sq, 1.0)) * 2.0
    else:
        F = power(v, spec.p)
    return F.kernel_values()


def subspace_modes(spec, n):
    modes = period_subspace_modes(spec.basis, spec.trunc, n)
    if len(modes) == 0:
        raise EmptySubspace(f"no low kernel modes with frequency divisible by {n} "
                            f"({spec.kind.label()}, N={spec.N})")
    return modes


def _field_from_x(spec, modes, x):
    """Kernel field from coordinates x_j = omega_j v_j (so ||v||_{V^1} = |x|)."""
    vals = np.zeros(spec.trunc.Jmax + 1)
    vals[modes] = x / spec.basis.omegas[modes]
    return Field.kernel(spec.basis, spec.trunc, vals)


def _x_from_field(spec, modes, v):
    return v.kernel_values()[modes] * spec.basis.omegas[modes]


def witness(spec, n=1):
    """Lowest single mode of V_{<=N, n}, normalized in V^1."""
    j = subspace_modes(spec, n)[0]
    vals = np.zeros(spec.trunc.Jmax + 1)
    vals[j] = 1.0 / spec.basis.omegas[j]
    return Field.kernel(spec.basis, spec.trunc, vals)


class _LowContext:
    """Smallest truncation on which G and its gradient are exact for
    kernel fields supported on the given modes."""

    def __init__(self, spec, modes):
        from .basis import make_basis
        from .field import Truncation
        jlow = int(modes.max())
        wmax = int(spec.basis.omegas[jlow])
        if spec.p == 2:
            jt = 2 * jlow
            L = 2 * wmax
        else:
            jt, L = jlow, wmax
        basis = make_basis(spec.kind, jt, spec.p)
        L = max(L, int(basis.omegas[-1]))
        self.trunc = Truncation(L, jt, min(spec.N, int(basis.omegas[-1])))
        self.basis = basis
        self.modes = modes
        self.p = spec.p
        self.q = spec.q

    def field(self, x):
        vals = np.zeros(self.trunc.Jmax + 1)
        vals[self.modes] = x / self.basis.omegas[self.modes]
        return Field.kernel(self.basis, self.trunc, vals)


def estimate_mG(spec, subspace_n=1, restarts=8, seed=0):
    """Sup of s G(y)/||y||^q_{V^1} over V_{<=N, n}; returns (m, y) with y
    of unit V^1 norm.  Multi-start BFGS from the single-mode witness and
    random unit vectors; the witness value is a hard lower bound."""
    modes = subspace_modes(spec, subspace_n)
    low = _LowContext(spec, modes)
    s, q = _sign(spec), spec.q
    om = spec.basis.omegas[modes].astype(float)

    def neg_ratio(x):
        r2 = float(x @ x)
        v = low.field(x)
        G = eval_G(v, spec)
        gx = grad_G_values(v, spec)[modes] / om
        val = s * G / r2 ** (q / 2)
        grad = s * (gx / r2 ** (q / 2) - q * G * x / r2 ** (q / 2 + 1))
        return -val, -grad

    rng = np.random.default_rng(seed)
    starts = [_x_from_field(spec, modes, witness(spec, subspace_n))]
    for _ in range(restarts):
        x = rng.standard_normal(len(modes))
        starts.append(x / np.linalg.norm(x))
    w_val = -neg_ratio(starts[0])[0]
    best_val, best_x = w_val, starts[0]
    for x0 in starts:
        res = optimize.minimize(neg_ratio, x0, jac=True, method="BFGS",
                                options={"gtol": 1e-12, "maxiter": 500})
        if -res.fun > best_val:
            best_val, best_x = -res.fun, res.x
    best_x = best_x / np.linalg.norm(best_x)
    # canonical sign: largest coefficient positive
    k = int(np.argmax(np.abs(best_x)))
    if best_x[k] < 0:
        best_x = -best_x
    assert best_val >= w_val
    return float(best_val), _field_from_x(spec, modes, best_x)


def eval_reduced_action(v1, spec, state=None):
    if state is None:
        state = solve_range(v1, spec)
    u = state.u
    quad = 0.5 * l2_inner(apply_Lomega(u, spec.omega), u)
    return quad - integral_of_power(u, spec.p + 1) / (spec.p + 1)


def grad_reduced_action(v1, spec, state=None):
    if state is None:
        state = solve_range(v1, spec)
    return kernel_gradient(state, spec)


def critical_level(m, spec):
    """Level of the model functional sigma eps/2 r^2 - s m r^q at its
    critical radius; sign follows sigma."""
    q, e = spec.q, spec.eps
    c = (q - 2) / 2 * m * (e / (q * m)) ** (q / (q - 2))
    return spec.sigma * c


@dataclass
class MountainPassReport:
    mG: float
    maximizer_y: Field
    v1_star: Field
    grad_norm: float
    alphaR: float
    action_value: float
    minimal_divisor: int
    subspace_n: int = 1
    state: object = None
    residual: float = None
    iterations: int = 0
    full_grad_norm: float = None
    expected_level: float = None
    history: list = dc_field(default_factory=list)

    def summary(self, spec):
        from .ls_solver import v2_norm, w_norm
        st = self.state
        return {
            "subspace_n": self.subspace_n, "mG": self.mG, "grad_norm": self.grad_norm,
            "full_grad_norm": self.full_grad_norm, "alphaR": self.alphaR,
            "action_value": self.action_value, "expected_level": self.expected_level,
            "minimal_divisor": self.minimal_divisor, "residual_full": self.residual,
            "newton_iterations": self.iterations,
            "norms": {"v1_V1": norm_V(st.v1, 1), "v2_V2plus": v2_norm(st.v2, spec),
                      "w_H12H32": w_norm(st.w, spec),
                      "range_unknown_H12H32": w_norm(st.range_unknown(), spec),
                      "v1_H0H1": _h01(st.v1), "v2_H0H1": _h01(st.v2), "w_H0H1": _h01(st.w),
                      "range_unknown_H0H1": _h01(st.range_unknown())},
            "ls_residuals": st.residuals, "ls_iterations": st.iters,
        }


def _h01(u):
    from .field import norm_HrHs
    return norm_HrHs(u, 0.0, 1.0)


def _remainder_ratio(v1, gvals, spec):
    """|dR(v)[v]| / ||v||^q with R = Psi_red - sigma eps/2 ||v||^2 + G."""
    nv = norm_V(v1, 1)
    if nv == 0:
        return 0.0
    dpsi = inner_V1(gvals, v1)
    dR = dpsi - spec.sigma * spec.eps * nv ** 2 + spec.q * eval_G(v1, spec)
    return abs(dR) / nv ** spec.q


def find_critical_point(spec, subspace_n=1, mG=None, restarts=8, seed=0, max_newton=50):
    """Critical point of the reduced action restricted to V_{<=N, n}."""
    modes = subspace_modes(spec, subspace_n)
    if mG is None:
        m, y = estimate_mG(spec, subspace_n, restarts, seed)
    else:
        m, y = mG
    q = spec.q
    v = y * (spec.eps / (q * m)) ** (1.0 / (q - 2))
    rho1 = spec.rho[0]
    om = spec.basis.omegas[modes].astype(float)

    def evaluate(x, init=None):
        vf = _field_from_x(spec, modes, x)
        st = solve_range(vf, spec, init=init)
        g = kernel_gradient(st, spec)
        return st, g, _x_from_field(spec, modes, g)

    x = _x_from_field(spec, modes, v)
    st, g, gx = evaluate(x)
    alpha = _remainder_ratio(st.v1, g, spec)
    history = []
    scale = spec.eps
    lam = 0.0
    for it in range(max_newton + 1):
        gn = float(np.linalg.norm(gx))
        xn = float(np.linalg.norm(x))
        history.append({"iter": it, "grad": gn, "v1_norm": xn, "lambda": lam})
        if gn <= spec.grad_tol * scale * xn:
            break
        if it == max_newton:
            raise Stalled(f"Newton did not converge in {max_newton} steps (grad {gn:.3e})")
        # finite-difference Hessian of the gradient in x coordinates
        n = len(x)
        H = np.empty((n, n))
        h = 1e-6 * max(xn, 1e-300)
        for k in range(n):
            e = np.zeros(n)
            e[k] = h
            _, _, gp = evaluate(x + e, init=st)
            _, _, gm = evaluate(x - e, init=st)
            H[:, k] = (gp - gm) / (2 * h)
        H = 0.5 * (H + H.T)
        merit = gn
        accepted = False
        lam = 0.0
        for _ in range(40):
            try:
                dx = np.linalg.solve(H + lam * np.eye(n), -gx)
            except np.linalg.LinAlgError:
                lam = max(2 * lam, 1e-8 * scale)
                continue
            t = 1.0
            while t > 1e-4:
                xt = x + t * dx
                if np.linalg.norm(xt) > spec.divergence_factor * rho1:
                    break
                try:
                    st_t, g_t, gx_t = evaluate(xt, init=st)
                except Diverged:
                    t *= 0.5
                    continue
                if np.linalg.norm(gx_t) < merit:
                    accepted = True
                    break
                t *= 0.5
            if accepted:
                break
            lam = max(10 * lam, 1e-6 * scale)
        if not accepted:
            if np.linalg.norm(x + dx) > spec.divergence_factor * rho1:
                raise Diverged("Newton iterate left the rho1 ball", equation="v1")
            raise Stalled(f"line search failed at Newton step {it} (grad {gn:.3e})")
        x, st, g, gx = xt, st_t, g_t, gx_t
        alpha = max(alpha, _remainder_ratio(st.v1, g, spec))
    # final state from a cold start, as the reported certificate
    st = solve_range(st.v1, spec)
    g_full = kernel_gradient(st, spec)
    gx = _x_from_field(spec, modes, g_full)
    rep = MountainPassReport(
        mG=m, maximizer_y=y, v1_star=st.v1, grad_norm=float(np.linalg.norm(gx)),
        alphaR=alpha, action_value=eval_reduced_action(st.v1, spec, st),
        minimal_divisor=minimal_period_divisor(st.u), subspace_n=subspace_n, state=st,
        residual=st.residuals["full"], iterations=it, full_grad_norm=norm_V(g_full, 1),
        expected_level=critical_level(m, spec), history=history)
    return rep


def candidate_divisors(spec):
    """n with nonempty V_{<=N, n}, in increasing order."""
    out = []
    for n in range(1, spec.N + 1):
        if len(period_subspace_modes(spec.basis, spec.trunc, n)):
            out.append(n)
    return out


def multiplicity_sweep(spec, k_star=2, restarts=8, seed=0, beta=0.9, strict=False):
    """Critical points with pairwise distinct minimal periods.

    A subspace n is tried only when beta * m_n exceeds the sup ratio of
    every coarser subspace V_{n k}, k >= 2 (measured, not assumed).  The
    returned list carries a ``notes`` attribute with skipped candidates.
    """
    cands = candidate_divisors(spec)
    ratios = {n: estimate_mG(spec, n, restarts, seed) for n in cands}
    out, seen, notes = _Branches(), set(), []
    for n in cands:
        m_n = ratios[n][0]
        coarser = [ratios[k][0] for k in cands if k > n and k % n == 0]
        sup_c = max(coarser) if coarser else 0.0
        if not beta * m_n > sup_c:
            notes.append({"n": n, "skipped": "ratio gate", "m_n": m_n, "sup_coarser": sup_c})
            continue
        try:
            rep = find_critical_point(spec, n, mG=ratios[n], restarts=restarts, seed=seed)
        except (Diverged, Stalled) as exc:
            notes.append({"n": n, "skipped": type(exc).__name__, "reason": str(exc)})
            continue
        if rep.minimal_divisor in seen:
            notes.append({"n": n, "skipped": "duplicate minimal period", "divisor": rep.minimal_divisor})
            continue
        seen.add(rep.minimal_divisor)
        rep.gate = {"m_n": m_n, "sup_coarser": sup_c, "beta": beta}
        out.append(rep)
        if len(out) >= k_star:
            break
    out.notes = notes
    if len(out) < k_star:
        msg = f"found {len(out)} distinct minimal periods, wanted {k_star}"
        if strict:
            raise InsufficientBranches(msg)
        warnings.warn(msg, RuntimeWarning)
        notes.append({"insufficient_branches": msg})
    return out


class _Branches(list):
    notes = ()

"""Nonlinear circle schemes and the shared Newton iteration engine.

Three residual/Jacobian providers discretize
a(t, x(t)) + (1/pi i) int h(t, tau, x(tau))/(tau - t) dtau = f(t):

* scheme 1 -- nodal quadrature with the 1 - i cot weights and the spectral
  derivative correction on the diagonal,
* scheme 2 -- unknowns sampled at the shifted nodes, equations at the plain
  nodes, no diagonal skip,
* scheme 3 -- the kernel section interpolated in tau and the Cauchy operator
  applied exactly, collocated at the shifted nodes.

The engine runs the basic (re-factored Jacobian), modified (frozen
Jacobian) and right-inverse (least-squares step) iterations and reports the
checkable convergence-certificate quantities as information only.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, InputError, SingularSystemError, StationaryPointError
from .linalg import DenseSystem, _lu_factor_quiet, lu_solve
import scipy.linalg as sla

from .trig import NodeSet, cauchy_matrix, differentiation_matrix, interpolate

_FD_STEP = 1e-6


@dataclass
class NonlinearCircleProblem:
    """Data a(t,u), h(t,tau,u), f(t) with u-derivatives, and an initial iterate.

    Missing derivative callbacks are replaced by central finite differences.
    ``check_derivatives`` spot-checks supplied callbacks against differences
    at random points (relative tolerance 1e-5).
    """

    a: callable
    h: callable
    f: callable
    da: callable = None
    dh: callable = None
    d2h: callable = None
    x0: object = None

    def __post_init__(self):
        if self.da is None:
            self.da = lambda t, u: ((self.a(t, u + _FD_STEP) - self.a(t, u - _FD_STEP))
                                    / (2 * _FD_STEP))
        if self.dh is None:
            self.dh = lambda t, tau, u: ((self.h(t, tau, u + _FD_STEP)
                                          - self.h(t, tau, u - _FD_STEP)) / (2 * _FD_STEP))
        if self.d2h is None:
            dh = self.dh
            self.d2h = lambda t, tau, u: ((dh(t, tau, u + _FD_STEP)
                                           - dh(t, tau, u - _FD_STEP)) / (2 * _FD_STEP))

    def check_derivatives(self, seed=0, points=20, rtol=1e-5):
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(points):
            t = np.exp(1j * rng.uniform(0, 2 * np.pi))
            tau = np.exp(1j * rng.uniform(0, 2 * np.pi))
            u = rng.standard_normal() + 1j * rng.standard_normal()
            fd = (self.a(t, u + _FD_STEP) - self.a(t, u - _FD_STEP)) / (2 * _FD_STEP)
            scale = max(1.0, abs(fd))
            worst = max(worst, abs(self.da(t, u) - fd) / scale)
            fd = (self.h(t, tau, u + _FD_STEP) - self.h(t, tau, u - _FD_STEP)) / (2 * _FD_STEP)
            scale = max(1.0, abs(fd))
            worst = max(worst, abs(self.dh(t, tau, u) - fd) / scale)
        if worst > rtol:
            raise InputError(f"derivative callbacks deviate from differences by {worst:.2e}")
        return worst


def _node_data(n, shifted=False):
    nodes = NodeSet.shifted(n) if shifted else NodeSet(n)
    return nodes, nodes.points, nodes.angles


def residual_scheme1(p: NonlinearCircleProblem, x, n):
    """Residual of the nodal quadrature scheme with the derivative correction."""
    nodes, t, s = _node_data(n)
    m = nodes.count
    x = np.asarray(x, dtype=complex)
    dx = differentiation_matrix(nodes) @ x
    res = np.empty(m, dtype=complex)
    for j in range(m):
        acc = p.a(t[j], x[j])
        for k in range(m):
            if k == j:
                continue
            w = 1.0 - 1j / np.tan(0.5 * (s[k] - s[j]))
            acc += p.h(t[j], t[k], x[k]) * w / m
        acc -= 2j / m * p.dh(t[j], t[j], x[j]) * dx[j]
        res[j] = acc - p.f(t[j])
    return res


def jacobian_scheme1(p: NonlinearCircleProblem, x, n):
    """Analytic Jacobian of scheme 1 (includes the spectral-derivative block)."""
    nodes, t, s = _node_data(n)
    m = nodes.count
    x = np.asarray(x, dtype=complex)
    d_mat = differentiation_matrix(nodes)
    dx = d_mat @ x
    jac = np.zeros((m, m), dtype=complex)
    for j in range(m):
        jac[j, j] += p.da(t[j], x[j])
        for k in range(m):
            if k == j:
                continue
            w = 1.0 - 1j / np.tan(0.5 * (s[k] - s[j]))
            jac[j, k] += p.dh(t[j], t[k], x[k]) * w / m
        jac[j, j] -= 2j / m * p.d2h(t[j], t[j], x[j]) * dx[j]
        jac[j] -= 2j / m * p.dh(t[j], t[j], x[j]) * d_mat[j]
    return jac


def residual_scheme2(p: NonlinearCircleProblem, alpha, n):
    """Residual of the shifted-sample scheme; unknowns live at the shifted nodes."""
    nodes, t, s = _node_data(n)
    shifted, tbar, sbar = _node_data(n, shifted=True)
    m = nodes.count
    alpha = np.asarray(alpha, dtype=complex)
    res = np.empty(m, dtype=complex)
    for j in range(m):
        acc = p.a(t[j], alpha[j])
        for k in range(m):
            w = 1.0 - 1j / np.tan((2.0 * (k - j) * np.pi - np.pi) / (4.0 * n + 2.0))
            acc += p.h(t[j], t[k], alpha[k]) * w / m
        res[j] = acc - p.f(t[j])
    return res


def jacobian_scheme2(p: NonlinearCircleProblem, alpha, n):
    nodes, t, s = _node_data(n)
    m = nodes.count
    alpha = np.asarray(alpha, dtype=complex)
    jac = np.zeros((m, m), dtype=complex)
    for j in range(m):
        jac[j, j] += p.da(t[j], alpha[j])
        for k in range(m):
            w = 1.0 - 1j / np.tan((2.0 * (k - j) * np.pi - np.pi) / (4.0 * n + 2.0))
            jac[j, k] += p.dh(t[j], t[k], alpha[k]) * w / m
    return jac


def residual_scheme3(p: NonlinearCircleProblem, x, n):
    """Interpolate the kernel section in tau, apply S exactly, collocate shifted."""
    nodes, t, _ = _node_data(n)
    coll, tbar, sbar = _node_data(n, shifted=True)
    m = nodes.count
    x = np.asarray(x, dtype=complex)
    s_mat = cauchy_matrix(sbar, nodes)
    psi = _psi_matrix(nodes, sbar)
    xbar = psi @ x
    res = np.empty(m, dtype=complex)
    for j in range(m):
        hvals = np.array([p.h(tbar[j], t[k], x[k]) for k in range(m)], dtype=complex)
        res[j] = p.a(tbar[j], xbar[j]) + s_mat[j] @ hvals - p.f(tbar[j])
    return res


def jacobian_scheme3(p: NonlinearCircleProblem, x, n):
    nodes, t, _ = _node_data(n)
    coll, tbar, sbar = _node_data(n, shifted=True)
    m = nodes.count
    x = np.asarray(x, dtype=complex)
    s_mat = cauchy_matrix(sbar, nodes)
    psi = _psi_matrix(nodes, sbar)
    xbar = psi @ x
    jac = np.zeros((m, m), dtype=complex)
    for j in range(m):
        jac[j] += p.da(tbar[j], xbar[j]) * psi[j]
        dh = np.array([p.dh(tbar[j], t[k], x[k]) for k in range(m)], dtype=complex)
        jac[j] += s_mat[j] * dh
    return jac


def _psi_matrix(nodes: NodeSet, eval_angles):
    """Values of the fundamental polynomials at the given angles."""
    m = nodes.count
    modes = np.arange(-nodes.n, nodes.n + 1)
    to_coeff = np.exp(-1j * np.outer(modes, nodes.angles)) / m
    return np.exp(1j * np.outer(eval_angles, modes)) @ to_coeff


SCHEMES = {
    1: (residual_scheme1, jacobian_scheme1),
    2: (residual_scheme2, jacobian_scheme2),
    3: (residual_scheme3, jacobian_scheme3),
}


@dataclass
class NewtonConfig:
    mode: str = "basic"  # basic | modified | right_inverse
    max_iter: int = 50
    tol: float = 1e-12
    stagnation_window: int = 5

    def __post_init__(self):
        if self.mode not in ("basic", "modified", "right_inverse"):
            raise InputError(f"unknown Newton mode {self.mode!r}")


@dataclass
class NewtonReport:
    residuals: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    eta0: float = None
    b0: float = None
    lipschitz: float = None
    kantorovich_h: float = None
    kantorovich_ok: bool = None
    iterations: int = 0
    converged: bool = False


def _probe_inverse_norm(solve_with, size, rng):
    """Estimate ||J^{-1}||_inf by applying the factored inverse to probe vectors."""
    worst = 0.0
    for _ in range(8):
        v = rng.choice([-1.0, 1.0], size) + 0j
        worst = max(worst, np.abs(solve_with(v)).max() / np.abs(v).max())
    return worst


def newton_solve(residual, jacobian, x0, config: NewtonConfig = None):
    """Newton iteration on a residual/Jacobian provider pair.

    ``basic`` refactors the Jacobian each step, ``modified`` factors once at
    x0, ``right_inverse`` takes the minimum-norm least-squares step (the
    right-inverse realization for rectangular Jacobians).  The report's
    Kantorovich quantities (eta0, B0, sampled Lipschitz constant, h) are
    advisory and never gate the iteration.
    """
    config = config or NewtonConfig()
    x = np.atleast_1d(np.asarray(x0, dtype=complex)).copy()
    rng = np.random.default_rng(0)
    report = NewtonReport()

    j0 = np.atleast_2d(np.asarray(jacobian(x), dtype=complex))
    r = np.atleast_1d(np.asarray(residual(x), dtype=complex))
    if config.mode == "right_inverse":
        solve0 = lambda v: np.linalg.lstsq(j0, v, rcond=None)[0]
    else:
        try:
            factor = _lu_factor_quiet(j0)
        except Exception as exc:
            raise SingularSystemError("Jacobian is singular at the initial iterate") from exc
        if np.min(np.abs(np.diag(factor[0]))) < 1e-14 * max(np.abs(j0).max(), 1e-300):
            raise SingularSystemError("Jacobian is singular at the initial iterate")
        solve0 = lambda v: sla.lu_solve(factor, v)

    # advisory Kantorovich certificate at x0
    step0 = solve0(r)
    report.eta0 = float(np.abs(step0).max())
    report.b0 = float(_probe_inverse_norm(solve0, j0.shape[0], rng))
    d = rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size)
    d *= 1e-4 / np.abs(d).max()
    j1 = np.atleast_2d(np.asarray(jacobian(x + d), dtype=complex))
    denom = np.abs(d).max()
    report.lipschitz = float(np.abs(j1 - j0).max() / denom) if denom > 0 else 0.0
    report.kantorovich_h = report.b0 * report.lipschitz * report.eta0
    report.kantorovich_ok = bool(report.kantorovich_h <= 0.5)

    res_norm = float(np.abs(r).max())
    report.residuals.append(res_norm)
    best = res_norm
    stall = 0
    for it in range(1, config.max_iter + 1):
        if config.mode == "basic" and it > 1:
            jac = np.atleast_2d(np.asarray(jacobian(x), dtype=complex))
            step = np.linalg.solve(jac, r)
        elif config.mode == "right_inverse":
            jac = np.atleast_2d(np.asarray(jacobian(x), dtype=complex))
            step = np.linalg.lstsq(jac, r, rcond=None)[0]
        elif config.mode == "modified" or it == 1:
            step = solve0(r)
        x = x - step
        r = np.atleast_1d(np.asarray(residual(x), dtype=complex))
        res_norm = float(np.abs(r).max())
        prev = report.residuals[-1]
        report.residuals.append(res_norm)
        report.ratios.append(res_norm / prev if prev > 0 else 0.0)
        report.iterations = it
        if res_norm < config.tol:
            report.converged = True
            return x, report
        if res_norm < best * (1.0 - 1e-12):
            best = res_norm
            stall = 0
        else:
            stall += 1
            if stall >= config.stagnation_window:
                raise DivergenceError(
                    f"no residual decrease for {stall} steps", report.residuals)
    raise DivergenceError(
        f"Newton did not reach tol {config.tol} in {config.max_iter} steps",
        report.residuals)


def solve_scheme(p: NonlinearCircleProblem, n, scheme=1, config: NewtonConfig = None):
    """Run the Newton engine on one of the three discrete schemes.

    Returns (nodal values, interpolating polynomial, NewtonReport).  The
    unknowns of scheme 2 live on the shifted node family; the returned
    polynomial interpolates accordingly.
    """
    if scheme not in SCHEMES:
        raise InputError(f"unknown scheme {scheme}; options 1, 2, 3")
    res_fn, jac_fn = SCHEMES[scheme]
    nodes = NodeSet.shifted(n) if scheme == 2 else NodeSet(n)
    if p.x0 is None:
        x0 = np.zeros(nodes.count, dtype=complex)
    elif callable(p.x0):
        x0 = np.array([p.x0(tk) for tk in nodes.points], dtype=complex)
    else:
        x0 = p.x0(nodes.angles) if hasattr(p.x0, "coeffs") else np.asarray(p.x0, dtype=complex)
    x, report = newton_solve(lambda v: res_fn(p, v, n),
                             lambda v: jac_fn(p, v, n), x0, config)
    return x, interpolate(x, nodes), report


def l2_descent(p: NonlinearCircleProblem, n, x0=None, tol=1e-8, max_iter=400):
    """Steepest-descent iteration with the frozen-Jacobian adjoint and the
    printed step length ||K x||^2 / ||K'(x0) K x||^2.

    The adjoint is the conjugate transpose of the scheme-3 Jacobian in the
    node basis with uniform weights (the discrete mean-square inner product).
    Residual norms are recorded and must be non-increasing.
    """
    nodes = NodeSet(n)
    if x0 is None:
        x = np.zeros(nodes.count, dtype=complex)
    else:
        x = np.asarray(x0, dtype=complex).copy()
    j0 = jacobian_scheme3(p, x, n)
    history = []
    r = residual_scheme3(p, x, n)
    norm2 = lambda v: float(np.vdot(v, v).real) / nodes.count
    history.append(np.sqrt(norm2(r)))
    if history[-1] < tol:
        return x, history
    for _ in range(max_iter):
        jr = j0 @ r
        denom = norm2(jr)
        if denom == 0.0:
            raise StationaryPointError("zero denominator in the descent step")
        lam = norm2(r) / denom
        x = x - lam * (j0.conj().T @ r)
        r = residual_scheme3(p, x, n)
        history.append(np.sqrt(norm2(r)))
        if history[-1] < tol:
            return x, history
        if history[-1] > history[-2] * (1.0 + 1e-12):
            raise DivergenceError("descent residual increased", history)
    raise DivergenceError(f"descent did not reach tol in {max_iter} steps", history)

"""Spline-collocation on [-1, 1] with Hadamard-dominance parameter tuning,
and the shifted-node Newton solver for nonlinear Hilbert-kernel equations.

The linear scheme integrates the spline's own basis over a small asymmetric
interval around each collocation node; the asymmetry factor q makes the
diagonal log moment |ln q| as large as requested, which is what the tuning
search exploits.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import (
    DivergenceError,
    InputError,
    MeshParameterError,
    NonDominantJacobianError,
    TuningFailureError,
)
from .linalg import DenseSystem, SolveReport, _lu_factor_quiet, hadamard_margins, lu_solve
import scipy.linalg as sla

from .quadrature import cauchy_log_moment, cot_panel, _gauss

_MAX_HALVINGS = 60


@dataclass
class SegmentProblem:
    """a(t) x + b(t) PV int x/(tau-t) + int h(t,tau) x dtau = f on [-1, 1]."""

    a: callable
    b: callable
    f: callable
    h: callable = None


@dataclass
class MeshParams:
    n: int          # panel count
    r: int          # nodes per panel
    h_star: float   # special-interval width scale
    q: float        # left asymmetry factor
    M: float        # targeted dominance margin

    def __post_init__(self):
        h = 2.0 / self.n
        if self.n < 2 or self.r < 1:
            raise MeshParameterError("need n >= 2 panels and r >= 1 nodes per panel")
        if not 0.0 < self.h_star < h / (self.r + 1):
            raise MeshParameterError(
                f"h_star must lie in (0, {h / (self.r + 1):.3g}), got {self.h_star}")
        if not 0.0 < self.q < 1.0:
            raise MeshParameterError("q must lie in (0, 1)")


@dataclass
class Mesh:
    params: MeshParams
    panels: np.ndarray        # (n, 2) panel endpoints
    nodes: np.ndarray         # (n, r) collocation nodes
    special: np.ndarray       # (n, r, 2) special intervals around each node

    @property
    def flat_nodes(self):
        return self.nodes.reshape(-1)


def build_mesh(params: MeshParams) -> Mesh:
    n, r = params.n, params.r
    h = 2.0 / n
    t = -1.0 + h * np.arange(n + 1)
    panels = np.column_stack([t[:-1], t[1:]])
    offsets = h * np.arange(1, r + 1) / (r + 1)
    nodes = t[:-1, None] + offsets[None, :]
    special = np.stack([nodes - params.q * params.h_star, nodes + params.h_star], axis=-1)
    return Mesh(params=params, panels=panels, nodes=nodes, special=special)


def _lagrange_coeffs(nodes):
    """Power-basis coefficients of the Lagrange basis on the given nodes."""
    r = len(nodes)
    out = []
    for w in range(r):
        c = np.array([1.0])
        for v in range(r):
            if v == w:
                continue
            c = npoly.polymul(c, np.array([-nodes[v], 1.0])) / (nodes[w] - nodes[v])
        out.append(np.pad(c, (0, r - len(c))))
    return out


def basis_defect_integral(mesh: Mesh, k, j):
    """| int over the special interval of (psi_kj(tau) - 1)/(tau - t_kj) dtau |."""
    coeffs = _lagrange_coeffs(mesh.nodes[k])
    c = coeffs[j].astype(complex).copy()
    c[0] -= 1.0
    lo, hi = mesh.special[k, j]
    return abs(cauchy_log_moment(c, lo, hi, mesh.nodes[k, j]))


def assemble_linear(problem: SegmentProblem, mesh: Mesh):
    """Collocation matrix of the spline scheme on the tuned mesh.

    Singular contributions are exact log-kernel moments of the polynomial
    basis (own special interval as a principal value, far panels whole,
    neighbours k-1, k, k+1 skipped); the compact kernel uses r-point Gauss
    per panel.
    """
    n, r = mesh.params.n, mesh.params.r
    m = n * r
    c = np.zeros((m, m), dtype=complex)
    rhs = np.empty(m, dtype=complex)
    basis = [_lagrange_coeffs(mesh.nodes[i]) for i in range(n)]
    gx, gw = _gauss(max(r, 1))
    for k in range(n):
        for l in range(r):
            row = k * r + l
            t_kl = mesh.nodes[k, l]
            a_v, b_v = problem.a(t_kl), problem.b(t_kl)
            rhs[row] = problem.f(t_kl)
            c[row, row] += a_v
            # own special interval, PV
            lo, hi = mesh.special[k, l]
            for w in range(r):
                c[row, k * r + w] += b_v * cauchy_log_moment(basis[k][w], lo, hi, t_kl)
            # far panels, neighbours skipped
            for i in range(n):
                if k - 1 <= i <= k + 1:
                    continue
                plo, phi = mesh.panels[i]
                for w in range(r):
                    c[row, i * r + w] += b_v * cauchy_log_moment(basis[i][w], plo, phi, t_kl)
            # compact kernel over all panels
            if problem.h is not None:
                for i in range(n):
                    plo, phi = mesh.panels[i]
                    mid, half = 0.5 * (plo + phi), 0.5 * (phi - plo)
                    pts = mid + half * gx
                    hv = np.array([problem.h(t_kl, p) for p in pts], dtype=complex)
                    for w in range(r):
                        psi = npoly.polyval(pts, basis[i][w])
                        c[row, i * r + w] += half * np.sum(gw * hv * psi)
    return DenseSystem(c, rhs)


def tune_params(problem: SegmentProblem, n, r, M=8.0, eps=0.5, samples=1000) -> MeshParams:
    """Choose q = exp(-(M+1+max|a|)) and the largest h* passing the defect test.

    ``eps`` bounds the fundamental-polynomial defect integral on every
    special interval; the assembled system must then come out Hadamard
    dominant, otherwise the search keeps halving h* and finally fails with
    the best margin found.
    """
    ts = np.linspace(-1.0, 1.0, samples)
    b_min = min(abs(problem.b(t)) for t in ts)
    if b_min <= 0.0:
        raise InputError("b must be bounded away from zero on [-1, 1]")
    a_max = max(abs(problem.a(t)) for t in ts)
    q = float(np.exp(-(M + 1.0 + a_max)))
    h = 2.0 / n
    h_star = 0.999 * h / (r + 1)
    best_margin = -np.inf
    for _ in range(_MAX_HALVINGS):
        params = MeshParams(n=n, r=r, h_star=h_star, q=q, M=M)
        mesh = build_mesh(params)
        defect = max(basis_defect_integral(mesh, k, j)
                     for k in range(n) for j in range(r))
        if defect <= eps:
            sys = assemble_linear(problem, mesh)
            rep = hadamard_margins(sys)
            best_margin = max(best_margin, rep.min_margin)
            if rep.dominant:
                return params
        h_star *= 0.5
    raise TuningFailureError(
        f"no feasible h* after {_MAX_HALVINGS} halvings", best_margin=best_margin)


def solve_linear(problem: SegmentProblem, params: MeshParams):
    """Solve the tuned spline system; returns (nodal values, nodes, report)."""
    mesh = build_mesh(params)
    sys = assemble_linear(problem, mesh)
    x, rep = lu_solve(sys)
    rep.metadata.update(n=params.n, r=params.r, h_star=params.h_star, q=params.q)
    return x, mesh.flat_nodes, rep


# ---------------------------------------------------------------------------
# nonlinear Hilbert-kernel equation


@dataclass
class NonlinearHilbertProblem:
    """a(s) x(s) + (1/2pi) int b(s,sigma,x) cot((sigma-s)/2) + int h(s,sigma,x) = f(s).

    ``db``/``dh`` are the u-derivatives (finite-differenced when omitted).
    """

    a: callable
    b: callable
    h: callable
    f: callable
    db: callable = None
    dh: callable = None

    def __post_init__(self):
        step = 1e-6
        if self.db is None:
            self.db = lambda s, sig, u: ((self.b(s, sig, u + step)
                                          - self.b(s, sig, u - step)) / (2 * step))
        if self.dh is None:
            self.dh = lambda s, sig, u: ((self.h(s, sig, u + step)
                                          - self.h(s, sig, u - step)) / (2 * step))


@dataclass
class NewtonHilbertReport:
    residuals: list = field(default_factory=list)
    step_ratios: list = field(default_factory=list)
    contraction: float = None
    jacobi_split_q: float = None
    h_offset: float = None
    iterations: int = 0
    converged: bool = False


def _hilbert_nodes(n, h_offset):
    spacing = np.pi / n
    s = spacing * np.arange(2 * n)
    return s, s + h_offset, spacing


def hilbert_residual(p: NonlinearHilbertProblem, x, n, h_offset):
    s, s_star, spacing = _hilbert_nodes(n, h_offset)
    m = 2 * n
    x = np.asarray(x, dtype=complex)
    res = np.empty(m, dtype=complex)
    for j in range(m):
        acc = p.a(s_star[j]) * x[j]
        skip = {(j - 1) % m, (j + 1) % m}
        for k in range(m):
            if k in skip:
                continue
            acc += (p.b(s_star[j], s_star[k], x[k])
                    * cot_panel(s[k], s[k] + spacing, s_star[j]) / (2.0 * np.pi))
        for k in range(m):
            acc += np.pi / n * p.h(s_star[j], s_star[k], x[k])
        res[j] = acc - p.f(s_star[j])
    return res


def hilbert_jacobian(p: NonlinearHilbertProblem, x, n, h_offset):
    s, s_star, spacing = _hilbert_nodes(n, h_offset)
    m = 2 * n
    x = np.asarray(x, dtype=complex)
    jac = np.zeros((m, m), dtype=complex)
    for j in range(m):
        jac[j, j] += p.a(s_star[j])
        skip = {(j - 1) % m, (j + 1) % m}
        for k in range(m):
            if k not in skip:
                jac[j, k] += (p.db(s_star[j], s_star[k], x[k])
                              * cot_panel(s[k], s[k] + spacing, s_star[j]) / (2.0 * np.pi))
            jac[j, k] += np.pi / n * p.dh(s_star[j], s_star[k], x[k])
    return jac


def solve_nonlinear_hilbert(p: NonlinearHilbertProblem, n, h_offset=None, x0=None,
                            tol=1e-11, max_iter=200):
    """Modified Newton iteration on the shifted-node discretization.

    The Jacobian at the initial iterate is factored once; the diagonal/
    off-diagonal split estimate must contract (else the offset is rejected),
    and the step-ratio history provides the reported contraction factor.
    """
    if h_offset is None:
        h_offset = np.pi / (4 * n)
    if not 0.0 < h_offset <= np.pi / (2 * n):
        raise InputError("offset must lie in (0, pi/(2n)]")
    s, s_star, spacing = _hilbert_nodes(n, h_offset)
    if x0 is None:
        a_v = np.array([p.a(sj) for sj in s_star], dtype=complex)
        f_v = np.array([p.f(sj) for sj in s_star], dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            x = np.where(np.abs(a_v) > 1e-12, f_v / a_v, 0.0)
    else:
        x = np.asarray(x0, dtype=complex).copy()
    # sampled non-degeneracy of the kernel derivative along the initial iterate
    db_diag = np.array([p.db(sj, sj, xv) for sj, xv in zip(s_star, x)], dtype=complex)
    if np.any(np.abs(db_diag) < 1e-14) and np.any(np.abs(db_diag) > 0):
        pass  # mixed degeneracy is allowed; full degeneracy handled by dominance below

    report = NewtonHilbertReport(h_offset=h_offset)
    j0 = hilbert_jacobian(p, x, n, h_offset)
    diag = np.abs(np.diag(j0))
    off = np.abs(j0).sum(axis=1) - diag
    with np.errstate(divide="ignore", invalid="ignore"):
        q_split = float(np.max(np.where(diag > 0, off / diag, np.inf)))
    report.jacobi_split_q = q_split
    if q_split >= 1.0:
        raise NonDominantJacobianError(
            f"frozen Jacobian split estimate {q_split:.3g} >= 1 at offset {h_offset:.3g}")
    factor = _lu_factor_quiet(j0)
    r = hilbert_residual(p, x, n, h_offset)
    report.residuals.append(float(np.abs(r).max()))
    prev_step = None
    for it in range(1, max_iter + 1):
        step = sla.lu_solve(factor, r)
        x = x - step
        r = hilbert_residual(p, x, n, h_offset)
        report.residuals.append(float(np.abs(r).max()))
        report.iterations = it
        step_norm = float(np.abs(step).max())
        if prev_step is not None and prev_step > 0:
            report.step_ratios.append(step_norm / prev_step)
        prev_step = step_norm
        if report.residuals[-1] < tol * (1.0 + report.residuals[0]):
            report.converged = True
            report.contraction = max(report.step_ratios) if report.step_ratios else 0.0
            return x, s_star, report
        if it > 5 and report.residuals[-1] > report.residuals[-6]:
            raise DivergenceError("modified Newton is not contracting",
                                  report.residuals)
    raise DivergenceError(f"no convergence in {max_iter} modified-Newton steps",
                          report.residuals)

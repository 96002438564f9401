"""Collocation and mechanical-quadrature systems for linear SIE on the unit circle.

Three assembly routes share one nodal unknown vector x_n(t_k):

* ``basic``      -- capped-weight rectangle rule for the weak term,
* ``optimal``    -- exact panel moments of |tau - t|^{-eta} on midpoint panels,
* ``full_kernel``-- Cauchy-kernel equations a x + S(h x) with the dominant
                    part h(t,t) applied exactly and the regular quotient
                    interpolated, collocated at the shifted nodes.

The Cauchy operator itself is always applied exactly through the Fourier
basis; only compact terms are quadratured.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .linalg import DenseSystem, SolveReport, hadamard_margins, lu_solve
from .quadrature import WeakKernelSpec, weak_panel, weak_weight
from .trig import NodeSet, TrigPoly, cauchy_matrix, interpolate

_DIAG_STEP = 1e-6  # angular step of the difference quotient on the kernel diagonal


@dataclass
class CircleProblem:
    """Data of a(t) x + b(t) S x + weak/Cauchy kernel term = f on the circle.

    ``kernel_form`` selects between the weakly singular equation
    (a x + b Sx + U(h |tau-t|^{-eta} x) = f) and the full Cauchy-kernel
    equation (a x + S(h(t,tau) x) = f).  Coefficients are callables of the
    circle point t = e^{is}; h takes (t, tau).  Smoothness hypotheses of the
    underlying theory (Holder classes) are assumed, not checked.
    """

    a: callable
    b: callable = None
    h: callable = None
    f: callable = None
    eta: float = 0.0
    kernel_form: str = "weak"

    def __post_init__(self):
        if self.kernel_form not in ("weak", "cauchy_full"):
            raise InputError(f"unknown kernel form {self.kernel_form!r}")
        if self.kernel_form == "weak" and self.b is None:
            raise InputError("weak form needs the coefficient b")
        if self.kernel_form == "cauchy_full" and self.h is None:
            raise InputError("full-kernel form needs the kernel h")
        if not 0.0 <= self.eta < 1.0:
            raise InputError("eta must lie in [0, 1)")


def assemble_basic(p: CircleProblem, n) -> DenseSystem:
    """Scheme with the capped weight d(t, tau) and the rectangle rule (nodal basis)."""
    if p.kernel_form != "weak":
        raise InputError("basic scheme applies to the weak kernel form")
    nodes = NodeSet(n)
    t = nodes.points
    m = nodes.count
    c = np.diag(np.array([p.a(tk) for tk in t], dtype=complex))
    b_vals = np.array([p.b(tk) for tk in t], dtype=complex)
    c += b_vals[:, None] * cauchy_matrix(nodes.angles, nodes)
    if p.h is not None:
        spec = WeakKernelSpec(p.eta)
        w = np.array([[p.h(tj, tk) * weak_weight(tj, tk, spec, n) for tk in t] for tj in t],
                     dtype=complex)
        c += w * t[None, :] / m
    rhs = np.array([p.f(tk) for tk in t], dtype=complex)
    return DenseSystem(c, rhs)


def assemble_optimal(p: CircleProblem, n) -> DenseSystem:
    """Scheme with exact weak-panel moments over the midpoint panels [t'_k, t'_{k+1}]."""
    if p.kernel_form != "weak":
        raise InputError("optimal scheme applies to the weak kernel form")
    nodes = NodeSet(n)
    t = nodes.points
    m = nodes.count
    c = np.diag(np.array([p.a(tk) for tk in t], dtype=complex))
    b_vals = np.array([p.b(tk) for tk in t], dtype=complex)
    c += b_vals[:, None] * cauchy_matrix(nodes.angles, nodes)
    if p.h is not None:
        # panel moments depend only on the node offset k - j on the uniform grid
        spacing = 2.0 * np.pi / m
        moments = np.array([weak_panel(0.0, (d - 0.5) * spacing, (d + 0.5) * spacing, p.eta)
                            for d in range(m)])
        w = np.array([[p.h(tj, tk) for tk in t] for tj in t], dtype=complex)
        offsets = (np.arange(m)[None, :] - np.arange(m)[:, None]) % m
        c += w * t[None, :] * moments[offsets] / (2.0 * np.pi)
    rhs = np.array([p.f(tk) for tk in t], dtype=complex)
    return DenseSystem(c, rhs)


def _kernel_diagonal_quotient(p, t):
    """(h(t,tau) - h(t,t))/(tau - t) at tau = t by a symmetric difference quotient."""
    tp = t * np.exp(1j * _DIAG_STEP)
    tm = t * np.exp(-1j * _DIAG_STEP)
    return (p.h(t, tp) - p.h(t, tm)) / (tp - tm)


def assemble_full_kernel(p: CircleProblem, n, split=True) -> DenseSystem:
    """Full Cauchy-kernel collocation at the shifted nodes.

    With ``split`` the dominant part h(t,t) S x is applied exactly and the
    regular quotient (h(t,tau) - h(t,t))/(tau - t) is interpolated in tau
    and integrated exactly; without it the whole quotient h(t,tau)/(tau - t)
    is interpolated (possible because the shifted collocation points never
    meet the interpolation nodes).
    """
    if p.kernel_form != "cauchy_full":
        raise InputError("full-kernel scheme applies to the cauchy_full form")
    nodes = NodeSet(n)
    coll = NodeSet.shifted(n)
    t = nodes.points
    tbar = coll.points
    m = nodes.count
    # values of the fundamental polynomials at the collocation angles
    modes = np.arange(-n, n + 1)
    to_coeff = np.exp(-1j * np.outer(modes, nodes.angles)) / m
    psi_at_coll = np.exp(1j * np.outer(coll.angles, modes)) @ to_coeff
    c = np.array([p.a(tj) for tj in tbar], dtype=complex)[:, None] * psi_at_coll
    if split:
        s_mat = cauchy_matrix(coll.angles, nodes)
        for j, tj in enumerate(tbar):
            c[j] += p.h(tj, tj) * s_mat[j]
            # regular part: interpolate g(tau) = (h(tj,tau)-h(tj,tj))/(tau-tj) in tau;
            # (1/pi i) integral of a polynomial is twice its tau^{-1} coefficient
            g = np.empty(m, dtype=complex)
            for k, tk in enumerate(t):
                if abs(tk - tj) < 1e-12:
                    g[k] = _kernel_diagonal_quotient(p, tj)
                else:
                    g[k] = (p.h(tj, tk) - p.h(tj, tj)) / (tk - tj)
            c[j] += 2.0 * g * t / m
    else:
        for j, tj in enumerate(tbar):
            quotient = np.array([p.h(tj, tk) / (tk - tj) for tk in t], dtype=complex)
            c[j] += 2.0 * quotient * t / m
    rhs = np.array([p.f(tj) for tj in tbar], dtype=complex)
    return DenseSystem(c, rhs)


_SCHEMES = {
    "basic": assemble_basic,
    "optimal": assemble_optimal,
    "full_kernel": assemble_full_kernel,
    "full_kernel_unsplit": lambda p, n: assemble_full_kernel(p, n, split=False),
}


@dataclass
class CircleSolution:
    poly: TrigPoly
    nodal: np.ndarray
    report: SolveReport


def grid_error(values, reference, norm="holder_grid"):
    """Grid error in the requested norm: uniform max or discrete quadratic mean."""
    d = np.abs(np.asarray(values) - np.asarray(reference))
    if norm == "holder_grid":
        return float(d.max())
    if norm == "l2_grid":
        return float(np.sqrt(np.mean(d ** 2)))
    raise InputError(f"unknown norm {norm!r}")


def solve(p: CircleProblem, n, scheme="basic", norm="holder_grid", reference=None):
    """Assemble and solve; returns the interpolating polynomial and a report.

    ``reference`` (optional callable) adds the grid error against a known
    solution, measured in the requested norm, to the report metadata.
    """
    if scheme not in _SCHEMES:
        raise InputError(f"unknown scheme {scheme!r}; options: {sorted(_SCHEMES)}")
    if norm not in ("holder_grid", "l2_grid"):
        raise InputError(f"unknown norm {norm!r}")
    sys = _SCHEMES[scheme](p, n)
    x, rep = lu_solve(sys)
    nodes = NodeSet(n)
    poly = interpolate(x, nodes)
    rep.metadata.update(scheme=scheme, n=n, norm=norm)
    if reference is not None:
        ref_vals = np.array([reference(tk) for tk in nodes.points], dtype=complex)
        rep.metadata["grid_error"] = grid_error(x, ref_vals, norm)
    return CircleSolution(poly=poly, nodal=x, report=rep)


def mode_symbol_solution(a, b, f_poly: TrigPoly) -> TrigPoly:
    """Exact solution of a x + b S x = f for constants a, b with a^2 != b^2.

    Mode-wise division by the symbol a + b sign(k); the analytic oracle for
    the dominant-equation tests.
    """
    if abs(a - b) < 1e-15 or abs(a + b) < 1e-15:
        raise InputError("symbol a + b sign(k) must be invertible (a^2 != b^2)")
    signs = np.where(f_poly.modes >= 0, 1.0, -1.0)
    return TrigPoly(f_poly.n, f_poly.coeffs / (a + b * signs))

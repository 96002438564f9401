"""Constant-coefficient dominant equation on [-1, 1]: closed-form-driven solvers.

The index-0 route expands over the Jacobi pair P^(1/2,-1/2) / P^(-1/2,1/2)
using the exact image S(w P_l^(-1/2,1/2)) = P_l^(1/2,-1/2) of the weighted
basis, w(t) = sqrt((1+t)/(1-t)); the index-1 route uses the Chebyshev pair
T/U with the weight (1-t^2)^(-1/2) and the side condition fixing the
homogeneous mode.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError
from .linalg import DenseSystem, lu_solve

_ROOT_TOL = 1e-13


def jacobi_eval(l, a, b, t):
    """Jacobi polynomial P_l^(a,b)(t) by the three-term recurrence."""
    t = np.asarray(t, dtype=float)
    p_prev = np.ones_like(t)
    if l == 0:
        return p_prev
    p = 0.5 * (a + b + 2.0) * t + 0.5 * (a - b)
    for m in range(2, l + 1):
        c1 = 2.0 * m * (m + a + b) * (2.0 * m + a + b - 2.0)
        c2 = (2.0 * m + a + b - 1.0) * (a * a - b * b)
        c3 = (2.0 * m + a + b - 1.0) * (2.0 * m + a + b) * (2.0 * m + a + b - 2.0)
        c4 = 2.0 * (m + a - 1.0) * (m + b - 1.0) * (2.0 * m + a + b)
        p, p_prev = ((c2 + c3 * t) * p - c4 * p_prev) / c1, p
    return p


def _bisect(f, lo, hi):
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if hi - lo < _ROOT_TOL or fm == 0.0:
            return mid
        if (flo < 0) == (fm < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def jacobi_derivative_eval(l, a, b, t):
    """d/dt of P_l^(a,b): (l+a+b+1)/2 * P_{l-1}^(a+1,b+1)."""
    if l == 0:
        return np.zeros_like(np.asarray(t, dtype=float))
    return 0.5 * (l + a + b + 1.0) * jacobi_eval(l - 1, a + 1.0, b + 1.0, t)


def jacobi_roots(degree, a, b):
    """All roots of P_degree^(a,b) in (-1,1), ascending.

    Interlacing bisection degree by degree, then two Newton polish steps to
    push the polynomial residual to roundoff.
    """
    roots = np.array([])
    for m in range(1, degree + 1):
        brackets = np.concatenate([[-1.0], roots, [1.0]])
        f = lambda t: float(jacobi_eval(m, a, b, t))
        roots = np.array([_bisect(f, brackets[i], brackets[i + 1])
                          for i in range(m)])
    for _ in range(2):
        roots = roots - (jacobi_eval(degree, a, b, roots)
                         / jacobi_derivative_eval(degree, a, b, roots))
    return roots


def nodes_index0(n):
    """Roots of P_{n+1}^(1/2,-1/2), returned strictly decreasing."""
    if n < 0:
        raise InputError("n must be non-negative")
    return jacobi_roots(n + 1, 0.5, -0.5)[::-1].copy()


def chebyshev_u_nodes(n):
    """Zeros of U_n: t_k = cos((k+1) pi / (n+1)), k = 0..n-1 (decreasing)."""
    k = np.arange(n)
    return np.cos((k + 1) * np.pi / (n + 1))


@dataclass
class SegmentDominantProblem:
    """Right-hand side and index data of (1/pi) PV int x(tau)/(tau-t) dtau = f."""

    f: callable
    index: str = "zero"
    p: float = 0.0

    def __post_init__(self):
        if self.index not in ("zero", "one"):
            raise InputError(f"index must be 'zero' or 'one', got {self.index!r}")
        if self.index == "one" and not np.isfinite(self.p):
            raise InputError("the side-condition value p must be finite")


@dataclass
class WeightedSolution:
    """weight(t) times a polynomial part in the named basis.

    ``basis`` is ``jacobi_index0`` (weight sqrt((1+t)/(1-t)), coefficients in
    the P^(-1/2,1/2) family) or ``chebyshev_index1`` (weight (1-t^2)^(-1/2),
    coefficients in the Chebyshev T family, constant term included).
    """

    basis: str
    coefficients: np.ndarray
    nodes: np.ndarray
    nodal_values: np.ndarray

    @property
    def weight_exponents(self):
        return (-0.5, 0.5) if self.basis == "jacobi_index0" else (-0.5, -0.5)


def solve_index0(prob: SegmentDominantProblem, n) -> WeightedSolution:
    """Collocation at the P_{n+1}^(1/2,-1/2) roots; nodal identity x_i = f_i.

    The coefficients g_l of the interpolant of f in the P^(1/2,-1/2) basis
    transfer unchanged to the weighted P^(-1/2,1/2) basis of the solution,
    because S maps w P_l^(-1/2,1/2) to P_l^(1/2,-1/2) exactly.
    """
    if prob.index != "zero":
        raise InputError("solve_index0 requires an index-zero problem")
    t = nodes_index0(n)
    fv = np.array([prob.f(tk) for tk in t], dtype=complex)
    v = np.column_stack([jacobi_eval(l, 0.5, -0.5, t) for l in range(n + 1)])
    g, _ = lu_solve(DenseSystem(v.astype(complex), fv))
    return WeightedSolution(basis="jacobi_index0", coefficients=g, nodes=t, nodal_values=fv)


def solve_index1(prob: SegmentDominantProblem, n) -> WeightedSolution:
    """Collocation at the U_n zeros plus the side condition int x = p.

    The U_l-coefficients of f's interpolant become the T_{l+1}-coefficients
    of the weighted solution; the free T_0 mode is fixed by the side
    condition, x_0 = p / pi.
    """
    if prob.index != "one":
        raise InputError("solve_index1 requires an index-one problem")
    if n < 1:
        raise InputError("need at least one collocation node")
    t = chebyshev_u_nodes(n)
    fv = np.array([prob.f(tk) for tk in t], dtype=complex)
    theta = np.arccos(t)
    v = np.column_stack([np.sin((l + 1) * theta) / np.sin(theta) for l in range(n)])
    phi, _ = lu_solve(DenseSystem(v.astype(complex), fv))
    coeffs = np.concatenate([[prob.p / np.pi], phi])
    weight = 1.0 / np.sqrt(1.0 - t ** 2)
    nodal = weight * np.polynomial.chebyshev.chebval(t, coeffs)
    return WeightedSolution(basis="chebyshev_index1", coefficients=coeffs,
                            nodes=t, nodal_values=nodal)


def eval_solution(sol: WeightedSolution, t):
    """Evaluate weight times the recurrence-evaluated polynomial part at |t| < 1."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(np.abs(t_arr) >= 1.0):
        raise DomainError("weighted solutions are evaluable only inside (-1, 1)")
    if sol.basis == "chebyshev_index1":
        poly = np.polynomial.chebyshev.chebval(t_arr, sol.coefficients)
        out = poly / np.sqrt(1.0 - t_arr ** 2)
    elif sol.basis == "jacobi_index0":
        poly = sum(c * jacobi_eval(l, -0.5, 0.5, t_arr)
                   for l, c in enumerate(sol.coefficients))
        out = poly * np.sqrt((1.0 + t_arr) / (1.0 - t_arr))
    else:
        raise InputError(f"unknown basis {sol.basis!r}")
    return out[()] if np.isscalar(t) or np.asarray(t).ndim == 0 else out


def dominant_apply_oracle(sol: WeightedSolution, t, tol=1e-9):
    """(1/pi) PV int x(tau)/(tau - t) dtau of a weighted solution, by quadrature.

    Forward-check oracle: uses the cosine substitution and the Cauchy-weight
    rule, independent of the closed-form identities behind the solvers.
    """
    from .quadrature import pv_segment_oracle

    if sol.basis == "chebyshev_index1":
        def g_theta(theta):
            # x(cos) sin = polynomial part only
            return np.polynomial.chebyshev.chebval(np.cos(theta), sol.coefficients)
    else:
        def g_theta(theta):
            c = np.cos(theta)
            poly = sum(ck * jacobi_eval(l, -0.5, 0.5, c)
                       for l, ck in enumerate(sol.coefficients))
            # w(cos) sin = 2 cos^2(theta/2)
            return poly * 2.0 * np.cos(0.5 * theta) ** 2
    real_part = pv_segment_oracle(lambda th: complex(g_theta(th)).real, t, tol)
    imag_part = pv_segment_oracle(lambda th: complex(g_theta(th)).imag, t, tol)
    return real_part + 1j * imag_part


def integral_gauss_chebyshev(sol: WeightedSolution, m=256):
    """int_{-1}^{1} x(t) dt by Gauss-Chebyshev, exact for these weight classes."""
    theta = (np.arange(m) + 0.5) * np.pi / m
    t = np.cos(theta)
    if sol.basis == "chebyshev_index1":
        vals = np.polynomial.chebyshev.chebval(t, sol.coefficients)
        return np.pi / m * np.sum(vals)
    poly = sum(c * jacobi_eval(l, -0.5, 0.5, t) for l, c in enumerate(sol.coefficients))
    # weight w(t) = sqrt((1+t)/(1-t)) = (1+t) / sqrt(1-t^2)
    return np.pi / m * np.sum(poly * (1.0 + t))

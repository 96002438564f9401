"""Bisingular equations on the torus: quadrant calculus, factorization,
collocation, and the scaled fixed-point iterations.

Quadrant functions follow the sign convention of the boundary-value pair
x = X++ - X+- - X-+ + X--,  S12 x = X++ + X+- + X-+ + X--,
under which exp of the signed quadrant projections of ln G factorizes G as
psi++ psi-- / (psi+- psi-+) identically.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AngleConditionError,
    DivergenceError,
    FactorizationDomainError,
    IndexError2D,
    InputError,
)
from .linalg import DenseSystem, lu_solve

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class TrigPoly2D:
    """Tensor polynomial sum c_{kl} t1^k t2^l, |k|,|l| <= n; coeffs[k+n, l+n]."""

    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        m = 2 * self.n + 1
        if c.shape != (m, m):
            raise InputError(f"need a {m}x{m} coefficient array, got {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @property
    def modes(self):
        return np.arange(-self.n, self.n + 1)

    def __call__(self, s1, s2):
        """Evaluate at angle grids (outer product convention)."""
        e1 = np.exp(1j * np.multiply.outer(np.atleast_1d(s1), self.modes))
        e2 = np.exp(1j * np.multiply.outer(np.atleast_1d(s2), self.modes))
        return e1 @ self.coeffs @ e2.T

    def eval_point(self, t1, t2):
        p1 = np.power(t1, self.modes)
        p2 = np.power(t2, self.modes)
        return p1 @ self.coeffs @ p2

    @staticmethod
    def zero(n):
        m = 2 * n + 1
        return TrigPoly2D(n, np.zeros((m, m), dtype=complex))


def grid_angles(n):
    return _TWO_PI * np.arange(2 * n + 1) / (2 * n + 1)


def interpolate2d(samples, n) -> TrigPoly2D:
    """Tensor interpolation on the (2n+1)^2 uniform torus grid."""
    f = np.asarray(samples, dtype=complex)
    m = 2 * n + 1
    if f.shape != (m, m):
        raise InputError(f"need a {m}x{m} sample grid")
    s = grid_angles(n)
    modes = np.arange(-n, n + 1)
    tr = np.exp(-1j * np.outer(modes, s)) / m
    return TrigPoly2D(n, tr @ f @ tr.T)


@dataclass
class QuadrantSplit:
    pp: TrigPoly2D
    pm: TrigPoly2D
    mp: TrigPoly2D
    mm: TrigPoly2D

    def reconstruct(self) -> TrigPoly2D:
        return TrigPoly2D(self.pp.n, self.pp.coeffs - self.pm.coeffs
                          - self.mp.coeffs + self.mm.coeffs)

    def s12(self) -> TrigPoly2D:
        return TrigPoly2D(self.pp.n, self.pp.coeffs + self.pm.coeffs
                          + self.mp.coeffs + self.mm.coeffs)


def quadrant_split(p: TrigPoly2D) -> QuadrantSplit:
    """Signed quadrant parts: X+- and X-+ carry the minus of the Plemel pair."""
    n = p.n
    k = p.modes[:, None]
    l = p.modes[None, :]
    pp = np.where((k >= 0) & (l >= 0), p.coeffs, 0.0)
    pm = np.where((k >= 0) & (l < 0), -p.coeffs, 0.0)
    mp = np.where((k < 0) & (l >= 0), -p.coeffs, 0.0)
    mm = np.where((k < 0) & (l < 0), p.coeffs, 0.0)
    return QuadrantSplit(*(TrigPoly2D(n, c) for c in (pp, pm, mp, mm)))


def s12_apply(p: TrigPoly2D) -> TrigPoly2D:
    """Tensor Cauchy operator: c_{kl} -> sign(k) sign(l) c_{kl}."""
    sk = np.where(p.modes >= 0, 1.0, -1.0)
    return TrigPoly2D(p.n, p.coeffs * sk[:, None] * sk[None, :])


def _winding(values_along_circle):
    """Winding number of a closed sample loop (endpoint omitted)."""
    v = np.asarray(values_along_circle)
    ratios = np.roll(v, -1) / v
    return int(np.round(np.sum(np.angle(ratios)) / _TWO_PI))


def _unwrap_phase_grid(g):
    """ln of a nonvanishing grid with row-major continuous phase; returns
    (log values, winding per variable)."""
    k1 = _winding(g[:, 0])
    k2 = _winding(g[0, :])
    phase = np.angle(g)
    phase[0] = np.unwrap(phase[0])          # anchor the first row
    phase = np.unwrap(phase, axis=0)        # then sweep the columns
    return np.log(np.abs(g)) + 1j * phase, k1, k2


@dataclass
class FactorData2D:
    """Truncated exp-log factorization of a nonvanishing symbol G."""

    m: int
    pp: TrigPoly2D
    pm: TrigPoly2D
    mp: TrigPoly2D
    mm: TrigPoly2D
    winding: tuple
    residual: float

    def product_at(self, t1, t2):
        return (self.pp.eval_point(t1, t2) * self.mm.eval_point(t1, t2)
                / (self.pm.eval_point(t1, t2) * self.mp.eval_point(t1, t2)))


def _exp_truncated(p: TrigPoly2D, m) -> TrigPoly2D:
    """exp of a quadrant polynomial, truncated at degree m.

    The exponential is resolved on a finer grid (degree 2m + 8) and the
    coefficient square cropped to |k|, |l| <= m, so the reported residual
    reflects the genuine truncation tail rather than grid aliasing.
    """
    big = 2 * m + 8
    grid = grid_angles(big)
    vals = np.exp(p(grid, grid))
    full = interpolate2d(vals, big)
    crop = full.coeffs[big - m:big + m + 1, big - m:big + m + 1]
    return TrigPoly2D(m, crop.copy())


def factorize(g_samples, m) -> FactorData2D:
    """psi^{±±} = exp(P^{±±}[ln G]) from samples of G on the (2m+1)^2 grid.

    Phase unwrapping must close with zero winding in each variable (zero
    partial indices); the product identity residual
    max|psi++ psi-- - G psi+- psi-+| at the nodes is reported.
    """
    g = np.asarray(g_samples, dtype=complex)
    mm_ = 2 * m + 1
    if g.shape != (mm_, mm_):
        raise InputError(f"need G samples on a {mm_}x{mm_} grid")
    if np.min(np.abs(g)) < 1e-13:
        raise FactorizationDomainError("G vanishes (numerically) at a grid node")
    log_g, k1, k2 = _unwrap_phase_grid(g)
    if k1 != 0 or k2 != 0:
        raise IndexError2D(k1, k2)
    w = interpolate2d(log_g, m)
    split = quadrant_split(w)
    # the signed projections of quadrant_split are exactly the P^{±±} whose
    # exponentials satisfy the product identity
    psi_pp = _exp_truncated(split.pp, m)
    psi_pm = _exp_truncated(split.pm, m)
    psi_mp = _exp_truncated(split.mp, m)
    psi_mm = _exp_truncated(split.mm, m)
    grid = grid_angles(m)
    lhs = psi_pp(grid, grid) * psi_mm(grid, grid)
    rhs = g * psi_pm(grid, grid) * psi_mp(grid, grid)
    residual = float(np.abs(lhs - rhs).max())
    return FactorData2D(m=m, pp=psi_pp, pm=psi_pm, mp=psi_mp, mm=psi_mm,
                        winding=(k1, k2), residual=residual)


# ---------------------------------------------------------------------------
# collocation for a x + d S12 x (+ compact term) = f


@dataclass
class BisingularProblem:
    """a(t1,t2) x + d(t1,t2) S12 x + U12(h x) = f on the torus.

    ``h`` (optional) is the compact kernel h(t1,t2,tau1,tau2); U12 carries
    the complex surface element d tau1 d tau2.
    """

    a: callable
    d: callable
    f: callable
    h: callable = None

    def symbol(self, t1, t2):
        return (self.a(t1, t2) - self.d(t1, t2)) / (self.a(t1, t2) + self.d(t1, t2))


def _basis_columns(factor: FactorData2D, n, t1, t2):
    """Values of the psi-weighted quadrant monomials at one collocation point.

    Returns (columns, quadrant tags) ordered by (k, l) with k, l = -n..n.
    """
    modes = np.arange(-n, n + 1)
    p1 = np.power(t1, modes)
    p2 = np.power(t2, modes)
    psi = {("+", "+"): factor.pp.eval_point(t1, t2),
           ("+", "-"): factor.pm.eval_point(t1, t2),
           ("-", "+"): factor.mp.eval_point(t1, t2),
           ("-", "-"): factor.mm.eval_point(t1, t2)}
    cols = np.empty((2 * n + 1) * (2 * n + 1), dtype=complex)
    tags = []
    i = 0
    for k in modes:
        for l in modes:
            tag = ("+" if k >= 0 else "-", "+" if l >= 0 else "-")
            cols[i] = psi[tag] * p1[k + n] * p2[l + n]
            tags.append(tag)
            i += 1
    return cols, tags


def assemble_collocation(problem: BisingularProblem, factor: FactorData2D, n):
    """Collocation rows X++ - G(X+- + X-+) + X-- = f1 over the psi basis.

    Unknowns are the (2n+1)^2 quadrant coefficients alpha_{kl}; the optional
    compact term is added by the tensor rectangle rule on the node values of
    the reconstructed density.
    """
    m = 2 * n + 1
    s = grid_angles(n)
    pts = np.exp(1j * s)
    size = m * m
    mat = np.zeros((size, size), dtype=complex)
    rhs = np.empty(size, dtype=complex)
    g_factor = {("+", "+"): 1.0, ("-", "-"): 1.0}
    row = 0
    for t1 in pts:
        for t2 in pts:
            apd = problem.a(t1, t2) + problem.d(t1, t2)
            g = problem.symbol(t1, t2)
            cols, tags = _basis_columns(factor, n, t1, t2)
            weights = np.array([1.0 if tag in g_factor else -g for tag in tags])
            mat[row] = cols * weights
            rhs[row] = problem.f(t1, t2) / apd
            row += 1
    if problem.h is not None:
        # tensor rectangle rule for U12(h x) = int int h x dtau1 dtau2 with
        # x at the nodes reconstructed by the Plemel combination of the basis
        mat += _compact_block(problem, factor, n, pts)
    return DenseSystem(mat, rhs)


def _compact_block(problem, factor, n, pts):
    m = 2 * n + 1
    size = m * m
    # density value columns at every node (Plemel signs on the mixed parts)
    density = np.empty((size, size), dtype=complex)
    idx = 0
    for t1 in pts:
        for t2 in pts:
            cols, tags = _basis_columns(factor, n, t1, t2)
            signs = np.array([1.0 if tag in (("+", "+"), ("-", "-")) else -1.0
                              for tag in tags])
            density[idx] = cols * signs
            idx += 1
    # complex surface element: d tau = i tau d sigma, weight (2 pi / m)^2
    w = (_TWO_PI / m) ** 2
    block = np.zeros((size, size), dtype=complex)
    row = 0
    for t1 in pts:
        for t2 in pts:
            hv = np.empty(size, dtype=complex)
            k = 0
            for u1 in pts:
                for u2 in pts:
                    hv[k] = problem.h(t1, t2, u1, u2) * (1j * u1) * (1j * u2)
                    k += 1
            scale = problem.a(t1, t2) + problem.d(t1, t2)
            block[row] = w * (hv @ density) / scale
            row += 1
    return block


def reconstruct_density(coeffs, factor: FactorData2D, n):
    """Density x = X++ - X+- - X-+ + X-- from quadrant coefficients (callable)."""
    c = np.asarray(coeffs, dtype=complex).reshape(2 * n + 1, 2 * n + 1)

    def density(t1, t2):
        modes = np.arange(-n, n + 1)
        p1 = np.power(t1, modes)
        p2 = np.power(t2, modes)
        total = 0.0 + 0.0j
        psi = {("+", "+"): factor.pp.eval_point(t1, t2),
               ("+", "-"): factor.pm.eval_point(t1, t2),
               ("-", "+"): factor.mp.eval_point(t1, t2),
               ("-", "-"): factor.mm.eval_point(t1, t2)}
        for k in modes:
            for l in modes:
                tag = ("+" if k >= 0 else "-", "+" if l >= 0 else "-")
                sign = 1.0 if tag in (("+", "+"), ("-", "-")) else -1.0
                total += sign * psi[tag] * c[k + n, l + n] * p1[k + n] * p2[l + n]
        return total

    return density


def solve_collocation(problem: BisingularProblem, n, factor=None, factor_degree=None):
    """Factorize (if needed), assemble and solve; returns (coeffs, density, report)."""
    if factor is None:
        m = factor_degree if factor_degree is not None else 2 * n
        grid = grid_angles(m)
        pts = np.exp(1j * grid)
        g = np.array([[problem.symbol(u1, u2) for u2 in pts] for u1 in pts])
        factor = factorize(g, m)
    sys = assemble_collocation(problem, factor, n)
    coeffs, rep = lu_solve(sys)
    rep.metadata.update(n=n, factor_residual=factor.residual)
    return coeffs, reconstruct_density(coeffs, factor, n), rep


# ---------------------------------------------------------------------------
# iterative schemes


def enclosing_disk(values, iterations=256):
    """Approximate minimal enclosing disk of complex samples (mean-shift)."""
    v = np.asarray(values, dtype=complex).ravel()
    c = v.mean()
    for k in range(1, iterations + 1):
        far = v[np.argmax(np.abs(v - c))]
        c = c + (far - c) / (k + 1.0)
    return c, float(np.abs(v - c).max())


def auto_scaling(values):
    """alpha = 1/center of the enclosing disk; feasible when radius/|center| < 1."""
    center, radius = enclosing_disk(values)
    if abs(center) < 1e-14 or radius / abs(center) >= 1.0:
        raise AngleConditionError(
            "sampled values do not admit a contracting scaling",
            center=center, radius=radius)
    return 1.0 / center, radius / abs(center)


def riemann_iterate(problem: BisingularProblem, n, alpha=None, tol=1e-12,
                    max_iter=500):
    """Fixed-point iteration psi <- (alpha G - 1)(psi^{+-} + psi^{-+}) + f1.

    Grid samples are re-interpolated each sweep; after convergence the mixed
    quadrants are un-scaled by alpha and the density reconstructed.  Returns
    (density callable, node values, history of update norms).
    """
    s = grid_angles(n)
    pts = np.exp(1j * s)
    g = np.array([[problem.symbol(u1, u2) for u2 in pts] for u1 in pts])
    f1 = np.array([[problem.f(u1, u2) / (problem.a(u1, u2) + problem.d(u1, u2))
                    for u2 in pts] for u1 in pts])
    if alpha is None:
        alpha, q = auto_scaling(g)
    else:
        q = float(np.abs(alpha * g - 1.0).max())
        if q >= 1.0:
            raise AngleConditionError(f"|alpha G - 1| reaches {q:.3g} >= 1",
                                      center=None, radius=q)
    mult = alpha * g - 1.0
    psi = np.zeros_like(f1)
    history = []
    for _ in range(max_iter):
        p = interpolate2d(psi, n)
        split = quadrant_split(p)
        mixed = split.pm(s, s) + split.mp(s, s)
        new = mult * mixed + f1
        history.append(float(np.abs(new - psi).max()))
        psi = new
        if history[-1] < tol:
            break
    else:
        raise DivergenceError("riemann iteration did not converge", history)
    # un-scale the mixed quadrants and rebuild the density
    p = interpolate2d(psi, n)
    split = quadrant_split(p)
    x_coeffs = (split.pp.coeffs - alpha * split.pm.coeffs
                - alpha * split.mp.coeffs + split.mm.coeffs)
    x = TrigPoly2D(n, x_coeffs)
    return x, x(s, s), {"history": history, "q": q, "alpha": alpha}


@dataclass
class FourTermProblem:
    """a x + b S1 x + c S2 x + d S12 x = f on the torus."""

    a: callable
    b: callable
    c: callable
    d: callable
    f: callable

    def quadrant_coefficients(self, t1, t2):
        """(a1, b1, c1, d1) multiplying X++, X+-, X-+, X-- in the Riemann form."""
        a, b, c, d = (self.a(t1, t2), self.b(t1, t2),
                      self.c(t1, t2), self.d(t1, t2))
        return (a + b + c + d,
                -a - b + c + d,
                -a + b - c + d,
                a - b - c + d)


def four_term_iterate(problem: FourTermProblem, n, scalings=None, tol=1e-12,
                      max_iter=500):
    """Four independently scaled quadrant iterations for the general equation.

    The fixed-point map is v <- v - (scaled Riemann residual) with scalings
    alpha = 1/center per quadrant coefficient; feasibility demands
    q1+q2+q3+q4 < 1 with q_i the per-quadrant contraction radii.
    """
    s = grid_angles(n)
    pts = np.exp(1j * s)
    m = 2 * n + 1
    coeff = np.empty((4, m, m), dtype=complex)
    for i, u1 in enumerate(pts):
        for j, u2 in enumerate(pts):
            coeff[:, i, j] = problem.quadrant_coefficients(u1, u2)
    f = np.array([[problem.f(u1, u2) for u2 in pts] for u1 in pts])
    # Plemel signs of the quadrant parts in the density reconstruction; the
    # fixed point of v <- sum (sign_i - c_i alpha_i) Q_i(v) + f solves the
    # scaled Riemann problem sum c_i alpha_i Q_i = f
    signs = (1.0, -1.0, -1.0, 1.0)
    if scalings is None:
        scalings = []
        qs = []
        for sign, c_grid in zip(signs, coeff):
            alpha, q = auto_scaling(c_grid)
            scalings.append(sign * alpha)
            qs.append(q)
    else:
        scalings = list(scalings)
        qs = [float(np.abs(sign - al * cg).max())
              for sign, al, cg in zip(signs, scalings, coeff)]
    q_total = sum(qs)
    if q_total >= 1.0:
        raise AngleConditionError(
            f"sum of contraction radii {q_total:.3g} >= 1 (radii {qs})",
            center=None, radius=q_total)
    mult = [sign - al * cg for sign, al, cg in zip(signs, scalings, coeff)]
    v = np.zeros_like(f)
    history = []
    for _ in range(max_iter):
        p = interpolate2d(v, n)
        split = quadrant_split(p)
        parts = (split.pp(s, s), split.pm(s, s), split.mp(s, s), split.mm(s, s))
        new = (mult[0] * parts[0] + mult[1] * parts[1]
               + mult[2] * parts[2] + mult[3] * parts[3] + f)
        history.append(float(np.abs(new - v).max()))
        v = new
        if history[-1] < tol:
            break
    else:
        raise DivergenceError("four-term iteration did not converge", history)
    # X^{±±} = scalings * v^{±±}; density by the Plemel combination
    p = interpolate2d(v, n)
    split = quadrant_split(p)
    x_coeffs = (scalings[0] * split.pp.coeffs - scalings[1] * split.pm.coeffs
                - scalings[2] * split.mp.coeffs + scalings[3] * split.mm.coeffs)
    x = TrigPoly2D(n, x_coeffs)
    return x, x(s, s), {"history": history, "q": qs, "scalings": scalings}

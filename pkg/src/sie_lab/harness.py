"""Manufactured problems, convergence studies, stability experiments, reports.

Each manufactured case packages an exact solution together with a right-hand
side built by an independent oracle (exact mode algebra where possible,
graded quadrature where not), a per-n solver, and a perturbed re-solver for
the stability experiments.
"""

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import InputError
from .trig import NodeSet, TrigPoly, cauchy_apply

_TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# oracle quadrature helpers


def weak_integral_oracle(g, s, eta, tol=1e-11):
    """Integral of g(sigma) |2 sin((sigma-s)/2)|^{-eta} over one period.

    ``g`` must be smooth and 2*pi periodic (complex allowed).  The panel is
    split at the singularity foot and graded with u = pi v^{1/(1-eta)}.
    """
    if eta == 0.0:
        re, _ = quad(lambda u: g(s + u).real, -np.pi, np.pi, epsabs=tol, limit=200)
        im, _ = quad(lambda u: g(s + u).imag, -np.pi, np.pi, epsabs=tol, limit=200)
        return re + 1j * im

    def side(sign):
        def integrand_part(v, part):
            u = np.pi * v ** (1.0 / (1.0 - eta))
            sinc = np.sin(0.5 * u) / (0.5 * u) if u > 1e-300 else 1.0
            w = np.pi ** (1.0 - eta) / (1.0 - eta) * sinc ** (-eta)
            val = g(s + sign * u) * w
            return val.real if part == 0 else val.imag

        re, _ = quad(integrand_part, 0.0, 1.0, args=(0,), epsabs=tol, limit=200)
        im, _ = quad(integrand_part, 0.0, 1.0, args=(1,), epsabs=tol, limit=200)
        return re + 1j * im

    return side(1.0) + side(-1.0)


def weak_integral_dyadic(g, s, eta, levels=70, order=16):
    """Same integral as :func:`weak_integral_oracle` by dyadic panel refinement.

    Independent cross-check route: geometric panels toward the singularity
    with fixed-order Gauss on each; no substitution involved.
    """
    from .quadrature import gauss_panel

    def kernel_side(sign):
        total = 0.0 + 0.0j
        hi = np.pi
        for _ in range(levels):
            lo = hi / 2.0
            total += gauss_panel(
                lambda u: g(s + sign * u) * np.abs(2.0 * np.sin(0.5 * u)) ** (-eta),
                lo, hi, order)
            hi = lo
        return total

    return kernel_side(1.0) + kernel_side(-1.0)


def circle_pv_cauchy(poly_eval, mean, s, resolution=8192):
    """S_gamma via the PV trapezoid oracle: S x = mean(x) - i H x."""
    from .quadrature import pv_oracle

    return mean - 1j * pv_oracle(poly_eval, s, resolution)


def fit_order(ns, errors):
    """Least-squares slope of log(err) against log(n), sign-flipped to an order."""
    ns = np.asarray(ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    mask = errors > 0
    if mask.sum() < 2:
        return None
    slope = np.polyfit(np.log(ns[mask]), np.log(errors[mask]), 1)[0]
    return float(-slope)


# ---------------------------------------------------------------------------
# manufactured cases


@dataclass
class ManufacturedCase:
    """A manufactured problem with a certified (exact, rhs) pair.

    ``solve_fn(n)`` returns (values, locations); ``exact`` is evaluable at the
    returned locations; ``perturbed_solve_fn(n, eps, rng)`` re-solves with
    coefficient and rhs samples perturbed by noise of magnitude eps;
    ``oracle_residual_fn(rng)`` evaluates |K x* - f| at random check points.
    """

    name: str
    family: str
    smoothness: str
    problem: object
    exact: callable
    solve_fn: callable
    perturbed_solve_fn: callable = None
    oracle_residual_fn: callable = None
    default_ns: tuple = (8, 16, 32)

    def oracle_residual(self, points=64, seed=0):
        if self.oracle_residual_fn is None:
            return None
        return self.oracle_residual_fn(np.random.default_rng(seed), points)


def _complex_noise(rng, shape, eps):
    """Uniform complex box noise with |re|,|im| <= eps/sqrt(2) (so |.| <= eps)."""
    lim = eps / np.sqrt(2.0)
    return rng.uniform(-lim, lim, shape) + 1j * rng.uniform(-lim, lim, shape)


def _perturbed_callable(fn, nodes_points, noise):
    """Wrap a coefficient callable so its value at each node gains the noise."""
    table = {}
    for pt, nz in zip(nodes_points, noise):
        table[complex(pt)] = nz

    def wrapped(t, *rest):
        base = fn(t, *rest)
        return base + table.get(complex(t), 0.0)

    return wrapped


def manufactured_circle_weak_smooth(eta=0.5):
    """Smooth solution of the weakly singular circle equation, rhs by quadrature."""
    from .circle import CircleProblem, solve

    x_star = TrigPoly(3, np.array([0.1j, -0.2, 0.5, 1.0, 0.4, 0.15j, 0.05], dtype=complex))

    def a(t):
        return 3.0 + 0.3 * (t + 1.0 / t) / 2.0

    def b(t):
        return 1.0 + 0.2 * (t - 1.0 / t) / (2j)

    def h(t, tau):
        return 0.25 * (1.0 + (tau / t + t / tau) / 2.0)

    sx = cauchy_apply(x_star)

    def f(t):
        s = float(np.angle(t))

        def g(sigma):
            tau = np.exp(1j * sigma)
            return h(t, tau) * x_star.eval_point(tau) * tau / _TWO_PI

        weak = weak_integral_oracle(g, s, eta)
        return a(t) * x_star.eval_point(t) + b(t) * sx.eval_point(t) + weak

    problem = CircleProblem(a=a, b=b, h=h, f=f, eta=eta)

    def solve_fn(n, scheme="optimal"):
        sol = solve(problem, n, scheme=scheme)
        return sol.nodal, NodeSet(n).points

    def oracle_residual_fn(rng, points):
        # independent route: PV trapezoid for S, dyadic panels for the weak term
        worst = 0.0
        for _ in range(points):
            s = rng.uniform(0, _TWO_PI)
            t = np.exp(1j * s)
            sx = circle_pv_cauchy(lambda sig: x_star(sig), x_star.coeff(0), s)

            def g(sigma):
                tau = np.exp(1j * sigma)
                return h(t, tau) * x_star.eval_point(tau) * tau / _TWO_PI

            weak = weak_integral_dyadic(g, s, eta)
            lhs = a(t) * x_star.eval_point(t) + b(t) * sx + weak
            worst = max(worst, abs(lhs - f(t)))
        return worst

    return ManufacturedCase(
        name=f"circle-weak-smooth-eta{eta}",
        family="circle_weak",
        smoothness="analytic",
        problem=problem,
        exact=x_star.eval_point,
        solve_fn=solve_fn,
        perturbed_solve_fn=_circle_perturbed_factory(problem),
        oracle_residual_fn=oracle_residual_fn,
        default_ns=(8, 16, 32),
    )


def holder_series_poly(alpha, degree=1024, seed=12):
    """Trigonometric sum with coefficient decay (1+|k|)^{-(1+alpha)}.

    Its best-approximation numbers behave like n^{-alpha} for n well below
    the truncation degree, which certifies the Holder exponent for order
    studies at desk scale.
    """
    rng = np.random.default_rng(seed)
    k = np.arange(-degree, degree + 1)
    phases = np.exp(1j * rng.uniform(0, _TWO_PI, k.size))
    coeffs = phases / (1.0 + np.abs(k)) ** (1.0 + alpha)
    coeffs[degree] = 1.0
    return TrigPoly(degree, coeffs)


def manufactured_circle_alpha(alpha=0.75, seed=12):
    """Holder-class circle problem with exact rhs (eta = 0, exact trapezoid).

    The solution is a truncated |sin|^alpha-style modulated trigonometric sum;
    because it is exactly a finite sum, S x* is exact mode algebra and the
    compact term is integrated exactly by the trapezoid rule, so the
    (x*, f) pair carries no quadrature error.
    """
    from .circle import CircleProblem, solve

    x_star = holder_series_poly(alpha, seed=seed)
    sx_star = cauchy_apply(x_star)

    def a(t):
        return 3.0 + 0.3 * (t + 1.0 / t) / 2.0

    def b(t):
        return 1.0 + 0.2 * (t - 1.0 / t) / (2j)

    def h(t, tau):
        return 0.2 * (1.0 + (tau / t).real)

    # exact trapezoid grid for the compact term: product degree is
    # deg(x*) + deg(h) + 1, any M beyond twice that integrates exactly
    M = 2 * (x_star.n + 4) + 2
    sigma = _TWO_PI * np.arange(M) / M
    tau_grid = np.exp(1j * sigma)
    x_grid = x_star(sigma)

    def f(t):
        compact = np.sum(h(t, tau_grid) * x_grid * tau_grid) / M
        return a(t) * x_star.eval_point(t) + b(t) * sx_star.eval_point(t) + compact

    problem = CircleProblem(a=a, b=b, h=h, f=f, eta=0.0)

    def solve_fn(n, scheme="basic"):
        sol = solve(problem, n, scheme=scheme)
        return sol.nodal, NodeSet(n).points

    def oracle_residual_fn(rng, points):
        # S by the PV trapezoid oracle; the compact term by exact coefficient
        # algebra for this h: 0.2 [c_{-1} + (c_{-2}/t + t c_0)/2]
        worst = 0.0
        for _ in range(points):
            s = rng.uniform(0, _TWO_PI)
            t = np.exp(1j * s)
            sx = circle_pv_cauchy(lambda sig: x_star(sig), x_star.coeff(0), s,
                                  resolution=4096)
            compact = 0.2 * (x_star.coeff(-1)
                             + (x_star.coeff(-2) / t + t * x_star.coeff(0)) / 2.0)
            lhs = a(t) * x_star.eval_point(t) + b(t) * sx + compact
            worst = max(worst, abs(lhs - f(t)))
        return worst

    return ManufacturedCase(
        name=f"circle-alpha{alpha}",
        family="circle_linear",
        smoothness=f"H_{alpha}",
        problem=problem,
        exact=x_star.eval_point,
        solve_fn=solve_fn,
        perturbed_solve_fn=_circle_perturbed_factory(problem),
        oracle_residual_fn=oracle_residual_fn,
        default_ns=(8, 16, 32, 64),
    )


def _circle_perturbed_factory(problem):
    """Stability re-solver: perturb a, b, f samples at the collocation nodes."""
    from .circle import CircleProblem, solve

    def perturbed_solve(n, eps, rng, scheme="basic"):
        nodes = NodeSet(n)
        pts = nodes.points
        pa = _perturbed_callable(problem.a, pts, _complex_noise(rng, nodes.count, eps))
        pb = (None if problem.b is None else
              _perturbed_callable(problem.b, pts, _complex_noise(rng, nodes.count, eps)))
        pf = _perturbed_callable(problem.f, pts, _complex_noise(rng, nodes.count, eps))
        pp = CircleProblem(a=pa, b=pb, h=problem.h, f=pf,
                           eta=problem.eta, kernel_form=problem.kernel_form)
        return solve(pp, n, scheme=scheme).nodal

    return perturbed_solve


def manufactured_spline_segment():
    """Smooth segment problem for the spline-collocation scheme.

    f is produced by the Cauchy-weight PV oracle plus adaptive quadrature of
    the compact part; the dominance target grows with ln n to stay ahead of
    the off-diagonal log growth.
    """
    from .quadrature import adaptive_gauss, pv_segment_oracle
    from .splines import SegmentProblem, solve_linear, tune_params

    x_star = lambda t: 0.3 + 0.5 * t - 0.2 * t ** 2
    a = lambda t: 2.5 + 0.3 * t
    b = lambda t: 1.0 + 0.2 * t
    h = lambda t, tau: 0.3 * np.exp(-((t - tau) ** 2))

    def f(t):
        # the scheme integrates the bare kernel 1/(tau - t); the PV oracle
        # carries a 1/pi that must be undone
        pv = pv_segment_oracle(lambda th: x_star(np.cos(th)) * np.sin(th), float(t))
        compact = adaptive_gauss(lambda tau: h(t, tau) * x_star(tau), -1.0, 1.0, tol=1e-11)
        return a(t) * x_star(t) + b(t) * np.pi * pv + compact

    problem = SegmentProblem(a=a, b=b, f=f, h=h)

    def solve_fn(n, r=2):
        params = tune_params(problem, n=n, r=r, M=4.0 + 2.0 * np.log(n))
        values, nodes, _ = solve_linear(problem, params)
        return values, nodes

    def oracle_residual_fn(rng, points):
        worst = 0.0
        for _ in range(points):
            t = rng.uniform(-0.95, 0.95)
            pv = pv_segment_oracle(lambda th: x_star(np.cos(th)) * np.sin(th), float(t))
            compact = adaptive_gauss(lambda tau: h(t, tau) * x_star(tau), -1.0, 1.0,
                                     tol=1e-11)
            worst = max(worst, abs(a(t) * x_star(t) + b(t) * np.pi * pv
                                   + compact - f(t)))
        return worst

    return ManufacturedCase(
        name="spline-segment-smooth",
        family="spline_segment",
        smoothness="analytic",
        problem=problem,
        exact=x_star,
        solve_fn=solve_fn,
        oracle_residual_fn=oracle_residual_fn,
        default_ns=(8, 16, 32),
    )


def manufactured_exceptional_circle():
    """Degenerate-symbol circle problem (a^2 = b^2 on the whole circle).

    f is built by exact mode algebra: the Hilbert term via the coefficient
    map, the compact term by an exact trapezoid on the finite trigonometric
    data.
    """
    from .exceptional import solve_circle_exceptional
    from .trig import hilbert_apply

    c = np.array([0.15, -0.3, 0.4j, 0.0, 1.0, 0.25, 0.1], dtype=complex)
    c[3] = 0.0  # zero-mean
    x_star = TrigPoly(3, c)
    hx = hilbert_apply(x_star)
    a = lambda s: 1.0 + 0.3 * np.cos(s)
    b = lambda s: 1.0 + 0.3 * np.cos(s)  # a^2 - b^2 == 0 everywhere
    hker = lambda s, sig: 0.1 * np.cos(s - sig)
    M = 64
    sigma = _TWO_PI * np.arange(M) / M
    x_grid = x_star(sigma)

    def fredholm(s):
        return np.sum(hker(s, sigma) * x_grid) * _TWO_PI / M

    def f(s):
        return a(s) * x_star(s) + b(s) * hx(s) + fredholm(s)

    def solve_fn(n):
        x, s_star, rep = solve_circle_exceptional(a=a, b=b, f=f, hker=hker, n=n)
        return x, s_star

    def perturbed_solve_fn(n, eps, rng):
        noise = {}

        def wrap(fn):
            def inner(s):
                key = round(float(s), 12)
                if key not in noise:
                    noise[key] = {}
                if fn not in noise[key]:
                    noise[key][fn] = complex(_complex_noise(rng, (), eps))
                return fn(s) + noise[key][fn]
            return inner

        x, s_star, rep = solve_circle_exceptional(a=wrap(a), b=wrap(b), f=wrap(f),
                                                  hker=hker, n=n)
        return x

    def oracle_residual_fn(rng, points):
        from .quadrature import pv_oracle

        worst = 0.0
        for _ in range(points):
            s = rng.uniform(0, _TWO_PI)
            hil = pv_oracle(lambda sig: x_star(sig), s, 4096)
            lhs = a(s) * x_star(s) + b(s) * hil + fredholm(s)
            worst = max(worst, abs(lhs - f(s)))
        return worst

    return ManufacturedCase(
        name="exceptional-circle-degenerate",
        family="exceptional",
        smoothness="analytic",
        problem={"a": a, "b": b, "h": hker, "f": f},
        exact=lambda s: x_star(float(s)),
        solve_fn=solve_fn,
        perturbed_solve_fn=perturbed_solve_fn,
        oracle_residual_fn=oracle_residual_fn,
        default_ns=(8, 16, 32),
    )


def manufactured_nonlinear_circle(magnitude=0.05):
    """Quadratic nonlinearity of the given magnitude around a dominant part.

    The right-hand side is exact: the Cauchy term is mode algebra on the
    polynomial solution, the nonlinear a-term is evaluated pointwise.
    """
    from .nonlinear import NewtonConfig, NonlinearCircleProblem, solve_scheme

    x_star = TrigPoly(3, np.array([0.1j, -0.2, 0.45, 0.8, 0.3, 0.1, 0.05j],
                                  dtype=complex))
    sx = cauchy_apply(x_star)

    problem = NonlinearCircleProblem(
        a=lambda t, u: 2.0 * u + magnitude * u ** 2,
        h=lambda t, tau, u: u,
        f=lambda t: (2.0 * x_star.eval_point(t)
                     + magnitude * x_star.eval_point(t) ** 2
                     + sx.eval_point(t)),
        da=lambda t, u: 2.0 + 2.0 * magnitude * u,
        dh=lambda t, tau, u: 1.0,
        d2h=lambda t, tau, u: 0.0,
    )

    def solve_fn(n, scheme=1, mode="basic"):
        x, poly, rep = solve_scheme(problem, n, scheme=scheme,
                                    config=NewtonConfig(mode=mode))
        return x, NodeSet.shifted(n).points if scheme == 2 else NodeSet(n).points

    def oracle_residual_fn(rng, points):
        worst = 0.0
        for _ in range(points):
            s = rng.uniform(0, _TWO_PI)
            t = np.exp(1j * s)
            sx_val = circle_pv_cauchy(lambda sig: x_star(sig), x_star.coeff(0), s)
            lhs = (2.0 * x_star.eval_point(t) + magnitude * x_star.eval_point(t) ** 2
                   + sx_val)
            worst = max(worst, abs(lhs - problem.f(t)))
        return worst

    return ManufacturedCase(
        name=f"nonlinear-circle-quad{magnitude}",
        family="nonlinear_circle",
        smoothness="analytic",
        problem=problem,
        exact=x_star.eval_point,
        solve_fn=solve_fn,
        oracle_residual_fn=oracle_residual_fn,
        default_ns=(8, 16, 32),
    )


def manufactured_bisingular():
    """Torus problem a x + d S12 x = f with exact mode-algebra rhs."""
    from .bisingular import (BisingularProblem, TrigPoly2D, grid_angles,
                             s12_apply, solve_collocation)

    n_star = 2
    rng = np.random.default_rng(21)
    m = 2 * n_star + 1
    coeffs = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / 4.0
    coeffs[n_star, n_star] = 1.0
    x_star = TrigPoly2D(n_star, coeffs)
    sx = s12_apply(x_star)

    def a(t1, t2):
        return 3.0 + 0.2 * (t1 + 1.0 / t1) / 2.0

    def d(t1, t2):
        return 1.0 + 0.1 * (t2 + 1.0 / t2) / 2.0

    def f(t1, t2):
        return a(t1, t2) * x_star.eval_point(t1, t2) + d(t1, t2) * sx.eval_point(t1, t2)

    problem = BisingularProblem(a=a, d=d, f=f)

    def solve_fn(n):
        coeffs_sol, density, rep = solve_collocation(problem, n, factor_degree=2 * n)
        s = grid_angles(n)
        pts = np.exp(1j * s)
        values = np.array([density(u1, u2) for u1 in pts for u2 in pts])
        locations = [(u1, u2) for u1 in pts for u2 in pts]
        return values, locations

    def perturbed_solve_fn(n, eps, rng2):
        from .bisingular import factorize

        # unperturbed factorization stays; only the collocation samples move
        mdeg = 2 * n
        pts_f = np.exp(1j * grid_angles(mdeg))
        g = np.array([[problem.symbol(u1, u2) for u2 in pts_f] for u1 in pts_f])
        factor = factorize(g, mdeg)

        noise = {}

        def wrap(fn):
            def inner(t1, t2):
                key = (round(complex(t1).real, 12), round(complex(t1).imag, 12),
                       round(complex(t2).real, 12), round(complex(t2).imag, 12))
                bucket = noise.setdefault(key, {})
                if fn not in bucket:
                    bucket[fn] = complex(_complex_noise(rng2, (), eps))
                return fn(t1, t2) + bucket[fn]
            return inner

        perturbed = BisingularProblem(a=wrap(a), d=wrap(d), f=wrap(f))
        coeffs_sol, density, rep = solve_collocation(perturbed, n, factor=factor)
        s = grid_angles(n)
        pts = np.exp(1j * s)
        return np.array([density(u1, u2) for u1 in pts for u2 in pts])

    def oracle_residual_fn(rng2, points):
        # independent S12 route: tensor application of the 1-D PV oracle
        from .quadrature import pv_oracle

        worst = 0.0
        for _ in range(max(points // 8, 4)):
            s1 = rng2.uniform(0, _TWO_PI)
            s2 = rng2.uniform(0, _TWO_PI)
            t1, t2 = np.exp(1j * s1), np.exp(1j * s2)
            # S12 = (mean_1 - i H_1)(mean_2 - i H_2) applied tensor-wise
            rows = []
            for k in x_star.modes:
                row_poly = TrigPoly(x_star.n, x_star.coeffs[k + x_star.n, :])
                val = (row_poly.coeff(0)
                       - 1j * pv_oracle(lambda sig: row_poly(sig), s2, 2048))
                rows.append(val)
            col_poly = TrigPoly(x_star.n, np.array(rows))
            s12_val = (col_poly.coeff(0)
                       - 1j * pv_oracle(lambda sig: col_poly(sig), s1, 2048))
            lhs = a(t1, t2) * x_star.eval_point(t1, t2) + d(t1, t2) * s12_val
            worst = max(worst, abs(lhs - f(t1, t2)))
        return worst

    return ManufacturedCase(
        name="bisingular-smooth",
        family="bisingular",
        smoothness="analytic",
        problem=problem,
        exact=lambda loc: x_star.eval_point(*loc),
        solve_fn=solve_fn,
        perturbed_solve_fn=perturbed_solve_fn,
        oracle_residual_fn=oracle_residual_fn,
        default_ns=(4, 8, 12),
    )


def manufactured_multidim():
    """Two-dimensional singular problem with the sin 2theta characteristic.

    The rhs integrates the exact polynomial solution by the principal-value
    ring cubature over the whole domain; the centered shift keeps the scheme
    consistent (the dropped neighbour ring carries zero moment there).
    """
    from .multidim import (Problem2D, assemble_solve, build_grid,
                           characteristic_sin2, panel_coeff, solution_nodes)

    A = 1.0
    char = characteristic_sin2()
    x_star = lambda X, Y: 0.5 + 0.3 * X - 0.2 * Y + 0.15 * X * Y
    a = lambda x, y: 1.0 + 0.1 * x
    b = lambda x, y: 0.1

    def f(x, y):
        pv = panel_coeff((x, y), (-A, A, -A, A), char, density=x_star, tol=1e-9)
        return a(x, y) * x_star(np.asarray(x), np.asarray(y)) + b(x, y) * pv

    problem = Problem2D(a=a, b=b, f=f, char=char)

    def solve_fn(n, shift=None):
        cell = 2.0 * A / (n + 2)
        grid = build_grid(n, A, shift or (cell / 2, cell / 2))
        sol, rep = assemble_solve(problem, grid)
        nodes = solution_nodes(grid)
        return sol.reshape(-1), [tuple(p) for p in nodes.reshape(-1, 2)]

    def perturbed_solve_fn(n, eps, rng, shift=None):
        cell = 2.0 * A / (n + 2)
        grid = build_grid(n, A, shift or (cell / 2, cell / 2))
        noise = {}

        def wrap(fn):
            def inner(x, y):
                key = (round(float(x), 12), round(float(y), 12))
                bucket = noise.setdefault(key, {})
                if fn not in bucket:
                    bucket[fn] = complex(_complex_noise(rng, (), eps))
                return fn(x, y) + bucket[fn]
            return inner

        perturbed = Problem2D(a=wrap(a), b=b, f=wrap(f), char=char)
        sol, rep = assemble_solve(perturbed, grid)
        return sol.reshape(-1)

    def oracle_residual_fn(rng, points):
        # cross-check the ring PV cubature against dyadic corner rectangles
        # resolved by the arctan-free adaptive rule
        from .multidim import adaptive_rect, _kernel_factory

        worst = 0.0
        for _ in range(max(points // 16, 2)):
            tx = rng.uniform(-0.4, 0.4)
            ty = rng.uniform(-0.4, 0.4)
            pv = panel_coeff((tx, ty), (-A, A, -A, A), char, density=x_star,
                             tol=1e-10)
            fker = _kernel_factory(char, (tx, ty), density=x_star)
            eps_ex = 1e-7
            total = 0.0
            for rx in ((-A, tx - eps_ex), (tx + eps_ex, A)):
                for ry in ((-A, ty - eps_ex), (ty + eps_ex, A)):
                    total += adaptive_rect(fker, (rx[0], rx[1], ry[0], ry[1]),
                                           tol=5e-8, max_depth=40)
            worst = max(worst, abs(pv - total))
        return worst

    return ManufacturedCase(
        name="multidim-sin2-smooth",
        family="multidim2d",
        smoothness="analytic",
        problem=problem,
        exact=lambda loc: x_star(loc[0], loc[1]),
        solve_fn=solve_fn,
        perturbed_solve_fn=perturbed_solve_fn,
        oracle_residual_fn=oracle_residual_fn,
        default_ns=(8, 16, 32),
    )


MANUFACTURED_FAMILIES = {
    "circle_linear": manufactured_circle_alpha,
    "circle_weak": manufactured_circle_weak_smooth,
    "spline_segment": manufactured_spline_segment,
    "exceptional": manufactured_exceptional_circle,
    "nonlinear_circle": manufactured_nonlinear_circle,
    "bisingular": manufactured_bisingular,
    "multidim2d": manufactured_multidim,
}


# ---------------------------------------------------------------------------
# reports


@dataclass
class ConvergenceReport:
    case: str
    ns: list
    errors: list
    fitted_order: float
    monotone: bool
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "kind": "convergence",
            "case": self.case,
            "ns": list(self.ns),
            "errors": [float(e) for e in self.errors],
            "fitted_order": None if self.fitted_order is None else float(self.fitted_order),
            "monotone": bool(self.monotone),
            "metadata": self.metadata,
        }


@dataclass
class StabilityReport:
    case: str
    n: int
    epsilons: list
    deviations: list
    ratios: list
    failures: list
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "kind": "stability",
            "case": self.case,
            "n": self.n,
            "epsilons": [float(e) for e in self.epsilons],
            "deviations": [float(d) for d in self.deviations],
            "ratios": [None if r is None else float(r) for r in self.ratios],
            "failures": self.failures,
            "metadata": self.metadata,
        }


def run_convergence(case: ManufacturedCase, ns=None, **solve_kwargs):
    """Solve at each n, record grid-max errors against the exact solution."""
    ns = list(case.default_ns if ns is None else ns)
    if len(ns) < 3 or any(b <= a for a, b in zip(ns, ns[1:])):
        raise InputError("need a strictly increasing list of at least 3 n values")
    errors = []
    for n in ns:
        values, locations = case.solve_fn(n, **solve_kwargs)
        exact = np.array([case.exact(p) for p in locations], dtype=complex)
        errors.append(float(np.abs(values - exact).max()))
    roundoff = all(e < 1e-12 for e in errors)
    order = None if roundoff else fit_order(ns, errors)
    monotone = all(b < 2.0 * a for a, b in zip(errors, errors[1:]))
    return ConvergenceReport(case=case.name, ns=ns, errors=errors,
                             fitted_order=order, monotone=monotone,
                             metadata={"solve_kwargs": {k: str(v) for k, v in solve_kwargs.items()},
                                       "roundoff": roundoff})


def run_stability(case: ManufacturedCase, n=None, epsilons=(1e-2, 1e-3, 1e-4), seed=0,
                  **solve_kwargs):
    """Perturb coefficient and rhs samples, re-solve, record deviations."""
    if case.perturbed_solve_fn is None:
        raise InputError(f"case {case.name} has no perturbation path")
    n = case.default_ns[-1] if n is None else n
    base, _ = case.solve_fn(n, **solve_kwargs)
    deviations, ratios, failures = [], [], []
    for i, eps in enumerate(epsilons):
        rng = np.random.default_rng(seed + i)
        if eps == 0.0:
            pert = base
        else:
            try:
                pert = case.perturbed_solve_fn(n, eps, rng, **solve_kwargs)
            except Exception as exc:  # recorded, not fatal
                failures.append({"epsilon": float(eps), "error": repr(exc)})
                deviations.append(float("nan"))
                ratios.append(None)
                continue
        dev = float(np.abs(np.asarray(pert) - np.asarray(base)).max())
        deviations.append(dev)
        ratios.append(None if eps == 0.0 else dev / eps)
    return StabilityReport(case=case.name, n=n, epsilons=list(epsilons),
                           deviations=deviations, ratios=ratios, failures=failures)


def emit_report(report, path, fmt="json"):
    """Deterministic serialization; identical inputs give byte-identical files."""
    payload = report.to_dict() if hasattr(report, "to_dict") else report
    if fmt == "json":
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    elif fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if payload.get("kind") == "convergence":
            writer.writerow(["n", "error"])
            for n, e in zip(payload["ns"], payload["errors"]):
                writer.writerow([n, repr(float(e))])
        elif payload.get("kind") == "stability":
            writer.writerow(["epsilon", "deviation", "ratio"])
            for eps, d, r in zip(payload["epsilons"], payload["deviations"], payload["ratios"]):
                writer.writerow([repr(float(eps)), repr(float(d)),
                                 "" if r is None else repr(float(r))])
        else:
            writer.writerow(sorted(payload))
            writer.writerow([payload[k] for k in sorted(payload)])
        text = buf.getvalue()
    else:
        raise InputError(f"unknown report format {fmt!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path


def load_report(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)

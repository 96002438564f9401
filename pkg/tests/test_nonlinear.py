import numpy as np
import pytest

from sie_lab.errors import DivergenceError, InputError
from sie_lab.nonlinear import (
    NewtonConfig,
    NonlinearCircleProblem,
    jacobian_scheme1,
    jacobian_scheme2,
    jacobian_scheme3,
    l2_descent,
    newton_solve,
    residual_scheme1,
    residual_scheme2,
    residual_scheme3,
    solve_scheme,
)
from sie_lab.trig import NodeSet, TrigPoly, cauchy_apply


def linear_problem(a_coef=2.0, f=lambda t: 3.0 * t):
    # a(t,u) = a_coef * u, h(t,tau,u) = u: the classical dominant equation
    return NonlinearCircleProblem(
        a=lambda t, u: a_coef * u,
        h=lambda t, tau, u: u,
        f=f,
        da=lambda t, u: a_coef,
        dh=lambda t, tau, u: 1.0,
        d2h=lambda t, tau, u: 0.0,
    )


class TestResiduals:
    def test_scheme1_identity_case(self):
        # h = 0, a(t,u) = u: residual is x - f at nodes
        p = NonlinearCircleProblem(a=lambda t, u: u, h=lambda t, tau, u: 0.0,
                                   f=lambda t: t, da=lambda t, u: 1.0,
                                   dh=lambda t, tau, u: 0.0, d2h=lambda t, tau, u: 0.0)
        n = 4
        nodes = NodeSet(n)
        x = nodes.points ** 2
        r = residual_scheme1(p, x, n)
        assert np.abs(r - (x - nodes.points)).max() < 1e-13

    def test_scheme1_linear_jacobian_is_state_independent(self):
        p = linear_problem()
        n = 5
        rng = np.random.default_rng(0)
        x1 = rng.standard_normal(2 * n + 1) + 1j * rng.standard_normal(2 * n + 1)
        x2 = rng.standard_normal(2 * n + 1) + 1j * rng.standard_normal(2 * n + 1)
        j1 = jacobian_scheme1(p, x1, n)
        j2 = jacobian_scheme1(p, x2, n)
        assert np.abs(j1 - j2).max() < 1e-13
        # and the residual is the affine map J x - f
        r = residual_scheme1(p, x1, n)
        f_vals = np.array([p.f(t) for t in NodeSet(n).points])
        assert np.abs(r - (j1 @ x1 - f_vals)).max() < 1e-11

    @pytest.mark.parametrize("scheme,res,jac", [
        (1, residual_scheme1, jacobian_scheme1),
        (2, residual_scheme2, jacobian_scheme2),
        (3, residual_scheme3, jacobian_scheme3),
    ])
    def test_jacobians_match_finite_differences(self, scheme, res, jac):
        # random cubic nonlinearity
        p = NonlinearCircleProblem(
            a=lambda t, u: 2.0 * u + 0.1 * u ** 3,
            h=lambda t, tau, u: u + 0.05 * u ** 2,
            f=lambda t: t + 1.0,
            da=lambda t, u: 2.0 + 0.3 * u ** 2,
            dh=lambda t, tau, u: 1.0 + 0.1 * u,
            d2h=lambda t, tau, u: 0.1,
        )
        n = 4
        m = 2 * n + 1
        rng = np.random.default_rng(1)
        x = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        j = jac(p, x, n)
        step = 1e-6
        fd = np.zeros_like(j)
        for k in range(m):
            e = np.zeros(m, dtype=complex)
            e[k] = step
            fd[:, k] = (res(p, x + e, n) - res(p, x - e, n)) / (2 * step)
        scale = np.abs(j).max()
        assert np.abs(j - fd).max() / scale < 1e-5

    def test_scheme2_diagonal_is_finite(self):
        n = 3
        # cot argument at k = j is -pi/(4n+2), finite
        w = 1.0 - 1j / np.tan(-np.pi / (4 * n + 2))
        assert np.isfinite(w.real) and np.isfinite(w.imag)

    def test_scheme2_pure_interpolation_rows(self):
        # a(t,u) = u, h = 0: rows read x_n(shifted node) = f(node)
        p = NonlinearCircleProblem(a=lambda t, u: u, h=lambda t, tau, u: 0.0,
                                   f=lambda t: t ** 2, da=lambda t, u: 1.0,
                                   dh=lambda t, tau, u: 0.0, d2h=lambda t, tau, u: 0.0)
        n = 4
        x, poly, rep = solve_scheme(p, n, scheme=2,
                                    config=NewtonConfig(mode="basic", tol=1e-13))
        shifted = NodeSet.shifted(n)
        nodes = NodeSet(n)
        assert np.abs(x - nodes.points ** 2).max() < 1e-11

    def test_scheme3_reduces_to_exact_cauchy(self):
        # h(t,tau,u) = u: rows are a(.,x) + (S x)(shifted) - f
        p = linear_problem()
        n = 5
        rng = np.random.default_rng(2)
        poly = TrigPoly(n, rng.standard_normal(2 * n + 1) + 1j * rng.standard_normal(2 * n + 1))
        nodes = NodeSet(n)
        x = poly(nodes.angles)
        r = residual_scheme3(p, x, n)
        sbar = NodeSet.shifted(n).angles
        expect = 2.0 * poly(sbar) + cauchy_apply(poly)(sbar) - 3.0 * np.exp(1j * sbar)
        assert np.abs(r - expect).max() < 1e-11

    def test_scheme3_linear_kernel_algebraic(self):
        # h(t,tau,u) = tau * u with x of degree <= n-1: interpolation of
        # tau*x(tau) is exact, so the residual matches the mode expansion
        p = NonlinearCircleProblem(a=lambda t, u: 0.0, h=lambda t, tau, u: tau * u,
                                   f=lambda t: 0.0, da=lambda t, u: 0.0,
                                   dh=lambda t, tau, u: tau, d2h=lambda t, tau, u: 0.0)
        n = 5
        rng = np.random.default_rng(3)
        low = TrigPoly(n - 1, rng.standard_normal(2 * n - 1) + 0j)
        nodes = NodeSet(n)
        x = low(nodes.angles)
        r = residual_scheme3(p, x, n)
        shifted = TrigPoly(n, np.concatenate([[0.0], low.coeffs, [0.0]]) * 0)
        # S(tau x) evaluated exactly: shift modes up by one, apply signs
        c = np.zeros(2 * n + 1, dtype=complex)
        c[(np.arange(-n + 1, n) + 1) + n] = low.coeffs
        s_shift = cauchy_apply(TrigPoly(n, c))
        sbar = NodeSet.shifted(n).angles
        assert np.abs(r - s_shift(sbar)).max() < 1e-11


class TestNewton:
    def test_scalar_basic_quadratic_convergence(self):
        res = lambda x: x ** 2 - 1.0
        jac = lambda x: np.array([[2.0 * x[0]]])
        x, rep = newton_solve(lambda x: res(x), jac, np.array([2.0 + 0j]),
                              NewtonConfig(mode="basic", tol=1e-14))
        assert abs(x[0] - 1.0) < 1e-13
        rs = [r for r in rep.residuals if r > 1e-13]
        # doubling digits: r_{m+1} <= C r_m^2 on the meaningful stretch
        for a, b in zip(rs, rs[1:]):
            assert b <= 0.6 * a ** 2 / rs[0] * rs[0] + 1e-14 or b <= a ** 1.8

    def test_scalar_modified_linear_ratio(self):
        res = lambda x: x ** 2 - 1.0
        jac = lambda x: np.array([[2.0 * x[0]]])
        x, rep = newton_solve(res, jac, np.array([2.0 + 0j]),
                              NewtonConfig(mode="modified", max_iter=200, tol=1e-12))
        assert abs(x[0] - 1.0) < 1e-11
        tail = [r for r in rep.ratios[-6:] if r > 0]
        assert np.allclose(tail, 0.5, atol=0.05)  # ratio -> |1 - x*/x0| = 1/2

    def test_linear_residual_single_step(self):
        a = np.array([[3.0, 1.0], [0.0, 2.0]], dtype=complex)
        b = np.array([1.0, 4.0], dtype=complex)
        res = lambda x: a @ x - b
        jac = lambda x: a
        x, rep = newton_solve(res, jac, np.zeros(2, dtype=complex),
                              NewtonConfig(mode="basic"))
        assert rep.iterations == 1 and rep.converged

    def test_right_inverse_mode(self):
        # rectangular residual: least-squares Newton converges on a
        # consistent overdetermined linear system
        a = np.array([[2.0, 0.0], [0.0, 1.0], [1.0, 1.0]], dtype=complex)
        x_true = np.array([1.0, -0.5], dtype=complex)
        b = a @ x_true
        x, rep = newton_solve(lambda x: a @ x - b, lambda x: a,
                              np.zeros(2, dtype=complex),
                              NewtonConfig(mode="right_inverse"))
        assert np.abs(x - x_true).max() < 1e-12

    def test_divergence_reported(self):
        # residual with no zero: |x|^2 + 1 stagnates
        res = lambda x: np.array([x[0] * 0 + 1.0 + 0j])
        jac = lambda x: np.array([[1.0 + 0j]])
        with pytest.raises(DivergenceError) as err:
            newton_solve(res, jac, np.array([0.0 + 0j]), NewtonConfig(max_iter=20))
        assert len(err.value.history) > 1

    def test_nonlinear_circle_solve_small_perturbation(self):
        # b(s, sigma, u) analog: quadratic nonlinearity of magnitude 0.01
        p = NonlinearCircleProblem(
            a=lambda t, u: 2.0 * u,
            h=lambda t, tau, u: u + 0.01 * u ** 2,
            f=lambda t: 3.0 * t + 0.5,
            da=lambda t, u: 2.0,
            dh=lambda t, tau, u: 1.0 + 0.02 * u,
            d2h=lambda t, tau, u: 0.02,
        )
        x, poly, rep = solve_scheme(p, 8, scheme=1,
                                    config=NewtonConfig(mode="basic", tol=1e-12))
        assert rep.converged
        dec = [b / a for a, b in zip(rep.residuals, rep.residuals[1:]) if a > 1e-13]
        assert all(d < 1.0 for d in dec)

    def test_derivative_consistency_check(self):
        bad = NonlinearCircleProblem(
            a=lambda t, u: u ** 2, h=lambda t, tau, u: u, f=lambda t: t,
            da=lambda t, u: 3.0 * u,  # wrong derivative
            dh=lambda t, tau, u: 1.0, d2h=lambda t, tau, u: 0.0)
        with pytest.raises(InputError):
            bad.check_derivatives()
        good = linear_problem()
        assert good.check_derivatives() < 1e-5


class TestDescent:
    def test_already_solved_returns_immediately(self):
        p = linear_problem()
        n = 4
        # exact discrete solution of scheme 3 for the dominant problem
        x, poly, _ = solve_scheme(p, n, scheme=3, config=NewtonConfig())
        x2, hist = l2_descent(p, n, x0=x)
        assert len(hist) == 1
        assert np.abs(x2 - x).max() == 0

    def test_identity_operator_single_step(self):
        p = NonlinearCircleProblem(a=lambda t, u: u, h=lambda t, tau, u: 0.0,
                                   f=lambda t: t + 0.3, da=lambda t, u: 1.0,
                                   dh=lambda t, tau, u: 0.0, d2h=lambda t, tau, u: 0.0)
        n = 4
        x, hist = l2_descent(p, n)
        assert len(hist) == 2
        assert hist[-1] < 1e-12

    def test_linear_monotone_convergence(self):
        p = linear_problem(a_coef=2.0, f=lambda t: 1.0 + 0.5 * t)
        x, hist = l2_descent(p, 6, tol=1e-9)
        assert hist[-1] < 1e-8
        assert all(b <= a * (1 + 1e-12) for a, b in zip(hist, hist[1:]))


class TestCrossScheme:
    def test_all_three_schemes_agree_on_linear_problem(self):
        # schemes 1 and 2 are quadrature rules with O(1/n) consistency error
        # even on polynomial data; agreement is judged against the larger of
        # the measured discretization errors
        f = lambda t: 2.0 + t + 0.5 / t
        exact = lambda s: 2.0 / 3.0 + np.exp(1j * s) / 3.0 + 0.5 * np.exp(-1j * s)
        p = linear_problem(a_coef=2.0, f=f)
        s = np.linspace(0, 2 * np.pi, 61)
        vals, errs = {}, {}
        for scheme in (1, 2, 3):
            nodal, poly, _ = solve_scheme(p, 32, scheme=scheme,
                                          config=NewtonConfig(mode="basic"))
            vals[scheme] = poly(s)
            errs[scheme] = np.abs(poly(s) - exact(s)).max()
        assert errs[3] < 1e-10  # scheme 3 is exact on polynomial data
        for i in (1, 2):
            for j in (2, 3):
                if i < j:
                    bound = 2.0 * max(errs[i], errs[j]) + 1e-10
                    assert np.abs(vals[i] - vals[j]).max() <= bound

    def test_scheme1_vs_scheme2_converge_together(self):
        f = lambda t: 1.0 + t
        p = linear_problem(a_coef=3.0, f=f)
        diffs = []
        for n in (8, 16, 32):
            x1, poly1, _ = solve_scheme(p, n, scheme=1, config=NewtonConfig())
            x2, poly2, _ = solve_scheme(p, n, scheme=2, config=NewtonConfig())
            s = np.linspace(0, 2 * np.pi, 41)
            diffs.append(np.abs(poly1(s) - poly2(s)).max())
        assert diffs[-1] <= diffs[0] * 1.01

import numpy as np
import pytest

from sie_lab.errors import DomainError, InputError
from sie_lab.segment import (
    SegmentDominantProblem,
    WeightedSolution,
    chebyshev_u_nodes,
    dominant_apply_oracle,
    eval_solution,
    integral_gauss_chebyshev,
    jacobi_eval,
    jacobi_roots,
    nodes_index0,
    solve_index0,
    solve_index1,
)


class TestNodes:
    def test_single_root_matches_bisection_oracle(self):
        # P_1^(1/2,-1/2)(t) = t + 1/2 vanishes at -1/2
        roots = nodes_index0(0)
        assert roots.shape == (1,)
        assert roots[0] == pytest.approx(-0.5, abs=1e-12)

    def test_all_nodes_interior(self):
        t = nodes_index0(12)
        assert np.all((t > -1.0) & (t < 1.0))
        assert np.all(np.diff(t) < 0)  # strictly decreasing

    def test_residual_of_recurrence_polynomial(self):
        t = nodes_index0(16)
        res = np.abs(jacobi_eval(17, 0.5, -0.5, t))
        assert res.max() < 1e-12

    def test_closed_form_angles(self):
        # P^(1/2,-1/2) is the fourth-kind Chebyshev family: roots of degree
        # n+1 sit at cos(j pi/(n + 3/2)), j = 1..n+1
        n = 7
        got = nodes_index0(n)
        j = np.arange(1, n + 2)
        expect = np.cos(j * np.pi / (n + 1.5))
        assert np.abs(np.sort(got) - np.sort(expect)).max() < 1e-12

    def test_u_nodes(self):
        t = chebyshev_u_nodes(4)
        theta = np.arccos(t)
        assert np.abs(np.sin(5 * theta)).max() < 1e-12


class TestIndexZero:
    def test_single_jacobi_mode(self):
        # f = c P_0^(1/2,-1/2): the solution is the weighted constant mode
        prob = SegmentDominantProblem(f=lambda t: 2.5, index="zero")
        sol = solve_index0(prob, 5)
        assert abs(sol.coefficients[0] - 2.5) < 1e-12
        assert np.abs(sol.coefficients[1:]).max() < 1e-12

    def test_zero_rhs(self):
        sol = solve_index0(SegmentDominantProblem(f=lambda t: 0.0, index="zero"), 6)
        assert np.abs(sol.coefficients).max() < 1e-13

    def test_p2_mode_against_pv_quadrature(self):
        # f = P_2^(1/2,-1/2) -> x = w P_2^(-1/2,1/2); forward apply via the
        # dense PV oracle must reproduce f
        prob = SegmentDominantProblem(f=lambda t: jacobi_eval(2, 0.5, -0.5, t), index="zero")
        sol = solve_index0(prob, 6)
        expect = np.zeros(7)
        expect[2] = 1.0
        assert np.abs(sol.coefficients - expect).max() < 1e-11
        for t in (-0.3, 0.44):
            fwd = dominant_apply_oracle(sol, t)
            assert fwd.real == pytest.approx(jacobi_eval(2, 0.5, -0.5, t), abs=1e-7)

    def test_nodal_identity(self):
        prob = SegmentDominantProblem(f=lambda t: np.cos(t) + 0.2 * t, index="zero")
        sol = solve_index0(prob, 9)
        assert np.abs(sol.nodal_values - np.array([prob.f(t) for t in sol.nodes])).max() == 0

    def test_wrong_index_rejected(self):
        with pytest.raises(InputError):
            solve_index0(SegmentDominantProblem(f=lambda t: t, index="one"), 4)


class TestIndexOne:
    def test_constant_rhs(self):
        # f = 1 = U_0, p = 0 -> x = T_1/sqrt(1-t^2)
        sol = solve_index1(SegmentDominantProblem(f=lambda t: 1.0, index="one", p=0.0), 6)
        expect = np.zeros(7)
        expect[1] = 1.0
        assert np.abs(sol.coefficients - expect).max() < 1e-12

    def test_homogeneous_mode(self):
        # f = 0, p = pi -> x = 1/sqrt(1-t^2)
        sol = solve_index1(SegmentDominantProblem(f=lambda t: 0.0, index="one", p=np.pi), 5)
        expect = np.zeros(6)
        expect[0] = 1.0
        assert np.abs(sol.coefficients - expect).max() < 1e-13

    def test_u2_rhs(self):
        theta = lambda t: np.arccos(t)
        f = lambda t: np.sin(3 * theta(t)) / np.sin(theta(t))  # U_2
        sol = solve_index1(SegmentDominantProblem(f=f, index="one", p=0.0), 8)
        expect = np.zeros(9)
        expect[3] = 1.0
        assert np.abs(sol.coefficients - expect).max() < 1e-11
        got = dominant_apply_oracle(sol, 0.37)
        assert got.real == pytest.approx(f(0.37), abs=1e-7)

    def test_forward_check_at_nodes(self):
        prob = SegmentDominantProblem(f=lambda t: np.exp(0.5 * t), index="one", p=1.0)
        for n in (8, 16):
            sol = solve_index1(prob, n)
            for t in sol.nodes[1:-1:3]:
                fwd = dominant_apply_oracle(sol, float(t))
                assert abs(fwd - prob.f(t)) < 1e-6

    def test_side_condition(self):
        prob = SegmentDominantProblem(f=lambda t: t ** 2, index="one", p=2.2)
        sol = solve_index1(prob, 10)
        assert integral_gauss_chebyshev(sol) == pytest.approx(2.2, abs=1e-8)


class TestEval:
    def test_zero_coefficients(self):
        sol = WeightedSolution("chebyshev_index1", np.zeros(4), np.zeros(0), np.zeros(0))
        assert eval_solution(sol, 0.3) == 0.0

    def test_constant_mode_at_origin(self):
        sol = WeightedSolution("chebyshev_index1", np.array([1.0]), np.zeros(0), np.zeros(0))
        assert eval_solution(sol, 0.0) == pytest.approx(1.0)

    def test_matches_naive_summation(self):
        rng = np.random.default_rng(3)
        c = rng.standard_normal(6)
        sol = WeightedSolution("chebyshev_index1", c, np.zeros(0), np.zeros(0))
        t = rng.uniform(-0.95, 0.95, 11)
        naive = sum(ck * np.cos(k * np.arccos(t)) for k, ck in enumerate(c))
        naive /= np.sqrt(1 - t ** 2)
        assert np.abs(eval_solution(sol, t) - naive).max() < 1e-12

        c2 = rng.standard_normal(5)
        sol2 = WeightedSolution("jacobi_index0", c2, np.zeros(0), np.zeros(0))
        naive2 = sum(ck * jacobi_eval(l, -0.5, 0.5, t) for l, ck in enumerate(c2))
        naive2 *= np.sqrt((1 + t) / (1 - t))
        assert np.abs(eval_solution(sol2, t) - naive2).max() < 1e-12

    def test_domain_error(self):
        sol = WeightedSolution("chebyshev_index1", np.ones(3), np.zeros(0), np.zeros(0))
        with pytest.raises(DomainError):
            eval_solution(sol, 1.0)

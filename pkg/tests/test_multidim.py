import numpy as np
import pytest

from sie_lab.errors import GridParameterError, InputError, TuningFailureError
from sie_lab.linalg import hadamard_margins
from sie_lab.multidim import (
    Characteristic,
    Problem2D,
    assemble_solve,
    assemble_spline,
    assemble_system,
    build_grid,
    characteristic_cos2,
    characteristic_cos3,
    characteristic_sin2,
    panel_coeff,
    parallel_solve,
    solution_nodes,
    solve_spline,
    tune_shift,
)


def closed_form_cos2(rect):
    # int (u^2 - v^2)/r^4 over an axis rectangle = -arctan(v/u) at the corners
    x0, x1, y0, y1 = rect
    F = lambda u, v: -np.arctan2(v, u)
    return F(x1, y1) - F(x0, y1) - F(x1, y0) + F(x0, y0)


class TestCharacteristic:
    def test_builtins_admissible(self):
        for factory in (characteristic_cos2, characteristic_sin2, characteristic_cos3):
            ch = factory()
            theta = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
            assert abs(np.mean(ch(theta))) < 1e-10
            for ray in ch.zero_rays:
                assert abs(ch(np.array([ray]))[0]) < 1e-12

    def test_nonzero_mean_rejected(self):
        with pytest.raises(InputError):
            Characteristic(lambda th: 1.0 + np.cos(2 * th))

    def test_bad_zero_ray_rejected(self):
        with pytest.raises(InputError):
            Characteristic(lambda th: np.cos(2 * th), zero_rays=(0.0,))


class TestGrid:
    def test_corner_merge_is_two_by_two_union(self):
        grid = build_grid(4, 1.0, (0.1, 0.1))
        assert sorted(grid.components(1, 1)) == [(0, 0), (0, 1), (1, 0), (1, 1)]
        rect = grid.merged_rect(1, 1)
        t = grid.knots
        assert rect == (t[0], t[2], t[0], t[2])

    def test_area_tiling(self):
        grid = build_grid(6, 2.0, (0.05, 0.08))
        total = sum((grid.merged_rect(k, l)[1] - grid.merged_rect(k, l)[0])
                    * (grid.merged_rect(k, l)[3] - grid.merged_rect(k, l)[2])
                    for k in range(1, 7) for l in range(1, 7))
        assert total == pytest.approx(16.0, rel=1e-12)

    def test_node_interior_to_cell(self):
        grid = build_grid(5, 1.0, (0.05, 0.1))
        for k in range(1, 6):
            for l in range(1, 6):
                x, y = grid.node(k, l)
                sq = grid.square(k, l)
                assert sq[0] < x < sq[1] and sq[2] < y < sq[3]

    def test_invalid_shift(self):
        with pytest.raises(GridParameterError):
            build_grid(5, 1.0, (0.0, 0.1))
        with pytest.raises(GridParameterError):
            build_grid(3, 1.0, (0.05, 0.05))


class TestPanelCoeff:
    def test_symmetric_panel_vanishes_for_cos2(self):
        ch = characteristic_cos2()
        v = panel_coeff((0.0, 0.0), (-0.5, 0.5, -0.5, 0.5), ch)
        assert abs(v) < 1e-10

    def test_far_panel_matches_closed_form(self):
        ch = characteristic_cos2()
        rect = (1.0, 1.7, -0.4, 0.3)
        assert panel_coeff((0.0, 0.0), rect, ch) == pytest.approx(
            closed_form_cos2(rect), abs=1e-9)

    def test_interior_pv_matches_closed_form_limit(self):
        ch = characteristic_cos2()
        rect = (-0.3, 0.7, -0.4, 0.6)
        got = panel_coeff((0.0, 0.0), rect, ch)
        eps = 1e-9
        x0, x1, y0, y1 = rect
        expect = sum(closed_form_cos2(r) for r in
                     ((x0, -eps, y0, -eps), (eps, x1, y0, -eps),
                      (x0, -eps, eps, y1), (eps, x1, eps, y1)))
        assert got == pytest.approx(expect, abs=1e-6)

    def test_zero_characteristic(self):
        ch = Characteristic(lambda th: np.zeros_like(th), name="null")
        assert panel_coeff((0.2, 0.1), (0.0, 1.0, 0.0, 1.0), ch) == 0.0

    def test_rotation_sign_pattern_cos2(self):
        # rotating the panel by 90 degrees about the target flips cos 2theta
        ch = characteristic_cos2()
        rect = (0.5, 1.5, -0.2, 0.6)
        rotated = (-0.6, 0.2, 0.5, 1.5)  # (x,y) -> (-y,x)
        v1 = panel_coeff((0.0, 0.0), rect, ch)
        v2 = panel_coeff((0.0, 0.0), rotated, ch)
        assert v2 == pytest.approx(-v1, abs=1e-8)

    def test_boundary_target_rejected(self):
        ch = characteristic_cos2()
        with pytest.raises(InputError):
            panel_coeff((1.0, 0.5), (1.0, 2.0, 0.0, 1.0), ch)


class TestTuneShift:
    def test_b_zero_any_shift(self):
        ch = characteristic_sin2()
        prob = Problem2D(a=lambda x, y: 2.0, b=lambda x, y: 0.0,
                         f=lambda x, y: 1.0, char=ch)
        shift, rep = tune_shift(prob, N=4, A=1.0, margin_target=0.5)
        cell = 2.0 / 6.0
        assert shift == (0.5 * cell, 0.5 * cell)  # first candidate wins
        assert rep.min_margin >= 2.0 - 1e-12

    def test_default_problem_dominant(self):
        ch = characteristic_sin2()
        prob = Problem2D(a=lambda x, y: 1.0, b=lambda x, y: 1.0,
                         f=lambda x, y: 1.0, char=ch)
        shift, rep = tune_shift(prob, N=8, A=1.0, margin_target=0.0)
        assert rep.min_margin > 0

    def test_margin_targets_nested(self):
        ch = characteristic_sin2()
        prob = Problem2D(a=lambda x, y: 1.0, b=lambda x, y: 0.3,
                         f=lambda x, y: 1.0, char=ch)
        s1, r1 = tune_shift(prob, N=4, A=1.0, margin_target=0.05)
        s2, r2 = tune_shift(prob, N=4, A=1.0, margin_target=0.4)
        assert r1.min_margin > 0.05 and r2.min_margin > 0.4

    def test_saturating_characteristic_fails_loudly(self):
        # cos2 has vanishing half- and quarter-circle moments, so its self
        # coefficient saturates and a = b = 1 cannot be made dominant
        ch = characteristic_cos2()
        prob = Problem2D(a=lambda x, y: 1.0, b=lambda x, y: 1.0,
                         f=lambda x, y: 1.0, char=ch)
        with pytest.raises(TuningFailureError) as err:
            tune_shift(prob, N=8, A=1.0, margin_target=0.0, ladder_size=8)
        assert err.value.best_margin is not None


class TestAssembleSolve:
    def test_diagonal_when_b_zero(self):
        ch = characteristic_sin2()
        prob = Problem2D(a=lambda x, y: 2.0 + x, b=lambda x, y: 0.0,
                         f=lambda x, y: x + y, char=ch)
        grid = build_grid(5, 1.0, (0.05, 0.07))
        sol, rep = assemble_solve(prob, grid)
        nodes = solution_nodes(grid)
        expect = (nodes[:, :, 0] + nodes[:, :, 1]) / (2.0 + nodes[:, :, 0])
        assert np.abs(sol - expect).max() < 1e-12

    def test_margin_matches_hadamard(self):
        ch = characteristic_sin2()
        prob = Problem2D(a=lambda x, y: 1.0, b=lambda x, y: 0.2,
                         f=lambda x, y: 1.0, char=ch)
        grid = build_grid(4, 1.0, (1.0 / 6.0, 1.0 / 6.0))
        sys = assemble_system(prob, grid)
        sol, rep = assemble_solve(prob, grid)
        assert rep.dominance.min_margin == hadamard_margins(sys).min_margin

    def test_manufactured_convergence(self):
        from sie_lab.harness import manufactured_multidim

        case = manufactured_multidim()
        errs = []
        for n in (8, 16, 32):
            values, locations = case.solve_fn(n)
            exact = np.array([case.exact(p) for p in locations])
            errs.append(np.abs(values - exact).max())
        assert all(b < a for a, b in zip(errs, errs[1:]))  # decreasing
        assert all(b < 2.0 * a for a, b in zip(errs, errs[1:]))


class TestParallel:
    def setup_method(self):
        ch = characteristic_sin2()
        self.prob = Problem2D(a=lambda x, y: 1.0 + 0.1 * x, b=lambda x, y: 0.15,
                              f=lambda x, y: 1.0 + x * y, char=ch)
        cell = 2.0 / 10.0
        self.grid = build_grid(8, 1.0, (cell / 2, cell / 2))

    def test_single_block_equals_direct(self):
        direct, _ = assemble_solve(self.prob, self.grid)
        x, rep = parallel_solve(self.prob, self.grid, 1)
        assert np.abs(x - direct).max() < 1e-10

    def test_four_blocks_match_direct(self):
        direct, _ = assemble_solve(self.prob, self.grid)
        x, rep = parallel_solve(self.prob, self.grid, 4)
        assert np.abs(x - direct).max() < 1e-8
        assert rep.metadata["q"] < 1


class TestSpline:
    def test_basis_kronecker(self):
        from sie_lab.multidim import _lagrange_values

        nodes = np.array([0.2, 0.5, 0.8])
        vals = _lagrange_values(nodes, nodes)
        assert np.abs(vals - np.eye(3)).max() < 1e-13

    def test_r1_far_block_matches_piecewise_constant(self):
        # constant basis: far coefficients coincide with the merged-rectangle
        # coefficients of the piecewise-constant scheme
        ch = characteristic_sin2()
        prob = Problem2D(a=lambda x, y: 1.0, b=lambda x, y: 0.2,
                         f=lambda x, y: 1.0, char=ch)
        N, A = 4, 1.0
        cell = 2 * A / (N + 2)
        sys_spline, nodes = assemble_spline(prob, N, A, r=1, q1=0.999, q2=0.999)
        grid = build_grid(N, A, (cell / 2, cell / 2))
        sys_pc = assemble_system(prob, grid)
        # compare a far entry: row (k,l)=(1,1) -> index 0, col (3,3) -> index 10
        row, col = 0, 2 * N + 2
        assert sys_spline.matrix[row, col] == pytest.approx(
            sys_pc.matrix[row, col], rel=1e-6)

    def test_r2_solves_dominantly_on_small_problem(self):
        ch = characteristic_sin2()
        prob = Problem2D(a=lambda x, y: 2.0, b=lambda x, y: 0.1,
                         f=lambda x, y: 1.0 + 0.2 * x, char=ch)
        x, nodes, rep = solve_spline(prob, N=4, A=1.0, r=2, q1=0.9, q2=0.9)
        assert rep.dominance.min_margin > 0
        assert np.all(np.isfinite(np.abs(x)))

import numpy as np
import pytest

from sie_lab.errors import DivergentKernelError, InputError, SingularPanelError
from sie_lab.quadrature import (
    WeakKernelSpec,
    adaptive_gauss,
    cauchy_log_moment,
    cauchy_panel_segment,
    cot_panel,
    pv_oracle,
    pv_segment_oracle,
    weak_panel,
    weak_weight,
)


class TestCotPanel:
    def test_far_panel_matches_adaptive_quadrature(self):
        s_star = 0.4
        s_a, s_b = s_star + np.pi - 0.3, s_star + np.pi + 0.5
        oracle = adaptive_gauss(lambda s: 1.0 / np.tan(0.5 * (s - s_star)), s_a, s_b)
        assert cot_panel(s_a, s_b, s_star) == pytest.approx(oracle, abs=1e-11)

    def test_antisymmetry_under_reflection(self):
        s_star = 1.1
        s_a, s_b = s_star + 0.2, s_star + 0.9
        left = cot_panel(2 * s_star - s_b, 2 * s_star - s_a, s_star)
        assert left == pytest.approx(-cot_panel(s_a, s_b, s_star), abs=1e-13)

    def test_shifted_diagonal_matches_printed_form(self):
        # panel [s_j, s_{j+1}] of width pi/n, singular point s_j + h
        n = 8
        h = np.pi / (4 * n)
        s_j = 2 * np.pi / n
        got = cot_panel(s_j, s_j + np.pi / n, s_j + h)
        expect = 2 * np.log(abs(np.sin(np.pi / (2 * n) - h / 2) / np.sin(h / 2)))
        assert got == pytest.approx(expect, rel=1e-14)

    def test_endpoint_singularity_rejected(self):
        with pytest.raises(SingularPanelError):
            cot_panel(0.0, 0.5, 0.0)

    def test_pv_symmetry_over_period(self):
        # full period minus a symmetric window about s_star integrates to zero
        s_star, w = 0.7, 0.05
        total = cot_panel(s_star + w, s_star + 2 * np.pi - w, s_star)
        assert abs(total) < 1e-12


class TestCauchyPanel:
    def test_midpoint_is_zero(self):
        assert cauchy_panel_segment(0.0, 2.0, 1.0) == pytest.approx(0.0, abs=1e-14)

    def test_quarter_point(self):
        n = 5
        assert cauchy_panel_segment(0.0, 1.0 / n, 1.0 / (4 * n)) == pytest.approx(np.log(3.0))

    def test_outside_matches_quadrature(self):
        oracle = adaptive_gauss(lambda t: 1.0 / (t - 3.0), 0.5, 1.5)
        assert cauchy_panel_segment(0.5, 1.5, 3.0) == pytest.approx(oracle, abs=1e-12)

    def test_endpoint_rejected(self):
        with pytest.raises(SingularPanelError):
            cauchy_panel_segment(0.0, 1.0, 1.0)


class TestCauchyLogMoment:
    def test_against_pv_quadrature(self):
        # PV integral of (2 + tau + tau^2)/(tau - c) over [0, 1], c inside
        coeffs = [2.0, 1.0, 1.0]
        c = 0.37
        eps_vals = [1e-4, 1e-5, 1e-6]
        def pv(eps):
            left = adaptive_gauss(lambda t: np.polyval(coeffs[::-1], t) / (t - c), 0.0, c - eps)
            right = adaptive_gauss(lambda t: np.polyval(coeffs[::-1], t) / (t - c), c + eps, 1.0)
            return left + right
        extrap = [pv(e) for e in eps_vals]
        got = cauchy_log_moment(coeffs, 0.0, 1.0, c)
        assert got.real == pytest.approx(extrap[-1], abs=5e-5)

    def test_pure_log_term(self):
        got = cauchy_log_moment([1.0], 0.0, 1.0, 0.25)
        assert got == pytest.approx(np.log(3.0))


class TestWeakWeight:
    def test_eta_zero(self):
        spec = WeakKernelSpec(0.0)
        assert weak_weight(1.0, -1.0, spec, 4) == 1.0

    def test_antipodal(self):
        spec = WeakKernelSpec(0.5)
        assert weak_weight(1.0 + 0j, -1.0 + 0j, spec, 6) == pytest.approx(2 ** -0.5)

    def test_adjacent_nodes_capped_value(self):
        n = 8
        spec = WeakKernelSpec(0.5)
        t = np.exp(0j)
        tau = np.exp(2j * np.pi / 17)
        cap = abs(np.exp(2j * np.pi / 17) - 1.0) ** -0.5
        assert weak_weight(t, tau, spec, n) == pytest.approx(cap, rel=1e-13)

    def test_fixed_rho(self):
        spec = WeakKernelSpec(0.5, "fixed_rho", rho=0.5)
        assert weak_weight(1.0, np.exp(0.01j), spec, 4) == pytest.approx(0.5 ** -0.5)
        assert weak_weight(1.0, -1.0, spec, 4) == pytest.approx(2 ** -0.5)

    def test_eta_bounds(self):
        with pytest.raises(DivergentKernelError):
            WeakKernelSpec(1.0)


class TestWeakPanel:
    def test_eta_zero_arclength(self):
        assert weak_panel(1.0, 0.2, 0.9, 0.0) == pytest.approx(0.7)

    def test_antipodal_short_panel(self):
        s_star = 0.0
        s_a, s_b = np.pi - 0.01, np.pi + 0.01
        eta = 0.3
        got = weak_panel(s_star, s_a, s_b, eta)
        oracle = adaptive_gauss(
            lambda s: np.abs(2 * np.sin(0.5 * (s - s_star))) ** -eta, s_a, s_b)
        assert got == pytest.approx(oracle, abs=1e-10)
        assert got == pytest.approx(2 ** -eta * 0.02, rel=1e-3)

    def test_singular_point_at_panel_center(self):
        # symmetric split: compare against the even-part substitution oracle
        eta = 0.5
        w = 0.3
        got = weak_panel(0.0, -w, w, eta)
        # int_{-w}^{w} |2 sin(u/2)|^-eta du = 2 int_0^w (2 sin(u/2))^-eta du
        oracle = 2.0 * adaptive_gauss(
            lambda v: (2 * np.sin(0.5 * (v ** 2))) ** -eta * 2 * v, 1e-12, np.sqrt(w))
        assert got == pytest.approx(oracle, abs=1e-8)

    def test_monotone_in_distance(self):
        eta = 0.4
        panel = (1.0, 1.3)
        vals = [weak_panel(1.3 + d, *panel, eta) for d in (0.1, 0.4, 1.0, 2.0)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_divergent_eta(self):
        with pytest.raises(DivergentKernelError):
            weak_panel(0.0, 0.0, 1.0, 1.0)

    def test_randomized_against_adaptive_oracle(self):
        rng = np.random.default_rng(31)
        for _ in range(25):
            eta = rng.uniform(0.05, 0.9)
            s_a = rng.uniform(0, 2 * np.pi)
            s_b = s_a + rng.uniform(0.05, 0.8)
            s_star = s_a - rng.uniform(0.05, 1.0)  # off panel
            got = weak_panel(s_star, s_a, s_b, eta)
            oracle = adaptive_gauss(
                lambda s: np.abs(2 * np.sin(0.5 * (s - s_star))) ** -eta, s_a, s_b, tol=1e-11)
            assert got == pytest.approx(oracle, abs=2e-9)


class TestPvOracle:
    def test_constant_vanishes(self):
        assert abs(pv_oracle(lambda s: np.ones_like(s), 0.3, 2048)) < 1e-10

    def test_mode_identity(self):
        got = pv_oracle(lambda s: np.exp(1j * s), 1.2, 4096)
        assert got == pytest.approx(1j * np.exp(1.2j), abs=1e-10)

    def test_resolution_floor(self):
        with pytest.raises(InputError):
            pv_oracle(lambda s: s, 0.0, 100)


class TestSegmentOracle:
    def test_airfoil_identity(self):
        # (1/pi) int sqrt((1+tau)/(1-tau))/(tau-t) dtau = 1
        for t in (-0.4, 0.1, 0.66):
            got = pv_segment_oracle(lambda th: 2 * np.cos(0.5 * th) ** 2, t)
            assert got == pytest.approx(1.0, abs=1e-9)

    def test_chebyshev_identity(self):
        # (1/pi) int T_3(tau)/(sqrt(1-tau^2)(tau-t)) dtau = U_2(t)
        for t in (-0.5, 0.25):
            got = pv_segment_oracle(lambda th: np.cos(3 * th), t)
            expect = 4 * t * t - 1  # U_2
            assert got == pytest.approx(expect, abs=1e-9)

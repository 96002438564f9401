"""Shifted-collocation schemes for equations whose symbol may degenerate.

The node shift h moves every collocation point off its panel edge, which
turns the self-panel cotangent/Cauchy integral into a principal value whose
magnitude grows like |ln h|; a geometric search on h then makes the systems
Hadamard dominant no matter how a^2 - b^2 behaves.  Corrective lines carry
the zero-moment reconstruction used by the error certification.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InputError,
    SingularPanelError,
    TruncationWidthError,
    TuningFailureError,
)
from .linalg import DenseSystem, SolveReport, hadamard_margins, lu_solve
from .quadrature import cauchy_panel_segment, cot_panel, gauss_panel

_MAX_HALVINGS = 60


@dataclass
class CorrectiveLine:
    anchor: complex
    slope: complex
    node: float
    panels: tuple
    slope_bound: float = None
    slope_ok: bool = None

    def __call__(self, sigma):
        return self.anchor + self.slope * (np.asarray(sigma) - self.node)


def corrective_line(j, value, n, h, geometry="circle", alpha=None):
    """Line through (s_j*, value) with zero cotangent/Cauchy moment over the
    two panels the scheme skips.

    The slope solves value * C + k * D = 0 where C is the closed-form panel
    moment of the kernel and D the first moment (exact panel length on the
    segment, quadrature on the circle).  With ``alpha`` the reconstruction
    bound |k| <= n^(1-alpha) is evaluated and flagged, not enforced.
    """
    if geometry == "circle":
        spacing = np.pi / n
        s_j = j * spacing
        s_star = s_j + h
        panels = ((s_j - spacing, s_j), (s_j + spacing, s_j + 2 * spacing))
        c_mom = sum(cot_panel(a, b, s_star) for a, b in panels)
        d_mom = sum(gauss_panel(lambda u: (u - s_star) / np.tan(0.5 * (u - s_star)), a, b, 24)
                    for a, b in panels)
    elif geometry == "segment":
        spacing = 1.0 / n
        t_j = -1.0 + j * spacing
        s_star = t_j + h
        panels = ((t_j - spacing, t_j), (t_j + spacing, t_j + 2 * spacing))
        c_mom = sum(cauchy_panel_segment(a, b, s_star) for a, b in panels)
        d_mom = 2.0 * spacing  # first moment of 1/(tau - t*) is the length
    else:
        raise InputError(f"unknown geometry {geometry!r}")
    slope = -value * c_mom / d_mom
    line = CorrectiveLine(anchor=value, slope=slope, node=s_star, panels=panels)
    if alpha is not None:
        line.slope_bound = float(n ** (1.0 - alpha))
        line.slope_ok = bool(abs(slope) <= line.slope_bound)
    return line


def segment_slope_log_argument(n, h):
    """The printed log argument of the segment corrective slope,
    h(2/n - h) / ((1/n + h)(1/n - h))."""
    return h * (2.0 / n - h) / ((1.0 / n + h) * (1.0 / n - h))


def _assemble_circle(a, b, hker, f, n, h):
    """System (nodes s_k = pi k/n, collocation s_k* = s_k + h) for
    a x + (b/2pi) int x cot((sigma-s)/2) + int h x = f."""
    m = 2 * n
    spacing = np.pi / n
    s = spacing * np.arange(m)
    s_star = s + h
    c = np.zeros((m, m), dtype=complex)
    a_v = np.array([a(sj) for sj in s_star], dtype=complex)
    b_v = np.array([b(sj) for sj in s_star], dtype=complex)
    for j in range(m):
        c[j, j] += a_v[j]
        skip = {(j - 1) % m, (j + 1) % m}
        for k in range(m):
            if k in skip:
                continue
            c[j, k] += b_v[j] / (2.0 * np.pi) * cot_panel(s[k], s[k] + spacing, s_star[j])
        if hker is not None:
            for k in range(m):
                c[j, k] += np.pi / n * hker(s_star[j], s_star[k])
    rhs = np.array([f(sj) for sj in s_star], dtype=complex)
    return DenseSystem(c, rhs), s_star


def solve_circle_exceptional(a, b, f, hker=None, n=8, h=None, margin_target=1.0):
    """Solve the circle scheme; auto-halve h until the Hadamard margin clears.

    Returns (nodal values at the shifted nodes, shifted nodes, report); the
    report records the h used and the achieved margin.
    """
    ladder = [h] if h is not None else [np.pi / (2 * n) * 0.5 ** m
                                        for m in range(_MAX_HALVINGS + 1)]
    best = -np.inf
    for h_try in ladder:
        try:
            sys, s_star = _assemble_circle(a, b, hker, f, n, h_try)
        except SingularPanelError:
            break  # h collided with the panel-edge tolerance; smaller is worse
        rep = hadamard_margins(sys)
        best = max(best, rep.min_margin)
        if rep.min_margin >= margin_target or (h is not None and rep.min_margin > 0):
            x, solve_rep = lu_solve(sys)
            solve_rep.metadata.update(h=h_try, margin=rep.min_margin, n=n)
            return x, s_star, solve_rep
    raise TuningFailureError(
        f"no dominant h found in {len(ladder)} halvings", best_margin=best)


def circle_diagonal_entry(a_j, b_j, h_jj, n, h):
    """The printed diagonal a_j + (b_j/pi) ln|sin(pi/2n - h/2)/sin(h/2)| + pi h_jj/n."""
    return (a_j + b_j / np.pi * np.log(abs(np.sin(np.pi / (2 * n) - h / 2)
                                           / np.sin(h / 2)))
            + np.pi * h_jj / n)


def _segment_panels(n_half, left, spacing):
    """Panel layout: merged ends [t0,t2], [t_{2n-2}, t_{2n}], singles between."""
    panels = {1: (left, left + 2 * spacing)}
    for k in range(2, 2 * n_half - 2):
        panels[k] = (left + k * spacing, left + (k + 1) * spacing)
    panels[2 * n_half - 2] = (left + (2 * n_half - 2) * spacing,
                              left + 2 * n_half * spacing)
    return panels


def _interval_minus(lo, hi, cut_lo, cut_hi):
    """Pieces of [lo, hi] outside the cut interval."""
    pieces = []
    if cut_lo > lo:
        pieces.append((lo, min(hi, cut_lo)))
    if cut_hi < hi:
        pieces.append((max(lo, cut_hi), hi))
    return [(a, b) for a, b in pieces if b - a > 1e-15]


def _assemble_segment(a, b, hker, f, n_half, h, left, spacing):
    """Rows j = 1..2n-2 of the shifted-node scheme on [left, left + 2n*spacing].

    Unknowns sit at t_j* = t_j + h for j < n and t_j* = t_{j+1} - h for
    j >= n; the end panels are merged pairs carrying the first and last
    unknowns.  Row j integrates over every panel clipped by the skip zone
    [t_{j-1}, t_j] + [t_{j+1}, t_{j+2}]; the panel containing the node
    enters as a principal value.  (The clipping also trims the merged end
    panels, which keeps all off-diagonal entries at the ln n scale the
    dominance estimate needs.)
    """
    m = 2 * n_half - 2
    last = 2 * n_half - 2
    knots = left + spacing * np.arange(2 * n_half + 1)
    idx = np.arange(1, 2 * n_half - 1)
    t_star = np.where(idx < n_half, knots[idx] + h, knots[idx + 1] - h)
    panels = _segment_panels(n_half, left, spacing)
    c = np.zeros((m, m), dtype=complex)
    a_v = np.array([a(t) for t in t_star], dtype=complex)
    b_v = np.array([b(t) for t in t_star], dtype=complex)
    for row, j in enumerate(idx):
        c[row, row] += a_v[row]
        tj = t_star[row]
        bj = b_v[row] / np.pi
        for k in range(1, last + 1):
            col = k - 1
            lo, hi = panels[k]
            pieces = _interval_minus(lo, hi, knots[j - 1], knots[j])
            pieces = [piece for a_, b_ in pieces
                      for piece in _interval_minus(a_, b_, knots[j + 1], knots[j + 2])]
            for a_, b_ in pieces:
                c[row, col] += bj * cauchy_panel_segment(a_, b_, tj)
        if hker is not None:
            for col in range(m):
                c[row, col] += spacing * hker(tj, t_star[col])
    rhs = np.array([f(t) for t in t_star], dtype=complex)
    return DenseSystem(c, rhs), t_star


def solve_segment_exceptional(a, b, f, hker=None, n=8, h=None, margin_target=1.0,
                              left=-1.0, spacing=None):
    """Solve the segment scheme on [-1, 1] (or a rescaled interval)."""
    spacing = (1.0 / n) if spacing is None else spacing
    ladder = [h] if h is not None else [spacing / 4.0 * 0.5 ** m
                                        for m in range(_MAX_HALVINGS + 1)]
    best = -np.inf
    for h_try in ladder:
        if not 0 < h_try < spacing / 2.0:
            continue
        try:
            sys, t_star = _assemble_segment(a, b, hker, f, n, h_try, left, spacing)
        except SingularPanelError:
            break
        rep = hadamard_margins(sys)
        best = max(best, rep.min_margin)
        if rep.min_margin >= margin_target or (h is not None and rep.min_margin > 0):
            x, solve_rep = lu_solve(sys)
            solve_rep.metadata.update(h=h_try, margin=rep.min_margin, n=n)
            return x, t_star, solve_rep
    raise TuningFailureError(
        f"no dominant h found in {len(ladder)} candidates", best_margin=best)


def solve_line_truncated(a, b, f, hker=None, A=8.0, N=16, h=None,
                         decay_lambda=0.75, tail_tol=1e-2, margin_target=1.0):
    """Reduce the whole-line equation to the segment scheme on [-A, A].

    The right-hand side must decay like (1 + t^2)^(-lambda) with
    lambda > 1/2 (sampled check); the report carries the numeric tail mass
    of f beyond the truncation width.
    """
    from scipy.integrate import quad

    if decay_lambda <= 0.5:
        raise InputError("decay exponent must exceed 1/2")
    sample = np.linspace(-10 * A, 10 * A, 201)
    fs = np.array([abs(f(t)) for t in sample])
    bound = fs * (1.0 + sample ** 2) ** decay_lambda
    if bound.max() > 1e6 * (1.0 + fs.max()):
        raise InputError("right-hand side does not satisfy the decay bound")
    tail_right, _ = quad(lambda t: abs(f(t)), A, np.inf, limit=200)
    tail_left, _ = quad(lambda t: abs(f(t)), -np.inf, -A, limit=200)
    tail = tail_left + tail_right
    if tail > tail_tol:
        raise TruncationWidthError(
            f"rhs tail {tail:.3e} beyond |t| > {A} exceeds {tail_tol}; increase A",
            tail=tail)
    x, t_star, rep = solve_segment_exceptional(
        a, b, f, hker=hker, n=N, h=h, margin_target=margin_target,
        left=-A, spacing=A / N)
    rep.metadata.update(A=A, tail=tail)
    return x, t_star, rep

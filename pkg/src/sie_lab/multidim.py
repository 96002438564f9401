"""Two-dimensional singular equations with characteristic phi(theta)/r^2 on
G = [-A, A]^2: grid construction, panel coefficients, shift tuning, the
piecewise-constant and spline schemes, and the parallel block solve.

Principal values use centered-square exclusion: concentric square frames
around the target contribute ln 2 * (mean of phi) = 0 exactly, so the PV
equals the integral outside a small centered square plus the shape constant
c_phi = -int phi(theta) ln max(|cos|,|sin|) dtheta (zero for the built-in
characteristics).
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import (
    CubatureError,
    GridParameterError,
    InputError,
    TuningFailureError,
)
from .linalg import DenseSystem, SolveReport, block_jacobi_solve, hadamard_margins, lu_solve
from .quadrature import _gauss

_TWO_PI = 2.0 * np.pi


class Characteristic:
    """Angular density phi(theta) of the kernel phi(Theta)/r^2.

    Validates the existence condition (zero mean over the unit circle) and
    any declared zero rays at construction.
    """

    def __init__(self, phi, zero_rays=(), name="custom"):
        self.phi = phi
        self.zero_rays = tuple(zero_rays)
        self.name = name
        theta = _TWO_PI * np.arange(4096) / 4096
        mean = np.mean(self.phi(theta))
        if abs(mean) > 1e-10:
            raise InputError(f"characteristic has nonzero circular mean {mean:.2e}")
        for ray in self.zero_rays:
            if abs(self.phi(np.asarray([ray]))[0]) > 1e-12:
                raise InputError(f"declared zero ray {ray} has |phi| > 1e-12")
        # shape constant of the centered-square principal value
        x, w = _gauss(48)
        c = 0.0
        for k in range(8):
            lo, hi = k * np.pi / 4, (k + 1) * np.pi / 4
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            th = mid + half * x
            c -= half * np.sum(w * self.phi(th)
                               * np.log(np.maximum(np.abs(np.cos(th)),
                                                   np.abs(np.sin(th)))))
        self.shape_constant = float(c)

    def __call__(self, theta):
        return self.phi(theta)


def characteristic_cos2(**kw):
    return Characteristic(lambda th: np.cos(2 * th),
                          zero_rays=(np.pi / 4, 3 * np.pi / 4), name="cos2")


def characteristic_sin2(**kw):
    return Characteristic(lambda th: np.sin(2 * th),
                          zero_rays=(0.0, np.pi / 2), name="sin2")


def characteristic_cos3(**kw):
    return Characteristic(lambda th: np.cos(3 * th),
                          zero_rays=(np.pi / 6, np.pi / 2), name="cos3")


BUILTIN_CHARACTERISTICS = {
    "cos2": characteristic_cos2,
    "sin2": characteristic_sin2,
    "cos3": characteristic_cos3,
}


# ---------------------------------------------------------------------------
# cubature


def _tensor_gauss(f, rect, order=8):
    x0, x1, y0, y1 = rect
    gx, gw = _gauss(order)
    xs = 0.5 * (x0 + x1) + 0.5 * (x1 - x0) * gx
    ys = 0.5 * (y0 + y1) + 0.5 * (y1 - y0) * gx
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vals = f(X, Y)
    return 0.25 * (x1 - x0) * (y1 - y0) * np.einsum("i,j,ij->", gw, gw, vals)


def adaptive_rect(f, rect, tol=1e-8, order=8, max_depth=20):
    """Dyadic 4-way refinement until coarse and refined estimates agree."""

    def recurse(r, coarse, depth):
        x0, x1, y0, y1 = r
        xm, ym = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        quads = [(x0, xm, y0, ym), (xm, x1, y0, ym),
                 (x0, xm, ym, y1), (xm, x1, ym, y1)]
        fine = [_tensor_gauss(f, q, order) for q in quads]
        total = sum(fine)
        if abs(total - coarse) < tol * max(1.0, abs(total)):
            return total
        if depth >= max_depth:
            raise CubatureError(f"no cubature convergence after {max_depth} levels")
        return sum(recurse(q, fq, depth + 1) for q, fq in zip(quads, fine))

    return recurse(rect, _tensor_gauss(f, rect, order), 0)


def _kernel_factory(char: Characteristic, target, density=None):
    tx, ty = target

    def f(X, Y):
        u, v = X - tx, Y - ty
        r2 = u * u + v * v
        theta = np.arctan2(v, u)
        vals = char(theta) / r2
        if density is not None:
            vals = vals * density(X, Y)
        return vals

    return f


def _clip(rect, box):
    x0 = max(rect[0], box[0])
    x1 = min(rect[1], box[1])
    y0 = max(rect[2], box[2])
    y1 = min(rect[3], box[3])
    if x1 - x0 > 1e-15 and y1 - y0 > 1e-15:
        return (x0, x1, y0, y1)
    return None


def _frame_pieces(tx, ty, inner, outer):
    """The square annulus K(outer) \\ K(inner) as eight rectangles."""
    pieces = []
    for rx in ((tx - outer, tx - inner), (tx - inner, tx + inner), (tx + inner, tx + outer)):
        for ry in ((ty - outer, ty - inner), (ty - inner, ty + inner), (ty + inner, ty + outer)):
            if rx == (tx - inner, tx + inner) and ry == (ty - inner, ty + inner):
                continue
            pieces.append((rx[0], rx[1], ry[0], ry[1]))
    return pieces


def panel_coeff(target, rect, char: Characteristic, density=None, tol=1e-8,
                order=12, max_levels=60):
    """int over the rectangle of phi(Theta) density / r^2, PV when the target
    lies inside.

    Outside: dyadic tensor-Gauss refinement to the tolerance.  Inside: the
    panel is decomposed into geometric square frames around the target
    (clipped to the panel) down to a vanishing exclusion square; concentric
    centered frames carry exactly ln 2 * (circular mean of phi) = 0 for a
    constant density, so the series terminates once the frame mass falls
    below tolerance, and the limit contributes density(target) * c_phi.
    """
    x0, x1, y0, y1 = rect
    tx, ty = target
    f = _kernel_factory(char, target, density)
    inside = x0 < tx < x1 and y0 < ty < y1
    edge_dist = min(abs(tx - x0), abs(x1 - tx), abs(ty - y0), abs(y1 - ty))
    if not inside:
        if edge_dist < 1e-14 * max(x1 - x0, y1 - y0):
            raise InputError("target lies on the panel boundary")
        return adaptive_rect(f, rect, tol)
    # outermost frame radius covering the panel
    reach = max(x1 - tx, tx - x0, y1 - ty, ty - y0)
    total = 0.0
    outer = reach
    level = 0
    while True:
        inner = 0.5 * outer
        clipped = [_clip(p, rect) for p in _frame_pieces(tx, ty, inner, outer)]
        frame_val = sum(_tensor_gauss(f, p, order) for p in clipped if p is not None)
        total += frame_val
        level += 1
        outer = inner
        fully_inside = (tx - outer >= x0 and tx + outer <= x1
                        and ty - outer >= y0 and ty + outer <= y1)
        if fully_inside and abs(frame_val) < tol / 8.0 and level > 3:
            break
        if level >= max_levels:
            raise CubatureError("frame series did not settle within the level cap")
    base = 1.0 if density is None else density(np.asarray(tx), np.asarray(ty))
    return total + base * char.shape_constant


# ---------------------------------------------------------------------------
# grid


@dataclass
class Grid2D:
    N: int
    A: float
    shift: tuple

    def __post_init__(self):
        if self.N < 4:
            raise GridParameterError("N must be at least 4")
        cell = 2.0 * self.A / (self.N + 2)
        h1, h2 = self.shift
        if not (0.0 < h1 < cell and 0.0 < h2 < cell):
            raise GridParameterError(f"shift components must lie in (0, {cell:.3g})")
        self.cell = cell
        self.knots = -self.A + cell * np.arange(self.N + 3)

    def square(self, i, j):
        t = self.knots
        return (t[i], t[i + 1], t[j], t[j + 1])

    def components(self, k, l):
        """Component squares of the merged rectangle with index (k, l)."""
        N = self.N
        ks = [0, 1] if k == 1 else ([N, N + 1] if k == N else [k])
        ls = [0, 1] if l == 1 else ([N, N + 1] if l == N else [l])
        return [(i, j) for i in ks for j in ls]

    def merged_rect(self, k, l):
        comps = self.components(k, l)
        xs = [self.square(i, j) for i, j in comps]
        return (min(r[0] for r in xs), max(r[1] for r in xs),
                min(r[2] for r in xs), max(r[3] for r in xs))

    def node(self, k, l):
        return (self.knots[k] + self.shift[0], self.knots[l] + self.shift[1])


def build_grid(N, A, shift) -> Grid2D:
    return Grid2D(N=N, A=A, shift=tuple(shift))


# ---------------------------------------------------------------------------
# piecewise-constant scheme


@dataclass
class Problem2D:
    """a(t) x + b(t) PV int_G phi(Theta) x(tau)/r^2 dtau (+ int h x) = f."""

    a: callable
    b: callable
    f: callable
    char: Characteristic
    h: callable = None


class _CoeffTable:
    """Translation-keyed cache of square-panel coefficients for one grid.

    Panels at index distance >= 2 from the target in some axis are at least
    one cell away; a fixed high-order tensor rule is then inside the target
    tolerance, and the dyadic refinement is reserved for the near entries.
    """

    def __init__(self, grid: Grid2D, char: Characteristic, tol=1e-8):
        self.grid = grid
        self.char = char
        self.tol = tol
        self._cache = {}

    def far_square(self, di, dj):
        """Coefficient of the square at index offset (di, dj) from the target's cell."""
        key = (di, dj)
        if key not in self._cache:
            cell = self.grid.cell
            h1, h2 = self.grid.shift
            rect = (di * cell - h1, (di + 1) * cell - h1,
                    dj * cell - h2, (dj + 1) * cell - h2)
            f = _kernel_factory(self.char, (0.0, 0.0))
            dist = max(rect[0] if rect[0] > 0 else (-rect[1] if rect[1] < 0 else 0.0),
                       rect[2] if rect[2] > 0 else (-rect[3] if rect[3] < 0 else 0.0))
            if dist >= 2.0 * cell:
                self._cache[key] = _tensor_gauss(f, rect, 10)
            elif dist >= 0.9 * cell:
                coarse = _tensor_gauss(f, rect, 12)
                xm = 0.5 * (rect[0] + rect[1])
                ym = 0.5 * (rect[2] + rect[3])
                fine = sum(_tensor_gauss(f, q, 12) for q in
                           ((rect[0], xm, rect[2], ym), (xm, rect[1], rect[2], ym),
                            (rect[0], xm, ym, rect[3]), (xm, rect[1], ym, rect[3])))
                self._cache[key] = (fine if abs(fine - coarse)
                                    < self.tol * max(1.0, abs(fine))
                                    else adaptive_rect(f, rect, self.tol))
            else:
                self._cache[key] = panel_coeff((0.0, 0.0), rect, self.char,
                                               tol=self.tol)
        return self._cache[key]

    def self_coeff(self):
        cell = self.grid.cell
        h1, h2 = self.grid.shift
        rect = (-h1, cell - h1, -h2, cell - h2)
        return panel_coeff((0.0, 0.0), rect, self.char, tol=self.tol)

    def merged_coeff(self, k, l, target_k, target_l):
        return sum(self.far_square(ic - target_k, jc - target_l)
                   for ic, jc in self.grid.components(k, l))


def assemble_system(problem: Problem2D, grid: Grid2D, tol=1e-8):
    """Matrix of the piecewise-constant scheme (neighbour ring dropped)."""
    N = grid.N
    size = N * N
    table = _CoeffTable(grid, problem.char, tol)
    d_self = table.self_coeff()
    mat = np.zeros((size, size), dtype=complex)
    rhs = np.empty(size, dtype=complex)
    for k in range(1, N + 1):
        for l in range(1, N + 1):
            row = (k - 1) * N + (l - 1)
            tx, ty = grid.node(k, l)
            a_v, b_v = problem.a(tx, ty), problem.b(tx, ty)
            rhs[row] = problem.f(tx, ty)
            mat[row, row] += a_v + b_v * d_self
            for i in range(1, N + 1):
                for j in range(1, N + 1):
                    if abs(i - k) <= 1 and abs(j - l) <= 1:
                        continue
                    col = (i - 1) * N + (j - 1)
                    d_bar = sum(table.far_square(ic - k, jc - l)
                                for ic, jc in grid.components(i, j))
                    mat[row, col] += b_v * d_bar
            if problem.h is not None:
                for i in range(1, N + 1):
                    for j in range(1, N + 1):
                        col = (i - 1) * N + (j - 1)
                        ux, uy = grid.node(i, j)
                        area = _rect_area(grid.merged_rect(i, j))
                        mat[row, col] += problem.h((tx, ty), (ux, uy)) * area
    return DenseSystem(mat, rhs)


def _rect_area(rect):
    return (rect[1] - rect[0]) * (rect[3] - rect[2])


def _margin_score(problem: Problem2D, grid: Grid2D, table: _CoeffTable, d_self):
    """min over rows of |a + b d_self| - sum' |b d_far| (the tuning score)."""
    N = grid.N
    worst = np.inf
    for k in range(1, N + 1):
        for l in range(1, N + 1):
            tx, ty = grid.node(k, l)
            b_v = problem.b(tx, ty)
            diag = abs(problem.a(tx, ty) + b_v * d_self)
            off = 0.0
            for i in range(1, N + 1):
                for j in range(1, N + 1):
                    if abs(i - k) <= 1 and abs(j - l) <= 1:
                        continue
                    off += abs(b_v * table.merged_coeff(i, j, k, l))
            worst = min(worst, diag - off)
    return worst


def tune_shift(problem: Problem2D, N, A, margin_target=0.0, ladder_size=16,
               tol=1e-8):
    """Search shifts for a Hadamard-dominant system.

    The centered shift (consistency-optimal: the dropped ring carries zero
    moment there) is tried first, then the row-major 16x16 geometric ladder
    cell * 2^-i toward the corner; the first shift whose score
    min_rows(|a + b d_self| - sum'|b d_far|) exceeds the target wins.  The
    score equals the Hadamard margin of the singular part; the winner's
    fully assembled system is returned alongside.
    """
    cell = 2.0 * A / (N + 2)
    candidates = [(0.5 * cell, 0.5 * cell)]
    ladder = [cell * 0.5 ** (i + 1) for i in range(ladder_size)]
    candidates += [(u, v) for u in ladder for v in ladder]
    best = (-np.inf, None)
    for shift in candidates:
        grid = build_grid(N, A, shift)
        table = _CoeffTable(grid, problem.char, tol)
        d_self = table.self_coeff()
        # necessary condition: off-diagonal sums are non-negative
        diag_min = min(abs(problem.a(*grid.node(k, l))
                           + problem.b(*grid.node(k, l)) * d_self)
                       for k in range(1, N + 1) for l in range(1, N + 1))
        if diag_min <= margin_target:
            continue
        score = _margin_score(problem, grid, table, d_self)
        if score > best[0]:
            best = (score, shift)
        if score > margin_target:
            rep = hadamard_margins(assemble_system(problem, grid, tol))
            return shift, rep
    raise TuningFailureError(
        f"no shift reached margin {margin_target}; best {best[0]:.3g} at {best[1]}",
        best_margin=best[0])


def assemble_solve(problem: Problem2D, grid: Grid2D, tol=1e-8):
    """Direct solve of the piecewise-constant scheme; margins attached."""
    sys = assemble_system(problem, grid, tol)
    x, rep = lu_solve(sys)
    rep.metadata.update(N=grid.N, A=grid.A, shift=grid.shift)
    return x.reshape(grid.N, grid.N), rep


def parallel_solve(problem: Problem2D, grid: Grid2D, blocks, tol_cub=1e-8,
                   tol=1e-10):
    """Block-Jacobi solve of the same system; P must divide N^2."""
    sys = assemble_system(problem, grid, tol_cub)
    x, rep = block_jacobi_solve(sys, blocks, tol=tol)
    rep.metadata.update(N=grid.N, blocks=blocks)
    return x.reshape(grid.N, grid.N), rep


def solution_nodes(grid: Grid2D):
    pts = [[grid.node(k, l) for l in range(1, grid.N + 1)]
           for k in range(1, grid.N + 1)]
    return np.array(pts)


# ---------------------------------------------------------------------------
# spline scheme (3.12)


def _lagrange_values(nodes, pts):
    """Values of the Lagrange basis of the given nodes at pts (basis, pts)."""
    out = np.empty((len(nodes), len(pts)))
    for w, nw in enumerate(nodes):
        vals = np.ones_like(pts)
        for v, nv in enumerate(nodes):
            if v != w:
                vals = vals * (pts - nv) / (nw - nv)
        out[w] = vals
    return out


def assemble_spline(problem: Problem2D, N, A, r, q1, q2, h=None, tol=1e-7):
    """Tensor-Lagrange spline scheme with special rectangles around each node.

    Unknowns sit at the r x r product nodes of every interior square; the
    self term integrates the local basis over the asymmetric special
    rectangle as a principal value; merged far rectangles are integrated
    against their own extended basis with the 3x3 index neighbourhood
    skipped.  ``h`` defaults to half its containment bound.
    """
    if r < 1 or r > 3:
        raise InputError("spline order r must be 1, 2 or 3")
    if not (0 < q1 < 1 and 0 < q2 < 1):
        raise InputError("asymmetry factors must lie in (0, 1)")
    cell = 2.0 * A / (N + 2)
    h_max = cell / (r + 1)
    if h is None:
        h = 0.5 * h_max
    if not 0 < h <= h_max:
        raise InputError(f"special half-width h must lie in (0, {h_max:.3g}]")
    grid = build_grid(N, A, (0.5 * cell, 0.5 * cell))  # shift unused here
    knots = grid.knots
    offs = cell * np.arange(1, r + 1) / (r + 1)
    # nodes per square index 1..N
    node_1d = {k: knots[k] + offs for k in range(1, N + 1)}
    size = (N * r) ** 2

    def unknown_index(k, i, l, j):
        return ((k - 1) * r + i) * (N * r) + (l - 1) * r + j

    mat = np.zeros((size, size), dtype=complex)
    rhs = np.empty(size, dtype=complex)
    gx, gw = _gauss(8)

    def basis_product_density(k1, l1):
        xs = node_1d[k1]
        ys = node_1d[l1]

        def density_factory(i2, j2):
            def dens(X, Y):
                bx = np.ones_like(X)
                for v, nv in enumerate(xs):
                    if v != i2:
                        bx = bx * (X - nv) / (xs[i2] - nv)
                by = np.ones_like(Y)
                for v, nv in enumerate(ys):
                    if v != j2:
                        by = by * (Y - nv) / (ys[j2] - nv)
                return bx * by
            return dens

        return density_factory

    for k in range(1, N + 1):
        for l in range(1, N + 1):
            for i in range(r):
                for j in range(r):
                    row = unknown_index(k, i, l, j)
                    tx, ty = node_1d[k][i], node_1d[l][j]
                    a_v, b_v = problem.a(tx, ty), problem.b(tx, ty)
                    rhs[row] = problem.f(tx, ty)
                    mat[row, row] += a_v
                    # self special rectangle with the local tensor basis
                    special = (tx - q1 * h, tx + h, ty - q2 * h, ty + h)
                    dens_fac = basis_product_density(k, l)
                    for i2 in range(r):
                        for j2 in range(r):
                            col = unknown_index(k, i2, l, j2)
                            val = panel_coeff((tx, ty), special, problem.char,
                                              density=dens_fac(i2, j2), tol=tol)
                            mat[row, col] += b_v * val
                    # far merged rectangles, 3x3 neighbourhood skipped
                    for k1 in range(1, N + 1):
                        for l1 in range(1, N + 1):
                            if abs(k1 - k) <= 1 and abs(l1 - l) <= 1:
                                continue
                            rect = grid.merged_rect(k1, l1)
                            dens_far = basis_product_density(k1, l1)
                            for i2 in range(r):
                                for j2 in range(r):
                                    col = unknown_index(k1, i2, l1, j2)
                                    val = panel_coeff((tx, ty), rect, problem.char,
                                                      density=dens_far(i2, j2),
                                                      tol=tol)
                                    mat[row, col] += b_v * val
    nodes = np.array([[ (node_1d[k][i], node_1d[l][j])
                        for l in range(1, N + 1) for j in range(r)]
                      for k in range(1, N + 1) for i in range(r)])
    return DenseSystem(mat, rhs), nodes.reshape(size, 2)


def solve_spline(problem: Problem2D, N, A, r, q1, q2, h=None, tol=1e-7):
    sys, nodes = assemble_spline(problem, N, A, r, q1, q2, h, tol)
    x, rep = lu_solve(sys)
    rep.metadata.update(N=N, r=r, q1=q1, q2=q2)
    return x, nodes, rep

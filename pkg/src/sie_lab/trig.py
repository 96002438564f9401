"""Trigonometric polynomials on the unit circle and the exact singular operators.

Everything here works on the complex Fourier representation
``x(t) = sum_{k=-n}^{n} c_k t^k`` with ``t = e^{is}``.  The Cauchy operator
and the periodic Hilbert (cotangent) kernel act diagonally on that basis,
so both are applied exactly in coefficient space; quadrature appears only
in test oracles.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidNodeSetError

_NODE_COINCIDENCE = 1e-9


@dataclass(frozen=True)
class NodeSet:
    """2n+1 uniform interpolation nodes s_k = 2k*pi/(2n+1) + offset."""

    n: int
    offset: float = 0.0

    def __post_init__(self):
        if self.n < 0:
            raise InvalidNodeSetError("degree must be non-negative")
        spacing = 2.0 * np.pi / (2 * self.n + 1)
        if not (0.0 <= self.offset < spacing):
            raise InvalidNodeSetError(
                f"offset {self.offset} outside [0, {spacing}) keeps nodes ordered in [0, 2pi)"
            )

    @property
    def count(self):
        return 2 * self.n + 1

    @property
    def angles(self):
        return 2.0 * np.pi * np.arange(self.count) / self.count + self.offset

    @property
    def points(self):
        return np.exp(1j * self.angles)

    @staticmethod
    def shifted(n):
        """The midpoint-shifted node family (offset pi/(2n+1))."""
        return NodeSet(n, np.pi / (2 * n + 1))


@dataclass(frozen=True)
class TrigPoly:
    """Trigonometric polynomial with coefficients c_k, k = -n..n.

    ``coeffs[k + n]`` stores c_k.  Instances are immutable; all operations
    return new polynomials.
    """

    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size != 2 * self.n + 1:
            raise InvalidNodeSetError(
                f"need exactly {2 * self.n + 1} coefficients for degree {self.n}, got {c.size}"
            )
        object.__setattr__(self, "coeffs", c)

    @property
    def modes(self):
        return np.arange(-self.n, self.n + 1)

    def __call__(self, s):
        """Evaluate at angle(s) s (scalar or array)."""
        s = np.asarray(s, dtype=float)
        phases = np.exp(1j * np.multiply.outer(s, self.modes))
        return phases @ self.coeffs

    def eval_point(self, t):
        """Evaluate at circle point(s) t = e^{is}."""
        t = np.asarray(t, dtype=complex)
        powers = np.power.outer(t, self.modes)
        return powers @ self.coeffs

    def coeff(self, k):
        if abs(k) > self.n:
            return 0.0 + 0.0j
        return self.coeffs[k + self.n]

    def padded(self, n_new):
        """Same polynomial viewed at degree n_new >= n."""
        if n_new < self.n:
            raise InvalidNodeSetError("cannot pad to a smaller degree")
        c = np.zeros(2 * n_new + 1, dtype=complex)
        c[n_new - self.n : n_new + self.n + 1] = self.coeffs
        return TrigPoly(n_new, c)

    def __add__(self, other):
        m = max(self.n, other.n)
        return TrigPoly(m, self.padded(m).coeffs + other.padded(m).coeffs)

    def __sub__(self, other):
        m = max(self.n, other.n)
        return TrigPoly(m, self.padded(m).coeffs - other.padded(m).coeffs)

    def __mul__(self, scalar):
        return TrigPoly(self.n, self.coeffs * scalar)

    __rmul__ = __mul__

    @staticmethod
    def zero(n):
        return TrigPoly(n, np.zeros(2 * n + 1, dtype=complex))

    @staticmethod
    def monomial(k, n=None):
        """The single mode t^k represented at degree n (defaults to |k|)."""
        if n is None:
            n = abs(k)
        p = np.zeros(2 * n + 1, dtype=complex)
        p[k + n] = 1.0
        return TrigPoly(n, p)


def interpolate(samples, nodes: NodeSet) -> TrigPoly:
    """Trigonometric interpolation of 2n+1 samples on a uniform NodeSet.

    Uses the direct discrete transform c_m = (1/(2n+1)) sum_k f_k e^{-i m s_k},
    which is exact on the shifted families as well.
    """
    f = np.asarray(samples, dtype=complex)
    if f.ndim != 1:
        raise InvalidNodeSetError("samples must be a flat sequence")
    if f.size % 2 == 0 or f.size < 1:
        raise InvalidNodeSetError(f"sample count must be odd and >= 1, got {f.size}")
    if f.size != nodes.count:
        raise InvalidNodeSetError(
            f"sample count {f.size} does not match node count {nodes.count}"
        )
    n = nodes.n
    modes = np.arange(-n, n + 1)
    phases = np.exp(-1j * np.outer(modes, nodes.angles))
    return TrigPoly(n, phases @ f / nodes.count)


def fundamental_eval(k, s, nodes: NodeSet):
    """Fundamental interpolation polynomial psi_k of the node set, at angle s.

    psi_k(s) = sin((2n+1)(s - s_k)/2) / ((2n+1) sin((s - s_k)/2)) with the
    removable singularity at s = s_k filled by its limit 1.
    """
    if not 0 <= k <= 2 * nodes.n:
        raise InvalidNodeSetError(f"node index {k} out of range 0..{2 * nodes.n}")
    m = nodes.count
    s = np.asarray(s, dtype=float)
    d = s - nodes.angles[k]
    # reduce to the principal branch so the coincidence test is robust
    d = np.remainder(d + np.pi, 2.0 * np.pi) - np.pi
    near = np.abs(d) < _NODE_COINCIDENCE
    dd = np.where(near, 1.0, d)
    vals = np.sin(0.5 * m * dd) / (m * np.sin(0.5 * dd))
    return np.where(near, 1.0, vals)[()]


def evaluate_at_nodes(p: TrigPoly, nodes: NodeSet):
    return p(nodes.angles)


def plemel_split(p: TrigPoly):
    """Analytic split (p_plus, p_minus) with p = p_plus - p_minus.

    p_plus keeps the coefficients k >= 0; p_minus holds -c_k for k < 0,
    so that the Cauchy operator is p_plus + p_minus.
    """
    n = p.n
    plus = np.zeros_like(p.coeffs)
    minus = np.zeros_like(p.coeffs)
    plus[n:] = p.coeffs[n:]
    minus[:n] = -p.coeffs[:n]
    return TrigPoly(n, plus), TrigPoly(n, minus)


def cauchy_apply(p: TrigPoly) -> TrigPoly:
    """Cauchy singular operator on the circle: c_k -> sign(k) c_k (sign(0)=+1)."""
    signs = np.where(p.modes >= 0, 1.0, -1.0)
    return TrigPoly(p.n, p.coeffs * signs)


def hilbert_apply(p: TrigPoly) -> TrigPoly:
    """Periodic Hilbert kernel (1/2pi) PV int x(sigma) cot((sigma-s)/2) dsigma.

    Acts as c_k -> i sign(k) c_k with the constant mode mapped to zero, so a
    double application negates any zero-mean polynomial.
    """
    factor = 1j * np.sign(p.modes).astype(complex)
    return TrigPoly(p.n, p.coeffs * factor)


def differentiate(p: TrigPoly) -> TrigPoly:
    """d/ds of p(e^{is}): c_k -> i k c_k."""
    return TrigPoly(p.n, p.coeffs * (1j * p.modes))


def differentiation_matrix(nodes: NodeSet):
    """Matrix D with (D x)_j = (d/ds) of the interpolant of nodal values x, at s_j.

    Spectral differentiation of the nodal interpolant; exact for the degree-n
    space the nodes define.
    """
    m = nodes.count
    modes = np.arange(-nodes.n, nodes.n + 1)
    to_coeff = np.exp(-1j * np.outer(modes, nodes.angles)) / m
    back = np.exp(1j * np.outer(nodes.angles, modes)) * (1j * modes)
    return back @ to_coeff


def cauchy_matrix(nodes_eval, nodes_interp: NodeSet):
    """Matrix of (S_gamma of interpolant) evaluated at given angles.

    Entry (j, k) is (S_gamma psi_k)(s_eval_j) for the fundamental polynomials
    psi_k of ``nodes_interp``; exact on the degree-n space.
    """
    s_eval = np.atleast_1d(np.asarray(nodes_eval, dtype=float))
    n = nodes_interp.n
    m = nodes_interp.count
    modes = np.arange(-n, n + 1)
    signs = np.where(modes >= 0, 1.0, -1.0)
    to_coeff = np.exp(-1j * np.outer(modes, nodes_interp.angles)) / m
    back = np.exp(1j * np.outer(s_eval, modes)) * signs
    return back @ to_coeff

"""Panel integrals for singular and weakly singular kernels, plus PV test oracles.

Closed forms are used wherever the kernel admits one (cotangent and Cauchy
log moments); the weakly singular arc integrals split the panel at the foot
of the singularity and use a graded substitution that removes the algebraic
endpoint singularity exactly.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DivergentKernelError, InputError, SingularPanelError

_ENDPOINT_TOL = 1e-13

_GAUSS_CACHE = {}


def _gauss(order):
    if order not in _GAUSS_CACHE:
        _GAUSS_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GAUSS_CACHE[order]


def gauss_panel(f, a, b, order=20):
    """Fixed-order Gauss-Legendre integral of f over [a, b]."""
    x, w = _gauss(order)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * np.sum(w * f(mid + half * x))


def adaptive_gauss(f, a, b, tol=1e-12, order=10, max_depth=40):
    """Adaptive bisection Gauss quadrature; absolute tolerance."""

    def recurse(lo, hi, whole, depth):
        mid = 0.5 * (lo + hi)
        left = gauss_panel(f, lo, mid, order)
        right = gauss_panel(f, mid, hi, order)
        if depth >= max_depth or abs(left + right - whole) < tol:
            return left + right
        return recurse(lo, mid, left, depth + 1) + recurse(mid, hi, right, depth + 1)

    return recurse(a, b, gauss_panel(f, a, b, order), 0)


def cot_panel(s_a, s_b, s_star):
    """Integral of cot((sigma - s_star)/2) over the panel [s_a, s_b].

    Closed form 2 ln|sin((s_b - s_star)/2) / sin((s_a - s_star)/2)|; the
    principal-value convention applies when s_star lies inside the panel.
    """
    if abs(s_b - s_a) >= 2.0 * np.pi:
        raise InputError("panel length must be below a full period")
    da, db = 0.5 * (s_a - s_star), 0.5 * (s_b - s_star)
    if min(abs(np.sin(da)), abs(np.sin(db))) < _ENDPOINT_TOL:
        raise SingularPanelError("singular point coincides with a panel endpoint")
    return 2.0 * np.log(abs(np.sin(db) / np.sin(da)))


def cauchy_panel_segment(t_a, t_b, t_star):
    """Integral of 1/(tau - t_star) over [t_a, t_b] on the real line.

    Inside the panel the principal-value branch ln((t_b - t*)/(t* - t_a)) is
    returned; outside, the ordinary ln|(t_b - t*)/(t_a - t*)|.
    """
    if min(abs(t_star - t_a), abs(t_star - t_b)) < _ENDPOINT_TOL * max(1.0, abs(t_b - t_a)):
        raise SingularPanelError("singular point coincides with a panel endpoint")
    if t_a < t_star < t_b:
        return np.log((t_b - t_star) / (t_star - t_a))
    return np.log(abs((t_b - t_star) / (t_a - t_star)))


def cauchy_log_moment(coeffs, t_a, t_b, t_star):
    """Exact integral of P(tau)/(tau - t_star) over [t_a, t_b].

    ``coeffs`` are power-basis coefficients of P (ascending).  Synthetic
    division gives P(tau) = Q(tau)(tau - t*) + P(t*); the polynomial part is
    integrated exactly and the residue picks up the (PV) log.
    """
    c = np.asarray(coeffs, dtype=complex)
    # synthetic division by (tau - t_star), highest degree first
    rev = c[::-1]
    q = np.zeros(max(len(c) - 1, 0), dtype=complex)
    acc = 0.0 + 0.0j
    for i, ck in enumerate(rev):
        acc = acc * t_star + ck
        if i < len(q):
            q[i] = acc
    remainder = acc
    val = 0.0 + 0.0j
    qa = q[::-1]  # ascending again
    for m, qm in enumerate(qa):
        val += qm * (t_b ** (m + 1) - t_a ** (m + 1)) / (m + 1)
    return val + remainder * cauchy_panel_segment(t_a, t_b, t_star)


@dataclass(frozen=True)
class WeakKernelSpec:
    """Weak singularity |tau - t|^{-eta} with the capping rule for the diagonal.

    ``cutoff_mode`` is either ``"node_spacing"`` (cap inside one angular node
    spacing, the d(t,tau) of the collocation schemes) or ``"fixed_rho"``
    (cap on chord distance below rho, the d*(t,tau) variant).
    """

    eta: float
    cutoff_mode: str = "node_spacing"
    rho: float = None

    def __post_init__(self):
        if not 0.0 <= self.eta < 1.0:
            raise DivergentKernelError(f"eta must lie in [0, 1), got {self.eta}")
        if self.cutoff_mode not in ("node_spacing", "fixed_rho"):
            raise InputError(f"unknown cutoff mode {self.cutoff_mode!r}")
        if self.cutoff_mode == "fixed_rho":
            if self.rho is None or self.rho <= 0:
                raise InputError("fixed_rho mode needs rho > 0")


def weak_weight(t, tau, spec: WeakKernelSpec, n):
    """Capped weak-kernel weight d(t, tau) for a 2n+1-node discretization."""
    if n < 1:
        raise InputError("n must be >= 1")
    if spec.eta == 0.0:
        return 1.0
    chord = abs(tau - t)
    if spec.cutoff_mode == "fixed_rho":
        rho = spec.rho
        if rho < 2.0 / (np.pi * (2 * n + 1)):
            raise InputError("fixed rho below the admissible node-spacing bound")
        return chord ** (-spec.eta) if chord >= rho else rho ** (-spec.eta)
    spacing = 2.0 * np.pi / (2 * n + 1)
    ds = np.angle(tau / t)  # circular distance in (-pi, pi]
    if abs(ds) >= spacing:
        return chord ** (-spec.eta)
    return abs(np.exp(1j * spacing) - 1.0) ** (-spec.eta)


def weak_panel(s_star, s_a, s_b, eta, tol=1e-10):
    """Arc integral of |tau - t_star|^{-eta} over the panel, angles s_a..s_b.

    Finite for eta in [0,1) even when the singular point lies on the panel;
    the panel is split at the foot of the singularity and each side is
    integrated with the grading u = v^{1/(1-eta)} that removes the algebraic
    endpoint singularity.
    """
    if eta >= 1.0 or eta < 0.0:
        raise DivergentKernelError(f"arc kernel divergent for eta = {eta}")
    if s_b <= s_a:
        raise InputError("panel must have positive length")
    if s_b - s_a > 2.0 * np.pi + 1e-12:
        raise InputError("panel length must not exceed a full period")
    if eta == 0.0:
        return s_b - s_a

    def kernel(sig):
        return np.abs(2.0 * np.sin(0.5 * (sig - s_star))) ** (-eta)

    # position of the singularity relative to the panel, mod 2pi
    rel = np.remainder(s_star - s_a, 2.0 * np.pi)
    length = s_b - s_a
    if rel <= length or abs(rel - 2.0 * np.pi) < 1e-14:
        foot = s_a + (0.0 if abs(rel - 2.0 * np.pi) < 1e-14 else rel)
        total = 0.0
        for width in (s_b - foot, foot - s_a):
            if width < 1e-15:
                continue

            # u = width * v^{1/(1-eta)} absorbs the u^-eta endpoint singularity:
            # |2 sin(u/2)|^-eta du = (width^{1-eta}/(1-eta)) (sin(u/2)/(u/2))^-eta dv
            def integrand(v, _w=width):
                u = _w * v ** (1.0 / (1.0 - eta))
                sinc = np.sin(0.5 * u) / (0.5 * u) if u > 1e-300 else 1.0
                return _w ** (1.0 - eta) / (1.0 - eta) * sinc ** (-eta)

            val, _ = quad(integrand, 0.0, 1.0, epsabs=tol / 4, epsrel=1e-12, limit=200)
            total += val
        return total

    # singularity off the panel: integrand smooth, adaptive Gauss suffices
    return adaptive_gauss(kernel, s_a, s_b, tol=tol)


def weak_circle_total(s_star, eta, tol=1e-10):
    """Whole-circle arc integral of |tau - t_star|^{-eta} (oracle helper)."""
    return weak_panel(s_star, s_star - np.pi, s_star + np.pi, eta, tol=tol)


def pv_oracle(f, s, resolution):
    """Midpoint-trapezoid estimate of (1/2pi) PV int f(sigma) cot((sigma-s)/2) dsigma.

    The grid is symmetric about s with one node-symmetric exclusion window
    (s - h/2, s + h/2), which keeps the estimator consistent with the PV
    limit; accuracy is at least O(resolution^-2) for smooth periodic f.
    """
    if resolution < 1000:
        raise InputError("oracle resolution must be >= 1e3")
    h = 2.0 * np.pi / resolution
    sigma = s + (np.arange(resolution) + 0.5) * h
    vals = np.asarray(f(sigma), dtype=complex)
    return np.sum(vals / np.tan(0.5 * (sigma - s))) * h / (2.0 * np.pi)


def pv_segment_oracle(g_theta, t, tol=1e-10):
    """PV integral (1/pi) int_{-1}^{1} x(tau)/(tau - t) dtau via the cosine substitution.

    ``g_theta(theta)`` must return x(cos theta) * sin(theta), which is smooth
    for the Chebyshev-weighted densities used by the dominant-equation
    solvers.  Uses the Cauchy-weight quadrature in the theta variable.
    """
    if not -1.0 < t < 1.0:
        raise InputError("evaluation point must be interior to (-1, 1)")
    theta_t = np.arccos(t)

    def smooth(theta):
        d = np.cos(theta) - t
        r = theta - theta_t
        if abs(r) < 1e-7:
            # g(theta) * (theta - theta_t)/(cos theta - t) -> -g(theta_t)/sin(theta_t)
            return -g_theta(theta) / np.sin(theta_t)
        return g_theta(theta) * r / d

    val, _ = quad(smooth, 0.0, np.pi, weight="cauchy", wvar=theta_t,
                  epsabs=tol, epsrel=1e-12, limit=400)
    return val / np.pi

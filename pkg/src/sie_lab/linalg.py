"""Dense complex solves, Hadamard dominance diagnostics, synchronous block Jacobi."""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla


def _lu_factor_quiet(matrix):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        return sla.lu_factor(matrix)

from .errors import (
    InputError,
    NonContractionError,
    SingularBlockError,
    SingularSystemError,
)


@dataclass
class DenseSystem:
    """Square complex system C x = F."""

    matrix: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        self.rhs = np.asarray(self.rhs, dtype=complex)
        m, k = self.matrix.shape
        if m != k:
            raise InputError(f"matrix must be square, got {self.matrix.shape}")
        if self.rhs.shape != (m,):
            raise InputError("right-hand side length does not match the matrix")
        if not (np.all(np.isfinite(self.matrix.view(float))) and
                np.all(np.isfinite(self.rhs.view(float)))):
            raise InputError("system entries must be finite")

    @property
    def dimension(self):
        return self.matrix.shape[0]


@dataclass
class DominanceReport:
    """Row margins m_j = |c_jj| - sum_{k != j} |c_jk|."""

    margins: np.ndarray
    min_margin: float
    dominant: bool

    @property
    def contraction(self):
        """Point-Jacobi contraction estimate q = max_j off_j / |c_jj| (inf if a zero diagonal)."""
        return self._q

    _q: float = field(default=np.inf, repr=False)


@dataclass
class SolveReport:
    """Outcome of one linear or iterative solve."""

    residual: float
    dominance: DominanceReport = None
    iterations: int = 0
    metadata: dict = field(default_factory=dict)


def hadamard_margins(sys: DenseSystem) -> DominanceReport:
    """Row dominance margins of the system matrix."""
    a = np.abs(sys.matrix)
    diag = np.diag(a)
    off = a.sum(axis=1) - diag
    margins = diag - off
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(diag > 0, off / diag, np.inf)
    report = DominanceReport(margins=margins,
                             min_margin=float(margins.min()),
                             dominant=bool(np.all(margins > 0)))
    report._q = float(np.max(q))
    return report


def lu_solve(sys: DenseSystem):
    """LU solve with deterministic partial pivoting.

    Returns (solution, report); the report carries the relative inf-norm
    residual and the dominance diagnostics of the matrix.
    """
    lu, piv = _lu_factor_quiet(sys.matrix)
    scale = np.abs(sys.matrix).max()
    if scale == 0 or np.min(np.abs(np.diag(lu))) < 1e-14 * scale:
        raise SingularSystemError("matrix is numerically singular")
    x = sla.lu_solve((lu, piv), sys.rhs)
    denom = np.abs(sys.rhs).max()
    res = np.abs(sys.matrix @ x - sys.rhs).max() / (denom if denom > 0 else 1.0)
    return x, SolveReport(residual=float(res), dominance=hadamard_margins(sys))


@dataclass
class BlockPartition:
    """Row/column partition of a DenseSystem into P contiguous blocks of size L."""

    system: DenseSystem
    blocks: int

    def __post_init__(self):
        m = self.system.dimension
        if self.blocks < 1 or m % self.blocks:
            raise InputError(f"block count {self.blocks} must divide dimension {m}")
        self.size = m // self.blocks
        self._factors = []
        scale = np.abs(self.system.matrix).max()
        for k in range(self.blocks):
            blk = self._block(k, k)
            try:
                lu, piv = _lu_factor_quiet(blk)
            except sla.LinAlgError as exc:  # pragma: no cover - scipy raises rarely
                raise SingularBlockError(k) from exc
            if np.min(np.abs(np.diag(lu))) < 1e-14 * max(scale, 1e-300):
                raise SingularBlockError(k)
            self._factors.append((lu, piv))

    def _block(self, i, j):
        L = self.size
        return self.system.matrix[i * L:(i + 1) * L, j * L:(j + 1) * L]

    def contraction_estimate(self):
        """Row-wise block-Jacobi contraction bound from Hadamard margins.

        q_j = (off-block row sum) / (|c_jj| - in-block off-diagonal row sum);
        finite and < 1 whenever the matrix is strictly row dominant.
        """
        a = np.abs(self.system.matrix)
        m = self.system.dimension
        L = self.size
        q = np.empty(m)
        for j in range(m):
            b = j // L
            inside = a[j, b * L:(b + 1) * L].sum() - a[j, j]
            outside = a[j].sum() - a[j, j] - inside
            denom = a[j, j] - inside
            q[j] = outside / denom if denom > 0 else np.inf
        return float(np.max(q))

    def sweep(self, x_prev):
        """One synchronous Jacobi sweep: every block solved against x_prev only."""
        x_prev = np.asarray(x_prev, dtype=complex)
        L = self.size
        x_next = np.empty_like(x_prev)
        for k in range(self.blocks):
            rhs = self.system.rhs[k * L:(k + 1) * L].copy()
            for l in range(self.blocks):
                if l != k:
                    rhs -= self._block(k, l) @ x_prev[l * L:(l + 1) * L]
            x_next[k * L:(k + 1) * L] = sla.lu_solve(self._factors[k], rhs)
        return x_next


def block_jacobi_sweep(part: BlockPartition, x_prev):
    return part.sweep(x_prev)


def block_jacobi_solve(sys: DenseSystem, blocks, x0=None, tol=1e-10, max_sweeps=10_000):
    """Iterate synchronous block Jacobi to the stopping rule.

    Stops when ||x_{m+1} - x_m||_inf < tol * (1 + ||x_{m+1}||_inf); refuses to
    iterate when the contraction estimate is >= 1.
    """
    part = BlockPartition(sys, blocks)
    q = part.contraction_estimate()
    if q >= 1.0:
        raise NonContractionError(
            f"block-Jacobi contraction estimate {q:.3g} >= 1; refusing to iterate")
    x = np.zeros(sys.dimension, dtype=complex) if x0 is None else np.asarray(x0, dtype=complex)
    for sweep in range(1, max_sweeps + 1):
        x_new = part.sweep(x)
        if np.abs(x_new - x).max() < tol * (1.0 + np.abs(x_new).max()):
            x = x_new
            break
        x = x_new
    else:
        raise NonContractionError(f"block Jacobi did not meet tol within {max_sweeps} sweeps")
    res = np.abs(sys.matrix @ x - sys.rhs).max() / max(np.abs(sys.rhs).max(), 1e-300)
    return x, SolveReport(residual=float(res), dominance=hadamard_margins(sys),
                          iterations=sweep, metadata={"q": q, "blocks": blocks})

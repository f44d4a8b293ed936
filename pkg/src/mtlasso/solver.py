"""Row-wise block coordinate descent for the multi-task Lasso.

Minimizes ``||y - x b||_F^2 / (2 n T) + lam * sum_j ||b_j||_2`` by cycling
through rows in ascending order.  Each row update is the closed-form group
soft-thresholding step; the residual matrix is maintained incrementally.
Optimality of the returned iterate is certified through the stationarity
conditions, never through the iteration count alone.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import ProblemData, group_norm_21, row_norms
from .errors import ConvergenceError, UsageError


@dataclass(frozen=True)
class SolverOptions:
    """Stopping rules for the coordinate-descent solver.

    ``tol`` bounds the largest Euclidean row change in a full sweep,
    ``kkt_tol`` the stationarity residual certified on return,
    ``support_tol`` the row-norm threshold for support membership.
    Defaults are deliberately tight: the interaction matrix is
    support-sensitive and a loose solve corrupts it.
    """

    max_iters: int = 10_000
    tol: float = 1e-9
    kkt_tol: float = 1e-6
    support_tol: float = 1e-10
    check_objective: bool = False

    def __post_init__(self):
        if self.tol <= 0 or self.kkt_tol <= 0:
            raise UsageError("tol and kkt_tol must be positive")
        if self.support_tol < 0:
            raise UsageError("support_tol must be nonnegative")
        if self.max_iters < 1:
            raise UsageError("max_iters must be positive")


@dataclass
class LassoFit:
    """Converged estimate with its certificate.

    ``support`` lists the rows whose Euclidean norm exceeds ``support_tol``,
    ascending.  ``kkt_residual`` is guaranteed at most ``kkt_tol``.
    """

    b_hat: np.ndarray
    support: list
    iterations_used: int
    kkt_residual: float
    objective: float
    lam: float
    residual: np.ndarray = field(repr=False)
    degenerate_columns: list = field(default_factory=list)


def objective_value(data, b, lam):
    """Penalized least-squares objective at ``b``."""
    r = data.y - data.x @ b
    n, t = data.y.shape
    return float(np.sum(r * r) / (2.0 * n * t) + lam * group_norm_21(b))


def kkt_residual(data, b, lam):
    """Largest violation of the stationarity conditions at ``b``.

    For a row j with nonzero norm the gradient of the smooth part must equal
    the penalty gradient: ``(y - x b)^T x_j = n T lam * b_j / ||b_j||``.
    For a zero row the correlation may not exceed the threshold:
    ``||(y - x b)^T x_j|| <= n T lam``.  Returns the max over rows of the
    corresponding residuals (Euclidean for active rows, positive part of the
    excess for inactive ones).
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (data.p, data.n_tasks):
        raise UsageError(
            f"coefficient matrix shape {b.shape} does not match data "
            f"({data.p} x {data.n_tasks})"
        )
    n, t = data.y.shape
    nt_lam = n * t * lam
    g = (data.y - data.x @ b).T @ data.x  # T x p
    norms = row_norms(b)
    worst = 0.0
    for j in range(data.p):
        gj = g[:, j]
        if norms[j] > 0.0:
            viol = float(np.linalg.norm(gj - nt_lam * b[j] / norms[j]))
        else:
            viol = max(0.0, float(np.linalg.norm(gj)) - nt_lam)
        if viol > worst:
            worst = viol
    return worst


def support(b, support_tol=1e-10):
    """Indices of rows with Euclidean norm above ``support_tol``, ascending."""
    return [int(j) for j in np.nonzero(row_norms(b) > support_tol)[0]]


def fit_multitask_lasso(data, lam, opts=None, init=None):
    """Solve the row-penalized multi-task Lasso by cyclic coordinate descent.

    Parameters
    ----------
    data : ProblemData
        Design and responses.
    lam : float
        Positive penalty level (dimensionless; the objective divides the
        quadratic term by n*T).
    opts : SolverOptions, optional
    init : array, optional
        Warm start, p x T.

    Returns
    -------
    LassoFit
        With ``kkt_residual <= opts.kkt_tol`` certified.

    Raises
    ------
    ConvergenceError
        If the sweep budget is exhausted before certification; carries the
        last iterate and its residual.
    """
    if not isinstance(data, ProblemData):
        data = ProblemData(*data)
    if not (lam > 0 and np.isfinite(lam)):
        raise UsageError(f"lam must be positive and finite, got {lam}")
    opts = opts or SolverOptions()
    x, y = data.x, data.y
    n, p = x.shape
    t = y.shape[1]
    nt_lam = float(n * t * lam)

    colsq = np.einsum("ij,ij->j", x, x)
    dead = [int(j) for j in np.nonzero(colsq == 0.0)[0]]
    if dead:
        warnings.warn(
            f"columns {dead} of the design are identically zero; the matching "
            "coefficient rows are pinned at zero",
            RuntimeWarning,
            stacklevel=2,
        )

    if init is None:
        b = np.zeros((p, t))
        r = y.copy()
    else:
        b = np.array(init, dtype=np.float64, order="C", copy=True)
        if b.shape != (p, t):
            raise UsageError(f"init shape {b.shape} does not match ({p}, {t})")
        b[dead, :] = 0.0
        r = y - x @ b

    tol = opts.tol
    sweeps = 0
    prev_obj = objective_value(data, b, lam) if opts.check_objective else None
    while sweeps < opts.max_iters:
        max_change = _kernels.cd_sweep(x, b, r, colsq, nt_lam)
        sweeps += 1
        if opts.check_objective:
            obj = objective_value(data, b, lam)
            assert obj <= prev_obj + 1e-12 * (1.0 + abs(prev_obj)), (
                f"objective increased across a sweep: {prev_obj} -> {obj}"
            )
            prev_obj = obj
        if max_change < tol:
            res = kkt_residual(data, b, lam)
            if res <= opts.kkt_tol:
                return LassoFit(
                    b_hat=b,
                    support=support(b, opts.support_tol),
                    iterations_used=sweeps,
                    kkt_residual=res,
                    objective=objective_value(data, b, lam),
                    lam=lam,
                    residual=y - x @ b,
                    degenerate_columns=dead,
                )
            # stationarity not yet certified: keep sweeping at tighter tol
            tol = max(tol * 0.1, 1e-300)
    raise ConvergenceError(
        f"coordinate descent did not certify optimality within "
        f"{opts.max_iters} sweeps (kkt residual {kkt_residual(data, b, lam):.3e})",
        last_iterate=b,
        diagnostics={
            "sweeps": sweeps,
            "kkt_residual": kkt_residual(data, b, lam),
            "last_max_row_change": float(max_change),
        },
    )

"""Nodewise regressions: one precision-matrix column at a time.

Regressing column j of the design on the remaining columns estimates (up to
sign and scale) the j-th column of the inverse covariance.  Both the
plug-in Lasso (penalty proportional to a supplied or pilot residual scale)
and the self-tuning scaled/square-root Lasso are provided; the latter
alternates Lasso solves with residual-scale updates until the scale is a
fixed point.  The single-task path of the multi-task solver is reused, so
one optimizer and one optimality certificate serve the whole package.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ProblemData
from .errors import ConvergenceError, NumericError, UsageError
from .solver import SolverOptions, fit_multitask_lasso

SCALED_LASSO_TOL = 1e-8
SCALED_LASSO_MAX_ALTERNATIONS = 50


@dataclass
class NodewiseFit:
    """Result of a nodewise regression for covariate ``j``.

    ``z_hat`` is the residual column ``x_j - x @ gamma_hat`` (``gamma_hat``
    carries an exact zero at position j), ``tau_hat`` the residual scale
    used by the penalty, ``inner_product`` equals ``z_hat . x_j`` and
    ``kkt_sup_norm`` is ``max_{k != j} |x_k . z_hat|``.
    """

    j: int
    gamma_hat: np.ndarray
    z_hat: np.ndarray = field(repr=False)
    tau_hat: float
    variant: str  # "plug_in_lasso" or "scaled_lasso"
    inner_product: float
    kkt_sup_norm: float
    penalty: float
    alternations: int = 0


def nodewise_penalty(tau, n, p, eta):
    """Penalty level ``tau (1 + eta) sqrt((2/n) log p)`` of the nodewise program."""
    return tau * (1.0 + eta) * math.sqrt(2.0 / n * math.log(p))


def _solve_dropped(x_drop, target, lam, opts, init=None):
    data = ProblemData(x_drop, target[:, None])
    return fit_multitask_lasso(data, lam, opts, init=init)


def fit_nodewise(x, j, eta=0.01, variant="scaled_lasso", opts=None, tau_init=None):
    """Fit the nodewise regression of design column ``j`` on the others.

    Parameters
    ----------
    x : array, n x p
        Design matrix with p >= 2 and a nonzero j-th column.
    j : int
        Covariate index (0-based).
    eta : float
        Small nonnegative slack in the penalty level.
    variant : {"scaled_lasso", "plug_in_lasso"}
        ``scaled_lasso`` self-tunes the residual scale by alternating
        solves and scale updates; ``plug_in_lasso`` performs a single solve
        at the scale ``tau_init`` (default: the conservative pilot
        ``||x_j||_2 / sqrt(n)``).
    opts : SolverOptions, optional
    tau_init : float, optional
        Starting or plug-in residual scale.

    Raises
    ------
    ConvergenceError
        If the scaled-Lasso alternation does not reach a fixed point; the
        error carries the scale trace.
    NumericError
        If the residual scale collapses (near-duplicate column).
    """
    x = np.asarray(x, dtype=np.float64)
    n, p = x.shape
    if p < 2:
        raise UsageError("nodewise regression needs at least two covariates")
    if not 0 <= j < p:
        raise UsageError(f"column index {j} out of range for p={p}")
    target = x[:, j].copy()
    target_norm = float(np.linalg.norm(target))
    if target_norm == 0.0:
        raise UsageError(f"design column {j} is identically zero")
    if eta < 0:
        raise UsageError("eta must be nonnegative")
    opts = opts or SolverOptions()
    keep = [k for k in range(p) if k != j]
    x_drop = np.ascontiguousarray(x[:, keep])

    pilot = target_norm / math.sqrt(n)
    tau = float(tau_init) if tau_init is not None else pilot

    if variant == "plug_in_lasso":
        lam = nodewise_penalty(tau, n, p, eta)
        fit = _solve_dropped(x_drop, target, lam, opts)
        gamma_drop = fit.b_hat[:, 0]
        alternations = 0
    elif variant == "scaled_lasso":
        trace = [tau]
        gamma_drop = None
        lam = None
        for alternations in range(1, SCALED_LASSO_MAX_ALTERNATIONS + 1):
            lam = nodewise_penalty(tau, n, p, eta)
            fit = _solve_dropped(
                x_drop, target, lam, opts,
                init=None if gamma_drop is None else gamma_drop[:, None],
            )
            gamma_drop = fit.b_hat[:, 0]
            tau_new = float(np.linalg.norm(fit.residual[:, 0])) / math.sqrt(n)
            trace.append(tau_new)
            if tau_new < 1e-12:
                raise NumericError(
                    f"residual scale collapsed to {tau_new:.3e} for column {j}; "
                    "the column is (numerically) in the span of the others"
                )
            if abs(tau_new - tau) <= SCALED_LASSO_TOL:
                tau = tau_new
                break
            tau = tau_new
        else:
            raise ConvergenceError(
                f"scaled-lasso alternation for column {j} did not stabilize in "
                f"{SCALED_LASSO_MAX_ALTERNATIONS} rounds",
                diagnostics={"tau_trace": trace},
            )
    else:
        raise UsageError(f"unknown nodewise variant {variant!r}")

    gamma = np.zeros(p)
    gamma[keep] = gamma_drop
    z = target - x @ gamma
    if variant == "scaled_lasso":
        # store the exact fixed point of the final residual
        tau = float(np.linalg.norm(z)) / math.sqrt(n)
    inner = float(z @ target)
    corr = x.T @ z
    corr[j] = 0.0
    return NodewiseFit(
        j=int(j),
        gamma_hat=gamma,
        z_hat=z,
        tau_hat=tau,
        variant=variant,
        inner_product=inner,
        kkt_sup_norm=float(np.max(np.abs(corr))),
        penalty=float(lam),
        alternations=alternations,
    )


def tau_alternatives(fit, n):
    """The two interchangeable residual-scale estimates.

    ``tau_from_inner = sqrt(z . x_j / n)`` and
    ``tau_from_norm = ||z||_2 / sqrt(n)``; either may divide the debiased
    statistic.  A nonpositive inner product signals a failed nodewise fit.
    """
    if fit.inner_product <= 0:
        raise NumericError(
            f"inner product z.x_j = {fit.inner_product:.3e} is not positive; "
            "the nodewise fit is unusable for inference"
        )
    return {
        "tau_from_inner": math.sqrt(fit.inner_product / n),
        "tau_from_norm": float(np.linalg.norm(fit.z_hat)) / math.sqrt(n),
    }

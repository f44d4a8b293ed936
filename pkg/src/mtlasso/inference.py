"""Debiased statistics: normal intervals and chi-square confidence ellipsoids.

All statistics share the corrected residual ``Rc = (y - x b_hat)(I - A/n)^{-1}``
where ``A`` is the interaction matrix.  With known design covariance the
debiasing direction is ``z0 = x Sigma^{-1} a`` for a direction ``a``
normalized so that ``a^T Sigma^{-1} a = 1``; with unknown covariance the
nodewise residual ``z_hat`` plays the role of ``z0`` for a canonical
direction ``e_j``.

Each confidence ellipsoid is returned in closed form ``{theta :
(theta-u)^T C (theta-u) <= 1}``; the defining pivot statistic is also
exposed (:func:`ellipsoid_pivot_value`) so membership can always be
cross-checked against the inequality that motivates the region.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.special import erf, gammainc, gammaln

from .errors import NumericError, UsageError
from .interaction import InteractionMatrix, correction_matrix
from .solver import SolverOptions, fit_multitask_lasso

# ---------------------------------------------------------------------------
# chi-square machinery


def chi_cdf(x, t):
    """CDF of the square root of a chi-square with ``t`` degrees of freedom."""
    x = np.asarray(x, dtype=np.float64)
    out = np.where(x > 0, gammainc(t / 2.0, np.square(np.maximum(x, 0.0)) / 2.0), 0.0)
    return out if out.ndim else float(out)


def chi_quantile(t, alpha):
    """Upper quantile q with ``P(sqrt(chi2_t) <= q) = 1 - alpha``.

    Solved by safeguarded Newton within a bracket; the returned q satisfies
    the defining equation to 1e-10 or better.  ``chi_quantile(1, alpha)``
    is the two-sided standard normal quantile, which is how every z-value
    in the package is produced (a single special-function code path).
    """
    if not (isinstance(t, (int, np.integer)) and t >= 1):
        raise UsageError(f"degrees of freedom must be a positive integer, got {t}")
    if not 0.0 < alpha < 1.0:
        raise UsageError(f"alpha must lie in (0, 1), got {alpha}")
    target = 1.0 - alpha

    def f(q):
        return gammainc(t / 2.0, q * q / 2.0) - target

    lo, hi = 0.0, max(math.sqrt(t), 1.0)
    while f(hi) < 0.0:
        lo = hi
        hi *= 2.0
        if hi > 1e9:  # unreachable for valid alpha
            raise NumericError("failed to bracket the chi quantile")

    log_gamma_half_t = gammaln(t / 2.0)

    def fprime(q):
        # d/dq P(t/2, q^2/2) = q * (q^2/2)^(t/2-1) exp(-q^2/2) / Gamma(t/2)
        if q <= 0.0:
            return 0.0
        lg = (t / 2.0 - 1.0) * math.log(q * q / 2.0) - q * q / 2.0 - log_gamma_half_t
        return q * math.exp(lg)

    q = 0.5 * (lo + hi)
    for _ in range(200):
        val = f(q)
        if val > 0.0:
            hi = q
        else:
            lo = q
        d = fprime(q)
        step = val / d if d > 0.0 else 0.0
        q_new = q - step
        if not lo < q_new < hi:
            q_new = 0.5 * (lo + hi)
        if abs(q_new - q) <= 1e-12 * (1.0 + q_new):
            q = q_new
            break
        q = q_new
    if abs(f(q)) > 1e-9:
        raise NumericError(f"chi quantile solve stalled at residual {f(q):.2e}")
    return float(q)


def z_quantile_two_sided(alpha):
    """z with ``P(|N(0,1)| <= z) = 1 - alpha``."""
    return chi_quantile(1, alpha)


def normal_cdf(x):
    return 0.5 * (1.0 + erf(np.asarray(x, dtype=np.float64) / math.sqrt(2.0)))


# ---------------------------------------------------------------------------
# result containers


@dataclass(frozen=True)
class NormalInterval:
    """Symmetric confidence interval ``center +- half_length``."""

    center: float
    half_length: float
    alpha: float
    variant: str  # "known_sigma", "unknown_sigma", "single_task"

    @property
    def lower(self):
        return self.center - self.half_length

    @property
    def upper(self):
        return self.center + self.half_length

    @property
    def length(self):
        return 2.0 * self.half_length


@dataclass(frozen=True)
class EllipsoidRegion:
    """Confidence region ``{theta : (theta-u)^T C (theta-u) <= 1}``.

    ``q`` is the chi quantile the region was built from, so the defining
    statistic at any point is ``q * sqrt(qform(theta))``.
    """

    center_u: np.ndarray
    shape_c: np.ndarray
    alpha: float
    variant: str  # "hat_E", "check_E", "check_E_sigma_hat", "hat_E_j", "check_E_sigma_hat_j"
    q: float

    def qform(self, theta):
        d = np.asarray(theta, dtype=np.float64).ravel() - self.center_u
        return float(d @ self.shape_c @ d)

    def contains(self, theta):
        return self.qform(theta) <= 1.0


@dataclass(frozen=True)
class PivotReport:
    """Value of a pivotal statistic together with the nuisances used."""

    value: float
    kind: str
    nuisance: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# shared pieces


def sigma_hat(data, b_hat):
    """Residual scale estimate ``sqrt(||y - x b_hat||_F^2 / (n T))``."""
    r = data.y - data.x @ np.asarray(b_hat, dtype=np.float64)
    n, t = data.y.shape
    return float(np.linalg.norm(r)) / math.sqrt(n * t)


@dataclass(frozen=True)
class NormalizedDirection:
    """A direction rescaled to unit precision-norm, with its debiasing column."""

    a: np.ndarray
    sigma_inv_a: np.ndarray
    z0: np.ndarray | None


def normalize_direction(a, sigma, x=None):
    """Rescale ``a`` so that ``a^T Sigma^{-1} a = 1``; optionally build z0.

    Returns a :class:`NormalizedDirection` carrying the scaled direction,
    ``Sigma^{-1} a`` for the scaled direction, and ``z0 = x Sigma^{-1} a``
    when the design is supplied.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    sigma = np.asarray(sigma, dtype=np.float64)
    if not np.any(a != 0):
        raise UsageError("direction must be nonzero")
    try:
        cho = scipy.linalg.cho_factor(sigma, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NumericError(f"covariance is not positive definite: {exc}") from exc
    u = scipy.linalg.cho_solve(cho, a)
    scale = math.sqrt(float(a @ u))
    a_n = a / scale
    u_n = u / scale
    z0 = None if x is None else np.asarray(x, dtype=np.float64) @ u_n
    return NormalizedDirection(a=a_n, sigma_inv_a=u_n, z0=z0)


def _t_lt_n(t, n):
    if t >= n:
        raise UsageError(f"chi-square machinery requires T < n, got T={t}, n={n}")


def _corrected_residual(data, b_hat, a_hat):
    """Residual matrix times the degrees-of-freedom correction."""
    r = data.y - data.x @ np.asarray(b_hat, dtype=np.float64)
    corr = correction_matrix(a_hat, data.n)
    return r, r @ corr


def _gamma_solver(r):
    """Cholesky of the residual Gram matrix; raises when it is singular."""
    gram = r.T @ r
    try:
        return scipy.linalg.cho_factor(gram, lower=True), gram
    except scipy.linalg.LinAlgError as exc:
        raise NumericError(
            "residual Gram matrix is singular: the number of tasks reaches "
            "the effective residual rank"
        ) from exc


def _a_hat_matrix(a_hat):
    return a_hat.a_hat if isinstance(a_hat, InteractionMatrix) else np.asarray(a_hat, dtype=np.float64)


# ---------------------------------------------------------------------------
# normal pivots and intervals


def normal_pivot_known_sigma(data, b_hat, a_hat, a, b, z0, b_star):
    """Simulation diagnostic: the debiased z-score against the truth.

    ``(n a^T (b_hat - b_star) b + z0^T Rc b) / ||Rc b||`` with
    ``Rc = (y - x b_hat)(I - A/n)^{-1}``; asymptotically standard normal.
    """
    b = np.asarray(b, dtype=np.float64).ravel()
    _, rc = _corrected_residual(data, b_hat, a_hat)
    rb = rc @ b
    den = float(np.linalg.norm(rb))
    if den == 0.0:
        raise NumericError("corrected residual annihilates the task vector")
    bias = data.n * float(a @ (np.asarray(b_hat) - np.asarray(b_star)) @ b)
    num = bias + float(z0 @ rb)
    return PivotReport(value=num / den, kind="normal_known", nuisance={"den": den})


def ci_known_sigma(data, b_hat, a_hat, a, z0, alpha=0.05, task=0):
    """Confidence interval for ``a^T beta`` on one task, known covariance.

    ``a`` must be normalized (unit precision-norm) and ``z0`` built from it;
    use :func:`normalize_direction`.
    """
    _, rc = _corrected_residual(data, b_hat, a_hat)
    col = rc[:, task]
    z = z_quantile_two_sided(alpha)
    center = float(a @ np.asarray(b_hat)[:, task]) + float(z0 @ col) / data.n
    half = z * float(np.linalg.norm(col)) / data.n
    return NormalInterval(center=center, half_length=half, alpha=alpha, variant="known_sigma")


def _tau_for(nodewise_fit, n, tau_choice, true_tau=None):
    if tau_choice == "true_tau":
        if true_tau is None:
            raise UsageError("tau_choice='true_tau' needs the true scale")
        return float(true_tau)
    if tau_choice == "inner":
        if nodewise_fit.inner_product <= 0:
            raise NumericError("nonpositive inner product; nodewise fit unusable")
        return math.sqrt(nodewise_fit.inner_product / n)
    if tau_choice == "norm":
        return float(np.linalg.norm(nodewise_fit.z_hat)) / math.sqrt(n)
    raise UsageError(f"unknown tau_choice {tau_choice!r}")


def normal_pivot_unknown_sigma(
    data, b_hat, a_hat, nodewise_fit, b, b_star, tau_choice="norm", true_tau=None
):
    """Debiased z-score for row j of the truth without knowing Sigma.

    Uses the nodewise residual in place of z0 and rescales by the estimated
    residual scale ``tau`` (choice of ``sqrt(z.x_j/n)``, ``||z||/sqrt(n)``,
    or a supplied true value).
    """
    if nodewise_fit.inner_product <= 0:
        raise NumericError("nonpositive inner product; nodewise fit unusable")
    b = np.asarray(b, dtype=np.float64).ravel()
    _, rc = _corrected_residual(data, b_hat, a_hat)
    rb = rc @ b
    den = float(np.linalg.norm(rb))
    if den == 0.0:
        raise NumericError("corrected residual annihilates the task vector")
    j = nodewise_fit.j
    bias = data.n * float((np.asarray(b_hat)[j] - np.asarray(b_star)[j]) @ b)
    corr_term = data.n / nodewise_fit.inner_product * float(nodewise_fit.z_hat @ rb)
    tau = _tau_for(nodewise_fit, data.n, tau_choice, true_tau)
    return PivotReport(
        value=tau * (bias + corr_term) / den,
        kind="normal_unknown",
        nuisance={"tau": tau, "tau_choice": tau_choice, "den": den},
    )


def ci_unknown_sigma(data, b_hat, a_hat, nodewise_fit, alpha=0.05, task=0, tau_choice="norm"):
    """Confidence interval for entry (j, task) of the coefficient matrix."""
    if nodewise_fit.inner_product <= 0:
        raise NumericError("nonpositive inner product; nodewise fit unusable")
    _, rc = _corrected_residual(data, b_hat, a_hat)
    col = rc[:, task]
    j = nodewise_fit.j
    tau = _tau_for(nodewise_fit, data.n, tau_choice)
    z = z_quantile_two_sided(alpha)
    center = float(np.asarray(b_hat)[j, task]) + float(nodewise_fit.z_hat @ col) / nodewise_fit.inner_product
    half = z * float(np.linalg.norm(col)) / (tau * data.n)
    return NormalInterval(center=center, half_length=half, alpha=alpha, variant="unknown_sigma")


# ---------------------------------------------------------------------------
# chi-square pivots (simulation diagnostics, evaluated at the truth)


def chi_pivot_known_sigma(data, b_hat, a_hat, a, z0, b_star, weighting="gamma_hat"):
    """Chi statistic at the truth, known covariance.

    ``weighting="gamma_hat"``: ``sqrt(1 - T/n) ||Gamma^{-1/2} xi||`` with
    ``xi = (y - x b_hat)^T z0 + (n I - A)(b_hat - b_star)^T a``.
    ``weighting="sigma_hat"``: ``||xi_check|| / (sigma_hat sqrt(n))`` with
    ``xi_check = (I - A/n)^{-1} (y - x b_hat)^T z0 + n (b_hat - b_star)^T a``.
    Both converge to the square root of a chi-square with T degrees of
    freedom.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    am = _a_hat_matrix(a_hat)
    n, t = data.y.shape
    r = data.y - data.x @ np.asarray(b_hat, dtype=np.float64)
    diff = (np.asarray(b_hat) - np.asarray(b_star)).T @ a
    if weighting == "gamma_hat":
        _t_lt_n(t, n)
        xi = r.T @ z0 + (n * np.eye(t) - am) @ diff
        cho, _ = _gamma_solver(r)
        w = scipy.linalg.cho_solve(cho, xi)
        val = math.sqrt(1.0 - t / n) * math.sqrt(float(xi @ w))
        return PivotReport(value=val, kind="chi_known", nuisance={})
    if weighting == "sigma_hat":
        sh = sigma_hat(data, b_hat)
        if sh <= 0:
            raise NumericError("residual scale is zero")
        corr = correction_matrix(a_hat, n)
        xi_check = corr @ (r.T @ z0) + n * diff
        val = float(np.linalg.norm(xi_check)) / (sh * math.sqrt(n))
        return PivotReport(value=val, kind="chi_sigma_hat", nuisance={"sigma_hat": sh})
    raise UsageError(f"unknown weighting {weighting!r}")


def chi_pivot_unknown_sigma(data, b_hat, a_hat, nodewise_fit, b_star, weighting="gamma_hat"):
    """Chi statistic at the truth using the nodewise residual.

    ``weighting="gamma_hat"``: ``sqrt(n - T)/||z|| * ||Gamma^{-1/2}(r^T z +
    c (n I - A) d)||`` where ``c = z.x_j / n`` and ``d`` is the error on row
    j.  ``weighting="sigma_hat"`` replaces the Gram weighting by
    ``1/(||z|| sigma_hat)``.
    """
    if nodewise_fit.inner_product <= 0:
        raise NumericError("nonpositive inner product; nodewise fit unusable")
    am = _a_hat_matrix(a_hat)
    n, t = data.y.shape
    j = nodewise_fit.j
    z = nodewise_fit.z_hat
    c = nodewise_fit.inner_product / n
    r = data.y - data.x @ np.asarray(b_hat, dtype=np.float64)
    diff = np.asarray(b_hat)[j] - np.asarray(b_star)[j]
    xi_j = r.T @ z + c * ((n * np.eye(t) - am) @ diff)
    znorm = float(np.linalg.norm(z))
    if weighting == "gamma_hat":
        _t_lt_n(t, n)
        cho, _ = _gamma_solver(r)
        w = scipy.linalg.cho_solve(cho, xi_j)
        val = math.sqrt(n - t) / znorm * math.sqrt(float(xi_j @ w))
        return PivotReport(value=val, kind="chi_unknown", nuisance={})
    if weighting == "sigma_hat":
        sh = sigma_hat(data, b_hat)
        if sh <= 0:
            raise NumericError("residual scale is zero")
        val = float(np.linalg.norm(xi_j)) / (znorm * sh)
        return PivotReport(value=val, kind="chi_sigma_hat_unknown", nuisance={"sigma_hat": sh})
    raise UsageError(f"unknown weighting {weighting!r}")


# ---------------------------------------------------------------------------
# confidence ellipsoids


def ellipsoid_known_sigma(data, b_hat, a_hat, a, z0, alpha=0.05, variant="hat_E"):
    """Confidence ellipsoid for ``B^T a`` with known covariance.

    ``variant="hat_E"`` keeps the raw statistic and has shape
    ``q^{-2} (1 - T/n) (n I - A) Gamma^{-1} (n I - A)``;
    ``variant="check_E"`` applies the correction to the residual term first
    and has shape ``q^{-2} (1 - T/n) n^2 Gamma^{-1}``.  Both are centered at
    the debiased row estimate.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    am = _a_hat_matrix(a_hat)
    n, t = data.y.shape
    _t_lt_n(t, n)
    r = data.y - data.x @ np.asarray(b_hat, dtype=np.float64)
    cho, gram = _gamma_solver(r)
    gram_inv = scipy.linalg.cho_solve(cho, np.eye(t))
    gram_inv = 0.5 * (gram_inv + gram_inv.T)
    q = chi_quantile(t, alpha)
    rtz = r.T @ z0
    base = np.asarray(b_hat).T @ a
    n_i_a = n * np.eye(t) - am
    if variant == "hat_E":
        u = base + np.linalg.solve(n_i_a, rtz)
        c = (1.0 - t / n) / q**2 * (n_i_a @ gram_inv @ n_i_a)
    elif variant == "check_E":
        corr = correction_matrix(a_hat, n)
        u = base + corr @ rtz / n
        c = (1.0 - t / n) / q**2 * n**2 * gram_inv
    else:
        raise UsageError(f"unknown variant {variant!r}")
    return EllipsoidRegion(center_u=u, shape_c=0.5 * (c + c.T), alpha=alpha, variant=variant, q=q)


def ellipsoid_sigma_hat(data, b_hat, a_hat, a, z0, alpha=0.05):
    """Spherical confidence region for ``B^T a`` scaled by sigma_hat."""
    a = np.asarray(a, dtype=np.float64).ravel()
    n, t = data.y.shape
    r = data.y - data.x @ np.asarray(b_hat, dtype=np.float64)
    sh = sigma_hat(data, b_hat)
    if sh <= 0:
        raise NumericError("residual scale is zero; the region is degenerate")
    q = chi_quantile(t, alpha)
    corr = correction_matrix(a_hat, n)
    u = np.asarray(b_hat).T @ a + corr @ (r.T @ z0) / n
    c = n / (q * sh) ** 2 * np.eye(t)
    return EllipsoidRegion(center_u=u, shape_c=c, alpha=alpha, variant="check_E_sigma_hat", q=q)


def ellipsoid_unknown_sigma(data, b_hat, a_hat, nodewise_fit, alpha=0.05, scale="gamma_hat_matrix"):
    """Confidence ellipsoid for row j of the coefficient matrix, unknown Sigma.

    ``scale="gamma_hat_matrix"`` weights by the residual Gram matrix;
    ``scale="sigma_hat"`` uses the scalar residual scale instead.
    """
    if nodewise_fit.inner_product <= 0:
        raise NumericError("nonpositive inner product; nodewise fit unusable")
    am = _a_hat_matrix(a_hat)
    n, t = data.y.shape
    j = nodewise_fit.j
    z = nodewise_fit.z_hat
    znorm2 = float(z @ z)
    cfac = nodewise_fit.inner_product / n
    r = data.y - data.x @ np.asarray(b_hat, dtype=np.float64)
    q = chi_quantile(t, alpha)
    n_i_a = n * np.eye(t) - am
    u = np.asarray(b_hat)[j] + np.linalg.solve(n_i_a, r.T @ z) / cfac
    if scale == "gamma_hat_matrix":
        _t_lt_n(t, n)
        cho, _ = _gamma_solver(r)
        gram_inv = scipy.linalg.cho_solve(cho, np.eye(t))
        gram_inv = 0.5 * (gram_inv + gram_inv.T)
        c = (n - t) / znorm2 * cfac**2 / q**2 * (n_i_a @ gram_inv @ n_i_a)
        variant = "hat_E_j"
    elif scale == "sigma_hat":
        sh = sigma_hat(data, b_hat)
        if sh <= 0:
            raise NumericError("residual scale is zero; the region is degenerate")
        c = cfac**2 / (znorm2 * sh**2 * q**2) * (n_i_a @ n_i_a)
        variant = "check_E_sigma_hat_j"
    else:
        raise UsageError(f"unknown scale {scale!r}")
    return EllipsoidRegion(center_u=u, shape_c=0.5 * (c + c.T), alpha=alpha, variant=variant, q=q)


def ellipsoid_pivot_value(data, b_hat, a_hat, theta, variant, a=None, z0=None, nodewise_fit=None):
    """Defining statistic of an ellipsoid variant evaluated at ``theta``.

    Membership of ``theta`` in the matching region is exactly
    ``ellipsoid_pivot_value(...) <= q``; this is the independent route used
    to validate the closed forms.
    """
    theta = np.asarray(theta, dtype=np.float64).ravel()
    am = _a_hat_matrix(a_hat)
    n, t = data.y.shape
    r = data.y - data.x @ np.asarray(b_hat, dtype=np.float64)
    n_i_a = n * np.eye(t) - am
    if variant in ("hat_E", "check_E", "check_E_sigma_hat"):
        if a is None or z0 is None:
            raise UsageError(f"variant {variant!r} needs a and z0")
        a = np.asarray(a, dtype=np.float64).ravel()
        base = np.asarray(b_hat).T @ a
        if variant == "hat_E":
            _t_lt_n(t, n)
            vec = r.T @ z0 + n_i_a @ (base - theta)
            cho, _ = _gamma_solver(r)
            return math.sqrt(1.0 - t / n) * math.sqrt(
                float(vec @ scipy.linalg.cho_solve(cho, vec))
            )
        corr = correction_matrix(a_hat, n)
        vec = corr @ (r.T @ z0) + n * (base - theta)
        if variant == "check_E":
            _t_lt_n(t, n)
            cho, _ = _gamma_solver(r)
            return math.sqrt(1.0 - t / n) * math.sqrt(
                float(vec @ scipy.linalg.cho_solve(cho, vec))
            )
        sh = sigma_hat(data, b_hat)
        return float(np.linalg.norm(vec)) / (sh * math.sqrt(n))
    if variant in ("hat_E_j", "check_E_sigma_hat_j"):
        if nodewise_fit is None:
            raise UsageError(f"variant {variant!r} needs a nodewise fit")
        z = nodewise_fit.z_hat
        cfac = nodewise_fit.inner_product / n
        vec = r.T @ z + cfac * (n_i_a @ (np.asarray(b_hat)[nodewise_fit.j] - theta))
        if variant == "hat_E_j":
            _t_lt_n(t, n)
            cho, _ = _gamma_solver(r)
            return math.sqrt(n - t) / float(np.linalg.norm(z)) * math.sqrt(
                float(vec @ scipy.linalg.cho_solve(cho, vec))
            )
        sh = sigma_hat(data, b_hat)
        return float(np.linalg.norm(vec)) / (float(np.linalg.norm(z)) * sh)
    raise UsageError(f"unknown variant {variant!r}")


def test_row_null(region):
    """Reject the all-zero row hypothesis iff 0 lies outside the region."""
    qf = region.qform(np.zeros_like(region.center_u))
    return {
        "reject": bool(qf > 1.0),
        "pivot_at_zero": float(region.q * math.sqrt(max(qf, 0.0))),
    }


# ---------------------------------------------------------------------------
# single-task baseline and width comparison


def single_task_interval(x, y_task, a, z0, lam, alpha=0.05, opts=None):
    """Debiased Lasso interval from one task only.

    Fits the plain Lasso on ``(x, y_task)``, applies the scalar
    degrees-of-freedom adjustment ``(1 - |S|/n)^{-1}``, and returns the
    interval of length ``2 z_{alpha/2} ||resid|| (1 - |S|/n)^{-1} / n``.
    """
    from .core import ProblemData

    x = np.asarray(x, dtype=np.float64)
    y_task = np.asarray(y_task, dtype=np.float64).ravel()
    fit = fit_multitask_lasso(ProblemData(x, y_task[:, None]), lam, opts or SolverOptions())
    n = x.shape[0]
    s_size = len(fit.support)
    if s_size >= n:
        raise NumericError(f"support size {s_size} >= n = {n}; no adjustment exists")
    resid = fit.residual[:, 0]
    factor = 1.0 / (1.0 - s_size / n)
    z = z_quantile_two_sided(alpha)
    a = np.asarray(a, dtype=np.float64).ravel()
    center = float(a @ fit.b_hat[:, 0]) + factor * float(z0 @ resid) / n
    half = z * factor * float(np.linalg.norm(resid)) / n
    return NormalInterval(center=center, half_length=half, alpha=alpha, variant="single_task")


def width_comparison(multi, single):
    """Compare interval widths; negative relative change favors multi-task.

    The comparison itself is data-driven, so acting on it alongside the
    interval constitutes two looks at the data; adjust the level (e.g.
    Bonferroni) when doing both.
    """
    if multi.alpha != single.alpha:
        raise UsageError("intervals must be built at the same alpha")
    if single.half_length <= 0:
        raise UsageError("single-task interval has zero length")
    rel = (multi.length - single.length) / single.length
    return {
        "prefer_multitask": bool(single.half_length > multi.half_length),
        "relative_change": float(rel),
        "multiple_testing_note": "comparing then reporting one interval is a "
        "two-test procedure; use a corrected level",
    }

"""Monte-Carlo validation engine for the debiased multi-task statistics.

A campaign draws replicates of a row-sparse multi-task regression with a
controlled design covariance, fits the estimator on each, builds the
interaction matrix, and collects the pivotal statistics and region-coverage
indicators.  Summaries report coverage rates (with Wilson intervals),
Kolmogorov-Smirnov distances against the limiting laws, QQ pairs, and
interval-width comparisons.

Determinism contract: a campaign is a pure function of its configuration.
Child randomness is derived per replicate from ``(seed, replicate, stream)``
through a counter-based generator, results are reduced in replicate order,
and BLAS threading is pinned inside the campaign, so any worker count
produces identical bytes.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from threadpoolctl import threadpool_limits

from . import inference
from .core import ProblemData, default_lambda
from .errors import CampaignError, UsageError
from .interaction import interaction_fast
from .nodewise import fit_nodewise
from .solver import fit_multitask_lasso

# stream tags for child-seed derivation
_STREAM_SIGMA = 1
_STREAM_BSTAR = 2
_STREAM_REPLICATE = 3

PIVOT_KINDS = (
    "normal_known",
    "normal_unknown",
    "chi_known",
    "chi_unknown",
    "chi_sigma_hat",
    "chi_sigma_hat_unknown",
)
REGION_VARIANTS = ("hat_E", "check_E", "check_E_sigma_hat", "hat_E_j", "check_E_sigma_hat_j")

_NEEDS_NODEWISE = {
    "normal_unknown",
    "chi_unknown",
    "chi_sigma_hat_unknown",
    "hat_E_j",
    "check_E_sigma_hat_j",
}


def _rng(*keys):
    """Counter-based generator keyed on a tuple of nonnegative integers."""
    keys = [int(k) for k in keys]
    if any(k < 0 for k in keys):
        raise UsageError(f"seed keys must be nonnegative, got {keys}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(keys)))


@dataclass(frozen=True)
class SimConfig:
    """Campaign configuration.

    ``s`` is the number of nonzero rows of the truth, ``s_omega`` the
    sparsity of the first precision-matrix column, ``overlap_mode`` whether
    the two supports are forced to nest ("overlapping") or kept disjoint
    ("no_overlap").  ``variants`` selects which pivot kinds to collect;
    ``with_width`` adds the single-task interval comparison on task 0.
    """

    n: int = 400
    p: int = 800
    t: int = 5
    s: int = 5
    s_omega: int = 5
    sigma: float = 1.0
    alpha: float = 0.05
    n_sim: int = 300
    overlap_mode: str = "no_overlap"
    seed: int = 0
    variants: tuple = ("normal_known", "chi_known", "chi_sigma_hat")
    with_width: bool = False
    eta1: float = 0.0
    eta2: float = 0.0

    def __post_init__(self):
        if min(self.n, self.p, self.t, self.s_omega, self.n_sim) < 1 or self.s < 0:
            raise UsageError("n, p, t, s_omega, n_sim must be positive and s nonnegative")
        if self.s >= self.p or self.s_omega >= self.p:
            raise UsageError("need s < p and s_omega < p")
        if self.overlap_mode not in ("overlapping", "no_overlap"):
            raise UsageError(f"unknown overlap_mode {self.overlap_mode!r}")
        unknown = set(self.variants) - set(PIVOT_KINDS)
        if unknown:
            raise UsageError(f"unknown pivot kinds {sorted(unknown)}")
        object.__setattr__(self, "variants", tuple(self.variants))
        if not 0 < self.alpha < 1:
            raise UsageError("alpha must lie in (0, 1)")
        if self.seed < 0:
            raise UsageError("seed must be a nonnegative 64-bit integer")


# preset configurations: a desk-scale default and the full-scale protocol
PRESETS = {
    "desk": SimConfig(
        n=400, p=800, t=5, s=5, s_omega=5, sigma=1.0, alpha=0.05, n_sim=300,
        overlap_mode="no_overlap", seed=20240601,
        variants=PIVOT_KINDS, with_width=True,
    ),
    "full": SimConfig(
        n=2000, p=6000, t=10, s=15, s_omega=5, sigma=1.0, alpha=0.05, n_sim=128,
        overlap_mode="no_overlap", seed=20240601,
        variants=PIVOT_KINDS, with_width=True,
    ),
}


@dataclass(frozen=True)
class GroundTruth:
    """Design covariance, true coefficients, and the first precision column."""

    sigma_mat: np.ndarray
    b_star: np.ndarray
    precision_col_support: tuple


@dataclass
class ReplicateRecord:
    replicate: int
    seed_key: tuple
    pivot_values: dict
    covered: dict
    widths: dict
    sigma_hat: float
    support_size: int
    failed: bool = False
    failure_reason: str = ""


def make_sigma(p, s_omega, seed):
    """Design covariance with a controlled first precision column.

    A Haar-random rotation of a uniform spectrum on [1, 2] forms the lower
    block of a precision-like matrix; the first row/column gets a unit-norm
    vector with ``s_omega - 1`` nonzeros on the leading positions of the
    block.  Inverting and rescaling by the largest diagonal entry yields a
    covariance with max diagonal exactly 1, spectrum roughly in
    [0.3, 1.8], and ``Sigma^{-1} e_1`` supported on exactly ``s_omega``
    entries.

    Returns ``(sigma, precision_col_support, alpha_scale)`` where
    ``alpha_scale`` is the rescaling constant (so that
    ``Sigma^{-1} = alpha_scale * Lambda_tilde``).
    """
    if p < 3:
        raise UsageError("need p >= 3")
    if not 1 <= s_omega <= p:
        raise UsageError(f"s_omega must lie in [1, p], got {s_omega}")
    if s_omega - 1 > p - 1:
        raise UsageError("s_omega - 1 exceeds the block size")
    rng = _rng(seed, 0, _STREAM_SIGMA)
    m = rng.standard_normal((p - 1, p - 1))
    q, r = np.linalg.qr(m)
    sign = np.sign(np.diag(r))
    sign[sign == 0] = 1.0
    q = q * sign  # fixes the QR sign ambiguity; R has positive diagonal
    d = 1.0 + np.arange(p - 1) / (p - 2)
    lam_block = (q * d) @ q.T

    v = np.zeros(p - 1)
    if s_omega > 1:
        v[: s_omega - 1] = 1.0 / math.sqrt(s_omega - 1)

    lam_tilde = np.empty((p, p))
    lam_tilde[0, 0] = 1.5
    lam_tilde[0, 1:] = v
    lam_tilde[1:, 0] = v
    lam_tilde[1:, 1:] = lam_block

    cho = scipy.linalg.cho_factor(lam_tilde, lower=True)
    inv = scipy.linalg.cho_solve(cho, np.eye(p))
    inv = 0.5 * (inv + inv.T)
    alpha_scale = float(np.max(np.diag(inv)))
    sigma = inv / alpha_scale

    # Sigma^{-1} e_1 = alpha_scale * lam_tilde e_1 by construction
    col = alpha_scale * lam_tilde[:, 0]
    supp = tuple(int(i) for i in np.nonzero(np.abs(col) > 1e-9)[0])
    return sigma, supp, alpha_scale


def make_bstar(p, t, s, lam, mode, precision_support, seed):
    """Row-sparse truth: exactly ``s`` nonzero rows, each filled with ``lam``.

    In "overlapping" mode the support is forced to nest with the precision
    column support (whichever is smaller is contained in the other); in
    "no_overlap" mode it is drawn uniformly from the complement.
    """
    if s < 0 or s > p:
        raise UsageError(f"s must lie in [0, p], got {s}")
    b = np.zeros((p, t))
    if s == 0:
        return b
    rng = _rng(seed, 0, _STREAM_BSTAR)
    prec = np.asarray(sorted(precision_support), dtype=np.int64)
    if mode == "overlapping":
        if s >= prec.size:
            complement = np.setdiff1d(np.arange(p), prec)
            extra = rng.choice(complement, size=s - prec.size, replace=False)
            supp = np.concatenate([prec, extra])
        else:
            supp = rng.choice(prec, size=s, replace=False)
    elif mode == "no_overlap":
        complement = np.setdiff1d(np.arange(p), prec)
        if s > complement.size:
            raise UsageError(
                f"no_overlap needs s <= p - |precision support| = {complement.size}"
            )
        supp = rng.choice(complement, size=s, replace=False)
    else:
        raise UsageError(f"unknown mode {mode!r}")
    b[np.sort(supp), :] = lam
    return b


def sample_instance(gt, n, sigma_noise, seed, chol_lower=None):
    """Draw one (X, Y) instance: Gaussian rows with covariance ``sigma_mat``,
    i.i.d. Gaussian noise.  Same seed, same bytes.

    ``seed`` may be an int or a tuple of ints (master seed plus replicate
    index); either way the draw order is fixed (design first, then noise).
    """
    p = gt.sigma_mat.shape[0]
    t = gt.b_star.shape[1]
    if chol_lower is None:
        chol_lower = np.linalg.cholesky(gt.sigma_mat)
    keys = seed if isinstance(seed, (tuple, list)) else (seed,)
    rng = _rng(*keys, _STREAM_REPLICATE)
    g = rng.standard_normal((n, p))
    x = g @ chol_lower.T
    e = sigma_noise * rng.standard_normal((n, t))
    y = x @ gt.b_star + e
    return ProblemData(x, y)


def build_ground_truth(cfg):
    """Covariance and truth for a campaign, plus the tuning level used.

    The nonzero coefficient value is the single-task tuning level (the
    T = 1 rule), not the multi-task one: the group threshold grows like
    sqrt(T) times the per-row signal, so rows filled at the multi-task
    level are never selected at any scale and all width comparisons
    degenerate.  Pinning the fill to the per-task level keeps the signal
    strength constant across task counts and coincides with the tuning
    level itself when T = 1.
    """
    sigma_mat, prec_supp, _ = make_sigma(cfg.p, cfg.s_omega, cfg.seed)
    lam = default_lambda(
        cfg.n, cfg.p, cfg.t, max(cfg.s, 1), sigma=cfg.sigma,
        sigma_jj_max=1.0, eta1=cfg.eta1, eta2=cfg.eta2,
    )
    lam_fill = default_lambda(
        cfg.n, cfg.p, 1, max(cfg.s, 1), sigma=cfg.sigma,
        sigma_jj_max=1.0, eta1=cfg.eta1, eta2=cfg.eta2,
    )
    b_star = make_bstar(cfg.p, cfg.t, cfg.s, lam_fill, cfg.overlap_mode, prec_supp, cfg.seed)
    return GroundTruth(sigma_mat=sigma_mat, b_star=b_star, precision_col_support=prec_supp), lam


def _run_replicate(cfg, gt, lam, chol_lower, direction, rep):
    """All statistics for one replicate.  Sequential and deterministic."""
    seed_key = (cfg.seed, rep)
    data = sample_instance(gt, cfg.n, cfg.sigma, seed=seed_key, chol_lower=chol_lower)
    n, t = cfg.n, cfg.t
    fit = fit_multitask_lasso(data, lam)
    am = interaction_fast(data.x, fit.b_hat, lam, fit.support)

    z0 = data.x @ direction.sigma_inv_a
    a_n = direction.a
    theta_known = gt.b_star.T @ a_n  # estimand of the known-Sigma regions
    e1 = np.zeros(t)
    e1[0] = 1.0

    pivots = {}
    covered = {}
    widths = {}

    needs_nw = bool(set(cfg.variants) & _NEEDS_NODEWISE)
    nw = fit_nodewise(data.x, 0, variant="scaled_lasso") if needs_nw else None
    theta_row = gt.b_star[0]  # estimand of the unknown-Sigma regions (row j=0)

    if "normal_known" in cfg.variants:
        pivots["normal_known"] = inference.normal_pivot_known_sigma(
            data, fit.b_hat, am, a_n, e1, z0, gt.b_star
        ).value
        ci = inference.ci_known_sigma(data, fit.b_hat, am, a_n, z0, cfg.alpha, task=0)
        truth = float(a_n @ gt.b_star[:, 0])
        covered["ci_known"] = bool(ci.lower <= truth <= ci.upper)
        widths["ci_known"] = ci.length
        if cfg.with_width:
            lam1 = default_lambda(n, cfg.p, 1, max(cfg.s, 1), sigma=cfg.sigma,
                                  sigma_jj_max=1.0, eta1=cfg.eta1, eta2=cfg.eta2)
            single = inference.single_task_interval(
                data.x, data.y[:, 0], a_n, z0, lam1, cfg.alpha
            )
            comp = inference.width_comparison(ci, single)
            widths["ci_single"] = single.length
            widths["relative_change"] = comp["relative_change"]

    if "normal_unknown" in cfg.variants:
        # the inner-product scale is less distorted by coefficient
        # shrinkage than the residual-norm scale at these sample sizes
        pivots["normal_unknown"] = inference.normal_pivot_unknown_sigma(
            data, fit.b_hat, am, nw, e1, gt.b_star, tau_choice="inner"
        ).value

    if "chi_known" in cfg.variants:
        pivots["chi_known"] = inference.chi_pivot_known_sigma(
            data, fit.b_hat, am, a_n, z0, gt.b_star, weighting="gamma_hat"
        ).value
        for variant in ("hat_E", "check_E"):
            region = inference.ellipsoid_known_sigma(
                data, fit.b_hat, am, a_n, z0, cfg.alpha, variant=variant
            )
            inside = region.contains(theta_known)
            stat = inference.ellipsoid_pivot_value(
                data, fit.b_hat, am, theta_known, variant, a=a_n, z0=z0
            )
            if inside != (stat <= region.q):
                raise RuntimeError(f"coverage cross-check failed for {variant}")
            covered[variant] = bool(inside)

    if "chi_sigma_hat" in cfg.variants:
        pivots["chi_sigma_hat"] = inference.chi_pivot_known_sigma(
            data, fit.b_hat, am, a_n, z0, gt.b_star, weighting="sigma_hat"
        ).value
        region = inference.ellipsoid_sigma_hat(data, fit.b_hat, am, a_n, z0, cfg.alpha)
        inside = region.contains(theta_known)
        stat = inference.ellipsoid_pivot_value(
            data, fit.b_hat, am, theta_known, "check_E_sigma_hat", a=a_n, z0=z0
        )
        if inside != (stat <= region.q):
            raise RuntimeError("coverage cross-check failed for check_E_sigma_hat")
        covered["check_E_sigma_hat"] = bool(inside)
        covered["row_test_reject"] = bool(inference.test_row_null(region)["reject"])

    if "chi_unknown" in cfg.variants:
        pivots["chi_unknown"] = inference.chi_pivot_unknown_sigma(
            data, fit.b_hat, am, nw, gt.b_star, weighting="gamma_hat"
        ).value
        region = inference.ellipsoid_unknown_sigma(
            data, fit.b_hat, am, nw, cfg.alpha, scale="gamma_hat_matrix"
        )
        inside = region.contains(theta_row)
        stat = inference.ellipsoid_pivot_value(
            data, fit.b_hat, am, theta_row, "hat_E_j", nodewise_fit=nw
        )
        if inside != (stat <= region.q):
            raise RuntimeError("coverage cross-check failed for hat_E_j")
        covered["hat_E_j"] = bool(inside)

    if "chi_sigma_hat_unknown" in cfg.variants:
        pivots["chi_sigma_hat_unknown"] = inference.chi_pivot_unknown_sigma(
            data, fit.b_hat, am, nw, gt.b_star, weighting="sigma_hat"
        ).value
        region = inference.ellipsoid_unknown_sigma(
            data, fit.b_hat, am, nw, cfg.alpha, scale="sigma_hat"
        )
        inside = region.contains(theta_row)
        stat = inference.ellipsoid_pivot_value(
            data, fit.b_hat, am, theta_row, "check_E_sigma_hat_j", nodewise_fit=nw
        )
        if inside != (stat <= region.q):
            raise RuntimeError("coverage cross-check failed for check_E_sigma_hat_j")
        covered["check_E_sigma_hat_j"] = bool(inside)

    return ReplicateRecord(
        replicate=rep,
        seed_key=seed_key,
        pivot_values=pivots,
        covered=covered,
        widths=widths,
        sigma_hat=inference.sigma_hat(data, fit.b_hat),
        support_size=len(fit.support),
    )


def ks_distance(values, cdf):
    """Kolmogorov-Smirnov distance between a sample and a CDF."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    m = v.size
    if m == 0:
        return float("nan")
    f = np.asarray(cdf(v), dtype=np.float64)
    grid_hi = np.arange(1, m + 1) / m
    grid_lo = np.arange(0, m) / m
    return float(np.max(np.maximum(np.abs(f - grid_hi), np.abs(f - grid_lo))))


def wilson_interval(successes, total, z=1.959963984540054):
    """Wilson score interval for a binomial proportion."""
    if total == 0:
        return (0.0, 1.0)
    phat = successes / total
    denom = 1.0 + z * z / total
    center = (phat + z * z / (2 * total)) / denom
    margin = z * math.sqrt(phat * (1 - phat) / total + z * z / (4 * total * total)) / denom
    return (max(0.0, center - margin), min(1.0, center + margin))


def _theoretical_quantiles(kind, t, m):
    probs = (np.arange(1, m + 1) - 0.5) / m
    if kind.startswith("normal"):
        return [
            (-1 if p < 0.5 else 1) * inference.chi_quantile(1, 1 - abs(2 * p - 1))
            if p != 0.5 else 0.0
            for p in probs
        ]
    return [inference.chi_quantile(t, 1.0 - p) for p in probs]


def summarize(cfg, records):
    """Aggregate replicate records (in replicate order) into a summary dict."""
    ok = [r for r in records if not r.failed]
    summary = {
        "schema_version": 1,
        "config": {
            "n": cfg.n, "p": cfg.p, "t": cfg.t, "s": cfg.s, "s_omega": cfg.s_omega,
            "sigma": cfg.sigma, "alpha": cfg.alpha, "n_sim": cfg.n_sim,
            "overlap_mode": cfg.overlap_mode, "seed": cfg.seed,
            "variants": list(cfg.variants), "with_width": cfg.with_width,
        },
        "n_completed": len(ok),
        "n_failed": len(records) - len(ok),
        "failures": [
            {"replicate": r.replicate, "reason": r.failure_reason}
            for r in records if r.failed
        ],
        "pivots": {},
        "coverage": {},
        "widths": {},
    }
    for kind in cfg.variants:
        vals = [r.pivot_values[kind] for r in ok if kind in r.pivot_values]
        if not vals:
            continue
        arr = np.asarray(vals)
        if kind.startswith("normal"):
            ks = ks_distance(arr, inference.normal_cdf)
        else:
            ks = ks_distance(arr, lambda v: inference.chi_cdf(v, cfg.t))
        summary["pivots"][kind] = {
            "n": int(arr.size),
            "mean": float(arr.mean()),
            "std": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
            "ks_distance": ks,
            "qq": {
                "sample": [float(v) for v in np.sort(arr)],
                "theoretical": [float(v) for v in _theoretical_quantiles(kind, cfg.t, arr.size)],
            },
        }
    cov_keys = sorted({k for r in ok for k in r.covered})
    for key in cov_keys:
        flags = [r.covered[key] for r in ok if key in r.covered]
        hits = int(sum(flags))
        lo, hi = wilson_interval(hits, len(flags))
        summary["coverage"][key] = {
            "rate": hits / len(flags) if flags else float("nan"),
            "n": len(flags),
            "wilson_95": [lo, hi],
        }
    width_keys = sorted({k for r in ok for k in r.widths})
    for key in width_keys:
        vals = np.asarray([r.widths[key] for r in ok if key in r.widths])
        summary["widths"][key] = {
            "mean": float(vals.mean()),
            "std": float(vals.std(ddof=1)) if vals.size > 1 else 0.0,
            "n": int(vals.size),
        }
    sig = np.asarray([r.sigma_hat for r in ok])
    if sig.size:
        summary["sigma_hat_mean"] = float(sig.mean())
    supp = np.asarray([r.support_size for r in ok])
    if supp.size:
        summary["support_size_mean"] = float(supp.mean())
    return summary


def run_monte_carlo(cfg, threads=None, max_failure_fraction=0.05):
    """Run a campaign and return ``(records, summary)``.

    Replicates run on a thread pool of size ``threads`` (default 1); each
    replicate only touches its own state and BLAS threading is pinned, so
    the output is byte-identical for any worker count.  Replicate failures
    are recorded and excluded from summaries; a failure fraction above
    ``max_failure_fraction`` aborts the campaign.
    """
    gt, lam = build_ground_truth(cfg)
    chol_lower = np.linalg.cholesky(gt.sigma_mat)
    direction = inference.normalize_direction(np.eye(cfg.p)[:, 0], gt.sigma_mat)
    threads = max(1, int(threads or 1))

    def work(rep):
        try:
            return _run_replicate(cfg, gt, lam, chol_lower, direction, rep)
        except Exception as exc:  # per-replicate failure, recorded not raised
            return ReplicateRecord(
                replicate=rep, seed_key=(cfg.seed, rep), pivot_values={},
                covered={}, widths={}, sigma_hat=float("nan"), support_size=-1,
                failed=True, failure_reason=f"{type(exc).__name__}: {exc}",
            )

    with threadpool_limits(limits=1):
        if threads == 1:
            records = [work(rep) for rep in range(cfg.n_sim)]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                records = list(pool.map(work, range(cfg.n_sim)))

    records.sort(key=lambda r: r.replicate)
    n_failed = sum(r.failed for r in records)
    if n_failed > max_failure_fraction * cfg.n_sim:
        raise CampaignError(
            f"{n_failed}/{cfg.n_sim} replicates failed "
            f"(limit {max_failure_fraction:.0%}); first failure: "
            f"{next(r.failure_reason for r in records if r.failed)}"
        )
    return records, summarize(cfg, records)

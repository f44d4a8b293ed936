"""The cross-task interaction matrix and its degrees-of-freedom correction.

For a fitted coefficient matrix with support S, the interaction matrix is
the symmetric PSD T x T matrix

    A[t, t'] = trace[(e_t^T kron X_S) (Xt^T Xt + n T H)^+ (e_t' kron X_S^T)]

where ``Xt = I_T kron X_S`` and ``H`` stacks, per active row, the Hessian of
the row-norm penalty.  ``A`` generalizes the Lasso degrees-of-freedom count
|S| (the T = 1 case) and enters all debiased statistics through the
correction factor ``(I - A/n)^{-1}``.

Two routes are implemented: :func:`interaction_naive` assembles the
|S|T x |S|T matrix and takes an SVD pseudoinverse (the defining formula,
used as an oracle), and :func:`interaction_fast` applies the
Sherman-Morrison-Woodbury identity so that only |S| x |S| inverses are
needed.  Both agree to high accuracy and either can be requested.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import row_norms
from .errors import NumericError, UsageError


@dataclass(frozen=True)
class InteractionMatrix:
    """Interaction matrix with provenance.

    ``rank_ok`` records whether the active design columns were detected to
    be linearly independent, in which case the operator norm of ``a_hat``
    cannot exceed ``support_size``.
    """

    a_hat: np.ndarray
    support_size: int
    method: str  # "naive" or "woodbury"
    rank_ok: bool

    def max_asymmetry(self):
        return float(np.max(np.abs(self.a_hat - self.a_hat.T)))

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(0.5 * (self.a_hat + self.a_hat.T)).min())

    def operator_norm(self):
        return float(np.linalg.norm(self.a_hat, ord=2))


def hessian_block(b_hat, j, lam):
    """Penalty Hessian of row ``j``: ``lam/||b_j|| (I - b_j b_j^T/||b_j||^2)``.

    Proportional to the orthogonal projection onto the complement of the
    row direction, hence rank T - 1; the 1 x 1 case is identically zero.
    """
    b_hat = np.asarray(b_hat, dtype=np.float64)
    row = b_hat[j]
    nrm = float(np.linalg.norm(row))
    if nrm <= 0.0:
        raise UsageError(f"row {j} has zero norm; the penalty Hessian is undefined")
    t = row.shape[0]
    return lam / nrm * (np.eye(t) - np.outer(row, row) / nrm**2)


def detect_full_rank(xs):
    """Rank check of the active columns via column-pivoted QR."""
    n, k = xs.shape
    if k == 0:
        return True
    r = scipy.linalg.qr(xs, mode="r", pivoting=True)[0]
    d = np.abs(np.diag(r))
    if d.size == 0 or d[0] == 0.0:
        return k == 0
    thresh = max(n, k) * np.finfo(np.float64).eps * d[0]
    return int(np.sum(d > thresh)) == k


def _restrict(x, b_hat, support):
    support = [int(j) for j in support]
    if sorted(set(support)) != sorted(support):
        raise UsageError("support indices must be distinct")
    xs = x[:, support]
    bs = np.asarray(b_hat, dtype=np.float64)[support, :]
    return xs, bs


def interaction_naive(x, b_hat, lam, support, pinv_cap=6000):
    """Interaction matrix by the defining pseudoinverse formula.

    Drops rows outside the support first (this does not change the value),
    assembles the |S|T x |S|T matrix ``I_T kron (X_S^T X_S) + n T H`` and
    applies an SVD pseudoinverse with singular values below
    ``max_dim * eps * s_max`` zeroed.

    Refuses when ``|S| * T`` exceeds ``pinv_cap``; use
    :func:`interaction_fast` beyond that.
    """
    x = np.asarray(x, dtype=np.float64)
    b_hat = np.asarray(b_hat, dtype=np.float64)
    n, p = x.shape
    t = b_hat.shape[1]
    k = len(support)
    if k == 0:
        return InteractionMatrix(np.zeros((t, t)), 0, "naive", True)
    if k * t > pinv_cap:
        raise UsageError(
            f"naive route would form a {k * t} x {k * t} pseudoinverse "
            f"(cap {pinv_cap}); use the woodbury route instead"
        )
    xs, bs = _restrict(x, b_hat, support)
    gram = xs.T @ xs
    nt_lam_h = np.empty((k, t, t))
    for j in range(k):
        nrm = float(np.linalg.norm(bs[j]))
        if nrm <= 0.0:
            raise UsageError(f"support row {support[j]} has zero norm")
        nt_lam_h[j] = n * t * hessian_block(bs, j, lam)

    big = np.kron(np.eye(t), gram)
    big4 = big.reshape(t, k, t, k)
    for j in range(k):
        big4[:, j, :, j] += nt_lam_h[j]

    try:
        u, s, vt = np.linalg.svd(big, hermitian=True)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD of the stacked system failed: {exc}") from exc
    cutoff = big.shape[0] * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
    inv_s = np.zeros_like(s)
    keep = s > cutoff
    inv_s[keep] = 1.0 / s[keep]
    pinv = (vt.T * inv_s) @ u.T

    pinv4 = pinv.reshape(t, k, t, k)
    a_hat = np.einsum("taub,ab->tu", pinv4, gram)
    return InteractionMatrix(a_hat, k, "naive", detect_full_rank(xs))


def interaction_fast(x, b_hat, lam, support, cond_limit=1e12, pinv_cap=6000):
    """Interaction matrix via the Sherman-Morrison-Woodbury identity.

    Only |S| x |S| systems are solved: with ``G = X_S^T X_S``,
    ``v_j = n T lam / ||b_j||``, ``w = (G + diag(v))^{-1}``,
    ``Q = w G w`` and low-rank factors ``b^{(j)} = sqrt(n T lam) b_j /
    ||b_j||^{3/2}``, the matrix is

        A = trace[G w] I_T  -  B^T (Q * P^{-1}) B

    where ``B`` stacks the ``b^{(j)}`` as rows, ``*`` is the entrywise
    product, and ``P = -I + (B B^T) * w``.

    If ``P`` is estimated to be numerically singular (reciprocal condition
    below ``1/cond_limit``) the call falls back to :func:`interaction_naive`
    when the size cap allows, otherwise raises.
    """
    x = np.asarray(x, dtype=np.float64)
    b_hat = np.asarray(b_hat, dtype=np.float64)
    n, p = x.shape
    t = b_hat.shape[1]
    k = len(support)
    if k == 0:
        return InteractionMatrix(np.zeros((t, t)), 0, "woodbury", True)
    xs, bs = _restrict(x, b_hat, support)
    norms = row_norms(bs)
    if np.any(norms <= 0.0):
        raise UsageError("support rows must have strictly positive norm")
    nt_lam = n * t * lam
    v = nt_lam / norms
    b_fac = np.sqrt(nt_lam) * (norms**-1.5)[:, None] * bs  # |S| x T

    gram = xs.T @ xs
    try:
        cho = scipy.linalg.cho_factor(gram + np.diag(v), lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NumericError(
            f"G + diag(v) is not positive definite ({exc}); "
            "check lam > 0 and the support rows"
        ) from exc
    w = scipy.linalg.cho_solve(cho, np.eye(k))
    w = 0.5 * (w + w.T)
    q = w @ gram @ w
    p_mat = -np.eye(k) + (b_fac @ b_fac.T) * w

    lu, piv = scipy.linalg.lu_factor(p_mat)
    anorm = np.linalg.norm(p_mat, 1)
    rcond = scipy.linalg.lapack.dgecon(lu, anorm, norm="1")[0]
    if not np.isfinite(rcond) or rcond < 1.0 / cond_limit:
        if k * t <= pinv_cap:
            return interaction_naive(x, b_hat, lam, support, pinv_cap=pinv_cap)
        raise NumericError(
            f"the Woodbury capacitance matrix is numerically singular "
            f"(rcond={rcond:.2e}) and the problem exceeds the naive-route cap"
        )
    p_inv = scipy.linalg.lu_solve((lu, piv), np.eye(k))
    # one step of iterative refinement on the inverse
    p_inv += scipy.linalg.lu_solve((lu, piv), np.eye(k) - p_mat @ p_inv)

    trace_gw = float(np.einsum("jk,jk->", gram, w))
    a_hat = trace_gw * np.eye(t) - b_fac.T @ (q * p_inv) @ b_fac
    return InteractionMatrix(a_hat, k, "woodbury", detect_full_rank(xs))


def correction_matrix(a_hat, n):
    """Degrees-of-freedom correction ``(I - A/n)^{-1}``.

    ``a_hat`` may be an :class:`InteractionMatrix` or a bare T x T array.
    Requires the support to be smaller than ``n``; at T = 1 this is the
    scalar ``(1 - |S|/n)^{-1}`` adjustment.
    """
    if isinstance(a_hat, InteractionMatrix):
        if a_hat.support_size >= n:
            raise UsageError(
                f"support size {a_hat.support_size} >= n = {n}: "
                "the correction matrix need not exist"
            )
        mat = a_hat.a_hat
    else:
        mat = np.asarray(a_hat, dtype=np.float64)
    t = mat.shape[0]
    target = np.eye(t) - mat / n
    try:
        cho = scipy.linalg.cho_factor(0.5 * (target + target.T), lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NumericError(
            "I - A/n is not positive definite; this requires the active "
            "design columns to be linearly independent with |S| < n"
        ) from exc
    out = scipy.linalg.cho_solve(cho, np.eye(t))
    return 0.5 * (out + out.T)

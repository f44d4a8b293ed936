"""Numba kernels for the coordinate-descent hot loops.

Kept free of any Python-object work so the solver can release the GIL and
replicate-level threads parallelize.  All loops are strictly sequential and
deterministic; no fastmath, no internal threading.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def cd_sweep(x, b, r, colsq, nt_lam):
    """One cyclic pass of block coordinate descent over the rows of ``b``.

    ``x`` is n x p, ``b`` is p x T, ``r`` is the residual y - x @ b kept
    consistent in place, ``colsq`` holds squared column norms of ``x`` and
    ``nt_lam`` equals n * T * lam.  Rows with zero column norm are skipped
    (pinned at zero).  Returns the largest Euclidean row change.
    """
    n, p = x.shape
    t_dim = b.shape[1]
    c = np.empty(t_dim)
    max_change = 0.0
    for j in range(p):
        if colsq[j] <= 0.0:
            continue
        row_is_zero = True
        for t in range(t_dim):
            if b[j, t] != 0.0:
                row_is_zero = False
                break
        # c = x_j^T r + ||x_j||^2 b_j, the row's partial-residual correlation
        for t in range(t_dim):
            acc = 0.0
            for i in range(n):
                acc += x[i, j] * r[i, t]
            c[t] = acc
        if not row_is_zero:
            for t in range(t_dim):
                c[t] += colsq[j] * b[j, t]
        cnorm = 0.0
        for t in range(t_dim):
            cnorm += c[t] * c[t]
        cnorm = np.sqrt(cnorm)
        if cnorm <= nt_lam:
            # at or below the threshold: row goes to zero (ties included)
            if not row_is_zero:
                chg2 = 0.0
                for t in range(t_dim):
                    chg2 += b[j, t] * b[j, t]
                for i in range(n):
                    xij = x[i, j]
                    for t in range(t_dim):
                        r[i, t] += xij * b[j, t]
                for t in range(t_dim):
                    b[j, t] = 0.0
                change = np.sqrt(chg2)
                if change > max_change:
                    max_change = change
        else:
            scale = (1.0 - nt_lam / cnorm) / colsq[j]
            chg2 = 0.0
            for t in range(t_dim):
                newv = scale * c[t]
                c[t] = newv - b[j, t]
                b[j, t] = newv
                chg2 += c[t] * c[t]
            if chg2 > 0.0:
                for i in range(n):
                    xij = x[i, j]
                    for t in range(t_dim):
                        r[i, t] -= xij * c[t]
                change = np.sqrt(chg2)
                if change > max_change:
                    max_change = change
    return max_change

"""Shared data containers, group norms, the default penalty rule, matrix I/O.

Conventions used across the package:

* all matrices are dense, C-contiguous ``float64`` numpy arrays;
* the design ``x`` is n x p (observations by covariates), responses ``y``
  are n x T (observations by tasks), coefficient matrices are p x T;
* indices are 0-based everywhere, including file formats and reports.
"""

import json
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import UsageError


def _as_matrix(arr, name):
    out = np.asarray(arr, dtype=np.float64)
    if out.ndim != 2:
        raise UsageError(f"{name} must be a 2-d array, got ndim={out.ndim}")
    if out.shape[0] < 1 or out.shape[1] < 1:
        raise UsageError(f"{name} must be non-empty, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise UsageError(f"{name} contains non-finite entries")
    return np.ascontiguousarray(out)


@dataclass(frozen=True)
class ProblemData:
    """Observed design matrix (n x p) and response matrix (n x T).

    Immutable after construction; safe to share across threads.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _as_matrix(self.x, "x"))
        object.__setattr__(self, "y", _as_matrix(self.y, "y"))
        if self.x.shape[0] != self.y.shape[0]:
            raise UsageError(
                f"x and y must have the same number of rows, "
                f"got {self.x.shape[0]} and {self.y.shape[0]}"
            )

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def p(self):
        return self.x.shape[1]

    @property
    def n_tasks(self):
        return self.y.shape[1]


@dataclass(frozen=True)
class RegularizationSpec:
    """Penalty level and the ingredients of the default tuning rule.

    ``lam`` is the dimensionless penalty multiplying the sum of coefficient
    row norms.  The remaining fields feed :func:`default_lambda`:
    ``sparsity_guess_s`` is the row-sparsity guess inside the log term,
    ``sigma`` the noise level, and ``eta1``/``eta2`` the two slack factors
    of the rule (both 0 in the reference experiments).
    """

    lam: float
    eta1: float = 0.0
    eta2: float = 0.0
    sparsity_guess_s: int = 1
    sigma: float = 1.0

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise UsageError(f"lam must be positive and finite, got {self.lam}")
        if self.eta1 < 0 or self.eta2 < 0:
            raise UsageError("eta1 and eta2 must be nonnegative")


@dataclass(frozen=True)
class InferenceTarget:
    """A direction over covariates and a task-combination vector."""

    direction_a: np.ndarray
    task_vector_b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.direction_a, dtype=np.float64).ravel()
        b = np.asarray(self.task_vector_b, dtype=np.float64).ravel()
        if not np.all(np.isfinite(a)) or not np.all(np.isfinite(b)):
            raise UsageError("target vectors must be finite")
        if not np.any(a != 0):
            raise UsageError("direction_a must be nonzero")
        if not np.any(b != 0):
            raise UsageError("task_vector_b must be nonzero")
        object.__setattr__(self, "direction_a", a)
        object.__setattr__(self, "task_vector_b", b)


def group_norm_21(b):
    """Sum of Euclidean row norms of a p x T coefficient matrix."""
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 2:
        raise UsageError(f"expected a 2-d coefficient matrix, got ndim={b.ndim}")
    if not np.all(np.isfinite(b)):
        raise UsageError("coefficient matrix contains non-finite entries")
    return float(np.sqrt(np.einsum("jt,jt->j", b, b)).sum())


def row_norms(b):
    """Euclidean norm of each row of a p x T matrix."""
    b = np.asarray(b, dtype=np.float64)
    return np.sqrt(np.einsum("jt,jt->j", b, b))


def default_lambda(n, p, t, s, sigma=1.0, sigma_jj_max=1.0, eta1=0.0, eta2=0.0):
    """Default penalty level for the multi-task Lasso.

    Returns ``(1+eta2)(1+eta1) * sigma * sqrt(sigma_jj_max) / sqrt(n*t)
    * (1 + sqrt((2/t) * log(p/s)))``, the level at which the penalty
    dominates the per-row noise correlation with high probability.

    Parameters
    ----------
    n, p, t : int
        Sample size, number of covariates, number of tasks.
    s : int
        Row-sparsity guess entering the log term; must satisfy ``s < p``.
    sigma : float
        Noise standard deviation.
    sigma_jj_max : float
        Largest diagonal entry of the design covariance.
    eta1, eta2 : float
        Nonnegative slack factors; 0 gives the bare rule.
    """
    if min(n, p, t, s) < 1:
        raise UsageError("n, p, t, s must all be positive")
    if s >= p:
        raise UsageError(f"need s < p for a positive log term, got s={s}, p={p}")
    if sigma <= 0 or sigma_jj_max <= 0:
        raise UsageError("sigma and sigma_jj_max must be positive")
    if eta1 < 0 or eta2 < 0:
        raise UsageError("eta1 and eta2 must be nonnegative")
    base = sigma * math.sqrt(sigma_jj_max) / math.sqrt(n * t)
    return (1.0 + eta2) * (1.0 + eta1) * base * (1.0 + math.sqrt(2.0 / t * math.log(p / s)))


# ---------------------------------------------------------------------------
# Matrix file I/O.  CSV is headerless with one row per line; JSON uses the
# container {"rows": n, "cols": m, "data": row-major flat list} and must
# round-trip float64 values bit-exactly (python repr guarantees this).


def matrix_to_json_obj(m):
    m = _as_matrix(m, "matrix")
    return {"rows": int(m.shape[0]), "cols": int(m.shape[1]), "data": [float(v) for v in m.ravel()]}


def matrix_from_json_obj(obj):
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError) as exc:
        raise UsageError(f"malformed matrix container: {exc}") from exc
    if len(data) != rows * cols:
        raise UsageError(
            f"matrix container has {len(data)} entries, expected {rows}*{cols}"
        )
    return _as_matrix(np.asarray(data, dtype=np.float64).reshape(rows, cols), "matrix")


def save_matrix(m, path, fmt=None):
    """Write a matrix to ``path`` as headerless CSV or a JSON container.

    The format is taken from ``fmt`` ("csv" or "json") or inferred from the
    file extension.  Writes are atomic (temp file + rename).
    """
    m = _as_matrix(m, "matrix")
    fmt = fmt or ("json" if str(path).endswith(".json") else "csv")
    if fmt == "csv":
        text = "\n".join(",".join(repr(float(v)) for v in row) for row in m) + "\n"
    elif fmt == "json":
        text = json.dumps(matrix_to_json_obj(m))
    else:
        raise UsageError(f"unknown matrix format {fmt!r}")
    atomic_write_text(path, text)


def load_matrix(path, fmt=None):
    """Read a matrix written by :func:`save_matrix`."""
    fmt = fmt or ("json" if str(path).endswith(".json") else "csv")
    if fmt == "json":
        with open(path) as fh:
            return matrix_from_json_obj(json.load(fh))
    if fmt == "csv":
        try:
            m = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
        except ValueError as exc:
            raise UsageError(f"cannot parse {path} as CSV matrix: {exc}") from exc
        return _as_matrix(m, str(path))
    raise UsageError(f"unknown matrix format {fmt!r}")


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temp file in the same directory."""
    path = str(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

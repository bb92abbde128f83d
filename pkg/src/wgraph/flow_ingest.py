"""Flow matrices and their reduction to exchange matrices.

A flow matrix holds raw, generally asymmetric counts ``n_ij`` (people living
in ``i`` then in ``j``, commuters from ``i`` to ``j``...). Symmetrizing and
normalizing it yields an exchange matrix: a symmetric nonnegative matrix
summing to one, whose row sums ``f`` are the vertex weights.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _csvio
from .errors import ConvergenceError, InputError

SYMMETRIZATION_METHODS = ("half_sum", "geometric_mean", "quasi_symmetric")


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _default_labels(n):
    return tuple(str(i + 1) for i in range(n))


@dataclass(frozen=True)
class FlowMatrix:
    """Square matrix of nonnegative flow counts with vertex labels."""

    counts: np.ndarray
    labels: tuple = None

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=float)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise InputError(f"flow matrix must be square, got shape {counts.shape}")
        if not np.all(np.isfinite(counts)):
            raise InputError("flow matrix has non-finite entries")
        neg = np.argwhere(counts < 0)
        if neg.size:
            i, j = neg[0]
            raise InputError(f"negative entry {counts[i, j]} at row {i + 1}, column {j + 1}")
        if not np.any(counts > 0):
            raise InputError("flow matrix has no positive entry")
        labels = self.labels
        labels = _default_labels(len(counts)) if labels is None else tuple(str(x) for x in labels)
        if len(labels) != len(counts):
            raise InputError(f"{len(labels)} labels for {len(counts)} vertices")
        if len(set(labels)) != len(labels):
            raise InputError("vertex labels are not unique")
        object.__setattr__(self, "counts", _readonly(counts))
        object.__setattr__(self, "labels", labels)

    @property
    def n(self):
        return len(self.labels)


@dataclass(frozen=True)
class ExchangeMatrix:
    """Normalized weighted graph: symmetric, nonnegative, summing to one.

    The vertex weights ``f`` are recomputed from ``e`` and must be strictly
    positive.
    """

    e: np.ndarray
    labels: tuple = None
    f: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        e = np.asarray(self.e, dtype=float)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise InputError(f"exchange matrix must be square, got shape {e.shape}")
        if not np.all(np.isfinite(e)):
            raise InputError("exchange matrix has non-finite entries")
        if np.any(e < 0):
            raise InputError("exchange matrix has negative entries")
        if np.max(np.abs(e - e.T), initial=0.0) > 1e-12:
            raise InputError("exchange matrix is not symmetric")
        total = e.sum()
        if abs(total - 1.0) > 1e-12:
            raise InputError(f"exchange matrix sums to {total!r}, not 1")
        labels = self.labels
        labels = _default_labels(len(e)) if labels is None else tuple(str(x) for x in labels)
        if len(labels) != len(e):
            raise InputError(f"{len(labels)} labels for {len(e)} vertices")
        f = e.sum(axis=1)
        zero = np.flatnonzero(f <= 0)
        if zero.size:
            raise InputError(f"vertex {labels[zero[0]]!r} has zero weight")
        object.__setattr__(self, "e", _readonly(e))
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "f", _readonly(f))

    @property
    def n(self):
        return len(self.f)

    @property
    def diagonal_mass(self):
        return float(np.trace(self.e))


def load_flow_matrix(source):
    """Read a flow matrix from CSV.

    The first row holds the column labels (its first cell is ignored); each
    following row starts with its label followed by ``n`` numbers. ``source``
    may be a path, an open text stream or the CSV text itself.

    Raises
    ------
    InputError
        On non-square data, a negative or unparsable entry, mismatched row and
        column labels, or a matrix without any positive entry.
    """
    _, rows = _csvio.read_rows(source)
    if len(rows) < 2:
        raise InputError("flow CSV needs a header row and at least one data row")
    col_labels = [c.strip() for c in rows[0][1:]]
    n = len(col_labels)
    body = rows[1:]
    if len(body) != n:
        raise InputError(f"non-square data: {n} columns but {len(body)} rows")
    row_labels, counts = [], np.zeros((n, n))
    for r, row in enumerate(body):
        line = r + 2
        if len(row) != n + 1:
            raise InputError(
                f"non-square data: row {line} has {len(row) - 1} numeric fields, expected {n}"
            )
        row_labels.append(row[0].strip())
        for c, tok in enumerate(row[1:]):
            try:
                val = _csvio.parse_number(tok, f"row {line}, column {c + 2}")
            except ValueError as exc:
                raise InputError(str(exc)) from None
            if not np.isfinite(val):
                raise InputError(f"non-finite entry at row {line}, column {c + 2}")
            if val < 0:
                raise InputError(f"negative entry {val} at row {line}, column {c + 2}")
            counts[r, c] = val
    if row_labels != col_labels:
        if set(row_labels) != set(col_labels):
            missing = sorted(set(row_labels) ^ set(col_labels))
            raise InputError(f"row and column labels differ: {missing}")
        pos = next(k for k, (a, b) in enumerate(zip(row_labels, col_labels)) if a != b)
        raise InputError(
            f"label order mismatch at position {pos + 1}: row {row_labels[pos]!r}"
            f" vs column {col_labels[pos]!r}"
        )
    return FlowMatrix(counts, tuple(row_labels))


def matrix_to_csv(matrix, labels):
    rows = [[""] + list(labels)]
    for lab, vals in zip(labels, np.asarray(matrix)):
        rows.append([lab] + [_csvio.fmt(v) for v in vals])
    return _csvio.to_csv_text(rows)


def fit_quasi_symmetry(counts, max_sweeps=10_000, tol=1e-10):
    """Maximum-likelihood fit of the quasi-symmetry model ``m_ij = a_i b_j c_ij``.

    Iterative proportional fitting alternating row margins, column margins
    and symmetric pair totals ``n_ij + n_ji``. Returns ``(fitted, sweeps,
    residual)`` where ``residual`` is the final maximum relative margin error.
    """
    n = np.asarray(counts, dtype=float)
    pair = n + n.T
    row_t, col_t = n.sum(axis=1), n.sum(axis=0)
    if np.any(row_t <= 0) or np.any(col_t <= 0):
        raise InputError("quasi-symmetric fit needs every row and column sum > 0")
    m = (pair > 0).astype(float)
    residual = np.inf
    for sweep in range(1, max_sweeps + 1):
        m *= (row_t / m.sum(axis=1))[:, None]
        m *= (col_t / m.sum(axis=0))[None, :]
        mp = m + m.T
        with np.errstate(invalid="ignore", divide="ignore"):
            m *= np.where(mp > 0, pair / mp, 0.0)
        residual = max(
            np.max(np.abs(m.sum(axis=1) - row_t) / row_t),
            np.max(np.abs(m.sum(axis=0) - col_t) / col_t),
        )
        if residual < tol:
            return m, sweep, float(residual)
    raise ConvergenceError(
        f"quasi-symmetric IPF did not converge in {max_sweeps} sweeps"
        f" (residual {residual:.3e})",
        residual=float(residual),
        iterations=max_sweeps,
    )


def symmetrize(flow, method="half_sum"):
    """Symmetric nonnegative version of a flow matrix.

    ``half_sum`` averages ``n_ij`` and ``n_ji``; ``geometric_mean`` takes
    ``sqrt(n_ij n_ji)``; ``quasi_symmetric`` fits the quasi-symmetry model and
    returns the geometric-mean symmetrization of the fitted table. Pairs with
    ``n_ij n_ji = 0`` map to zero under the last two methods.
    """
    if not isinstance(flow, FlowMatrix):
        flow = FlowMatrix(flow)
    n = np.asarray(flow.counts)
    if method == "half_sum":
        return (n + n.T) / 2
    zero_pair = (n * n.T) == 0
    if method == "geometric_mean":
        s = np.sqrt(n * n.T)
    elif method == "quasi_symmetric":
        fitted, _, _ = fit_quasi_symmetry(n)
        s = np.sqrt(fitted * fitted.T)
    else:
        raise InputError(
            f"unknown symmetrization method {method!r}; expected one of {SYMMETRIZATION_METHODS}"
        )
    s[zero_pair] = 0.0
    # sqrt(a*b) and sqrt(b*a) can differ in the last bit
    return np.triu(s) + np.triu(s, 1).T


def to_exchange(s, labels=None):
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise InputError(f"matrix must be square, got shape {s.shape}")
    if not np.array_equal(s, s.T):
        if np.max(np.abs(s - s.T)) > 1e-12 * max(1.0, np.max(np.abs(s))):
            raise InputError("matrix is not symmetric")
        s = (s + s.T) / 2
    total = s.sum()
    if not total > 0:
        raise InputError("matrix has no positive mass")
    labels = _default_labels(len(s)) if labels is None else tuple(labels)
    zero = np.flatnonzero(s.sum(axis=1) <= 0)
    if zero.size:
        raise InputError(f"vertex {labels[zero[0]]!r} is isolated (zero row sum)")
    e = s / total
    # tiny renormalization so the sum is 1 to machine precision
    e = e / e.sum()
    return ExchangeMatrix(e, labels)


def strip_diagonal(E):
    """Diagonal-free exchange matrix: drop self-exchanges and renormalize.

    ``ê_ij = (e_ij - δ_ij e_ii) / (1 - Σ_k e_kk)``.
    """
    e = np.array(E.e)
    diag = np.diag(e).copy()
    stay = diag.sum()
    if stay >= 1.0 - 1e-15:
        raise InputError("pure-diagonal graph: no off-diagonal structure remains")
    if not np.any(diag):
        return E
    off = e - np.diag(diag)
    only_self = np.flatnonzero(off.sum(axis=1) <= 0)
    if only_self.size:
        raise InputError(f"vertex {E.labels[only_self[0]]!r} only has self-flow")
    hat = off / (1.0 - stay)
    hat = hat / hat.sum()
    return ExchangeMatrix(hat, E.labels)


def exchange_from_flows(flow, method="half_sum", strip=False):
    """Convenience pipeline: symmetrize, normalize and optionally strip the diagonal."""
    E = to_exchange(symmetrize(flow, method), flow.labels)
    return strip_diagonal(E) if strip else E

"""Eigenstructure of the normalized exchange matrix.

The transition matrix ``P = Π⁻¹E`` of the reversible random walk is similar to
the symmetric matrix ``N = Π^{-1/2} E Π^{-1/2}``; everything here is computed
from ``N`` so the spectrum is real and the eigenvectors orthonormal.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.linalg

from . import _csvio
from .errors import InputError, NumericalError

#: eigenvalues with absolute value below this are treated as zero
ZERO_EIGENVALUE = 1e-8
#: default max-norm tolerance on transition-profile differences
EQUIVALENCE_TOL = 1e-9
#: eigenvalues this small are rounding noise and are snapped to exactly zero
ROUNDOFF_EIGENVALUE = 1e-13


def _sign_fix(vectors):
    """Flip columns so the largest-magnitude entry is positive (lowest index wins ties)."""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


@dataclass(frozen=True)
class SpectralBasis:
    """Eigenvalues ``lam`` (descending), orthonormal eigenvectors ``U`` and raw
    coordinates ``X`` with ``X[i, a] = U[i, a] / sqrt(f[i])``."""

    lam: np.ndarray
    U: np.ndarray
    X: np.ndarray
    f: np.ndarray

    @property
    def n(self):
        return len(self.f)

    @property
    def is_connected(self):
        return self.n < 2 or self.lam[1] < 1.0 - 1e-10

    @property
    def is_bipartite(self):
        return self.n >= 2 and self.lam[-1] <= -1.0 + 1e-10

    @property
    def is_regular(self):
        return self.is_connected and (self.n < 2 or self.lam[-1] > -1.0 + 1e-10)

    def normalized_matrix(self, t=1):
        """``U Λᵗ Uᵀ``, i.e. ``Π^{-1/2} E^{(t)} Π^{-1/2}``."""
        return (self.U * self.lam**t) @ self.U.T


def normalized_exchange(E):
    s = 1.0 / np.sqrt(E.f)
    N = E.e * s[:, None] * s[None, :]
    return (N + N.T) / 2


def decompose(E):
    """Spectral decomposition of the normalized exchange matrix.

    Eigenvalues are sorted in decreasing order and clamped to ``[-1, 1]``;
    those below ``ROUNDOFF_EIGENVALUE`` in magnitude are set to zero so that
    rank-one graphs give exactly vanishing focused distances.
    The leading eigenvector is set to ``sqrt(f)`` exactly, also when the
    eigenvalue 1 is degenerate (disconnected graphs); remaining eigenvectors
    follow a deterministic sign convention.
    """
    N = normalized_exchange(E)
    try:
        lam, U = scipy.linalg.eigh(N)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    order = np.argsort(-lam, kind="stable")
    lam, U = lam[order], U[:, order]
    if abs(lam[0] - 1.0) > 1e-8:
        raise NumericalError(f"leading eigenvalue {lam[0]!r} differs from 1: malformed input")
    sqf = np.sqrt(E.f)
    # Rotate the λ=1 eigenspace so that its first vector is sqrt(f).
    top = np.flatnonzero(lam > 1.0 - 1e-10)
    Q = U[:, top]
    rest = Q - np.outer(sqf, sqf @ Q)
    if len(top) > 1:
        left, sv, _ = np.linalg.svd(rest, full_matrices=False)
        others = left[:, : len(top) - 1]
    else:
        others = np.empty((len(sqf), 0))
    U = np.column_stack([sqf, _sign_fix(others), _sign_fix(U[:, len(top):])])
    lam = np.clip(lam, -1.0, 1.0)
    lam[np.abs(lam) < ROUNDOFF_EIGENVALUE] = 0.0
    lam[0] = 1.0
    X = U / sqf[:, None]
    for a in (lam, U, X):
        a.setflags(write=False)
    return SpectralBasis(lam=lam, U=U, X=X, f=np.asarray(E.f))


def standardized(E):
    """Standardized exchange matrix ``(e_ij - f_i f_j) / sqrt(f_i f_j)``."""
    f = E.f
    s = np.sqrt(f)
    es = (E.e - np.outer(f, f)) / np.outer(s, s)
    return (es + es.T) / 2


def t_step(E, t):
    """The ``t``-step exchange matrix ``E^{(t)} = Π Pᵗ``; ``t`` may be ``np.inf``.

    The stationary limit ``f fᵀ`` is only returned for regular chains
    (connected and aperiodic).
    """
    f = E.f
    if t == np.inf or t == float("inf"):
        basis = decompose(E)
        if not basis.is_regular:
            raise InputError("t=inf requires a regular chain (connected and not bipartite)")
        return np.outer(f, f)
    if int(t) != t or t < 0:
        raise InputError(f"t must be a nonnegative integer or inf, got {t!r}")
    t = int(t)
    out = np.diag(f)
    P = E.e / f[:, None]
    for _ in range(t):
        out = out @ P
    return (out + out.T) / 2


def _profile_pairs(profiles, tol, skip_self=False):
    n = len(profiles)
    pairs = []
    for i, j in combinations(range(n), 2):
        diff = np.abs(profiles[i] - profiles[j])
        if skip_self:
            diff[[i, j]] = 0.0
        if diff.max(initial=0.0) <= tol:
            pairs.append((i, j))
    return pairs


def find_equivalent_pairs(E, tol=EQUIVALENCE_TOL):
    """Unordered pairs ``(i, j)`` with ``e_ik/f_i == e_jk/f_j`` for all ``k``,
    up to ``tol`` in max-norm. Indices are zero-based."""
    if tol <= 0:
        raise InputError("tol must be positive")
    return _profile_pairs(E.e / E.f[:, None], tol)


def weakly_equivalent_pairs(E_hat, tol=EQUIVALENCE_TOL):
    """Pairs equivalent on every ``k`` other than themselves, for a diagonal-free
    exchange matrix."""
    if tol <= 0:
        raise InputError("tol must be positive")
    if np.any(np.diag(E_hat.e) != 0):
        raise InputError("weak equivalence needs a zero-diagonal exchange matrix")
    return _profile_pairs(E_hat.e / E_hat.f[:, None], tol, skip_self=True)


def equivalence_classes(pairs, n):
    """Transitive closure of a pair list into sorted classes of size >= 2."""
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [g for g in groups.values() if len(g) > 1]


def ncut_relaxation_bound(basis, m):
    """Optimum ``1 + Σ_{α=1}^{m-1} λ_α`` of the spectrally relaxed Ncut problem.

    Returns the bound and ``X0 = (1, x_1, ..., x_{m-1})``, which satisfies
    ``X0ᵀ Π X0 = I``.
    """
    if not 1 <= m <= basis.n:
        raise InputError(f"m must lie in [1, {basis.n}], got {m}")
    value = 1.0 + float(np.sum(basis.lam[1:m]))
    return value, np.array(basis.X[:, :m])


def raw_coordinates_csv(basis, labels, k):
    """CSV text with columns label, f, x1..xk."""
    k = min(k, basis.n - 1)
    rows = [["label", "f"] + [f"x{a}" for a in range(1, k + 1)]]
    for i, lab in enumerate(labels):
        rows.append([lab, _csvio.fmt(basis.f[i])] + [_csvio.fmt(v) for v in basis.X[i, 1 : k + 1]])
    return _csvio.to_csv_text(rows)

"""Weighted classical multidimensional scaling and Huygens-type identities.

For objects with weights ``p`` (summing to one) and a dissimilarity ``D``,
the centering matrix ``H = I - 1 pᵀ`` yields the scalar products
``B = -½ H D Hᵀ`` and the kernel ``K_ij = sqrt(p_i p_j) B_ij``. ``D`` is
squared Euclidean iff ``K`` is positive semidefinite, whatever the choice of
``p``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _csvio
from .errors import InputError
from .spectral import _sign_fix

#: eigenvalues of K at most this fraction of the largest one are not retained
RETAIN_TOL = 1e-10


@dataclass(frozen=True)
class Embedding:
    coords: np.ndarray
    mu: np.ndarray
    p: np.ndarray
    total_inertia: float
    dropped_negative_mass: float
    eigenvalues: np.ndarray
    labels: tuple = None

    @property
    def dim(self):
        return len(self.mu)

    def reconstructed_distances(self, k=None):
        X = self.coords if k is None else self.coords[:, :k]
        sq = np.sum(X**2, axis=1)
        D = sq[:, None] + sq[None, :] - 2 * X @ X.T
        np.fill_diagonal(D, 0.0)
        return np.maximum(D, 0.0)


def _check_weights(p, n):
    p = np.asarray(p, dtype=float)
    if p.shape != (n,):
        raise InputError(f"weight vector has shape {p.shape}, expected ({n},)")
    if np.any(p <= 0):
        raise InputError("weights must be strictly positive")
    if abs(p.sum() - 1.0) > 1e-10:
        raise InputError(f"weights sum to {p.sum()!r}, not 1")
    return p


def _as_array(D):
    D = np.asarray(getattr(D, "D", D), dtype=float)
    if not np.all(np.isfinite(D)):
        raise InputError("distance matrix has infinite entries (disconnected pairs?)")
    return D


def kernel(D, p):
    """Weighted kernel ``K = Π_p^{1/2} B Π_p^{1/2}`` with ``B = -½ H D Hᵀ``."""
    D = _as_array(D)
    p = _check_weights(p, len(D))
    Dp = D @ p
    Dpp = p @ Dp
    # B_ij = -½ (D_ij - D_ip - D_jp) with D_ip = (Dp)_i - ½ pᵀDp
    B = -0.5 * (D - Dp[:, None] - Dp[None, :] + Dpp)
    s = np.sqrt(p)
    K = B * s[:, None] * s[None, :]
    return (K + K.T) / 2


def mds(D, p=None):
    """Weighted classical MDS.

    Parameters
    ----------
    D : DistanceMatrix or (n, n) array
        Symmetric dissimilarities with zero diagonal.
    p : (n,) array, optional
        Positive weights summing to one; defaults to ``D.p``.

    Returns
    -------
    Embedding
        Coordinates ``x_iβ = sqrt(μ_β) v_iβ / sqrt(p_i)`` for every retained
        eigenvalue ``μ_β > 1e-10 max(μ)``, in decreasing order. Negative
        eigenvalues are not fatal; their absolute sum is reported as
        ``dropped_negative_mass``.
    """
    if p is None:
        p = D.p
    labels = getattr(D, "labels", None)
    K = kernel(D, p)
    p = np.asarray(p, dtype=float)
    mu, V = scipy.linalg.eigh(K)
    order = np.argsort(-mu, kind="stable")
    mu, V = mu[order], V[:, order]
    top = mu[0] if len(mu) else 0.0
    keep = mu > RETAIN_TOL * top if top > 0 else np.zeros(len(mu), dtype=bool)
    Vk = _sign_fix(V[:, keep])
    coords = Vk * np.sqrt(mu[keep])[None, :] / np.sqrt(p)[:, None]
    neg = float(-mu[mu < 0].sum())
    return Embedding(
        coords=coords,
        mu=mu[keep].copy(),
        p=p,
        total_inertia=float(np.trace(K)),
        dropped_negative_mass=neg,
        eigenvalues=mu,
        labels=labels,
    )


def is_squared_euclidean(D, p=None, tol=1e-10):
    """Euclidean-embeddability test.

    Returns ``(verdict, min_eigenvalue)``, the verdict being true iff the
    smallest kernel eigenvalue is at least ``-tol * max(1, largest)``.
    """
    if p is None:
        p = D.p
    mu = scipy.linalg.eigvalsh(kernel(D, p))
    lo, hi = float(mu.min()), float(mu.max())
    return lo >= -tol * max(1.0, hi), lo


def centroid_and_inertia(D, q):
    """Squared distances to the centroid of signed distribution ``q`` and its inertia.

    ``Δ_q = ½ qᵀDq`` and ``D_iq = (Dq)_i - Δ_q``; no coordinates needed.
    Negative entries in ``q`` are allowed as long as it sums to one.
    """
    D = _as_array(D)
    q = np.asarray(q, dtype=float)
    if abs(q.sum() - 1.0) > 1e-9:
        raise InputError(f"signed distribution must sum to 1, got {q.sum()!r}")
    Dq = D @ q
    delta = 0.5 * float(q @ Dq)
    return Dq - delta, delta


def embedding_to_csv(emb, k=None):
    """CSV text: header ``label, weight, mu=<μ1>, ...``, one row per object."""
    k = emb.dim if k is None else min(k, emb.dim)
    labels = emb.labels or tuple(str(i + 1) for i in range(len(emb.p)))
    rows = [["label", "weight"] + [f"mu={_csvio.fmt(m)}" for m in emb.mu[:k]]]
    for i, lab in enumerate(labels):
        rows.append([lab, _csvio.fmt(emb.p[i])] + [_csvio.fmt(v) for v in emb.coords[i, :k]])
    return _csvio.to_csv_text(rows)


def load_embedding_csv(source):
    """Inverse of :func:`embedding_to_csv`; returns ``(labels, weights, mu, coords)``."""
    _, rows = _csvio.read_rows(source)
    header = rows[0]
    mu = np.array([_csvio.parse_number(h.split("=", 1)[1], "header") for h in header[2:]])
    labels = tuple(r[0] for r in rows[1:])
    w = np.array([_csvio.parse_number(r[1], f"row {i + 2}") for i, r in enumerate(rows[1:])])
    coords = np.array(
        [[_csvio.parse_number(v, f"row {i + 2}") for v in r[2:]] for i, r in enumerate(rows[1:])]
    ).reshape(len(labels), len(mu))
    return labels, w, mu, coords

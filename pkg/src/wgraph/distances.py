"""Squared Euclidean distances on weighted graphs.

Natural distances scale the raw coordinates by a nonnegative spectral
function ``g``::

    D_ij = Σ_{α≥1} g(λ_α) (x_iα - x_jα)²

The named families are chi-square ``λ²``, diffusive ``λ``, frozen ``1``,
commute ``1/(1-λ)``, absorption ``(1-ρ)/(1-ρλ)`` and sif ``λ²/(1-λ)``. Also
here: the shortest-path and jump distances, Schoenberg transformations, and
the Markov-chain and electrical quantities that cross-check them.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.spatial.distance import pdist, squareform

from . import _csvio
from .errors import DisconnectedGraphError, InputError, NotDiffusiveError, NumericalError
from .spectral import decompose

FAMILIES = ("chi2", "diffusive", "frozen", "commute", "absorption", "sif", "custom")
#: λ₁ above 1 - DISCONNECTED_TOL counts as a disconnected graph for irreducible families
DISCONNECTED_TOL = 1e-12


@dataclass(frozen=True)
class GSpec:
    """Spectral function selecting a natural distance.

    ``rho`` is used by ``absorption``; ``g`` is the callable of ``custom``.
    """

    family: str
    rho: float = None
    g: object = field(default=None, compare=False)
    name: str = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"unknown distance family {self.family!r}")
        if self.family == "absorption":
            if self.rho is None or not 0.0 < self.rho < 1.0:
                raise InputError(f"absorption needs 0 < rho < 1, got {self.rho!r}")
        if self.family == "custom" and not callable(self.g):
            raise InputError("custom family needs a callable g")

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        fam = self.family
        if fam == "chi2":
            return lam**2
        if fam == "diffusive":
            return lam.copy()
        if fam == "frozen":
            return np.ones_like(lam)
        with np.errstate(divide="ignore"):
            if fam == "commute":
                return 1.0 / (1.0 - lam)
            if fam == "sif":
                return lam**2 / (1.0 - lam)
        if fam == "absorption":
            return (1.0 - self.rho) / (1.0 - self.rho * lam)
        return np.asarray(self.g(lam), dtype=float)

    @property
    def tag(self):
        if self.family == "absorption":
            return f"absorption({self.rho:g})"
        if self.family == "custom":
            return self.name or "custom"
        return self.family

    @property
    def focused(self):
        return bool(self(np.array([0.0]))[0] == 0.0)

    @property
    def irreducible(self):
        return self.family in ("commute", "sif") or (
            self.family == "custom" and not np.isfinite(self(np.array([1.0]))[0])
        )


@dataclass(frozen=True)
class PhiSpec:
    """Schoenberg transformation: ``power`` ``D**a`` (0 < a <= 1) or
    ``saturating_exp`` ``1 - exp(-b D)`` (b > 0)."""

    transform: str
    param: float

    def __post_init__(self):
        if self.transform == "power":
            if not 0.0 < self.param <= 1.0:
                raise InputError(f"power exponent must lie in (0, 1], got {self.param!r}")
        elif self.transform == "saturating_exp":
            if not self.param > 0.0:
                raise InputError(f"saturating_exp rate must be > 0, got {self.param!r}")
        else:
            raise InputError(f"unknown Schoenberg transform {self.transform!r}")

    def __call__(self, d):
        d = np.asarray(d, dtype=float)
        if self.transform == "power":
            return d**self.param
        return -np.expm1(-self.param * d)

    @property
    def tag(self):
        return f"{self.transform}({self.param:g})"


@dataclass(frozen=True)
class DistanceMatrix:
    """Pairwise squared distances ``D`` with vertex weights ``p`` and provenance flags."""

    D: np.ndarray
    p: np.ndarray
    family: str
    focused: bool = False
    irreducible: bool = False
    euclidean_verified: bool = None
    labels: tuple = None

    def __post_init__(self):
        D = np.array(self.D, dtype=float)
        p = np.array(self.p, dtype=float)
        if D.ndim != 2 or D.shape[0] != D.shape[1] or D.shape[0] != len(p):
            raise InputError(f"distance matrix shape {D.shape} does not match {len(p)} weights")
        if not np.array_equal(D, D.T):
            raise InputError("distance matrix is not symmetric")
        if np.any(np.diag(D) != 0):
            raise InputError("distance matrix has a nonzero diagonal")
        if np.any(D < -1e-12):
            raise InputError("distance matrix has negative entries")
        D[D < 0] = 0.0
        labels = self.labels
        labels = tuple(str(i + 1) for i in range(len(p))) if labels is None else tuple(labels)
        for a in (D, p):
            a.setflags(write=False)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self):
        return len(self.p)

    @property
    def inertia(self):
        """``Δ = ½ Σ_ij p_i p_j D_ij``."""
        return 0.5 * float(self.p @ self.D @ self.p)


def _finish(D, clamp_tol=1e-12):
    """Symmetrize, zero the diagonal, clamp roundoff negatives."""
    D = (D + D.T) / 2
    np.fill_diagonal(D, 0.0)
    if np.any(D < -clamp_tol):
        raise NumericalError(f"negative squared distance {D.min():.3e}: non-p.d. family misuse")
    D[D < 0] = 0.0
    return D


def natural_distance(E_or_basis, spec, labels=None, disconnected_tol=DISCONNECTED_TOL):
    """Natural squared Euclidean distance for spectral function ``spec``.

    Accepts an :class:`~wgraph.flow_ingest.ExchangeMatrix` or a precomputed
    :class:`~wgraph.spectral.SpectralBasis`.

    Raises
    ------
    DisconnectedGraphError
        Irreducible family (``g(1) = ∞``) on a graph with ``λ₁ > 1 - disconnected_tol``.
    NotDiffusiveError
        ``diffusive`` on an exchange matrix that is not positive semidefinite.
    InputError
        ``custom`` g negative on the spectrum.
    """
    if isinstance(spec, str):
        spec = GSpec(spec)
    if hasattr(E_or_basis, "e"):
        labels = E_or_basis.labels if labels is None else labels
        basis = decompose(E_or_basis)
    else:
        basis = E_or_basis
    lam = basis.lam[1:]
    if spec.irreducible and lam.size and lam[0] > 1.0 - disconnected_tol:
        raise DisconnectedGraphError("irreducible distance on disconnected graph")
    if spec.family == "diffusive" and lam.size and lam.min() < -1e-12:
        raise NotDiffusiveError(
            f"exchange matrix not diffusive (smallest eigenvalue {lam.min():.3e})"
        )
    g = spec(lam)
    if spec.family == "diffusive":
        g = np.maximum(g, 0.0)
    if np.any(~np.isfinite(g)):
        raise NumericalError(f"g is not finite on the spectrum of this graph ({spec.tag})")
    if np.any(g < 0):
        raise InputError(f"g is negative on eigenvalue {lam[np.argmin(g)]!r} ({spec.tag})")
    Y = basis.X[:, 1:] * np.sqrt(g)
    n = basis.n
    D = squareform(pdist(Y, "sqeuclidean")) if n > 1 else np.zeros((1, 1))
    return DistanceMatrix(
        _finish(D),
        basis.f,
        family=spec.tag,
        focused=spec.focused,
        irreducible=spec.irreducible,
        labels=labels,
    )


def fundamental_matrix(E):
    """Fundamental matrix ``Y = (Π - E + f fᵀ)⁻¹ Π`` and mean hitting times.

    Returns ``(Y, M)`` with ``M[i, j] = (y_jj - y_ij) / f_j`` the expected
    time for the walk started at ``i`` to reach ``j``.
    """
    f = E.f
    if not _is_connected(E):
        raise DisconnectedGraphError("fundamental matrix is singular on a disconnected graph")
    A = np.diag(f) - E.e + np.outer(f, f)
    try:
        Y = scipy.linalg.solve(A, np.diag(f), assume_a="sym")
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular system: {exc}") from exc
    M = (np.diag(Y)[None, :] - Y) / f[None, :]
    np.fill_diagonal(M, 0.0)
    return Y, M


def absorption_visits(E, rho):
    """Expected visits before absorption, ``V = (I - ρP)⁻¹ = (Π - ρE)⁻¹ Π``."""
    if not 0.0 < rho < 1.0:
        raise InputError(f"rho must lie in (0, 1), got {rho!r}")
    f = E.f
    try:
        return scipy.linalg.solve(np.diag(f) - rho * E.e, np.diag(f), assume_a="sym")
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular absorption system: {exc}") from exc


def _off_diagonal(e):
    w = np.array(e, dtype=float)
    np.fill_diagonal(w, 0.0)
    return w


def _is_connected(E):
    ncomp, _ = connected_components(_off_diagonal(E.e) > 0, directed=False)
    return ncomp == 1


def shortest_path_distance(E):
    """All-pairs minimal sums of edge resistances ``1/e_ij`` over off-diagonal edges.

    Self-loops are not edges. Disconnected pairs get ``inf``. The result is not
    squared Euclidean in general, so ``euclidean_verified`` stays unset.
    """
    w = _off_diagonal(E.e)
    with np.errstate(divide="ignore"):
        resist = np.where(w > 0, 1.0 / np.where(w > 0, w, 1.0), 0.0)
    D = dijkstra(resist, directed=False)
    D = np.minimum(D, D.T)
    np.fill_diagonal(D, 0.0)
    return DistanceMatrix(
        D, E.f, family="shortest_path", focused=False, irreducible=True, labels=E.labels
    )


def _require_zero_diagonal(E_hat):
    if np.any(np.diag(E_hat.e) != 0):
        raise InputError("jump distance needs a zero-diagonal exchange matrix")


def jump_distance(E_hat):
    """Jump distance on a diagonal-free exchange matrix::

        D_ij = Σ_{k≠i,j} f_k (e_ik/(f_i f_k) - e_jk/(f_j f_k))²

    Zero on weakly equivalent pairs.
    """
    _require_zero_diagonal(E_hat)
    f = E_hat.f
    n = len(f)
    Q = E_hat.e / np.outer(f, f)
    D = np.zeros((n, n))
    idx = np.arange(n)
    for i in range(n):
        terms = f[None, :] * (Q[i][None, :] - Q) ** 2
        terms[:, i] = 0.0
        terms[idx, idx] = 0.0
        D[i] = terms.sum(axis=1)
    return DistanceMatrix(
        _finish(D), f, family="jump", focused=False, irreducible=False, labels=E_hat.labels
    )


def jump_distance_closed_form(E_hat):
    """Same distance from the unrestricted chi-square sum minus its ``k ∈ {i, j}`` terms."""
    _require_zero_diagonal(E_hat)
    f = E_hat.f
    e = E_hat.e
    P = e / f[:, None]
    full = squareform(pdist(P / np.sqrt(f)[None, :], "sqeuclidean"))
    D = full - e**2 / np.outer(f, f) * (1.0 / f[:, None] + 1.0 / f[None, :])
    return _finish(D)


def schoenberg_transform(dist, phi):
    """Entrywise ``φ(D)``; preserves a zero diagonal. ``euclidean_verified`` is reset."""
    if np.any(dist.D < 0):
        raise InputError("Schoenberg transform needs nonnegative distances")
    D = phi(dist.D)
    np.fill_diagonal(D, 0.0)
    return replace(
        dist, D=D, family=f"{dist.family}|{phi.tag}", euclidean_verified=None
    )


def dirichlet_energy(E, y):
    """Dirichlet form ``½ Σ_ij e_ij (y_i - y_j)²``."""
    y = np.asarray(y, dtype=float)
    diff = y[:, None] - y[None, :]
    return 0.5 * float(np.sum(E.e * diff**2))


def harmonic_potential(E, i, j):
    """Minimizer of the Dirichlet form subject to ``y_i = 1``, ``y_j = 0``.

    Vertices outside the component of ``i`` and ``j`` are set to 0.
    """
    w = _off_diagonal(E.e)
    n = len(w)
    _, comp = connected_components(w > 0, directed=False)
    y = np.zeros(n)
    y[i] = 1.0
    inner = np.flatnonzero((comp == comp[i]) & (np.arange(n) != i) & (np.arange(n) != j))
    if inner.size:
        L = np.diag(w.sum(axis=1)) - w
        rhs = -L[np.ix_(inner, [i])][:, 0]
        y[inner] = scipy.linalg.solve(L[np.ix_(inner, inner)], rhs, assume_a="sym")
    return y


def electrical_commute(E, i, j):
    """Commute distance as an inverse effective conductance, ``1/ℰ(y⁰)``.

    Returns ``inf`` when ``i`` and ``j`` lie in different components.
    """
    if i == j:
        raise InputError("electrical commute needs two distinct vertices")
    _, comp = connected_components(_off_diagonal(E.e) > 0, directed=False)
    if comp[i] != comp[j]:
        return math.inf
    return 1.0 / dirichlet_energy(E, harmonic_potential(E, i, j))


# -- CSV ---------------------------------------------------------------------


def distance_to_csv(dist):
    """CSV text: a metadata comment, then ``label, weight, D_i1 ... D_in`` rows."""
    ev = "" if dist.euclidean_verified is None else int(bool(dist.euclidean_verified))
    meta = (
        f"family={dist.family};focused={int(dist.focused)};"
        f"irreducible={int(dist.irreducible)};euclidean={ev}"
    )
    rows = [["label", "weight"] + list(dist.labels)]
    for i, lab in enumerate(dist.labels):
        rows.append([lab, _csvio.fmt(dist.p[i])] + [_csvio.fmt(v) for v in dist.D[i]])
    return _csvio.to_csv_text(rows, comments=[meta])


def load_distance_csv(source):
    comments, rows = _csvio.read_rows(source)
    meta = {}
    for c in comments:
        for part in c.split(";"):
            if "=" in part:
                k, v = part.split("=", 1)
                meta[k.strip()] = v.strip()
    if len(rows) < 2:
        raise InputError("distance CSV needs a header and data rows")
    labels = tuple(c.strip() for c in rows[0][2:])
    n = len(labels)
    if len(rows) - 1 != n:
        raise InputError(f"non-square distance data: {n} columns, {len(rows) - 1} rows")
    p = np.zeros(n)
    D = np.zeros((n, n))
    for r, row in enumerate(rows[1:]):
        if len(row) != n + 2:
            raise InputError(f"row {r + 2} has {len(row)} fields, expected {n + 2}")
        if row[0].strip() != labels[r]:
            raise InputError(f"row {r + 2} label {row[0]!r} does not match column {labels[r]!r}")
        p[r] = _csvio.parse_number(row[1], f"row {r + 2}, column 2")
        for c, tok in enumerate(row[2:]):
            D[r, c] = _csvio.parse_number(tok, f"row {r + 2}, column {c + 3}")
    ev = meta.get("euclidean", "")
    return DistanceMatrix(
        D,
        p,
        family=meta.get("family", "unknown"),
        focused=meta.get("focused") == "1",
        irreducible=meta.get("irreducible") == "1",
        euclidean_verified=None if ev == "" else ev == "1",
        labels=labels,
    )

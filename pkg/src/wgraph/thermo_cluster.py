"""Thermodynamic soft clustering.

Memberships ``Z`` are ``n × m`` row-stochastic arrays. Given a squared
Euclidean distance with vertex weights ``f``, the free energy

    F[Z] = Δ_W[Z] + T · I(O, Z)

trades the within-group inertia against the object-group mutual
information. Its stationary points solve the fixed point

    z_ig ∝ ρ_g exp(-D_ig / T)

with ``D_ig`` the squared distance from ``i`` to the centroid of group ``g``,
obtained directly from ``D`` (no coordinates). :func:`anneal` follows these
fixed points along an increasing temperature ladder starting from the
identity membership.
"""

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import xlogy

from . import _csvio
from .errors import InputError
from .euclid_mds import centroid_and_inertia

#: groups lighter than this are dropped when merging
EMPTY_GROUP = 1e-14
MERGE_TOL = 1e-10


def _weights(E_or_f):
    return np.asarray(getattr(E_or_f, "f", E_or_f), dtype=float)


def _dist(D):
    return np.asarray(getattr(D, "D", D), dtype=float)


def check_membership(Z, n=None, tol=1e-12):
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2:
        raise InputError(f"membership must be 2-d, got shape {Z.shape}")
    if n is not None and Z.shape[0] != n:
        raise InputError(f"membership has {Z.shape[0]} rows, expected {n}")
    if np.any(Z < 0):
        raise InputError("membership has negative entries")
    if np.max(np.abs(Z.sum(axis=1) - 1.0)) > tol:
        raise InputError("membership rows do not sum to 1")
    return Z


def hard_membership(assignment, m=None):
    """Indicator membership from an integer group index per object."""
    assignment = np.asarray(assignment, dtype=int)
    m = assignment.max() + 1 if m is None else m
    Z = np.zeros((len(assignment), m))
    Z[np.arange(len(assignment)), assignment] = 1.0
    return Z


@dataclass(frozen=True)
class GroupStats:
    """Volumes ``rho``, overlaps ``theta = ZᵀΠZ``, associations ``assoc = ZᵀEZ``
    and group distributions ``pi`` (one column per group; zero for empty groups)."""

    rho: np.ndarray
    theta: np.ndarray
    assoc: np.ndarray
    pi: np.ndarray
    empty: np.ndarray

    @property
    def hardness(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.empty, np.nan, np.diag(self.theta) / self.rho)


def group_stats(Z, E):
    Z = check_membership(Z, E.n, tol=1e-9)
    f = E.f
    rho = f @ Z
    theta = Z.T @ (f[:, None] * Z)
    assoc = Z.T @ E.e @ Z
    empty = rho <= 0
    pi = np.zeros_like(Z)
    live = ~empty
    pi[:, live] = f[:, None] * Z[:, live] / rho[live]
    return GroupStats(
        rho=rho, theta=(theta + theta.T) / 2, assoc=(assoc + assoc.T) / 2, pi=pi, empty=empty
    )


class Entropies(NamedTuple):
    H_O: float
    H_Z: float
    H_OZ: float
    I: float
    H_Z_given_O: float


def entropies(Z, f):
    """Object, group and joint entropies (nats) with mutual information and softness."""
    Z = np.asarray(Z, dtype=float)
    f = _weights(f)
    rho = f @ Z
    rho = rho / rho.sum()
    H_O = -float(np.sum(xlogy(f, f)))
    H_Z = -float(np.sum(xlogy(rho, rho)))
    joint = f[:, None] * Z
    H_OZ = -float(np.sum(xlogy(joint, joint)))
    # direct sums rather than differences of entropies: exact zeros stay zero
    softness = -float(np.sum(f[:, None] * xlogy(Z, Z)))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(Z > 0, Z / np.where(rho > 0, rho, 1.0)[None, :], 1.0)
    I = float(np.sum(joint * np.log(ratio)))
    return Entropies(H_O, max(H_Z, 0.0), H_OZ, max(I, 0.0), max(softness, 0.0) + 0.0)


def mutual_information(Z, f):
    """Object-group mutual information ``I(O, Z) = H(O) + H(Z) - H(O, Z)``."""
    return entropies(Z, f).I


class FreeEnergy(NamedTuple):
    F: float
    within: float
    between: float
    I: float


def _group_geometry(Z, D, f):
    """Group volumes, centroid distances ``D_ig`` and group inertias ``Δ_g``."""
    rho = f @ Z
    live = rho > 0
    n, m = Z.shape
    Dig = np.zeros((n, m))
    delta = np.zeros(m)
    for g in np.flatnonzero(live):
        pi = f * Z[:, g] / rho[g]
        pi = pi / pi.sum()
        Dig[:, g], delta[g] = centroid_and_inertia(D, pi)
    return rho, live, Dig, delta


def free_energy(Z, D, T):
    """Free energy ``F = Δ_W + T I`` with its within/between decomposition.

    ``D`` is a :class:`~wgraph.distances.DistanceMatrix`; its weights are the
    vertex weights ``f``.
    """
    if not T > 0:
        raise InputError(f"temperature must be positive, got {T!r}")
    f = np.asarray(D.p)
    Dm = _dist(D)
    Z = np.asarray(Z, dtype=float)
    rho, live, _, delta = _group_geometry(Z, Dm, f)
    Df = Dm @ f
    delta0 = 0.5 * float(f @ Df)
    within = float(rho[live] @ delta[live])
    between = 0.0
    for g in np.flatnonzero(live):
        pi = f * Z[:, g] / rho[g]
        # squared distance between the centroids of pi and f
        between += rho[g] * (float(pi @ Df) - delta[g] - delta0)
    I = mutual_information(Z, f)
    return FreeEnergy(within + T * I, within, between, I)


def em_step(Z, D, T):
    """One fixed-point update ``z'_ig = ρ_g e^{-D_ig/T} / Σ_h ρ_h e^{-D_ih/T}``.

    Empty groups stay empty. The row maximum of the exponent is subtracted
    before exponentiation.
    """
    if not T > 0:
        raise InputError(f"temperature must be positive, got {T!r}")
    f = np.asarray(D.p)
    Z = np.asarray(Z, dtype=float)
    rho, live, Dig, _ = _group_geometry(Z, _dist(D), f)
    if not live.any():
        raise InputError("all groups are empty")
    logits = np.full(Z.shape, -np.inf)
    logits[:, live] = np.log(rho[live])[None, :] - Dig[:, live] / T
    logits -= logits.max(axis=1, keepdims=True)
    W = np.exp(logits)
    return W / W.sum(axis=1, keepdims=True)


def iterate_to_convergence(Z, D, T, max_iter=10_000, tol=1e-9, callback=None):
    """Iterate :func:`em_step` until ``max |ΔZ| < tol`` or ``max_iter`` steps.

    ``callback(iteration, Z)``, if given, sees every new membership.
    Returns ``(Z, iterations, converged)``; non-convergence is not an error.
    """
    if max_iter < 1:
        raise InputError("max_iter must be >= 1")
    if not tol > 0:
        raise InputError("tol must be positive")
    Z = np.asarray(Z, dtype=float)
    for it in range(1, max_iter + 1):
        Z_new = em_step(Z, D, T)
        change = np.max(np.abs(Z_new - Z))
        Z = Z_new
        if callback is not None:
            callback(it, Z)
        if change < tol:
            return Z, it, True
    return Z, max_iter, False


def merge_equivalent_groups(Z, f, tol=MERGE_TOL):
    """Aggregate groups with relative overlap ``θ_gh / sqrt(θ_gg θ_hh) >= 1 - tol``.

    ``f`` is the vertex weight vector or an exchange matrix. Groups lighter
    than ``EMPTY_GROUP`` are dropped first (rows renormalized). Merged groups
    keep the position of their first member; the closure is transitive.
    """
    f = _weights(f)
    Z = np.asarray(Z, dtype=float)
    rho = f @ Z
    keep = rho >= EMPTY_GROUP
    if not keep.all():
        Z = Z[:, keep]
        Z = Z / Z.sum(axis=1, keepdims=True)
    m = Z.shape[1]
    theta = Z.T @ (f[:, None] * Z)
    d = np.sqrt(np.diag(theta))
    rel = theta / np.outer(d, d)
    parent = list(range(m))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for g in range(m):
        for h in range(g + 1, m):
            if rel[g, h] >= 1.0 - tol:
                rg, rh = find(g), find(h)
                if rg != rh:
                    parent[max(rg, rh)] = min(rg, rh)
    roots = sorted({find(g) for g in range(m)})
    if len(roots) == m:
        return Z
    out = np.zeros((Z.shape[0], len(roots)))
    col = {r: c for c, r in enumerate(roots)}
    for g in range(m):
        out[:, col[find(g)]] += Z[:, g]
    return out / out.sum(axis=1, keepdims=True)


def variation_of_information(Z, R, f):
    """Partition distance ``H(Z) + H(R) - 2 I(Z, R)`` under vertex weights ``f``."""
    f = _weights(f)
    Z, R = np.asarray(Z, dtype=float), np.asarray(R, dtype=float)
    if Z.shape[0] != R.shape[0] or Z.shape[0] != len(f):
        raise InputError("memberships and weights disagree on the number of objects")
    joint = Z.T @ (f[:, None] * R)
    rz, rr = joint.sum(axis=1), joint.sum(axis=0)
    H_Z = -float(np.sum(xlogy(rz, rz)))
    H_R = -float(np.sum(xlogy(rr, rr)))
    H_ZR = -float(np.sum(xlogy(joint, joint)))
    I = H_Z + H_R - H_ZR
    return max(H_Z + H_R - 2 * I, 0.0)


# -- annealing ----------------------------------------------------------------


def geometric_schedule(start=0.02, end=2.0, ratio=1.05):
    """Relative temperatures ``start, start·ratio, ...`` ending exactly at ``end``."""
    if not (0 < start < end and ratio > 1):
        raise InputError("schedule needs 0 < start < end and ratio > 1")
    k = int(np.floor(np.log(end / start) / np.log(ratio) + 1e-9))
    ladder = start * ratio ** np.arange(k + 1)
    if ladder[-1] < end * (1 - 1e-12):
        ladder = np.append(ladder, end)
    return ladder


@dataclass
class AnnealOptions:
    max_iter: int = 10_000
    tol: float = 1e-9
    merge_tol: float = MERGE_TOL
    stop_at_one: bool = False
    coalesce: bool = False
    coalesce_entropy: float = 1e-6
    coalesce_gap: float = 1e-9
    reference: np.ndarray = None


@dataclass(frozen=True)
class TraceRecord:
    T: float
    T_rel: float
    M: int
    Delta_W: float
    I: float
    F: float
    H_Z_given_O: float
    VI: float
    iterations: int
    converged: bool
    coalesced: bool = False


TRACE_COLUMNS = ("T", "T_rel", "M", "Delta_W", "I", "F", "H_Z_given_O", "VI", "iterations", "converged")


@dataclass
class AnnealingTrace:
    """Per-temperature records with the membership reached at each step."""

    inertia: float
    records: list = field(default_factory=list)
    memberships: list = field(default_factory=list)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    @property
    def M(self):
        return self.column("M")

    @property
    def T_rel(self):
        return self.column("T_rel")

    def __len__(self):
        return len(self.records)


def anneal(D, E, schedule=None, options=None, Z0=None):
    """Soft hierarchical descendant clustering.

    Starts from the identity membership (or ``Z0``) at the first relative
    temperature ``T_rel = T/Δ`` and, at every rung of the increasing ladder,
    iterates to a fixed point, merges equivalent groups and records the
    trace. The converged membership seeds the next rung.

    Non-convergence is recorded in the trace, never raised.
    """
    options = options or AnnealOptions()
    f = _weights(E)
    if not np.allclose(f, D.p, rtol=0, atol=1e-12):
        raise InputError("distance weights differ from the graph weights")
    schedule = geometric_schedule() if schedule is None else np.asarray(schedule, dtype=float)
    if schedule.ndim != 1 or len(schedule) == 0 or np.any(np.diff(schedule) <= 0):
        raise InputError("schedule must be strictly increasing")
    if schedule[0] <= 0:
        raise InputError("relative temperatures must be positive")
    delta = D.inertia
    # all-zero distances: any positive temperature gives the same fixed point
    scale = delta if delta > 0 else 1.0
    Z = np.eye(len(f)) if Z0 is None else check_membership(Z0, len(f), tol=1e-9)
    R = options.reference
    trace = AnnealingTrace(inertia=delta)
    for t_rel in schedule:
        T = float(t_rel * scale)
        Z, its, ok = iterate_to_convergence(Z, D, T, options.max_iter, options.tol)
        Z = merge_equivalent_groups(Z, f, options.merge_tol)
        coalesced = False
        if options.coalesce and Z.shape[1] > 1:
            H_Z = entropies(Z, f).H_Z
            fe = free_energy(Z, D, T)
            if H_Z < options.coalesce_entropy or fe.F - delta > -options.coalesce_gap:
                Z = np.ones((len(f), 1))
                coalesced = True
        fe = free_energy(Z, D, T)
        ent = entropies(Z, f)
        vi = variation_of_information(Z, R, f) if R is not None else float("nan")
        trace.records.append(
            TraceRecord(
                T=T,
                T_rel=float(t_rel),
                M=Z.shape[1],
                Delta_W=fe.within,
                I=fe.I,
                F=fe.F,
                H_Z_given_O=ent.H_Z_given_O,
                VI=vi,
                iterations=its,
                converged=ok,
                coalesced=coalesced,
            )
        )
        trace.memberships.append(Z.copy())
        if options.stop_at_one and Z.shape[1] == 1:
            break
    return trace


def cooling_anneal(D, m, t_rel_start=2.0, t_rel_end=0.02, ratio=1.05, seed=0, tol=1e-9,
                   max_iter=10_000):
    """Classic descending deterministic annealing with ``m`` groups.

    Starts from a slightly perturbed uniform membership at a high relative
    temperature and cools geometrically down to ``t_rel_end``, each fixed
    point seeding the next. Returns the final ``n × m`` membership.
    """
    rng = np.random.default_rng(seed)
    n = D.n
    scale = D.inertia if D.inertia > 0 else 1.0
    Z = np.full((n, m), 1.0 / m) + 1e-3 * rng.standard_normal((n, m))
    Z = np.abs(Z)
    Z /= Z.sum(axis=1, keepdims=True)
    t = t_rel_start
    while True:
        Z, _, _ = iterate_to_convergence(Z, D, t * scale, max_iter, tol)
        if t <= t_rel_end:
            break
        t = max(t / ratio, t_rel_end)
        # re-seed symmetry breaking in case groups collapsed at high temperature
        Z = np.abs(Z + 1e-6 * rng.standard_normal(Z.shape))
        Z /= Z.sum(axis=1, keepdims=True)
    return Z


# -- serialization ---------------------------------------------------------------


def trace_to_csv(trace):
    rows = [list(TRACE_COLUMNS)]
    for r in trace.records:
        vi = "" if np.isnan(r.VI) else _csvio.fmt(r.VI)
        rows.append(
            [
                _csvio.fmt(r.T),
                _csvio.fmt(r.T_rel),
                str(r.M),
                _csvio.fmt(r.Delta_W),
                _csvio.fmt(r.I),
                _csvio.fmt(r.F),
                _csvio.fmt(r.H_Z_given_O),
                vi,
                str(r.iterations),
                "1" if r.converged else "0",
            ]
        )
    return _csvio.to_csv_text(rows)


def load_trace_csv(source):
    """Parse a trace CSV back into a list of dicts (VI is ``nan`` when empty)."""
    _, rows = _csvio.read_rows(source)
    header = rows[0]
    out = []
    for row in rows[1:]:
        rec = {}
        for k, v in zip(header, row):
            if k in ("M", "iterations"):
                rec[k] = int(v)
            elif k == "converged":
                rec[k] = v == "1"
            else:
                rec[k] = float("nan") if v == "" else float(v)
        out.append(rec)
    return out


def membership_snapshot(Z, f, labels, T, T_rel):
    f = _weights(f)
    rho = f @ Z
    return {
        "T": float(_csvio.fmt(T)),
        "T_rel": float(_csvio.fmt(T_rel)),
        "labels": list(labels),
        "memberships": [[float(_csvio.fmt(v)) for v in row] for row in Z],
        "rho": [float(_csvio.fmt(v)) for v in rho],
    }


def snapshots_to_json(snapshots):
    return json.dumps(snapshots, indent=1, sort_keys=True) + "\n"


def load_reference_partition(source, labels):
    """Read a ``label,group`` CSV into a hard membership aligned with ``labels``."""
    _, rows = _csvio.read_rows(source)
    if rows and rows[0][0].strip().lower() == "label":
        rows = rows[1:]
    groups = {}
    for row in rows:
        if len(row) < 2:
            raise InputError(f"reference row {row!r} needs label and group")
        groups[row[0].strip()] = row[1].strip()
    missing = [lab for lab in labels if lab not in groups]
    if missing:
        raise InputError(f"reference partition lacks labels {missing}")
    names = sorted(set(groups[lab] for lab in labels))
    idx = {g: k for k, g in enumerate(names)}
    return hard_membership([idx[groups[lab]] for lab in labels], len(names))

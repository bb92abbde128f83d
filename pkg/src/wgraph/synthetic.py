"""Small synthetic graphs and flow tables for tests and demos."""

import numpy as np

from .flow_ingest import ExchangeMatrix, FlowMatrix


def _normalize(w, labels=None):
    w = np.asarray(w, dtype=float)
    w = (w + w.T) / 2
    return ExchangeMatrix(w / w.sum(), labels)


def two_vertex():
    return ExchangeMatrix(np.array([[0.3, 0.2], [0.2, 0.3]]))


def path_graph(n=3):
    w = np.zeros((n, n))
    i = np.arange(n - 1)
    w[i, i + 1] = w[i + 1, i] = 1.0
    return _normalize(w)


def cycle_graph(n=4):
    w = np.zeros((n, n))
    i = np.arange(n)
    w[i, (i + 1) % n] = w[(i + 1) % n, i] = 1.0
    return _normalize(w)


def complete_bipartite(a=2, b=3):
    n = a + b
    w = np.zeros((n, n))
    w[:a, a:] = 1.0
    w[a:, :a] = 1.0
    return _normalize(w)


def product_graph(f):
    """Complete weighted graph ``E = f fᵀ``: all vertices equivalent."""
    f = np.asarray(f, dtype=float)
    f = f / f.sum()
    return ExchangeMatrix(np.outer(f, f))


def random_connected(n, rng, density=0.5, loops=True, diag_dominant=False):
    """Random connected weighted graph: a random spanning tree plus extra edges.

    With ``diag_dominant`` each self-loop exceeds the vertex's off-diagonal
    mass, which makes the exchange matrix positive definite.
    """
    w = random_tree_weights(n, rng)
    extra = np.triu(rng.random((n, n)) < density, 1)
    vals = np.triu(rng.uniform(0.1, 1.0, (n, n)), 1)
    w = w + np.where(extra, vals, 0.0)
    w = w + w.T - np.diag(np.diag(w))
    if diag_dominant:
        off = w.sum(axis=1)
        w += np.diag(off * rng.uniform(1.1, 2.0, n))
    elif loops:
        w += np.diag(rng.uniform(0.0, 1.0, n) * (rng.random(n) < 0.5))
    return _normalize(w)


def random_tree_weights(n, rng):
    w = np.zeros((n, n))
    for k in range(1, n):
        parent = rng.integers(0, k)
        w[k, parent] = w[parent, k] = rng.uniform(0.1, 1.0)
    return w


def random_tree(n, rng, loops=False):
    w = random_tree_weights(n, rng)
    if loops:
        w += np.diag(rng.uniform(0.0, 1.0, n))
    return _normalize(w)


def random_non_tree(n, rng):
    """Connected graph with at least one cycle (more edges than a tree)."""
    while True:
        E = random_connected(n, rng, density=0.3, loops=False)
        off = np.triu(E.e, 1) > 0
        if off.sum() > n - 1:
            return E


def block_graph(sizes, rng, between=0.0, rank_one=False):
    """Planted-partition graph: dense random blocks joined with weight ``between``.

    With ``rank_one`` each block is a product graph so vertices within a block
    are equivalent.
    """
    n = sum(sizes)
    w = np.zeros((n, n))
    start = 0
    for s in sizes:
        sl = slice(start, start + s)
        if rank_one:
            a = rng.uniform(0.5, 1.5, s)
            w[sl, sl] = np.outer(a, a)
        else:
            b = rng.uniform(0.5, 1.5, (s, s))
            w[sl, sl] = b + b.T
        start += s
    mask = w == 0
    w[mask] = between * rng.uniform(0.5, 1.5, mask.sum())
    return _normalize(w)


def duplicate_vertex(E, v, share=0.5):
    """Split vertex ``v`` into two equivalent halves carrying ``share`` and ``1-share``.

    Returns the new exchange matrix; the copies sit at indices ``v`` and ``n``.
    """
    e = np.asarray(E.e)
    n = len(e)
    a = np.ones(n + 1)
    a[v], a[n] = share, 1.0 - share
    src = np.append(np.arange(n), v)
    big = e[np.ix_(src, src)] * np.outer(a, a)
    return ExchangeMatrix(big / big.sum())


def aggregate(E, J):
    """Merge the vertices in ``J`` into one, placed at the position of ``min(J)``."""
    J = sorted(J)
    n = E.n
    keep = [k for k in range(n) if k not in J[1:]]
    A = np.zeros((len(keep), n))
    for r, k in enumerate(keep):
        if k == J[0]:
            A[r, J] = 1.0
        else:
            A[r, k] = 1.0
    return ExchangeMatrix(A @ E.e @ A.T), keep


def migration_flows(sizes, rng, stay=0.9, between=0.05, labels=None):
    """Asymmetric flow counts with heavy diagonals and regional blocks.

    Mimics migration tables: most people stay, movers prefer their region,
    and flows are not symmetric.
    """
    n = sum(sizes)
    region = np.repeat(np.arange(len(sizes)), sizes)
    pop = rng.integers(2_000, 50_000, n).astype(float)
    affinity = np.where(region[:, None] == region[None, :], 1.0, between)
    affinity *= rng.uniform(0.5, 1.5, (n, n))
    np.fill_diagonal(affinity, 0.0)
    movers = affinity / affinity.sum(axis=1, keepdims=True) * ((1 - stay) * pop)[:, None]
    counts = np.round(movers * rng.uniform(0.8, 1.2, (n, n)))
    counts[np.diag_indices(n)] = np.round(stay * pop)
    if labels is None:
        labels = [f"R{region[i] + 1}v{i + 1}" for i in range(n)]
    return FlowMatrix(counts, labels), region

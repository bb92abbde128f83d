import numpy as np
import numpy.testing as npt
import pytest

from wgraph import synthetic as S
from wgraph.errors import InputError
from wgraph.flow_ingest import ExchangeMatrix, strip_diagonal
from wgraph.spectral import (
    decompose,
    equivalence_classes,
    find_equivalent_pairs,
    ncut_relaxation_bound,
    normalized_exchange,
    standardized,
    t_step,
    weakly_equivalent_pairs,
)


def check_basis(E, basis):
    n = E.n
    assert basis.lam[0] == pytest.approx(1.0, abs=1e-10)
    assert np.all(np.abs(basis.lam) <= 1 + 1e-10)
    assert np.all(np.diff(basis.lam) <= 1e-12)
    npt.assert_allclose(basis.U.T @ basis.U, np.eye(n), atol=1e-10)
    npt.assert_allclose(basis.X[:, 0], np.ones(n), atol=1e-10)
    npt.assert_allclose(basis.normalized_matrix(), normalized_exchange(E), atol=1e-10)
    npt.assert_allclose(basis.U[:, 0], np.sqrt(E.f), atol=1e-12)


def test_two_vertex(two):
    b = decompose(two)
    npt.assert_allclose(b.lam, [1.0, 0.2], atol=1e-14)
    npt.assert_allclose(b.U[:, 0], [np.sqrt(0.5)] * 2)
    npt.assert_allclose(b.X[:, 1], [1.0, -1.0], atol=1e-14)
    check_basis(two, b)


def test_product_graph_spectrum():
    E = S.product_graph([1, 2, 3, 4])
    b = decompose(E)
    npt.assert_allclose(b.lam, [1, 0, 0, 0], atol=1e-12)
    check_basis(E, b)


@pytest.mark.parametrize("seed", range(5))
def test_random_basis_invariants(seed):
    rng = np.random.default_rng(seed)
    E = S.random_connected(int(rng.integers(3, 15)), rng)
    check_basis(E, decompose(E))


def test_sign_convention_deterministic(rng):
    E = S.random_connected(8, rng)
    b1, b2 = decompose(E), decompose(ExchangeMatrix(np.array(E.e)))
    npt.assert_array_equal(b1.U, b2.U)
    cols = b1.U[:, 1:]
    idx = np.argmax(np.abs(cols), axis=0)
    assert np.all(cols[idx, np.arange(cols.shape[1])] > 0)


def test_disconnected_leading_vector(rng):
    E = S.block_graph([3, 4], rng, between=0.0)
    b = decompose(E)
    check_basis(E, b)
    assert b.lam[1] == pytest.approx(1.0, abs=1e-10)
    assert not b.is_connected


def test_bipartite_detection(rng):
    E = S.complete_bipartite(2, 3)
    b = decompose(E)
    assert b.lam[-1] == pytest.approx(-1.0, abs=1e-10)
    assert b.is_bipartite and not b.is_regular
    E2 = S.random_connected(6, rng, diag_dominant=True)
    assert decompose(E2).lam[-1] > -1 + 1e-6


def test_standardized_examples(two):
    Es = standardized(two)
    npt.assert_allclose(Es, [[0.1, -0.1], [-0.1, 0.1]], atol=1e-15)
    npt.assert_allclose(np.linalg.eigvalsh(Es), [0.0, 0.2], atol=1e-15)
    npt.assert_allclose(standardized(S.product_graph([1, 2, 3])), 0.0, atol=1e-15)


def test_standardized_spectrum(rng):
    E = S.random_connected(7, rng)
    b = decompose(E)
    Es = standardized(E)
    npt.assert_allclose(Es @ np.sqrt(E.f), 0.0, atol=1e-14)
    expected = np.sort(np.append(b.lam[1:], 0.0))
    npt.assert_allclose(np.sort(np.linalg.eigvalsh(Es)), expected, atol=1e-12)


def test_t_step_examples(two):
    npt.assert_allclose(t_step(two, 0), np.diag(two.f))
    npt.assert_array_equal(t_step(two, 1), two.e)
    npt.assert_allclose(t_step(two, 2), [[0.26, 0.24], [0.24, 0.26]], atol=1e-15)
    npt.assert_allclose(t_step(two, np.inf), [[0.25, 0.25], [0.25, 0.25]])


def test_t_step_inf_requires_regular():
    with pytest.raises(InputError):
        t_step(S.complete_bipartite(2, 3), np.inf)
    with pytest.raises(InputError):
        t_step(S.two_vertex(), -1)


def test_t_step_reconstruction(rng):
    E = S.random_connected(6, rng)
    b = decompose(E)
    s = 1 / np.sqrt(E.f)
    for t in range(4):
        Et = t_step(E, t)
        npt.assert_allclose(Et.sum(axis=1), E.f, atol=1e-14)
        npt.assert_allclose(b.normalized_matrix(t), Et * np.outer(s, s), atol=1e-9)


def test_connectivity_flag(rng):
    for _ in range(5):
        assert decompose(S.random_connected(6, rng)).lam[1] < 1 - 1e-10
        assert decompose(S.block_graph([2, 3], rng)).lam[1] >= 1 - 1e-10


def test_equivalent_pairs_product():
    assert find_equivalent_pairs(S.product_graph([1, 2, 3])) == [(0, 1), (0, 2), (1, 2)]


def test_equivalent_pairs_path(path3):
    # endpoints both move to the centre with probability one
    assert find_equivalent_pairs(path3) == [(0, 2)]


def test_equivalent_pairs_duplicate(rng):
    base = S.random_connected(5, rng)
    assert find_equivalent_pairs(base) == []
    E = S.duplicate_vertex(base, 2, share=0.3)
    assert find_equivalent_pairs(E) == [(2, 5)]


def test_equivalence_matches_raw_coordinates(rng):
    """Equivalent pairs coincide on every raw coordinate with nonzero eigenvalue."""
    for _ in range(5):
        base = S.random_connected(5, rng)
        E = S.duplicate_vertex(base, int(rng.integers(5)), share=rng.uniform(0.2, 0.8))
        b = decompose(E)
        nz = np.flatnonzero(np.abs(b.lam) > 1e-8)[1:]
        pairs = find_equivalent_pairs(E)
        for i in range(E.n):
            for j in range(i + 1, E.n):
                same = np.max(np.abs(b.X[i, nz] - b.X[j, nz])) <= 1e-6
                assert same == ((i, j) in pairs)


def test_equivalence_classes():
    assert equivalence_classes([(0, 1), (1, 3)], 5) == [[0, 1, 3]]


def test_weak_equivalence_examples(path3):
    assert weakly_equivalent_pairs(ExchangeMatrix([[0, 0.5], [0.5, 0]])) == [(0, 1)]
    assert weakly_equivalent_pairs(path3) == [(0, 2)]
    assert weakly_equivalent_pairs(S.cycle_graph(4)) == [(0, 2), (1, 3)]
    with pytest.raises(InputError):
        weakly_equivalent_pairs(S.two_vertex())
    with pytest.raises(InputError):
        find_equivalent_pairs(path3, tol=0)


def test_ncut_bound(two, rng):
    b = decompose(two)
    val, X0 = ncut_relaxation_bound(b, 1)
    assert val == 1.0
    npt.assert_allclose(X0, np.ones((2, 1)))
    assert ncut_relaxation_bound(b, 2)[0] == pytest.approx(1.2, abs=1e-15)
    E = S.block_graph([3, 3], rng)
    assert ncut_relaxation_bound(decompose(E), 2)[0] == pytest.approx(2.0, abs=1e-10)
    E = S.random_connected(7, rng)
    b = decompose(E)
    val, X0 = ncut_relaxation_bound(b, 4)
    npt.assert_allclose(X0.T @ np.diag(E.f) @ X0, np.eye(4), atol=1e-10)
    with pytest.raises(InputError):
        ncut_relaxation_bound(b, 0)
    with pytest.raises(InputError):
        ncut_relaxation_bound(b, 8)


def test_strip_then_decompose_has_zero_diagonal_spectrum(rng):
    E = strip_diagonal(S.random_connected(6, rng, loops=True))
    b = decompose(E)
    assert b.lam.sum() == pytest.approx(0.0, abs=1e-12)

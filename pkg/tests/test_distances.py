import io

import numpy as np
import numpy.testing as npt
import pytest

import oracles
from wgraph import synthetic as S
from wgraph.distances import (
    DistanceMatrix,
    GSpec,
    PhiSpec,
    absorption_visits,
    dirichlet_energy,
    distance_to_csv,
    electrical_commute,
    fundamental_matrix,
    jump_distance,
    jump_distance_closed_form,
    load_distance_csv,
    natural_distance,
    schoenberg_transform,
    shortest_path_distance,
)
from wgraph.errors import DisconnectedGraphError, InputError, NotDiffusiveError
from wgraph.euclid_mds import centroid_and_inertia, is_squared_euclidean
from wgraph.flow_ingest import ExchangeMatrix, strip_diagonal
from wgraph.spectral import decompose, find_equivalent_pairs

ABS5 = GSpec("absorption", rho=0.5)


# -- two-vertex closed forms ---------------------------------------------------


def test_two_vertex_families(two):
    e, f = two.e, two.f
    d = lambda spec: natural_distance(two, spec).D[0, 1]  # noqa: E731
    assert d("chi2") == pytest.approx(oracles.chi2_direct(e)[0, 1], abs=1e-12)
    assert d("chi2") == pytest.approx(0.16, abs=1e-12)
    assert d("frozen") == pytest.approx(1 / f[0] + 1 / f[1], abs=1e-12)
    assert d("commute") == pytest.approx(1 / e[0, 1], abs=1e-12)
    assert d("diffusive") == pytest.approx(oracles.diffusive_direct(e)[0, 1], abs=1e-12)
    assert d("sif") == pytest.approx(5 - 0.8 - 4, abs=1e-12)
    assert d(ABS5) == pytest.approx(4 * 0.5 / 0.9, abs=1e-12)


def test_flags():
    E = S.two_vertex()
    assert natural_distance(E, "chi2").focused
    assert natural_distance(E, "sif").focused and natural_distance(E, "sif").irreducible
    assert not natural_distance(E, "frozen").focused
    assert natural_distance(E, "commute").irreducible
    assert not natural_distance(E, ABS5).irreducible
    assert natural_distance(E, ABS5).family == "absorption(0.5)"


def test_gspec_validation():
    with pytest.raises(InputError):
        GSpec("absorption", rho=1.0)
    with pytest.raises(InputError):
        GSpec("absorption")
    with pytest.raises(InputError):
        GSpec("heat")
    with pytest.raises(InputError):
        GSpec("custom")


def test_custom_g(rng):
    E = S.random_connected(6, rng)
    cube = GSpec("custom", g=lambda lam: lam**4, name="lambda4")
    D = natural_distance(E, cube)
    b = decompose(E)
    expected = sum(
        b.lam[a] ** 4 * (b.X[:, a][:, None] - b.X[:, a][None, :]) ** 2 for a in range(1, E.n)
    )
    npt.assert_allclose(D.D, expected, atol=1e-12)
    assert D.focused and D.family == "lambda4"
    with pytest.raises(InputError, match="negative"):
        natural_distance(E, GSpec("custom", g=lambda lam: lam - 2))


def test_chi2_matches_direct_formula(rng):
    for _ in range(5):
        E = S.random_connected(int(rng.integers(3, 10)), rng)
        npt.assert_allclose(natural_distance(E, "chi2").D, oracles.chi2_direct(E.e), atol=1e-12)


def test_diffusive_and_frozen_direct(rng):
    E = S.random_connected(8, rng, diag_dominant=True)
    npt.assert_allclose(natural_distance(E, "diffusive").D, oracles.diffusive_direct(E.e),
                        atol=1e-10)
    npt.assert_allclose(natural_distance(E, "frozen").D, oracles.frozen_direct(E.f), atol=1e-10)


def test_irreducible_guard(rng):
    E = S.block_graph([3, 3], rng)
    for fam in ("commute", "sif"):
        with pytest.raises(DisconnectedGraphError, match="irreducible distance on disconnected"):
            natural_distance(E, fam)
    natural_distance(E, "chi2")
    natural_distance(E, ABS5)


def test_irreducible_guard_configurable(rng):
    E = S.block_graph([3, 3], rng, between=1e-7)
    lam1 = decompose(E).lam[1]
    assert 1 - 1e-5 < lam1 < 1 - 1e-12
    natural_distance(E, "commute")
    with pytest.raises(DisconnectedGraphError):
        natural_distance(E, "commute", disconnected_tol=1e-4)


def test_diffusive_guard(k23):
    with pytest.raises(NotDiffusiveError):
        natural_distance(k23, "diffusive")


# -- Markov and electrical oracles ------------------------------------------------


def test_fundamental_matrix_two_vertex(two):
    _, M = fundamental_matrix(two)
    npt.assert_allclose(M, [[0, 2.5], [2.5, 0]], atol=1e-12)


def test_fundamental_matrix_against_linear_solve(rng):
    E = S.random_connected(4, rng)
    Y, M = fundamental_matrix(E)
    M_ref = oracles.hitting_times(E.e)
    npt.assert_allclose(M, M_ref, rtol=1e-10)
    assert np.all(np.diag(M) == 0)
    f = E.f
    npt.assert_allclose(f @ M, np.diag(Y) / f - 1, atol=1e-10)
    npt.assert_allclose(natural_distance(E, "commute").D, M + M.T, atol=1e-9)


def test_fundamental_matrix_periodic_chain(k23):
    # bipartite chains are periodic but the fundamental matrix still exists
    _, M = fundamental_matrix(k23)
    npt.assert_allclose(M, oracles.hitting_times(k23.e), rtol=1e-10)


def test_fundamental_matrix_disconnected(rng):
    with pytest.raises(DisconnectedGraphError):
        fundamental_matrix(S.block_graph([2, 2], rng))


def test_absorption_visits_two_vertex(two):
    V = absorption_visits(two, 0.5)
    P = two.e / two.f[:, None]
    npt.assert_allclose(V, np.linalg.inv(np.eye(2) - 0.5 * P), atol=1e-14)
    npt.assert_allclose(V, [[14 / 9, 4 / 9], [4 / 9, 14 / 9]], atol=1e-14)
    npt.assert_allclose(two.f @ V, [1.0, 1.0], atol=1e-14)


def test_absorption_visits_identities(rng):
    E = S.random_connected(7, rng)
    f = E.f
    for rho in (1e-9, 0.3, 0.9):
        V = absorption_visits(E, rho)
        npt.assert_allclose(f[:, None] * V, (f[:, None] * V).T, atol=1e-10)
        npt.assert_allclose(f @ V, f / (1 - rho), atol=1e-10)
        # distance from expected visits, scaled by 1 - rho
        d = np.diag(V) / f
        Dv = (1 - rho) * (d[:, None] + d[None, :] - 2 * V / f[None, :])
        np.fill_diagonal(Dv, 0)
        npt.assert_allclose(natural_distance(E, GSpec("absorption", rho=rho)).D, Dv, atol=1e-9)
    npt.assert_allclose(absorption_visits(E, 1e-12), np.eye(7), atol=1e-11)
    with pytest.raises(InputError):
        absorption_visits(E, 1.0)


def test_shortest_path_examples(two, path3, k23):
    assert shortest_path_distance(two).D[0, 1] == pytest.approx(5.0)
    D = shortest_path_distance(path3).D
    assert D[0, 2] == pytest.approx(8.0) and D[0, 1] == pytest.approx(4.0)
    D = shortest_path_distance(k23).D
    npt.assert_allclose(D[:2, 2:], 12.0)
    assert D[0, 1] == pytest.approx(24.0) and D[2, 3] == pytest.approx(24.0)
    assert shortest_path_distance(k23).euclidean_verified is None


def test_shortest_path_matches_floyd_warshall(rng):
    for _ in range(5):
        E = S.random_connected(int(rng.integers(3, 12)), rng)
        npt.assert_allclose(shortest_path_distance(E).D, oracles.floyd_warshall(E.e), rtol=1e-12)


def test_shortest_path_ignores_loops_and_reports_inf(rng):
    E = S.block_graph([2, 3], rng)
    D = shortest_path_distance(E).D
    assert np.isinf(D[0, 3]) and np.isfinite(D[0, 1])


def test_commute_below_shortest_path(k23):
    com = natural_distance(k23, "commute").D
    sp = shortest_path_distance(k23).D
    assert com[0, 2] < sp[0, 2] - 1e-6
    assert electrical_commute(k23, 0, 2) < 12.0


def test_dirichlet_energy(two, path3):
    assert dirichlet_energy(two, [3.0, 3.0]) == 0.0
    assert dirichlet_energy(two, [1.0, 0.0]) == pytest.approx(0.2)
    assert dirichlet_energy(path3, [1.0, 0.0, 0.0]) == pytest.approx(0.25)


def test_dirichlet_zero_iff_componentwise_constant(rng):
    E = S.block_graph([3, 2], rng)
    assert dirichlet_energy(E, [1, 1, 1, -2, -2]) == pytest.approx(0.0, abs=1e-15)
    assert dirichlet_energy(E, [1, 1, 0, -2, -2]) > 0


def test_electrical_commute(two, path3, rng):
    assert electrical_commute(two, 0, 1) == pytest.approx(5.0)
    assert electrical_commute(path3, 0, 2) == pytest.approx(8.0)
    E = S.random_connected(9, rng)
    com = natural_distance(E, "commute").D
    ref = oracles.effective_resistance_pinv(E.e)
    for i in range(9):
        for j in range(i + 1, 9):
            assert electrical_commute(E, i, j) == pytest.approx(com[i, j], rel=1e-8)
            assert ref[i, j] == pytest.approx(com[i, j], rel=1e-8)
    assert electrical_commute(S.block_graph([2, 2], rng), 0, 3) == np.inf
    with pytest.raises(InputError):
        electrical_commute(two, 1, 1)


# -- jump distance ------------------------------------------------------------------


def test_jump_examples(path3):
    assert jump_distance(ExchangeMatrix([[0, 0.5], [0.5, 0]])).D[0, 1] == 0.0
    D = jump_distance(path3).D
    assert D[0, 2] == 0.0
    assert D[0, 1] == pytest.approx(1.0, abs=1e-14)
    assert jump_distance(S.cycle_graph(4)).D[0, 2] == 0.0


def test_jump_two_forms_and_direct(rng):
    for _ in range(10):
        E = strip_diagonal(S.random_connected(int(rng.integers(3, 12)), rng, loops=True))
        D = jump_distance(E).D
        npt.assert_allclose(jump_distance_closed_form(E), D, atol=1e-12)
        npt.assert_allclose(oracles.jump_direct(E.e), D, atol=1e-12)


def test_jump_needs_zero_diagonal(two):
    with pytest.raises(InputError):
        jump_distance(two)
    with pytest.raises(InputError):
        jump_distance_closed_form(two)


def test_jump_not_always_squared_euclidean(rng):
    # the excluded terms k = i, j change with the pair, so the kernel can go negative;
    # MDS still runs and reports the dropped mass
    from wgraph.euclid_mds import mds

    E = strip_diagonal(S.random_connected(8, rng, loops=True))
    D = jump_distance(E)
    ok, min_eig = is_squared_euclidean(D)
    assert not ok and min_eig < -1e-3
    emb = mds(D)
    assert emb.dropped_negative_mass > 0
    assert emb.total_inertia == pytest.approx(D.inertia, abs=1e-12)


# -- Schoenberg transforms ------------------------------------------------------------


def test_schoenberg_examples(two, rng):
    D = natural_distance(two, "frozen")
    assert schoenberg_transform(D, PhiSpec("power", 0.5)).D[0, 1] == pytest.approx(2.0)
    zero = DistanceMatrix(np.zeros((2, 2)), [0.5, 0.5], "zero")
    assert schoenberg_transform(zero, PhiSpec("saturating_exp", 3.0)).D[0, 1] == 0.0
    E = S.random_connected(10, rng)
    com = natural_distance(E, "commute")
    b = 1 / (4 * com.inertia)
    out = schoenberg_transform(com, PhiSpec("saturating_exp", b))
    assert np.all(out.D >= 0) and np.all(out.D < 1)
    assert out.family == f"commute|saturating_exp({b:g})"


@pytest.mark.parametrize("phi", [PhiSpec("power", 0.7), PhiSpec("power", 0.3),
                                 PhiSpec("saturating_exp", 0.05), PhiSpec("saturating_exp", 2.0)])
def test_schoenberg_preserves_euclidean(rng, phi):
    for fam in ("chi2", "commute", "frozen"):
        E = S.random_connected(9, rng)
        D = natural_distance(E, fam)
        assert is_squared_euclidean(D)[0]
        assert is_squared_euclidean(schoenberg_transform(D, phi))[0]


def test_phi_validation():
    for bad in (("power", 0.0), ("power", 1.5), ("saturating_exp", 0.0), ("log", 1.0)):
        with pytest.raises(InputError):
            PhiSpec(*bad)


# -- structural properties --------------------------------------------------------------


def test_focused_vanish_on_equivalent(rng):
    base = S.random_connected(5, rng)
    E = S.duplicate_vertex(base, 1, share=0.4)
    (i, j), = find_equivalent_pairs(E)
    for fam in ("chi2", "sif"):
        assert natural_distance(E, fam).D[i, j] <= 1e-8


@pytest.mark.parametrize("spec", ["frozen", "commute", GSpec("absorption", rho=0.3), "chi2"])
def test_universality_and_pythagoras(rng, spec):
    base = S.random_connected(5, rng)
    E = S.duplicate_vertex(base, 3, share=0.35)
    i, j = 3, 5
    g0 = float(GSpec(spec)(0.0)) if isinstance(spec, str) else float(spec(0.0))
    D = natural_distance(E, spec).D
    assert D[i, j] == pytest.approx(g0 * (1 / E.f[i] + 1 / E.f[j]), abs=1e-8)
    agg, keep = S.aggregate(E, [i, j])
    Dagg = natural_distance(agg, spec).D
    q = np.zeros(E.n)
    q[[i, j]] = E.f[[i, j]] / E.f[[i, j]].sum()
    DJ, delta_J = centroid_and_inertia(D, q)
    fJ = E.f[i] + E.f[j]
    assert DJ[j] == pytest.approx(g0 * (1 / E.f[j] - 1 / fJ), abs=1e-8)
    assert delta_J == pytest.approx(g0 / fJ, abs=1e-8)
    for r, k in enumerate(keep):
        if k in (i, j):
            continue
        # centroid of J sits where the aggregated vertex does
        assert DJ[k] == pytest.approx(Dagg[r, keep.index(i)], abs=1e-8)
        assert D[k, j] == pytest.approx(DJ[k] + DJ[j], abs=1e-8)


def test_chi2_inertia_is_chi2_statistic(rng):
    E = S.random_connected(7, rng)
    D = natural_distance(E, "chi2")
    f = E.f
    D0, delta = centroid_and_inertia(D, f)
    stat = np.sum((E.e - np.outer(f, f)) ** 2 / np.outer(f, f))
    assert f @ D0 == pytest.approx(stat, abs=1e-10)
    assert delta == pytest.approx(stat, abs=1e-10)


def test_distance_matrix_validation():
    with pytest.raises(InputError):
        DistanceMatrix([[0, 1], [2, 0]], [0.5, 0.5], "x")
    with pytest.raises(InputError):
        DistanceMatrix([[1, 1], [1, 0]], [0.5, 0.5], "x")
    with pytest.raises(InputError):
        DistanceMatrix([[0, -1], [-1, 0]], [0.5, 0.5], "x")


def test_distance_csv_round_trip(rng):
    E = S.block_graph([2, 3], rng, between=0.0)
    for D in (natural_distance(E, "chi2"), shortest_path_distance(E)):
        text = distance_to_csv(D)
        back = load_distance_csv(io.StringIO(text))
        assert back.family == D.family and back.labels == D.labels
        assert back.focused == D.focused and back.irreducible == D.irreducible
        fin = np.isfinite(D.D)
        npt.assert_array_equal(np.isfinite(back.D), fin)
        npt.assert_allclose(back.D[fin], D.D[fin], rtol=1e-11)
        npt.assert_allclose(back.p, D.p, rtol=1e-11)
    assert "inf" in distance_to_csv(shortest_path_distance(E))

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ecnplan import keynode
from ecnplan.community import Partition
from ecnplan.errors import DomainError

from oracles import betweenness_enumeration, floyd_warshall, shortest_path_counts, topsis_steps


def random_digraph(rng, n, p=0.4, dyadic=False):
    adj = rng.random((n, n)) < p
    np.fill_diagonal(adj, False)
    if dyadic:
        # multiples of 1/8 make equal-cost path sums exact in floating point
        w = rng.integers(1, 9, (n, n)) / 8.0
    else:
        w = rng.uniform(0.01, 1.0, (n, n))
    return adj, np.where(adj, w, 0.0)


def star_into_hub(n=5):
    adj = np.zeros((n, n), dtype=bool)
    adj[1:, 0] = True
    return adj, adj * 0.5


def test_degree_examples():
    ic, oc = keynode.in_out_degree(star_into_hub())
    assert ic[0] == 1.0 and np.all(ic[1:] == 0)
    assert oc[0] == 0.0 and np.all(oc[1:] == 0.25)
    ic, oc = keynode.in_out_degree((np.zeros((4, 4), dtype=bool), np.zeros((4, 4))))
    assert not ic.any() and not oc.any()
    with pytest.raises(DomainError):
        keynode.in_out_degree((np.zeros((1, 1), dtype=bool), np.zeros((1, 1))))


@given(st.integers(0, 2 ** 20), st.integers(2, 8))
def test_degree_counts(seed, n):
    adj, w = random_digraph(np.random.default_rng(seed), n)
    ic, oc = keynode.in_out_degree((adj, w))
    for i in range(n):
        assert ic[i] * (n - 1) == sum(1 for k in range(n) if adj[k][i])
        assert oc[i] * (n - 1) == sum(1 for k in range(n) if adj[i][k])


def test_clustering_examples():
    adj = np.zeros((4, 4), dtype=bool)
    adj[0, 1] = adj[1, 2] = True
    assert not keynode.clustering_coefficient((adj, adj * 1.0)).any()
    cyc = np.zeros((3, 3), dtype=bool)
    cyc[0, 1] = cyc[1, 2] = cyc[2, 0] = True
    w = cyc * 0.3
    cc = keynode.clustering_coefficient((cyc, w))
    # each node: one closed walk i->k->l->i with weight (0.3^(1/3))^3, total degree 2
    np.testing.assert_allclose(cc, 0.3 / (2 * 1), rtol=1e-12)


@given(st.integers(0, 2 ** 20), st.integers(3, 7), st.floats(0.1, 10))
def test_clustering_scales_linearly(seed, n, c):
    adj, w = random_digraph(np.random.default_rng(seed), n, 0.6)
    a = keynode.clustering_coefficient((adj, w))
    b = keynode.clustering_coefficient((adj, w * c))
    np.testing.assert_allclose(b, c * a, rtol=1e-10, atol=1e-14)


@given(st.integers(0, 2 ** 20), st.integers(3, 7))
def test_clustering_matches_term_sum(seed, n):
    adj, w = random_digraph(np.random.default_rng(seed), n, 0.6)
    got = keynode.clustering_coefficient((adj, w))
    for i in range(n):
        deg = adj[:, i].sum() + adj[i, :].sum()
        if deg < 2:
            assert got[i] == 0
            continue
        tri = sum((w[i, k] * w[k, l] * w[l, i]) ** (1 / 3) for k in range(n) for l in range(n))
        assert got[i] == pytest.approx(tri / (deg * (deg - 1)), rel=1e-10, abs=1e-14)


def test_shortest_path_examples():
    adj, w = random_digraph(np.random.default_rng(1), 5)
    cost, count, _, _ = keynode.shortest_paths((adj, w), 2)
    assert cost[2] == 0 and count[2] == 1
    diamond = np.zeros((4, 4), dtype=bool)
    diamond[0, 1] = diamond[0, 2] = diamond[1, 3] = diamond[2, 3] = True
    cost, count, _, _ = keynode.shortest_paths((diamond, diamond * 0.5), 0)
    assert cost[3] == 1.0 and count[3] == 2
    _, bc = keynode.closeness_betweenness((diamond, diamond * 0.5))
    np.testing.assert_allclose(bc, [0, 0.5, 0.5, 0])


@given(st.integers(0, 2 ** 20), st.integers(2, 10))
def test_dijkstra_equals_floyd_warshall(seed, n):
    adj, w = random_digraph(np.random.default_rng(seed), n)
    fw = floyd_warshall(adj, w)
    for s in range(n):
        cost, _, _, _ = keynode.shortest_paths((adj, w), s)
        np.testing.assert_allclose(cost, fw[s], rtol=1e-12, atol=0)


@given(st.integers(0, 2 ** 20), st.integers(2, 7))
def test_path_counts_and_betweenness_match_enumeration(seed, n):
    adj, w = random_digraph(np.random.default_rng(seed), n, 0.5, dyadic=True)
    for s in range(n):
        _, count, _, _ = keynode.shortest_paths((adj, w), s)
        np.testing.assert_array_equal(count, shortest_path_counts(adj, w, s))
    _, bc = keynode.closeness_betweenness((adj, w))
    np.testing.assert_allclose(bc, betweenness_enumeration(adj, w), atol=1e-12)


def test_path_graph_and_isolated_device():
    adj = np.zeros((4, 4), dtype=bool)
    adj[0, 1] = adj[1, 2] = True
    cc, bc = keynode.closeness_betweenness((adj, adj * 0.5))
    assert bc[1] == 1.0 and bc[0] == bc[2] == 0
    assert cc[3] == 0 and bc[3] == 0
    assert cc[0] == pytest.approx(3 / (0.5 + 1.0))


def test_eigenvector_examples():
    n = 5
    adj = ~np.eye(n, dtype=bool)
    ec = keynode.eigenvector_centrality((adj, adj * 0.7))
    np.testing.assert_allclose(ec, ec[0], rtol=1e-9)
    chain = np.zeros((3, 3), dtype=bool)
    chain[0, 1] = chain[1, 2] = True
    assert not keynode.eigenvector_centrality((chain, chain * 1.0)).any()
    cycle = chain.copy()
    cycle[2, 0] = True
    np.testing.assert_allclose(keynode.eigenvector_centrality((cycle, cycle * 1.0)), 1.0, rtol=1e-9)


def _simple_dominant(vals, lam):
    """True when the Perron root is positive, simple and strictly dominant in modulus."""
    if lam <= 1e-8:
        return False
    others = np.abs(vals - lam) > 1e-9
    return others.sum() == len(vals) - 1 and np.all(np.abs(vals[others]) < lam - 1e-9)


@given(st.integers(0, 2 ** 20), st.integers(3, 6), st.floats(0.1, 10))
def test_eigenvector_matches_dense_solver_and_scaling(seed, n, c):
    rng = np.random.default_rng(seed)
    adj, w = random_digraph(rng, n, 0.7)
    vals, vecs = np.linalg.eig(w)
    k = int(np.argmax(vals.real))
    lam = vals[k].real
    if not _simple_dominant(vals, lam):
        return
    ec = keynode.eigenvector_centrality((adj, w))
    e = np.abs(vecs[:, k].real)
    e = e / e.max()
    np.testing.assert_allclose(ec, adj.astype(float) @ e / lam, rtol=1e-6, atol=1e-8)
    # scaling W by c scales the eigenvalue by c and leaves the vector alone
    scaled = keynode.eigenvector_centrality((adj, w * c))
    np.testing.assert_allclose(scaled, ec / c, rtol=1e-6, atol=1e-8)


def test_eigenvector_defective_cycle_pair_converges():
    # two equal 2-cycles joined by one edge: the dominant eigenvalue is defective
    adj = np.zeros((4, 4), dtype=bool)
    adj[0, 1] = adj[1, 0] = adj[2, 3] = adj[3, 2] = adj[1, 2] = True
    ec = keynode.eigenvector_centrality((adj, adj * 0.5))
    assert np.all(np.isfinite(ec)) and ec.max() > 0


FIXED = np.array([
    [0.50, 0.25, 0.10, 0.80, 2.0, 0.30],
    [0.25, 0.75, 0.40, 0.60, 0.0, 0.90],
    [0.75, 0.50, 0.00, 0.20, 1.0, 0.45],
])


def test_topsis_fixed_matrix_step_by_step():
    res = keynode.topsis_elect(FIXED)
    ref = topsis_steps(FIXED)
    np.testing.assert_allclose(res.normalized, ref["normalized"], atol=1e-12, rtol=0)
    np.testing.assert_allclose(res.weights, ref["weights"], atol=1e-12, rtol=0)
    np.testing.assert_allclose(res.weighted, ref["weighted"], atol=1e-12, rtol=0)
    np.testing.assert_allclose(res.scores, ref["scores"], atol=1e-12, rtol=0)
    assert res.elected == int(np.argmax(ref["scores"]))


def test_topsis_special_cases():
    dominant = np.array([[1.0] * 6, [0.5] * 6, [0.2] * 6])
    res = keynode.topsis_elect(dominant)
    assert res.scores[0] == pytest.approx(1.0) and np.all(res.scores[1:] < 1)
    same = np.ones((4, 6))
    res = keynode.topsis_elect(same)
    np.testing.assert_array_equal(res.scores, 0.5)
    assert res.elected == 0
    single = keynode.topsis_elect(np.array([[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]]))
    assert single.scores[0] == 1.0 and single.elected == 0
    with pytest.raises(DomainError):
        keynode.topsis_elect(np.zeros((0, 6)))


@given(st.integers(0, 2 ** 20), st.integers(2, 9))
def test_topsis_scores_bounded_and_elected_max(seed, m):
    x = np.random.default_rng(seed).uniform(0, 3, (m, 6))
    res = keynode.topsis_elect(x)
    assert np.all((res.scores >= 0) & (res.scores <= 1))
    assert res.scores[res.elected] == res.scores.max()
    np.testing.assert_allclose(res.scores, topsis_steps(x)["scores"], atol=1e-12)


@given(st.integers(0, 2 ** 20), st.integers(3, 7))
def test_measures_invariant_under_reindexing(seed, n):
    rng = np.random.default_rng(seed)
    adj, w = random_digraph(rng, n, 0.5)
    perm = rng.permutation(n)
    a = keynode.centrality_table((adj, w))
    b = keynode.centrality_table((adj[np.ix_(perm, perm)], w[np.ix_(perm, perm)]))
    np.testing.assert_allclose(b, a[perm], rtol=1e-7, atol=1e-9)


def test_election_examples():
    n = 6
    adj = np.zeros((n, n), dtype=bool)
    adj[0, 1:4] = adj[1:4, 0] = True
    adj[4, 5] = adj[5, 4] = True
    w = adj * 0.5
    w[4, 5] = 0.2
    labels = np.array([0, 0, 0, 0, 1, 1])
    part = Partition(labels, 0.0)
    el = keynode.elect_tdccs((adj, w), part)
    assert len(el.tdccs) == part.count
    assert el.tdccs[0] == 0
    assert el.routes[2] == [2, 0]
    single = keynode.elect_tdccs((np.zeros((3, 3), dtype=bool), np.zeros((3, 3))), Partition(np.arange(3), 0.0))
    assert single.tdccs == (0, 1, 2)


def test_centrality_csv(tmp_path):
    from ecnplan import d2dnet, terrain
    from ecnplan.community import divide
    from ecnplan.radio import RadioParams
    g = d2dnet.build_graph(d2dnet.generate_devices(12, 400.0, terrain.synthetic_dem(1), 1), RadioParams())
    el = keynode.elect_tdccs(g, divide(g))
    keynode.write_centrality_csv(tmp_path / "c.csv", g, el)
    rows = (tmp_path / "c.csv").read_text().strip().splitlines()
    assert rows[0] == "device,IC,OC,CC,cc,BC,EC,score,is_tdcc"
    assert sum(int(r.split(",")[-1]) for r in rows[1:]) == len(el.tdccs)

import numpy as np
import pytest

from graphspectra import ValidationError, build_graph, graph_operators, subspace_distance


def test_single_edge():
    g = build_graph({"vertices": ["v1", "v2"],
                     "edges": [{"id": "e", "ends": ["v1", "v2"], "half_length": 1.0}]})
    assert len(g.half_edges.entries) == 2
    assert g.dim == 2
    assert g.l_min == 1.0


def test_loop_pairs_both_slots_at_same_vertex():
    g = build_graph({"vertices": ["v"],
                     "edges": [{"id": "e", "ends": ["v", "v"], "half_length": 0.5}]})
    assert len(g.half_edges.entries) == 2
    assert all(he.vertex == "v" for he in g.half_edges.entries)
    assert g.half_edges.partner == (1, 0)


def test_three_star():
    g = build_graph({"vertices": ["c", "a", "b", "d"],
                     "edges": [{"id": "1", "ends": ["c", "a"], "half_length": 1.0},
                               {"id": "2", "ends": ["c", "b"], "half_length": 1.5},
                               {"id": "3", "ends": ["c", "d"], "half_length": 2.0}]})
    assert len(g.half_edges.entries) == 6
    assert g.l_min == 1.0
    assert g.degree("c") == 3


def test_full_length_convention():
    g = build_graph({"vertices": ["a", "b"],
                     "edges": [{"id": "e", "ends": ["a", "b"], "full_length": 3.0}]})
    assert g.edges[0].half_length == 1.5


@pytest.mark.parametrize("bad, message", [
    ({"vertices": ["a", "b"],
      "edges": [{"id": "e", "ends": ["a", "b"], "half_length": 1.0},
                {"id": "e", "ends": ["a", "b"], "half_length": 1.0}]}, "duplicate edge"),
    ({"vertices": ["a", "b"],
      "edges": [{"id": "e", "ends": ["a", "b"], "half_length": -1.0}]}, "nonpositive"),
    ({"vertices": ["a"],
      "edges": [{"id": "e", "ends": ["a", "zz"], "half_length": 1.0}]}, "dangling"),
    ({"vertices": [], "edges": []}, "no vertices"),
])
def test_build_graph_errors(bad, message):
    with pytest.raises(ValidationError, match=message):
        build_graph(bad)


def test_operators_single_edge():
    g = build_graph({"vertices": ["a", "b"],
                     "edges": [{"id": "e", "ends": ["a", "b"], "half_length": 1.0}]})
    ops = graph_operators(g)
    assert np.array_equal(ops.sigma, [[0.0, 1.0], [1.0, 0.0]])
    assert np.array_equal(ops.lengths, [1.0, 1.0])


def test_operators_multiplicity_two():
    g = build_graph({"vertices": ["a", "b"],
                     "edges": [{"id": "e", "ends": ["a", "b"], "half_length": 2.0,
                                "multiplicity": 2}]})
    ops = graph_operators(g)
    expected = np.zeros((4, 4))
    expected[2, 0] = expected[3, 1] = expected[0, 2] = expected[1, 3] = 1.0
    assert np.array_equal(ops.sigma, expected)
    assert np.array_equal(ops.lengths, 2.0 * np.ones(4))


def test_operators_three_star_lengths():
    g = build_graph({"vertices": ["c", "a", "b", "d"],
                     "edges": [{"id": "1", "ends": ["c", "a"], "half_length": 1.0},
                               {"id": "2", "ends": ["c", "b"], "half_length": 1.5},
                               {"id": "3", "ends": ["c", "d"], "half_length": 2.0}]})
    ops = graph_operators(g)
    assert np.array_equal(ops.lengths, [1.0, 1.0, 1.5, 1.5, 2.0, 2.0])


@pytest.mark.parametrize("trial", range(8))
def test_operator_invariants_random(trial):
    rng = np.random.default_rng(100 + trial)
    n_v = int(rng.integers(2, 5))
    vertices = [f"v{i}" for i in range(n_v)]
    edges = []
    for j in range(int(rng.integers(1, 6))):
        u, w = rng.integers(0, n_v, 2)
        edges.append({"id": f"e{j}", "ends": [vertices[u], vertices[w]],
                      "half_length": float(rng.uniform(0.5, 2.0)),
                      "multiplicity": int(rng.integers(1, 3))})
    used = {v for e in edges for v in e["ends"]}
    g = build_graph({"vertices": [v for v in vertices if v in used], "edges": edges})
    ops = graph_operators(g)
    m = ops.dim
    assert m == 2 * sum(e.multiplicity for e in g.edges)
    assert np.linalg.norm(ops.sigma @ ops.sigma - np.eye(m)) == 0.0
    assert np.linalg.norm(ops.sigma.T @ ops.sigma - np.eye(m)) == 0.0
    l_mat = np.diag(ops.lengths)
    assert np.linalg.norm(ops.sigma @ l_mat - l_mat @ ops.sigma) == 0.0
    assert set(np.round(ops.lengths, 12)) <= {round(e.half_length, 12) for e in g.edges}


def test_subspace_distance_trivials():
    e1 = np.array([[1.0], [0.0]])
    e2 = np.array([[0.0], [1.0]])
    assert subspace_distance(e1, e1) == pytest.approx(0.0, abs=1e-14)
    assert subspace_distance(e1, e2) == pytest.approx(1.0, abs=1e-14)


def test_subspace_distance_diagonal_line():
    diag = np.array([[1.0], [1.0]]) / np.sqrt(2.0)
    e1 = np.array([[1.0], [0.0]])
    # direct evaluation of ||P_W P_V - P_V|| for these two lines
    assert subspace_distance(diag, e1) == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-13)


def test_subspace_distance_rejects_non_orthonormal():
    with pytest.raises(ValidationError, match="orthonormal"):
        subspace_distance(np.array([[1.0], [1.0]]), np.array([[1.0], [0.0]]))


def test_subspace_distance_properties_random():
    rng = np.random.default_rng(5)
    for _ in range(20):
        n = int(rng.integers(2, 6))
        def basis(k):
            q, _ = np.linalg.qr(rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k)))
            return q[:, :k]
        u = basis(int(rng.integers(1, n)))
        v = basis(int(rng.integers(1, n)))
        w = basis(int(rng.integers(1, n)))
        duv = subspace_distance(u, v)
        dvw = subspace_distance(v, w)
        duw = subspace_distance(u, w)
        assert -1e-12 <= duv <= 1.0 + 1e-12
        assert duw <= duv + dvw + 1e-10

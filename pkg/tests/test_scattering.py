import numpy as np
import pytest

from graphspectra import (ScatteringFamily, ValidationError, VertexScattering,
                          assemble_global, build_graph, commuting_generator,
                          dirichlet_matrix, kirchhoff_matrix, pm_eigenspaces,
                          random_involution, subspace_distance, synthetic_family,
                          vertex_blocks)


def plain_graph(n_star=0):
    if n_star:
        edges = [{"id": str(i), "ends": ["c", f"l{i}"], "half_length": 1.0 + 0.5 * i}
                 for i in range(n_star)]
        return build_graph({"vertices": ["c"] + [f"l{i}" for i in range(n_star)],
                            "edges": edges})
    return build_graph({"vertices": ["a", "b"],
                        "edges": [{"id": "e", "ends": ["a", "b"], "half_length": 1.0}]})


def test_kirchhoff_degree_one_is_neumann_end():
    assert np.array_equal(kirchhoff_matrix(1).matrix, [[1.0]])


def test_kirchhoff_degree_two_and_three():
    # (2/d) J - I is the unique involution with +1 space spanned by the
    # all-ones vector and -1 on its complement; check both characterizations
    for d in (2, 3):
        s = kirchhoff_matrix(d).matrix
        ones = np.ones(d) / np.sqrt(d)
        assert np.linalg.norm(s @ s - np.eye(d)) < 1e-12
        assert np.allclose(s @ ones, ones)
        comp = np.eye(d) - np.outer(ones, ones)
        assert np.allclose(s @ comp, -comp)
    assert np.allclose(kirchhoff_matrix(2).matrix, [[0, 1], [1, 0]])
    assert np.allclose(kirchhoff_matrix(3).matrix,
                       np.array([[-1, 2, 2], [2, -1, 2], [2, 2, -1]]) / 3.0)


def test_dirichlet_matrices():
    assert np.array_equal(dirichlet_matrix(1).matrix, [[-1.0]])
    assert np.array_equal(dirichlet_matrix(3, 1).matrix, -np.eye(3))
    assert np.array_equal(dirichlet_matrix(2, 2).matrix, -np.eye(4))


def test_kirchhoff_involution_exact():
    for d in range(1, 7):
        s = kirchhoff_matrix(d).matrix
        assert np.abs(s @ s - np.eye(d)).max() <= 1e-12


def test_assemble_single_edge():
    g = plain_graph()
    fam_d = assemble_global(g, {"a": dirichlet_matrix(1, vertex="a"),
                                "b": dirichlet_matrix(1, vertex="b")})
    assert np.array_equal(fam_d.base, -np.eye(2))
    fam_k = assemble_global(g, {"a": kirchhoff_matrix(1, vertex="a"),
                                "b": kirchhoff_matrix(1, vertex="b")})
    assert np.array_equal(fam_k.base, np.eye(2))


def test_assemble_three_star_matches_hand_layout():
    g = plain_graph(n_star=3)
    per_v = {"c": kirchhoff_matrix(3, vertex="c")}
    for i in range(3):
        per_v[f"l{i}"] = dirichlet_matrix(1, vertex=f"l{i}")
    fam = assemble_global(g, per_v)
    # canonical half-edge order: (c,0),(l0,0),(c,1),(l1,1),(c,2),(l2,2)
    c_rows = g.half_edges.vertex_rows("c")
    assert list(c_rows) == [0, 2, 4]
    hand = np.zeros((6, 6), dtype=complex)
    hand[np.ix_(c_rows, c_rows)] = kirchhoff_matrix(3).matrix
    for r in (1, 3, 5):
        hand[r, r] = -1.0
    assert np.allclose(fam.base, hand)
    blocks = vertex_blocks(g, fam.base)
    assert np.allclose(blocks["c"], kirchhoff_matrix(3).matrix)


def test_assemble_errors():
    g = plain_graph()
    with pytest.raises(ValidationError, match="missing"):
        assemble_global(g, {"a": dirichlet_matrix(1, vertex="a")})
    with pytest.raises(ValidationError, match="block size"):
        assemble_global(g, {"a": dirichlet_matrix(2, vertex="a"),
                            "b": dirichlet_matrix(1, vertex="b")})


def test_vertex_scattering_rejects_non_involution():
    with pytest.raises(ValidationError, match="involution"):
        VertexScattering("v", np.array([[0, 1j], [1j, 0]]))


def test_synthetic_family_trivials():
    s0 = -np.eye(2, dtype=complex)
    fam0 = synthetic_family(s0, np.zeros((2, 2)))
    assert np.allclose(fam0(0.7), s0)
    fam = synthetic_family(s0, np.diag([1.0, 2.0]))
    got = fam(0.3)
    assert np.allclose(got, -np.diag([np.exp(0.3j), np.exp(0.6j)]))


def test_synthetic_family_rejects_noncommuting():
    s0 = np.diag([1.0, -1.0]).astype(complex)
    b = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(ValidationError, match="commutator"):
        synthetic_family(s0, b)


@pytest.mark.parametrize("trial", range(4))
def test_family_unitarity_and_inverse_properties(trial):
    rng = np.random.default_rng(31 + trial)
    s0 = random_involution(4, rng)
    b = commuting_generator(s0, rng)
    fam = synthetic_family(s0, b)
    eye = np.eye(4)
    for alpha in rng.uniform(-1.0, 1.0, 100):
        s = fam(alpha)
        assert np.linalg.norm(s @ s.conj().T - eye) <= 1e-8
        assert np.linalg.norm(s @ fam(-alpha) - eye) <= 1e-8
    # derivative consistency with the generator form
    d = fam.derivative(0.2)
    assert np.allclose(d, 1j * b @ fam(0.2), atol=1e-10)
    assert np.allclose(fam.prime_at_zero(), 1j * b @ s0, atol=1e-10)


def test_sampled_family_roundtrip_and_derivative():
    rng = np.random.default_rng(2)
    s0 = random_involution(3, rng)
    b = commuting_generator(s0, rng)
    gen = synthetic_family(s0, b)
    alphas = np.linspace(0.02, 0.6, 24)
    fam = ScatteringFamily.from_samples(alphas, [gen(a) for a in alphas])
    for a in (0.1, 0.33, 0.5):
        assert np.linalg.norm(fam(a) - gen(a)) < 1e-6
        assert np.linalg.norm(fam.derivative(a) - gen.derivative(a)) < 1e-4
    # S'(0) via the inverse-property central stencil, Richardson extrapolated
    assert np.linalg.norm(fam.prime_at_zero() - gen.prime_at_zero()) < 1e-3
    assert np.linalg.norm(fam.base - s0) < 1e-4


def test_sampled_family_domain():
    rng = np.random.default_rng(3)
    s0 = random_involution(2, rng)
    fam = ScatteringFamily.from_samples(np.linspace(0.1, 0.4, 6), [s0] * 6)
    with pytest.raises(ValidationError, match="domain"):
        fam(0.7)


def test_pm_eigenspaces():
    plus, minus = pm_eigenspaces(np.eye(3))
    assert plus.shape[1] == 3 and minus.shape[1] == 0
    plus, minus = pm_eigenspaces(-np.eye(3))
    assert plus.shape[1] == 0
    plus, minus = pm_eigenspaces(kirchhoff_matrix(3).matrix)
    assert plus.shape[1] == 1 and minus.shape[1] == 2
    ones = np.ones((3, 1)) / np.sqrt(3.0)
    assert subspace_distance(plus, ones) < 1e-12
    # orthogonal complementarity
    assert np.linalg.norm(plus.conj().T @ minus) < 1e-12


def test_pm_eigenspaces_rejects_far_from_involution():
    with pytest.raises(ValidationError):
        pm_eigenspaces(np.diag([1.0, 0.5]))


def test_pm_eigenspaces_complement_pattern():
    s = kirchhoff_matrix(4).matrix
    plus, minus = pm_eigenspaces(s)
    # complementary orthogonal spans: distance 1 between them, 0 to the
    # orthogonal complement of the other
    assert subspace_distance(plus, minus) == pytest.approx(1.0, abs=1e-12)
    comp_minus = np.linalg.svd(np.eye(4) - minus @ minus.conj().T)[0][:, :1]
    assert subspace_distance(plus, comp_minus) < 1e-12

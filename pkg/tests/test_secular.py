import numpy as np
import pytest

from graphspectra import (NumericalError, ScatteringFamily, UnitaryFamily,
                          assemble_global, build_graph, commuting_generator,
                          count_roots, dirichlet_matrix, graph_operators,
                          intersect_with_line, kirchhoff_matrix, leading_term_check,
                          locate_roots, monotonicity_certificate, random_involution,
                          stability_residual, subspace_distance, synthetic_family,
                          track_branch)
from graphspectra.secular import independence_interval


def interval_family(kind="dirichlet", half_length=1.0):
    g = build_graph({"vertices": ["a", "b"],
                     "edges": [{"id": "e", "ends": ["a", "b"], "half_length": half_length}]})
    ops = graph_operators(g)
    mk = dirichlet_matrix if kind == "dirichlet" else kirchhoff_matrix
    fam = assemble_global(g, {"a": mk(1, vertex="a"), "b": mk(1, vertex="b")})
    return ops, fam


def random_family(rng, n_edges=3):
    vertices = [f"v{i}" for i in range(n_edges + 1)]
    edges = [{"id": f"e{j}", "ends": [vertices[j], vertices[j + 1]],
              "half_length": float(rng.uniform(0.5, 2.0))} for j in range(n_edges)]
    g = build_graph({"vertices": vertices, "edges": edges})
    per_v = {v: None for v in vertices}
    from graphspectra import VertexScattering
    for v in vertices:
        rows = g.half_edges.vertex_rows(v)
        per_v[v] = VertexScattering(v, random_involution(len(rows), rng))
    return graph_operators(g), assemble_global(g, per_v)


def test_evaluate_hand_cases():
    ops, fam_d = interval_family("dirichlet")
    u = UnitaryFamily(ops, fam_d)
    # l=1, z=pi/2: e^{i pi} sigma (-I) = sigma, which has eigenvalue 1
    got = u.evaluate(np.pi / 2)
    assert np.allclose(got, ops.sigma, atol=1e-14)
    assert np.allclose(u.evaluate(0.0), ops.sigma @ fam_d.base)
    ops, fam_k = interval_family("kirchhoff")
    uk = UnitaryFamily(ops, fam_k)
    assert np.allclose(uk.evaluate(np.pi), ops.sigma, atol=1e-12)


def test_monotonicity_certificate_exact_frozen():
    g = build_graph({"vertices": ["a", "b"],
                     "edges": [{"id": "e1", "ends": ["a", "b"], "half_length": 1.0},
                               {"id": "e2", "ends": ["a", "b"], "half_length": 1.5}]})
    ops = graph_operators(g)
    fam = assemble_global(g, {"a": dirichlet_matrix(2, vertex="a"),
                              "b": dirichlet_matrix(2, vertex="b")})
    u = UnitaryFamily(ops, fam)
    assert monotonicity_certificate(u, 1.3) == (2.0, 3.0)
    ops1, fam1 = interval_family()
    assert monotonicity_certificate(UnitaryFamily(ops1, fam1), 0.5) == (2.0, 2.0)


def test_certificate_scaled_mode_bound():
    rng = np.random.default_rng(0)
    ops, _ = interval_family()
    s0 = random_involution(2, rng)
    b = commuting_generator(s0, rng, scale=1.0)
    fam = synthetic_family(s0, b)
    n = 100.0
    u = UnitaryFamily(ops, fam, mode="scaled", scale_n=n)
    d_min, d_max = monotonicity_certificate(u, np.linspace(0.1, 5.0, 11))
    assert d_min >= 2.0 * 1.0 - 1.0 / n - 1e-9
    assert d_max <= 2.0 * 1.0 + 1.0 / n + 1e-9


def test_count_roots_interval_cases():
    ops, fam = interval_family("dirichlet")
    u = UnitaryFamily(ops, fam)
    assert count_roots(u, 0.0, 3.2) == 2          # pi/2 and pi
    assert count_roots(u, 1.0, 1.0) == 0


def test_locate_roots_interval_dirichlet():
    ops, fam = interval_family("dirichlet")
    u = UnitaryFamily(ops, fam)
    roots = locate_roots(u, 0.0, 7.0)
    expect = [np.pi / 2, np.pi, 3 * np.pi / 2, 2 * np.pi]
    assert [r.multiplicity for r in roots] == [1, 1, 1, 1]
    assert np.allclose([r.z for r in roots], expect, atol=1e-11)


def test_locate_roots_interval_kirchhoff_brute_force_checked():
    ops, fam = interval_family("kirchhoff")
    u = UnitaryFamily(ops, fam)
    roots = locate_roots(u, 0.0, 4.0)
    # brute force: scan |det(I - U)| on a fine grid for candidate zeros
    # (start past the z = 0 kernel of sigma S, which is not a positive root)
    grid = np.linspace(0.3, 4.0, 8000)
    dets = np.array([abs(np.linalg.det(np.eye(2) - u.evaluate(z))) for z in grid])
    interior = np.zeros_like(dets, dtype=bool)
    interior[1:-1] = (dets[1:-1] < dets[:-2]) & (dets[1:-1] < dets[2:]) & (dets[1:-1] < 1e-2)
    brute = grid[interior]
    assert len(roots) == len(brute) == 2
    assert np.allclose([r.z for r in roots], [np.pi / 2, np.pi], atol=1e-11)
    assert np.allclose(brute, [np.pi / 2, np.pi], atol=2e-3)


def test_equal_star_degenerate_root():
    g = build_graph({"vertices": ["c", "a", "b", "d"],
                     "edges": [{"id": str(i), "ends": ["c", x], "half_length": 1.0}
                               for i, x in enumerate("abd")]})
    ops = graph_operators(g)
    per_v = {"c": kirchhoff_matrix(3, vertex="c")}
    for x in "abd":
        per_v[x] = dirichlet_matrix(1, vertex=x)
    fam = assemble_global(g, per_v)
    roots = locate_roots(UnitaryFamily(ops, fam), 0.1, 2.0)
    # equal arms, Dirichlet tips: simple root at pi/4, double root at pi/2
    # (hand solution: values a_e sin 2z continuous, derivative sum cos 2z sum a_e)
    assert [(round(r.z, 10), r.multiplicity) for r in roots] == [
        (round(np.pi / 4, 10), 1), (round(np.pi / 2, 10), 2)]


def test_root_residuals_and_kernel():
    rng = np.random.default_rng(7)
    ops, fam = random_family(rng)
    u = UnitaryFamily(ops, fam)
    tol = 1e-11
    for c in locate_roots(u, 0.2, 8.0, tol=tol):
        uz = u.evaluate(c.z)
        for k in range(c.multiplicity):
            phi = c.kernel_basis[:, k]
            assert np.linalg.norm(phi - uz @ phi) <= 10 * tol * 4.0


def test_flow_additivity():
    rng = np.random.default_rng(11)
    for _ in range(5):
        ops, fam = random_family(rng)
        u = UnitaryFamily(ops, fam)
        a, b = 0.1, 20.0
        c = float(rng.uniform(5.0, 15.0))
        assert count_roots(u, a, b) == count_roots(u, a, c) + count_roots(u, c, b)


def test_weyl_defect_random_instances():
    rng = np.random.default_rng(13)
    for _ in range(20):
        ops, fam = random_family(rng, n_edges=int(rng.integers(1, 4)))
        u = UnitaryFamily(ops, fam)
        n = count_roots(u, 0.0, 200.0)
        weyl = np.sum(ops.lengths) / np.pi * 200.0
        assert abs(n - weyl) < ops.dim


def test_multiplicity_independence_window():
    rng = np.random.default_rng(17)
    ops, fam = random_family(rng)
    u = UnitaryFamily(ops, fam)
    window = independence_interval(u, 0.0, 12.0)
    clusters = locate_roots(u, 0.2, 12.0)
    for i in range(len(clusters) - 1):
        group = [clusters[i]]
        j = i + 1
        while j < len(clusters) and clusters[j].z - clusters[i].z <= window:
            group.append(clusters[j])
            j += 1
        if len(group) > 1:
            stacked = np.column_stack([c.kernel_basis for c in group])
            svals = np.linalg.svd(stacked, compute_uv=False)
            assert svals[-1] > 0.1


def test_track_branch_constant_family_flat():
    ops, fam = interval_family("dirichlet")
    u = UnitaryFamily(ops, fam)
    root = locate_roots(u, 0.5, 2.0)[0]
    branches = track_branch(ops, fam, root, np.linspace(0, 0.5, 6))
    assert len(branches) == 1
    assert np.allclose(branches[0].zs, root.z)
    hit = intersect_with_line(ops, fam, branches[0], 100.0)
    assert hit.alpha == pytest.approx(root.z / 100.0, abs=1e-14)


def test_linear_branch_closed_form():
    # S(alpha) = -e^{i alpha} I on a unit edge: z(alpha) = z_i - alpha / 2
    ops, _ = interval_family("dirichlet")
    fam = synthetic_family(-np.eye(2, dtype=complex), np.eye(2))
    frozen = UnitaryFamily(ops, ScatteringFamily.constant(-np.eye(2, dtype=complex)))
    root = locate_roots(frozen, 0.5, 2.0)[0]
    branches = track_branch(ops, fam, root, np.linspace(0, 0.5, 11))
    assert len(branches) == 1
    br = branches[0]
    assert br.slope_bound == pytest.approx(0.5)
    for a, z in zip(br.alphas, br.zs):
        assert z == pytest.approx(np.pi / 2 - a / 2, abs=1e-12)
    for n in (50, 100, 200, 400):
        hit = intersect_with_line(ops, fam, br, float(n))
        assert hit.alpha == pytest.approx(np.pi / (2 * n + 1), abs=1e-10)
        assert hit.residual <= 1e-10
    rep = leading_term_check(ops, fam, br, [50, 100, 200, 400])
    assert not rep.flagged
    assert rep.fitted_order > 0.9
    # closed form: |alpha N - z_1| = z_1 / (2N + 1) <= (pi/4) / N
    assert np.all(rep.errors <= (np.pi / 4) / rep.n_values + 1e-12)


def test_branch_consistency_at_zero_and_slope_bound():
    rng = np.random.default_rng(23)
    ops, fam_const = random_family(rng, n_edges=2)
    s0 = fam_const.base
    b = commuting_generator(s0, rng, scale=1.0)
    fam = ScatteringFamily.generator_form(s0, b)
    frozen = UnitaryFamily(ops, ScatteringFamily.constant(s0))
    roots = locate_roots(frozen, 0.3, 4.0)
    grid = np.linspace(0.0, 0.4, 9)
    c0 = np.linalg.norm(b, 2) / (2 * float(ops.lengths.min()))
    for root in roots[:3]:
        branches = track_branch(ops, fam, root, grid)
        assert sum(br.multiplicity for br in branches) == root.multiplicity
        # at alpha=0 the union of branch projections spans the root kernel
        bases = [br.projections[0] for br in branches]
        union = np.column_stack([_basis(p, br.multiplicity)
                                 for p, br in zip(bases, branches)])
        q, _ = np.linalg.qr(union)
        assert subspace_distance(q[:, :union.shape[1]], root.kernel_basis) < 1e-6
        assert subspace_distance(root.kernel_basis, q[:, :union.shape[1]]) < 1e-6
        for br in branches:
            steps = np.abs(np.diff(br.zs)) / np.diff(br.alphas)
            assert np.all(steps <= c0 * 1.05 + 1e-9)


def _basis(p, mult):
    w, q = np.linalg.eigh((p + p.conj().T) / 2)
    return q[:, np.argsort(w)[::-1][:mult]]


def test_intersection_admissibility():
    ops, _ = interval_family("dirichlet")
    fam = synthetic_family(-np.eye(2, dtype=complex), np.eye(2))
    frozen = UnitaryFamily(ops, ScatteringFamily.constant(-np.eye(2, dtype=complex)))
    root = locate_roots(frozen, 0.5, 2.0)[0]
    br = track_branch(ops, fam, root, np.linspace(0, 0.1, 5))[0]
    from graphspectra import ValidationError
    with pytest.raises(ValidationError, match="admissibility"):
        intersect_with_line(ops, fam, br, 2.0)


def test_stability_residual_cases():
    ops, fam = interval_family("dirichlet")
    u = UnitaryFamily(ops, fam)
    root = locate_roots(u, 0.5, 2.0)[0]
    phi = root.kernel_basis[:, 0]
    at_root = stability_residual(u, root.z, phi)
    assert at_root.epsilon <= 1e-10
    assert at_root.within_bound
    # first-order: eps ~ |theta| = 2 l delta, bound = eps / l >= delta
    delta = 1e-3
    shifted = stability_residual(u, root.z + delta, phi)
    assert shifted.epsilon == pytest.approx(2.0 * delta, rel=1e-3)
    assert shifted.bound >= delta
    assert shifted.within_bound
    rng = np.random.default_rng(1)
    psi = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    z0 = 1.1
    rep = stability_residual(u, z0, psi / np.linalg.norm(psi))
    nearest = min(abs(z0 - k * np.pi / 2) for k in range(1, 5))
    assert rep.bound >= nearest - 1e-9


def test_non_monotone_rejected():
    ops, _ = interval_family("dirichlet")
    rng = np.random.default_rng(3)
    s0 = random_involution(2, rng)
    b = commuting_generator(s0, rng, scale=10.0)
    fam = synthetic_family(s0, b)
    u = UnitaryFamily(ops, fam, mode="scaled", scale_n=1.0)
    with pytest.raises(NumericalError, match="monotone"):
        monotonicity_certificate(u, np.linspace(0.5, 3.0, 7))


def test_leading_term_constant_family_exact():
    ops, fam = interval_family("dirichlet")
    u = UnitaryFamily(ops, fam)
    root = locate_roots(u, 0.5, 2.0)[0]
    br = track_branch(ops, fam, root, np.linspace(0, 0.5, 6))[0]
    rep = leading_term_check(ops, fam, br, [50, 100, 200])
    assert rep.exact
    assert not rep.flagged
    assert np.all(rep.errors <= 1e-12)


def test_unitarity_of_evaluated_family():
    rng = np.random.default_rng(29)
    ops, fam_const = random_family(rng, n_edges=2)
    b = commuting_generator(fam_const.base, rng)
    fam = ScatteringFamily.generator_form(fam_const.base, b)
    eye = np.eye(ops.dim)
    for mode, kwargs in [("frozen", {"alpha0": 0.2}), ("scaled", {"scale_n": 50.0})]:
        u = UnitaryFamily(ops, fam, mode=mode, **kwargs)
        for z in rng.uniform(0.1, 10.0, 25):
            m = u.evaluate(float(z))
            assert np.linalg.norm(m @ m.conj().T - eye) <= 1e-8


def test_scaled_mode_closed_form_roots():
    # S(alpha) = -e^{i alpha} I on a unit edge, scaled: U(z) = -e^{i(2 + 1/N) z} sigma,
    # so the roots are z = k pi / (2 + 1/N) and D(z) = 2 + 1/N identically
    ops, _ = interval_family("dirichlet")
    fam = synthetic_family(-np.eye(2, dtype=complex), np.eye(2))
    n = 25.0
    u = UnitaryFamily(ops, fam, mode="scaled", scale_n=n)
    rate = 2.0 + 1.0 / n
    d_min, d_max = monotonicity_certificate(u, [0.5, 1.5, 3.0])
    assert d_min == pytest.approx(rate, abs=1e-12)
    assert d_max == pytest.approx(rate, abs=1e-12)
    roots = locate_roots(u, 0.1, 5.0)
    expect = [k * np.pi / rate for k in (1, 2, 3)]
    assert np.allclose([r.z for r in roots], expect, atol=1e-9)
    assert count_roots(u, 0.1, 5.0) == 3
    # the same numbers through the branch-intersection route: alpha = z / N
    frozen = UnitaryFamily(ops, ScatteringFamily.constant(-np.eye(2, dtype=complex)))
    base_root = locate_roots(frozen, 0.5, 2.0)[0]
    br = track_branch(ops, fam, base_root, np.linspace(0, 0.3, 7))[0]
    hit = intersect_with_line(ops, fam, br, n)
    assert hit.z == pytest.approx(roots[0].z, abs=1e-10)
    # stability bound in scaled mode around the first root
    rep = stability_residual(u, roots[0].z + 5e-4, roots[0].kernel_basis[:, 0])
    assert rep.within_bound


def test_bifurcation_splits_into_closed_form_slopes():
    # two identical edges, Dirichlet ends: double roots at k pi / 2; the
    # generator diag(1, 1, 2, 2) splits each into slopes -1/2 and -1
    g = build_graph({"vertices": ["a", "b"],
                     "edges": [{"id": "e1", "ends": ["a", "b"], "half_length": 1.0},
                               {"id": "e2", "ends": ["a", "b"], "half_length": 1.0}]})
    ops = graph_operators(g)
    s0 = -np.eye(4, dtype=complex)
    b = np.diag([1.0, 1.0, 2.0, 2.0])
    fam = ScatteringFamily.generator_form(s0, b)
    frozen = UnitaryFamily(ops, ScatteringFamily.constant(s0))
    root = locate_roots(frozen, 1.0, 2.0)[0]
    assert root.multiplicity == 2
    branches = track_branch(ops, fam, root, np.linspace(0.0, 0.4, 9))
    assert len(branches) == 2
    assert [br.multiplicity for br in branches] == [1, 1]
    slopes = sorted((br.zs[-1] - br.z0) / br.alphas[-1] for br in branches)
    assert slopes[0] == pytest.approx(-1.0, abs=1e-9)
    assert slopes[1] == pytest.approx(-0.5, abs=1e-9)
    for br in branches:
        slope = (br.zs[-1] - br.z0) / br.alphas[-1]
        for a, z in zip(br.alphas, br.zs):
            assert z == pytest.approx(br.z0 + slope * a, abs=1e-9)

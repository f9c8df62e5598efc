import numpy as np
import pytest

from graphspectra.cli import family_csv_rows, main, read_family_csv

INTERVAL = """
[run]
seed = 0

[graph]
vertices = ["a", "b"]
length_convention = "half"

[[graph.edges]]
id = "e"
ends = ["a", "b"]
length = 1.0

[conditions.a]
kind = "dirichlet"

[conditions.b]
kind = "dirichlet"

[spectrum]
b_max = 12.0

[secular]
z_min = 0.0
z_max = 6.0
"""

GENERATOR = """
[run]
seed = 0

[graph]
vertices = ["a", "b"]
length_convention = "half"

[[graph.edges]]
id = "e"
ends = ["a", "b"]
length = 1.0

[conditions.a]
kind = "family"
base_real = [[-1.0]]
generator_real = [[1.0]]

[conditions.b]
kind = "family"
base_real = [[-1.0]]
generator_real = [[1.0]]

[branches]
alpha_max = 0.4
grid_points = 9
n_list = [2, 50, 100]
root_window = [0.5, 2.0]
"""

EMPTY_GRAPH = """
[graph]
vertices = []
length_convention = "half"

[conditions]
"""

BAD_MATRIX = """
[graph]
vertices = ["a", "b"]
length_convention = "half"

[[graph.edges]]
id = "e"
ends = ["a", "b"]
length = 1.0

[conditions.a]
kind = "matrix"
matrix_real = [[0.5]]

[conditions.b]
kind = "dirichlet"
"""


def run_cli(tmp_path, config_text, command, name="cfg.toml", extra=()):
    cfg = tmp_path / name
    cfg.write_text(config_text)
    out = tmp_path / "out"
    return main([command, "--config", str(cfg), "--out", str(out), *extra]), out


def test_spectrum_csv_values(tmp_path):
    code, out = run_cli(tmp_path, INTERVAL, "spectrum")
    assert code == 0
    lines = (out / "spectrum.csv").read_text().splitlines()
    assert lines[0].startswith("# graphspectra config_sha256=")
    body = [ln.split(",") for ln in lines[3:]]
    got = [float(row[1]) for row in body]
    assert np.allclose(got, [(k * np.pi / 2) ** 2 for k in (1, 2)], atol=1e-9)


def test_byte_identical_reruns(tmp_path):
    _, out1 = run_cli(tmp_path, INTERVAL, "spectrum")
    first = (out1 / "spectrum.csv").read_bytes()
    (out1 / "spectrum.csv").unlink()
    code, out2 = run_cli(tmp_path, INTERVAL, "spectrum")
    assert code == 0
    assert (out2 / "spectrum.csv").read_bytes() == first


def test_secular_empty_interval(tmp_path):
    cfg_text = INTERVAL.replace("z_min = 0.0\nz_max = 6.0", "z_min = 1.0\nz_max = 1.0")
    code, out = run_cli(tmp_path, cfg_text, "secular")
    assert code == 0
    lines = (out / "roots.csv").read_text().splitlines()
    assert len(lines) == 3        # headers only, empty root table


def test_validation_exit_codes(tmp_path):
    code, _ = run_cli(tmp_path, EMPTY_GRAPH, "spectrum")
    assert code == 2
    code, _ = run_cli(tmp_path, BAD_MATRIX, "spectrum")
    assert code == 2
    assert main(["thin", "--config", str(tmp_path / "missing.toml")]) == 2


def test_branches_closed_form_column(tmp_path):
    code, out = run_cli(tmp_path, GENERATOR, "branches")
    assert code == 0
    fit = (out / "leading_term.txt").read_text()
    assert "N=2.0 skipped: below admissibility" in fit
    rows = [ln.split(",") for ln in (out / "branches.csv").read_text().splitlines()[3:]]
    # z(alpha) = pi/2 - alpha/2 along the tracked branch
    for row in rows:
        alpha, z = float(row[2]), float(row[3])
        assert z == pytest.approx(np.pi / 2 - alpha / 2, abs=1e-10)


def test_family_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    mats = [rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)) for _ in range(5)]
    alphas = np.linspace(0.1, 0.5, 5)
    rows = family_csv_rows(alphas, mats)
    path = tmp_path / "fam.csv"
    with open(path, "w") as f:
        f.write("alpha,entries\n")
        for row in rows:
            f.write(",".join(repr(float(x)) for x in row) + "\n")
    got_alphas, got_mats = read_family_csv(path)
    assert np.allclose(got_alphas, alphas)
    for a, b in zip(got_mats, mats):
        assert np.allclose(a, b)


def test_thin_vector_dump_roundtrip(tmp_path):
    from graphspectra import load_eigenvector
    cfg_text = INTERVAL + """
[thin]
bc = "dirichlet"
epsilons = [0.25]
h_factor = 4
k = 2
dump_vectors = true
[thin.directions]
e = "+x"
"""
    code, out = run_cli(tmp_path, cfg_text, "thin")
    assert code == 0
    values, h = load_eigenvector(out / "vec_eps0.25_k1.bin")
    assert h == 0.0625
    assert values.shape == (2 * 16 + 1, 8 + 1)
    # lowest Dirichlet mode: single sign bump in the interior
    interior = values[1:-1, 1:-1]
    assert np.abs(interior).max() > 0
    assert (interior > -1e-12).all() or (interior < 1e-12).all()


def test_sampled_family_condition_from_csv(tmp_path):
    # per-vertex sampled family: 1x1 blocks S_v(alpha) = -e^{i alpha}
    alphas = np.linspace(0.02, 0.4, 8)
    with open(tmp_path / "fam.csv", "w") as f:
        f.write("alpha,entries\n")
        for a in alphas:
            s = -np.exp(1j * a)
            f.write(f"{float(a)!r},{float(s.real)!r},{float(s.imag)!r}\n")
    cfg_text = """
[graph]
vertices = ["a", "b"]
length_convention = "half"

[[graph.edges]]
id = "e"
ends = ["a", "b"]
length = 1.0

[conditions.a]
kind = "family"
samples = "fam.csv"

[conditions.b]
kind = "family"
samples = "fam.csv"

[secular]
z_min = 0.5
z_max = 2.0
"""
    code, out = run_cli(tmp_path, cfg_text, "secular")
    assert code == 0
    rows = [ln.split(",") for ln in (out / "roots.csv").read_text().splitlines()[3:]]
    # frozen at S(0) = -I: the only root in the window is pi/2
    assert len(rows) == 1
    assert float(rows[0][3]) == pytest.approx(np.pi / 2, abs=1e-6)


def test_thin_jobs_parallel_byte_identical(tmp_path):
    cfg_text = INTERVAL + """
[thin]
bc = "dirichlet"
epsilons = [0.25, 0.125]
h_factor = 4
k = 2
[thin.directions]
e = "+x"
"""
    _, out1 = run_cli(tmp_path, cfg_text, "thin", name="one.toml")
    serial = (out1 / "thin.csv").read_bytes()
    (out1 / "thin.csv").unlink()
    cfg = tmp_path / "one.toml"
    code = main(["thin", "--config", str(cfg), "--out", str(out1), "--jobs", "2"])
    assert code == 0
    assert (out1 / "thin.csv").read_bytes() == serial


def test_custom_junction_geometry(tmp_path):
    cfg_text = """
[junction]
kind = "custom"
width = 1.0
bc = "neumann"
h = 0.0625
k_modes = 6
t_len = 4.0
rectangles = [[0.0, 0.0, 1.0, 1.0]]
alpha_grid = [0.3, 0.6]

[[junction.ports]]
origin = [1.0, 0.0]
direction = "+x"

[[junction.ports]]
origin = [0.0, 0.0]
direction = "-x"

[[junction.ports]]
origin = [0.0, 1.0]
direction = "+y"
"""
    code, out = run_cli(tmp_path, cfg_text, "scatter")
    assert code == 0
    from graphspectra.cli import read_family_csv
    alphas, mats = read_family_csv(out / "family.csv")
    assert list(alphas) == [0.3, 0.6]
    assert mats[0].shape == (3, 3)
    # the solves are unitary to their recorded defect scale
    assert np.linalg.norm(mats[0] @ mats[0].conj().T - np.eye(3), 2) < 5e-2

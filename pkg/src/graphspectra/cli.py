"""Configuration ingestion, subcommand dispatch, and reproducible CSV emission.

Configs are TOML with explicit physical conventions: edge lengths carry a
length_convention key ("half" or "full", no default), junction widths are full
widths, and the thin-domain tube half-width equals epsilon.  Every output file
starts with a comment header carrying the config hash and a parameter echo, so
identical config and seed reproduce byte-identical files.

Exit codes: 0 success, 2 validation failure, 3 numerical failure, 4 acceptance
assertion failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import math
import sys

try:
    import tomllib
except ModuleNotFoundError:          # Python < 3.11
    import tomli as tomllib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import junction as jn
from . import thindomain as td
from .errors import AcceptanceFailure, NumericalError, ValidationError
from .graph import MetricGraph, build_graph, graph_operators
from .quantumgraph import QuantumGraphSpec, oracle_spectrum, positive_spectrum, thin_limit_prediction
from .scattering import (ScatteringFamily, VertexScattering, assemble_global,
                         dirichlet_matrix, kirchhoff_matrix, pm_eigenspaces)
from .secular import UnitaryFamily, leading_term_check, locate_roots, track_branch


@dataclass
class RunConfig:
    raw: dict
    path: Path
    sha: str
    out_dir: Path
    seed: int

    def section(self, name: str, required: bool = True) -> dict:
        got = self.raw.get(name)
        if got is None and required:
            raise ValidationError(f"config is missing the [{name}] section")
        return got or {}


def load_config(path: str, out_override: str | None, seed_override: int | None) -> RunConfig:
    p = Path(path)
    if not p.exists():
        raise ValidationError(f"config file not found: {path}")
    data = p.read_bytes()
    raw = tomllib.loads(data.decode())
    run = raw.get("run", {})
    out_dir = Path(out_override or run.get("out_dir", "out"))
    seed = seed_override if seed_override is not None else int(run.get("seed", 0))
    return RunConfig(raw, p, hashlib.sha256(data).hexdigest()[:16], out_dir, seed)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(cfg: RunConfig, name: str, header: list[str], rows: list[tuple],
              params: dict) -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / name
    with open(path, "w", newline="") as f:
        f.write(f"# graphspectra config_sha256={cfg.sha} seed={cfg.seed}\n")
        echo = " ".join(f"{k}={_fmt(v)}" for k, v in sorted(params.items()))
        f.write(f"# params: {echo}\n")
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])
    return path


def write_text(cfg: RunConfig, name: str, lines: list[str], params: dict) -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / name
    with open(path, "w") as f:
        f.write(f"# graphspectra config_sha256={cfg.sha} seed={cfg.seed}\n")
        echo = " ".join(f"{k}={_fmt(v)}" for k, v in sorted(params.items()))
        f.write(f"# params: {echo}\n")
        for line in lines:
            f.write(line + "\n")
    return path


# ---------------------------------------------------------------------------
# config -> domain objects
# ---------------------------------------------------------------------------

def parse_graph(cfg: RunConfig) -> MetricGraph:
    sec = cfg.section("graph")
    convention = sec.get("length_convention")
    if convention not in ("half", "full"):
        raise ValidationError("graph.length_convention must be 'half' or 'full' (no default)")
    edges = []
    for e in sec.get("edges", ()):
        item = {"id": e["id"], "ends": e["ends"]}
        if "length" not in e:
            raise ValidationError(f"edge {e.get('id')!r}: missing length")
        item["half_length" if convention == "half" else "full_length"] = e["length"]
        if "multiplicity" in e:
            item["multiplicity"] = e["multiplicity"]
        edges.append(item)
    return build_graph({"vertices": sec.get("vertices", ()), "edges": edges})


def _complex_matrix(entry: dict, key: str) -> np.ndarray:
    re = np.asarray(entry[f"{key}_real"], dtype=float)
    im = np.asarray(entry.get(f"{key}_imag", np.zeros_like(re)), dtype=float)
    return re + 1j * im


def parse_conditions(cfg: RunConfig, graph: MetricGraph) -> ScatteringFamily:
    """Global family from per-vertex condition entries.

    A vertex entry is one of kirchhoff, dirichlet, matrix (inline involution),
    or family (generator form, or a sample-grid CSV path relative to the
    config file).  Mixed constant and generator vertices combine into one
    global generator family; a sampled vertex makes the whole family sampled.
    """
    sec = cfg.section("conditions")
    per_vertex: dict = {}
    generators: dict = {}
    sampled: dict = {}
    for v in graph.vertices:
        entry = sec.get(str(v))
        if entry is None:
            raise ValidationError(f"no condition for vertex {v!r}")
        kind = entry.get("kind")
        d = graph.degree(v)
        rows = len(graph.half_edges.vertex_rows(v))
        if kind == "kirchhoff":
            per_vertex[v] = kirchhoff_matrix(d, rows // d, vertex=v)
        elif kind == "dirichlet":
            per_vertex[v] = dirichlet_matrix(d, rows // d, vertex=v)
        elif kind == "matrix":
            per_vertex[v] = VertexScattering(v, _complex_matrix(entry, "matrix"))
        elif kind == "family":
            if "samples" in entry:
                path = cfg.path.parent / entry["samples"]
                alphas, mats = read_family_csv(path)
                sampled[v] = (alphas, mats)
                per_vertex[v] = VertexScattering(v, _involution_projection(mats[0]))
            else:
                base = _complex_matrix(entry, "base")
                per_vertex[v] = VertexScattering(v, base)
                generators[v] = _complex_matrix(entry, "generator")
        else:
            raise ValidationError(f"vertex {v!r}: unknown condition kind {kind!r}")
    base_family = assemble_global(graph, per_vertex)
    if sampled:
        grids = [alphas for alphas, _ in sampled.values()]
        alphas = grids[0]
        for g in grids[1:]:
            if len(g) != len(alphas) or np.max(np.abs(g - alphas)) > 1e-12:
                raise ValidationError("sampled vertex families must share one alpha grid")
        idx = graph.half_edges
        mats = []
        for k in range(len(alphas)):
            s = np.array(base_family.base)
            for v, (_, per_alpha) in sampled.items():
                rows = idx.vertex_rows(v)
                s[np.ix_(rows, rows)] = per_alpha[k]
            mats.append(s)
        return ScatteringFamily.from_samples(alphas, mats)
    if generators:
        m = graph.half_edges.dim
        b = np.zeros((m, m), dtype=complex)
        idx = graph.half_edges
        for v, bv in generators.items():
            rows = idx.vertex_rows(v)
            b[np.ix_(rows, rows)] = bv
        return ScatteringFamily.generator_form(base_family.base, b)
    return base_family


def _involution_projection(s: np.ndarray) -> np.ndarray:
    """Nearest involution: snap the Hermitian part's eigenvalues to +-1."""
    plus, minus = pm_eigenspaces(s, tol=0.5)
    return plus @ plus.conj().T - minus @ minus.conj().T


def read_family_csv(path) -> tuple[np.ndarray, list[np.ndarray]]:
    """Read an alpha grid of matrices: alpha, then row-major re/im entry pairs."""
    alphas = []
    mats = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("alpha"):
                continue
            vals = [float(x) for x in line.split(",")]
            n = round(math.isqrt((len(vals) - 1) // 2))
            if 2 * n * n + 1 != len(vals):
                raise ValidationError(f"malformed family row in {path}")
            alphas.append(vals[0])
            entries = np.asarray(vals[1:]).reshape(n * n, 2)
            mats.append((entries[:, 0] + 1j * entries[:, 1]).reshape(n, n))
    if not alphas:
        raise ValidationError(f"no samples in {path}")
    return np.asarray(alphas), mats


def family_csv_rows(alphas, mats) -> list[tuple]:
    rows = []
    for a, s in zip(alphas, mats):
        flat = []
        for x in np.asarray(s).ravel():
            flat.extend([float(np.real(x)), float(np.imag(x))])
        rows.append((a, *flat))
    return rows


def parse_junction(cfg: RunConfig) -> jn.JunctionDomain:
    sec = cfg.section("junction")
    kind = sec.get("kind")
    width = sec.get("width")
    bc = sec.get("bc")
    if width is None or bc is None:
        raise ValidationError("junction.width and junction.bc are required (full width, no default)")
    if kind == "l_bend":
        return jn.l_bend(width, bc)
    if kind == "cross":
        return jn.cross(width, bc)
    if kind == "strip":
        return jn.straight_strip(width, sec.get("gap", 2.0 * width), bc)
    if kind == "custom":
        rects = tuple(tuple(map(float, r)) for r in sec["rectangles"])
        ports = tuple(jn.Port(tuple(map(float, p["origin"])), p["direction"])
                      for p in sec["ports"])
        return jn.JunctionDomain(rects, ports, width, bc, name="custom")
    raise ValidationError(f"unknown junction kind {kind!r}")


def parse_embedding(cfg: RunConfig, graph: MetricGraph) -> td.EmbeddedGraph:
    sec = cfg.section("thin")
    bc = sec.get("bc")
    if bc is None:
        raise ValidationError("thin.bc is required")
    directions = sec.get("directions")
    if not directions:
        raise ValidationError("thin.directions is required (edge id -> +x/-x/+y/-y)")
    return td.EmbeddedGraph(graph, directions, bc)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_spectrum(cfg: RunConfig, accept: bool, jobs: int) -> int:
    graph = parse_graph(cfg)
    family = parse_conditions(cfg, graph)
    sec = cfg.section("spectrum", required=False)
    b_max = float(sec.get("b_max", 30.0))
    spec = QuantumGraphSpec(graph, family.base if family.kind != "sampled"
                            else _involution_projection(family.base))
    spectrum = positive_spectrum(spec, b_max)
    rows = [(0, 0.0, spectrum.zero_multiplicity)] if spectrum.zero_multiplicity else []
    rows += [(k + 1, p.b, p.multiplicity) for k, p in enumerate(spectrum.positives)]
    params = {"b_max": b_max, "zero_multiplicity": spectrum.zero_multiplicity}
    path = write_csv(cfg, "spectrum.csv", ["k", "b_k", "multiplicity"], rows, params)
    if sec.get("oracle_check", False):
        oracle = oracle_spectrum(spec, b_max)
        a = [b for p in spectrum.positives for b in [p.b] * p.multiplicity if p.b >= 0.01]
        b = [b for p in oracle.positives for b in [p.b] * p.multiplicity if p.b >= 0.01]
        agree = len(a) == len(b) and all(abs(x - y) <= 1e-7 for x, y in zip(a, b))
        write_text(cfg, "spectrum_oracle.txt",
                   [f"secular_count={len(a)} oracle_count={len(b)} agree={agree}"], params)
        if accept and not agree:
            raise AcceptanceFailure("secular and oracle spectra disagree")
    print(f"wrote {path}")
    return 0


def cmd_secular(cfg: RunConfig, accept: bool, jobs: int) -> int:
    graph = parse_graph(cfg)
    family = parse_conditions(cfg, graph)
    ops = graph_operators(graph)
    sec = cfg.section("secular", required=False)
    z_min = float(sec.get("z_min", 0.0))
    z_max = float(sec.get("z_max", 10.0))
    tol = float(sec.get("tol", 1e-11))
    if family.kind == "constant":
        frozen = family
    else:
        # freeze at alpha = 0; sampled bases are extrapolated, so snap them
        # back onto the nearest involution before building the secular family
        base = family.base if family.kind == "generator" else _involution_projection(family.base)
        frozen = ScatteringFamily.constant(base)
    fam = UnitaryFamily(ops, frozen, mode="frozen")
    clusters = locate_roots(fam, z_min, z_max, tol=tol)
    rows = [(i + 1, 1, 0.0, c.z, c.multiplicity) for i, c in enumerate(clusters)]
    params = {"z_min": z_min, "z_max": z_max, "tol": tol}
    path = write_csv(cfg, "roots.csv", ["i", "rho", "alpha", "z", "multiplicity"], rows, params)
    count = sum(c.multiplicity for c in clusters)
    weyl = float(np.sum(ops.lengths)) / math.pi * (z_max - z_min)
    lines = [f"count={count}", f"weyl_estimate={weyl!r}",
             f"defect={abs(count - weyl)!r}", f"dim={ops.dim}",
             f"weyl_defect_below_dim={abs(count - weyl) < ops.dim}"]
    write_text(cfg, "weyl.txt", lines, params)
    if accept and not abs(count - weyl) < ops.dim:
        raise AcceptanceFailure("Weyl defect is not below the mode-space dimension")
    print(f"wrote {path}")
    return 0


def cmd_branches(cfg: RunConfig, accept: bool, jobs: int) -> int:
    graph = parse_graph(cfg)
    family = parse_conditions(cfg, graph)
    ops = graph_operators(graph)
    sec = cfg.section("branches", required=False)
    alpha_max = float(sec.get("alpha_max", 0.5))
    n_grid = int(sec.get("grid_points", 11))
    n_list = [float(x) for x in sec.get("n_list", [50, 100, 200, 400])]
    window = sec.get("root_window", [0.0, 4.0])
    frozen = UnitaryFamily(ops, ScatteringFamily.constant(family.base))
    roots = locate_roots(frozen, float(window[0]), float(window[1]))
    grid = np.linspace(0.0, alpha_max, n_grid)
    rows = []
    fit_lines = []
    for i, root in enumerate(roots, start=1):
        branches = track_branch(ops, family, root, grid)
        for br in branches:
            br.root_index = i
            for a, z in zip(br.alphas, br.zs):
                rows.append((i, br.rho, a, z, br.multiplicity))
            skipped = []
            usable = []
            for n in n_list:
                n_min = br.slope_bound + br.z0 / br.alphas[-1]
                if n < n_min:
                    skipped.append(n)
                else:
                    usable.append(n)
            for n in skipped:
                fit_lines.append(f"root={i} rho={br.rho} N={n} skipped: below admissibility")
            if usable:
                rep = leading_term_check(ops, family, br, usable)
                fit_lines.append(
                    f"root={i} rho={br.rho} z0={br.z0!r} order={rep.fitted_order!r} "
                    f"constant={rep.constant!r} exact={rep.exact} flagged={rep.flagged}")
                if accept and rep.flagged:
                    raise AcceptanceFailure(f"branch {i}.{br.rho}: leading-term order below 1")
    params = {"alpha_max": alpha_max, "grid_points": n_grid}
    path = write_csv(cfg, "branches.csv", ["i", "rho", "alpha", "z", "multiplicity"], rows, params)
    write_text(cfg, "leading_term.txt", fit_lines, params)
    print(f"wrote {path}")
    return 0


def cmd_scatter(cfg: RunConfig, accept: bool, jobs: int) -> int:
    domain = parse_junction(cfg)
    sec = cfg.section("junction")
    h = sec.get("h")
    if h is None:
        raise ValidationError("junction.h is required")
    h = float(h)
    k_modes = int(sec.get("k_modes", 8))
    t_len = float(sec.get("t_len", 5.0 * domain.width))
    nu = domain.nu_continuum()
    gap = math.sqrt(domain.nu1_continuum() - nu)
    alpha_grid = [float(a) for a in sec.get("alpha_grid", list(np.linspace(0.05, 0.5, 10) * gap))]
    params = {"h": h, "k_modes": k_modes, "t_len": t_len, "bc": domain.bc,
              "width": domain.width, "kind": domain.name}

    jg = jn.rasterize_junction(domain, h, k_modes, t_len)
    mats = []
    defects = []
    for a in alpha_grid:
        res = jn.scattering_matrix(domain, a, h, k_modes, t_len, _jg=jg)
        mats.append(res.s)
        defects.append(res.unitarity_defect)
    path = write_csv(cfg, "family.csv", ["alpha", "entries_re_im_row_major"],
                     family_csv_rows(alpha_grid, mats), params)

    zero = jn.scattering_matrix_at_zero(domain, h, k_modes, t_len)
    lines = ["S(0) real part rows: " + repr([list(map(float, row)) for row in zero.s0.real]),
             "S(0) imag part rows: " + repr([list(map(float, row)) for row in zero.s0.imag]),
             f"involution_defect={zero.involution_defect!r}",
             f"commutator_defect={zero.commutator_defect!r}",
             f"tolerance={zero.tolerance!r}",
             "unitarity_defects=" + repr([float(d) for d in defects])]
    write_text(cfg, "scatter_zero.txt", lines, params)

    taus: list[float] = []
    if domain.bc == "dirichlet":
        window = sec.get("lambda_window", [0.05 * nu, 0.999 * nu])
        bs = jn.bound_states(domain, (float(window[0]), float(window[1])), h, k_modes,
                             t_len, seed=cfg.seed)
        taus = bs.taus
        rows = [(i + 1, t, t / nu) for i, t in enumerate(taus)]
        write_csv(cfg, "bound_states.csv", ["p", "tau", "tau_over_nu"], rows, params)
    print(f"wrote {path}")
    return 0


def _thin_point(args):
    graph_spec, directions, bc, eps, k, h_factor, seed, dump_dir = args
    graph = build_graph(graph_spec)
    eg = td.EmbeddedGraph(graph, directions, bc)
    res, rd = td.thin_eigenvalues(eg, eps, k, h=eps / h_factor, seed=seed,
                                  keep_vectors=dump_dir is not None)
    if dump_dir is not None:
        for i in range(res.vectors.shape[1]):
            td.dump_eigenvector(Path(dump_dir) / f"vec_eps{eps!r}_k{i + 1}.bin",
                                rd, res.vectors[:, i])
    return eps, res.values, res.h


def cmd_thin(cfg: RunConfig, accept: bool, jobs: int) -> int:
    graph = parse_graph(cfg)
    eg = parse_embedding(cfg, graph)
    sec = cfg.section("thin")
    eps_list = [float(e) for e in sec.get("epsilons", [0.2, 0.1, 0.05])]
    k = int(sec.get("k", 6))
    h_factor = int(sec.get("h_factor", 16))
    dump_dir = None
    if sec.get("dump_vectors", False):
        dump_dir = cfg.out_dir
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
    graph_spec = _graph_back_to_spec(cfg)
    tasks = [(graph_spec, dict(eg.directions), eg.bc, eps, k, h_factor, cfg.seed, dump_dir)
             for eps in eps_list]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_thin_point, tasks))
    else:
        results = [_thin_point(t) for t in tasks]
    results.sort(key=lambda r: -r[0])
    rows = []
    for eps, values, h in results:
        for i, mu in enumerate(values, start=1):
            rows.append((eps, h, i, float(mu)))
    params = {"k": k, "h_factor": h_factor, "bc": eg.bc}
    path = write_csv(cfg, "thin.csv", ["eps", "h", "k", "mu_k"], rows, params)
    print(f"wrote {path}")
    return 0


def _graph_back_to_spec(cfg: RunConfig) -> dict:
    sec = cfg.section("graph")
    convention = sec["length_convention"]
    edges = []
    for e in sec.get("edges", ()):
        item = {"id": e["id"], "ends": list(e["ends"])}
        item["half_length" if convention == "half" else "full_length"] = e["length"]
        edges.append(item)
    return {"vertices": list(sec.get("vertices", ())), "edges": edges}


def cmd_converge(cfg: RunConfig, accept: bool, jobs: int) -> int:
    graph = parse_graph(cfg)
    eg = parse_embedding(cfg, graph)
    sec = cfg.section("thin")
    eps_list = [float(e) for e in sec.get("epsilons", [0.2, 0.1, 0.05])]
    k = int(sec.get("k", 6))
    h_factor = int(sec.get("h_factor", 16))
    b_max = float(cfg.section("spectrum", required=False).get("b_max", 16.0))

    nu_resc = eg.nu_rescaled()
    taus: list[float] = []
    if eg.bc == "dirichlet":
        # the junction geometry of each internal vertex is derived from the
        # embedding itself, so its lattice matches the thin domain exactly
        internal = [v for v in graph.vertices if graph.degree(v) >= 2]
        h_hat = 2.0 / 32.0
        s0_blocks: dict = {}
        for v in internal:
            domain, _ = td.junction_for_vertex(eg, v, 10.0)
            bs = jn.bound_states(domain, (0.05 * nu_resc, 0.999 * nu_resc), h_hat,
                                 t_len=10.0, seed=cfg.seed)
            taus.extend(bs.taus)
            zero = jn.scattering_matrix_at_zero(domain, h_hat, t_len=10.0)
            s0_blocks[v] = _involution_projection(zero.s0)
        per_vertex = {}
        for v in graph.vertices:
            if v in s0_blocks:
                per_vertex[v] = VertexScattering(v, s0_blocks[v])
            else:
                per_vertex[v] = dirichlet_matrix(graph.degree(v), vertex=v)
    else:
        per_vertex = {v: kirchhoff_matrix(graph.degree(v), vertex=v) for v in graph.vertices}
    s_global = assemble_global(graph, per_vertex)
    qg = QuantumGraphSpec(graph, s_global.base)
    spectrum = positive_spectrum(qg, b_max)
    b_values = [0.0] * spectrum.zero_multiplicity + spectrum.flat_values()
    b_values = b_values[: k + 2]

    report = td.convergence_study(eg, eps_list, k, nu_resc, taus, b_values,
                                  h_factor=h_factor, seed=cfg.seed)
    params = {"k": k, "h_factor": h_factor, "bc": eg.bc, "nu_rescaled": nu_resc,
              "taus": tuple(taus)}
    rows = []
    for r in report.rows:
        order = report.orders.get(r.k, math.nan)
        rows.append((r.eps, r.h, r.k, r.mu, r.mu * r.eps ** 2, r.predicted,
                     r.abs_err, order))
    path = write_csv(cfg, "converge.csv",
                     ["eps", "h", "k", "mu_k", "rescaled", "predicted", "abs_err", "fitted_order"],
                     rows, params)
    pred_rows = []
    for eps in eps_list:
        pred = thin_limit_prediction(nu_resc / 1.0, taus, spectrum, eps, k_max=k)
        for i, val in enumerate(pred.values, start=1):
            pred_rows.append((i, eps, val))
    write_csv(cfg, "predictions.csv", ["k", "eps", "predicted_mu_k"], pred_rows, params)

    if accept:
        smallest = min(eps_list)
        nu_small = nu_resc / smallest ** 2
        bad = []
        for r in report.rows:
            if r.eps != smallest or r.k > min(k, 4) or not math.isfinite(r.predicted):
                continue
            b_pred = r.predicted - nu_small if r.label == "graph" else r.predicted * r.eps ** 2
            scale = max(abs(b_pred), 0.25)
            if r.struct_err / scale > 0.10:
                bad.append(r.k)
        if bad:
            raise AcceptanceFailure(
                f"thin-limit structure check failed for k={bad} at eps={smallest}")
    print(f"wrote {path}")
    return 0


COMMANDS = {
    "spectrum": cmd_spectrum,
    "secular": cmd_secular,
    "branches": cmd_branches,
    "scatter": cmd_scatter,
    "thin": cmd_thin,
    "converge": cmd_converge,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="graphspectra",
                                     description="quantum-graph spectra, junction scattering, "
                                                 "and thin-neighborhood verification")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=None)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--accept", action="store_true",
                        help="run acceptance assertions (exit 4 on failure)")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.out, args.seed)
        return COMMANDS[args.command](cfg, args.accept, max(args.jobs, 1))
    except AcceptanceFailure as exc:
        print(f"acceptance failure: {exc}", file=sys.stderr)
        return 4
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())

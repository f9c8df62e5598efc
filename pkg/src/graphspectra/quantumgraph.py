"""The limit operator on the metric graph: -d^2/dxi^2 with involution vertex data.

Eigenvalues come from two independent code paths.  The production path feeds
the frozen secular family e^{i z 2L} sigma S(0) to the eigenphase engine; the
oracle path assembles, per candidate value, the per-edge trigonometric ansatz
u_e = A_e cos + B_e sin against the vertex conditions (boundary values in the
+1 eigenspace of S_v(0), inward derivatives in the -1 eigenspace) and scans
the smallest singular value of the resulting square system.  Agreement of the
two is the package's primary self-check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NumericalError, ValidationError
from .graph import GraphOperators, MetricGraph, graph_operators
from .scattering import ScatteringFamily, pm_eigenspaces, vertex_blocks
from .secular import UnitaryFamily, locate_roots

VERTEX_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class QuantumGraphSpec:
    """Metric graph (full edge lengths 2 l_e) plus a global involution S(0)."""

    graph: MetricGraph
    s0: np.ndarray
    operators: GraphOperators = field(init=False)

    def __post_init__(self):
        ops = graph_operators(self.graph)
        s0 = np.asarray(self.s0, dtype=complex)
        if s0.shape != (ops.dim, ops.dim):
            raise ValidationError("S(0) dimension does not match the graph mode space")
        if np.linalg.norm(s0 @ s0 - np.eye(ops.dim)) > 1e-8:
            raise ValidationError("S(0) is not an involution")
        vertex_blocks(self.graph, s0, offblock_tol=1e-8)
        object.__setattr__(self, "s0", s0)
        object.__setattr__(self, "operators", ops)


@dataclass(frozen=True)
class EdgeCoefficients:
    """u_e(xi) = A cos(z xi) + B sin(z xi), xi measured from the edge's first endpoint."""

    edge_id: object
    a: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class PositiveEigenvalue:
    b: float
    multiplicity: int
    coefficients: tuple[tuple[EdgeCoefficients, ...], ...]   # one tuple per kernel vector


@dataclass(frozen=True)
class GraphSpectrum:
    zero_multiplicity: int
    positives: tuple[PositiveEigenvalue, ...]

    def flat_values(self, b_max: float = math.inf) -> list[float]:
        out = []
        for p in self.positives:
            if p.b <= b_max:
                out.extend([p.b] * p.multiplicity)
        return out


def zero_mode_dim(spec: QuantumGraphSpec) -> int:
    """dim( Ker(I - sigma) intersect Ker(I - S(0)) ), the multiplicity of b = 0.

    Computed as the nullity of the stacked deficiency operators; rank from
    singular values with a fixed relative threshold.
    """
    m = spec.operators.dim
    stacked = np.vstack([np.eye(m) - spec.operators.sigma, np.eye(m) - spec.s0])
    svals = np.linalg.svd(stacked, compute_uv=False)
    top = svals[0] if svals[0] > 0 else 1.0
    return int(np.sum(svals <= 1e-10 * top))


def _coefficients_from_kernel(spec: QuantumGraphSpec, z: float,
                              kernel: np.ndarray) -> tuple[tuple[EdgeCoefficients, ...], ...]:
    idx = spec.graph.half_edges
    out = []
    for k in range(kernel.shape[1]):
        phi = kernel[:, k]
        psi = spec.s0 @ phi
        per_edge = []
        for e in spec.graph.edges:
            first = next(j for j, he in enumerate(idx.entries)
                         if he.edge_id == e.id and he.slot == 0)
            blk = idx.entries[first].block
            a = phi[blk] + psi[blk]
            b = 1j * (psi[blk] - phi[blk])
            per_edge.append(EdgeCoefficients(e.id, a, b))
        out.append(tuple(per_edge))
    return tuple(out)


def vertex_condition_residual(spec: QuantumGraphSpec, z: float,
                              coeffs: Sequence[EdgeCoefficients]) -> float:
    """Worst violation of the two vertex conditions by the given eigenfunction."""
    blocks = vertex_blocks(spec.graph, spec.s0)
    idx = spec.graph.half_edges
    by_edge = {c.edge_id: c for c in coeffs}
    worst = 0.0
    scale = max(np.linalg.norm(np.concatenate(
        [np.concatenate([by_edge[e.id].a, by_edge[e.id].b]) for e in spec.graph.edges])), 1e-30)
    for v in spec.graph.vertices:
        values, derivs = [], []
        for k in idx.at_vertex(v):
            he = idx.entries[k]
            c = by_edge[he.edge_id]
            length = 2.0 * spec.graph.edge(he.edge_id).half_length
            if he.slot == 0:
                values.append(c.a)
                derivs.append(z * c.b)
            else:
                values.append(c.a * math.cos(z * length) + c.b * math.sin(z * length))
                derivs.append(z * (c.a * math.sin(z * length) - c.b * math.cos(z * length)))
        w = np.concatenate(values)
        d = np.concatenate(derivs)
        plus, minus = pm_eigenspaces(blocks[v])
        res_v = np.linalg.norm(minus.conj().T @ w) if minus.shape[1] else 0.0
        res_d = np.linalg.norm(plus.conj().T @ d) if plus.shape[1] else 0.0
        worst = max(worst, res_v / scale, res_d / (scale * max(z, 1.0)))
    return worst


def positive_spectrum(spec: QuantumGraphSpec, b_max: float,
                      tol: float = 1e-12, z_min: float = 1e-8) -> GraphSpectrum:
    """b_k = z_k^2 for the secular roots z_k in (z_min, sqrt(b_max)]."""
    if b_max <= 0:
        raise ValidationError("b_max must be positive")
    fam = UnitaryFamily(spec.operators, ScatteringFamily.constant(spec.s0))
    clusters = locate_roots(fam, z_min, math.sqrt(b_max) + 10 * tol, tol=tol)
    positives = []
    for c in clusters:
        coeffs = _coefficients_from_kernel(spec, c.z, c.kernel_basis)
        for cf in coeffs:
            res = vertex_condition_residual(spec, c.z, cf)
            if res > VERTEX_RESIDUAL_TOL:
                raise NumericalError(f"eigenfunction certificate failed at b = {c.z**2:.6g}: {res:.2e}")
        positives.append(PositiveEigenvalue(c.z ** 2, c.multiplicity, coeffs))
    return GraphSpectrum(zero_mode_dim(spec), tuple(positives))


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------

def _refine_vmin(f, lo: float, hi: float) -> tuple[float, float]:
    """Minimize a V-shaped |c (x - x0)| profile on a bracket.

    Golden-section narrows the bracket, then the kink position is solved from
    the two one-sided line slopes, which is exact for a true V and lands well
    below the golden-section resolution.
    """
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(48):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
        if b - a < 1e-10 * max(1.0, abs(a)):
            break
    x = 0.5 * (a + b)
    for delta in (max(1e-6, (b - a)), 1e-8):
        s_minus, s_plus = f(x - delta), f(x + delta)
        denom = s_minus + s_plus
        if denom <= 0:
            break
        x = x + delta * (s_minus - s_plus) / denom
    return x, f(x)


def _oracle_matrix(spec: QuantumGraphSpec, z: float,
                   pm: dict, first_slots: dict) -> np.ndarray:
    """Square system whose nullity at z is the eigenvalue multiplicity of b = z^2.

    Unknown layout: for each edge (canonical order) the A block then the B
    block.  Rows: for each vertex, charge projections of the boundary values
    onto the -1 eigenspace and of the inward derivatives onto the +1
    eigenspace.  Derivative rows are divided by z, which leaves the condition
    unchanged for z > 0 and keeps the system well scaled near z = 0.
    """
    g = spec.graph
    idx = g.half_edges
    m = idx.dim
    cols: dict[object, slice] = {}
    off = 0
    for e in sorted(g.edges, key=lambda e: str(e.id)):
        cols[e.id] = slice(off, off + 2 * e.multiplicity)
        off += 2 * e.multiplicity
    rows = np.zeros((m, off), dtype=complex)
    r = 0
    for v in g.vertices:
        val_rows, der_rows = [], []
        for k in idx.at_vertex(v):
            he = idx.entries[k]
            e = g.edge(he.edge_id)
            length = 2.0 * e.half_length
            cs = cols[e.id]
            a_cols = np.arange(cs.start, cs.start + e.multiplicity)
            b_cols = a_cols + e.multiplicity
            val = np.zeros((e.multiplicity, off), dtype=complex)
            der = np.zeros((e.multiplicity, off), dtype=complex)
            if he.slot == 0:
                val[np.arange(e.multiplicity), a_cols] = 1.0
                der[np.arange(e.multiplicity), b_cols] = 1.0
            else:
                val[np.arange(e.multiplicity), a_cols] = math.cos(z * length)
                val[np.arange(e.multiplicity), b_cols] = math.sin(z * length)
                der[np.arange(e.multiplicity), a_cols] = math.sin(z * length)
                der[np.arange(e.multiplicity), b_cols] = -math.cos(z * length)
            val_rows.append(val)
            der_rows.append(der)
        plus, minus = pm[v]
        vals = np.vstack(val_rows)
        ders = np.vstack(der_rows)
        n_minus = minus.shape[1]
        n_plus = plus.shape[1]
        if n_minus:
            rows[r:r + n_minus] = minus.conj().T @ vals
            r += n_minus
        if n_plus:
            rows[r:r + n_plus] = plus.conj().T @ ders
            r += n_plus
    return rows


def oracle_spectrum(spec: QuantumGraphSpec, b_max: float,
                    z_min: float = 1e-3, depth_max: int = 2) -> GraphSpectrum:
    """Independent spectrum by singular-value scanning of the trig ansatz system.

    Scans sqrt(b) with base step pi / (20 max_e 2 l_e).  The smallest singular
    value is Lipschitz with constant at most ||M'(x)||, so a zero can hide in
    a cell only if an endpoint value is below (slope bound) x (step); exactly
    those cells are densified, twice if needed, before bracketed minima are
    refined.  Multiplicities are the nullity at the refined root, with an
    absolute floor on the rank threshold for the totally degenerate case where
    the whole system vanishes.
    """
    if b_max <= 0:
        raise ValidationError("b_max must be positive")
    g = spec.graph
    blocks = vertex_blocks(g, spec.s0)
    pm = {v: pm_eigenspaces(blocks[v]) for v in g.vertices}
    aux: dict = {}
    z_hi = math.sqrt(b_max)

    def smin(z: float) -> float:
        return float(np.linalg.svd(_oracle_matrix(spec, z, pm, aux),
                                   compute_uv=False)[-1])

    # Lipschitz bound for smin: largest ||dM/dx|| over a coarse sample, padded
    dx = 1e-5
    slope_bound = 0.0
    for z in np.linspace(z_min + dx, z_hi - dx, 12):
        dm = (_oracle_matrix(spec, z + dx, pm, aux) - _oracle_matrix(spec, z - dx, pm, aux))
        slope_bound = max(slope_bound, float(np.linalg.norm(dm, 2)) / (2 * dx))
    slope_bound *= 1.5

    step0 = math.pi / (20.0 * 2.0 * g.l_max)
    found: list[float] = []
    ambiguous: list[float] = []

    def scan(lo: float, hi: float, step: float, depth: int) -> None:
        xs = np.arange(lo, hi + 0.5 * step, step)
        if len(xs) < 3:
            xs = np.linspace(lo, hi, 3)
        elif xs[-1] < hi:
            xs = np.append(xs, hi)
        vals = np.array([smin(x) for x in xs])
        hot = vals <= slope_bound * step
        # runs of cells that could contain a zero
        i = 0
        while i < len(xs) - 1:
            if not (hot[i] or hot[i + 1]):
                i += 1
                continue
            j = i
            while j < len(xs) - 1 and (hot[j] or hot[j + 1]):
                j += 1
            run_lo = xs[max(i - 1, 0)]
            run_hi = xs[min(j + 1, len(xs) - 1)]
            if depth < depth_max:
                scan(run_lo, run_hi, step / 20.0, depth + 1)
            else:
                _collect(run_lo, run_hi, step)
            i = j + 1

    def _collect(lo: float, hi: float, step: float) -> None:
        xs = np.linspace(lo, hi, max(int(round((hi - lo) / (step / 4.0))), 8) + 1)
        vals = np.array([smin(x) for x in xs])
        for k in range(1, len(xs) - 1):
            if vals[k] <= vals[k - 1] and vals[k] <= vals[k + 1]:
                z_star, v_star = _refine_vmin(smin, xs[k - 1], xs[k + 1])
                if v_star <= 1e-7:
                    found.append(z_star)
                elif v_star <= slope_bound * step:
                    ambiguous.append(z_star)

    scan(z_min, z_hi, step0, 0)
    uniq: list[float] = []
    for z in sorted(found):
        if not uniq or z - uniq[-1] > 1e-7:
            uniq.append(z)
    if any(all(abs(z - u) > 1e-6 for u in uniq) for z in ambiguous):
        raise NumericalError("oracle grid too coarse: adjacent roots unresolved")

    positives = []
    for z in uniq:
        if not z * z <= b_max:
            continue
        svals = np.linalg.svd(_oracle_matrix(spec, z, pm, aux), compute_uv=False)
        null_tol = max(1e-6 * svals[0], 1e-8)
        positives.append(PositiveEigenvalue(z * z, max(int(np.sum(svals <= null_tol)), 1), ()))
    return GraphSpectrum(zero_mode_dim(spec), tuple(positives))


# ---------------------------------------------------------------------------
# thin-limit predictions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThinPrediction:
    eps: float
    d_offset: int
    values: tuple[float, ...]       # predicted mu_k for k = 1, 2, ...
    labels: tuple[str, ...]         # "bound" or "graph"
    rejected_taus: tuple[float, ...]


def thin_limit_prediction(nu: float, tau_list: Sequence[float],
                          spectrum: GraphSpectrum, eps: float,
                          k_max: int = 16) -> ThinPrediction:
    """mu_k(eps) predictions: eps^-2 tau_k below the threshold, then eps^-2 nu + b_{k-D}.

    tau entries above nu are invisible at fixed k and are rejected with a note.
    The graph list starts with the zero modes (b = 0 with the P_0 multiplicity).
    """
    taus = sorted(float(t) for t in tau_list)
    kept = [t for t in taus if t <= nu + 1e-12]
    rejected = tuple(t for t in taus if t > nu + 1e-12)
    d = len(kept)
    bs = [0.0] * spectrum.zero_multiplicity + spectrum.flat_values()
    values = [t / eps ** 2 for t in kept] + [nu / eps ** 2 + b for b in bs]
    labels = ["bound"] * d + ["graph"] * len(bs)
    order = np.argsort(values, kind="stable")[:k_max]
    return ThinPrediction(eps, d, tuple(values[i] for i in order),
                          tuple(labels[i] for i in order), rejected)


def eigencount_bound(spec: QuantumGraphSpec, lam_max: float, nu: float,
                     eps: float) -> tuple[int, int]:
    """(bound, slack): max admissible eigenvalue index below lam_max, with O(1) slack M.

    Uses the trace form of the root count, (tr L / pi) sqrt(lam_max - nu) / eps,
    which matches the spectral-flow count of the secular engine; tr L sums
    l_e over half-edges with mode multiplicities.
    """
    if lam_max < nu:
        raise ValidationError("lam_max must be at least nu")
    tr_l = float(np.sum(spec.operators.lengths))
    bound = tr_l / math.pi * math.sqrt(lam_max - nu) / eps
    return int(math.floor(bound)), spec.operators.dim

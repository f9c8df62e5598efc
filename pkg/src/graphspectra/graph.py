"""Combinatorial and metric data model of the graph.

A metric graph is a finite multigraph whose edges carry positive half-lengths
l_e and per-edge mode multiplicities m_e.  Every edge contributes two
half-edges (a loop contributes two slots at the same vertex); the mode space
is the direct sum of one C^{m_e} block per half-edge.  On that space live the
two structure operators: the block-swap involution pairing the half-edges of
each edge, and the diagonal length operator.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np

from .errors import ValidationError

VertexId = Hashable
EdgeId = Hashable


@dataclass(frozen=True)
class Edge:
    id: EdgeId
    ends: tuple[VertexId, VertexId]
    half_length: float
    multiplicity: int = 1


@dataclass(frozen=True)
class HalfEdge:
    """One (vertex, edge) incidence slot."""

    edge_id: EdgeId
    slot: int           # 0 or 1, which end of the edge
    vertex: VertexId
    offset: int         # first row of this half-edge's block in the mode space
    modes: int

    @property
    def block(self) -> slice:
        return slice(self.offset, self.offset + self.modes)


@dataclass(frozen=True)
class HalfEdgeIndex:
    """Canonically ordered half-edges with block offsets into the mode space.

    Ordering is by str(edge id), then endpoint slot, so the operators built
    from it are reproducible bit-for-bit across runs.
    """

    entries: tuple[HalfEdge, ...]
    partner: tuple[int, ...]
    dim: int

    def at_vertex(self, v: VertexId) -> list[int]:
        return [k for k, he in enumerate(self.entries) if he.vertex == v]

    def vertex_rows(self, v: VertexId) -> np.ndarray:
        """Row indices of the mode space belonging to vertex v, in canonical order."""
        rows: list[int] = []
        for k in self.at_vertex(v):
            he = self.entries[k]
            rows.extend(range(he.offset, he.offset + he.modes))
        return np.asarray(rows, dtype=int)


@dataclass(frozen=True)
class MetricGraph:
    vertices: tuple[VertexId, ...]
    edges: tuple[Edge, ...]
    half_edges: HalfEdgeIndex

    @property
    def l_min(self) -> float:
        return min(e.half_length for e in self.edges)

    @property
    def l_max(self) -> float:
        return max(e.half_length for e in self.edges)

    @property
    def dim(self) -> int:
        return self.half_edges.dim

    def degree(self, v: VertexId) -> int:
        return len(self.half_edges.at_vertex(v))

    def edge(self, edge_id: EdgeId) -> Edge:
        for e in self.edges:
            if e.id == edge_id:
                return e
        raise KeyError(edge_id)


@dataclass(frozen=True)
class GraphOperators:
    """The involution sigma and diagonal length operator on the mode space."""

    sigma: np.ndarray       # (M, M) real permutation of blocks
    lengths: np.ndarray     # (M,) diagonal of L, value l_e on each block of e
    index: HalfEdgeIndex

    @property
    def dim(self) -> int:
        return self.index.dim

    @property
    def length_matrix(self) -> np.ndarray:
        return np.diag(self.lengths)


def _build_half_edge_index(edges: Sequence[Edge]) -> HalfEdgeIndex:
    ordered = sorted(edges, key=lambda e: str(e.id))
    entries: list[HalfEdge] = []
    offset = 0
    for e in ordered:
        for slot in (0, 1):
            entries.append(HalfEdge(e.id, slot, e.ends[slot], offset, e.multiplicity))
            offset += e.multiplicity
    partner = [0] * len(entries)
    by_edge: dict[EdgeId, list[int]] = {}
    for k, he in enumerate(entries):
        by_edge.setdefault(he.edge_id, []).append(k)
    for a, b in by_edge.values():
        partner[a], partner[b] = b, a
    return HalfEdgeIndex(tuple(entries), tuple(partner), offset)


def build_graph(spec: Mapping) -> MetricGraph:
    """Build and validate a MetricGraph from a parsed description.

    Expected keys: ``vertices`` (sequence of ids) and ``edges`` (sequence of
    mappings with ``id``, ``ends``, exactly one of ``half_length`` /
    ``full_length``, and optional ``multiplicity``).
    """
    vertices = list(spec.get("vertices", ()))
    if not vertices:
        raise ValidationError("graph has no vertices")
    seen_v = set()
    for v in vertices:
        if v in seen_v:
            raise ValidationError(f"duplicate vertex id: {v!r}")
        seen_v.add(v)

    raw_edges = spec.get("edges", ())
    if not raw_edges:
        raise ValidationError("graph has no edges")
    edges: list[Edge] = []
    seen_e = set()
    for item in raw_edges:
        eid = item["id"]
        if eid in seen_e:
            raise ValidationError(f"duplicate edge id: {eid!r}")
        seen_e.add(eid)
        ends = tuple(item["ends"])
        if len(ends) != 2:
            raise ValidationError(f"edge {eid!r}: ends must have exactly two entries")
        for v in ends:
            if v not in seen_v:
                raise ValidationError(f"edge {eid!r}: dangling endpoint {v!r}")
        if ("half_length" in item) == ("full_length" in item):
            raise ValidationError(
                f"edge {eid!r}: give exactly one of half_length / full_length"
            )
        l_e = float(item["half_length"]) if "half_length" in item else float(item["full_length"]) / 2.0
        if not l_e > 0:
            raise ValidationError(f"edge {eid!r}: nonpositive length {l_e}")
        m = int(item.get("multiplicity", 1))
        if m < 1:
            raise ValidationError(f"edge {eid!r}: multiplicity must be >= 1")
        edges.append(Edge(eid, ends, l_e, m))

    return MetricGraph(tuple(vertices), tuple(edges), _build_half_edge_index(edges))


def graph_operators(g: MetricGraph) -> GraphOperators:
    """The maps (phi_e) -> (phi_sigma(e)) and (phi_e) -> (l_e phi_e) in matrix form."""
    idx = g.half_edges
    m = idx.dim
    sigma = np.zeros((m, m))
    lengths = np.zeros(m)
    half_lengths = {e.id: e.half_length for e in g.edges}
    for k, he in enumerate(idx.entries):
        mate = idx.entries[idx.partner[k]]
        for j in range(he.modes):
            sigma[mate.offset + j, he.offset + j] = 1.0
        lengths[he.block] = half_lengths[he.edge_id]
    sigma.setflags(write=False)
    lengths.setflags(write=False)
    return GraphOperators(sigma, lengths, idx)


def _check_orthonormal(basis: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    basis = np.atleast_2d(np.asarray(basis, dtype=complex))
    if basis.shape[1] == 0:
        return basis
    gram = basis.conj().T @ basis
    defect = np.linalg.norm(gram - np.eye(basis.shape[1]))
    if defect > tol:
        raise ValidationError(f"basis not orthonormal: Gram defect {defect:.3e} > {tol:.1e}")
    return basis


def subspace_distance(v1: np.ndarray, v2: np.ndarray, tol: float = 1e-12) -> float:
    """Asymmetric distance dist(V, W) = ||P_W P_V - P_V|| between column spans.

    Inputs are matrices whose columns form orthonormal bases (checked to
    ``tol``).  The distance lies in [0, 1]; it is 0 iff V is a subspace of W.
    """
    v1 = _check_orthonormal(v1, tol)
    v2 = _check_orthonormal(v2, tol)
    n = v1.shape[0]
    if v2.shape[0] != n:
        raise ValidationError("bases live in different ambient dimensions")
    p_v = v1 @ v1.conj().T
    p_w = v2 @ v2.conj().T
    return float(np.linalg.norm(p_w @ p_v - p_v, ord=2))

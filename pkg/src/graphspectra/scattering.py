"""Vertex scattering matrices and global unitary families on the mode space.

A vertex carries a unitary involution S_v(0) acting on the direct sum of the
mode blocks of its incident half-edges.  The global matrix is block diagonal
over vertices (in vertex-grouped coordinates; here it is stored permuted into
the canonical half-edge ordering).  Energy-dependent families come in three
flavors: constant, generator form e^{i alpha B} S(0) with [B, S(0)] = 0, and
sampled grids with cubic interpolation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ValidationError
from .graph import MetricGraph, VertexId

INVOLUTION_TOL = 1e-10
FAMILY_TOL = 1e-8


@dataclass(frozen=True)
class VertexScattering:
    """Unitary involution on the mode space of a single vertex."""

    vertex: VertexId
    matrix: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.matrix, dtype=complex)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ValidationError(f"vertex {self.vertex!r}: matrix must be square")
        n = s.shape[0]
        if np.linalg.norm(s @ s.conj().T - np.eye(n)) > INVOLUTION_TOL:
            raise ValidationError(f"vertex {self.vertex!r}: matrix not unitary within {INVOLUTION_TOL}")
        if np.linalg.norm(s @ s - np.eye(n)) > INVOLUTION_TOL:
            raise ValidationError(f"vertex {self.vertex!r}: matrix not an involution within {INVOLUTION_TOL}")
        object.__setattr__(self, "matrix", s)


def kirchhoff_matrix(d: int, m: int = 1, vertex: VertexId = None) -> VertexScattering:
    """Standard coupling: S = (2/d) J - I, acting identically on each mode channel.

    Its +1 eigenspace is spanned by the all-ones vector per channel, which for
    the limit operator means continuity plus vanishing sum of inward
    derivatives at the vertex.  d = 1 gives the Neumann end [1].
    """
    if d < 1:
        raise ValidationError("degree must be >= 1")
    j = np.ones((d, d)) / d * 2.0 - np.eye(d)
    s = np.kron(j, np.eye(m))
    return VertexScattering(vertex, s.astype(complex))


def dirichlet_matrix(d: int, m: int = 1, vertex: VertexId = None) -> VertexScattering:
    """Decoupling condition S = -I (zero boundary values at the vertex)."""
    if d < 1:
        raise ValidationError("degree must be >= 1")
    return VertexScattering(vertex, -np.eye(d * m, dtype=complex))


def pm_eigenspaces(s: np.ndarray, tol: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases of the +1 and -1 eigenspaces of a unitary involution.

    A unitary involution is Hermitian, so an eigh of the Hermitian part is
    exact up to the input's own defect.  Eigenvalues farther than ``tol``
    from +-1 are rejected.
    """
    s = np.asarray(s, dtype=complex)
    herm = (s + s.conj().T) / 2.0
    w, q = np.linalg.eigh(herm)
    if np.any(np.abs(np.abs(w) - 1.0) > tol):
        worst = w[np.argmax(np.abs(np.abs(w) - 1.0))]
        raise ValidationError(f"eigenvalue {worst:.6g} of involution is farther than {tol} from +-1")
    plus = q[:, w > 0]
    minus = q[:, w < 0]
    return plus, minus


@dataclass(frozen=True)
class ScatteringFamily:
    """A unitary family alpha -> S(alpha) with S(alpha) S(-alpha) = I.

    kind is one of "constant", "generator", "sampled".  The generator form is
    S(alpha) = e^{i alpha B} S(0) with Hermitian B commuting with S(0), which
    forces unitarity and the inverse property by construction.  Sampled
    families interpolate a grid of matrices entrywise with cubic splines and
    record the grid's own unitarity defect as their tolerance.
    """

    base: np.ndarray
    kind: str
    generator: np.ndarray | None = None
    sample_alphas: np.ndarray | None = None
    sample_matrices: np.ndarray | None = None
    tolerance: float = FAMILY_TOL
    _gen_eig: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)
    _spline: object | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.base.shape[0]

    @property
    def alpha_domain(self) -> tuple[float, float] | None:
        if self.kind != "sampled":
            return None
        return float(self.sample_alphas[0]), float(self.sample_alphas[-1])

    @staticmethod
    def constant(s0: np.ndarray) -> "ScatteringFamily":
        s0 = np.asarray(s0, dtype=complex)
        _require_unitary(s0)
        return ScatteringFamily(base=s0, kind="constant")

    @staticmethod
    def generator_form(s0: np.ndarray, b: np.ndarray,
                       commutator_tol: float = INVOLUTION_TOL) -> "ScatteringFamily":
        s0 = np.asarray(s0, dtype=complex)
        b = np.asarray(b, dtype=complex)
        _require_unitary(s0)
        if np.linalg.norm(s0 @ s0 - np.eye(s0.shape[0])) > INVOLUTION_TOL:
            raise ValidationError("S(0) must be an involution")
        if np.linalg.norm(b - b.conj().T) > commutator_tol:
            raise ValidationError("generator must be Hermitian")
        comm = np.linalg.norm(b @ s0 - s0 @ b)
        if comm > commutator_tol:
            raise ValidationError(f"commutator [B, S(0)] too large: {comm:.3e}")
        w, q = np.linalg.eigh((b + b.conj().T) / 2.0)
        return ScatteringFamily(base=s0, kind="generator", generator=b, _gen_eig=(w, q))

    @staticmethod
    def from_samples(alphas: Sequence[float], matrices: Sequence[np.ndarray]) -> "ScatteringFamily":
        alphas = np.asarray(alphas, dtype=float)
        mats = np.asarray(matrices, dtype=complex)
        if alphas.ndim != 1 or len(alphas) < 4:
            raise ValidationError("sampled family needs at least 4 grid points")
        if np.any(np.diff(alphas) <= 0):
            raise ValidationError("sample grid must be strictly increasing")
        n = mats.shape[1]
        defect = max(
            float(np.linalg.norm(m @ m.conj().T - np.eye(n), ord=2)) for m in mats
        )
        spline = CubicSpline(alphas, mats, axis=0)
        base = _extrapolate_to_zero(alphas, mats) if alphas[0] > 0 else mats[0]
        return ScatteringFamily(
            base=base, kind="sampled", sample_alphas=alphas, sample_matrices=mats,
            tolerance=max(FAMILY_TOL, 10.0 * defect), _spline=spline,
        )

    def __call__(self, alpha: float) -> np.ndarray:
        if self.kind == "constant":
            return self.base
        if self.kind == "generator":
            w, q = self._gen_eig
            return (q * np.exp(1j * alpha * w)) @ q.conj().T @ self.base
        lo, hi = self.alpha_domain
        # spline extrapolation covers the short stretch below the first
        # sample (grids from scattering solves start at alpha > 0)
        if alpha < -1e-12 or alpha > hi + 1e-12:
            raise ValidationError(f"alpha={alpha:.6g} outside sampled domain [0, {hi:.6g}]")
        return self._spline(float(np.clip(alpha, -0.0, hi)))

    def derivative(self, alpha: float) -> np.ndarray:
        if self.kind == "constant":
            return np.zeros_like(self.base)
        if self.kind == "generator":
            return 1j * self.generator @ self(alpha)
        lo, hi = self.alpha_domain
        return self._spline(float(np.clip(alpha, -0.0, hi)), 1)

    def derivative_norm_bound(self) -> float:
        """sup of ||S'(alpha)|| over the family's domain (exact for generator form)."""
        if self.kind == "constant":
            return 0.0
        if self.kind == "generator":
            return float(np.linalg.norm(self.generator, 2))
        grid = np.linspace(*self.alpha_domain, 64)
        return max(float(np.linalg.norm(self.derivative(a), 2)) for a in grid)

    def prime_at_zero(self) -> np.ndarray:
        """S'(0); for sampled grids a Richardson-extrapolated central difference.

        S(-h) is obtained from the inverse property S(-h) = S(h)^{-1}, so the
        stencil only uses the sampled alpha > 0 side.
        """
        if self.kind == "constant":
            return np.zeros_like(self.base)
        if self.kind == "generator":
            return 1j * self.generator @ self.base
        h = float(self.sample_alphas[1] - self.sample_alphas[0])
        lo = self.alpha_domain[0]
        h = max(h, lo)

        def central(step):
            sp = self(step) if step >= lo else None
            if sp is None:
                raise ValidationError("sample grid does not reach small enough alpha")
            sm = np.linalg.inv(sp)
            return (sp - sm) / (2.0 * step)

        d1 = central(h)
        d2 = central(2.0 * h)
        return (4.0 * d1 - d2) / 3.0


def _require_unitary(s: np.ndarray, tol: float = INVOLUTION_TOL) -> None:
    n = s.shape[0]
    defect = np.linalg.norm(s @ s.conj().T - np.eye(n))
    if defect > tol:
        raise ValidationError(f"matrix not unitary: defect {defect:.3e}")


def _extrapolate_to_zero(alphas: np.ndarray, mats: np.ndarray) -> np.ndarray:
    k = min(4, len(alphas))
    a = alphas[:k]
    coeffs = np.polynomial.polynomial.polyfit(a, mats[:k].reshape(k, -1), deg=min(2, k - 1))
    return coeffs[0].reshape(mats.shape[1:])


def assemble_global(graph: MetricGraph,
                    per_vertex: Mapping[VertexId, VertexScattering]) -> ScatteringFamily:
    """Direct sum of the vertex matrices, permuted into canonical half-edge order.

    Every vertex must be covered and each block must match the total mode
    count of the half-edges at that vertex.
    """
    idx = graph.half_edges
    m = idx.dim
    s = np.zeros((m, m), dtype=complex)
    for v in graph.vertices:
        if v not in per_vertex:
            raise ValidationError(f"missing scattering matrix for vertex {v!r}")
        rows = idx.vertex_rows(v)
        block = per_vertex[v].matrix
        if block.shape[0] != len(rows):
            raise ValidationError(
                f"vertex {v!r}: block size {block.shape[0]} != sum of incident modes {len(rows)}"
            )
        s[np.ix_(rows, rows)] = block
    return ScatteringFamily.constant(s)


def vertex_blocks(graph: MetricGraph, s_global: np.ndarray,
                  offblock_tol: float = 1e-10) -> dict[VertexId, np.ndarray]:
    """Split a global matrix into its per-vertex blocks, checking block structure."""
    s_global = np.asarray(s_global, dtype=complex)
    idx = graph.half_edges
    mask = np.zeros(s_global.shape, dtype=bool)
    blocks: dict[VertexId, np.ndarray] = {}
    for v in graph.vertices:
        rows = idx.vertex_rows(v)
        blocks[v] = s_global[np.ix_(rows, rows)]
        mask[np.ix_(rows, rows)] = True
    off = np.linalg.norm(np.where(mask, 0.0, s_global))
    if off > offblock_tol:
        raise ValidationError(f"matrix is not block diagonal over vertices: off-block norm {off:.3e}")
    return blocks


def synthetic_family(s0: np.ndarray, b: np.ndarray) -> ScatteringFamily:
    """Test generator S(alpha) = e^{i alpha B} S(0); see ScatteringFamily.generator_form."""
    return ScatteringFamily.generator_form(s0, b)


def random_involution(n: int, rng: np.random.Generator, real: bool = False) -> np.ndarray:
    """Random unitary involution Q diag(+-1) Q*."""
    a = rng.standard_normal((n, n))
    if not real:
        a = a + 1j * rng.standard_normal((n, n))
    q, _ = np.linalg.qr(a)
    signs = np.where(rng.standard_normal(n) > 0, 1.0, -1.0)
    if np.all(signs == signs[0]):
        signs[0] = -signs[0]
    return (q * signs) @ q.conj().T


def commuting_generator(s0: np.ndarray, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Random Hermitian B projected onto the commutant of the involution s0.

    Averaging B with S0 B S0 projects onto the commutant because S0^2 = I.
    """
    n = s0.shape[0]
    b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    b = (b + b.conj().T) / 2.0
    b = (b + s0 @ b @ s0) / 2.0
    b = (b + b.conj().T) / 2.0
    norm = np.linalg.norm(b, 2)
    return b * (scale / norm) if norm > 0 else b

"""Root counting and tracking for the secular function det(I - e^{i z 2L} sigma S).

The family U(z) = e^{i z 2L} sigma S(.) is unitary and monotone: the Hermitian
generator D(z) = (1/i) U'(z) U(z)^{-1} equals 2L for frozen scattering data and
acquires an O(1/N) correction when S is evaluated at alpha = z/N.  Every
eigenphase of U(z) therefore increases with speed in [d_min, d_max], so the
number of solutions of det(I - U(z)) = 0 in an interval, counted with kernel
dimension, is the spectral flow of the eigenphases through 0 mod 2 pi.

The flow is computed without any branch pairing from the winding identity

    count(A, B) = ( Integral_A^B tr D(z) dz  -  Sum_j r_j(B)  +  Sum_j r_j(A) ) / 2 pi,

where r_j(z) are the instantaneous eigenphases folded to [0, 2 pi).  The sum
of continuous lifts is the argument of det U(z), whose derivative is tr D, and
subtracting the folded phases at the endpoints leaves exactly 2 pi times the
number of fold crossings.  The right-hand side is an integer up to quadrature
and rounding error, which gives a built-in consistency check.  Roots are then
isolated and refined by bisection on the count.  The determinant itself is
complex valued and has no usable sign, which is why counting is done in phase
space throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import schur

from .errors import NumericalError, ValidationError
from .graph import GraphOperators
from .scattering import ScatteringFamily

TWO_PI = 2.0 * math.pi
_FOLD_TOL = 1e-12          # phases this close to a multiple of 2 pi sit "on" it


@dataclass(frozen=True)
class UnitaryFamily:
    """U(z) = e^{i z 2L} sigma S(alpha0) (frozen) or e^{i z 2L} sigma S(z/N) (scaled)."""

    operators: GraphOperators
    family: ScatteringFamily
    mode: str = "frozen"          # "frozen" | "scaled"
    alpha0: float = 0.0
    scale_n: float | None = None

    def __post_init__(self):
        if self.mode not in ("frozen", "scaled"):
            raise ValidationError(f"unknown mode {self.mode!r}")
        if self.mode == "scaled" and not (self.scale_n and self.scale_n > 0):
            raise ValidationError("scaled mode needs a positive N")
        if self.family.dim != self.operators.dim:
            raise ValidationError("scattering family dimension does not match the graph")

    @property
    def dim(self) -> int:
        return self.operators.dim

    def alpha_at(self, z: float) -> float:
        return self.alpha0 if self.mode == "frozen" else z / self.scale_n

    def evaluate(self, z: float) -> np.ndarray:
        """exp(i z 2L) sigma S(.) as a dense unitary matrix."""
        s = self.family(self.alpha_at(z))
        phases = np.exp(1j * z * 2.0 * self.operators.lengths)
        return phases[:, None] * (self.operators.sigma @ s)

    def generator(self, z: float) -> np.ndarray:
        """Hermitian D(z) = (1/i) U' U^{-1} = 2L (+ (1/(iN)) U S^{-1} S' U^{-1} if scaled)."""
        d = np.diag(2.0 * self.operators.lengths).astype(complex)
        if self.mode == "scaled":
            alpha = self.alpha_at(z)
            u = self.evaluate(z)
            s = self.family(alpha)
            sp = self.family.derivative(alpha)
            d = d + u @ s.conj().T @ sp @ u.conj().T / (1j * self.scale_n)
        return (d + d.conj().T) / 2.0

    def trace_generator(self, z: float) -> float:
        if self.mode == "frozen":
            return 2.0 * float(self.operators.lengths.sum())
        return float(np.real(np.trace(self.generator(z))))


def monotonicity_certificate(fam: UnitaryFamily, z: float | Sequence[float]) -> tuple[float, float]:
    """(d_min, d_max) over the Hermitian part of D at the given z (or z samples).

    Raises NumericalError if the family fails to be monotone there, since all
    counting logic depends on d_min > 0.
    """
    zs = np.atleast_1d(np.asarray(z, dtype=float))
    d_min, d_max = math.inf, -math.inf
    for zz in zs:
        w = np.linalg.eigvalsh(fam.generator(zz))
        d_min = min(d_min, float(w[0]))
        d_max = max(d_max, float(w[-1]))
    if d_min <= 0:
        raise NumericalError(f"family is not monotone: d_min = {d_min:.3e} <= 0")
    return d_min, d_max


def _interval_certificate(fam: UnitaryFamily, a: float, b: float) -> tuple[float, float]:
    if fam.mode == "frozen":
        lengths = fam.operators.lengths
        return 2.0 * float(lengths.min()), 2.0 * float(lengths.max())
    samples = np.linspace(a, b, 9)
    d_min, d_max = monotonicity_certificate(fam, samples)
    # sampled certificate: pad the range against variation between samples
    return 0.95 * d_min, 1.05 * d_max


def _eig_unitary(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenphases in (-pi, pi] and orthonormal eigenvectors of a unitary matrix.

    Complex Schur of a normal matrix is diagonal up to roundoff and returns a
    unitary eigenvector matrix, which plain eig does not guarantee inside
    degenerate clusters.
    """
    t, zmat = schur(u, output="complex")
    phases = np.angle(np.diag(t))
    order = np.argsort(phases)
    return phases[order], zmat[:, order]


# 16-point Gauss-Legendre nodes for the trace integral in scaled mode
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


class _FlowCounter:
    """Exact spectral-flow counts on subintervals, with phase data memoized per z."""

    def __init__(self, fam: UnitaryFamily):
        self.fam = fam
        self._folded: dict[float, np.ndarray] = {}
        self._trace: dict[tuple[float, float], float] = {}

    def folded_phases(self, z: float) -> np.ndarray:
        got = self._folded.get(z)
        if got is None:
            got = np.angle(np.linalg.eigvals(self.fam.evaluate(z))) % TWO_PI
            self._folded[z] = got
        return got

    def trace_integral(self, a: float, b: float) -> float:
        if self.fam.mode == "frozen":
            return 2.0 * float(self.fam.operators.lengths.sum()) * (b - a)
        key = (a, b)
        got = self._trace.get(key)
        if got is None:
            # analytic integrand; composite 16-point Gauss per unit-ish panel
            n_panels = max(1, int(math.ceil((b - a) / 0.5)))
            edges = np.linspace(a, b, n_panels + 1)
            total = 0.0
            for lo, hi in zip(edges, edges[1:]):
                mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
                total += half * sum(
                    w * self.fam.trace_generator(mid + half * x)
                    for x, w in zip(_GL_X, _GL_W)
                )
            got = total
            self._trace[key] = got
        return got

    def count(self, a: float, b: float) -> int:
        """Roots in the open interval (a, b), counted with kernel dimension.

        A root sitting within the fold tolerance of an endpoint counts as
        outside.  The winding identity makes the raw value an integer up to
        quadrature error; a drift beyond 0.05 trips a consistency error.
        """
        if b <= a:
            return 0
        fold_a = self.folded_phases(a)
        fold_b = self.folded_phases(b)
        r_a = float(fold_a.sum())
        # endpoint roots: fold maps them to ~0; move the B-side ones to 2 pi
        # so they are excluded, and leave the A-side ones at 0 (also excluded)
        r_b = float(np.where(fold_b <= _FOLD_TOL, TWO_PI, fold_b).sum())
        raw = (self.trace_integral(a, b) - r_b + r_a) / TWO_PI
        n = round(raw)
        if abs(raw - n) > 0.05:
            raise NumericalError(
                f"spectral flow count is not an integer on [{a:.6g}, {b:.6g}]: {raw:.6f}"
            )
        return max(int(n), 0)


def count_roots(fam: UnitaryFamily, a: float, b: float) -> int:
    """Sum of dim Ker(I - U(z)) over z in the open interval (A, B)."""
    if b < a:
        raise ValidationError("interval must satisfy A <= B")
    # evaluating the certificate also rejects non-monotone families up front
    _interval_certificate(fam, a, max(b, a + 1e-9))
    return _FlowCounter(fam).count(a, b)


def independence_interval(fam: UnitaryFamily, a: float, b: float) -> float:
    """Length 2 d_min / (d_2 M) below which kernel spaces at distinct roots stay independent.

    d_2 bounds ||U''|| and is estimated by sampled second differences, which is
    all this diagnostic needs.
    """
    d_min, _ = _interval_certificate(fam, a, b)
    dz = 1e-4
    d2 = 0.0
    for z in np.linspace(a + dz, max(b - dz, a + dz), 7):
        upp = fam.evaluate(z + dz) - 2.0 * fam.evaluate(z) + fam.evaluate(z - dz)
        d2 = max(d2, float(np.linalg.norm(upp, 2)) / dz ** 2)
    if d2 == 0.0:
        return math.inf
    return 2.0 * d_min / (d2 * fam.dim)


@dataclass(frozen=True)
class RootCluster:
    """A zero of the secular function with its kernel data."""

    z: float
    multiplicity: int
    kernel_basis: np.ndarray       # (M, multiplicity), orthonormal
    phase_window: float
    merged: bool = False           # True when sub-resolution roots were combined

    @property
    def projection(self) -> np.ndarray:
        return self.kernel_basis @ self.kernel_basis.conj().T


def locate_roots(fam: UnitaryFamily, a: float, b: float, tol: float = 1e-11,
                 merge_window: float | None = None) -> list[RootCluster]:
    """All roots of det(I - U(z)) in (A, B), refined to |z - root| <= tol.

    Bisection on the flow count isolates the roots; one Newton step on the
    small eigenphase polishes each.  Genuinely distinct roots closer together
    than the merge window (default 1e-8 d_min, the resolution limit stated for
    the phase tracking) are combined with summed multiplicity and flagged.
    The summed multiplicities equal count_roots(A, B) by construction.
    """
    if b < a:
        raise ValidationError("interval must satisfy A <= B")
    d_min, d_max = _interval_certificate(fam, a, max(b, a + 1e-9))
    counter = _FlowCounter(fam)
    total = counter.count(a, b)
    if merge_window is None:
        merge_window = max(1e-8 * d_min, 4.0 * tol)

    found: list[tuple[float, int]] = []       # (z, multiplicity)
    width_min = min(2.0 * tol, merge_window)
    stack = [(a, b, total)]
    while stack:
        lo, hi, n = stack.pop()
        if n <= 0:
            continue
        if hi - lo <= width_min:
            found.append((0.5 * (lo + hi), n))
            continue
        mid = 0.5 * (lo + hi)
        n_lo = counter.count(lo, mid)
        n_hi = counter.count(mid, hi)
        at_mid = n - n_lo - n_hi
        if at_mid > 0:
            found.append((mid, at_mid))
        elif at_mid < 0:
            raise NumericalError(f"flow count inconsistency near z = {mid:.8g}")
        stack.append((lo, mid, n_lo))
        stack.append((mid, hi, n_hi))
    found.sort()

    clusters: list[RootCluster] = []
    i = 0
    while i < len(found):
        j = i + 1
        while j < len(found) and found[j][0] - found[j - 1][0] <= merge_window:
            j += 1
        members = found[i:j]
        z_c = sum(z * m for z, m in members) / sum(m for _, m in members)
        mult = sum(m for _, m in members)
        z_c = _newton_polish(fam, z_c, d_min)
        phases, vecs = _eig_unitary(fam.evaluate(z_c))
        dist = np.abs(phases)
        order = np.argsort(dist)
        kernel = vecs[:, order[:mult]]
        window = float(dist[order[:mult]].max())
        merged = len(members) > 1 and (members[-1][0] - members[0][0]) > 10.0 * tol
        clusters.append(RootCluster(float(z_c), mult, kernel, window, merged))
        i = j
    return clusters


def _newton_polish(fam: UnitaryFamily, z: float, d_min: float) -> float:
    """One or two Newton steps on the smallest eigenphase of U(z)."""
    for _ in range(2):
        phases, vecs = _eig_unitary(fam.evaluate(z))
        k = int(np.argmin(np.abs(phases)))
        theta = float(phases[k])
        if abs(theta) < 1e-14:
            return z
        phi = vecs[:, k]
        slope = float(np.real(np.conj(phi) @ (fam.generator(z) @ phi)))
        if slope < 0.1 * d_min:
            return z
        z = z - theta / slope
    return z


# ---------------------------------------------------------------------------
# branches z_i^rho(alpha) and their intersections with z = alpha N
# ---------------------------------------------------------------------------

@dataclass
class Branch:
    """One analytic continuation of a secular root in the alpha direction."""

    root_index: int
    rho: int
    alphas: list[float] = field(default_factory=list)
    zs: list[float] = field(default_factory=list)
    projections: list[np.ndarray] = field(default_factory=list)
    slope_bound: float = 0.0
    multiplicity: int = 1

    @property
    def z0(self) -> float:
        return self.zs[0]

    def interp_z(self, alpha: float) -> float:
        return float(np.interp(alpha, self.alphas, self.zs))

    def nearest_projection(self, alpha: float) -> np.ndarray:
        k = int(np.argmin(np.abs(np.asarray(self.alphas) - alpha)))
        return self.projections[k]


def _frozen(ops: GraphOperators, family: ScatteringFamily, alpha: float) -> UnitaryFamily:
    return UnitaryFamily(ops, family, mode="frozen", alpha0=alpha)


def _branch_slope(ops: GraphOperators, family: ScatteringFamily,
                  z: float, alpha: float, basis: np.ndarray) -> float:
    """dz/dalpha along a branch: -<e^{i z 2L}(1/i) sigma S' phi, phi> / <2L phi, phi>.

    Averaged over the kernel basis (trace against the projection) so clusters
    that have not split yet get the mean slope of their members.
    """
    sp = family.derivative(alpha)
    phase = np.exp(1j * z * 2.0 * ops.lengths)
    top = phase[:, None] * (ops.sigma @ sp) / 1j
    num = 0.0
    den = 0.0
    for k in range(basis.shape[1]):
        phi = basis[:, k]
        num += float(np.real(np.conj(phi) @ (top @ phi)))
        den += float(np.real(np.conj(phi) @ (2.0 * ops.lengths * phi)))
    return -num / den


def _locate_near(ops, family, alpha: float, z_center: float, radius: float,
                 tol: float) -> list[RootCluster]:
    fam = _frozen(ops, family, alpha)
    return locate_roots(fam, max(z_center - radius, 1e-12), z_center + radius, tol=tol)


def track_branch(ops: GraphOperators, family: ScatteringFamily, root: RootCluster,
                 alpha_grid: Sequence[float], tol: float = 1e-11) -> list[Branch]:
    """Continue a root cluster through the alpha grid, splitting at bifurcations.

    Predictor: the closed-form slope above.  Corrector: re-locate the
    eigenphase zeros of the frozen family in a window around the prediction.
    When the kernel dimension of a tracked thread changes between grid points
    the step is refined by factor 8 up to 3 times before the thread is split.
    """
    alpha_grid = list(map(float, alpha_grid))
    if not alpha_grid or alpha_grid[0] != 0.0:
        raise ValidationError("alpha grid must start at 0")
    if any(b <= a for a, b in zip(alpha_grid, alpha_grid[1:])):
        raise ValidationError("alpha grid must be strictly increasing")
    if family.kind == "sampled":
        lo, hi = family.alpha_domain
        if alpha_grid[-1] > hi + 1e-12:
            raise ValidationError("alpha grid exceeds the sampled family domain")

    l_min = float(ops.lengths.min())
    c0 = family.derivative_norm_bound() / (2.0 * l_min)

    threads: list[Branch] = [Branch(0, 1, [0.0], [root.z], [root.projection],
                                    slope_bound=c0, multiplicity=root.multiplicity)]
    if family.kind == "constant":
        for thread in threads:
            for alpha in alpha_grid[1:]:
                thread.alphas.append(alpha)
                thread.zs.append(root.z)
                thread.projections.append(root.projection)
        return threads

    def continue_thread(thread: Branch, alpha_new: float, depth: int) -> list[Branch]:
        alpha_old = thread.alphas[-1]
        z_old = thread.zs[-1]
        basis_old = _projection_basis(thread.projections[-1], thread.multiplicity)
        d_alpha = alpha_new - alpha_old
        slope = _branch_slope(ops, family, z_old, alpha_old, basis_old)
        z_pred = z_old + slope * d_alpha
        radius = (abs(slope) + 0.5 * c0) * d_alpha + 1e-6
        clusters = _locate_near(ops, family, alpha_new, z_pred, radius, tol)
        clusters = _filter_by_overlap(clusters, basis_old)
        found = sum(c.multiplicity for c in clusters)
        if found != thread.multiplicity or len(clusters) > 1:
            if depth < 3:
                refined = np.linspace(alpha_old, alpha_new, 9)[1:]
                parts = [thread]
                for a_mid in refined:
                    next_parts: list[Branch] = []
                    for p in parts:
                        next_parts.extend(continue_thread(p, float(a_mid), depth + 1))
                    parts = next_parts
                return parts
            if found != thread.multiplicity:
                raise NumericalError(
                    f"branch lost near alpha = {alpha_new:.6g}: expected kernel dim "
                    f"{thread.multiplicity}, found {found} (last good alpha = {alpha_old:.6g})"
                )
            # clean bifurcation: split the thread
            out = []
            for c in clusters:
                child = Branch(thread.root_index, 0, list(thread.alphas), list(thread.zs),
                               list(thread.projections), slope_bound=c0,
                               multiplicity=c.multiplicity)
                child.alphas.append(alpha_new)
                child.zs.append(c.z)
                child.projections.append(c.projection)
                out.append(child)
            return out
        c = clusters[0]
        thread.alphas.append(alpha_new)
        thread.zs.append(c.z)
        thread.projections.append(c.projection)
        return [thread]

    for alpha in alpha_grid[1:]:
        new_threads: list[Branch] = []
        for thread in threads:
            new_threads.extend(continue_thread(thread, alpha, depth=0))
        threads = new_threads

    threads.sort(key=lambda t: t.zs[-1])
    for rho, t in enumerate(threads, start=1):
        t.rho = rho
    return threads


def _projection_basis(p: np.ndarray, mult: int) -> np.ndarray:
    w, q = np.linalg.eigh((p + p.conj().T) / 2.0)
    return q[:, np.argsort(w)[::-1][:mult]]


def _filter_by_overlap(clusters: list[RootCluster], basis_old: np.ndarray) -> list[RootCluster]:
    """Keep clusters whose kernels overlap the tracked subspace."""
    if len(clusters) <= 1:
        return clusters
    kept = []
    for c in clusters:
        ov = np.linalg.norm(basis_old.conj().T @ c.kernel_basis, 2)
        if ov > 0.3:
            kept.append(c)
    return kept or clusters


def branch_point(ops: GraphOperators, family: ScatteringFamily, branch: Branch,
                 alpha: float, tol: float = 1e-12) -> tuple[float, np.ndarray]:
    """Evaluate z_i^rho(alpha) off-grid by locating the branch's root exactly."""
    z_guess = branch.interp_z(alpha)
    gap = float(np.min(np.abs(np.asarray(branch.alphas) - alpha)))
    radius = max(branch.slope_bound * (gap + 1e-3) + 1e-5, 1e-4)
    clusters = _locate_near(ops, family, alpha, z_guess, radius, tol)
    if not clusters:
        raise NumericalError(f"branch evaluation found no root near z = {z_guess:.6g}")
    basis_old = _projection_basis(branch.nearest_projection(alpha), branch.multiplicity)
    clusters = _filter_by_overlap(clusters, basis_old)
    best = min(clusters, key=lambda c: abs(c.z - z_guess))
    return best.z, best.projection


@dataclass(frozen=True)
class Intersection:
    root_index: int
    rho: int
    n_value: float
    alpha: float
    z: float
    residual: float


def intersect_with_line(ops: GraphOperators, family: ScatteringFamily, branch: Branch,
                        n_value: float, tol: float = 1e-12) -> Intersection:
    """The unique solution of alpha N = z_i^rho(alpha), by Newton on z - z_i^rho(z/N).

    Admissibility: N must be at least C_0 + z_i / alpha_max, which guarantees
    the line z = alpha N crosses the branch once inside its alpha domain.
    """
    alpha_max = branch.alphas[-1]
    n_min = branch.slope_bound + branch.z0 / alpha_max
    if n_value < n_min:
        raise ValidationError(
            f"N = {n_value:.6g} below admissibility bound N_0 = {n_min:.6g}"
        )
    alpha = branch.z0 / n_value
    z = branch.z0
    for _ in range(60):
        z_branch, proj = branch_point(ops, family, branch, alpha, tol)
        g = alpha * n_value - z_branch
        if abs(g) <= max(tol * 10.0, 1e-13 * n_value):
            break
        basis = _projection_basis(proj, branch.multiplicity)
        slope = _branch_slope(ops, family, z_branch, alpha, basis)
        alpha = alpha - g / (n_value - slope)
        if not (0 <= alpha <= alpha_max * 1.01):
            raise NumericalError("Newton iterate left the branch domain")
    else:
        raise NumericalError(f"intersection Newton failed to converge for N = {n_value:.6g}")
    z_final, _ = branch_point(ops, family, branch, alpha, tol)
    return Intersection(branch.root_index, branch.rho, n_value, alpha, z_final,
                        abs(alpha * n_value - z_final))


@dataclass(frozen=True)
class LeadingTermReport:
    z0: float
    n_values: np.ndarray
    errors: np.ndarray          # |alpha N - z_i| per N
    fitted_order: float         # slope of log err vs log N (sign flipped)
    constant: float             # max of err * N, so err <= constant / N holds
    exact: bool                 # all errors at rounding level (flat branch)
    flagged: bool               # fitted order below 1


def leading_term_check(ops: GraphOperators, family: ScatteringFamily, branch: Branch,
                       n_list: Sequence[float]) -> LeadingTermReport:
    """Fit alpha N = z_i + O(1/N) over the given N values and report the order."""
    n_values = np.asarray(sorted(n_list), dtype=float)
    errors = []
    for n in n_values:
        hit = intersect_with_line(ops, family, branch, n)
        errors.append(abs(hit.alpha * n - branch.z0))
    errors = np.asarray(errors)
    exact = bool(np.all(errors < 1e-10))
    if exact:
        order = math.inf
        const = float(errors.max(initial=0.0))
    else:
        mask = errors > 1e-14
        coeffs = np.polyfit(np.log(n_values[mask]), np.log(errors[mask]), 1)
        order = float(-coeffs[0])
        const = float((errors * n_values).max())
    return LeadingTermReport(branch.z0, n_values, errors, order, const,
                             exact, flagged=(not exact and order < 0.9))


@dataclass(frozen=True)
class StabilityReport:
    epsilon: float
    bound: float
    nearest_root: float | None
    distance: float | None
    within_bound: bool | None


def stability_residual(fam: UnitaryFamily, z0: float, phi: np.ndarray,
                       verify: bool = True) -> StabilityReport:
    """epsilon = ||(I - U(z0)) phi|| and the guaranteed distance 2 epsilon / d_min.

    With verify=True the bound is checked against located roots: some true
    root must lie within 2 epsilon / d_min of z0.
    """
    phi = np.asarray(phi, dtype=complex)
    nrm = np.linalg.norm(phi)
    if abs(nrm - 1.0) > 1e-8:
        phi = phi / nrm
    eps = float(np.linalg.norm(phi - fam.evaluate(z0) @ phi))
    d_min, _ = monotonicity_certificate(fam, z0)
    bound = 2.0 * eps / d_min
    if not verify:
        return StabilityReport(eps, bound, None, None, None)
    pad = max(bound * 1.5, 1e-8)
    clusters = locate_roots(fam, max(z0 - pad, 1e-12), z0 + pad)
    if not clusters:
        return StabilityReport(eps, bound, None, None, False if bound < pad else None)
    zs = np.asarray([c.z for c in clusters])
    k = int(np.argmin(np.abs(zs - z0)))
    dist = float(abs(zs[k] - z0))
    return StabilityReport(eps, bound, float(zs[k]), dist, dist <= bound * (1 + 1e-8) + 1e-12)

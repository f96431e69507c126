"""Dense linear-algebra kernel: matrix exponential, clustered eigendecomposition,
real spans of complex eigenvectors, generalized eigenspaces and subspace geometry.

Everything here is a pure function of its inputs; all returned objects are
immutable. Matrices are small (n <= ~50) and dense; scipy/LAPACK does the raw
decompositions while this module owns the tolerance logic layered on top.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import InvalidArgumentError, NumericalFailureError

__all__ = [
    "Tolerances",
    "EigenPair",
    "Spectrum",
    "Subspace",
    "expm",
    "eig",
    "rspan",
    "generalized_eigenspace",
    "subspace_distance",
    "orthonormal_columns",
    "null_space",
    "subspace_intersection",
    "subspace_contains",
    "defectiveness",
]

DEFECTIVE = "defective"
NON_DEFECTIVE = "non-defective"
AMBIGUOUS = "ambiguous"

# Width (multiplicative) of the band around a rank/magnitude threshold inside
# which a decision is reported as ambiguous rather than silently taken.
_AMBIGUITY_BAND = 4.0


@dataclass(frozen=True)
class Tolerances:
    """Numerical decision thresholds used throughout the pipeline.

    tol_eig    - eigenvalue clustering (relative, scaled by max(1, rho(M)))
    tol_rank   - rank decisions: sigma_k > tol_rank * sigma_1 counts
    tol_orth   - orthonormality of subspace bases
    tol_member - cone/subspace membership distance
    tol_conv   - iteration/bisection convergence
    """

    tol_eig: float = 1e-7
    tol_rank: float = 1e-6
    tol_orth: float = 1e-8
    tol_member: float = 1e-7
    tol_conv: float = 1e-9

    def __post_init__(self):
        for name in ("tol_eig", "tol_rank", "tol_orth", "tol_member", "tol_conv"):
            v = getattr(self, name)
            if not (v > 0.0):
                raise InvalidArgumentError(f"{name} must be strictly positive, got {v}")
        if self.tol_rank < 8 * np.finfo(float).eps:
            raise InvalidArgumentError("tol_rank below machine-epsilon scale")

    def replace(self, **kw):
        d = {k: getattr(self, k) for k in
             ("tol_eig", "tol_rank", "tol_orth", "tol_member", "tol_conv")}
        d.update(kw)
        return Tolerances(**d)


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class EigenPair:
    """One clustered eigenvalue with a representative unit eigenvector."""

    value: complex
    vector: np.ndarray          # complex unit vector
    algebraic_mult: int
    geometric_mult: int

    @property
    def is_real(self):
        return self.value.imag == 0.0


@dataclass(frozen=True)
class Spectrum:
    """Clustered spectrum of a real square matrix."""

    pairs: tuple
    spectral_radius: float
    matrix: np.ndarray = field(repr=False)
    tol: Tolerances = field(repr=False, default=DEFAULT_TOL)

    @property
    def eigenvalues(self):
        return tuple(p.value for p in self.pairs)

    def find(self, lam):
        """Return the EigenPair matching lam within the clustering tolerance."""
        scale = max(1.0, self.spectral_radius)
        best, best_d = None, np.inf
        for p in self.pairs:
            d = abs(p.value - lam)
            if d < best_d:
                best, best_d = p, d
        if best is None or best_d > 2 * self.tol.tol_eig * scale:
            raise InvalidArgumentError(
                f"{lam} is not an eigenvalue (closest cluster at distance {best_d:.3e})")
        return best

    def magnitudes(self):
        """Distinct eigenvalue magnitudes, clustered, descending."""
        scale = max(1.0, self.spectral_radius)
        mags = sorted((abs(p.value) for p in self.pairs), reverse=True)
        out = []
        for m in mags:
            if not out or out[-1] - m > self.tol.tol_eig * scale:
                out.append(m)
        return out


@dataclass(frozen=True)
class Subspace:
    """Linear subspace of R^n held as an orthonormal basis (possibly empty)."""

    ambient_dim: int
    basis: np.ndarray  # shape (ambient_dim, dim), orthonormal columns

    @property
    def dim(self):
        return self.basis.shape[1]

    def project(self, x):
        """Orthogonal projection of x onto the subspace."""
        if self.dim == 0:
            return np.zeros(self.ambient_dim)
        return self.basis @ (self.basis.T @ x)

    def projector(self):
        return self.basis @ self.basis.T

    def contains_vector(self, x, tol=1e-9):
        x = np.asarray(x, float)
        nx = np.linalg.norm(x)
        if nx == 0.0:
            return True
        return np.linalg.norm(x - self.project(x)) <= tol * nx


def _as_square_matrix(M, name="M"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidArgumentError(f"{name} must be a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidArgumentError(f"{name} must be finite-valued")
    return M


def expm(M):
    """Matrix exponential e^M (scaling-and-squaring, via scipy)."""
    M = _as_square_matrix(M)
    return sla.expm(M)


def _cluster_scalars(values, tol_abs):
    """Group complex scalars whose pairwise distance is <= tol_abs.

    Single-linkage on the complete graph; n is tiny so O(n^2) is fine.
    Returns a list of index lists.
    """
    n = len(values)
    parent = list(range(n))

    def root(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= tol_abs:
                ri, rj = root(i), root(j)
                if ri != rj:
                    parent[rj] = ri
    groups = {}
    for i in range(n):
        groups.setdefault(root(i), []).append(i)
    return list(groups.values())


def eig(M, tol=DEFAULT_TOL):
    """Clustered eigendecomposition with algebraic/geometric multiplicities.

    Eigenvalues within tol.tol_eig * max(1, rho(M)) of each other are merged
    into one cluster; the geometric multiplicity is dim ker(M - lambda I)
    computed from singular values with tol.tol_rank.
    """
    M = _as_square_matrix(M)
    n = M.shape[0]
    try:
        w, v = sla.eig(M)
    except sla.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails here
        raise NumericalFailureError(f"eigendecomposition failed: {exc}") from exc
    rho = float(np.max(np.abs(w))) if n else 0.0
    tol_abs = tol.tol_eig * max(1.0, rho)

    pairs = []
    for idx in _cluster_scalars(list(w), tol_abs):
        lam = complex(np.mean(w[idx]))
        if abs(lam.imag) <= tol_abs:
            lam = complex(lam.real, 0.0)
        # representative eigenvector: member with the largest residual margin
        vec = v[:, idx[0]]
        if lam.imag == 0.0 and np.max(np.abs(vec.imag)) <= 1e-8 * np.max(np.abs(vec)):
            vec = vec.real.astype(complex)
        vec = vec / np.linalg.norm(vec)
        # fix phase for conjugate symmetry: largest-magnitude entry made
        # real-positive, so conjugate eigenvalues get conjugate vectors
        k = int(np.argmax(np.abs(vec)))
        phase = vec[k] / abs(vec[k])
        vec = vec / phase
        if lam.imag < 0:
            continue  # emitted via its conjugate below
        geo = n - _rank_from_singular_values(
            sla.svdvals(M - lam * np.eye(n)), tol.tol_rank)
        alg = len(idx)
        geo = max(1, min(geo, alg))
        if lam.imag > 0:
            pairs.append(EigenPair(lam, vec, alg, geo))
            pairs.append(EigenPair(lam.conjugate(), vec.conjugate(), alg, geo))
        else:
            pairs.append(EigenPair(lam, vec, alg, geo))

    pairs.sort(key=lambda p: (-abs(p.value), -p.value.real, p.value.imag))
    spec = Spectrum(tuple(pairs), rho, M, tol)
    total = sum(p.algebraic_mult for p in spec.pairs)
    if total != n:
        raise NumericalFailureError(
            "eigenvalue clustering lost multiplicity "
            f"(sum {total} != n {n}); eigenvalues {w}",
            residuals=w)
    return spec


def _rank_from_singular_values(s, tol_rank):
    if len(s) == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol_rank * s[0]))


def defectiveness(M, lam, tol=DEFAULT_TOL, spectrum=None):
    """Tri-state defectiveness of eigenvalue lam of M.

    Returns one of DEFECTIVE / NON_DEFECTIVE / AMBIGUOUS. Ambiguity arises when
    a singular value of (M - lam I) sits inside the rank-decision band, or the
    clustered algebraic multiplicity is itself a near-tie.
    """
    M = _as_square_matrix(M)
    spec = spectrum if spectrum is not None else eig(M, tol)
    p = spec.find(lam)
    s = sla.svdvals(M - p.value * np.eye(M.shape[0]))
    thr = tol.tol_rank * s[0] if s[0] > 0 else 0.0
    if thr > 0 and np.any((s > thr / _AMBIGUITY_BAND) & (s < thr * _AMBIGUITY_BAND)):
        return AMBIGUOUS
    return DEFECTIVE if p.geometric_mult < p.algebraic_mult else NON_DEFECTIVE


def orthonormal_columns(cols, ambient_dim, tol_rank=1e-10):
    """Orthonormal basis of the column span of `cols` (SVD-based)."""
    A = np.asarray(cols, float)
    if A.size == 0:
        return Subspace(ambient_dim, np.zeros((ambient_dim, 0)))
    A = A.reshape(ambient_dim, -1)
    u, s, _ = sla.svd(A, full_matrices=False)
    r = _rank_from_singular_values(s, tol_rank)
    return Subspace(ambient_dim, u[:, :r].copy())


def null_space(M, tol_rank=1e-6):
    """Orthonormal basis of ker(M) (real or complex), thresholded on sigma_1."""
    M = np.asarray(M)
    u, s, vh = sla.svd(M)
    r = _rank_from_singular_values(s, tol_rank)
    return vh[r:].conj().T


def rspan(v):
    """Real span of a complex vector: span_R{v + v*, i(v - v*)}.

    A line if v is real up to a complex phase, otherwise a plane.
    """
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1:
        raise InvalidArgumentError("rspan expects a vector")
    if np.linalg.norm(v) == 0.0:
        raise InvalidArgumentError("rspan of the zero vector is undefined")
    n = v.shape[0]
    cols = np.column_stack([v.real, v.imag])
    return orthonormal_columns(cols, n, tol_rank=1e-9)


def generalized_eigenspace(M, lam, tol=DEFAULT_TOL, spectrum=None):
    """Real form of the generalized eigenspace of lam (joint with lam* if complex).

    Computed as ker((M - lam I)(M - lam* I))^n for non-real lam and
    ker(M - lam I)^n for real lam; dimension equals the algebraic multiplicity
    (doubled for a conjugate pair).
    """
    M = _as_square_matrix(M)
    n = M.shape[0]
    spec = spectrum if spectrum is not None else eig(M, tol)
    p = spec.find(lam)
    lam = p.value
    if lam.imag == 0.0:
        B = M - lam.real * np.eye(n)
    else:
        B = M @ M - 2.0 * lam.real * M + (abs(lam) ** 2) * np.eye(n)
    scale = np.linalg.norm(B, 2)
    if scale == 0.0:
        return Subspace(n, np.eye(n))
    B = B / scale
    # kernel powers capped at n (Cayley-Hamilton); stop once the dimension
    # stabilizes, which keeps the power at the Jordan index and well conditioned
    P = np.eye(n)
    basis = np.zeros((n, 0))
    for _ in range(n):
        P = P @ B
        nb = null_space(P, tol.tol_rank)
        if nb.shape[1] == basis.shape[1]:
            break
        basis = nb
    return Subspace(n, np.real(basis))


def subspace_distance(x, S):
    """Distance from a unit vector to the nearest unit vector of subspace S.

    Equals sqrt(2 * (1 - ||proj_S x||)); sqrt(2) when x is orthogonal to S or
    S is trivial.
    """
    x = np.asarray(x, float)
    nx = np.linalg.norm(x)
    if not np.isfinite(nx) or abs(nx - 1.0) > 1e-6:
        raise InvalidArgumentError("subspace_distance expects a unit vector")
    if S.dim == 0:
        return float(np.sqrt(2.0))
    c = min(1.0, float(np.linalg.norm(S.basis.T @ x)))
    return float(np.sqrt(max(0.0, 2.0 * (1.0 - c))))


def subspace_intersection(S1, S2, tol_rank=1e-8):
    """Intersection of two subspaces of the same ambient space."""
    if S1.ambient_dim != S2.ambient_dim:
        raise InvalidArgumentError("ambient dimensions differ")
    n = S1.ambient_dim
    if S1.dim == 0 or S2.dim == 0:
        return Subspace(n, np.zeros((n, 0)))
    # x in both spans  <=>  x = U a = V b; null space of [U, -V] yields (a, b)
    Mx = np.hstack([S1.basis, -S2.basis])
    ns = null_space(Mx, tol_rank)
    if ns.shape[1] == 0:
        return Subspace(n, np.zeros((n, 0)))
    vecs = S1.basis @ ns[: S1.dim]
    return orthonormal_columns(vecs, n, tol_rank)


def subspace_contains(big, small, tol=1e-8):
    """True when every basis vector of `small` lies in `big` (within tol)."""
    if small.dim == 0:
        return True
    if big.dim < small.dim:
        return False
    res = small.basis - big.basis @ (big.basis.T @ small.basis)
    return bool(np.max(np.abs(res)) <= tol)

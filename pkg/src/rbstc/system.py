"""Plant/gain data, inter-event transition matrices and standing-assumption checks.

The closed loop holds the input constant between events, so the state an
interval tau after an event is a linear image G(tau) x of the event state.
G(tau) is evaluated exactly (to matrix-exponential accuracy) from one
exponential of the block matrix [[A, BK], [0, 0]].
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import numkit
from .errors import InvalidArgumentError, UnsupportedFormError

__all__ = [
    "LinearSystem",
    "TransitionMatrix",
    "transition_matrix",
    "augmented_exponential",
    "pole_place_companion",
    "A1Report",
    "check_assumption_A1",
]


@dataclass(frozen=True)
class LinearSystem:
    """Continuous-time plant x' = Ax + Bu with piecewise-constant u = K x(t_k)."""

    A: np.ndarray
    B: np.ndarray
    K: np.ndarray
    stabilizing: bool = True  # declared intent; checked advisorily

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, float))
        B = np.atleast_2d(np.asarray(self.B, float))
        K = np.atleast_2d(np.asarray(self.K, float))
        if A.shape[0] != A.shape[1]:
            raise InvalidArgumentError(f"A must be square, got {A.shape}")
        n = A.shape[0]
        if B.shape[0] != n:
            raise InvalidArgumentError(f"B must have {n} rows, got {B.shape}")
        m = B.shape[1]
        if K.shape != (m, n):
            raise InvalidArgumentError(f"K must be {m}x{n}, got {K.shape}")
        for name, M in (("A", A), ("B", B), ("K", K)):
            if not np.all(np.isfinite(M)):
                raise InvalidArgumentError(f"{name} must be finite-valued")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "K", K)
        if self.stabilizing and not self.is_hurwitz_closed_loop():
            warnings.warn(
                "A + BK is not Hurwitz although the configuration declares a "
                "stabilizing gain; analysis proceeds (none of the results "
                "require closed-loop stability)",
                stacklevel=2)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def closed_loop(self):
        return self.A + self.B @ self.K

    def is_hurwitz_closed_loop(self, margin=0.0):
        w = np.linalg.eigvals(self.closed_loop)
        return bool(np.all(w.real < -margin))


@dataclass(frozen=True)
class TransitionMatrix:
    """State map over one held-input interval of length tau."""

    tau: float
    G: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not np.all(np.isfinite(self.G)):
            raise InvalidArgumentError("G must be finite-valued")


def augmented_exponential(sys, tau):
    """exp([[A, BK], [0, 0]] * tau); top blocks carry e^{A tau} and the
    held-input integral term."""
    n = sys.n
    C = np.zeros((2 * n, 2 * n))
    C[:n, :n] = sys.A
    C[:n, n:] = sys.B @ sys.K
    return numkit.expm(C * tau)


def transition_matrix(sys, tau):
    """G(tau) = e^{A tau} + integral_0^tau e^{A (tau - s)} B K ds.

    Evaluated via the augmented-matrix identity: the top-left and top-right
    n x n blocks of exp([[A, BK], [0, 0]] tau) are exactly the two terms.
    """
    tau = float(tau)
    if not np.isfinite(tau) or tau < 0.0:
        raise InvalidArgumentError(f"tau must be a finite nonnegative duration, got {tau}")
    n = sys.n
    if tau == 0.0:
        return TransitionMatrix(0.0, np.eye(n))
    E = augmented_exponential(sys, tau)
    return TransitionMatrix(tau, E[:n, :n] + E[:n, n:])


def _is_companion(A, B, tol=1e-12):
    n = A.shape[0]
    if B.shape != (n, 1):
        return False
    e_n = np.zeros((n, 1))
    e_n[-1, 0] = 1.0
    if not np.allclose(B, e_n, atol=tol):
        return False
    expected_top = np.eye(n, k=1)[: n - 1] if n > 1 else np.zeros((0, n))
    return np.allclose(A[: n - 1], expected_top, atol=tol)


def pole_place_companion(A, B, desired):
    """Gain K putting the closed-loop poles of a companion-form pair at `desired`.

    Coefficient matching: a companion matrix with last row r has characteristic
    polynomial s^n - r[n-1] s^{n-1} - ... - r[0], so K is the difference between
    the target last row and the plant's.
    """
    A = np.atleast_2d(np.asarray(A, float))
    B = np.asarray(B, float).reshape(A.shape[0], -1)
    n = A.shape[0]
    if not _is_companion(A, B):
        raise UnsupportedFormError(
            "pole placement implemented only for controllable companion form "
            "(superdiagonal ones, B = e_n); supply K directly instead")
    desired = np.asarray(desired, complex)
    if desired.shape != (n,):
        raise InvalidArgumentError(f"need exactly {n} desired poles")
    coeffs = np.poly(desired)  # [1, c_{n-1}, ..., c_0]
    if np.max(np.abs(coeffs.imag)) > 1e-9 * max(1.0, np.max(np.abs(coeffs.real))):
        raise InvalidArgumentError("desired poles must be closed under conjugation")
    target_last_row = -coeffs.real[1:][::-1]
    return (target_last_row - A[-1]).reshape(1, n)


@dataclass(frozen=True)
class A1Report:
    """Outcome of the standing-assumption audit."""

    passed: bool
    duplicate_taus: tuple      # ((i, j, tau), ...)
    kernel_hits: tuple         # ((region_index, power, witness vector), ...)
    checked_powers: int

    def summary(self):
        if self.passed:
            return "A1 holds: taus pairwise distinct, no region meets a kernel"
        parts = []
        if self.duplicate_taus:
            parts.append(f"{len(self.duplicate_taus)} duplicate tau pair(s)")
        if self.kernel_hits:
            parts.append(f"{len(self.kernel_hits)} kernel/region intersection(s)")
        return "A1 violated: " + ", ".join(parts)


def check_assumption_A1(sys, partition, Gs, tol=numkit.DEFAULT_TOL,
                        samples=256, seed=0):
    """Audit the standing assumption on a partition and its transition matrices.

    Checks that the region IETs are pairwise distinct and that for every region
    i and every power l in 1..n, no unit direction of R_i lies in ker G^l(tau_i)
    (within tol.tol_member). Kernel membership is probed two ways: kernel basis
    directions are tested against the region, and sampled region directions are
    tested against the kernel.
    """
    n = sys.n
    mats = [np.asarray(getattr(g, "G", g), float) for g in Gs]
    if len(mats) != len(partition.regions):
        raise InvalidArgumentError("Gs must be index-aligned with partition regions")

    duplicates = []
    taus = partition.taus
    for i in range(len(taus)):
        for j in range(i + 1, len(taus)):
            if taus[i] == taus[j]:
                duplicates.append((i, j, taus[i]))

    hits = []
    for i, G in enumerate(mats):
        P = np.eye(n)
        for power in range(1, n + 1):
            P = P @ G
            kern = numkit.null_space(P, tol.tol_rank)
            if kern.shape[1] == 0:
                break  # G nonsingular: all higher powers nonsingular too
            kern_space = numkit.Subspace(n, np.real(kern))
            witness = None
            for b in kern_space.basis.T:
                for sgn in (1.0, -1.0):
                    if partition.regions[i].contains(sgn * b):
                        witness = sgn * b
                        break
                if witness is not None:
                    break
            if witness is None:
                from .regions import sample_region
                pts = sample_region(partition.regions[i], samples, seed + 7 * i)
                for x in pts:
                    if numkit.subspace_distance(x, kern_space) <= tol.tol_member:
                        witness = x
                        break
            if witness is not None:
                hits.append((i, power, witness))
    return A1Report(
        passed=not duplicates and not hits,
        duplicate_taus=tuple(duplicates),
        kernel_hits=tuple(hits),
        checked_powers=n,
    )

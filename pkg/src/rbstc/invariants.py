"""Detection and screening of positively invariant subregions (PIS) of the
normalized jump map: rays on nonnegative real eigenvectors, real eigenlines /
eigenplanes and their spans, finite ray unions from opposite-real or
rational-rotation eigenvalue pairs, and the per-magnitude subspaces S_mu used
to rule regions out.

A region can only host a PIS if some S_mu (the span of all eigenvector
real-spans at one eigenvalue magnitude) meets the region closure; the largest
such magnitude also predicts the limit set of generic iterates.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.optimize as sopt

from . import numkit
from .errors import AssumptionViolationError, InvalidArgumentError
from .gamma import gamma_step
from .numkit import Subspace
from .regions import PolyhedralConeRegion, SphericalVoronoiRegion, sphere_samples

__all__ = [
    "PISCandidate",
    "SMuEntry",
    "SMuReport",
    "NoPISReport",
    "reig",
    "s_mu",
    "find_pirs",
    "find_invariant_subspaces",
    "find_union_of_rays",
    "screen_region",
    "screen_pis_without_pir",
    "dominant_limit_set",
    "candidate_distance",
    "candidate_distance_batch",
    "candidate_points",
]

RAY = "ray"
LINE = "line"
PLANE = "plane"
UNION_OF_RAYS = "union-of-rays"
SUBSPACE = "subspace"


@dataclass(frozen=True)
class PISCandidate:
    """A candidate positively invariant subregion tied to one region.

    generators are unit ray directions (ray kinds); span is the linear span of
    the candidate set. contained means the full set passed region membership,
    verified means it also survived a gamma-iteration check.
    """

    region_index: int
    kind: str
    generators: tuple
    span: Subspace
    eigenvalues: tuple
    contained: bool
    verified: bool

    def distance(self, x):
        return candidate_distance(self, x)


@dataclass(frozen=True)
class SMuEntry:
    mu: float
    subspace: Subspace
    intersects: bool
    exact: bool              # True when decided by linear feasibility
    witnesses: tuple
    eigenvalue_count: int    # distinct eigenvalues at this magnitude


@dataclass(frozen=True)
class SMuReport:
    region_index: int
    entries: tuple
    mu_max: float | None

    @property
    def pis_free(self):
        """No S_mu met the region closure (a certificate only if every entry
        was decided exactly)."""
        return all(not e.intersects for e in self.entries)

    @property
    def certified(self):
        return all(e.exact for e in self.entries)


@dataclass(frozen=True)
class NoPISReport:
    """Outcome of the PIS-without-PIR necessary-condition screen."""

    region_index: int
    pir_exists: bool
    negative_eigenline_touches: bool   # condition (a)
    equal_magnitude_pair_touches: bool  # condition (b)
    witnesses: tuple
    no_pis_possible: bool
    certified: bool


def _matrix(G):
    return np.asarray(getattr(G, "G", G), float)


def _matrices(Gs):
    return [_matrix(g) for g in Gs]


def reig(M, lam, tol=numkit.DEFAULT_TOL, spectrum=None):
    """R-eigenspaces of eigenvalue lam: one real span per independent
    eigenvector (lines for real lam, planes for a conjugate pair)."""
    M = np.asarray(M, float)
    spec = spectrum if spectrum is not None else numkit.eig(M, tol)
    pair = spec.find(lam)
    n = M.shape[0]
    V = numkit.null_space(M - pair.value * np.eye(n), tol.tol_rank)
    if V.shape[1] == 0:
        raise InvalidArgumentError(f"no eigenvector found for {lam}")
    return [numkit.rspan(V[:, j]) for j in range(V.shape[1])]


def s_mu(M, mu, tol=numkit.DEFAULT_TOL, spectrum=None):
    """Span of all R-eigenspaces whose eigenvalue magnitude equals mu."""
    M = np.asarray(M, float)
    spec = spectrum if spectrum is not None else numkit.eig(M, tol)
    scale = max(1.0, spec.spectral_radius)
    picked = [p for p in spec.pairs
              if p.value.imag >= 0.0 and abs(abs(p.value) - mu) <= tol.tol_eig * scale]
    if not picked:
        raise InvalidArgumentError(f"no eigenvalue of magnitude {mu}")
    cols = []
    n = M.shape[0]
    for p in picked:
        V = numkit.null_space(M - p.value * np.eye(n), tol.tol_rank)
        for j in range(V.shape[1]):
            cols.append(V[:, j].real)
            if p.value.imag > 0.0:
                cols.append(V[:, j].imag)
    return numkit.orthonormal_columns(np.column_stack(cols), n, tol.tol_orth)


def _real_nonneg_eigen_rays(G, spec, tol):
    """(alpha, unit direction) pairs for real eigenvalues alpha >= 0, both signs."""
    n = G.shape[0]
    out = []
    scale = max(1.0, spec.spectral_radius)
    for p in spec.pairs:
        if p.value.imag != 0.0:
            continue
        alpha = p.value.real
        if alpha < -tol.tol_eig * scale:
            continue
        V = numkit.null_space(G - alpha * np.eye(n), tol.tol_rank)
        for j in range(V.shape[1]):
            v = V[:, j].real
            v = v / np.linalg.norm(v)
            out.append((alpha, v))
            out.append((alpha, -v))
    return out


def find_pirs(partition, Gs, tol=numkit.DEFAULT_TOL):
    """Positively invariant rays: real eigenvectors with nonnegative eigenvalue
    whose direction lies in the region of the matching transition matrix.

    Each found ray is re-verified by one gamma step (fixed direction, same
    region)."""
    mats = _matrices(Gs)
    found = []
    for i, G in enumerate(mats):
        spec = numkit.eig(G, tol)
        for alpha, d in _real_nonneg_eigen_rays(G, spec, tol):
            if partition.membership(d) != i:
                continue
            verified = False
            try:
                x_next, j, _ = gamma_step(partition, mats, d, tol)
                verified = (j == i
                            and np.linalg.norm(x_next - d) <= max(tol.tol_member, 1e-9))
            except AssumptionViolationError:
                verified = False
            found.append(PISCandidate(
                region_index=i, kind=RAY, generators=(d,),
                span=numkit.orthonormal_columns(d[:, None], d.shape[0]),
                eigenvalues=(complex(alpha),), contained=True, verified=verified))
    return found


def _subspace_unit_samples(S, count, seed):
    if S.dim == 0:
        return np.zeros((0, S.ambient_dim))
    if S.dim == 1:
        b = S.basis[:, 0]
        return np.stack([b, -b])
    C = sphere_samples(S.dim, count, seed)
    return C @ S.basis.T


def find_invariant_subspaces(partition, Gs, samples=256, tol=numkit.DEFAULT_TOL,
                             seed=0):
    """R-eigenspace candidates per region, flagged as contained when every
    sampled unit vector of the subspace passes that region's membership; spans
    of multiple contained R-eigenspaces are tested as well."""
    mats = _matrices(Gs)
    out = []
    for i, G in enumerate(mats):
        spec = numkit.eig(G, tol)
        contained_spaces = []
        seen = [p for p in spec.pairs if p.value.imag >= 0.0]
        for p in seen:
            try:
                spaces = reig(G, p.value, tol, spectrum=spec)
            except InvalidArgumentError:
                continue
            for S in spaces:
                cand = _subspace_candidate(partition, mats, i, S, (p.value,),
                                           samples, tol, seed)
                out.append(cand)
                if cand.contained:
                    contained_spaces.append((S, p.value))
        combos = []
        if len(contained_spaces) >= 2:
            for a in range(len(contained_spaces)):
                for b in range(a + 1, len(contained_spaces)):
                    combos.append([contained_spaces[a], contained_spaces[b]])
            if len(contained_spaces) > 2:
                combos.append(list(contained_spaces))
        for combo in combos:
            cols = np.hstack([S.basis for S, _ in combo])
            span = numkit.orthonormal_columns(cols, cols.shape[0], tol.tol_orth)
            lams = tuple(lam for _, lam in combo)
            out.append(_subspace_candidate(partition, mats, i, span, lams,
                                           samples, tol, seed, kind=SUBSPACE))
    return out


def _subspace_candidate(partition, mats, i, S, lams, samples, tol, seed, kind=None):
    if kind is None:
        kind = LINE if S.dim == 1 else (PLANE if S.dim == 2 else SUBSPACE)
    pts = _subspace_unit_samples(S, samples, [seed, i, S.dim])
    contained = bool(len(pts)) and all(partition.membership(x) == i for x in pts)
    verified = False
    if contained:
        verified = True
        for x in pts[: min(16, len(pts))]:
            try:
                y, j, _ = gamma_step(partition, mats, x, tol)
            except AssumptionViolationError:
                verified = False
                break
            if j != i or numkit.subspace_distance(y, S) > max(tol.tol_member, 1e-8):
                verified = False
                break
    return PISCandidate(region_index=i, kind=kind, generators=(),
                        span=S, eigenvalues=tuple(complex(l) for l in lams),
                        contained=contained, verified=verified)


def _dedup_ray_sets(candidates, tol=1e-8):
    kept = []
    for cand in candidates:
        dup = False
        for other in kept:
            if len(other.generators) != len(cand.generators):
                continue
            used = set()
            for g in cand.generators:
                hit = next((k for k, h in enumerate(other.generators)
                            if k not in used and np.linalg.norm(g - h) <= 1e-6), None)
                if hit is None:
                    break
                used.add(hit)
            else:
                dup = True
            if dup:
                break
        if not dup:
            kept.append(cand)
    return kept


def find_union_of_rays(partition, Gs, max_denominator=12, tol=numkit.DEFAULT_TOL,
                       mixing_angles=17, plane_phases=8):
    """Finite ray unions closed under the gamma map.

    Two sources: (a) opposite real eigenvalue pairs {lambda, -lambda} with
    lambda > 0, whose eigenvector mixes u = a1 v1 +- a2 v2 swap under G; and
    (b) non-real eigenvalues whose argument is a rational multiple of pi
    (continued-fraction detection up to max_denominator), whose eigenplane
    ray orbits are finite."""
    if max_denominator < 2:
        raise InvalidArgumentError("max_denominator must be at least 2")
    mats = _matrices(Gs)
    found = []
    for i, G in enumerate(mats):
        spec = numkit.eig(G, tol)
        scale = max(1.0, spec.spectral_radius)
        n = G.shape[0]
        reals = [p for p in spec.pairs if p.value.imag == 0.0]
        # (a) lambda > 0 paired with -lambda
        for pp in reals:
            lam = pp.value.real
            if lam <= tol.tol_eig * scale:
                continue
            for pm in reals:
                if pm.value.real >= 0.0:
                    continue
                if abs(pm.value.real + lam) > tol.tol_eig * scale:
                    continue
                vp = numkit.null_space(G - lam * np.eye(n), tol.tol_rank)[:, 0].real
                vm = numkit.null_space(G + lam * np.eye(n), tol.tol_rank)[:, 0].real
                vp /= np.linalg.norm(vp)
                vm /= np.linalg.norm(vm)
                for theta in np.linspace(np.pi / 36, np.pi / 2 - np.pi / 36,
                                         mixing_angles):
                    base_p = np.cos(theta) * vp + np.sin(theta) * vm
                    base_m = np.cos(theta) * vp - np.sin(theta) * vm
                    for sign in (1.0, -1.0):
                        rays = (sign * base_p / np.linalg.norm(base_p),
                                sign * base_m / np.linalg.norm(base_m))
                        cand = _verify_ray_union(partition, mats, i, rays,
                                                 (complex(lam), complex(-lam)), tol)
                        if cand is not None:
                            found.append(cand)
        # (b) rational rotation angles
        for p in spec.pairs:
            if p.value.imag <= 0.0:
                continue
            phi = math.atan2(p.value.imag, p.value.real)
            frac = Fraction(phi / math.pi).limit_denominator(max_denominator)
            if frac <= 0 or abs(phi / math.pi - float(frac)) > 1e-8:
                continue  # treated as irrational: the plane candidate covers it
            q = frac.denominator
            num = frac.numerator
            orbit_len = 2 * q // math.gcd(num, 2 * q)
            plane = numkit.rspan(p.vector)
            if plane.dim != 2:
                continue
            a, b = plane.basis[:, 0], plane.basis[:, 1]
            for phase in np.linspace(0.0, 2.0 * np.pi, plane_phases, endpoint=False):
                u0 = np.cos(phase) * a + np.sin(phase) * b
                rays = _gamma_orbit(partition, mats, i, u0, orbit_len, tol)
                if rays is None:
                    continue
                cand = _verify_ray_union(partition, mats, i, rays,
                                         (p.value, p.value.conjugate()), tol)
                if cand is not None:
                    found.append(cand)
    return _dedup_ray_sets(found)


def _gamma_orbit(partition, mats, i, u0, orbit_len, tol):
    rays = [u0 / np.linalg.norm(u0)]
    x = rays[0]
    for _ in range(orbit_len):
        try:
            x, j, _ = gamma_step(partition, mats, x, tol)
        except AssumptionViolationError:
            return None
        if j != i:
            return None
        rays.append(x)
    if np.linalg.norm(rays[-1] - rays[0]) > 1e-6:
        return None
    return tuple(rays[:-1])


def _verify_ray_union(partition, mats, i, rays, lams, tol):
    """Check that the finite ray set lies in region i and is permuted by gamma."""
    for g in rays:
        try:
            if partition.membership(g) != i:
                return None
        except InvalidArgumentError:
            return None
    for g in rays:
        try:
            y, j, _ = gamma_step(partition, mats, g, tol)
        except AssumptionViolationError:
            return None
        if j != i:
            return None
        if min(np.linalg.norm(y - h) for h in rays) > max(tol.tol_member, 1e-7):
            return None
    span = numkit.orthonormal_columns(np.column_stack(rays), rays[0].shape[0],
                                      tol.tol_orth)
    return PISCandidate(region_index=i, kind=UNION_OF_RAYS, generators=tuple(rays),
                        span=span, eigenvalues=lams, contained=True, verified=True)


def _region_cell_normals(region):
    """Inward-normal stacks for each convex cell of a region, when available."""
    if isinstance(region, PolyhedralConeRegion):
        return [region.normals]
    if isinstance(region, SphericalVoronoiRegion):
        cells = []
        for c in region.own_centers:
            others = [p for p in region.all_centers
                      if np.linalg.norm(p - c) > 1e-12]
            if others:
                cells.append(np.asarray([c - p for p in others]))
            else:
                cells.append(np.zeros((0, region.ambient_dim)))
        return cells
    return None


def _cone_subspace_lp(normals, basis):
    """Max-margin direction of {c : N B c >= t} with box-bounded c.

    Returns (t*, witness direction or None); t* > 0 proves the subspace meets
    the cone interior."""
    m, d = normals.shape[0], basis.shape[1]
    if m == 0:
        w = basis[:, 0]
        return np.inf, w / np.linalg.norm(w)
    A = normals @ basis
    # variables z = (c, t): minimize -t subject to -A c + t 1 <= 0
    A_ub = np.hstack([-A, np.ones((m, 1))])
    b_ub = np.zeros(m)
    c_vec = np.zeros(d + 1)
    c_vec[-1] = -1.0
    bounds = [(-1.0, 1.0)] * d + [(-1.0, 1.0)]
    res = sopt.linprog(c_vec, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if not res.success:
        return 0.0, None
    t_star = -res.fun
    c_star = res.x[:d]
    nc = np.linalg.norm(basis @ c_star)
    if t_star > 1e-9 and nc > 1e-9:
        w = basis @ c_star / nc
        return t_star, w
    return t_star, None


def _search_subspace_region(region, S, tol, starts, seed):
    """Seeded multi-start maximization of the region margin over the unit
    sphere of S. A found witness proves intersection; absence does not."""
    B = S.basis
    d = S.dim
    witnesses = []
    best = -np.inf
    if d == 1:
        for sgn in (1.0, -1.0):
            m = region.margin(sgn * B[:, 0])
            best = max(best, m)
            if m >= -tol.tol_member:
                witnesses.append(sgn * B[:, 0])
        return best, witnesses

    def neg_margin(c):
        nc = np.linalg.norm(c)
        if nc < 1e-12:
            return 1e6
        return -region.margin(B @ (c / nc))

    C0 = sphere_samples(d, starts, [seed, region.index, d])
    for c0 in C0:
        res = sopt.minimize(neg_margin, c0, method="Nelder-Mead",
                            options={"maxfev": 120 * d, "xatol": 1e-9,
                                     "fatol": 1e-12})
        m = -res.fun
        if m > best:
            best = m
        if m >= -tol.tol_member:
            w = B @ (res.x / np.linalg.norm(res.x))
            if not any(np.linalg.norm(w - u) < 1e-6 for u in witnesses):
                witnesses.append(w)
            if len(witnesses) >= 3:
                break
    return best, witnesses


def _subspace_meets_region(region, S, tol, starts=64, seed=52):
    """(intersects, exact, witnesses) for whether S meets cl(region) beyond 0."""
    if S.dim == 0:
        return False, True, ()
    cells = _region_cell_normals(region)
    if cells is not None:
        for N in cells:
            t_star, w = _cone_subspace_lp(N, S.basis)
            if w is not None:
                return True, True, (w,)
        # no interior point in any cell; a boundary-only touch may remain
        best, wit = _search_subspace_region(region, S, tol, starts, seed)
        if wit:
            return True, False, tuple(wit)
        return False, False, ()
    best, wit = _search_subspace_region(region, S, tol, starts, seed)
    return (len(wit) > 0), False, tuple(wit)


def screen_region(region, G, tol=numkit.DEFAULT_TOL, samples=64, starts=64,
                  seed=52):
    """Per-magnitude necessary-condition screen for one region.

    For each distinct eigenvalue magnitude mu of G, decides whether
    S_mu(G) meets the region closure (exact linear feasibility for
    polyhedral-describable regions, seeded multi-start margin search
    otherwise) and reports mu_max, the largest intersecting magnitude. A
    region with no intersecting S_mu cannot host a PIS, so inter-event times
    cannot lock onto its tau."""
    G = _matrix(G)
    spec = numkit.eig(G, tol)
    scale = max(1.0, spec.spectral_radius)
    entries = []
    mu_max = None
    for mu in spec.magnitudes():
        S = s_mu(G, mu, tol, spectrum=spec)
        # conjugates count as distinct eigenvalues here (condition (b) of the
        # PIS-without-PIR screen is satisfiable by a complex pair)
        count = sum(1 for p in spec.pairs
                    if abs(abs(p.value) - mu) <= tol.tol_eig * scale)
        intersects, exact, wit = _subspace_meets_region(region, S, tol, starts, seed)
        entries.append(SMuEntry(mu=float(mu), subspace=S, intersects=intersects,
                                exact=exact, witnesses=wit,
                                eigenvalue_count=count))
        if intersects and mu_max is None:
            mu_max = float(mu)
    return SMuReport(region_index=region.index, entries=tuple(entries),
                     mu_max=mu_max)


def screen_pis_without_pir(region, G, tol=numkit.DEFAULT_TOL, seed=52):
    """Necessary conditions for a PIS whose closure contains no PIR:
    (a) a real negative eigenvalue whose eigenline meets the region closure, or
    (b) two distinct equal-magnitude eigenvalues whose S_mu meets the closure.
    When neither holds and the region has no PIR, no PIS can exist there."""
    G = _matrix(G)
    spec = numkit.eig(G, tol)
    scale = max(1.0, spec.spectral_radius)
    n = G.shape[0]

    pir_exists = False
    for alpha, d in _real_nonneg_eigen_rays(G, spec, tol):
        if region.contains(d):
            pir_exists = True
            break

    witnesses = []
    cond_a = False
    exact_a = True
    for p in spec.pairs:
        if p.value.imag != 0.0 or p.value.real >= -tol.tol_eig * scale:
            continue
        V = numkit.null_space(G - p.value.real * np.eye(n), tol.tol_rank)
        for j in range(V.shape[1]):
            line = numkit.orthonormal_columns(V[:, j].real[:, None], n)
            hit, exact, wit = _subspace_meets_region(region, line, tol, seed=seed)
            exact_a = exact_a and (exact or not hit)
            if hit:
                cond_a = True
                witnesses.extend(wit)

    smu = screen_region(region, G, tol, seed=seed)
    cond_b = any(e.intersects and e.eigenvalue_count >= 2 for e in smu.entries)
    exact_b = smu.certified

    return NoPISReport(
        region_index=region.index,
        pir_exists=pir_exists,
        negative_eigenline_touches=cond_a,
        equal_magnitude_pair_touches=cond_b,
        witnesses=tuple(witnesses),
        no_pis_possible=not (pir_exists or cond_a or cond_b),
        certified=exact_a and exact_b,
    )


def dominant_limit_set(candidate, G, tol=numkit.DEFAULT_TOL):
    """Predicted limit set of generic gamma iterates started inside the
    candidate: the largest-magnitude S_mu part present in its span."""
    if not candidate.verified:
        raise InvalidArgumentError("dominant_limit_set expects a verified candidate")
    G = _matrix(G)
    spec = numkit.eig(G, tol)
    for mu in spec.magnitudes():
        S = s_mu(G, mu, tol, spectrum=spec)
        inter = numkit.subspace_intersection(S, candidate.span, 1e-8)
        if inter.dim > 0:
            return inter
    return candidate.span


def candidate_distance(candidate, x):
    """Distance from a unit vector to the candidate set on the unit sphere."""
    x = np.asarray(x, float)
    if candidate.kind in (RAY, UNION_OF_RAYS):
        return float(min(np.linalg.norm(x - g) for g in candidate.generators))
    if candidate.kind == LINE:
        b = candidate.span.basis[:, 0]
        return float(min(np.linalg.norm(x - b), np.linalg.norm(x + b)))
    return numkit.subspace_distance(x, candidate.span)


def candidate_distance_batch(candidate, X):
    X = np.asarray(X, float)
    if candidate.kind in (RAY, UNION_OF_RAYS):
        d = np.stack([np.linalg.norm(X - g[None, :], axis=1)
                      for g in candidate.generators])
        return d.min(axis=0)
    if candidate.kind == LINE:
        b = candidate.span.basis[:, 0]
        return np.minimum(np.linalg.norm(X - b[None, :], axis=1),
                          np.linalg.norm(X + b[None, :], axis=1))
    c = np.minimum(1.0, np.linalg.norm(X @ candidate.span.basis, axis=1))
    return np.sqrt(np.maximum(0.0, 2.0 * (1.0 - c)))


def candidate_points(candidate, count, seed):
    """Deterministic points of the candidate set on the unit sphere."""
    if candidate.kind in (RAY, UNION_OF_RAYS):
        gens = candidate.generators
        reps = int(np.ceil(count / len(gens)))
        return np.array((list(gens) * reps)[:count])
    if candidate.kind == LINE:
        b = candidate.span.basis[:, 0]
        return np.array(([b, -b] * ((count + 1) // 2))[:count])
    return _subspace_unit_samples(candidate.span, count, seed)[:count]

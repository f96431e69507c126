"""Stability classification of verified candidates.

The spectral classifier evaluates, branch by branch, the necessary and
sufficient conditions under which a candidate of the form
(closed PIS) intersect (generalized eigenspace of its generating eigenvalue) is
stable / asymptotically stable / unstable under the normalized jump map. All
magnitude and multiplicity comparisons run with tolerance bands: a comparison
landing inside a band yields an Ambiguous verdict instead of silently picking
a branch.

The empirical probe is the independent cross-check: it perturbs the candidate
at several radii, iterates the map, and grades the observed excursion and
decay of the distance to the candidate set.
"""

from dataclasses import dataclass, field

import numpy as np

from . import numkit
from .errors import (AssumptionViolationError, HypothesisViolationError,
                     UnsupportedFormError)
from .gamma import gamma_step_batch
from .invariants import (LINE, PLANE, SUBSPACE, UNION_OF_RAYS,
                         candidate_distance_batch, candidate_points)
from .regions import sphere_samples

__all__ = [
    "StabilityVerdict",
    "SpectralPartition",
    "classify",
    "classify_general",
    "empirical_probe",
    "ProbeResult",
]

STABLE = "stable"
ASYMPTOTICALLY_STABLE = "asymptotically-stable"
UNSTABLE = "unstable"
AMBIGUOUS = "ambiguous"

EQUAL = "equal"
SMALLER = "smaller"
GREATER = "greater"
BORDERLINE = "borderline"


@dataclass(frozen=True)
class SpectralPartition:
    """Eigenvalues of J = G / |lambda| split by unit-circle position:
    q1 outside, q2 the generating pair, q3 other on-circle, q4 inside."""

    q1: tuple
    q2: tuple
    q3: tuple
    q4: tuple
    borderline: tuple = ()


@dataclass(frozen=True)
class StabilityVerdict:
    verdict: str
    reasons: tuple
    defective: str | None = None
    lam: complex | None = None
    spectral_partition: SpectralPartition | None = None
    probe_stats: tuple = field(default=())

    def is_stable(self):
        return self.verdict in (STABLE, ASYMPTOTICALLY_STABLE)


def _compare_magnitude(q_abs, lam_abs, band):
    """'equal' / 'smaller' / 'greater' with a 2x borderline belt."""
    diff = q_abs - lam_abs
    if abs(diff) <= band:
        return EQUAL
    if abs(diff) <= 2.0 * band:
        return BORDERLINE
    return SMALLER if diff < 0 else GREATER


def _spectral_partition(spec, lam_pair, band):
    lam_abs = abs(lam_pair.value)
    q1, q2, q3, q4, border = [], [], [], [], []
    for p in spec.pairs:
        if p.value == lam_pair.value or p.value == lam_pair.value.conjugate():
            q2.append(p.value / lam_abs)
            continue
        cmp = _compare_magnitude(abs(p.value), lam_abs, band)
        if cmp == EQUAL:
            q3.append(p.value / lam_abs)
        elif cmp == SMALLER:
            q4.append(p.value / lam_abs)
        elif cmp == GREATER:
            q1.append(p.value / lam_abs)
        else:
            border.append(p.value / lam_abs)
    return SpectralPartition(tuple(q1), tuple(q2), tuple(q3), tuple(q4),
                             tuple(border))


def _check_interiority(candidate, partition, seed=17, radius=1e-3, probes=24):
    """Sampled check that the candidate (minus the origin) sits in the
    interior of its region: small perturbations must stay members."""
    if partition is None:
        return ["interiority: skipped (no partition supplied)"]
    pts = candidate_points(candidate, 8, [seed, 3])
    n = pts.shape[1]
    rng_dirs = sphere_samples(n, probes, [seed, 11])
    failures = []
    for x in pts:
        Z = x[None, :] + radius * rng_dirs
        Z = Z / np.linalg.norm(Z, axis=1, keepdims=True)
        got = partition.membership_batch(Z)
        if np.any(got != candidate.region_index):
            failures.append(x)
    if failures:
        raise HypothesisViolationError(
            f"candidate in region {candidate.region_index} touches the region "
            f"boundary ({len(failures)} of {len(pts)} base points had "
            f"escaping {radius:g}-perturbations); no verdict",
            report={"radius": radius, "failing_points": failures})
    return [f"interiority: {len(pts)} base points x {probes} perturbations at "
            f"radius {radius:g} all stayed in region {candidate.region_index}"]


def _real_eigenspace_span(G, lam, tol):
    """Span of the rspans of every eigenvector of lam (and its conjugate)."""
    n = G.shape[0]
    V = numkit.null_space(G - lam * np.eye(n), tol.tol_rank)
    cols = []
    for j in range(V.shape[1]):
        cols.append(V[:, j].real)
        if abs(lam.imag) > 0:
            cols.append(V[:, j].imag)
    return numkit.orthonormal_columns(np.column_stack(cols), n, tol.tol_orth)


def classify(candidate, G, tol=numkit.DEFAULT_TOL, partition=None):
    """Spectral stability verdict for a generalized-eigenspace candidate.

    Branches: for non-defective generating lambda the candidate is stable iff
    |lambda| equals the spectral radius and every other equal-magnitude
    eigenvalue is non-defective; for defective lambda it is stable iff it is
    spectral-radius-dominant, the full generalized eigenspace lies inside the
    candidate and every other eigenvalue is strictly smaller in magnitude.
    Asymptotic stability additionally needs strict dominance and either the
    whole eigenvector span inside the candidate or a simple real positive
    lambda. Unstable means not stable. Raises HypothesisViolationError when
    the sampled interiority check fails.
    """
    G = np.asarray(getattr(G, "G", G), float)
    spec = numkit.eig(G, tol)
    lam_pair = spec.find(candidate.eigenvalues[0])
    lam = lam_pair.value
    lam_abs = abs(lam)
    rho = spec.spectral_radius
    band = tol.tol_eig * max(1.0, rho)
    reasons = list(_check_interiority(candidate, partition))

    sp = _spectral_partition(spec, lam_pair, band)
    defect = numkit.defectiveness(G, lam, tol, spec)
    reasons.append(f"generating eigenvalue {lam}: {defect}")

    if defect == numkit.AMBIGUOUS or sp.borderline:
        reasons.append("a multiplicity or magnitude decision fell inside the "
                       "tolerance band")
        return StabilityVerdict(AMBIGUOUS, tuple(reasons), defect, lam, sp)

    dominant = _compare_magnitude(rho, lam_abs, band) == EQUAL
    reasons.append(f"|lambda| = rho(G): {dominant} (|lambda|={lam_abs:.12g}, "
                   f"rho={rho:.12g})")

    others = [p for p in spec.pairs
              if p.value not in (lam, lam.conjugate())]
    equal_mag = [p for p in others
                 if _compare_magnitude(abs(p.value), lam_abs, band) == EQUAL]
    all_smaller = all(
        _compare_magnitude(abs(p.value), lam_abs, band) == SMALLER
        for p in others)

    if defect == numkit.NON_DEFECTIVE:
        eq_defects = [numkit.defectiveness(G, p.value, tol, spec) for p in equal_mag]
        if any(d == numkit.AMBIGUOUS for d in eq_defects):
            reasons.append("equal-magnitude eigenvalue has ambiguous defectiveness")
            return StabilityVerdict(AMBIGUOUS, tuple(reasons), defect, lam, sp)
        stable = dominant and all(d == numkit.NON_DEFECTIVE for d in eq_defects)
        reasons.append(
            f"non-defective branch: dominant={dominant}, "
            f"equal-magnitude others non-defective="
            f"{all(d == numkit.NON_DEFECTIVE for d in eq_defects)} "
            f"({len(equal_mag)} of them)")
    else:
        gen = numkit.generalized_eigenspace(G, lam, tol, spectrum=spec)
        gen_inside = (candidate.kind in (LINE, PLANE, SUBSPACE)
                      and numkit.subspace_contains(candidate.span, gen, 1e-7))
        stable = dominant and gen_inside and all_smaller
        reasons.append(
            f"defective branch: dominant={dominant}, generalized eigenspace "
            f"(dim {gen.dim}) inside candidate={gen_inside}, "
            f"all others strictly smaller={all_smaller}")

    if not stable:
        reasons.append("not stable, hence unstable")
        return StabilityVerdict(UNSTABLE, tuple(reasons), defect, lam, sp)

    eig_span = _real_eigenspace_span(G, lam, tol)
    clause_a = (candidate.kind in (LINE, PLANE, SUBSPACE)
                and numkit.subspace_contains(candidate.span, eig_span, 1e-7))
    clause_b = (lam.imag == 0.0 and lam.real > 0.0
                and lam_pair.algebraic_mult == 1)
    asymptotic = all_smaller and (clause_a or clause_b)
    reasons.append(
        f"asymptotic clauses: strict dominance={all_smaller}, "
        f"eigenvector span inside candidate (a)={clause_a}, "
        f"simple real positive lambda (b)={clause_b}")
    verdict = ASYMPTOTICALLY_STABLE if asymptotic else STABLE
    return StabilityVerdict(verdict, tuple(reasons), defect, lam, sp)


def classify_general(candidate, G, tol=numkit.DEFAULT_TOL):
    """Verdict for a two-ray union generated by an opposite real pair
    lambda, -lambda at the spectral radius.

    Stable when every other eigenvalue is strictly smaller in magnitude and
    both generating eigenvalues are non-defective; asymptotic stability is
    never claimed for this shape (iterates hop between the rays). Unstable
    when some eigenvalue is strictly larger or an equal-magnitude defective
    eigenvalue exists.
    """
    G = np.asarray(getattr(G, "G", G), float)
    if candidate.kind != UNION_OF_RAYS or len(candidate.eigenvalues) != 2:
        raise UnsupportedFormError(
            "classify_general handles union-of-rays candidates generated by "
            "an opposite real eigenvalue pair")
    l1, l2 = candidate.eigenvalues
    if abs(l1.imag) > 0 or abs(l2.imag) > 0 or abs(l1 + l2) > 1e-9 * max(1, abs(l1)):
        raise UnsupportedFormError(
            "two-ray classification needs real eigenvalues lambda, -lambda")
    spec = numkit.eig(G, tol)
    lam_pair = spec.find(l1 if l1.real > 0 else l2)
    lam_abs = abs(lam_pair.value)
    band = tol.tol_eig * max(1.0, spec.spectral_radius)
    sp = _spectral_partition(spec, lam_pair, band)
    reasons = []

    gen_pairs = [spec.find(l1), spec.find(l2)]
    defs = [numkit.defectiveness(G, p.value, tol, spec) for p in gen_pairs]
    others = [p for p in spec.pairs
              if p.value not in (gen_pairs[0].value, gen_pairs[1].value)]
    cmps = [_compare_magnitude(abs(p.value), lam_abs, band) for p in others]
    if numkit.AMBIGUOUS in defs or BORDERLINE in cmps:
        reasons.append("decision fell inside a tolerance band")
        return StabilityVerdict(AMBIGUOUS, tuple(reasons), defs[0],
                                lam_pair.value, sp)
    eq_defective = any(
        cmp == EQUAL and numkit.defectiveness(G, p.value, tol, spec)
        == numkit.DEFECTIVE
        for cmp, p in zip(cmps, others))
    if GREATER in cmps or eq_defective:
        reasons.append(f"larger eigenvalue present={GREATER in cmps}, "
                       f"equal-magnitude defective={eq_defective}")
        return StabilityVerdict(UNSTABLE, tuple(reasons), defs[0],
                                lam_pair.value, sp)
    if all(c == SMALLER for c in cmps) and all(d == numkit.NON_DEFECTIVE
                                               for d in defs):
        reasons.append("opposite pair dominant and non-defective, all others "
                       "strictly smaller; stable (asymptotic stability not "
                       "claimed for ray unions)")
        return StabilityVerdict(STABLE, tuple(reasons), defs[0],
                                lam_pair.value, sp)
    reasons.append("configuration outside the two-ray stability/instability "
                   "branches (equal-magnitude non-defective extras)")
    return StabilityVerdict(AMBIGUOUS, tuple(reasons), defs[0],
                            lam_pair.value, sp)


@dataclass(frozen=True)
class ProbeResult:
    eps: float
    max_distance: float
    final_distance: float
    escaped: bool
    region_exits: int


def empirical_probe(candidate, partition, Gs, eps_list=(1e-2, 1e-3, 1e-4),
                    trials=50, horizon=300, seed=0, tol=numkit.DEFAULT_TOL,
                    stability_factor=10.0, escape_threshold=0.5,
                    asymptotic_factor=0.1):
    """Perturb-and-iterate stability probe.

    For each radius eps, `trials` seeded starts inside the region within eps
    of the candidate set are iterated `horizon` gamma steps while the distance
    to the candidate set is tracked. Stable: every excursion stays below
    stability_factor * eps at every radius. Asymptotically stable: stable and
    the final distance dropped below asymptotic_factor * eps. Unstable: some
    trajectory exceeded escape_threshold at every radius. Anything else is
    ambiguous. Region exits are recorded as escape evidence.
    """
    mats = [np.asarray(getattr(g, "G", g), float) for g in Gs]
    n = mats[0].shape[0]
    results = []
    for e_i, eps in enumerate(eps_list):
        base = candidate_points(candidate, trials, [seed, 101, e_i])
        dirs = sphere_samples(n, trials, [seed, 211, e_i])
        Z = base + eps * dirs
        Z = Z / np.linalg.norm(Z, axis=1, keepdims=True)
        inside = partition.membership_batch(Z) == candidate.region_index
        retry = 0
        while not np.all(inside) and retry < 50:
            retry += 1
            fresh = sphere_samples(n, int((~inside).sum()), [seed, 307, e_i, retry])
            Z[~inside] = base[~inside] + eps * fresh
            Z[~inside] /= np.linalg.norm(Z[~inside], axis=1, keepdims=True)
            inside = partition.membership_batch(Z) == candidate.region_index
        Z = Z[inside]
        if Z.shape[0] == 0:
            results.append(ProbeResult(eps, np.inf, np.inf, True, 0))
            continue
        dist = candidate_distance_batch(candidate, Z)
        max_dist = dist.copy()
        exits = np.zeros(Z.shape[0], bool)
        try:
            for _ in range(horizon):
                Z, idx, _, _ = gamma_step_batch(partition, mats, Z, tol)
                exits |= idx != candidate.region_index
                dist = candidate_distance_batch(candidate, Z)
                np.maximum(max_dist, dist, out=max_dist)
        except AssumptionViolationError:
            results.append(ProbeResult(eps, np.inf, np.inf, True,
                                       int(exits.sum())))
            continue
        results.append(ProbeResult(
            eps=float(eps),
            max_distance=float(max_dist.max()),
            final_distance=float(dist.max()),
            escaped=bool(np.any(max_dist >= escape_threshold)),
            region_exits=int(exits.sum()),
        ))

    bounded = all(r.max_distance <= stability_factor * r.eps for r in results)
    decayed = all(r.final_distance <= asymptotic_factor * r.eps for r in results)
    always_escapes = all(r.escaped for r in results)
    reasons = tuple(
        f"eps={r.eps:g}: max={r.max_distance:.3e}, final={r.final_distance:.3e}, "
        f"escaped={r.escaped}, region_exits={r.region_exits}"
        for r in results)
    if bounded and decayed:
        verdict = ASYMPTOTICALLY_STABLE
    elif bounded:
        verdict = STABLE
    elif always_escapes:
        verdict = UNSTABLE
    else:
        verdict = AMBIGUOUS
    return StabilityVerdict(verdict, reasons, None, None, None,
                            probe_stats=tuple(results))

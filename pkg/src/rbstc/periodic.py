"""Periodic inter-event patterns.

A finite region-index sequence (j_1, ..., j_p) is realized as a repeating
inter-event pattern exactly when the composite matrix
G(tau_{j_p}) ... G(tau_{j_1}) admits a positively invariant subregion inside
the pattern region R_P: the set of states whose first p gamma steps visit the
prescribed regions in order. The whole single-region machinery (screening,
candidates, stability) is reused with that composite matrix and membership.
"""

from dataclasses import dataclass

import numpy as np

from . import invariants, numkit, stability
from .errors import AssumptionViolationError, HypothesisViolationError, InvalidArgumentError
from .regions import ConicRegion, PolyhedralConeRegion, SphericalVoronoiRegion

__all__ = [
    "PeriodicPattern",
    "PatternReport",
    "pattern_matrix",
    "pattern_membership",
    "pattern_region",
    "analyze_pattern",
    "canonical_rotation",
    "enumerate_patterns",
]


def _matrices(Gs):
    return [np.asarray(getattr(g, "G", g), float) for g in Gs]


@dataclass(frozen=True)
class PeriodicPattern:
    region_sequence: tuple
    tau_sequence: tuple
    G_pattern: np.ndarray

    @property
    def period(self):
        return len(self.region_sequence)


def canonical_rotation(pattern):
    """Lexicographically smallest rotation: one canonical phase per orbit."""
    pattern = tuple(int(j) for j in pattern)
    return min(tuple(pattern[k:] + pattern[:k]) for k in range(len(pattern)))


def pattern_matrix(Gs, pattern):
    """Ordered product G(tau_{j_p}) ... G(tau_{j_1}) (applied right to left)."""
    mats = _matrices(Gs)
    if len(pattern) == 0:
        raise InvalidArgumentError("pattern must be nonempty")
    if any(j < 0 or j >= len(mats) for j in pattern):
        raise InvalidArgumentError(f"pattern index out of range: {pattern}")
    M = np.eye(mats[0].shape[0])
    for j in pattern:
        M = mats[j] @ M
    return M


def pattern_membership(partition, Gs, x, pattern):
    """True when the prefix states of x visit the pattern's regions in order."""
    x = np.asarray(x, float)
    if np.linalg.norm(x) == 0.0:
        raise InvalidArgumentError("the origin belongs to no region")
    mats = _matrices(Gs)
    state = x
    for j in pattern:
        if partition.membership(state) != int(j):
            return False
        state = mats[int(j)] @ state
        if np.linalg.norm(state) == 0.0:
            return False
    return True


class _PatternRegion(ConicRegion):
    """The pattern region R_P presented through the ConicRegion surface so the
    invariance/screening machinery can run unchanged (index 0, tau = cycle
    duration)."""

    kind = "pattern"

    def __init__(self, partition, Gs, pattern):
        self.partition = partition
        self.mats = _matrices(Gs)
        self.pattern = tuple(int(j) for j in pattern)
        tau_total = float(sum(partition.taus[j] for j in self.pattern))
        super().__init__(0, tau_total, partition.n)

    def contains(self, x):
        return pattern_membership(self.partition, self.mats, x, self.pattern)

    def margin(self, x):
        # the constituent margins are themselves signed, so the pattern margin
        # is just their minimum along the prefix states
        x = np.asarray(x, float)
        state = x / np.linalg.norm(x)
        worst = np.inf
        for j in self.pattern:
            reg = self.partition.regions[j]
            worst = min(worst, reg.margin(state))
            state = self.mats[j] @ state
            state = state / np.linalg.norm(state)
        return float(worst)


class _PatternPartition:
    """Single-region shim: membership 0 inside R_P, -1 outside."""

    def __init__(self, region):
        self.regions = (region,)
        self.taus = (region.tau,)
        self.n = region.ambient_dim

    def membership(self, x):
        return 0 if self.regions[0].contains(x) else -1

    def membership_batch(self, X):
        return np.array([self.membership(x) for x in np.asarray(X, float)])


def pattern_region(partition, Gs, pattern):
    """R_P as a region object.

    When every constituent region is a single convex polyhedral/Voronoi cell,
    R_P has an exact inward-normal description (normals pulled back through
    the prefix products) and a PolyhedralConeRegion is returned; otherwise the
    membership-replay region is returned.
    """
    mats = _matrices(Gs)
    normals = []
    exact = True
    prefix = np.eye(partition.n)
    for j in pattern:
        reg = partition.regions[int(j)]
        if isinstance(reg, PolyhedralConeRegion):
            N = reg.normals
        elif isinstance(reg, SphericalVoronoiRegion) and len(reg.own_centers) == 1:
            c = reg.own_centers[0]
            others = [p for p in reg.all_centers if np.linalg.norm(p - c) > 1e-12]
            N = np.asarray([c - p for p in others]) if others else \
                np.zeros((0, partition.n))
        else:
            exact = False
            break
        if N.shape[0]:
            normals.append(N @ prefix)
        prefix = mats[int(j)] @ prefix
    if exact:
        stacked = (np.vstack(normals) if normals
                   else np.zeros((0, partition.n)))
        region = PolyhedralConeRegion(0, float(sum(partition.taus[int(j)]
                                                   for j in pattern)),
                                      stacked, partition.n)
        return region
    return _PatternRegion(partition, mats, pattern)


@dataclass(frozen=True)
class PatternReport:
    pattern: PeriodicPattern
    canonical: tuple
    smu: invariants.SMuReport
    candidates: tuple          # (PISCandidate, StabilityVerdict-or-None) pairs
    certified: bool            # some verified candidate exists => tau_P^omega exists
    asymptotically_stable: bool


def analyze_pattern(partition, Gs, pattern, tol=numkit.DEFAULT_TOL,
                    samples=128, seed=0):
    """Full invariance + stability pipeline on the composite map of a pattern.

    A verified candidate inside R_P certifies that the periodic inter-event
    sequence exists; an asymptotically stable one certifies local convergence
    of the inter-event times to the pattern.
    """
    pattern = tuple(int(j) for j in pattern)
    mats = _matrices(Gs)
    Gp = pattern_matrix(mats, pattern)
    pat = PeriodicPattern(pattern,
                          tuple(partition.taus[j] for j in pattern), Gp)
    region = pattern_region(partition, mats, pattern)
    shim = _PatternPartition(region)

    candidates = []
    candidates += invariants.find_pirs(shim, [Gp], tol)
    candidates += [c for c in invariants.find_invariant_subspaces(
        shim, [Gp], samples=samples, tol=tol, seed=seed)]
    candidates += invariants.find_union_of_rays(shim, [Gp], tol=tol)
    smu = invariants.screen_region(region, Gp, tol, seed=seed + 13)

    judged = []
    asympt = False
    for cand in candidates:
        verdict = None
        if cand.verified:
            try:
                if cand.kind == invariants.UNION_OF_RAYS:
                    verdict = stability.classify_general(cand, Gp, tol)
                else:
                    verdict = stability.classify(cand, Gp, tol, partition=shim)
            except (HypothesisViolationError, AssumptionViolationError,
                    InvalidArgumentError) as exc:
                verdict = stability.StabilityVerdict("no-verdict", (str(exc),))
            if verdict is not None and \
                    verdict.verdict == stability.ASYMPTOTICALLY_STABLE:
                asympt = True
        judged.append((cand, verdict))

    certified = any(c.verified for c, _ in judged)
    return PatternReport(
        pattern=pat,
        canonical=canonical_rotation(pattern),
        smu=smu,
        candidates=tuple(judged),
        certified=certified,
        asymptotically_stable=asympt,
    )


def enumerate_patterns(partition, Gs, max_length=1, harvest=8, events=160,
                       window=80, max_period=20, seed=0):
    """Candidate patterns to analyze: every length-1 pattern, patterns
    harvested from seeded simulations, and (gated) exhaustive enumeration up
    to max_length."""
    from .gamma import detect_steady_state, simulate
    from .regions import sphere_samples

    r = partition.r
    seen = {}
    for i in range(r):
        seen[(i,)] = (i,)
    if harvest > 0:
        starts = sphere_samples(partition.n, harvest, [seed, 71])
        for x0 in starts:
            try:
                trace = simulate(partition, Gs, x0, events)
            except AssumptionViolationError:
                continue
            ss = detect_steady_state(trace, window=window, max_period=max_period)
            if ss.kind != "none":
                canon = canonical_rotation(ss.region_pattern)
                seen[canon] = canon
    if max_length >= 2:
        import itertools
        for L in range(2, max_length + 1):
            for combo in itertools.product(range(r), repeat=L):
                canon = canonical_rotation(combo)
                seen[canon] = canon
    return sorted(seen.values(), key=lambda p: (len(p), p))

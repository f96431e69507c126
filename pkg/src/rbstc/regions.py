"""Conic partitions of state space and the triggering rules that induce them.

Three region flavors:

* trigger slices - level sets of a relative-threshold inter-event-time function
  tau_e, binned into half-open intervals [tau_i, tau_{i+1});
* spherical Voronoi cones - nearest-center cells on the unit sphere, merged
  when cells share an assigned inter-event time;
* polyhedral cones - explicit inward-normal descriptions (used mostly for
  synthetic constructions).

All membership logic is conic (decided on x/||x||) and deterministic: interval
boundaries are half-open and Voronoi/polyhedral ties go to the lowest region
index.
"""

import warnings

import numpy as np

from . import numkit
from .errors import InvalidArgumentError
from .system import augmented_exponential, transition_matrix

__all__ = [
    "RelativeTrigger",
    "ConicRegion",
    "TriggerSliceRegion",
    "PolyhedralConeRegion",
    "SphericalVoronoiRegion",
    "Partition",
    "tau_e_relative",
    "estimate_tau_bounds",
    "build_trigger_partition",
    "build_cone_partition",
    "build_polyhedral_partition",
    "whole_space_partition",
    "membership",
    "sample_region",
    "sphere_samples",
]

DEFAULT_HORIZON = 1.0
GRID_POINTS = 2000


def sphere_samples(dim, count, seed):
    """Deterministic quasi-uniform unit-sphere samples (seeded Gaussian)."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((count, dim))
    norms = np.linalg.norm(X, axis=1)
    # resample the (measure-zero) degenerate rows deterministically
    bad = norms < 1e-12
    while np.any(bad):
        X[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(X, axis=1)
        bad = norms < 1e-12
    return X / norms[:, None]


class _FlowGrid:
    """Precomputed held-input flow e^{C j h} on a uniform tau grid.

    C is the augmented matrix [[A, BK], [0, 0]], so the top blocks of each
    grid entry yield G(j h). Also holds halved-step exponentials used to
    bisect between grid points without fresh expm calls.
    """

    def __init__(self, sys, horizon, grid_points, tol_conv):
        self.sys = sys
        self.horizon = float(horizon)
        self.grid_points = int(grid_points)
        self.h = self.horizon / self.grid_points
        n = sys.n
        self.n = n
        E_step = augmented_exponential(sys, self.h)
        E = np.empty((self.grid_points + 1, 2 * n, 2 * n))
        E[0] = np.eye(2 * n)
        for j in range(1, self.grid_points + 1):
            E[j] = E[j - 1] @ E_step
        self.E = E
        self.G = E[:, :n, :n] + E[:, :n, n:]
        self.taus = np.linspace(0.0, self.horizon, self.grid_points + 1)
        # bisection depth: final bracket width h / 2^K <= tol_conv
        self.depth = max(1, int(np.ceil(np.log2(max(2.0, self.h / tol_conv)))))
        self.halves = [augmented_exponential(sys, self.h / 2 ** k)
                       for k in range(1, self.depth + 1)]

    def flow_norms(self, X, chunk=512):
        """||G(t)x - x|| and ||G(t)x|| for each grid time t and each row x of X.

        Returns two (grid_points+1, len(X)) arrays. These are sigma-free, so a
        sigma sweep (calibration) reuses them.
        """
        X = np.asarray(X, float)
        m = X.shape[0]
        T = self.grid_points + 1
        err = np.empty((T, m))
        xn = np.empty((T, m))
        for lo in range(0, m, chunk):
            hi = min(m, lo + chunk)
            xs = np.einsum("tij,mj->tmi", self.G, X[lo:hi])
            err[:, lo:hi] = np.linalg.norm(xs - X[lo:hi][None, :, :], axis=2)
            xn[:, lo:hi] = np.linalg.norm(xs, axis=2)
        return err, xn

    def refine(self, X, bracket_idx, sigma):
        """Bisect the crossing of ||G(t)x - x|| = sigma ||G(t)x|| inside the
        grid cell left of bracket_idx, for each row of X. Vectorized over rows."""
        X = np.asarray(X, float)
        n = self.n
        tau_lo = self.taus[bracket_idx - 1].copy()
        E_lo = self.E[bracket_idx - 1].copy()
        step = self.h
        for k in range(self.depth):
            step *= 0.5
            E_mid = E_lo @ self.halves[k]
            G_mid = E_mid[:, :n, :n] + E_mid[:, :n, n:]
            xs = np.einsum("mij,mj->mi", G_mid, X)
            f = np.linalg.norm(xs - X, axis=1) - sigma * np.linalg.norm(xs, axis=1)
            advance = f < 0.0
            tau_lo[advance] += step
            E_lo[advance] = E_mid[advance]
        return tau_lo + step


_FLOW_CACHE = {}


def _flow_grid(sys, horizon, grid_points, tol_conv):
    key = (sys.A.tobytes(), sys.B.tobytes(), sys.K.tobytes(),
           float(horizon), int(grid_points), float(tol_conv))
    grid = _FLOW_CACHE.get(key)
    if grid is None:
        grid = _FlowGrid(sys, horizon, grid_points, tol_conv)
        _FLOW_CACHE[key] = grid
    return grid


class RelativeTrigger:
    """Relative-threshold rule: event when ||x(tau) - x(0)|| reaches
    sigma ||x(tau)|| along the held-input flow x(tau) = G(tau) x(0).

    tau_e is found by a coarse grid scan (step = horizon / 2000) followed by
    bisection; directions that never cross within the horizon saturate to it.
    """

    def __init__(self, sys, sigma, horizon=DEFAULT_HORIZON,
                 grid_points=GRID_POINTS, tol=numkit.DEFAULT_TOL):
        if not (sigma > 0.0):
            raise InvalidArgumentError(f"sigma must be positive, got {sigma}")
        if not (horizon > 0.0):
            raise InvalidArgumentError(f"horizon must be positive, got {horizon}")
        self.sys = sys
        self.sigma = float(sigma)
        self.horizon = float(horizon)
        self.tol = tol
        self.grid = _flow_grid(sys, horizon, grid_points, tol.tol_conv)

    def tau_e_batch(self, X, norms=None, refine_rows=None):
        """tau_e for each unit row of X.

        norms: optional (err, xn) pair from grid.flow_norms(X) to reuse.
        refine_rows: optional boolean mask; rows outside it keep the grid
        upper bound of their bracket (cheap, biased <= one grid step high).
        """
        X = np.asarray(X, float)
        X = X / np.linalg.norm(X, axis=1, keepdims=True)
        err, xn = norms if norms is not None else self.grid.flow_norms(X)
        crossed = err >= self.sigma * xn
        crossed[0] = False  # tau = 0 never triggers
        any_cross = crossed.any(axis=0)
        first = np.argmax(crossed, axis=0)
        out = np.full(X.shape[0], self.horizon)
        rows = any_cross.copy()
        if refine_rows is not None:
            coarse = rows & ~refine_rows
            out[coarse] = self.grid.taus[first[coarse]]
            rows = rows & refine_rows
        if np.any(rows):
            out[rows] = self.grid.refine(X[rows], first[rows], self.sigma)
        return out

    def tau_e(self, x):
        x = np.asarray(x, float)
        if np.linalg.norm(x) == 0.0:
            raise InvalidArgumentError("tau_e of the zero state is undefined")
        return float(self.tau_e_batch(x[None, :])[0])


def tau_e_relative(sys, x, sigma, horizon=DEFAULT_HORIZON, tol=numkit.DEFAULT_TOL):
    """Inter-event time of the relative-threshold rule from state x."""
    return RelativeTrigger(sys, sigma, horizon, tol=tol).tau_e(x)


def estimate_tau_bounds(sys, sigma, sample_count=2048, seed=0,
                        horizon=DEFAULT_HORIZON, tol=numkit.DEFAULT_TOL,
                        trigger=None):
    """Sampled (min, max) of tau_e over seeded unit-sphere directions.

    Estimates are conservative: the true minimum over the sphere can only be
    smaller and the true maximum larger than the sampled values.
    """
    if sample_count < 100:
        raise InvalidArgumentError("sample_count must be at least 100")
    trig = trigger if trigger is not None else RelativeTrigger(
        sys, sigma, horizon, tol=tol)
    X = sphere_samples(sys.n, sample_count, seed)
    err, xn = trig.grid.flow_norms(X)
    crossed = err >= trig.sigma * xn
    crossed[0] = False
    any_cross = crossed.any(axis=0)
    first = np.argmax(crossed, axis=0)
    first[~any_cross] = trig.grid.grid_points + 1
    # only rows sharing the extreme bracket cells can attain the min/max
    extremes = (first == first.min()) | ((first == first.max()) & any_cross)
    taus = trig.tau_e_batch(X, norms=(err, xn), refine_rows=extremes)
    return float(taus.min()), float(taus.max())


class ConicRegion:
    """Base class: a cone with an index and an assigned inter-event time."""

    kind = "abstract"

    def __init__(self, index, tau, ambient_dim):
        self.index = int(index)
        self.tau = float(tau)
        self.ambient_dim = int(ambient_dim)

    def contains(self, x):
        raise NotImplementedError

    def margin(self, x):
        """Signed membership margin: positive inside, negative outside."""
        raise NotImplementedError


class TriggerSliceRegion(ConicRegion):
    """Half-open tau_e slice [lo, hi); the first/last slices absorb the
    directions below/above the declared bounds (saturation)."""

    kind = "trigger-slice"

    def __init__(self, index, tau, lo, hi, trigger, first, last):
        super().__init__(index, tau, trigger.sys.n)
        self.lo = float(lo)
        self.hi = float(hi)
        self.trigger = trigger
        self.first = bool(first)
        self.last = bool(last)

    def _unit(self, x):
        x = np.asarray(x, float)
        nx = np.linalg.norm(x)
        if nx == 0.0:
            raise InvalidArgumentError("the origin belongs to no region")
        return x / nx

    def contains(self, x):
        te = self.trigger.tau_e(self._unit(x))
        above = self.first or te >= self.lo
        below = self.last or te < self.hi
        return bool(above and below)

    def margin(self, x):
        te = self.trigger.tau_e(self._unit(x))
        parts = []
        if not self.first:
            parts.append(te - self.lo)
        if not self.last:
            parts.append(self.hi - te)
        return float(min(parts)) if parts else np.inf


class PolyhedralConeRegion(ConicRegion):
    """Cone {x : N x >= 0} given by inward normal rows N (empty N = whole space)."""

    kind = "polyhedral-cone"

    def __init__(self, index, tau, normals, ambient_dim):
        super().__init__(index, tau, ambient_dim)
        normals = np.asarray(normals, float).reshape(-1, ambient_dim)
        if normals.size:
            norms = np.linalg.norm(normals, axis=1)
            if np.any(norms == 0.0):
                raise InvalidArgumentError("zero normal row")
            normals = normals / norms[:, None]
        self.normals = normals

    def contains(self, x):
        if np.linalg.norm(x) == 0.0:
            raise InvalidArgumentError("the origin belongs to no region")
        if self.normals.shape[0] == 0:
            return True
        return bool(np.all(self.normals @ np.asarray(x, float) >= 0.0))

    def margin(self, x):
        x = np.asarray(x, float)
        x = x / np.linalg.norm(x)
        if self.normals.shape[0] == 0:
            return np.inf
        return float(np.min(self.normals @ x))


class SphericalVoronoiRegion(ConicRegion):
    """Union of nearest-center cells on the unit sphere (several cells when
    equal-tau cones were merged); ties go to the lowest region index."""

    kind = "spherical-voronoi"

    def __init__(self, index, tau, own_centers, all_centers, region_of_center):
        super().__init__(index, tau, all_centers.shape[1])
        self.own_centers = np.asarray(own_centers, float)
        self.all_centers = np.asarray(all_centers, float)
        self.region_of_center = np.asarray(region_of_center, int)

    def contains(self, x):
        x = np.asarray(x, float)
        nx = np.linalg.norm(x)
        if nx == 0.0:
            raise InvalidArgumentError("the origin belongs to no region")
        dots = self.all_centers @ (x / nx)
        best = dots.max()
        winners = self.region_of_center[dots == best]
        return int(winners.min()) == self.index

    def margin(self, x):
        x = np.asarray(x, float)
        x = x / np.linalg.norm(x)
        dots = self.all_centers @ x
        own = self.region_of_center == self.index
        others = dots[~own].max() if np.any(~own) else -np.inf
        return float(dots[own].max() - others)


class Partition:
    """Indexed family of conic regions covering the sphere, with one assigned
    inter-event time per region (strictly increasing)."""

    def __init__(self, regions, trigger=None):
        self.regions = tuple(regions)
        self.taus = tuple(r.tau for r in self.regions)
        self.trigger = trigger
        if not self.regions:
            raise InvalidArgumentError("a partition needs at least one region")
        if any(t <= 0.0 for t in self.taus):
            raise InvalidArgumentError("inter-event times must be positive")
        if any(self.taus[i] >= self.taus[i + 1] for i in range(len(self.taus) - 1)):
            raise InvalidArgumentError("region taus must be strictly increasing")
        self.n = self.regions[0].ambient_dim
        kinds = {r.kind for r in self.regions}
        if len(kinds) != 1:
            raise InvalidArgumentError(f"mixed region kinds in one partition: {kinds}")
        self.kind = kinds.pop()
        if self.kind == "trigger-slice":
            # interior edges of the half-open slices, in tau_e order
            self._edges = np.array([r.lo for r in self.regions] +
                                   [self.regions[-1].hi])

    @property
    def r(self):
        return len(self.regions)

    def membership(self, x):
        x = np.asarray(x, float)
        return int(self.membership_batch(x[None, :])[0])

    def membership_batch(self, X):
        X = np.asarray(X, float)
        norms = np.linalg.norm(X, axis=1)
        if np.any(norms == 0.0):
            raise InvalidArgumentError("the origin belongs to no region")
        U = X / norms[:, None]
        if self.kind == "trigger-slice":
            te = self.trigger.tau_e_batch(U)
            idx = np.searchsorted(self._edges, te, side="right") - 1
            return np.clip(idx, 0, self.r - 1).astype(int)
        if self.kind == "spherical-voronoi":
            centers = self.regions[0].all_centers
            region_of = self.regions[0].region_of_center
            dots = U @ centers.T
            best = dots.max(axis=1, keepdims=True)
            out = np.empty(U.shape[0], dtype=int)
            for i in range(U.shape[0]):
                out[i] = region_of[dots[i] == best[i]].min()
            return out
        # polyhedral: first region (lowest index) whose constraints all hold
        out = np.full(U.shape[0], -1, dtype=int)
        for reg in self.regions:
            if reg.normals.shape[0] == 0:
                mask = np.ones(U.shape[0], bool)
            else:
                mask = np.all(U @ reg.normals.T >= 0.0, axis=1)
            take = mask & (out < 0)
            out[take] = reg.index
        if np.any(out < 0):
            raise InvalidArgumentError(
                "polyhedral regions do not cover some sampled directions")
        return out


def membership(partition, x):
    """Region index of a nonzero state (Eq.-style trigger dispatch)."""
    return partition.membership(x)


def build_trigger_partition(sys, sigma, r, tau_min, tau_max,
                            horizon=DEFAULT_HORIZON, tol=numkit.DEFAULT_TOL,
                            trigger=None):
    """Partition induced by the relative trigger: r equal-width tau_e slices
    of [tau_min, tau_max]; region i fires with the left endpoint of its slice."""
    if r < 1:
        raise InvalidArgumentError("region count must be at least 1")
    if not (0.0 < tau_min < tau_max):
        raise InvalidArgumentError("need 0 < tau_min < tau_max")
    trig = trigger if trigger is not None else RelativeTrigger(
        sys, sigma, horizon, tol=tol)
    edges = np.linspace(tau_min, tau_max, r + 1)
    regions = [
        TriggerSliceRegion(i, edges[i], edges[i], edges[i + 1], trig,
                           first=(i == 0), last=(i == r - 1))
        for i in range(r)
    ]
    return Partition(regions, trigger=trig)


def build_cone_partition(centers, taus):
    """Spherical-Voronoi partition from cell centers and per-cell taus;
    cells sharing a tau are merged into one region (A1)."""
    centers = np.asarray(centers, float)
    if centers.ndim != 2:
        raise InvalidArgumentError("centers must be a 2-D array of unit vectors")
    norms = np.linalg.norm(centers, axis=1)
    if np.any(norms == 0.0):
        raise InvalidArgumentError("zero center vector")
    centers = centers / norms[:, None]
    taus = [float(t) for t in taus]
    if len(taus) != centers.shape[0]:
        raise InvalidArgumentError("need exactly one tau per center")
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            if np.linalg.norm(centers[i] - centers[j]) < 1e-12:
                raise InvalidArgumentError(f"duplicate centers at {i} and {j}")
    unique_taus = sorted(set(taus))
    region_of_center = np.array([unique_taus.index(t) for t in taus], int)
    regions = []
    for idx, t in enumerate(unique_taus):
        own = centers[region_of_center == idx]
        regions.append(SphericalVoronoiRegion(idx, t, own, centers, region_of_center))
    return Partition(regions)


def build_polyhedral_partition(normals_list, taus, ambient_dim=None):
    """Partition from explicit inward-normal cones (synthetic constructions).

    The caller is responsible for the cones covering the sphere; membership
    assigns boundary points to the lowest claiming index. Regions are ordered
    by increasing tau.
    """
    if len(normals_list) != len(taus):
        raise InvalidArgumentError("need exactly one tau per cone")
    if ambient_dim is None:
        for N in normals_list:
            N = np.atleast_2d(np.asarray(N, float))
            if N.size:
                ambient_dim = N.shape[1]
                break
    if ambient_dim is None:
        raise InvalidArgumentError(
            "cannot infer ambient dimension from empty normals; pass ambient_dim")
    order = np.argsort(np.asarray(taus, float), kind="stable")
    regions = []
    for new_idx, old_idx in enumerate(order):
        regions.append(PolyhedralConeRegion(
            new_idx, float(taus[old_idx]), normals_list[old_idx], ambient_dim))
    return Partition(regions)


def whole_space_partition(ambient_dim, tau):
    """Single region covering the whole sphere (periodic-control degenerate case)."""
    region = PolyhedralConeRegion(0, float(tau), np.zeros((0, ambient_dim)), ambient_dim)
    return Partition([region])


def sample_region(region, count, seed, max_batches=200):
    """Seeded rejection sampling of unit vectors of one region."""
    rng_seed = [int(seed) & 0x7FFFFFFF, region.index]
    rng = np.random.default_rng(rng_seed)
    out = []
    drawn = 0
    batch = max(256, count)
    for _ in range(max_batches):
        X = rng.standard_normal((batch, region.ambient_dim))
        X = X / np.linalg.norm(X, axis=1, keepdims=True)
        drawn += batch
        for x in X:
            if region.contains(x):
                out.append(x)
                if len(out) == count:
                    return np.array(out)
    rate = len(out) / drawn if drawn else 0.0
    if rate < 1e-5:
        warnings.warn(
            f"region {region.index} acceptance rate {rate:.2e} < 1e-5; "
            "region may be empty", stacklevel=2)
    return np.array(out) if out else np.zeros((0, region.ambient_dim))


def transition_matrices(sys, partition):
    """G(tau_i) for every region of the partition, index aligned."""
    return [transition_matrix(sys, t) for t in partition.taus]

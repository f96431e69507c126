"""Normalized inter-event jump map, event-sequence simulation and steady-state
detection on the resulting inter-event times.

One gamma step sends a nonzero state x to G(tau_i) x / ||G(tau_i) x|| with i
the region of x; the inter-event time of the step is the region's tau. Raw
state norms are tracked in log space so long decaying/growing runs neither
underflow nor overflow.
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import numkit
from .errors import AssumptionViolationError, InvalidArgumentError

__all__ = [
    "IETTrace",
    "SteadyState",
    "gamma_step",
    "gamma_step_batch",
    "simulate",
    "detect_steady_state",
    "write_trace_csv",
    "trace_to_dict",
]


def _matrices(Gs):
    return [np.asarray(getattr(g, "G", g), float) for g in Gs]


@dataclass(frozen=True)
class IETTrace:
    """Event-indexed record of a closed-loop run.

    normalized_states has one more row than the per-step fields: it includes
    the state after the final event.
    """

    normalized_states: np.ndarray  # (N+1, n)
    region_indices: np.ndarray     # (N,)
    iets: np.ndarray               # (N,)
    event_times: np.ndarray        # (N+1,), event_times[0] = 0
    log_norms: np.ndarray          # (N+1,), log ||x(t_k)||

    def __len__(self):
        return int(self.region_indices.shape[0])


@dataclass(frozen=True)
class SteadyState:
    """Detected tail behavior of an inter-event sequence.

    kind is 'constant', 'periodic' or 'none'; a constant is the period-1
    special case and pattern always holds the minimal period.
    """

    kind: str
    pattern: tuple        # taus, minimal period (empty for 'none')
    region_pattern: tuple
    onset_index: int

    @property
    def period(self):
        return len(self.pattern)


def gamma_step(partition, Gs, x, tol=numkit.DEFAULT_TOL):
    """One jump: returns (next unit state, region index, inter-event time)."""
    x = np.asarray(x, float)
    nx = np.linalg.norm(x)
    if nx == 0.0:
        raise InvalidArgumentError("gamma map undefined at the origin")
    u = x / nx
    i = partition.membership(u)
    G = _matrices(Gs)[i]
    y = G @ u
    ny = np.linalg.norm(y)
    if ny <= tol.tol_rank * max(1.0, np.linalg.norm(G)):
        raise AssumptionViolationError(
            f"G(tau_{i}) maps a region-{i} direction to ~0 (A1 violated)")
    return y / ny, i, partition.taus[i]


def gamma_step_batch(partition, Gs, X, tol=numkit.DEFAULT_TOL):
    """Vectorized gamma step over the rows of X."""
    X = np.asarray(X, float)
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise InvalidArgumentError("gamma map undefined at the origin")
    U = X / norms
    idx = partition.membership_batch(U)
    mats = np.stack(_matrices(Gs))
    Y = np.einsum("mij,mj->mi", mats[idx], U)
    ny = np.linalg.norm(Y, axis=1)
    if np.any(ny <= tol.tol_rank):
        raise AssumptionViolationError("gamma step collapsed a state to ~0 (A1 violated)")
    taus = np.asarray(partition.taus)[idx]
    return Y / ny[:, None], idx, taus, ny


def simulate(partition, Gs, x0, N, tol=numkit.DEFAULT_TOL):
    """Iterate the gamma map N times from x0 and record the event sequence."""
    if N < 1:
        raise InvalidArgumentError("need at least one event")
    x0 = np.asarray(x0, float)
    nx = np.linalg.norm(x0)
    if nx == 0.0:
        raise InvalidArgumentError("initial state must be nonzero")
    n = x0.shape[0]
    mats = _matrices(Gs)

    states = np.empty((N + 1, n))
    regions = np.empty(N, dtype=int)
    iets = np.empty(N)
    log_norms = np.empty(N + 1)
    states[0] = x0 / nx
    log_norms[0] = np.log(nx)
    for k in range(N):
        u = states[k]
        i = partition.membership(u)
        y = mats[i] @ u
        ny = np.linalg.norm(y)
        if ny <= tol.tol_rank * max(1.0, np.linalg.norm(mats[i])):
            raise AssumptionViolationError(
                f"state collapsed to ~0 at event {k} in region {i} (A1 violated)")
        states[k + 1] = y / ny
        regions[k] = i
        iets[k] = partition.taus[i]
        log_norms[k + 1] = log_norms[k] + np.log(ny)
    event_times = np.concatenate([[0.0], np.cumsum(iets)])
    return IETTrace(states, regions, iets, event_times, log_norms)


def detect_steady_state(trace, window=100, max_period=20):
    """Shortest exact period of the tail of the region-index sequence.

    Matching is exact on region indices (the taus are drawn from a finite
    set). A period is accepted only if the window covers at least two full
    repetitions. onset_index is the first event from which the periodicity
    holds over the whole remaining trace.
    """
    if max_period < 1:
        raise InvalidArgumentError("max_period must be at least 1")
    idx = np.asarray(trace.region_indices if hasattr(trace, "region_indices")
                     else trace, dtype=int)
    N = idx.shape[0]
    window = min(int(window), N)
    if window < 2:
        return SteadyState("none", (), (), N)
    tail = idx[N - window:]
    taus = np.asarray(trace.iets, float) if hasattr(trace, "iets") else None
    for p in range(1, max_period + 1):
        if window < 2 * p:
            break
        if np.all(tail[:-p] == tail[p:]):
            # extend the periodicity backwards to locate the onset
            onset = N - window
            while onset > 0 and onset + p <= N and idx[onset - 1] == idx[onset - 1 + p]:
                onset -= 1
            region_pattern = tuple(int(v) for v in idx[N - p:])
            if taus is not None:
                tau_pattern = tuple(float(t) for t in taus[N - p:])
            else:
                tau_pattern = region_pattern
            kind = "constant" if p == 1 else "periodic"
            return SteadyState(kind, tau_pattern, region_pattern, int(onset))
    return SteadyState("none", (), (), N)


def trace_to_dict(trace):
    """JSON-ready representation of a trace."""
    return {
        "events": len(trace),
        "event_times": [float(t) for t in trace.event_times],
        "region_indices": [int(i) for i in trace.region_indices],
        "iets": [float(t) for t in trace.iets],
        "normalized_states": [[float(v) for v in row]
                              for row in trace.normalized_states],
        "log_norms": [float(v) for v in trace.log_norms],
    }


def write_trace_csv(trace, path_or_file):
    """CSV export: one row per event k with the state observed at t_k."""
    n = trace.normalized_states.shape[1]
    own = isinstance(path_or_file, (str, bytes))
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh)
        w.writerow(["k", "t_k", "region", "iet"]
                   + [f"x{j}" for j in range(n)] + ["log_norm"])
        for k in range(len(trace)):
            w.writerow(
                [k, format(trace.event_times[k], ".17g"),
                 int(trace.region_indices[k]),
                 format(trace.iets[k], ".17g")]
                + [format(v, ".17g") for v in trace.normalized_states[k]]
                + [format(trace.log_norms[k], ".17g")])
    finally:
        if own:
            fh.close()

"""End-to-end analysis: partition construction, assumption audit, per-region
spectra and screening, candidate detection, stability verdicts and periodic
patterns, assembled into a JSON-ready report.

Everything keys its randomness off the config seed, so a config determines the
report byte for byte.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import invariants, numkit, periodic, stability
from .errors import HypothesisViolationError
from .regions import (RelativeTrigger, build_cone_partition,
                      build_trigger_partition, estimate_tau_bounds)
from .report import jsonable
from .system import check_assumption_A1, transition_matrix

__all__ = ["build_partition", "analyze", "REPORT_VERSION"]

REPORT_VERSION = 1


def build_partition(config):
    """Partition (and trigger, if any) described by a validated config."""
    sys = config.system
    spec = config.partition_spec
    if spec["mode"] == "tau-slices":
        trig = RelativeTrigger(sys, config.sigma, config.horizon,
                               tol=config.tolerances)
        tau_min, tau_max = spec["tau_min"], spec["tau_max"]
        if tau_min is None or tau_max is None:
            est_min, est_max = estimate_tau_bounds(
                sys, config.sigma, spec["bound_samples"],
                seed=[config.seed, 1], trigger=trig)
            tau_min = tau_min if tau_min is not None else est_min
            tau_max = tau_max if tau_max is not None else est_max
        return build_trigger_partition(sys, config.sigma, spec["r"],
                                       tau_min, tau_max, config.horizon,
                                       tol=config.tolerances, trigger=trig)
    return build_cone_partition(spec["centers"], spec["taus"])


def _spectrum_dict(spec):
    return {
        "spectral_radius": spec.spectral_radius,
        "eigenvalues": [
            {"value": {"re": p.value.real, "im": p.value.imag},
             "algebraic_mult": p.algebraic_mult,
             "geometric_mult": p.geometric_mult}
            for p in spec.pairs
        ],
    }


def _candidate_dict(cand, verdict):
    d = {
        "region": cand.region_index,
        "kind": cand.kind,
        "generators": [list(map(float, g)) for g in cand.generators],
        "span_dim": cand.span.dim,
        "span_basis": [list(map(float, col)) for col in cand.span.basis.T],
        "eigenvalues": [{"re": l.real, "im": l.imag} for l in cand.eigenvalues],
        "contained": cand.contained,
        "verified": cand.verified,
    }
    if verdict is not None:
        d["stability"] = {
            "verdict": verdict.verdict,
            "reasons": list(verdict.reasons),
            "defective": verdict.defective,
        }
    return d


def _screening_dict(rep):
    return {
        "mu_max": rep.mu_max,
        "pis_free": rep.pis_free,
        "certified": rep.certified,
        "entries": [
            {"mu": e.mu,
             "dim": e.subspace.dim,
             "intersects": e.intersects,
             "exact": e.exact,
             "eigenvalue_count": e.eigenvalue_count,
             "witnesses": [list(map(float, w)) for w in e.witnesses]}
            for e in rep.entries
        ],
    }


def _judge(cand, G, tol, partition, do_probe, partition_for_probe, Gs, seed):
    verdict = None
    if cand.verified:
        try:
            if cand.kind == invariants.UNION_OF_RAYS:
                verdict = stability.classify_general(cand, G, tol)
            else:
                verdict = stability.classify(cand, G, tol, partition=partition)
        except HypothesisViolationError as exc:
            verdict = stability.StabilityVerdict(
                "hypothesis-violation", (str(exc),))
        if do_probe and verdict is not None and \
                verdict.verdict != "hypothesis-violation":
            probe = stability.empirical_probe(
                cand, partition_for_probe, Gs, seed=seed, tol=tol)
            verdict = stability.StabilityVerdict(
                verdict.verdict, verdict.reasons + (
                    f"probe verdict: {probe.verdict}",) + probe.reasons,
                verdict.defective, verdict.lam, verdict.spectral_partition)
    return verdict


def analyze(config, jobs=1):
    """Run the configured pipeline and return the JSON-ready report dict."""
    sys = config.system
    tol = config.tolerances
    partition = build_partition(config)
    Gs = [transition_matrix(sys, t) for t in partition.taus]
    mats = [g.G for g in Gs]

    a1 = check_assumption_A1(sys, partition, Gs, tol,
                             seed=config.seed + 17)

    candidates = []
    if config.analysis.get("pirs", True):
        candidates += invariants.find_pirs(partition, mats, tol)
    if config.analysis.get("subspaces", True):
        candidates += invariants.find_invariant_subspaces(
            partition, mats, tol=tol, seed=config.seed + 29)
    if config.analysis.get("unions", True):
        candidates += invariants.find_union_of_rays(partition, mats, tol=tol)

    do_stability = config.analysis.get("stability", True)
    do_probe = config.analysis.get("probe", False)

    def region_block(i):
        G = mats[i]
        spec = numkit.eig(G, tol)
        block = {
            "index": i,
            "tau": partition.taus[i],
            "spectrum": _spectrum_dict(spec),
        }
        if config.analysis.get("screening", True):
            rep = invariants.screen_region(partition.regions[i], G, tol,
                                           seed=config.seed + 31)
            block["screening"] = _screening_dict(rep)
            nopis = invariants.screen_pis_without_pir(
                partition.regions[i], G, tol, seed=config.seed + 31)
            block["pis_without_pir"] = {
                "pir_exists": nopis.pir_exists,
                "negative_eigenline_touches": nopis.negative_eigenline_touches,
                "equal_magnitude_pair_touches": nopis.equal_magnitude_pair_touches,
                "no_pis_possible": nopis.no_pis_possible,
                "certified": nopis.certified,
            }
        cands = [c for c in candidates if c.region_index == i]
        judged = []
        for cand in cands:
            verdict = _judge(cand, G, tol, partition, do_probe, partition,
                             mats, config.seed + 41) if do_stability else None
            judged.append(_candidate_dict(cand, verdict))
        block["candidates"] = judged
        return block

    indices = list(range(partition.r))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            region_blocks = list(pool.map(region_block, indices))
    else:
        region_blocks = [region_block(i) for i in indices]

    report = {
        "report_version": REPORT_VERSION,
        "seed": config.seed,
        "system": {
            "A": jsonable(sys.A), "B": jsonable(sys.B), "K": jsonable(sys.K),
            "n": sys.n, "m": sys.m,
            "closed_loop_hurwitz": sys.is_hurwitz_closed_loop(),
        },
        "trigger": config.trigger,
        "partition": {
            "mode": config.partition_spec["mode"],
            "r": partition.r,
            "taus": list(partition.taus),
        },
        "assumption_a1": {
            "passed": a1.passed,
            "duplicate_taus": [[i, j, t] for i, j, t in a1.duplicate_taus],
            "kernel_hits": [
                {"region": i, "power": p, "witness": list(map(float, w))}
                for i, p, w in a1.kernel_hits],
        },
        "regions": region_blocks,
    }
    if config.partition_spec["mode"] == "tau-slices":
        report["partition"]["edges"] = [float(v) for v in partition._edges]

    per = config.analysis.get("periodic")
    if per:
        patterns = periodic.enumerate_patterns(
            partition, mats, max_length=per.get("max_length", 1),
            harvest=per.get("harvest", 8), max_period=per.get("max_period", 20),
            seed=config.seed + 53)
        pattern_reports = []
        for pat in patterns:
            rep = periodic.analyze_pattern(partition, mats, pat, tol,
                                           seed=config.seed + 59)
            pattern_reports.append({
                "pattern": list(rep.canonical),
                "taus": [partition.taus[j] for j in rep.canonical],
                "period": len(rep.canonical),
                "certified": rep.certified,
                "asymptotically_stable": rep.asymptotically_stable,
                "mu_max": rep.smu.mu_max,
                "candidates": [_candidate_dict(c, v)
                               for c, v in rep.candidates],
            })
        report["periodic"] = {"patterns": pattern_reports}
    else:
        report["periodic"] = None
    return report

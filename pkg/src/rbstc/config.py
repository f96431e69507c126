"""Analysis-configuration ingestion and validation.

Configs are plain JSON; validation is hand-rolled so error messages can name
the offending field precisely (the shipped JSON schema mirrors these rules
for external tooling).
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .numkit import Tolerances
from .system import LinearSystem, pole_place_companion

__all__ = ["AnalysisConfig", "ConfigError", "load_config", "parse_config"]


class ConfigError(InvalidArgumentError):
    """Malformed configuration; message names the offending field."""


@dataclass(frozen=True)
class AnalysisConfig:
    system: LinearSystem
    trigger: dict | None        # {"type": "relative", "sigma", "horizon"}
    partition_spec: dict        # {"mode": "tau-slices"|"cones", ...}
    tolerances: Tolerances
    seed: int
    analysis: dict = field(default_factory=dict)

    @property
    def sigma(self):
        return self.trigger["sigma"] if self.trigger else None

    @property
    def horizon(self):
        return self.trigger.get("horizon", 1.0) if self.trigger else 1.0


def _expect(cond, path, msg):
    if not cond:
        raise ConfigError(f"config field '{path}': {msg}")


def _matrix(obj, path):
    _expect(isinstance(obj, list) and obj and all(isinstance(r, list) for r in obj),
            path, "must be a row-major array of arrays of numbers")
    try:
        M = np.asarray(obj, float)
    except (TypeError, ValueError):
        raise ConfigError(f"config field '{path}': entries must be numbers") from None
    _expect(M.ndim == 2, path, "must be two-dimensional")
    _expect(np.all(np.isfinite(M)), path, "must be finite")
    return M


def _poles(obj, path):
    _expect(isinstance(obj, list) and obj, path, "must be a nonempty list")
    out = []
    for k, item in enumerate(obj):
        if isinstance(item, (int, float)):
            out.append(complex(item))
        elif (isinstance(item, list) and len(item) == 2
              and all(isinstance(v, (int, float)) for v in item)):
            out.append(complex(item[0], item[1]))
        else:
            raise ConfigError(
                f"config field '{path}[{k}]': poles are numbers or [re, im] pairs")
    return np.asarray(out)


def parse_config(doc):
    """Validate a decoded JSON document and build the typed configuration."""
    _expect(isinstance(doc, dict), "<root>", "must be a JSON object")
    known = {"system", "trigger", "partition", "tolerances", "seed", "analysis"}
    for key in doc:
        _expect(key in known, key, "unknown top-level field")

    sysdoc = doc.get("system")
    _expect(isinstance(sysdoc, dict), "system", "is required and must be an object")
    A = _matrix(sysdoc.get("A"), "system.A")
    B = _matrix(sysdoc.get("B"), "system.B")
    has_K = "K" in sysdoc
    has_poles = "desired_poles" in sysdoc
    _expect(has_K != has_poles, "system",
            "exactly one of K or desired_poles must be supplied")
    if has_K:
        K = _matrix(sysdoc["K"], "system.K")
    else:
        poles = _poles(sysdoc["desired_poles"], "system.desired_poles")
        _expect(len(poles) == A.shape[0], "system.desired_poles",
                f"need exactly {A.shape[0]} poles")
        try:
            K = pole_place_companion(A, B, poles)
        except InvalidArgumentError as exc:
            raise ConfigError(f"config field 'system.desired_poles': {exc}") from exc
    try:
        system = LinearSystem(A, B, K)
    except InvalidArgumentError as exc:
        raise ConfigError(f"config field 'system': {exc}") from exc

    trigger = doc.get("trigger")
    if trigger is not None:
        _expect(isinstance(trigger, dict), "trigger", "must be an object")
        _expect(trigger.get("type") == "relative", "trigger.type",
                "only 'relative' is supported")
        sigma = trigger.get("sigma")
        _expect(isinstance(sigma, (int, float)) and sigma > 0,
                "trigger.sigma", "must be a positive number")
        horizon = trigger.get("horizon", 1.0)
        _expect(isinstance(horizon, (int, float)) and horizon > 0,
                "trigger.horizon", "must be a positive number")
        trigger = {"type": "relative", "sigma": float(sigma),
                   "horizon": float(horizon)}

    part = doc.get("partition")
    _expect(isinstance(part, dict), "partition", "is required and must be an object")
    mode = part.get("mode")
    _expect(mode in ("tau-slices", "cones"), "partition.mode",
            "must be 'tau-slices' or 'cones'")
    if mode == "tau-slices":
        _expect(trigger is not None, "partition",
                "tau-slices mode requires a trigger block")
        r = part.get("r")
        _expect(isinstance(r, int) and r >= 1, "partition.r",
                "must be an integer >= 1")
        for name in ("tau_min", "tau_max"):
            if part.get(name) is not None:
                _expect(isinstance(part[name], (int, float)) and part[name] > 0,
                        f"partition.{name}", "must be a positive number")
        if part.get("tau_min") is not None and part.get("tau_max") is not None:
            _expect(part["tau_min"] < part["tau_max"], "partition",
                    "tau_min must be below tau_max")
        samples = part.get("bound_samples", 2048)
        _expect(isinstance(samples, int) and samples >= 100,
                "partition.bound_samples", "must be an integer >= 100")
        partition_spec = {"mode": mode, "r": r,
                          "tau_min": part.get("tau_min"),
                          "tau_max": part.get("tau_max"),
                          "bound_samples": samples}
    else:
        centers = _matrix(part.get("centers"), "partition.centers")
        taus = part.get("taus")
        _expect(isinstance(taus, list) and len(taus) == centers.shape[0],
                "partition.taus", "must list one positive tau per center")
        _expect(all(isinstance(t, (int, float)) and t > 0 for t in taus),
                "partition.taus", "must list one positive tau per center")
        _expect(centers.shape[1] == system.n, "partition.centers",
                f"centers must live in dimension {system.n}")
        partition_spec = {"mode": mode, "centers": centers,
                          "taus": [float(t) for t in taus]}

    toldoc = doc.get("tolerances", {})
    _expect(isinstance(toldoc, dict), "tolerances", "must be an object")
    tol_fields = {"tol_eig", "tol_rank", "tol_orth", "tol_member", "tol_conv"}
    for key in toldoc:
        _expect(key in tol_fields, f"tolerances.{key}", "unknown tolerance")
        _expect(isinstance(toldoc[key], (int, float)) and toldoc[key] > 0,
                f"tolerances.{key}", "must be a positive number")
    try:
        tolerances = Tolerances(**{k: float(v) for k, v in toldoc.items()})
    except InvalidArgumentError as exc:
        raise ConfigError(f"config field 'tolerances': {exc}") from exc

    seed = doc.get("seed", 0)
    _expect(isinstance(seed, int) and seed >= 0, "seed",
            "must be a nonnegative integer")

    analysis = doc.get("analysis", {})
    _expect(isinstance(analysis, dict), "analysis", "must be an object")
    defaults = {"pirs": True, "subspaces": True, "unions": True,
                "screening": True, "stability": True, "probe": False,
                "periodic": {"max_period": 20, "harvest": 8, "max_length": 1}}
    merged = dict(defaults)
    for key, val in analysis.items():
        _expect(key in defaults, f"analysis.{key}", "unknown analysis switch")
        if key == "periodic":
            if val is False:
                merged[key] = False
                continue
            _expect(isinstance(val, dict), "analysis.periodic",
                    "must be an object or false")
            sub = dict(defaults["periodic"])
            for k2, v2 in val.items():
                _expect(k2 in sub, f"analysis.periodic.{k2}", "unknown field")
                _expect(isinstance(v2, int) and v2 >= 0,
                        f"analysis.periodic.{k2}", "must be a nonnegative integer")
                sub[k2] = v2
            _expect(sub["max_period"] >= 1, "analysis.periodic.max_period",
                    "must be >= 1")
            merged[key] = sub
        else:
            _expect(isinstance(val, bool), f"analysis.{key}", "must be a boolean")
            merged[key] = val

    return AnalysisConfig(system=system, trigger=trigger,
                          partition_spec=partition_spec,
                          tolerances=tolerances, seed=int(seed),
                          analysis=merged)


def load_config(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(doc)

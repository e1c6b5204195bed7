"""JSON experiment configs: parsing, validation, canonical echo.

Two forms are accepted and told apart by their rate key:

* ladder form (key ``lambda_hat``): a sequence of systems staffed at
  n*mean_rate + lambda_hat*sqrt(n); ``n`` is shorthand for a single
  level ``n_values=[n]``.
* single-system form (key ``lambda_n``): one fully explicit system.

Unknown keys are hard errors; all defaults are resolved here so the
manifest can echo the exact experiment that ran.
"""
from __future__ import annotations

import json
from pathlib import Path

from .distributions import InterarrivalLaw, RateDistribution
from .ladder import LadderSpec
from .rng import RngStream
from .simulation import CONSTRUCTIONS, SystemConfig

_LADDER_KEYS = {
    "n", "n_values", "lambda_hat", "rate_dist", "arrival", "gamma", "xi0",
    "horizon", "reps", "policy", "construction", "seed", "stream_id",
    "seed_path", "freeze_rates",
}
_SYSTEM_KEYS = {
    "n", "lambda_n", "rate_dist", "arrival", "gamma", "x0", "horizon",
    "rates", "policy", "construction", "seed", "stream_id", "seed_path",
}


class ConfigError(ValueError):
    """Invalid config; message starts with the offending key path."""


def _fail(key: str, reason: str):
    raise ConfigError(f"{key}: {reason}")


def _require(cfg: dict, key: str):
    if key not in cfg:
        _fail(key, "required key is missing")
    return cfg[key]


def _number(cfg: dict, key: str, default=None):
    val = cfg.get(key, default)
    if val is default and key not in cfg:
        return default
    if not isinstance(val, (int, float)) or isinstance(val, bool):
        _fail(key, f"expected a number, got {val!r}")
    return float(val)


def _integer(cfg: dict, key: str, default=None):
    val = cfg.get(key, default)
    if val is default and key not in cfg:
        return default
    if not isinstance(val, int) or isinstance(val, bool):
        _fail(key, f"expected an integer, got {val!r}")
    return val


def _parse_rate_dist(raw) -> RateDistribution:
    if not isinstance(raw, dict):
        _fail("rate_dist", f"expected an object, got {raw!r}")
    try:
        return RateDistribution.from_dict(raw)
    except (ValueError, KeyError, TypeError) as exc:
        _fail("rate_dist", str(exc))


def _parse_arrival(raw) -> InterarrivalLaw:
    if raw is None:
        return InterarrivalLaw.exponential()
    if isinstance(raw, str):
        raw = {"kind": raw}
    if not isinstance(raw, dict):
        _fail("arrival", f"expected an object or kind name, got {raw!r}")
    try:
        return InterarrivalLaw.from_dict(raw)
    except (ValueError, KeyError, TypeError) as exc:
        _fail("arrival", str(exc))


def _parse_seed(cfg: dict) -> RngStream:
    seed = _integer(cfg, "seed", 0)
    stream_id = _integer(cfg, "stream_id", 0)
    raw_path = cfg.get("seed_path", [])
    if not isinstance(raw_path, list) or any(
        not isinstance(v, int) or isinstance(v, bool) for v in raw_path
    ):
        _fail("seed_path", f"expected a list of integers, got {raw_path!r}")
    try:
        return RngStream(seed, stream_id, tuple(raw_path))
    except ValueError as exc:
        _fail("seed_path" if raw_path else "seed", str(exc))


def _check_keys(cfg: dict, allowed: set, form: str):
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        _fail(unknown[0], f"unknown key for a {form} config")


def parse_config_dict(cfg: dict) -> LadderSpec | SystemConfig:
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    has_ladder = "lambda_hat" in cfg
    has_system = "lambda_n" in cfg
    if has_ladder and has_system:
        _fail("lambda_n", "config mixes ladder (lambda_hat) and system (lambda_n) forms")
    if not has_ladder and not has_system:
        _fail("lambda_hat", "config needs lambda_hat (ladder form) or lambda_n (system form)")
    if has_ladder:
        return _parse_ladder(cfg)
    return _parse_system(cfg)


def _parse_ladder(cfg: dict) -> LadderSpec:
    _check_keys(cfg, _LADDER_KEYS, "ladder")
    if "n_values" in cfg and "n" in cfg:
        _fail("n", "give either n or n_values, not both")
    if "n_values" in cfg:
        raw = cfg["n_values"]
        if not isinstance(raw, list) or not raw:
            _fail("n_values", f"expected a nonempty list, got {raw!r}")
        n_values = []
        for v in raw:
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                _fail("n_values", f"expected positive integers, got {v!r}")
            n_values.append(v)
    else:
        n = _integer(cfg, "n")
        if n is None:
            _fail("n_values", "ladder config needs n or n_values")
        n_values = [n]
    gamma = _number(cfg, "gamma")
    if gamma is None:
        _fail("gamma", "required key is missing")
    if gamma < 0:
        _fail("gamma", f"must be nonnegative, got {gamma}")
    horizon = _number(cfg, "horizon")
    if horizon is None:
        _fail("horizon", "required key is missing")
    if horizon <= 0:
        _fail("horizon", f"must be positive, got {horizon}")
    reps = _integer(cfg, "reps", 100)
    if reps < 1:
        _fail("reps", f"must be >= 1, got {reps}")
    freeze = cfg.get("freeze_rates", False)
    if not isinstance(freeze, bool):
        _fail("freeze_rates", f"expected a boolean, got {freeze!r}")
    construction = cfg.get("construction", "potential_stream")
    if construction not in CONSTRUCTIONS:
        _fail("construction", f"expected one of {CONSTRUCTIONS}, got {construction!r}")
    try:
        return LadderSpec(
            n_values=tuple(n_values),
            lambda_hat=_number(cfg, "lambda_hat"),
            rate_dist=_parse_rate_dist(_require(cfg, "rate_dist")),
            gamma=gamma,
            horizon=horizon,
            arrival_law=_parse_arrival(cfg.get("arrival")),
            xi0=_number(cfg, "xi0", 0.0),
            reps=reps,
            policy=cfg.get("policy", "LISF"),
            construction=construction,
            base_seed=_parse_seed(cfg),
            freeze_rates=freeze,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_system(cfg: dict) -> SystemConfig:
    _check_keys(cfg, _SYSTEM_KEYS, "system")
    n = _integer(cfg, "n")
    if n is None:
        _fail("n", "required key is missing")
    gamma = _number(cfg, "gamma")
    if gamma is None:
        _fail("gamma", "required key is missing")
    if gamma < 0:
        _fail("gamma", f"must be nonnegative, got {gamma}")
    horizon = _number(cfg, "horizon")
    if horizon is None:
        _fail("horizon", "required key is missing")
    rates = cfg.get("rates")
    if rates is not None:
        if not isinstance(rates, list):
            _fail("rates", f"expected a list of rates, got {rates!r}")
        rates = tuple(float(v) for v in rates)
    construction = cfg.get("construction", "potential_stream")
    if construction not in CONSTRUCTIONS:
        _fail("construction", f"expected one of {CONSTRUCTIONS}, got {construction!r}")
    try:
        return SystemConfig(
            n=n,
            lambda_n=_number(cfg, "lambda_n"),
            rate_dist=_parse_rate_dist(_require(cfg, "rate_dist")),
            gamma=gamma,
            horizon=horizon,
            arrival_law=_parse_arrival(cfg.get("arrival")),
            rates=rates,
            x0=_integer(cfg, "x0", 0),
            policy=cfg.get("policy", "LISF"),
            construction=construction,
            seed=_parse_seed(cfg),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(path) -> LadderSpec | SystemConfig:
    """Load and fully validate a JSON config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config_dict(raw)


def emit_config(obj: LadderSpec | SystemConfig) -> dict:
    """Canonical dict with every default resolved; parse_config_dict of
    the result reproduces the object."""
    if isinstance(obj, LadderSpec):
        return {
            "n_values": list(obj.n_values),
            "lambda_hat": obj.lambda_hat,
            "rate_dist": obj.rate_dist.to_dict(),
            "arrival": obj.arrival_law.to_dict(),
            "gamma": obj.gamma,
            "xi0": obj.xi0,
            "horizon": obj.horizon,
            "reps": obj.reps,
            "policy": obj.policy,
            "construction": obj.construction,
            "seed": obj.base_seed.seed,
            "stream_id": obj.base_seed.stream_id,
            "seed_path": list(obj.base_seed.path),
            "freeze_rates": obj.freeze_rates,
        }
    if isinstance(obj, SystemConfig):
        return {
            "n": obj.n,
            "lambda_n": obj.lambda_n,
            "rate_dist": obj.rate_dist.to_dict(),
            "arrival": obj.arrival_law.to_dict(),
            "gamma": obj.gamma,
            "x0": obj.x0,
            "horizon": obj.horizon,
            "rates": list(obj.rates) if obj.rates is not None else None,
            "policy": obj.policy,
            "construction": obj.construction,
            "seed": obj.seed.seed,
            "stream_id": obj.seed.stream_id,
            "seed_path": list(obj.seed.path),
        }
    raise TypeError(f"cannot emit config for {type(obj).__name__}")

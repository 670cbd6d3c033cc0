"""Flat `section.key = value` configuration format.

One assignment per line, `#` comments, values kept as strings until a typed
getter converts them.  Dotted names group keys into sections; the grammar is
deliberately simple so any tooling can parse or emit it.
"""

from __future__ import annotations

from pathlib import Path

from .core import ConfigError
from .datagen import StreamConfig
from .pipeline import PipelineConfig
from .regressors import RegressorKind, RegressorSpec
from .tune import PARAM_CAT, PARAM_FLOAT, PARAM_INT, ParamSpec

STREAM_KEYS = {
    "stream.kind",
    "stream.n_segments",
    "stream.segment_len",
    "stream.d",
    "stream.transition_len",
    "stream.noise_var",
    "stream.noise_param_is_std",
    "stream.outlier_prob",
    "stream.seed",
}

PIPELINE_KEYS = {
    "pipeline.window",
    "pipeline.alpha_warning",
    "pipeline.alpha_confirm",
    "pipeline.threshold_mode",
    "pipeline.channel1",
    "pipeline.scale_by_sigma",
    "pipeline.warm_start",
    "pipeline.seed",
}

REGRESSOR_KEYS = {
    "regressor.kind",
    "regressor.scale_relative",
    "regressor.huber_delta",
    "regressor.n_subsets",
    "regressor.ransac_min_samples",
    "regressor.ransac_threshold",
    "regressor.ransac_max_trials",
    "regressor.ipod_lambda",
    "regressor.ipod_threshold",
    "regressor.max_iter",
    "regressor.tol",
}

DETECTOR_KEYS = {
    "detector.name",
    "detector.ewmad.tau",
    "detector.ewmad.xi",
    "detector.ewmad.k",
    "detector.ewmad.threshold_form",
    "detector.ph.delta",
    "detector.ph.threshold",
    "detector.adwin.delta",
    "detector.adwin.max_buckets",
    "detector.kswin.alpha",
    "detector.kswin.window",
    "detector.kswin.stat_size",
    "detector.dsa.kappa",
    "detector.dsa.h_abrupt",
    "detector.dsa.h_slow",
    "detector.dsa.short_window",
    "detector.dsa.lag",
}

EVAL_KEYS = {
    "eval.tolerance",
    "eval.inc_slack",
    "eval.include_warnings",
}

BENCH_KEYS = {
    "bench.streams",
    "bench.truths",
    "bench.learners",
    "bench.detectors",
    "bench.seeds",
}

TUNE_KEYS = {
    "tune.rounds",
    "tune.points",
    "tune.shrink",
    "tune.seed",
    "tune.holdout_seed_offset",
}

KNOWN_KEYS = (
    STREAM_KEYS
    | PIPELINE_KEYS
    | REGRESSOR_KEYS
    | DETECTOR_KEYS
    | EVAL_KEYS
    | BENCH_KEYS
    | TUNE_KEYS
)

# detector.name value -> config sub-section holding its parameters
DETECTOR_SECTION = {
    "ewmad_dt": "ewmad",
    "ph": "ph",
    "adwin": "adwin",
    "kswin": "kswin",
    "dsa": "dsa",
}

_SPACE_PREFIX = "space."


def parse_config_text(text: str, origin: str = "<config>") -> dict[str, str]:
    cfg: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"{origin}:{lineno}: empty key")
        if key in cfg:
            raise ConfigError(f"{origin}:{lineno}: duplicate key {key!r}")
        cfg[key] = value
    return cfg


def load_config(path: str | Path) -> dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(), origin=str(path))


def dump_config(cfg: dict[str, str]) -> str:
    lines = ["# driftguard-config v1"]
    lines += [f"{key} = {cfg[key]}" for key in sorted(cfg)]
    return "\n".join(lines) + "\n"


def validate_keys(cfg: dict[str, str]) -> None:
    unknown = sorted(
        k for k in cfg if k not in KNOWN_KEYS and not k.startswith(_SPACE_PREFIX)
    )
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")


def _convert(key: str, value: str, kind: str):
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        if kind == "bool":
            lowered = value.lower()
            if lowered in ("true", "1", "yes", "on"):
                return True
            if lowered in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {value!r}")
        return value
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from exc


def get_str(cfg: dict, key: str, default: str) -> str:
    return cfg.get(key, default)


def get_int(cfg: dict, key: str, default: int) -> int:
    return _convert(key, cfg[key], "int") if key in cfg else default


def get_float(cfg: dict, key: str, default: float) -> float:
    return _convert(key, cfg[key], "float") if key in cfg else default


def get_bool(cfg: dict, key: str, default: bool) -> bool:
    return _convert(key, cfg[key], "bool") if key in cfg else default


def get_list(cfg: dict, key: str) -> list[str]:
    raw = cfg.get(key, "")
    return [item.strip() for item in raw.split(",") if item.strip()]


def build_stream_config(cfg: dict[str, str], seed: int | None = None) -> StreamConfig:
    config = StreamConfig(
        kind=get_str(cfg, "stream.kind", "abrupt"),
        n_segments=get_int(cfg, "stream.n_segments", 50),
        segment_len=get_int(cfg, "stream.segment_len", 1000),
        d=get_int(cfg, "stream.d", 10),
        transition_len=get_int(cfg, "stream.transition_len", 50),
        noise_var=get_float(cfg, "stream.noise_var", 0.001),
        noise_param_is_std=get_bool(cfg, "stream.noise_param_is_std", False),
        outlier_prob=get_float(cfg, "stream.outlier_prob", 0.0),
        seed=seed if seed is not None else get_int(cfg, "stream.seed", 0),
    )
    config.validate()
    return config


def build_regressor_spec(cfg: dict[str, str]) -> RegressorSpec:
    kind_name = get_str(cfg, "regressor.kind", "huber")
    try:
        kind = RegressorKind(kind_name)
    except ValueError as exc:
        raise ConfigError(f"unknown regressor kind {kind_name!r}") from exc
    return RegressorSpec(
        kind=kind,
        scale_relative=get_bool(cfg, "regressor.scale_relative", True),
        huber_delta=get_float(cfg, "regressor.huber_delta", 1.35),
        n_subsets=get_int(cfg, "regressor.n_subsets", 300),
        ransac_min_samples=get_int(cfg, "regressor.ransac_min_samples", 0),
        ransac_threshold=get_float(cfg, "regressor.ransac_threshold", 3.0),
        ransac_max_trials=get_int(cfg, "regressor.ransac_max_trials", 100),
        ipod_lambda=get_float(cfg, "regressor.ipod_lambda", 3.0),
        ipod_threshold=get_str(cfg, "regressor.ipod_threshold", "hard"),
        max_iter=get_int(cfg, "regressor.max_iter", 100),
        tol=get_float(cfg, "regressor.tol", 1e-8),
    )


def detector_params(cfg: dict[str, str], detector: str) -> dict:
    if detector not in DETECTOR_SECTION:
        raise ConfigError(f"unknown detector {detector!r}")
    prefix = f"detector.{DETECTOR_SECTION[detector]}."
    params: dict = {}
    for key, value in cfg.items():
        if not key.startswith(prefix):
            continue
        name = key[len(prefix) :]
        if name in ("k", "max_buckets", "window", "stat_size", "short_window", "lag"):
            params[name] = _convert(key, value, "int")
        elif name in ("threshold_form",):
            params[name] = value
        else:
            params[name] = _convert(key, value, "float")
    return params


def build_pipeline_config(cfg: dict[str, str], seed: int | None = None) -> PipelineConfig:
    detector = get_str(cfg, "detector.name", "ewmad_dt")
    config = PipelineConfig(
        window=get_int(cfg, "pipeline.window", 200),
        regressor=build_regressor_spec(cfg),
        detector=detector,
        detector_params=detector_params(cfg, detector),
        alpha_warning=get_float(cfg, "pipeline.alpha_warning", 0.05),
        alpha_confirm=get_float(cfg, "pipeline.alpha_confirm", 0.01),
        threshold_mode=get_str(cfg, "pipeline.threshold_mode", "exact_t"),
        channel1=get_bool(cfg, "pipeline.channel1", True),
        scale_by_sigma=get_bool(cfg, "pipeline.scale_by_sigma", True),
        warm_start=get_bool(cfg, "pipeline.warm_start", True),
        seed=seed if seed is not None else get_int(cfg, "pipeline.seed", 0),
    )
    config.validate()
    return config


def parse_space(cfg: dict[str, str]) -> list[ParamSpec]:
    """`space.<config-key> = range lo hi | int lo hi | cat v1 v2 ...`"""
    specs: list[ParamSpec] = []
    for key in sorted(cfg):
        if not key.startswith(_SPACE_PREFIX):
            continue
        target = key[len(_SPACE_PREFIX) :]
        if target not in KNOWN_KEYS:
            raise ConfigError(f"search space refers to unknown key {target!r}")
        tokens = cfg[key].split()
        if not tokens:
            raise ConfigError(f"{key}: empty space declaration")
        head, rest = tokens[0], tokens[1:]
        if head == "range" and len(rest) == 2:
            specs.append(ParamSpec(target, PARAM_FLOAT, float(rest[0]), float(rest[1])))
        elif head == "int" and len(rest) == 2:
            specs.append(ParamSpec(target, PARAM_INT, float(rest[0]), float(rest[1])))
        elif head == "cat" and rest:
            specs.append(ParamSpec(target, PARAM_CAT, choices=tuple(rest)))
        else:
            raise ConfigError(
                f"{key}: expected 'range lo hi', 'int lo hi' or 'cat v1 v2 ...', got {cfg[key]!r}"
            )
    if not specs:
        raise ConfigError("no space.* entries found for tuning")
    return specs


def apply_overrides(cfg: dict[str, str], params: dict) -> dict[str, str]:
    out = dict(cfg)
    for key, value in params.items():
        out[key] = str(value)
    return out

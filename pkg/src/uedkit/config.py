"""Run configuration: a plain ``key = value`` file plus environment overrides.

Keys use dotted names (``filter.threshold``, ``llm.url``). Any key can be
overridden from the environment as ``UEDKIT_<KEY>`` with dots replaced by
underscores and upper-cased, e.g. ``UEDKIT_LLM_URL``. The LLM API key is
never stored in the config; it is read from the variable named by
``llm.api_key_env``.
"""

from __future__ import annotations

import configparser
import hashlib
import os
from dataclasses import dataclass, fields
from datetime import date
from pathlib import Path

from .errors import ConfigError

ENV_PREFIX = "UEDKIT_"
# relative values of these keys in a config file resolve against the file's directory
PATH_KEYS = {"input", "corpus", "lexicons", "output", "exclusions", "stance_gold", "stance_prompt"}


@dataclass
class RunConfig:
    # paths
    input: str = ""
    corpus: str = ""
    lexicons: str = ""
    output: str = ""
    emotion_lexicon: str = "emotion.txt"
    warmth_lexicon: str = "warmth.csv"
    exclusions: str = ""  # empty: shipped default list

    # ingest
    filter_enabled: bool = True
    filter_anchor: str = "The Vaccines music band"
    filter_threshold: float = 0.7
    pipeline_order: str = "clean-dedup-filter"
    embedding_provider: str = "mock"
    embedding_url: str = ""
    embedding_batch_size: int = 64
    embedding_retries: int = 3
    embedding_backoff: float = 1.0

    # analyze
    workers: int = 1
    bin: str = "month"
    rolling: int = 3
    rolling_mode: str = "trailing"
    alpha: float = 0.32
    split: str = "2020-01-01"
    low_threshold: float = 1 / 3
    ev_formula: str = "sd"
    warmth_series: str = "token"

    # stance
    stance_per_month: int = 2000
    stance_seed: int = 0
    stance_temperature: float = 0.4
    stance_runs: int = 1
    stance_sweep: bool = False
    stance_gold: str = ""
    stance_prompt: str = ""
    stance_target: str = "vaccines"
    stance_concurrency: int = 4
    llm_provider: str = "mock"
    llm_url: str = ""
    llm_model: str = "llama-3.3-70b-instruct"
    llm_retries: int = 3
    llm_backoff: float = 1.0
    llm_api_key_env: str = "UEDKIT_LLM_API_KEY"

    # report
    report_k: int = 15
    report_weight: str = "token"

    def validate(self) -> "RunConfig":
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)
        need(0 < self.filter_threshold <= 1, "filter.threshold must be in (0, 1]")
        need(self.pipeline_order in ("clean-dedup-filter", "clean-filter-dedup"),
             "pipeline.order must be clean-dedup-filter or clean-filter-dedup")
        need(self.embedding_provider in ("mock", "http"), "embedding.provider must be mock or http")
        need(self.embedding_batch_size >= 1, "embedding.batch_size must be >= 1")
        need(self.embedding_retries >= 0, "embedding.retries must be >= 0")
        need(self.workers >= 1, "workers must be >= 1")
        need(self.bin == "month", "bin must be 'month'")
        need(self.rolling >= 1, "rolling must be >= 1")
        need(self.rolling_mode in ("trailing", "centered"), "rolling_mode must be trailing or centered")
        need(0 < self.alpha < 1, "alpha must be in (0, 1)")
        need(0 < self.low_threshold < 1, "low_threshold must be in (0, 1)")
        need(self.ev_formula in ("sd", "printed-variance"), "ev_formula must be sd or printed-variance")
        need(self.warmth_series in ("token", "post"), "warmth_series must be token or post")
        need(self.stance_per_month >= 1, "stance.per_month must be >= 1")
        need(0 <= self.stance_temperature <= 2, "stance.temperature must be in [0, 2]")
        need(self.stance_runs >= 1, "stance.runs must be >= 1")
        need(self.stance_concurrency >= 1, "stance.concurrency must be >= 1")
        need(self.llm_provider in ("mock", "http"), "llm.provider must be mock or http")
        need(self.report_k >= 1, "report.k must be >= 1")
        need(self.report_weight in ("token", "post"), "report.weight must be token or post")
        try:
            date.fromisoformat(self.split)
        except ValueError:
            raise ConfigError(f"split must be YYYY-MM-DD, got {self.split!r}") from None
        return self

    # -- serialisation --------------------------------------------------------

    @staticmethod
    def key_of(name: str) -> str:
        for group in ("filter", "pipeline", "embedding", "stance", "llm", "report"):
            if name.startswith(group + "_"):
                return group + "." + name[len(group) + 1:]
        return name

    def set(self, key: str, raw) -> None:
        name = key.strip().replace(".", "_").replace("-", "_")
        types = {f.name: f.type for f in fields(self)}
        if name not in types:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(self, name, _coerce(key, raw, types[name]))

    def frozen_text(self) -> str:
        lines = [f"{self.key_of(f.name)} = {_render(getattr(self, f.name))}" for f in fields(self)]
        return "\n".join(sorted(lines)) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.frozen_text().encode()).hexdigest()

    def write_frozen(self, directory) -> Path:
        path = Path(directory) / "config.frozen"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.frozen_text(), encoding="utf-8")
        return path


def _render(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def _coerce(key, raw, typ):
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    try:
        if typ in (bool, "bool"):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ in (int, "int"):
            return int(raw)
        if typ in (float, "float"):
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return raw


def load_config(path=None, overrides: dict | None = None, environ=None) -> RunConfig:
    """Defaults <- config file <- environment <- explicit overrides."""
    cfg = RunConfig()
    if path:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                           comment_prefixes=("#",), inline_comment_prefixes=None)
        parser.optionxform = str
        try:
            parser.read_string("[run]\n" + p.read_text(encoding="utf-8"), source=str(p))
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        for key, value in parser.items("run"):
            cfg.set(key, value)
            name = key.strip().replace(".", "_").replace("-", "_")
            if name in PATH_KEYS and value.strip() and not Path(value.strip()).is_absolute():
                setattr(cfg, name, str(p.parent / value.strip()))
    env = os.environ if environ is None else environ
    for f in fields(cfg):
        var = ENV_PREFIX + f.name.upper()
        if var in env and var != cfg.llm_api_key_env:
            cfg.set(f.name, env[var])
    for key, value in (overrides or {}).items():
        if value is not None:
            cfg.set(key, value)
    return cfg.validate()

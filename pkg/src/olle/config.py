"""Pipeline configuration: a flat TOML-like key/value file with CLI
overrides, resolved into one immutable config object.

Lines look like ``key = value`` with ``#`` comments; values are
strings, numbers, booleans, or bracketed comma lists. Dotted keys feed
maps (``lexicon.en = path``, ``representative_language.IN = en``).
The resolved mapping is hashed (sha256, first 12 hex digits) and the
hash is stamped into every output artifact header.
"""
from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field, fields

from .aggregate import AggregationConfig
from .corpus import STUDY_LANGUAGES, FilterConfig
from .errors import ConfigError

_SCALAR_KEYS = {
    "benchmark": str,
    "population": str,
    "geo_groups": str,
    "covariates": str,
    "regression_specs": str,
    "ranges": str,
    "output_dir": str,
    "min_group_size": int,
    "heavy_poster_quantile": float,
    "drop_intermediates": bool,
    "min_chars": int,
    "max_chars": int,
    "drop_urls": bool,
    "sensitivity": float,
    "replicates": int,
    "seed": int,
    "jobs": int,
    "gaps_source": str,
    "internet_floor": float,
}
_LIST_KEYS = {"posts", "languages"}
_MAP_KEYS = {"lexicon", "representative_language"}


@dataclass(frozen=True)
class PipelineConfig:
    posts: tuple[str, ...] = ()
    lexicons: dict[str, str] = field(default_factory=dict)
    benchmark: str | None = None
    population: str | None = None
    geo_groups: str | None = None
    covariates: str | None = None
    regression_specs: str | None = None
    ranges: str | None = None
    output_dir: str = "out"
    languages: tuple[str, ...] = STUDY_LANGUAGES
    representative_language: dict[str, str] = field(default_factory=dict)
    min_group_size: int = 1000
    heavy_poster_quantile: float = 0.75
    drop_intermediates: bool = True
    min_chars: int = 2
    max_chars: int = 1000
    drop_urls: bool = True
    sensitivity: float = 1.0
    replicates: int = 1000
    seed: int = 0
    jobs: int | None = None
    gaps_source: str = "posts"
    internet_floor: float = 0.25

    def aggregation(self) -> AggregationConfig:
        return AggregationConfig(
            min_group_size=self.min_group_size,
            heavy_poster_quantile=self.heavy_poster_quantile,
            drop_intermediates=self.drop_intermediates,
        )

    def filtering(self) -> FilterConfig:
        return FilterConfig(
            min_chars=self.min_chars, max_chars=self.max_chars, drop_urls=self.drop_urls
        )

    def effective_jobs(self) -> int:
        if self.jobs is not None:
            if self.jobs < 1:
                raise ConfigError("jobs must be >= 1")
            return self.jobs
        return os.cpu_count() or 1

    def ranges_path(self) -> str:
        return self.ranges or os.path.join(self.output_dir, "loff_ranges.json")

    def resolved(self) -> dict[str, str]:
        """Canonical flat mapping used for hashing and provenance dumps."""
        out: dict[str, str] = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "lexicons":
                for lang, path in sorted(value.items()):
                    out[f"lexicon.{lang}"] = str(path)
            elif f.name == "representative_language":
                for country, lang in sorted(value.items()):
                    out[f"representative_language.{country}"] = str(lang)
            elif isinstance(value, tuple):
                out[f.name] = ",".join(str(v) for v in value)
            else:
                out[f.name] = "" if value is None else str(value)
        return out

    def config_hash(self) -> str:
        blob = "\n".join(f"{k}={v}" for k, v in sorted(self.resolved().items()))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def _parse_value(raw: str, lineno: int):
    raw = raw.strip()
    if raw.startswith("[") and raw.endswith("]"):
        inner = raw[1:-1].strip()
        if not inner:
            return []
        return [_parse_value(part, lineno) for part in inner.split(",")]
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "'\"":
        return raw[1:-1]
    if raw.lower() in ("true", "false"):
        return raw.lower() == "true"
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def parse_config_text(text: str) -> dict:
    """Flat key=value parse; returns raw (possibly dotted) keys."""
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"config line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"config line {lineno}: duplicate key {key!r}")
        out[key] = _parse_value(raw, lineno)
    return out


def _coerce(entries: dict) -> dict:
    """Validate raw entries against the known schema, building ctor kwargs."""
    kwargs: dict = {}
    lexicons: dict[str, str] = {}
    rep_lang: dict[str, str] = {}
    for key, value in entries.items():
        if "." in key:
            head, _, tail = key.partition(".")
            if head not in _MAP_KEYS:
                raise ConfigError(f"unknown config key: {key!r}")
            if head == "lexicon":
                lexicons[tail] = str(value)
            else:
                rep_lang[tail] = str(value)
            continue
        if key in _LIST_KEYS:
            items = value if isinstance(value, list) else [value]
            kwargs[key] = tuple(str(v) for v in items)
            continue
        if key not in _SCALAR_KEYS:
            raise ConfigError(f"unknown config key: {key!r}")
        want = _SCALAR_KEYS[key]
        if want is bool:
            if not isinstance(value, bool):
                raise ConfigError(f"config key {key!r} expects true/false")
            kwargs[key] = value
        elif want is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"config key {key!r} expects an integer")
            kwargs[key] = value
        elif want is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"config key {key!r} expects a number")
            kwargs[key] = float(value)
        else:
            kwargs[key] = str(value)
    if lexicons:
        kwargs["lexicons"] = lexicons
    if rep_lang:
        kwargs["representative_language"] = rep_lang
    return kwargs


def load_config(
    path: str | None = None, overrides: list[str] | None = None
) -> PipelineConfig:
    """Defaults, then the config file, then ``key=value`` CLI overrides."""
    entries: dict = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                entries = parse_config_text(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override must look like key=value: {item!r}")
        key, _, raw = item.partition("=")
        entries[key.strip()] = _parse_value(raw, 0)
    kwargs = _coerce(entries)
    try:
        return PipelineConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad configuration: {exc}") from exc

"""Run configuration: YAML file plus flag overrides.

The config file is hierarchical key-value text (YAML). Credentials never
appear in it; each backend section names the environment variable holding
its bearer token. Example::

    backends:
      llm:
        url: https://inference.example.com/v1
        model: chat-model-7b
        api_key_env: SPEECHQA_LLM_TOKEN
        max_attempts: 3
        base_backoff_ms: 500
        max_concurrency: 4
      judge:          # optional; falls back to the llm section
        url: mock:chat
      tts:
        url: mock:tts?chars_per_sec=15
      asr:
        url: mock:asr?references=refs.jsonl
    pipeline:
      qa_pairs_per_generation: 20
      max_synth_duration: 20.0
      upsample_factor: 3
      rng_seed: 12345
      speaker_ids: [spk0, spk1]
    sampling:
      temperature: 1.0
      top_p: 0.95
      max_tokens: 2048
    templates_dir: null   # packaged defaults
    strict_parse: false
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .backends import RetryPolicy, make_asr_client, make_chat_client, make_tts_client
from .records import PipelineConfig, SamplingParams, ValidationError


class ConfigError(Exception):
    """The run configuration is missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class BackendConfig:
    url: str
    model: str = ""
    api_key_env: str | None = None
    policy: RetryPolicy = field(default_factory=RetryPolicy)


@dataclass(frozen=True)
class RunConfig:
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    sampling: SamplingParams = field(default_factory=SamplingParams)
    backends: dict[str, BackendConfig] = field(default_factory=dict)
    templates_dir: str | None = None
    strict_parse: bool = False

    def backend(self, name: str) -> BackendConfig:
        """Resolve a backend section; the judge falls back to the llm."""
        if name in self.backends:
            return self.backends[name]
        if name == "judge" and "llm" in self.backends:
            return self.backends["llm"]
        raise ConfigError(f"no '{name}' backend configured")

    def chat_client(self, name: str = "llm"):
        cfg = self.backend(name)
        return make_chat_client(cfg.url, cfg.model, cfg.api_key_env, cfg.policy)

    def tts_client(self):
        cfg = self.backend("tts")
        speakers = self.pipeline.speaker_ids or None
        return make_tts_client(cfg.url, speakers, cfg.api_key_env, cfg.policy)

    def asr_client(self):
        cfg = self.backend("asr")
        return make_asr_client(cfg.url, cfg.api_key_env, cfg.policy)


def _parse_backend(name: str, raw: Any) -> BackendConfig:
    if not isinstance(raw, dict) or "url" not in raw:
        raise ConfigError(f"backend '{name}' needs at least a url")
    try:
        policy = RetryPolicy(
            max_attempts=int(raw.get("max_attempts", 3)),
            base_backoff_ms=float(raw.get("base_backoff_ms", 500.0)),
            max_concurrency=int(raw.get("max_concurrency", 4)),
        )
    except (ValidationError, ValueError) as exc:
        raise ConfigError(f"backend '{name}': {exc}") from exc
    return BackendConfig(
        url=str(raw["url"]),
        model=str(raw.get("model", "")),
        api_key_env=raw.get("api_key_env"),
        policy=policy,
    )


def load_config(path: str | Path | None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Load the YAML config, then apply non-None flag overrides on top.

    Recognized override keys: seed, n_pairs, max_duration, upsample,
    strict_parse.
    """
    raw: dict[str, Any] = {}
    if path is not None:
        config_path = Path(path)
        if not config_path.is_file():
            raise ConfigError(f"config file not found: {config_path}")
        try:
            loaded = yaml.safe_load(config_path.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ConfigError(f"{config_path}: invalid YAML ({exc})") from exc
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"{config_path}: top level must be a mapping")
        raw = loaded

    overrides = overrides or {}
    pipeline_raw = dict(raw.get("pipeline") or {})
    if overrides.get("seed") is not None:
        pipeline_raw["rng_seed"] = overrides["seed"]
    if overrides.get("n_pairs") is not None:
        pipeline_raw["qa_pairs_per_generation"] = overrides["n_pairs"]
    if overrides.get("max_duration") is not None:
        pipeline_raw["max_synth_duration"] = overrides["max_duration"]
    if overrides.get("upsample") is not None:
        pipeline_raw["upsample_factor"] = overrides["upsample"]

    try:
        pipeline = PipelineConfig(
            qa_pairs_per_generation=int(pipeline_raw.get("qa_pairs_per_generation", 20)),
            max_synth_duration=float(pipeline_raw.get("max_synth_duration", 20.0)),
            upsample_factor=int(pipeline_raw.get("upsample_factor", 3)),
            rng_seed=int(pipeline_raw.get("rng_seed", 0)),
            speaker_ids=tuple(pipeline_raw.get("speaker_ids") or ()),
        )
        sampling_raw = raw.get("sampling") or {}
        sampling = SamplingParams(
            temperature=float(sampling_raw.get("temperature", 1.0)),
            top_p=float(sampling_raw.get("top_p", 0.95)),
            max_tokens=int(sampling_raw.get("max_tokens", 2048)),
        )
    except (ValidationError, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid config values: {exc}") from exc

    backends_raw = raw.get("backends") or {}
    if not isinstance(backends_raw, dict):
        raise ConfigError("'backends' must be a mapping")
    backends = {name: _parse_backend(name, value) for name, value in backends_raw.items()}

    strict = raw.get("strict_parse", False)
    if overrides.get("strict_parse"):
        strict = True

    templates_dir = raw.get("templates_dir")
    if templates_dir is not None:
        templates_dir = str(templates_dir)
        if not Path(templates_dir).is_dir():
            raise ConfigError(f"templates_dir does not exist: {templates_dir}")

    return RunConfig(
        pipeline=pipeline,
        sampling=sampling,
        backends=backends,
        templates_dir=templates_dir,
        strict_parse=bool(strict),
    )

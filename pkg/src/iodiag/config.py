"""Application configuration: provider settings, index/session paths, service port.

Config files are plain JSON (one flat object with optional ``provider``,
``engine``, and ``service`` sections); every field has a sensible default so
an empty or missing file works. Setting ``provider.mock_script`` switches
the whole stack to the offline scripted provider.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .engine import EngineConfig
from .gateway import HttpGateway, MockGateway, ProviderConfig, load_mock_script


@dataclass
class AppConfig:
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    engine: EngineConfig = field(default_factory=EngineConfig)
    mock_script: str | None = None
    embedding_dim: int = 64
    index_path: str = "kb.index.jsonl"
    session_dir: str = "sessions"
    port: int = 8000
    max_upload_bytes: int = 256 * 1024 * 1024


def load_config(path: Path | str | None) -> AppConfig:
    if path is None:
        return AppConfig()
    data = json.loads(Path(path).read_text())
    provider = ProviderConfig(**data.get("provider", {}))
    engine_section = dict(data.get("engine", {}))
    engine = EngineConfig(
        retrieval_k=engine_section.get("retrieval_k", 15),
        max_workers=engine_section.get("max_workers", 8),
        merge_source_budget_chars=engine_section.get("merge_source_budget_chars", 6000),
        temperature=provider.temperature,
        reasoning_model=provider.reasoning_model,
        filter_model=provider.filter_model,
    )
    service = data.get("service", {})
    return AppConfig(
        provider=provider,
        engine=engine,
        mock_script=data.get("mock_script"),
        embedding_dim=data.get("embedding_dim", 64),
        index_path=service.get("index_path", "kb.index.jsonl"),
        session_dir=service.get("session_dir", "sessions"),
        port=service.get("port", 8000),
        max_upload_bytes=service.get("max_upload_bytes", 256 * 1024 * 1024),
    )


def build_gateway(config: AppConfig, mock_script: str | None = None):
    """HttpGateway from the provider config, or MockGateway when a mock
    script is configured (CLI flag overrides the config file)."""
    script_path = mock_script or config.mock_script
    if script_path:
        return MockGateway(
            load_mock_script(script_path), embedding_dim=config.embedding_dim
        )
    return HttpGateway(config.provider)

"""Runtime configuration: one JSON file, CODEVOICE_* environment overrides.

Keys (all optional; defaults bind every provider to MOCK):

    providers: {KIND: {endpoint, timeout, lane, auth_token}} where KIND is
        one of ASR_EN, ASR_INDIC, REFINER_LLM, CODEGEN, TTS. endpoint is a
        URL, the literal "MOCK", or null to leave an optional stage unbound.
    lanes: {lane id: max_concurrent}
    workers, queue_capacity, retention: integers
    data_dir, listen, ui_origin: strings
    refinement: {max_normalized_edit_distance, llm_pass_enabled,
        protected_words, symbol_table, confusion_table}

Environment overrides: CODEVOICE_<KIND>_ENDPOINT / _TIMEOUT / _LANE /
_TOKEN per binding, and CODEVOICE_WORKERS, CODEVOICE_QUEUE_CAPACITY,
CODEVOICE_RETENTION, CODEVOICE_DATA_DIR, CODEVOICE_LISTEN,
CODEVOICE_UI_ORIGIN for the scalars.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from .providers import Lane, MOCK, ProviderBinding, ProviderKind
from .refine import ConfusionTable, RefinementConfig, SymbolTable

REQUIRED_KINDS = (ProviderKind.ASR_EN, ProviderKind.ASR_INDIC, ProviderKind.CODEGEN)


@dataclass
class AppConfig:
    bindings: dict = field(default_factory=dict)
    lanes: list = field(default_factory=list)
    workers: int = 4
    queue_capacity: int = 1000
    retention: int = 10000
    data_dir: Path = Path("codevoice-data")
    listen: str = "127.0.0.1:8466"
    ui_origin: str = ""
    refinement: RefinementConfig = field(default_factory=RefinementConfig)
    symbol_table: Optional[Path] = None
    confusion_table: Optional[Path] = None

    def load_symbols(self) -> SymbolTable:
        if self.symbol_table:
            return SymbolTable.from_file(self.symbol_table)
        return SymbolTable.builtin()

    def load_confusions(self) -> ConfusionTable:
        if self.confusion_table:
            return ConfusionTable.from_file(self.confusion_table)
        return ConfusionTable.builtin()


def _parse_providers(section: Mapping) -> dict:
    # overlay on MOCK defaults: kinds the file does not mention stay mocked
    bindings = {kind: ProviderBinding(kind) for kind in ProviderKind}
    for name, entry in section.items():
        try:
            kind = ProviderKind(name)
        except ValueError:
            raise ValueError(f"unknown provider kind {name!r}") from None
        endpoint = entry.get("endpoint", MOCK)
        if endpoint is None:
            del bindings[kind]  # explicitly unbound
            continue
        bindings[kind] = ProviderBinding(
            kind=kind,
            endpoint=endpoint,
            timeout=float(entry.get("timeout", 60.0)),
            lane=entry.get("lane", ""),
            auth_token=entry.get("auth_token", ""),
        )
    return bindings


def _apply_binding_env(bindings: dict, env: Mapping) -> dict:
    out = dict(bindings)
    for kind in ProviderKind:
        prefix = f"CODEVOICE_{kind.value}_"
        endpoint = env.get(prefix + "ENDPOINT")
        current = out.get(kind)
        if endpoint:
            base = current or ProviderBinding(kind)
            current = ProviderBinding(
                kind=kind,
                endpoint=endpoint,
                timeout=base.timeout,
                lane=base.lane,
                auth_token=base.auth_token,
            )
        if current is None:
            continue
        timeout = env.get(prefix + "TIMEOUT")
        lane = env.get(prefix + "LANE")
        token = env.get(prefix + "TOKEN")
        out[kind] = ProviderBinding(
            kind=kind,
            endpoint=current.endpoint,
            timeout=float(timeout) if timeout else current.timeout,
            lane=lane or current.lane,
            auth_token=token if token is not None else current.auth_token,
        )
    return out


def load_config(
    path: Optional[str | Path] = None,
    env: Optional[Mapping] = None,
    mock_all: bool = False,
) -> AppConfig:
    env = os.environ if env is None else env
    raw: dict = {}
    if path is not None:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise ValueError("config root must be a JSON object")

    if "providers" in raw:
        bindings = _parse_providers(raw["providers"])
    else:
        bindings = {kind: ProviderBinding(kind) for kind in ProviderKind}
    if mock_all:
        bindings = {kind: ProviderBinding(kind) for kind in ProviderKind}
    bindings = _apply_binding_env(bindings, env)
    for kind in REQUIRED_KINDS:
        if kind not in bindings:
            raise ValueError(f"provider {kind.value} must be bound")

    lanes = [Lane(lane_id, int(width)) for lane_id, width in raw.get("lanes", {}).items()]

    ref_raw = raw.get("refinement", {})
    refinement = RefinementConfig(
        max_normalized_edit_distance=float(
            ref_raw.get("max_normalized_edit_distance", 0.34)
        ),
        protected_words=(
            frozenset(ref_raw["protected_words"])
            if "protected_words" in ref_raw
            else RefinementConfig().protected_words
        ),
        llm_pass_enabled=bool(ref_raw.get("llm_pass_enabled", False)),
    )

    cfg = AppConfig(
        bindings=bindings,
        lanes=lanes,
        workers=int(env.get("CODEVOICE_WORKERS", raw.get("workers", 4))),
        queue_capacity=int(env.get("CODEVOICE_QUEUE_CAPACITY", raw.get("queue_capacity", 1000))),
        retention=int(env.get("CODEVOICE_RETENTION", raw.get("retention", 10000))),
        data_dir=Path(env.get("CODEVOICE_DATA_DIR", raw.get("data_dir", "codevoice-data"))),
        listen=env.get("CODEVOICE_LISTEN", raw.get("listen", "127.0.0.1:8466")),
        ui_origin=env.get("CODEVOICE_UI_ORIGIN", raw.get("ui_origin", "")),
        refinement=refinement,
        symbol_table=Path(ref_raw["symbol_table"]) if ref_raw.get("symbol_table") else None,
        confusion_table=Path(ref_raw["confusion_table"]) if ref_raw.get("confusion_table") else None,
    )
    if cfg.workers < 1:
        raise ValueError("workers must be positive")
    return cfg

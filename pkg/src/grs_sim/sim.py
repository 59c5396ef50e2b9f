"""Integrated simulation: panels (plant + controller node + serial line)
under one gateway, all on a single virtual clock.

Configuration is a JSON file; per-panel plant parameters may be inline or
in a separate key=value file. See docs/formats.md for both grammars.
"""

from __future__ import annotations

import json
import random
import threading
import time as _wall
from dataclasses import dataclass, field, fields

from .clock import Scheduler
from .codec import generate_codebook
from .firmware import (
    DEFAULT_CYCLE_S,
    DEFAULT_DEBOUNCE_S,
    DEFAULT_PULSE_S,
    FirmwareNode,
)
from .gateway.audit import AuditLog
from .gateway.auth import Authenticator, CredentialStore, DEFAULT_SESSION_TTL
from .gateway.core import DEFAULT_HEARTBEAT_S, GatewayCore, PanelRuntime
from .link import LinkConfig, SerialLink
from .plant import BoilerPlant, PlantParams
from .signal_map import SignalMap, build_default_map, load_map


class ConfigError(Exception):
    pass


@dataclass
class PanelSpec:
    id: str
    name: str = ""
    params: PlantParams = field(default_factory=PlantParams)
    setpoint: float = 60.0
    baud: float = 9600.0
    propagation_delay: float = 0.0
    cycle_s: float = DEFAULT_CYCLE_S
    pulse_s: float = DEFAULT_PULSE_S
    debounce_s: float = DEFAULT_DEBOUNCE_S

    def __post_init__(self) -> None:
        if not self.name:
            self.name = self.id


@dataclass
class SimConfig:
    panels: list[PanelSpec] = field(default_factory=lambda: [PanelSpec(id="panel-1")])
    listen: str = "127.0.0.1:0"
    credentials_path: str | None = None
    map_path: str | None = None
    log_path: str | None = None
    log_max_bytes: int | None = None
    heartbeat_s: float = DEFAULT_HEARTBEAT_S
    session_ttl: float = DEFAULT_SESSION_TTL
    ui_dir: str | None = None


_PARAM_KEYS = {f.name for f in fields(PlantParams)}


def parse_params_kv(text: str) -> PlantParams:
    """`key = value` plant parameter file, '#' comments allowed."""
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"parameter line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _PARAM_KEYS:
            raise ConfigError(f"parameter line {lineno}: unknown key {key!r}")
        try:
            values[key] = float(value.strip())
        except ValueError:
            raise ConfigError(f"parameter line {lineno}: bad number {value!r}") from None
    try:
        return PlantParams(**values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _panel_spec(entry: dict, base_dir: str) -> PanelSpec:
    import os

    if "id" not in entry:
        raise ConfigError("panel definition missing 'id'")
    params = PlantParams()
    if "params_file" in entry:
        path = os.path.join(base_dir, entry["params_file"])
        try:
            with open(path, "r", encoding="utf-8") as fh:
                params = parse_params_kv(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read params file {path!r}: {exc}") from None
    elif "params" in entry:
        unknown = set(entry["params"]) - _PARAM_KEYS
        if unknown:
            raise ConfigError(f"unknown plant parameters: {sorted(unknown)}")
        try:
            params = PlantParams(**{k: float(v) for k, v in entry["params"].items()})
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    spec = PanelSpec(id=str(entry["id"]), name=str(entry.get("name", "")), params=params)
    for key in ("setpoint", "baud", "propagation_delay", "cycle_s", "pulse_s",
                "debounce_s"):
        if key in entry:
            setattr(spec, key, float(entry[key]))
    return spec


def load_config(path: str) -> SimConfig:
    import os

    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r}: line {exc.lineno}: {exc.msg}") from None

    base_dir = os.path.dirname(os.path.abspath(path))
    cfg = SimConfig(panels=[])
    for key in ("listen", "credentials_path", "map_path", "log_path", "ui_dir"):
        if raw.get(key) is not None:
            value = str(raw[key])
            if key in ("credentials_path", "map_path", "log_path", "ui_dir"):
                value = os.path.join(base_dir, value)
            setattr(cfg, key, value)
    for key in ("heartbeat_s", "session_ttl"):
        if key in raw:
            setattr(cfg, key, float(raw[key]))
    if "log_max_bytes" in raw and raw["log_max_bytes"] is not None:
        cfg.log_max_bytes = int(raw["log_max_bytes"])
    for entry in raw.get("panels", []):
        cfg.panels.append(_panel_spec(entry, base_dir))
    if not cfg.panels:
        cfg.panels = [PanelSpec(id="panel-1")]
    ids = [p.id for p in cfg.panels]
    if len(set(ids)) != len(ids):
        raise ConfigError("panel ids must be unique")
    return cfg


class Simulation:
    """Owns the clock, the panels and the gateway core."""

    def __init__(self, cfg: SimConfig | None = None, smap: SignalMap | None = None,
                 seed: int = 0):
        self.cfg = cfg if cfg is not None else SimConfig()
        self.scheduler = Scheduler()
        self.clock = self.scheduler.clock
        self.rng = random.Random(seed)
        self.seed = seed
        if smap is not None:
            self.smap = smap
        elif self.cfg.map_path:
            self.smap = load_map(self.cfg.map_path)
        else:
            self.smap = build_default_map()
        self.codebook = generate_codebook(self.smap)
        self.audit = AuditLog(self.clock, self.cfg.log_path, self.cfg.log_max_bytes)
        store = (CredentialStore.load(self.cfg.credentials_path)
                 if self.cfg.credentials_path else CredentialStore())
        self.auth = Authenticator(store, self.clock, session_ttl=self.cfg.session_ttl)
        self.core = GatewayCore(self.scheduler, self.auth, self.audit,
                                heartbeat_s=self.cfg.heartbeat_s)
        self.lock = threading.RLock()
        for spec in self.cfg.panels:
            self._build_panel(spec)

    def _build_panel(self, spec: PanelSpec) -> PanelRuntime:
        plant = BoilerPlant(self.smap, spec.params, setpoint=spec.setpoint)
        link = SerialLink(
            self.scheduler,
            LinkConfig(baud=spec.baud, propagation_delay=spec.propagation_delay),
            name=spec.id)
        firmware = FirmwareNode(
            self.smap, self.codebook, link.b, plant, self.scheduler,
            cycle_s=spec.cycle_s, pulse_s=spec.pulse_s, debounce_s=spec.debounce_s)
        firmware.start()
        runtime = PanelRuntime(spec.id, spec.name, plant, link, firmware,
                               self.codebook)
        self.core.add_panel(runtime)
        self.scheduler.call_repeating(spec.params.dt, self._tick_plant, runtime)
        return runtime

    def _tick_plant(self, runtime: PanelRuntime) -> None:
        edges = runtime.plant.step()
        if edges:
            runtime.firmware.feed_edges(edges)

    def panel(self, panel_id: str) -> PanelRuntime:
        return self.core.panels[panel_id]

    @property
    def first_panel(self) -> PanelRuntime:
        return next(iter(self.core.panels.values()))

    def run_for(self, sim_seconds: float) -> None:
        self.scheduler.run_for(sim_seconds)

    def run_until(self, t: float) -> None:
        self.scheduler.run_until(t)

    def close(self) -> None:
        self.audit.close()


def drive(sim: Simulation, stop: threading.Event, realtime: bool,
          chunk: float = 0.05) -> None:
    """Advance the simulation from a background thread until stopped.

    Realtime mode pins the virtual clock to the wall clock; otherwise the
    clock free-runs as fast as the host allows, yielding between chunks so
    HTTP handlers can interleave.
    """
    anchor_wall = _wall.monotonic()
    anchor_sim = sim.clock.now
    while not stop.is_set():
        if realtime:
            target = anchor_sim + (_wall.monotonic() - anchor_wall)
            with sim.lock:
                sim.scheduler.run_until(max(target, sim.clock.now))
            _wall.sleep(0.005)
        else:
            with sim.lock:
                sim.scheduler.run_for(chunk)
            _wall.sleep(0.0005)

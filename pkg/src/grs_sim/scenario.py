"""Scripted scenario execution against a fresh simulation.

Script grammar (one directive per line, '#' comments, times in seconds on
the virtual clock; full grammar in docs/formats.md):

    panel <id>                          select the panel for what follows
    at <t> press <button description>
    at <t> selector <description> = on|off|local|remote
    at <t> inject <input signal description>
    at <t> clear <input signal description>
    at <t> setpoint <value>
    at <t> auto on <setpoint>
    at <t> auto off
    at <t> general-reset
    at <t> expect <signal description> = on|off
    at <t> expect phase = <PhaseName>
    at <t> expect mode = Manual|Auto

`inject` raises the fault condition for red signals and forces the lamp
level for run/event signals; `clear` removes the condition or override.
Every `expect` becomes an assertion in the report; any failed assertion
makes the run exit nonzero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .gateway.core import GatewayError
from .plant import Phase
from .sim import ConfigError, SimConfig, Simulation
from .signal_map import Color, Direction, MapError

GRACE_S = 0.5

_LEVELS = {"on": True, "off": False, "1": True, "0": False,
           "true": True, "false": False, "high": True, "low": False,
           "remote": True, "local": False}


class ScenarioError(Exception):
    pass


@dataclass
class Directive:
    lineno: int
    time: float
    verb: str
    args: tuple[str, ...]
    panel: str | None

    def text(self) -> str:
        return f"at {self.time:g} {self.verb} {' '.join(self.args)}".rstrip()


@dataclass
class ReportEntry:
    time: float
    lineno: int
    text: str
    ok: bool
    detail: str = ""

    def line(self) -> str:
        mark = "PASS" if self.ok else "FAIL"
        suffix = f" ({self.detail})" if self.detail and not self.ok else ""
        return f"t={self.time:9.3f}  {mark}  {self.text}{suffix}"


@dataclass
class ScenarioReport:
    entries: list[ReportEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.ok for e in self.entries)

    @property
    def checks(self) -> int:
        return len(self.entries)

    def render(self) -> str:
        lines = [e.line() for e in self.entries]
        verdict = "PASS" if self.passed else "FAIL"
        failed = sum(1 for e in self.entries if not e.ok)
        lines.append(f"scenario {verdict}: {self.checks - failed}/{self.checks} checks passed")
        return "\n".join(lines) + "\n"


def parse_scenario(text: str) -> list[Directive]:
    directives: list[Directive] = []
    panel: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] == "panel":
            if len(tokens) != 2:
                raise ScenarioError(f"line {lineno}: usage: panel <id>")
            panel = tokens[1]
            continue
        if tokens[0] != "at" or len(tokens) < 3:
            raise ScenarioError(f"line {lineno}: expected `at <t> <verb> ...`")
        try:
            t = float(tokens[1])
        except ValueError:
            raise ScenarioError(f"line {lineno}: bad time {tokens[1]!r}") from None
        if t < 0:
            raise ScenarioError(f"line {lineno}: negative time")
        verb, args = tokens[2], tuple(tokens[3:])
        if verb not in ("press", "selector", "inject", "clear", "setpoint",
                        "auto", "general-reset", "expect"):
            raise ScenarioError(f"line {lineno}: unknown directive {verb!r}")
        directives.append(Directive(lineno, t, verb, args, panel))
    return directives


def _parse_level(token: str, lineno: int) -> bool:
    try:
        return _LEVELS[token.lower()]
    except KeyError:
        raise ScenarioError(f"line {lineno}: bad level {token!r}") from None


def _split_on_eq(args: tuple[str, ...], lineno: int) -> tuple[str, str]:
    text = " ".join(args)
    if "=" not in text:
        raise ScenarioError(f"line {lineno}: expected `<name> = <value>`")
    name, _, value = text.partition("=")
    name, value = name.strip(), value.strip()
    if not name or not value:
        raise ScenarioError(f"line {lineno}: expected `<name> = <value>`")
    return name, value


class ScenarioRunner:
    def __init__(self, directives: list[Directive],
                 cfg: SimConfig | None = None, seed: int = 0):
        self.sim = Simulation(cfg, seed=seed)
        self.directives = directives
        self.report = ScenarioReport()
        session = self.sim.auth.create_session("scenario")
        self.token = session.token

    def _panel_id(self, directive: Directive) -> str:
        if directive.panel is not None:
            if directive.panel not in self.sim.core.panels:
                raise ScenarioError(
                    f"line {directive.lineno}: unknown panel {directive.panel!r}")
            return directive.panel
        return self.sim.first_panel.id

    def run(self, grace: float = GRACE_S) -> ScenarioReport:
        for d in self.directives:
            self.sim.scheduler.call_at(d.time, self._execute, d)
        horizon = max((d.time for d in self.directives), default=0.0) + grace
        self.sim.run_until(horizon)
        return self.report

    def _record(self, d: Directive, ok: bool, detail: str = "") -> None:
        self.report.entries.append(
            ReportEntry(d.time, d.lineno, d.text(), ok, detail))

    def _execute(self, d: Directive) -> None:
        try:
            self._dispatch(d)
        except (GatewayError, MapError, ScenarioError, ValueError) as exc:
            self._record(d, ok=False, detail=str(exc))

    def _dispatch(self, d: Directive) -> None:
        panel_id = self._panel_id(d)
        core = self.sim.core
        runtime = self.sim.panel(panel_id)
        smap = runtime.plant.smap

        if d.verb == "press":
            core.press_button(self.token, panel_id, " ".join(d.args))
        elif d.verb == "selector":
            name, value = _split_on_eq(d.args, d.lineno)
            core.set_selector(self.token, panel_id, name, value)
        elif d.verb == "inject":
            name = " ".join(d.args)
            sig = smap.get(name)
            if sig is None or sig.direction is not Direction.DIGITAL_IN:
                raise ScenarioError(f"line {d.lineno}: unknown input {name!r}")
            if sig.color is Color.RED:
                runtime.inject_fault(name)
            else:
                runtime.force_input(name, True)
        elif d.verb == "clear":
            name = " ".join(d.args)
            sig = smap.get(name)
            if sig is None:
                raise ScenarioError(f"line {d.lineno}: unknown input {name!r}")
            if sig.color is Color.RED:
                runtime.clear_fault_cause(name)
            else:
                runtime.force_input(name, None)
        elif d.verb == "setpoint":
            runtime.plant.set_setpoint(float(d.args[0]))
        elif d.verb == "auto":
            if not d.args or d.args[0] not in ("on", "off"):
                raise ScenarioError(f"line {d.lineno}: usage: auto on <sp> | auto off")
            if d.args[0] == "on":
                sp = float(d.args[1]) if len(d.args) > 1 else None
                core.set_auto_mode(self.token, panel_id, True, sp)
            else:
                core.set_auto_mode(self.token, panel_id, False)
        elif d.verb == "general-reset":
            core.general_reset(self.token, panel_id)
        elif d.verb == "expect":
            self._expect(d, panel_id)

    def _expect(self, d: Directive, panel_id: str) -> None:
        name, value = _split_on_eq(d.args, d.lineno)
        state = self.sim.core.get_state(self.token, panel_id)
        snap = state["snapshot"]
        if name == "phase":
            try:
                want = Phase(value).value
            except ValueError:
                raise ScenarioError(f"line {d.lineno}: unknown phase {value!r}") from None
            self._record(d, snap["phase"] == want,
                         f"phase is {snap['phase']}")
            return
        if name == "mode":
            self._record(d, state["mode"].lower() == value.lower(),
                         f"mode is {state['mode']}")
            return
        want_level = _parse_level(value, d.lineno)
        if name in snap["inputs"]:
            got = snap["inputs"][name]
        else:
            sig = self.sim.panel(panel_id).plant.smap.get(name)
            if sig is None or sig.pin is None:
                raise ScenarioError(f"line {d.lineno}: unknown signal {name!r}")
            got = snap["outputs"].get(str(sig.pin), False)
        self._record(d, got == want_level,
                     f"{name} is {'on' if got else 'off'}")


def run_scenario_file(path: str, cfg: SimConfig | None = None, seed: int = 0,
                      grace: float = GRACE_S) -> ScenarioReport:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            directives = parse_scenario(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path!r}: {exc}") from None
    runner = ScenarioRunner(directives, cfg, seed=seed)
    report = runner.run(grace=grace)
    runner.sim.close()
    return report

"""Supervisory gateway core: auth, commands, auto mode, streaming, audit."""

import pytest

from grs_sim.gateway.audit import EventKind
from grs_sim.gateway.auth import (
    BadCredentialsError,
    LockedOutError,
    UnauthorizedError,
)
from grs_sim.gateway.core import (
    Mode,
    ModeLockedError,
    PanelOfflineError,
    SetpointOutOfRange,
    UnknownButtonError,
    UnknownSelectorError,
)
from grs_sim.plant import Phase
from grs_sim.signal_map import (
    BURNER_MOTOR_OVERLOAD,
    BURNER_START_BUTTON,
    BURNER_STOP_BUTTON,
    EMERGENCY_STOP,
    LOW_GAS_PRESSURE,
    PUMP_IN_OPERATION,
    PUMP_OVERLOAD,
    RESET_BUTTON,
    SELECTOR_LOCAL_REMOTE,
    TEST_FLAME_DETECTOR,
)
from grs_sim.sim import SimConfig, Simulation

FRAME_S = 10.0 / 9600.0
CYCLE_S = 0.005


@pytest.fixture()
def sim():
    simulation = Simulation(SimConfig())
    simulation.auth.store.add("operator", "secret", iterations=1000)
    yield simulation
    simulation.close()


@pytest.fixture()
def token(sim):
    return sim.core.authenticate("operator", "secret").token


def make_ready(sim, token, panel="panel-1"):
    sim.core.press_button(token, panel, RESET_BUTTON)
    sim.run_for(0.2)
    assert sim.panel(panel).plant.phase is Phase.READY


# -- authentication -----------------------------------------------------------

def test_login_issues_session(sim):
    session = sim.core.authenticate("operator", "secret")
    assert len(session.token) == 32           # 128 bits in hex
    assert session.expiry > sim.clock.now


def test_bad_password_logged(sim):
    with pytest.raises(BadCredentialsError):
        sim.core.authenticate("operator", "nope")
    assert sim.audit.count(EventKind.AUTH_FAILURE) == 1


def test_lockout_after_five_failures(sim):
    for _ in range(5):
        with pytest.raises(BadCredentialsError):
            sim.core.authenticate("operator", "nope")
    with pytest.raises(LockedOutError):
        sim.core.authenticate("operator", "secret")   # correct, but locked


def test_expired_session_rejected():
    sim = Simulation(SimConfig(session_ttl=5.0))
    sim.auth.store.add("operator", "secret", iterations=1000)
    token = sim.core.authenticate("operator", "secret").token
    sim.core.list_panels(token)
    sim.run_for(6.0)
    with pytest.raises(UnauthorizedError):
        sim.core.list_panels(token)
    sim.close()


def test_every_mutator_needs_a_token(sim):
    core = sim.core
    calls = [
        lambda t: core.press_button(t, "panel-1", BURNER_START_BUTTON),
        lambda t: core.set_selector(t, "panel-1", SELECTOR_LOCAL_REMOTE, "on"),
        lambda t: core.set_auto_mode(t, "panel-1", True, 60.0),
        lambda t: core.general_reset(t, "panel-1"),
        lambda t: core.subscribe(t, "panel-1"),
        lambda t: core.list_panels(t),
        lambda t: core.get_state(t, "panel-1"),
    ]
    for call in calls:
        for bad in (None, "", "deadbeef" * 4):
            with pytest.raises(UnauthorizedError):
                call(bad)
    assert sim.audit.count(EventKind.COMMAND) == 0


def test_panel_permissions(sim):
    sim.auth.store.add("narrow", "pw", iterations=1000, panels=["other-panel"])
    session = sim.core.authenticate("narrow", "pw")
    assert sim.core.list_panels(session.token) == []
    with pytest.raises(UnauthorizedError):
        sim.core.get_state(session.token, "panel-1")


# -- commands -----------------------------------------------------------------

def test_press_button_transmits_byte(sim, token):
    sim.core.press_button(token, "panel-1", BURNER_START_BUTTON)
    sim.run_for(0.05)
    trace = sim.panel("panel-1").link.trace
    assert [r.byte_hex for r in trace if r.direction == "a->b"] == ["0x61"]
    commands = sim.audit.of_kind(EventKind.COMMAND)
    assert len(commands) == 1
    assert commands[0].payload["char"] == "a"
    assert commands[0].payload["source"] == "operator"


def test_unknown_button_rejected(sim, token):
    with pytest.raises(UnknownButtonError):
        sim.core.press_button(token, "panel-1", "NO SUCH BUTTON")
    with pytest.raises(UnknownButtonError):
        # Selectors are not push buttons.
        sim.core.press_button(token, "panel-1", SELECTOR_LOCAL_REMOTE)


def test_command_byte_bijection(sim, token):
    make_ready(sim, token)
    sim.core.press_button(token, "panel-1", BURNER_START_BUTTON)
    sim.run_for(0.5)
    sim.core.press_button(token, "panel-1", BURNER_STOP_BUTTON)
    sim.core.set_selector(token, "panel-1", SELECTOR_LOCAL_REMOTE, "remote")
    sim.run_for(0.5)
    sent = [r for r in sim.panel("panel-1").link.trace if r.direction == "a->b"]
    assert len(sent) == len(sim.audit.of_kind(EventKind.COMMAND))


def test_selector_position_reflected(sim, token):
    sim.core.set_selector(token, "panel-1", SELECTOR_LOCAL_REMOTE, "remote")
    sim.run_for(0.05)
    state = sim.core.get_state(token, "panel-1")
    assert state["snapshot"]["outputs"]["RC0"] is True
    sim.core.set_selector(token, "panel-1", SELECTOR_LOCAL_REMOTE, "local")
    sim.run_for(0.05)
    state = sim.core.get_state(token, "panel-1")
    assert state["snapshot"]["outputs"]["RC0"] is False


def test_bad_selector_position(sim, token):
    with pytest.raises(UnknownSelectorError):
        sim.core.set_selector(token, "panel-1", SELECTOR_LOCAL_REMOTE, "sideways")
    with pytest.raises(UnknownSelectorError):
        sim.core.set_selector(token, "panel-1", TEST_FLAME_DETECTOR, "on")


# -- mode exclusion --------------------------------------------------------------

def test_auto_locks_out_manual_commands(sim, token):
    sim.core.set_auto_mode(token, "panel-1", True, 60.0)
    with pytest.raises(ModeLockedError):
        sim.core.press_button(token, "panel-1", BURNER_START_BUTTON)
    with pytest.raises(ModeLockedError):
        sim.core.set_selector(token, "panel-1", SELECTOR_LOCAL_REMOTE, "on")
    with pytest.raises(ModeLockedError):
        sim.core.general_reset(token, "panel-1")
    # The emergency stop always goes through.
    sim.core.press_button(token, "panel-1", EMERGENCY_STOP)
    sim.run_for(0.05)
    assert sim.panel("panel-1").plant.phase is Phase.EMERGENCY_STOPPED


def test_auto_range_error(sim, token):
    with pytest.raises(SetpointOutOfRange):
        sim.core.set_auto_mode(token, "panel-1", True, 150.0)
    with pytest.raises(SetpointOutOfRange):
        sim.core.set_auto_mode(token, "panel-1", True, -1.0)


def test_auto_only_estop_reaches_link(sim, token):
    sim.core.set_auto_mode(token, "panel-1", True, 60.0)
    sim.run_for(0.2)
    for fn in (
        lambda: sim.core.press_button(token, "panel-1", BURNER_STOP_BUTTON),
        lambda: sim.core.set_selector(token, "panel-1", SELECTOR_LOCAL_REMOTE, "on"),
        lambda: sim.core.general_reset(token, "panel-1"),
    ):
        with pytest.raises(ModeLockedError):
            fn()
    human = [e for e in sim.audit.of_kind(EventKind.COMMAND)
             if e.payload["source"] != "auto"]
    assert human == []
    sim.core.press_button(token, "panel-1", EMERGENCY_STOP)
    human = [e for e in sim.audit.of_kind(EventKind.COMMAND)
             if e.payload["source"] != "auto"]
    assert [e.payload["signal"] for e in human] == [EMERGENCY_STOP]


# -- automatic operation ----------------------------------------------------------

def test_auto_mode_converges_and_holds(sim, token):
    sim.core.set_auto_mode(token, "panel-1", True, 60.0)
    plant = sim.panel("panel-1").plant
    h = plant.params.hysteresis
    sim.run_for(200.0)
    assert 60.0 - h <= plant.temperature <= 60.0 + h
    for _ in range(50):
        sim.run_for(10.0)
        assert 60.0 - h <= plant.temperature <= 60.0 + h
        assert plant.temperature < plant.params.t_highhigh
    assert sim.panel("panel-1").mode is Mode.AUTO


def test_auto_disable_stops_commanding(sim, token):
    sim.core.set_auto_mode(token, "panel-1", True, 60.0)
    sim.run_for(30.0)
    sim.core.set_auto_mode(token, "panel-1", False)
    before = sim.audit.count(EventKind.COMMAND)
    phase_before = sim.panel("panel-1").plant.phase
    sim.run_for(30.0)
    auto_after = [e for e in sim.audit.of_kind(EventKind.COMMAND)[before:]
                  if e.payload["source"] == "auto"]
    assert auto_after == []
    # Disabling leaves the plant as it was (still running on its own).
    assert sim.panel("panel-1").plant.phase in (phase_before, Phase.HEATING,
                                                Phase.AT_SETPOINT)


def test_auto_resets_powered_down_then_starts(sim, token):
    sim.core.set_auto_mode(token, "panel-1", True, 60.0)
    sim.run_for(5.0)
    chars = [e.payload["char"] for e in sim.audit.of_kind(EventKind.COMMAND)
             if e.payload["source"] == "auto"]
    assert chars[0] == "d"    # burner-control reset
    assert "a" in chars       # then start
    assert sim.panel("panel-1").plant.phase in (Phase.IGNITING, Phase.HEATING)


def test_auto_goes_silent_after_high_high(sim, token):
    panel = sim.panel("panel-1")
    sim.core.set_auto_mode(token, "panel-1", True, 60.0)
    sim.run_for(10.0)
    # Force the trip with a setpoint override well past the threshold.
    from dataclasses import replace
    panel.plant.state = replace(panel.plant.state, setpoint=150.0)
    panel.auto.setpoint = 150.0
    sim.run_for(300.0)
    assert panel.plant.phase is Phase.HIGH_HIGH_SHUTDOWN
    t_trip = sim.clock.now
    before = len(sim.audit.events)
    sim.run_for(60.0)
    silent = [e for e in sim.audit.events[before:] if e.kind == EventKind.COMMAND]
    assert silent == [], f"auto kept talking after the trip at {t_trip}"


def test_auto_never_starts_while_faulted(sim, token):
    panel = sim.panel("panel-1")
    panel.inject_fault(PUMP_OVERLOAD)
    sim.core.set_auto_mode(token, "panel-1", True, 60.0)
    sim.run_for(20.0)
    commands = [e.payload for e in sim.audit.of_kind(EventKind.COMMAND)
                if e.payload["source"] == "auto"]
    # With the cause never removed, auto may only retry reset, never start.
    assert commands and all(c["signal"] == RESET_BUTTON for c in commands)
    panel.clear_fault_cause(PUMP_OVERLOAD)
    sim.run_for(20.0)
    chars = [e.payload["char"] for e in sim.audit.of_kind(EventKind.COMMAND)]
    assert "a" in chars
    reset_seq = [e.seq for e in sim.audit.of_kind(EventKind.COMMAND)
                 if e.payload["signal"] == RESET_BUTTON]
    start_seq = [e.seq for e in sim.audit.of_kind(EventKind.COMMAND)
                 if e.payload["signal"] == BURNER_START_BUTTON]
    assert min(reset_seq) < min(start_seq)


# -- general reset ------------------------------------------------------------------

def test_general_reset_clears_cleared_cause_faults(sim, token):
    panel = sim.panel("panel-1")
    make_ready(sim, token)
    for name in (PUMP_OVERLOAD, BURNER_MOTOR_OVERLOAD, LOW_GAS_PRESSURE):
        panel.inject_fault(name)
        panel.clear_fault_cause(name)
    sim.run_for(0.2)
    snap = panel.plant.snapshot().input_map()
    assert snap[PUMP_OVERLOAD] and snap[BURNER_MOTOR_OVERLOAD] and snap[LOW_GAS_PRESSURE]
    sim.core.general_reset(token, "panel-1")
    sim.run_for(0.5)
    snap = panel.plant.snapshot().input_map()
    assert not snap[PUMP_OVERLOAD]
    assert not snap[BURNER_MOTOR_OVERLOAD]
    assert not snap[LOW_GAS_PRESSURE]


def test_general_reset_keeps_active_cause(sim, token):
    panel = sim.panel("panel-1")
    make_ready(sim, token)
    panel.inject_fault(PUMP_OVERLOAD)            # cause stays present
    panel.inject_fault(LOW_GAS_PRESSURE)
    panel.clear_fault_cause(LOW_GAS_PRESSURE)
    sim.core.general_reset(token, "panel-1")
    sim.run_for(0.5)
    snap = panel.plant.snapshot().input_map()
    assert snap[PUMP_OVERLOAD]                   # still latched
    assert not snap[LOW_GAS_PRESSURE]


def test_general_reset_idempotent_on_healthy_panel(sim, token):
    before = sim.audit.count(EventKind.COMMAND)
    sim.core.general_reset(token, "panel-1")
    sim.run_for(0.3)
    assert sim.audit.count(EventKind.COMMAND) == before + 2   # reset + receipt
    snap = sim.panel("panel-1").plant.snapshot()
    assert not any(level for _, level in snap.inputs)


# -- streaming ----------------------------------------------------------------------

def test_stream_starts_with_full_snapshot(sim, token):
    sub = sim.core.subscribe(token, "panel-1")
    first = sub.get(timeout=0)
    assert first["type"] == "snapshot"
    assert len(first["state"]["snapshot"]["inputs"]) == 15
    assert first["state"]["signals"]


def test_pump_edge_appears_as_green_delta(sim, token):
    sub = sim.core.subscribe(token, "panel-1")
    sub.get(timeout=0)
    t0 = sim.clock.now
    sim.panel("panel-1").force_input(PUMP_IN_OPERATION, True)
    sim.run_for(0.05)
    event = sub.get(timeout=0)
    assert event["type"] == "delta"
    assert event["signal"] == PUMP_IN_OPERATION
    assert event["level"] is True
    assert event["color"] == "green"
    edge = sim.audit.of_kind(EventKind.STATUS_EDGE)[-1]
    assert edge.payload["char"] == "z"
    assert edge.time - t0 <= CYCLE_S + FRAME_S + 1e-9


def test_stream_seq_consecutive_no_gaps(sim, token):
    sub = sim.core.subscribe(token, "panel-1")
    sim.panel("panel-1").force_input(PUMP_IN_OPERATION, True)
    sim.run_for(3.5)
    sim.panel("panel-1").force_input(PUMP_IN_OPERATION, False)
    sim.run_for(3.5)
    seqs = []
    while (event := sub.get(timeout=0)) is not None:
        seqs.append(event["seq"])
        if sub.queue.empty():
            break
    assert len(seqs) >= 4                 # snapshot + deltas + heartbeats
    first = seqs[0]
    assert seqs == list(range(first, first + len(seqs)))


def test_two_subscribers_see_the_same_ordered_stream(sim, token):
    one = sim.core.subscribe(token, "panel-1")
    two = sim.core.subscribe(token, "panel-1")
    sim.panel("panel-1").force_input(PUMP_IN_OPERATION, True)
    sim.run_for(1.5)

    def drain(sub):
        out = []
        while not sub.queue.empty():
            out.append(sub.get(timeout=0))
        return out

    a, b = drain(one), drain(two)
    # Skip each client's own initial snapshot: afterwards both observe the
    # identical broadcast sequence.
    a_rest = [e for e in a if e["type"] != "snapshot"]
    b_rest = [e for e in b if e["type"] != "snapshot"]
    assert a_rest == b_rest
    assert any(e["type"] == "delta" for e in a_rest)


def test_panels_are_isolated():
    from grs_sim.sim import PanelSpec

    cfg = SimConfig(panels=[PanelSpec(id="p1"), PanelSpec(id="p2")])
    sim = Simulation(cfg)
    sim.auth.store.add("op", "pw", iterations=1000)
    token = sim.core.authenticate("op", "pw").token
    sim.core.press_button(token, "p1", RESET_BUTTON)
    sim.run_for(0.3)
    sim.core.press_button(token, "p1", BURNER_START_BUTTON)
    sim.run_for(3.0)
    assert sim.panel("p1").plant.phase is Phase.HEATING
    assert sim.panel("p2").plant.phase is Phase.POWERED_DOWN
    assert all(r.direction != "a->b" or r.byte_hex in ("0x64", "0x61")
               for r in sim.panel("p1").link.trace)
    assert sim.panel("p2").link.trace == []
    sim.close()


def test_link_close_marks_panel_offline(sim, token):
    sub = sim.core.subscribe(token, "panel-1")
    sub.get(timeout=0)
    sim.panel("panel-1").link.close()
    sim.run_for(2.0)
    events = []
    while (event := sub.get(timeout=0)) is not None:
        events.append(event["type"])
        if sub.queue.empty():
            break
    assert "offline" in events
    with pytest.raises(PanelOfflineError):
        sim.core.press_button(token, "panel-1", EMERGENCY_STOP)
    with pytest.raises(PanelOfflineError):
        sim.core.subscribe(token, "panel-1")


def test_state_includes_counters_and_signals(sim, token):
    state = sim.core.get_state(token, "panel-1")
    assert state["counters"]["rx_bytes"] == 0
    kinds = {s["kind"] for s in state["signals"]}
    assert kinds == {"indicator", "pushbutton", "selector", "estop"}
    assert len([s for s in state["signals"] if s["kind"] == "indicator"]) == 15

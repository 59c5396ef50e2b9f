"""Boiler plant simulation: thermal model, operating sequence, alarms.

The plant is a pure transition system: every operation takes a state and
returns a new state plus the input-signal edges it produced. A thin
mutable wrapper (`BoilerPlant`) owns the current state for the wiring
layer. Identical command/tick sequences therefore produce identical
trajectories, which the audit-log determinism tests rely on.

Operating sequence: the panel powers up dead; a reset press energizes the
control circuit and runs a readiness check (any active hard trip sends it
to the fault state instead). From ready, a start press opens the ignition
gas valve; once the ignition interval elapses the burner is in operation
and heats the water at a constant rate. At the setpoint the burner stops
and drifts down with ambient losses until the hysteresis band reopens it.
Crossing the high-high temperature threshold latches both overtemperature
signals and force-stops the burner until an explicit reset with the
temperature back below the threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .signal_map import (
    BURNER_IN_OPERATION,
    BURNER_START,
    BURNER_START_BUTTON,
    BURNER_STOP_BUTTON,
    ALARM_RECEIPT,
    Color,
    Direction,
    EMERGENCY_STOP,
    FaultClass,
    IGNITION_GAS,
    Kind,
    LAMP_TEST,
    MapError,
    PUMP_IN_OPERATION,
    PinId,
    RESET_BUTTON,
    SignalDef,
    SignalMap,
    TEMP_ALARM_HIGH_HIGH,
    TEMP_SWITCH_HIGH_HIGH,
)


class Phase(Enum):
    POWERED_DOWN = "PoweredDown"
    READY_CHECK = "ReadyCheck"
    READY = "Ready"
    IGNITING = "Igniting"
    HEATING = "Heating"
    AT_SETPOINT = "AtSetpoint"
    HIGH_HIGH_SHUTDOWN = "HighHighShutdown"
    FAULTED = "Faulted"
    EMERGENCY_STOPPED = "EmergencyStopped"


RUNNING_PHASES = (Phase.IGNITING, Phase.HEATING, Phase.AT_SETPOINT)
SHUTDOWN_PHASES = (Phase.HIGH_HIGH_SHUTDOWN, Phase.FAULTED, Phase.EMERGENCY_STOPPED)

SETPOINT_MIN = 0.0
SETPOINT_MAX = 100.0


class PlantError(Exception):
    pass


class UnknownPinError(PlantError):
    pass


class UnknownFaultError(PlantError):
    pass


class SetpointRangeError(PlantError):
    def __init__(self, value: float):
        super().__init__(f"setpoint {value} outside [{SETPOINT_MIN:g}, {SETPOINT_MAX:g}]")
        self.value = value


@dataclass(frozen=True)
class PlantParams:
    k_heat: float = 0.5        # °C/s with the burner firing
    k_cool: float = 0.1        # °C/s drift toward ambient, burner off
    t_ambient: float = 25.0
    t_highhigh: float = 110.0  # forced-shutdown threshold
    hysteresis: float = 2.0
    dt: float = 0.1            # integration tick
    ignition_s: float = 2.0    # gas-valve lead time before the burner proves

    def __post_init__(self) -> None:
        if self.k_heat <= 0:
            raise ValueError("k_heat must be positive")
        if self.k_cool < 0:
            raise ValueError("k_cool cannot be negative")
        if self.t_ambient >= self.t_highhigh:
            raise ValueError("ambient must sit below the high-high threshold")
        if self.t_highhigh <= SETPOINT_MAX:
            raise ValueError("high-high threshold must exceed the setpoint range")
        if self.hysteresis <= 0:
            raise ValueError("hysteresis must be positive")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.ignition_s < 0:
            raise ValueError("ignition time cannot be negative")


@dataclass(frozen=True)
class BoilerState:
    temperature: float
    setpoint: float
    phase: Phase
    burner_on: bool
    pump_on: bool
    latched_faults: frozenset[str]
    fault_causes: frozenset[str]
    forced_inputs: tuple[tuple[str, bool], ...]
    output_levels: tuple[tuple[str, bool], ...]   # pin name -> applied level
    estop_engaged: bool
    ignition_until: float | None
    sim_time: float


@dataclass(frozen=True)
class Edge:
    signal: SignalDef
    level: bool   # True = asserted, False = cleared


@dataclass(frozen=True)
class OutputResult:
    accepted: bool
    reason: str | None = None
    edges: tuple[Edge, ...] = ()


@dataclass(frozen=True)
class PanelSnapshot:
    inputs: tuple[tuple[str, bool], ...]    # signal description -> lamp level
    outputs: tuple[tuple[str, bool], ...]   # pin name -> line level
    phase: Phase
    temperature: float
    setpoint: float
    sim_time: float

    def input_map(self) -> dict[str, bool]:
        return dict(self.inputs)

    def output_map(self) -> dict[str, bool]:
        return dict(self.outputs)

    def to_dict(self) -> dict:
        return {
            "phase": self.phase.value,
            "temperature": round(self.temperature, 6),
            "setpoint": self.setpoint,
            "sim_time": round(self.sim_time, 6),
            "inputs": dict(self.inputs),
            "outputs": dict(self.outputs),
        }


def initial_state(params: PlantParams, setpoint: float = 60.0) -> BoilerState:
    return BoilerState(
        temperature=params.t_ambient,
        setpoint=setpoint,
        phase=Phase.POWERED_DOWN,
        burner_on=False,
        pump_on=False,
        latched_faults=frozenset(),
        fault_causes=frozenset(),
        forced_inputs=(),
        output_levels=(),
        estop_engaged=False,
        ignition_until=None,
        sim_time=0.0,
    )


# ---------------------------------------------------------------------------
# Signal levels
# ---------------------------------------------------------------------------

def _fault_active(state: BoilerState, description: str) -> bool:
    return description in state.latched_faults or description in state.fault_causes


def _natural_level(state: BoilerState, sig: SignalDef) -> bool:
    d = sig.description
    if sig.color is Color.RED:
        return _fault_active(state, d)
    if d == PUMP_IN_OPERATION:
        return state.pump_on
    if d == IGNITION_GAS:
        return state.burner_on or state.phase is Phase.IGNITING
    if d == BURNER_START:
        return state.phase in RUNNING_PHASES
    if d == BURNER_IN_OPERATION:
        return state.burner_on and state.phase is not Phase.IGNITING
    return False


def _lamp_test_on(state: BoilerState, smap: SignalMap) -> bool:
    sig = smap.get(LAMP_TEST)
    if sig is None or sig.pin is None:
        return False
    return dict(state.output_levels).get(str(sig.pin), False)


def input_levels(state: BoilerState, smap: SignalMap) -> dict[str, bool]:
    """Instantaneous lamp levels for all pinned inputs, in map order."""
    forced = dict(state.forced_inputs)
    test = _lamp_test_on(state, smap)
    levels: dict[str, bool] = {}
    for sig in smap.inputs():
        base = forced.get(sig.description, _natural_level(state, sig))
        levels[sig.description] = bool(base or test)
    return levels


def _edges(before: BoilerState, after: BoilerState, smap: SignalMap) -> tuple[Edge, ...]:
    old = input_levels(before, smap)
    new = input_levels(after, smap)
    return tuple(
        Edge(smap.find(name), new[name])
        for name in new
        if new[name] != old[name]
    )


def _trip_active(state: BoilerState, smap: SignalMap) -> bool:
    return any(
        _fault_active(state, sig.description)
        for sig in smap.inputs()
        if sig.fault_class is FaultClass.TRIP
    )


def _all_stop(state: BoilerState) -> BoilerState:
    return replace(state, burner_on=False, pump_on=False, ignition_until=None)


# ---------------------------------------------------------------------------
# Transitions
# ---------------------------------------------------------------------------

def step(state: BoilerState, params: PlantParams, dt: float,
         smap: SignalMap) -> tuple[BoilerState, tuple[Edge, ...]]:
    """Advance the plant by dt seconds."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    before = state
    t = state.temperature
    if state.burner_on:
        t = t + params.k_heat * dt
    elif t > params.t_ambient:
        t = max(t - params.k_cool * dt, params.t_ambient)
    now = state.sim_time + dt
    state = replace(state, temperature=t, sim_time=now)

    # Ignition interval elapsed: burner proves and main heating begins.
    if state.phase is Phase.IGNITING and state.ignition_until is not None \
            and now >= state.ignition_until:
        state = replace(state, phase=Phase.HEATING, ignition_until=None)

    # Setpoint hysteresis.
    if state.phase is Phase.HEATING and t >= state.setpoint:
        state = replace(state, phase=Phase.AT_SETPOINT, burner_on=False)
    elif state.phase is Phase.AT_SETPOINT and t <= state.setpoint - params.hysteresis:
        state = replace(state, phase=Phase.HEATING, burner_on=True)

    # Readiness check runs one tick after a reset press.
    if state.phase is Phase.READY_CHECK:
        state = replace(
            state,
            phase=Phase.FAULTED if _trip_active(state, smap) else Phase.READY)

    # A hard trip appearing mid-operation stops everything.
    if state.phase in (Phase.READY,) + RUNNING_PHASES and _trip_active(state, smap):
        state = replace(_all_stop(state), phase=Phase.FAULTED)

    # High-high overtemperature: latch both temperature signals and shut down.
    if t >= params.t_highhigh:
        latched = state.latched_faults | {TEMP_SWITCH_HIGH_HIGH, TEMP_ALARM_HIGH_HIGH}
        state = replace(state, latched_faults=latched)
        if state.phase is not Phase.EMERGENCY_STOPPED:
            state = replace(_all_stop(state), phase=Phase.HIGH_HIGH_SHUTDOWN)

    return state, _edges(before, state, smap)


def _cause_gone(state: BoilerState, params: PlantParams, description: str) -> bool:
    if description in state.fault_causes:
        return False
    if description in (TEMP_SWITCH_HIGH_HIGH, TEMP_ALARM_HIGH_HIGH):
        return state.temperature < params.t_highhigh
    return True


def _clear_latches(state: BoilerState, params: PlantParams, smap: SignalMap,
                   fault_class: FaultClass) -> BoilerState:
    keep = set()
    for name in state.latched_faults:
        sig = smap.get(name)
        cls = sig.fault_class if sig is not None else FaultClass.TRIP
        if cls is fault_class and _cause_gone(state, params, name):
            continue
        keep.add(name)
    return replace(state, latched_faults=frozenset(keep))


def apply_output(state: BoilerState, params: PlantParams, smap: SignalMap,
                 pin: PinId, level: bool) -> tuple[BoilerState, OutputResult]:
    """Drive one output line. Button actions fire on the rising edge."""
    sig = smap.lookup_by_pin(pin)
    if sig is None or sig.direction is not Direction.DIGITAL_OUT:
        raise UnknownPinError(f"{pin} is not an actuatable output")

    before = state
    out = dict(state.output_levels)
    was = out.get(str(pin), False)
    out[str(pin)] = bool(level)
    state = replace(state, output_levels=tuple(out.items()))
    rising = level and not was
    falling = was and not level

    accepted = True
    reason: str | None = None
    d = sig.description

    if d == BURNER_START_BUTTON and rising:
        if state.phase is Phase.READY:
            state = replace(
                state, phase=Phase.IGNITING, burner_on=True, pump_on=True,
                ignition_until=state.sim_time + params.ignition_s)
        else:
            accepted, reason = False, f"ignored-in-phase:{state.phase.value}"
    elif d == BURNER_STOP_BUTTON and rising:
        if state.phase in RUNNING_PHASES:
            state = replace(_all_stop(state), phase=Phase.READY)
        elif state.phase is not Phase.READY:
            accepted, reason = False, f"ignored-in-phase:{state.phase.value}"
    elif d == RESET_BUTTON and rising:
        if state.phase in RUNNING_PHASES:
            accepted, reason = False, f"ignored-in-phase:{state.phase.value}"
        elif state.estop_engaged:
            accepted, reason = False, "ignored-in-phase:emergency-stop-engaged"
        else:
            state = _clear_latches(state, params, smap, FaultClass.TRIP)
            state = replace(state, phase=Phase.READY_CHECK)
    elif d == ALARM_RECEIPT and rising:
        state = _clear_latches(state, params, smap, FaultClass.ALARM)
    elif d == EMERGENCY_STOP:
        if rising:
            state = replace(_all_stop(state), phase=Phase.EMERGENCY_STOPPED,
                            estop_engaged=True)
        elif falling:
            state = replace(state, estop_engaged=False)
    # Selector switches and test buttons: the line level itself is the
    # whole effect; supervisors read positions from the snapshot.

    return state, OutputResult(accepted, reason, _edges(before, state, smap))


def inject_fault(state: BoilerState, smap: SignalMap,
                 fault: SignalDef | str) -> tuple[BoilerState, tuple[Edge, ...]]:
    """Raise a fault or alarm condition. Trip-class faults stop the plant;
    alarm-class ones latch their lamp and leave the sequence running."""
    if isinstance(fault, str):
        sig = smap.get(fault)
        if sig is None:
            raise UnknownFaultError(f"no fault signal named {fault!r}")
        fault = sig
    if fault.kind is not Kind.INDICATOR or fault.color is not Color.RED:
        raise UnknownFaultError(f"{fault.description!r} is not a fault indicator")

    before = state
    state = replace(
        state,
        fault_causes=state.fault_causes | {fault.description},
        latched_faults=state.latched_faults | {fault.description},
    )
    if fault.fault_class is FaultClass.TRIP and \
            state.phase in (Phase.READY, Phase.READY_CHECK) + RUNNING_PHASES:
        state = replace(_all_stop(state), phase=Phase.FAULTED)
    return state, _edges(before, state, smap)


def clear_fault_cause(state: BoilerState, smap: SignalMap,
                      fault: str) -> tuple[BoilerState, tuple[Edge, ...]]:
    """Remove a fault's underlying condition; the latch stays until reset."""
    if smap.get(fault) is None:
        raise UnknownFaultError(f"no fault signal named {fault!r}")
    before = state
    state = replace(state, fault_causes=state.fault_causes - {fault})
    return state, _edges(before, state, smap)


def force_input(state: BoilerState, smap: SignalMap, name: str,
                level: bool | None) -> tuple[BoilerState, tuple[Edge, ...]]:
    """Pin an input signal to a level (None removes the override).

    Display-level override for exercising indicator paths from scenarios
    and tests; it does not create a fault condition (use inject_fault)."""
    sig = smap.get(name)
    if sig is None or sig.direction is not Direction.DIGITAL_IN:
        raise MapError(f"no input signal named {name!r}")
    before = state
    forced = dict(state.forced_inputs)
    if level is None:
        forced.pop(name, None)
    else:
        forced[name] = bool(level)
    state = replace(state, forced_inputs=tuple(forced.items()))
    return state, _edges(before, state, smap)


def set_setpoint(state: BoilerState, sp: float) -> BoilerState:
    if not SETPOINT_MIN <= sp <= SETPOINT_MAX:
        raise SetpointRangeError(sp)
    return replace(state, setpoint=float(sp))


def snapshot(state: BoilerState, smap: SignalMap) -> PanelSnapshot:
    levels = input_levels(state, smap)
    out = dict(state.output_levels)
    return PanelSnapshot(
        inputs=tuple(levels.items()),
        outputs=tuple((str(p), out.get(str(p), False)) for p in smap.output_pins()),
        phase=state.phase,
        temperature=state.temperature,
        setpoint=state.setpoint,
        sim_time=state.sim_time,
    )


class BoilerPlant:
    """Mutable wrapper holding the current state for the wiring layer."""

    def __init__(self, smap: SignalMap, params: PlantParams | None = None,
                 setpoint: float = 60.0):
        self.smap = smap
        self.params = params if params is not None else PlantParams()
        self.state = initial_state(self.params, setpoint=setpoint)

    def step(self, dt: float | None = None) -> tuple[Edge, ...]:
        self.state, edges = step(
            self.state, self.params, dt if dt is not None else self.params.dt,
            self.smap)
        return edges

    def apply_output(self, pin: PinId, level: bool) -> OutputResult:
        self.state, result = apply_output(self.state, self.params, self.smap,
                                          pin, level)
        return result

    def inject_fault(self, fault: SignalDef | str) -> tuple[Edge, ...]:
        self.state, edges = inject_fault(self.state, self.smap, fault)
        return edges

    def clear_fault_cause(self, fault: str) -> tuple[Edge, ...]:
        self.state, edges = clear_fault_cause(self.state, self.smap, fault)
        return edges

    def force_input(self, name: str, level: bool | None) -> tuple[Edge, ...]:
        self.state, edges = force_input(self.state, self.smap, name, level)
        return edges

    def set_setpoint(self, sp: float) -> None:
        self.state = set_setpoint(self.state, sp)

    def snapshot(self) -> PanelSnapshot:
        return snapshot(self.state, self.smap)

    @property
    def phase(self) -> Phase:
        return self.state.phase

    @property
    def temperature(self) -> float:
        return self.state.temperature

"""Plant simulation: thermal model, operating sequence, faults, safety.

The thermal assertions are checked against an explicit-Euler oracle kept
separate from the implementation; the discrete phase logic is checked
exhaustively against a hand-coded transition table.
"""

import random
from dataclasses import replace

import pytest

from grs_sim.plant import (
    BoilerPlant,
    Phase,
    PlantParams,
    SHUTDOWN_PHASES,
    SetpointRangeError,
    UnknownFaultError,
    UnknownPinError,
    apply_output,
    initial_state,
    inject_fault,
    input_levels,
    set_setpoint,
    snapshot,
    step,
)
from grs_sim.signal_map import (
    BURNER_IN_OPERATION,
    BURNER_START,
    IGNITION_GAS,
    LOW_GAS_PRESSURE,
    PUMP_IN_OPERATION,
    PUMP_OVERLOAD,
    PinId,
    TEMP_ALARM_HIGH_HIGH,
    TEMP_SWITCH_HIGH_HIGH,
    build_default_map,
)

SMAP = build_default_map()
PARAMS = PlantParams()

PIN_START = PinId.parse("RC2")
PIN_STOP = PinId.parse("RC3")
PIN_RESET = PinId.parse("RC4")
PIN_ESTOP = PinId.parse("RD6")
PIN_LAMP_TEST = PinId.parse("RD5")


def euler_oracle(t: float, burner_on: bool, params: PlantParams, dt: float) -> float:
    if burner_on:
        return t + params.k_heat * dt
    return max(t - params.k_cool * dt, params.t_ambient) if t > params.t_ambient else t


def press(state, pin, params=PARAMS):
    """Pulse an output: rising then falling edge."""
    state, result = apply_output(state, params, SMAP, pin, True)
    state, _ = apply_output(state, params, SMAP, pin, False)
    return state, result


def make_ready(params=PARAMS):
    state = initial_state(params)
    state, _ = press(state, PIN_RESET, params)
    state, _ = step(state, params, params.dt, SMAP)
    assert state.phase is Phase.READY
    return state


def run_to_heating(params=PARAMS):
    state = make_ready(params)
    state, _ = press(state, PIN_START, params)
    while state.phase is Phase.IGNITING:
        state, _ = step(state, params, params.dt, SMAP)
    assert state.phase is Phase.HEATING
    return state


# -- thermal model ------------------------------------------------------------

def test_equilibrium_at_ambient():
    state = initial_state(PARAMS)
    after, edges = step(state, PARAMS, PARAMS.dt, SMAP)
    assert after.temperature == PARAMS.t_ambient
    assert edges == ()


def test_heating_rate_matches_oracle():
    params = PlantParams(k_heat=2.0)
    state = replace(initial_state(params), phase=Phase.HEATING, burner_on=True,
                    temperature=20.0, setpoint=100.0)
    after, _ = step(state, params, 1.0, SMAP)
    assert after.temperature == 22.0
    assert after.temperature == euler_oracle(20.0, True, params, 1.0)


def test_cooling_clamps_at_ambient():
    state = replace(initial_state(PARAMS), temperature=25.05, phase=Phase.READY)
    after, _ = step(state, PARAMS, 1.0, SMAP)
    assert after.temperature == PARAMS.t_ambient
    assert after.temperature == euler_oracle(25.05, False, PARAMS, 1.0)


def test_trajectory_matches_oracle_through_cycle():
    params = PlantParams()
    state = run_to_heating(params)
    for _ in range(2000):
        expected = euler_oracle(state.temperature, state.burner_on, params, params.dt)
        state, _ = step(state, params, params.dt, SMAP)
        assert state.temperature == pytest.approx(expected)


# -- operating sequence --------------------------------------------------------

def test_reset_energizes_then_ready():
    state = initial_state(PARAMS)
    assert state.phase is Phase.POWERED_DOWN
    state, result = press(state, PIN_RESET)
    assert result.accepted
    assert state.phase is Phase.READY_CHECK
    state, _ = step(state, PARAMS, PARAMS.dt, SMAP)
    assert state.phase is Phase.READY


def test_start_ignition_sequence_edge_order():
    state = make_ready()
    state, result = press(state, PIN_START)
    assert result.accepted
    assert state.phase is Phase.IGNITING
    names = [e.signal.description for e in result.edges if e.level]
    assert names.index(IGNITION_GAS) < names.index(BURNER_START)  # gas first


def test_burner_proves_after_ignition_interval():
    state = make_ready()
    state, _ = press(state, PIN_START)
    levels = input_levels(state, SMAP)
    assert levels[IGNITION_GAS] and not levels[BURNER_IN_OPERATION]
    steps = int(PARAMS.ignition_s / PARAMS.dt) + 1
    for _ in range(steps):
        state, edges = step(state, PARAMS, PARAMS.dt, SMAP)
    assert state.phase is Phase.HEATING
    assert input_levels(state, SMAP)[BURNER_IN_OPERATION]


def test_start_ignored_when_not_ready():
    state = initial_state(PARAMS)
    state, result = press(state, PIN_START)
    assert not result.accepted
    assert "ignored-in-phase" in result.reason
    assert state.phase is Phase.POWERED_DOWN


def test_start_ignored_when_faulted():
    state = make_ready()
    state, _ = inject_fault(state, SMAP, PUMP_OVERLOAD)
    assert state.phase is Phase.FAULTED
    state, result = press(state, PIN_START)
    assert not result.accepted
    assert state.phase is Phase.FAULTED


def test_stop_returns_to_ready():
    state = run_to_heating()
    state, result = press(state, PIN_STOP)
    assert result.accepted
    assert state.phase is Phase.READY
    assert not state.burner_on and not state.pump_on
    levels = input_levels(state, SMAP)
    assert not levels[IGNITION_GAS] and not levels[BURNER_START]


def test_emergency_stop_from_any_running_phase():
    for make in (initial_state, lambda p: make_ready(p), lambda p: run_to_heating(p)):
        state = make(PARAMS) if make is initial_state else make(PARAMS)
        state, result = apply_output(state, PARAMS, SMAP, PIN_ESTOP, True)
        assert result.accepted
        assert state.phase is Phase.EMERGENCY_STOPPED
        assert not state.burner_on and not state.pump_on


def test_reset_blocked_while_estop_engaged():
    state = make_ready()
    state, _ = apply_output(state, PARAMS, SMAP, PIN_ESTOP, True)
    state, result = press(state, PIN_RESET)
    assert not result.accepted
    # Disengage, then reset recovers the plant.
    state, _ = apply_output(state, PARAMS, SMAP, PIN_ESTOP, False)
    assert state.phase is Phase.EMERGENCY_STOPPED
    state, result = press(state, PIN_RESET)
    assert result.accepted
    state, _ = step(state, PARAMS, PARAMS.dt, SMAP)
    assert state.phase is Phase.READY


def test_unknown_pin_rejected():
    state = initial_state(PARAMS)
    with pytest.raises(UnknownPinError):
        apply_output(state, PARAMS, SMAP, PinId.parse("RC1"), True)  # reserved
    with pytest.raises(UnknownPinError):
        apply_output(state, PARAMS, SMAP, PinId.parse("RA0"), True)  # input


# -- hysteresis ---------------------------------------------------------------

def test_hysteresis_band_entered_and_held():
    params = PlantParams()
    state = run_to_heating(params)
    lo = state.setpoint - params.hysteresis - params.k_cool * params.dt
    hi = state.setpoint + params.k_heat * params.dt
    entered_at = None
    for i in range(20000):
        state, _ = step(state, params, params.dt, SMAP)
        inside = lo <= state.temperature <= hi
        if entered_at is None and inside:
            entered_at = i
        if entered_at is not None:
            assert inside, f"left the band at step {i}"
    assert entered_at is not None
    assert state.phase in (Phase.HEATING, Phase.AT_SETPOINT)


def test_burner_cycles_within_band():
    params = PlantParams()
    state = run_to_heating(params)
    phases = set()
    for _ in range(20000):
        state, _ = step(state, params, params.dt, SMAP)
        phases.add(state.phase)
    assert Phase.AT_SETPOINT in phases and Phase.HEATING in phases


def test_setpoint_zero_never_self_ignites():
    params = PlantParams()
    state = make_ready(params)
    state = set_setpoint(state, 0.0)
    for _ in range(1000):
        state, _ = step(state, params, params.dt, SMAP)
        assert not state.burner_on


# -- high-high trip --------------------------------------------------------------

def force_high_high(params=PARAMS):
    state = run_to_heating(params)
    state = replace(state, setpoint=150.0)   # parameter override past the range
    while state.phase is Phase.HEATING:
        state, edges = step(state, params, params.dt, SMAP)
    return state, edges


def test_high_high_trip_latches_and_stops():
    state, edges = force_high_high()
    assert state.phase is Phase.HIGH_HIGH_SHUTDOWN
    assert not state.burner_on
    asserted = {e.signal.description for e in edges if e.level}
    assert TEMP_SWITCH_HIGH_HIGH in asserted
    assert TEMP_ALARM_HIGH_HIGH in asserted
    assert TEMP_SWITCH_HIGH_HIGH in state.latched_faults


def test_start_never_reignites_after_trip_without_reset():
    state, _ = force_high_high()
    rng = random.Random(42)
    pins = [PIN_START, PIN_STOP]
    for _ in range(1000):
        if rng.random() < 0.5:
            state, result = press(state, rng.choice(pins))
            assert not result.accepted or not state.burner_on
        else:
            state, _ = step(state, PARAMS, PARAMS.dt, SMAP)
        assert not state.burner_on
        assert state.phase is Phase.HIGH_HIGH_SHUTDOWN


def test_reset_after_cooldown_recovers():
    state, _ = force_high_high()
    while state.temperature >= PARAMS.t_highhigh:
        state, _ = step(state, PARAMS, PARAMS.dt, SMAP)
    state, result = press(state, PIN_RESET)
    assert result.accepted
    state, _ = step(state, PARAMS, PARAMS.dt, SMAP)
    assert state.phase is Phase.READY
    assert TEMP_SWITCH_HIGH_HIGH not in state.latched_faults


def test_bounded_temperature():
    state, _ = force_high_high()
    assert state.temperature <= PARAMS.t_highhigh + PARAMS.k_heat * PARAMS.dt


# -- faults and alarms -------------------------------------------------------------

def test_trip_fault_stops_plant():
    state = run_to_heating()
    state, edges = inject_fault(state, SMAP, PUMP_OVERLOAD)
    assert state.phase is Phase.FAULTED
    assert not state.burner_on
    assert any(e.signal.description == PUMP_OVERLOAD and e.level for e in edges)


def test_alarm_fault_does_not_trip():
    state = run_to_heating()
    state, edges = inject_fault(state, SMAP, LOW_GAS_PRESSURE)
    assert state.phase is Phase.HEATING
    assert state.burner_on
    assert any(e.signal.description == LOW_GAS_PRESSURE and e.level for e in edges)


def test_unknown_fault_rejected():
    state = initial_state(PARAMS)
    with pytest.raises(UnknownFaultError):
        inject_fault(state, SMAP, "NO SUCH SIGNAL")
    with pytest.raises(UnknownFaultError):
        inject_fault(state, SMAP, PUMP_IN_OPERATION)   # green, not a fault


def test_fault_latches_until_reset_with_cause_removed():
    plant = BoilerPlant(SMAP)
    plant.apply_output(PIN_RESET, True)
    plant.apply_output(PIN_RESET, False)
    plant.step()
    plant.inject_fault(PUMP_OVERLOAD)
    # Reset with the cause still present: the latch stays.
    plant.apply_output(PIN_RESET, True)
    plant.apply_output(PIN_RESET, False)
    plant.step()
    assert plant.phase is Phase.FAULTED
    # Remove the cause; only then does reset clear it.
    plant.clear_fault_cause(PUMP_OVERLOAD)
    assert PUMP_OVERLOAD in plant.state.latched_faults
    plant.apply_output(PIN_RESET, True)
    plant.apply_output(PIN_RESET, False)
    plant.step()
    assert plant.phase is Phase.READY
    assert PUMP_OVERLOAD not in plant.state.latched_faults


# -- setpoint -----------------------------------------------------------------------

@pytest.mark.parametrize("sp", [0, 1, 50, 60, 99, 100])
def test_setpoint_accepts_range(sp):
    state = set_setpoint(initial_state(PARAMS), sp)
    assert state.setpoint == float(sp)


@pytest.mark.parametrize("sp", [-1, 101, 150, -0.5])
def test_setpoint_rejects_out_of_range(sp):
    with pytest.raises(SetpointRangeError):
        set_setpoint(initial_state(PARAMS), sp)


# -- snapshots ---------------------------------------------------------------------

def test_fresh_snapshot_all_clear():
    snap = snapshot(initial_state(PARAMS), SMAP)
    assert len(snap.inputs) == 15
    assert len(snap.outputs) == 15
    assert not any(level for _, level in snap.inputs)
    assert not any(level for _, level in snap.outputs)


def test_snapshot_after_pump_runs():
    state = run_to_heating()
    snap = snapshot(state, SMAP)
    assert snap.input_map()[PUMP_IN_OPERATION]


def test_snapshot_after_trip():
    state, _ = force_high_high()
    snap = snapshot(state, SMAP)
    assert snap.input_map()[TEMP_SWITCH_HIGH_HIGH]
    assert not snap.input_map()[BURNER_IN_OPERATION]


def test_lamp_test_lights_everything():
    state = make_ready()
    state, result = apply_output(state, PARAMS, SMAP, PIN_LAMP_TEST, True)
    assert all(input_levels(state, SMAP).values())
    assert len([e for e in result.edges if e.level]) == 15
    state, result = apply_output(state, PARAMS, SMAP, PIN_LAMP_TEST, False)
    assert not any(input_levels(state, SMAP).values())


# -- discrete model versus hand-coded table -------------------------------------------

BUTTONS = {"start": PIN_START, "stop": PIN_STOP, "reset": PIN_RESET,
           "estop": PIN_ESTOP}

# phase -> button -> expected phase (no faults, temperature nominal).
TRANSITION_TABLE = {
    Phase.POWERED_DOWN: {"start": Phase.POWERED_DOWN, "stop": Phase.POWERED_DOWN,
                         "reset": Phase.READY_CHECK, "estop": Phase.EMERGENCY_STOPPED},
    Phase.READY_CHECK: {"start": Phase.READY_CHECK, "stop": Phase.READY_CHECK,
                        "reset": Phase.READY_CHECK, "estop": Phase.EMERGENCY_STOPPED},
    Phase.READY: {"start": Phase.IGNITING, "stop": Phase.READY,
                  "reset": Phase.READY_CHECK, "estop": Phase.EMERGENCY_STOPPED},
    Phase.IGNITING: {"start": Phase.IGNITING, "stop": Phase.READY,
                     "reset": Phase.IGNITING, "estop": Phase.EMERGENCY_STOPPED},
    Phase.HEATING: {"start": Phase.HEATING, "stop": Phase.READY,
                    "reset": Phase.HEATING, "estop": Phase.EMERGENCY_STOPPED},
    Phase.AT_SETPOINT: {"start": Phase.AT_SETPOINT, "stop": Phase.READY,
                        "reset": Phase.AT_SETPOINT, "estop": Phase.EMERGENCY_STOPPED},
    Phase.HIGH_HIGH_SHUTDOWN: {"start": Phase.HIGH_HIGH_SHUTDOWN,
                               "stop": Phase.HIGH_HIGH_SHUTDOWN,
                               "reset": Phase.READY_CHECK,
                               "estop": Phase.EMERGENCY_STOPPED},
    Phase.FAULTED: {"start": Phase.FAULTED, "stop": Phase.FAULTED,
                    "reset": Phase.READY_CHECK, "estop": Phase.EMERGENCY_STOPPED},
    Phase.EMERGENCY_STOPPED: {"start": Phase.EMERGENCY_STOPPED,
                              "stop": Phase.EMERGENCY_STOPPED,
                              "reset": Phase.EMERGENCY_STOPPED,
                              "estop": Phase.EMERGENCY_STOPPED},
}


def synthetic_state(phase: Phase):
    state = initial_state(PARAMS)
    burner = phase in (Phase.IGNITING, Phase.HEATING)
    running = phase in (Phase.IGNITING, Phase.HEATING, Phase.AT_SETPOINT)
    return replace(
        state,
        phase=phase,
        burner_on=burner,
        pump_on=running,
        estop_engaged=phase is Phase.EMERGENCY_STOPPED,
        ignition_until=state.sim_time + 2.0 if phase is Phase.IGNITING else None,
        latched_faults=frozenset(
            {TEMP_SWITCH_HIGH_HIGH, TEMP_ALARM_HIGH_HIGH}
            if phase is Phase.HIGH_HIGH_SHUTDOWN else
            {PUMP_OVERLOAD} if phase is Phase.FAULTED else set()),
        fault_causes=frozenset(
            {PUMP_OVERLOAD} if phase is Phase.FAULTED else set()),
    )


@pytest.mark.parametrize("phase", list(TRANSITION_TABLE))
@pytest.mark.parametrize("button", list(BUTTONS))
def test_single_command_transitions(phase, button):
    state = synthetic_state(phase)
    state, _ = press(state, BUTTONS[button])
    assert state.phase is TRANSITION_TABLE[phase][button], (
        f"{phase.value} --{button}--> expected "
        f"{TRANSITION_TABLE[phase][button].value}, got {state.phase.value}")


# -- safety and determinism under random walks ------------------------------------------

def random_walk(seed: int, steps: int = 400):
    rng = random.Random(seed)
    state = initial_state(PARAMS)
    trace = [state]
    faults = [PUMP_OVERLOAD, LOW_GAS_PRESSURE, TEMP_SWITCH_HIGH_HIGH]
    for _ in range(steps):
        roll = rng.random()
        if roll < 0.45:
            state, _ = step(state, PARAMS, PARAMS.dt, SMAP)
        elif roll < 0.80:
            pin = rng.choice(list(BUTTONS.values()))
            state, _ = press(state, pin)
        elif roll < 0.90:
            state, _ = inject_fault(state, SMAP, rng.choice(faults))
        else:
            from grs_sim.plant import clear_fault_cause
            state, _ = clear_fault_cause(state, SMAP, rng.choice(faults))
        trace.append(state)
    return trace


@pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
def test_safety_invariant_random_walk(seed):
    bound = PARAMS.t_highhigh + PARAMS.k_heat * PARAMS.dt
    for state in random_walk(seed):
        if state.phase in SHUTDOWN_PHASES:
            assert not state.burner_on
        if state.burner_on:
            assert state.phase in (Phase.IGNITING, Phase.HEATING)
        assert state.temperature <= bound


def test_identical_sequences_identical_trajectories():
    assert random_walk(99) == random_walk(99)

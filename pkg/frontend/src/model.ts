/**
 * Panel view model: a pure function of the last full snapshot plus the
 * deltas received after it. No network, no DOM — replaying a recorded
 * stream always reproduces the same model, and therefore the same panel.
 */

import type {
  LampColor,
  PanelState,
  SignalMeta,
  StreamEvent,
} from "./types.js";

/** Silence longer than this shows the disconnected indicator. Kept below
 * the 3 s contract so the banner is up before the deadline. */
export const STALE_MS = 2500;

export type Connection = "connecting" | "live" | "stale" | "offline";

export interface Lamp {
  description: string;
  pin: string;
  label: string;
  color: LampColor;
  lit: boolean;
}

export interface Control {
  description: string;
  kind: "pushbutton" | "selector" | "estop";
  pin: string;
  level: boolean; // latched line level (selectors, emergency stop)
}

export interface CommandOutcome {
  signal: string;
  accepted: boolean;
  detail: string;
}

export interface PanelViewModel {
  panelId: string;
  panelName: string;
  connection: Connection;
  lastEventMs: number | null;
  seq: number | null;
  gapDetected: boolean;
  mode: "Manual" | "Auto";
  autoSetpoint: number | null;
  phase: string;
  temperature: number | null;
  setpoint: number | null;
  simTime: number | null;
  lamps: Lamp[];
  controls: Control[];
  lastCommand: CommandOutcome | null;
}

export function initialViewModel(panelId: string): PanelViewModel {
  return {
    panelId,
    panelName: panelId,
    connection: "connecting",
    lastEventMs: null,
    seq: null,
    gapDetected: false,
    mode: "Manual",
    autoSetpoint: null,
    phase: "unknown",
    temperature: null,
    setpoint: null,
    simTime: null,
    lamps: [],
    controls: [],
    lastCommand: null,
  };
}

function lampsFrom(signals: SignalMeta[], inputs: Record<string, boolean>): Lamp[] {
  return signals
    .filter((s) => s.kind === "indicator")
    .map((s) => ({
      description: s.description,
      pin: s.pin ?? "",
      label: s.label,
      color: (s.color === "none" ? "green" : s.color) as LampColor,
      lit: inputs[s.description] ?? false,
    }));
}

function controlsFrom(signals: SignalMeta[], outputs: Record<string, boolean>): Control[] {
  return signals
    .filter((s) => s.kind !== "indicator")
    .map((s) => ({
      description: s.description,
      kind: s.kind as Control["kind"],
      pin: s.pin ?? "",
      level: s.pin ? (outputs[s.pin] ?? false) : false,
    }));
}

export function fromState(state: PanelState, nowMs: number): PanelViewModel {
  return {
    panelId: state.id,
    panelName: state.name,
    connection: state.online ? "live" : "offline",
    lastEventMs: nowMs,
    seq: state.seq,
    gapDetected: false,
    mode: state.mode,
    autoSetpoint: state.auto.setpoint,
    phase: state.snapshot.phase,
    temperature: state.snapshot.temperature,
    setpoint: state.snapshot.setpoint,
    simTime: state.snapshot.sim_time,
    lamps: lampsFrom(state.signals, state.snapshot.inputs),
    controls: controlsFrom(state.signals, state.snapshot.outputs),
    lastCommand: null,
  };
}

/** Apply one stream event. Lamp changes come only from received deltas,
 * never from local guesses about what a command did. */
export function apply(
  vm: PanelViewModel,
  event: StreamEvent,
  nowMs: number,
): PanelViewModel {
  const gap = vm.seq !== null && event.seq !== vm.seq + 1;
  const base: PanelViewModel = {
    ...vm,
    seq: event.seq,
    gapDetected: vm.gapDetected || gap,
    lastEventMs: nowMs,
    connection: vm.connection === "offline" ? "offline" : "live",
  };
  switch (event.type) {
    case "snapshot":
      return { ...fromState(event.state, nowMs), seq: event.seq, lastCommand: vm.lastCommand };
    case "delta":
      return {
        ...base,
        phase: event.phase,
        temperature: event.temperature,
        simTime: event.sim_time,
        lamps: base.lamps.map((lamp) =>
          lamp.description === event.signal ? { ...lamp, lit: event.level } : lamp,
        ),
      };
    case "heartbeat":
      return {
        ...base,
        phase: event.phase,
        temperature: event.temperature,
        setpoint: event.setpoint,
        mode: event.mode,
        simTime: event.sim_time,
      };
    case "mode":
      return { ...base, mode: event.mode };
    case "offline":
      return { ...base, connection: "offline" };
    default:
      return base;
  }
}

/** Advance the staleness clock; call periodically with the current time. */
export function applyTick(vm: PanelViewModel, nowMs: number): PanelViewModel {
  if (vm.connection === "offline" || vm.lastEventMs === null) return vm;
  const stale = nowMs - vm.lastEventMs > STALE_MS;
  const connection: Connection = stale ? "stale" : "live";
  return connection === vm.connection ? vm : { ...vm, connection };
}

export function applyCommandOutcome(
  vm: PanelViewModel,
  outcome: CommandOutcome,
): PanelViewModel {
  return { ...vm, lastCommand: outcome };
}

/** Manual controls are locked out while the panel runs automatically;
 * only the emergency stop stays live. */
export function controlEnabled(vm: PanelViewModel, control: Control): boolean {
  if (vm.connection === "offline") return control.kind === "estop";
  if (vm.mode === "Auto") return control.kind === "estop";
  return true;
}

/** Wire types of the gateway's HTTP/JSON + SSE surface. */

export type LampColor = "green" | "red" | "yellow";

export interface SignalMeta {
  no: string;
  pin: string | null;
  label: string;
  description: string;
  kind: "indicator" | "pushbutton" | "selector" | "estop";
  color: LampColor | "none";
  direction: "Digital in" | "Digital out";
}

export interface Snapshot {
  phase: string;
  temperature: number;
  setpoint: number;
  sim_time: number;
  inputs: Record<string, boolean>;
  outputs: Record<string, boolean>;
}

export interface PanelState {
  id: string;
  name: string;
  seq: number;
  mode: "Manual" | "Auto";
  online: boolean;
  auto: { on: boolean; setpoint: number | null };
  snapshot: Snapshot;
  signals: SignalMeta[];
  counters: Record<string, number>;
}

export interface PanelSummary {
  id: string;
  name: string;
  mode: string;
  phase: string;
  online: boolean;
}

export interface LoginResponse {
  token: string;
  user: string;
  expiry: number;
}

/** Events carried on GET /panels/{id}/stream. */
export type StreamEvent =
  | { type: "snapshot"; seq: number; state: PanelState }
  | {
      type: "delta";
      seq: number;
      signal: string;
      pin: string;
      level: boolean;
      color: LampColor | null;
      phase: string;
      temperature: number;
      sim_time: number;
    }
  | {
      type: "heartbeat";
      seq: number;
      phase: string;
      temperature: number;
      setpoint: number;
      mode: "Manual" | "Auto";
      sim_time: number;
    }
  | { type: "mode"; seq: number; mode: "Manual" | "Auto" }
  | { type: "offline"; seq: number };

export interface ApiError {
  error: string;
  detail?: string;
}

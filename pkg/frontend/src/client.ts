/**
 * Gateway client: JSON requests plus the server-push subscription.
 *
 * The stream uses fetch with incremental body reads rather than
 * EventSource so the bearer token travels in the Authorization header
 * and the same code runs in the browser and under node tests. A dropped
 * stream reconnects with backoff; every resubscribe starts with a fresh
 * full snapshot, which also heals sequence gaps.
 */

import type {
  ApiError,
  LoginResponse,
  PanelState,
  PanelSummary,
  StreamEvent,
} from "./types.js";

export class GatewayRequestError extends Error {
  constructor(
    public status: number,
    public code: string,
    detail: string,
  ) {
    super(detail || code);
  }
}

export interface StreamHandle {
  close(): void;
}

export interface StreamCallbacks {
  onEvent(event: StreamEvent): void;
  onStreamDown?(reason: string): void;
}

const RECONNECT_MS = 1000;

export class GatewayClient {
  token: string | null = null;

  constructor(public baseUrl: string) {}

  private headers(json: boolean): Record<string, string> {
    const h: Record<string, string> = {};
    if (json) h["Content-Type"] = "application/json";
    if (this.token) h["Authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: this.headers(body !== undefined),
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    const text = await response.text();
    let payload: unknown = null;
    try {
      payload = text ? JSON.parse(text) : null;
    } catch {
      payload = null;
    }
    if (!response.ok) {
      const err = (payload ?? {}) as ApiError;
      throw new GatewayRequestError(
        response.status,
        err.error ?? `http-${response.status}`,
        err.detail ?? "",
      );
    }
    return payload as T;
  }

  async login(username: string, password: string): Promise<LoginResponse> {
    const res = await this.request<LoginResponse>("POST", "/login", {
      username,
      password,
    });
    this.token = res.token;
    return res;
  }

  listPanels(): Promise<PanelSummary[]> {
    return this.request("GET", "/panels");
  }

  getState(panelId: string): Promise<PanelState> {
    return this.request("GET", `/panels/${encodeURIComponent(panelId)}/state`);
  }

  pressButton(panelId: string, signal: string): Promise<{ accepted: boolean; seq: number }> {
    return this.request("POST", `/panels/${encodeURIComponent(panelId)}/button`, {
      signal,
    });
  }

  setSelector(
    panelId: string,
    signal: string,
    position: boolean,
  ): Promise<{ accepted: boolean; seq: number }> {
    return this.request("POST", `/panels/${encodeURIComponent(panelId)}/selector`, {
      signal,
      position,
    });
  }

  setAuto(
    panelId: string,
    on: boolean,
    setpoint?: number,
  ): Promise<{ accepted: boolean; mode: string; seq: number }> {
    const body: Record<string, unknown> = { on };
    if (setpoint !== undefined) body["setpoint"] = setpoint;
    return this.request("POST", `/panels/${encodeURIComponent(panelId)}/auto`, body);
  }

  generalReset(panelId: string): Promise<{ accepted: boolean; seq: number }> {
    return this.request(
      "POST",
      `/panels/${encodeURIComponent(panelId)}/general-reset`,
      {},
    );
  }

  /** Subscribe to a panel's stream; reconnects until closed. */
  subscribe(panelId: string, callbacks: StreamCallbacks): StreamHandle {
    let closed = false;
    let controller = new AbortController();

    const loop = async () => {
      while (!closed) {
        try {
          const response = await fetch(
            `${this.baseUrl}/panels/${encodeURIComponent(panelId)}/stream`,
            { headers: this.headers(false), signal: controller.signal },
          );
          if (!response.ok || !response.body) {
            callbacks.onStreamDown?.(`http-${response.status}`);
            if (response.status === 401 || response.status === 404) return;
          } else {
            for await (const event of sseEvents(response.body)) {
              if (closed) return;
              callbacks.onEvent(event);
            }
            callbacks.onStreamDown?.("stream-ended");
          }
        } catch (err) {
          if (closed) return;
          callbacks.onStreamDown?.(String(err));
        }
        if (closed) return;
        await sleep(RECONNECT_MS);
        controller = new AbortController();
      }
    };
    void loop();
    return {
      close() {
        closed = true;
        controller.abort();
      },
    };
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

/** Incremental server-sent-events parser over a byte stream. */
export async function* sseEvents(
  body: ReadableStream<Uint8Array>,
): AsyncGenerator<StreamEvent> {
  const reader = body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  try {
    while (true) {
      const { value, done } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let boundary: number;
      while ((boundary = buffer.indexOf("\n\n")) >= 0) {
        const block = buffer.slice(0, boundary);
        buffer = buffer.slice(boundary + 2);
        const event = parseSseBlock(block);
        if (event) yield event;
      }
    }
  } finally {
    reader.releaseLock();
  }
}

export function parseSseBlock(block: string): StreamEvent | null {
  let data = "";
  for (const line of block.split("\n")) {
    if (line.startsWith(":")) continue; // keepalive comment
    if (line.startsWith("data:")) data += line.slice(5).trim();
  }
  if (!data) return null;
  try {
    return JSON.parse(data) as StreamEvent;
  } catch {
    return null;
  }
}

/**
 * Browser bootstrap: wires the gateway client, the pure view model and
 * the renderers into the document. Commands fire only from user
 * gestures; lamp changes come only from received stream events.
 */

import { GatewayClient, GatewayRequestError, type StreamHandle } from "./client.js";
import {
  apply,
  applyCommandOutcome,
  applyTick,
  initialViewModel,
  STALE_MS,
  type PanelViewModel,
} from "./model.js";
import { renderLogin, renderPanel, renderPanelList } from "./render.js";
import type { PanelSummary } from "./types.js";

const TICK_MS = 250;

type View =
  | { kind: "login"; error: string | null; busy: boolean }
  | { kind: "list"; panels: PanelSummary[]; user: string }
  | { kind: "panel"; vm: PanelViewModel };

class App {
  private client: GatewayClient;
  private view: View = { kind: "login", error: null, busy: false };
  private stream: StreamHandle | null = null;
  private user = "";

  constructor(
    private root: HTMLElement,
    baseUrl: string,
  ) {
    this.client = new GatewayClient(baseUrl);
    const saved = sessionStorage.getItem("grs-token");
    const savedUser = sessionStorage.getItem("grs-user");
    if (saved && savedUser) {
      this.client.token = saved;
      this.user = savedUser;
      void this.showPanelList();
    }
    this.root.addEventListener("click", (ev) => this.onClick(ev));
    this.root.addEventListener("submit", (ev) => this.onSubmit(ev));
    setInterval(() => this.tick(), TICK_MS);
    this.render();
  }

  private set(view: View): void {
    this.view = view;
    this.render();
  }

  private render(): void {
    switch (this.view.kind) {
      case "login":
        this.root.innerHTML = renderLogin(this.view.error, this.view.busy);
        break;
      case "list":
        this.root.innerHTML = renderPanelList(this.view.panels, this.user);
        break;
      case "panel":
        this.root.innerHTML = renderPanel(this.view.vm);
        break;
    }
  }

  private tick(): void {
    if (this.view.kind !== "panel") return;
    const next = applyTick(this.view.vm, Date.now());
    if (next !== this.view.vm) this.set({ kind: "panel", vm: next });
  }

  private onStreamEvent(eventVm: PanelViewModel): void {
    if (this.view.kind !== "panel" || this.view.vm.panelId !== eventVm.panelId) return;
    this.set({ kind: "panel", vm: eventVm });
  }

  private async showPanelList(): Promise<void> {
    try {
      const panels = await this.client.listPanels();
      this.closeStream();
      this.set({ kind: "list", panels, user: this.user });
    } catch (err) {
      this.handleAuthFailure(err);
    }
  }

  private openPanel(panelId: string): void {
    this.closeStream();
    let vm = initialViewModel(panelId);
    this.set({ kind: "panel", vm });
    this.stream = this.client.subscribe(panelId, {
      onEvent: (event) => {
        if (this.view.kind !== "panel") return;
        vm = apply(this.view.vm, event, Date.now());
        if (vm.gapDetected) {
          // A missed event means the lamp image may be wrong: resubscribe
          // (a fresh subscription starts with a full snapshot).
          this.reopenPanel(panelId);
          return;
        }
        this.onStreamEvent(vm);
      },
      onStreamDown: () => this.tick(),
    });
  }

  private reopenPanel(panelId: string): void {
    this.closeStream();
    this.openPanel(panelId);
  }

  private closeStream(): void {
    this.stream?.close();
    this.stream = null;
  }

  private handleAuthFailure(err: unknown): void {
    if (err instanceof GatewayRequestError && err.status === 401) {
      sessionStorage.removeItem("grs-token");
      this.client.token = null;
      this.closeStream();
      this.set({ kind: "login", error: "session expired — sign in again", busy: false });
      return;
    }
    this.reportOutcome("request", false, String(err));
  }

  private reportOutcome(signal: string, accepted: boolean, detail: string): void {
    if (this.view.kind !== "panel") return;
    this.set({
      kind: "panel",
      vm: applyCommandOutcome(this.view.vm, { signal, accepted, detail }),
    });
  }

  /** Run a gateway command, rendering its accepted/rejected outcome. */
  private async command(signal: string, fn: () => Promise<unknown>): Promise<void> {
    try {
      await fn();
      this.reportOutcome(signal, true, "");
    } catch (err) {
      if (err instanceof GatewayRequestError) {
        if (err.status === 401) return this.handleAuthFailure(err);
        this.reportOutcome(signal, false, err.code);
      } else {
        this.reportOutcome(signal, false, String(err));
      }
    }
  }

  private onClick(ev: Event): void {
    const target = (ev.target as HTMLElement).closest<HTMLElement>("[data-action]");
    if (!target) return;
    ev.preventDefault();
    if (target.hasAttribute("disabled")) return;
    const action = target.dataset["action"];
    const panelId = this.view.kind === "panel" ? this.view.vm.panelId : "";
    switch (action) {
      case "open-panel":
        this.openPanel(target.dataset["panel"] ?? "");
        break;
      case "back":
        void this.showPanelList();
        break;
      case "press": {
        const signal = target.dataset["signal"] ?? "";
        void this.command(signal, () => this.client.pressButton(panelId, signal));
        break;
      }
      case "toggle-selector": {
        const signal = target.dataset["signal"] ?? "";
        const level = target.dataset["level"] === "1";
        void this.command(signal, () =>
          this.client.setSelector(panelId, signal, !level),
        );
        break;
      }
      case "toggle-auto": {
        const on = target.dataset["on"] !== "1";
        const input = this.root.querySelector<HTMLInputElement>(
          '[data-role="auto-setpoint"]',
        );
        const setpoint = input ? Number(input.value) : undefined;
        void this.command("auto mode", () =>
          this.client.setAuto(panelId, on, on ? setpoint : undefined),
        );
        break;
      }
      case "general-reset":
        void this.command("general reset", () => this.client.generalReset(panelId));
        break;
    }
  }

  private onSubmit(ev: Event): void {
    const form = ev.target as HTMLFormElement;
    if (form.dataset["form"] !== "login") return;
    ev.preventDefault();
    const data = new FormData(form);
    const username = String(data.get("username") ?? "");
    const password = String(data.get("password") ?? "");
    this.set({ kind: "login", error: null, busy: true });
    this.client
      .login(username, password)
      .then((res) => {
        this.user = res.user;
        sessionStorage.setItem("grs-token", res.token);
        sessionStorage.setItem("grs-user", res.user);
        return this.showPanelList();
      })
      .catch((err) => {
        const message =
          err instanceof GatewayRequestError
            ? err.status === 423
              ? "account locked out after repeated failures"
              : "bad username or password"
            : String(err);
        this.set({ kind: "login", error: message, busy: false });
      });
  }
}

declare global {
  interface Window {
    GRS_GATEWAY_URL?: string;
  }
}

export function start(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const base = window.GRS_GATEWAY_URL ?? window.location.origin;
  new App(root, base);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  start();
}

export { STALE_MS };

/**
 * HTML renderers. Pure string builders so the panel markup is testable
 * without a browser; the bootstrap swaps the result into the document.
 *
 * The panel layout mirrors the physical cabinet: the annunciator lamp
 * grid on top, then the button row, selector row, and the supervisor-only
 * additions (auto mode, general reset) in their own group.
 */

import type { Control, PanelViewModel } from "./model.js";
import { controlEnabled } from "./model.js";
import type { PanelSummary } from "./types.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderLogin(error: string | null, busy: boolean): string {
  return `
<section class="login">
  <h1>GRS remote panel access</h1>
  <form data-form="login">
    <label>username <input name="username" autocomplete="username" required></label>
    <label>password <input name="password" type="password" autocomplete="current-password" required></label>
    <button type="submit" ${busy ? "disabled" : ""}>sign in</button>
    ${error ? `<p class="error" data-role="login-error">${esc(error)}</p>` : ""}
  </form>
</section>`;
}

export function renderPanelList(panels: PanelSummary[], user: string): string {
  const rows = panels
    .map(
      (p) => `
    <li>
      <a href="#" data-action="open-panel" data-panel="${esc(p.id)}">${esc(p.name)}</a>
      <span class="meta">${esc(p.phase)} · ${esc(p.mode)}${p.online ? "" : " · OFFLINE"}</span>
    </li>`,
    )
    .join("");
  return `
<section class="panel-list">
  <h1>Remote panels</h1>
  <p class="meta">signed in as ${esc(user)}</p>
  <ul>${rows}</ul>
</section>`;
}

function renderLampGrid(vm: PanelViewModel): string {
  const cells = vm.lamps
    .map(
      (lamp) => `
    <div class="cell">
      <span class="lamp ${lamp.color}${lamp.lit ? " lit" : ""}"
            data-lamp="${esc(lamp.description)}" title="${esc(lamp.pin)}"></span>
      <span class="tag">${esc(lamp.description)}</span>
    </div>`,
    )
    .join("");
  return `<div class="lamps">${cells}</div>`;
}

function renderControl(vm: PanelViewModel, control: Control): string {
  const enabled = controlEnabled(vm, control);
  const disabled = enabled ? "" : " disabled";
  const name = esc(control.description);
  if (control.kind === "pushbutton") {
    return `<button class="push" data-action="press" data-signal="${name}"${disabled}>${name}</button>`;
  }
  if (control.kind === "estop") {
    return `<button class="estop${control.level ? " engaged" : ""}"
      data-action="press" data-signal="${name}">${name}${control.level ? " (ENGAGED)" : ""}</button>`;
  }
  const pos = control.level ? "on" : "off";
  return `<button class="selector pos-${pos}" data-action="toggle-selector"
    data-signal="${name}" data-level="${control.level ? "1" : "0"}"${disabled}>${name}: ${pos.toUpperCase()}</button>`;
}

function renderConnection(vm: PanelViewModel): string {
  const label = {
    connecting: "connecting…",
    live: "live",
    stale: "no data — stream stale",
    offline: "panel offline",
  }[vm.connection];
  return `<span class="conn ${vm.connection}" data-role="connection">${label}</span>`;
}

export function renderPanel(vm: PanelViewModel): string {
  const buttons = vm.controls.filter((c) => c.kind === "pushbutton");
  const selectors = vm.controls.filter((c) => c.kind === "selector");
  const estop = vm.controls.find((c) => c.kind === "estop");
  const temperature = vm.temperature === null ? "--" : vm.temperature.toFixed(1);
  const setpoint = vm.setpoint === null ? "--" : vm.setpoint.toFixed(1);
  const autoDisabled = vm.connection === "offline" ? " disabled" : "";
  const outcome = vm.lastCommand
    ? `<p class="outcome ${vm.lastCommand.accepted ? "ok" : "rejected"}" data-role="outcome">
         ${esc(vm.lastCommand.signal)}: ${vm.lastCommand.accepted ? "accepted" : "rejected"}
         ${vm.lastCommand.detail ? "— " + esc(vm.lastCommand.detail) : ""}</p>`
    : "";
  return `
<section class="panel" data-panel="${esc(vm.panelId)}">
  <header>
    <a href="#" data-action="back">← panels</a>
    <h1>${esc(vm.panelName)}</h1>
    ${renderConnection(vm)}
    <span class="badge mode-${vm.mode.toLowerCase()}" data-role="mode">${vm.mode}</span>
  </header>

  <div class="readouts">
    <span data-role="phase">${esc(vm.phase)}</span>
    <span data-role="temperature">${temperature} °C</span>
    <span data-role="setpoint">set ${setpoint} °C</span>
  </div>

  ${renderLampGrid(vm)}

  <div class="buttons">
    ${buttons.map((c) => renderControl(vm, c)).join("\n    ")}
  </div>
  <div class="selectors">
    ${selectors.map((c) => renderControl(vm, c)).join("\n    ")}
    ${estop ? renderControl(vm, estop) : ""}
  </div>

  <div class="supervisor">
    <label>auto setpoint
      <input type="number" min="0" max="100" step="1" value="${vm.autoSetpoint ?? 60}"
             data-role="auto-setpoint"${vm.mode === "Auto" ? " disabled" : ""}>
    </label>
    <button data-action="toggle-auto" data-on="${vm.mode === "Auto" ? "1" : "0"}"${autoDisabled}>
      ${vm.mode === "Auto" ? "suspend auto operation" : "auto operation system mode"}
    </button>
    <button data-action="general-reset"${vm.mode === "Auto" ? " disabled" : autoDisabled}>general reset</button>
  </div>
  ${outcome}
</section>`;
}

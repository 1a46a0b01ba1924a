// DOM rendering for the view models. Deliberately thin: all decisions about
// what to show were made in views.ts, which is where the tests live.

import type { ChallengeView, ClinicianView, TodayView } from "./views";
import { RING_SEGMENTS } from "./views";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderToday(
  view: TodayView,
  onLog: (slotId: string, kind: "taken" | "skipped") => void,
): HTMLElement {
  const root = el("section", "today");
  const header = el("div", "today-header");
  header.append(
    el("h2", undefined, `Today, ${view.day}`),
    el("span", "streak", `${view.streakDays} day streak`),
    el("span", "points", `${view.pointsTotal} points`),
  );
  root.append(header);

  const list = el("div", "slot-list");
  for (const card of view.cards) {
    const item = el("div", `slot-card tone-${card.tone}`);
    item.dataset.slotId = card.slotId;
    item.append(
      el("span", "med", card.medName),
      el("span", "time", card.timeLabel),
      el("span", `status status-${card.tone}`, card.statusLabel),
    );
    if (card.actionable) {
      const logButton = el("button", "log", "I took it");
      logButton.addEventListener("click", () => onLog(card.slotId, "taken"));
      const skipButton = el("button", "skip", "Not today");
      skipButton.addEventListener("click", () => onLog(card.slotId, "skipped"));
      item.append(logButton, skipButton);
    }
    list.append(item);
  }
  root.append(list);
  return root;
}

export function renderChallenge(view: ChallengeView): HTMLElement {
  const root = el("section", "challenge");
  root.append(el("h2", undefined, "7 Day Challenge"));

  const size = 120;
  const radius = 48;
  const center = size / 2;
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${size} ${size}`);
  svg.setAttribute("class", view.celebrate ? "ring celebrate" : "ring");
  const gapDegrees = 8;
  const span = 360 / RING_SEGMENTS;
  view.segments.forEach((filled, i) => {
    const start = ((i * span - 90 + gapDegrees / 2) * Math.PI) / 180;
    const end = (((i + 1) * span - 90 - gapDegrees / 2) * Math.PI) / 180;
    const path = document.createElementNS("http://www.w3.org/2000/svg", "path");
    const x1 = center + radius * Math.cos(start);
    const y1 = center + radius * Math.sin(start);
    const x2 = center + radius * Math.cos(end);
    const y2 = center + radius * Math.sin(end);
    path.setAttribute("d", `M ${x1} ${y1} A ${radius} ${radius} 0 0 1 ${x2} ${y2}`);
    path.setAttribute(
      "class",
      filled || view.celebrate ? "segment filled" : "segment",
    );
    svg.append(path);
  });
  root.append(svg);
  root.append(
    el(
      "p",
      "challenge-caption",
      `${view.challengesCompleted} challenges · level ${view.level}`,
    ),
  );

  const gallery = el("div", "badge-gallery");
  for (const badge of view.badges) {
    const tile = el("div", badge.earned ? "badge earned" : "badge");
    tile.append(el("span", "badge-milestone", `${badge.milestone}`));
    tile.append(
      el("span", "badge-name", badge.earned ? (badge.badgeId ?? "") : "locked"),
    );
    gallery.append(tile);
  }
  root.append(gallery);
  return root;
}

export function renderClinician(view: ClinicianView): HTMLElement {
  const root = el("section", "clinician");
  root.append(el("h2", undefined, `Trough levels · ${view.patientId}`));

  const width = 260;
  const height = 60;
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "sparkline");
  if (view.sparkline.length > 1) {
    const values = view.sparkline.map((p) => p.value);
    const lo = Math.min(...values);
    const hi = Math.max(...values);
    const spread = hi - lo || 1;
    const step = width / (view.sparkline.length - 1);
    const points = view.sparkline
      .map((p, i) => `${(i * step).toFixed(1)},${(height - ((p.value - lo) / spread) * height).toFixed(1)}`)
      .join(" ");
    const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
    line.setAttribute("points", points);
    svg.append(line);
  }
  root.append(svg);
  root.append(el("p", "cv-label", view.cvLabel));

  const table = el("table", "report");
  for (const row of view.reportRows) {
    const tr = el("tr");
    tr.append(el("td", "label", row.label), el("td", "value", row.value));
    table.append(tr);
  }
  root.append(table);
  return root;
}

export function renderNotice(message: string): HTMLElement {
  return el("p", "notice", message);
}

export function showToast(container: HTMLElement, message: string): void {
  const toast = el("div", "toast", message);
  container.append(toast);
  setTimeout(() => toast.remove(), 4000);
}

// SPA wiring: fetch payloads, build view models, render, reconcile after
// each interaction with the server's response. One in-flight mutation per
// slot card; duplicate taps are swallowed client-side and idempotent
// server-side anyway.

import { AdhereClient, ApiError } from "./api";
import { renderChallenge, renderClinician, renderNotice, renderToday, showToast } from "./render";
import { buildChallengeView, buildClinicianView, buildTodayView, gentleNotice } from "./views";
import type { AwardPayload } from "./types";

const client = new AdhereClient("");
const app = document.getElementById("app")!;
const params = new URLSearchParams(window.location.search);
const patientId = params.get("patient") ?? "p-001";
const clinicianMode = params.get("view") === "clinician";

const inFlight = new Set<string>();

async function refreshPatient(freshAwards: AwardPayload[] = []): Promise<void> {
  try {
    const [today, game] = await Promise.all([client.today(patientId), client.game(patientId)]);
    app.replaceChildren(
      renderToday(buildTodayView(today, game), logDose),
      renderChallenge(buildChallengeView(game, freshAwards)),
    );
    for (const award of freshAwards) {
      if (award.kind === "challenge_completed") {
        showToast(app, `Challenge ${award.detail} complete! Badge earned.`);
      }
    }
  } catch (error) {
    app.replaceChildren(
      renderNotice(error instanceof ApiError ? gentleNotice("schema") : gentleNotice("network")),
    );
  }
}

async function logDose(slotId: string, kind: "taken" | "skipped"): Promise<void> {
  if (inFlight.has(slotId)) return;
  inFlight.add(slotId);
  try {
    const ack = await client.logIntake(patientId, slotId, new Date().toISOString(), kind);
    await refreshPatient(ack.awards);
  } catch (error) {
    if (error instanceof ApiError && error.status === 409) {
      showToast(app, gentleNotice("day-closed"));
    } else {
      showToast(app, gentleNotice("network"));
    }
    await refreshPatient();
  } finally {
    inFlight.delete(slotId);
  }
}

async function refreshClinician(): Promise<void> {
  try {
    const window = params.get("window") ?? undefined;
    const [dashboard, report] = await Promise.all([
      client.dashboard(patientId, window),
      client.cohortReport(window),
    ]);
    app.replaceChildren(renderClinician(buildClinicianView(dashboard, report)));
  } catch {
    app.replaceChildren(renderNotice(gentleNotice("network")));
  }
}

// Browser notifications mirror the reminder plan while the tab is open.
async function scheduleTabReminders(): Promise<void> {
  if (!("Notification" in window) || Notification.permission !== "granted") return;
  const today = await client.today(patientId);
  if (!today.reminders) return;
  const now = Date.now();
  for (const entry of today.reminders.entries) {
    for (const iso of entry.fire_instants) {
      const delay = Date.parse(iso) - now;
      if (delay > 0 && delay < 12 * 3600 * 1000) {
        setTimeout(() => {
          new Notification("A gentle reminder", {
            body: `Time for your ${entry.slot_id} dose when you're ready.`,
          });
        }, delay);
      }
    }
  }
}

if (clinicianMode) {
  void refreshClinician();
} else {
  void refreshPatient();
  void scheduleTabReminders();
}

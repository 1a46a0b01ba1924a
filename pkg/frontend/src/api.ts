// Thin typed client for the adhere HTTP API. No caching, no local rules:
// the server is the single source of truth for every displayed number.

import type {
  CohortReportPayload,
  DashboardPayload,
  GamePayload,
  IntakeAckPayload,
  TodayPayload,
} from "./types";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`${status}: ${detail}`);
  }
}

export class AdhereClient {
  constructor(private baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  today(patientId: string): Promise<TodayPayload> {
    return this.request(`/patients/${encodeURIComponent(patientId)}/today`);
  }

  game(patientId: string): Promise<GamePayload> {
    return this.request(`/patients/${encodeURIComponent(patientId)}/game`);
  }

  dashboard(patientId: string, window?: string): Promise<DashboardPayload> {
    const query = window ? `?window=${encodeURIComponent(window)}` : "";
    return this.request(`/patients/${encodeURIComponent(patientId)}/dashboard${query}`);
  }

  cohortReport(window?: string): Promise<CohortReportPayload> {
    const query = window ? `?window=${encodeURIComponent(window)}` : "";
    return this.request(`/cohort/report${query}`);
  }

  logIntake(
    patientId: string,
    slotId: string,
    ts: string,
    kind: "taken" | "skipped",
  ): Promise<IntakeAckPayload> {
    return this.request(`/patients/${encodeURIComponent(patientId)}/intakes`, {
      method: "POST",
      body: JSON.stringify({ slot_id: slotId, ts, kind }),
    });
  }
}

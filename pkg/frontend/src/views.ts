// Pure view-model builders. Every displayed number is copied verbatim from
// one API field; the only arithmetic allowed here is presentation (ring
// segment fill, date formatting). No points, streak, challenge, or level
// math is ever derived client-side.

import type {
  AwardPayload,
  CohortReportPayload,
  DashboardPayload,
  GamePayload,
  SlotPayload,
  TodayPayload,
} from "./types";

export const RING_SEGMENTS = 7;
export const GALLERY_MILESTONES = [1, 3, 5, 10, 15] as const;

export const EM_DASH = "—";

// Missed doses render as neutral gaps: no alarm styling exists by design.
export type ToneClass = "due" | "done" | "gap";

export interface SlotCard {
  slotId: string;
  medName: string;
  timeLabel: string;
  status: SlotPayload["status"];
  statusLabel: string;
  tone: ToneClass;
  actionable: boolean;
}

export interface TodayView {
  day: string;
  cards: SlotCard[];
  streakDays: number;
  pointsTotal: number;
}

export interface BadgeTile {
  milestone: number;
  earned: boolean;
  badgeId: string | null;
  earnedOn: string | null;
}

export interface ChallengeView {
  filledSegments: number; // always 0..6
  segments: boolean[]; // length 7
  badges: BadgeTile[]; // length 5, fixed gallery
  challengesCompleted: number;
  level: number;
  celebrate: boolean; // transient full-ring moment, server-award driven
}

export interface SparklinePoint {
  date: string;
  value: number;
}

export interface ClinicianView {
  patientId: string;
  sparkline: SparklinePoint[];
  cvLabel: string;
  reportRows: { label: string; value: string }[];
}

const STATUS_LABELS: Record<SlotPayload["status"], string> = {
  pending: "due",
  taken_on_time: "taken",
  taken_late: "taken late",
  skipped: "skipped",
  missed: "not logged",
};

const STATUS_TONES: Record<SlotPayload["status"], ToneClass> = {
  pending: "due",
  taken_on_time: "done",
  taken_late: "done",
  skipped: "gap",
  missed: "gap",
};

function localTimeLabel(iso: string): string {
  const timePart = iso.split("T")[1] ?? "";
  return timePart.slice(0, 5);
}

export function buildTodayView(today: TodayPayload, game: GamePayload): TodayView {
  const cards = today.slots.map((slot) => ({
    slotId: slot.slot_id,
    medName: slot.med_name,
    timeLabel: localTimeLabel(slot.nominal),
    status: slot.status,
    statusLabel: STATUS_LABELS[slot.status],
    tone: STATUS_TONES[slot.status],
    actionable: slot.status === "pending",
  }));
  return {
    day: today.day,
    cards,
    streakDays: game.current_streak_days,
    pointsTotal: game.total_points,
  };
}

export function buildChallengeView(
  game: GamePayload,
  freshAwards: AwardPayload[] = [],
): ChallengeView {
  const filled = ((game.current_streak_days % RING_SEGMENTS) + RING_SEGMENTS) % RING_SEGMENTS;
  const rewardByMilestone = new Map(game.rewards.map((r) => [r.milestone, r]));
  const badges = GALLERY_MILESTONES.map((milestone) => {
    const reward = rewardByMilestone.get(milestone);
    return {
      milestone,
      earned: game.milestones_reached.includes(milestone),
      badgeId: reward ? reward.badge_id : null,
      earnedOn: reward ? reward.earned_on : null,
    };
  });
  return {
    filledSegments: filled,
    segments: Array.from({ length: RING_SEGMENTS }, (_, i) => i < filled),
    badges,
    challengesCompleted: game.challenges_completed,
    level: game.level,
    celebrate: freshAwards.some((a) => a.kind === "challenge_completed"),
  };
}

function fmt(value: number | null | undefined, digits = 3): string {
  return value === null || value === undefined ? EM_DASH : value.toFixed(digits);
}

export function buildClinicianView(
  dashboard: DashboardPayload,
  report: CohortReportPayload,
): ClinicianView {
  const sparkline = dashboard.labs.map((lab) => ({
    date: lab.draw_date,
    value: lab.value_ng_ml,
  }));
  const cvLabel = dashboard.cv ? `CV ${fmt(dashboard.cv.cv_percent, 1)}%` : EM_DASH;

  const rows: { label: string; value: string }[] = [];
  for (const arm of report.arm_summaries) {
    rows.push({
      label: `${arm.arm} (n=${arm.n_patients}, CV n=${arm.n_with_cv})`,
      value: `mean CV ${fmt(arm.mean_cv, 1)}, sd ${fmt(arm.sd_cv, 1)}`,
    });
  }
  const c = report.cv_comparison;
  rows.push({
    label: `CV comparison (${c ? c.method : "test"})`,
    value: c ? `t=${fmt(c.t_statistic)}, df=${fmt(c.df, 1)}, p=${fmt(c.p_value, 4)}` : EM_DASH,
  });
  const f = report.app_use_fit;
  rows.push({
    label: "app use ~ CV odds ratio",
    value: f
      ? `${fmt(f.odds_ratio)} (95% CI ${fmt(f.ci95[0])}–${fmt(f.ci95[1])})`
      : EM_DASH,
  });
  rows.push({
    label: "missed-rate vs level (spearman)",
    value: report.spearman_rho === null ? EM_DASH : fmt(report.spearman_rho),
  });
  rows.push({
    label: `missed-rate ratio vs ${report.comparator_arm ?? "comparator"}`,
    value:
      report.missed_rate_ratio_vs_comparator === null
        ? EM_DASH
        : fmt(report.missed_rate_ratio_vs_comparator),
  });
  rows.push({
    label: "missed-rate ratio vs other app users",
    value:
      report.missed_rate_ratio_vs_other_app_users === null
        ? EM_DASH
        : fmt(report.missed_rate_ratio_vs_other_app_users),
  });
  return { patientId: dashboard.patient_id, sparkline, cvLabel, reportRows: rows };
}

// Gentle copy for failures: the tone rules ban alarming error styling.
export function gentleNotice(kind: "network" | "day-closed" | "schema"): string {
  switch (kind) {
    case "network":
      return "We couldn't reach the server just now. Your tap wasn't lost; try again in a moment.";
    case "day-closed":
      return "That day is already wrapped up. Today's doses are ready below.";
    case "schema":
      return "This view couldn't load its data. Please refresh.";
  }
}

// Payload shapes served by the adhere HTTP API. The UI renders these
// verbatim: every number on screen traces to exactly one field here.

export interface SlotPayload {
  slot_id: string;
  med_name: string;
  is_immunosuppressant: boolean;
  day: string;
  nominal: string;
  window_start: string;
  window_end: string;
  status: "pending" | "taken_on_time" | "taken_late" | "skipped" | "missed";
}

export interface ReminderEntryPayload {
  slot_id: string;
  fire_instants: string[];
  tone: string;
}

export interface TodayPayload {
  patient_id: string;
  day: string;
  now: string;
  slots: SlotPayload[];
  reminders: { day: string; entries: ReminderEntryPayload[] } | null;
  streak_days: number;
  points: number;
}

export interface RewardPayload {
  milestone: number;
  badge_id: string;
  earned_on: string;
}

export interface GamePayload {
  patient_id: string;
  total_points: number;
  challenges_completed: number;
  current_streak_days: number;
  milestones_reached: number[];
  rewards: RewardPayload[];
  last_applied_day: string | null;
  level: number;
}

export interface AwardPayload {
  kind: "daily_point" | "challenge_completed" | "milestone_reached";
  day: string;
  detail: number;
}

export interface IntakeAckPayload {
  ack: boolean;
  duplicate: boolean;
  seq: number | null;
  awards: AwardPayload[];
}

export interface LabPointPayload {
  patient_id: string;
  draw_date: string;
  analyte: string;
  value_ng_ml: number;
}

export interface CvPayload {
  n: number;
  mean: number;
  sd: number;
  cv_percent: number;
}

export interface DashboardPayload {
  patient_id: string;
  window: { start: string; end: string };
  today: TodayPayload;
  game: Omit<GamePayload, "level">;
  summary: {
    patient_id: string;
    period_start: string;
    period_end: string;
    total_scheduled: number;
    total_missed: number;
    missed_dose_rate: number;
    current_streak_days: number;
    longest_streak_days: number;
  };
  cv: CvPayload | null;
  cv_unavailable: string | null;
  labs: LabPointPayload[];
}

export interface ArmSummaryPayload {
  arm: string;
  n_patients: number;
  n_with_cv: number;
  mean_cv: number | null;
  sd_cv: number | null;
}

export interface CohortReportPayload {
  window: { start: string; end: string };
  app_arm: string;
  comparator_arm: string | null;
  arm_summaries: ArmSummaryPayload[];
  cv_comparison: {
    label_a: string;
    label_b: string;
    n_a: number;
    n_b: number;
    mean_a: number;
    mean_b: number;
    sd_a: number;
    sd_b: number;
    t_statistic: number;
    df: number;
    p_value: number;
    method: string;
  } | null;
  app_use_fit: {
    intercept: number;
    slope: number;
    se_slope: number;
    odds_ratio: number;
    ci95: [number, number];
    converged: boolean;
    iterations: number;
  } | null;
  spearman_rho: number | null;
  pearson_r: number | null;
  correlation_n: number;
  missed_rate_ratio_vs_comparator: number | null;
  missed_rate_ratio_vs_other_app_users: number | null;
  unavailable: Record<string, string>;
  methods: Record<string, string>;
}

/** Shapes exchanged with the advisory service, mirroring its JSON payloads.
 *
 * Fields the service omits when empty (exclude-none serialization) are
 * optional here. All timestamps are naive ISO-8601 strings and are passed
 * through verbatim; the console never reformats a server-provided string.
 */

export type Scheme = "mini" | "ultra_mini" | "natural";

export type Block =
  | "preparation"
  | "stimulation"
  | "trigger"
  | "post_trigger"
  | "lps"
  | "done"
  | "cancelled";

export type DecisionKind =
  | "continue_ocp"
  | "start_stimulation"
  | "continue_stimulation"
  | "adjust_medication"
  | "change_scheme"
  | "trigger"
  | "follow_plan"
  | "oocyte_retrieval"
  | "start_lps"
  | "cycle_complete"
  | "md_talk"
  | "cancel_cycle";

export type AlertKind =
  | "poor_response"
  | "ovulation_risk"
  | "no_trigger"
  | "cycle_cancelled";

export type DetectionFlag = "below_limit" | "above_limit";

export interface HormonePanelBody {
  fsh?: number;
  lh?: number;
  e2?: number;
  p4?: number;
  drawn_at?: string;
  flags?: Record<string, DetectionFlag>;
}

export interface FollicleExamBody {
  bins: Record<string, number>;
  measured_at?: string;
}

export interface VisitBody {
  visit_at: string;
  hormones?: HormonePanelBody;
  exam?: FollicleExamBody;
}

export interface TriggerMed {
  agent: string;
  dose: number;
}

export interface Prescription {
  gonadotropin_iu: number;
  clomid_mg: number;
  letrozole_mg: number;
  agent?: string;
  trigger_meds?: TriggerMed[];
}

export interface TriggerPlan {
  triggered_at: string;
  duration_hours: number;
  medications: TriggerMed[];
  scheduled_retrieval: string;
}

export interface Decision {
  kind: DecisionKind;
  scheme?: Scheme;
  trigger_plan?: TriggerPlan;
}

export interface RuleCitation {
  rule_id: string;
  observed: string;
  threshold: string;
  passed: boolean;
  detail?: string;
}

export interface Alert {
  kind: AlertKind;
  reason: string;
  rule_id: string;
}

export interface AdviceOut {
  decision: Decision;
  explanation: RuleCitation[];
  alerts: Alert[];
  prescription?: Prescription;
  next_visit_in_days?: number;
  config_hash: string;
}

export interface CycleStateOut {
  block: Block;
  scheme?: Scheme;
  stim_visit_index: number;
  slow_growth_streak: number;
  md_talk_count: number;
  ocp_streak: number;
  lps_round: boolean;
  retrieval_done: boolean;
  last_visit_at?: string;
}

export interface PatientOut {
  patient_id: string;
  age_years: number;
  medication_contraindicated?: boolean;
}

export interface PatientDetail {
  patient: PatientOut;
  cycles: number[];
}

export interface AdviceResponse {
  patient: PatientOut;
  cycle_number: number;
  visit: VisitBody;
  advice: AdviceOut;
  state: CycleStateOut;
  config_hash: string;
  dry_run: boolean;
  persisted: boolean;
}

export interface TreatmentOut {
  decision: Decision;
  prescription?: Prescription;
  explanation: RuleCitation[];
  alerts: Alert[];
  decided_at: string;
  source: string;
  config_hash: string;
}

export interface RecordedVisitOut {
  visit: VisitBody;
  treatment?: TreatmentOut;
}

export interface CycleOut {
  patient: PatientOut;
  cycle_number: number;
  visits: RecordedVisitOut[];
}

export interface ErrorDetail {
  where: string;
  problem: string;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  details?: ErrorDetail[] | null;
}

/** Measurement plausibility bounds shared with the intake forms. */
export const MIN_FOLLICLE_MM = 2;
export const MAX_FOLLICLE_MM = 30;

/** Add whole days to a naive ISO timestamp and return the date part.
 *
 * Works on the string itself so the host timezone can never shift the
 * calendar date.
 */
export function addDaysIso(isoTimestamp: string, days: number): string {
  const datePart = isoTimestamp.slice(0, 10);
  const m = /^(\d{4})-(\d{2})-(\d{2})$/.exec(datePart);
  if (m === null) {
    throw new Error(`not an ISO timestamp: ${isoTimestamp}`);
  }
  const utc = Date.UTC(Number(m[1]), Number(m[2]) - 1, Number(m[3]) + days);
  return new Date(utc).toISOString().slice(0, 10);
}

/** Numeric bins sorted by follicle size ascending. */
export function sortedBins(bins: Record<string, number>): Array<[number, number]> {
  return Object.entries(bins)
    .map(([size, count]): [number, number] => [Number(size), count])
    .sort((a, b) => a[0] - b[0]);
}

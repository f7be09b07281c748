/** Pure DOM builders for the console views.
 *
 * Every server-provided string lands in a dedicated element whose
 * textContent is the field verbatim; labels and punctuation live in
 * sibling elements so rendered values stay byte-identical to the payload.
 */

import {
  AdviceResponse,
  Alert,
  Block,
  CycleOut,
  DecisionKind,
  Prescription,
  RecordedVisitOut,
  RuleCitation,
  TriggerMed,
  TriggerPlan,
  addDaysIso,
  sortedBins,
} from "./model.js";

/** Anything iterable as (field key, message) pairs, e.g. a Map. */
export type FieldErrorsLike = Iterable<[string, string]>;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className !== undefined) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function labeled(label: string, className: string, value: string): HTMLElement {
  const wrap = el("div", "field");
  wrap.appendChild(el("span", "label", label));
  wrap.appendChild(el("span", className, value));
  return wrap;
}

export function blockBadge(block: Block): HTMLElement {
  return el("span", `badge block-badge block-${block}`, block);
}

export function patientHeader(patient: {
  patient_id: string;
  age_years: number;
  medication_contraindicated?: boolean;
}): HTMLElement {
  const header = el("div", "patient-header");
  header.appendChild(labeled("Patient", "patient-id", patient.patient_id));
  header.appendChild(labeled("Age", "patient-age", String(patient.age_years)));
  if (patient.medication_contraindicated === true) {
    header.appendChild(el("span", "badge contraindicated", "stimulation meds contraindicated"));
  }
  return header;
}

function medItem(med: TriggerMed): HTMLElement {
  const li = el("li", "med");
  li.appendChild(el("span", "med-agent", med.agent));
  li.appendChild(el("span", "med-dose", String(med.dose)));
  return li;
}

function alertBanner(alert: Alert): HTMLElement {
  const banner = el("div", `banner blocking alert-${alert.kind}`);
  banner.appendChild(el("span", "alert-kind", alert.kind));
  banner.appendChild(el("span", "alert-reason", alert.reason));
  banner.appendChild(el("span", "alert-rule", alert.rule_id));
  return banner;
}

function citationItem(citation: RuleCitation): HTMLElement {
  const li = el("li", `citation ${citation.passed ? "pass" : "fail"}`);
  li.dataset["rule"] = citation.rule_id;
  li.appendChild(el("span", "cite-mark", citation.passed ? "pass" : "FAIL"));
  li.appendChild(el("span", "cite-rule", citation.rule_id));
  li.appendChild(el("span", "cite-observed", citation.observed));
  li.appendChild(el("span", "cite-sep", "vs"));
  li.appendChild(el("span", "cite-threshold", citation.threshold));
  if (citation.detail !== undefined) {
    li.appendChild(el("span", "cite-detail", citation.detail));
  }
  return li;
}

function triggerPlanCard(plan: TriggerPlan): HTMLElement {
  const card = el("div", "trigger-plan");
  card.appendChild(labeled("Trigger at", "plan-triggered-at", plan.triggered_at));
  card.appendChild(labeled("Hours to retrieval", "plan-duration", String(plan.duration_hours)));
  card.appendChild(labeled("Retrieval scheduled", "plan-retrieval", plan.scheduled_retrieval));
  const meds = el("ul", "plan-meds");
  for (const med of plan.medications) {
    meds.appendChild(medItem(med));
  }
  if (plan.medications.length === 0) {
    card.appendChild(el("div", "plan-no-meds", "no trigger medication"));
  }
  card.appendChild(meds);
  return card;
}

function prescriptionCard(rx: Prescription): HTMLElement {
  const card = el("div", "prescription");
  const gonadotropin = labeled("Gonadotropin IU", "rx-gonadotropin", String(rx.gonadotropin_iu));
  if (rx.agent !== undefined) {
    gonadotropin.appendChild(el("span", "rx-agent", rx.agent));
  }
  card.appendChild(gonadotropin);
  card.appendChild(labeled("Clomid mg", "rx-clomid", String(rx.clomid_mg)));
  card.appendChild(labeled("Letrozole mg", "rx-letrozole", String(rx.letrozole_mg)));
  if (rx.trigger_meds !== undefined && rx.trigger_meds.length > 0) {
    const meds = el("ul", "rx-trigger-meds");
    for (const med of rx.trigger_meds) {
      meds.appendChild(medItem(med));
    }
    card.appendChild(meds);
  }
  return card;
}

/** Full advice view for one response: decision, banners, plan, citations. */
export function adviceCard(response: AdviceResponse): HTMLElement {
  const advice = response.advice;
  const card = el("section", "advice-card");

  const head = el("header", "advice-head");
  head.appendChild(blockBadge(response.state.block));
  head.appendChild(el("h2", "decision", advice.decision.kind));
  if (advice.decision.scheme !== undefined) {
    head.appendChild(el("span", "scheme", advice.decision.scheme));
  }
  if (response.dry_run) {
    head.appendChild(el("span", "badge dry-run", "preview"));
  }
  card.appendChild(head);

  const banners = el("div", "banners");
  if (advice.decision.kind === "md_talk") {
    const banner = el("div", "banner blocking md-talk");
    banner.appendChild(el("span", "banner-text", "clinician consultation required"));
    banners.appendChild(banner);
  }
  for (const alert of advice.alerts) {
    banners.appendChild(alertBanner(alert));
  }
  card.appendChild(banners);

  if (advice.decision.trigger_plan !== undefined) {
    card.appendChild(triggerPlanCard(advice.decision.trigger_plan));
  }
  if (advice.prescription !== undefined) {
    card.appendChild(prescriptionCard(advice.prescription));
  }

  if (advice.next_visit_in_days !== undefined) {
    const next = el("div", "next-visit");
    next.appendChild(el("span", "label", "Next visit"));
    next.appendChild(el("span", "next-days", String(advice.next_visit_in_days)));
    next.appendChild(
      el("span", "next-date", addDaysIso(response.visit.visit_at, advice.next_visit_in_days)),
    );
    card.appendChild(next);
  }

  const explanation = el("ul", "explanation");
  for (const citation of advice.explanation) {
    explanation.appendChild(citationItem(citation));
  }
  card.appendChild(explanation);

  const footer = el("footer", "advice-footer");
  footer.appendChild(labeled("Rules config", "config-hash", advice.config_hash));
  card.appendChild(footer);
  return card;
}

/** Blocks reconstructed for display by walking recorded decisions.
 *
 * Purely presentational: each visit is badged with the block it was
 * evaluated in, inferred from the decision sequence.
 */
function blockWalk(visits: RecordedVisitOut[]): Block[] {
  let current: Block = "preparation";
  const out: Block[] = [];
  for (const item of visits) {
    out.push(current);
    const kind: DecisionKind | undefined = item.treatment?.decision.kind;
    if (kind === "start_stimulation" || kind === "start_lps") {
      current = "stimulation";
    } else if (kind === "trigger") {
      current = "post_trigger";
    } else if (kind === "cycle_complete") {
      current = "done";
    } else if (kind === "cancel_cycle") {
      current = "cancelled";
    }
  }
  return out;
}

const SPARK_WIDTH = 360;
const SPARK_HEIGHT = 72;
const SVG_NS = "http://www.w3.org/2000/svg";

function polyline(points: Array<[number, number]>, series: string): SVGPolylineElement {
  const line = document.createElementNS(SVG_NS, "polyline");
  line.setAttribute("class", `spark-${series}`);
  line.setAttribute("data-series", series);
  line.setAttribute("fill", "none");
  line.setAttribute(
    "points",
    points.map(([x, y]) => `${x.toFixed(1)},${y.toFixed(1)}`).join(" "),
  );
  return line;
}

/** Inline SVG sparkline of E2 and LH across the cycle's visits. */
export function hormoneSparkline(visits: RecordedVisitOut[]): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("class", "sparkline");
  svg.setAttribute("viewBox", `0 0 ${SPARK_WIDTH} ${SPARK_HEIGHT}`);
  svg.setAttribute("role", "img");

  const series: Array<{ name: "e2" | "lh"; values: Array<[number, number]> }> = [
    { name: "e2", values: [] },
    { name: "lh", values: [] },
  ];
  visits.forEach((item, index) => {
    const hormones = item.visit.hormones;
    if (hormones === undefined) {
      return;
    }
    for (const s of series) {
      const value = hormones[s.name];
      if (value !== undefined) {
        s.values.push([index, value]);
      }
    }
  });

  const lastIndex = Math.max(visits.length - 1, 1);
  for (const s of series) {
    if (s.values.length === 0) {
      continue;
    }
    const peak = Math.max(...s.values.map(([, v]) => v), 1);
    const points = s.values.map(([i, v]): [number, number] => [
      (i / lastIndex) * (SPARK_WIDTH - 8) + 4,
      SPARK_HEIGHT - 6 - (v / peak) * (SPARK_HEIGHT - 12),
    ]);
    svg.appendChild(polyline(points, s.name));
  }
  return svg;
}

/** Bar chart of a follicle histogram; bar heights scale to the max count. */
export function histogramChart(bins: Record<string, number>): HTMLElement {
  const chart = el("div", "histogram");
  const entries = sortedBins(bins);
  const peak = Math.max(...entries.map(([, count]) => count), 1);
  for (const [size, count] of entries) {
    const bar = el("div", "histo-bar");
    bar.dataset["size"] = String(size);
    const fill = el("div", "histo-fill");
    fill.style.height = `${Math.round((count / peak) * 100)}%`;
    bar.appendChild(fill);
    bar.appendChild(el("span", "histo-count", String(count)));
    bar.appendChild(el("span", "histo-size", String(size)));
    chart.appendChild(bar);
  }
  return chart;
}

/** Timeline of recorded visits with block badges, decisions, and charts. */
export function cycleTimeline(cycle: CycleOut): HTMLElement {
  const section = el("section", "timeline");
  const title = el("div", "timeline-title");
  title.appendChild(el("span", "label", "Cycle"));
  title.appendChild(el("span", "cycle-number", String(cycle.cycle_number)));
  section.appendChild(title);

  const blocks = blockWalk(cycle.visits);
  const table = el("table", "visit-table");
  const body = document.createElement("tbody");
  let lastExamBins: Record<string, number> | undefined;
  cycle.visits.forEach((item, index) => {
    const row = document.createElement("tr");
    row.className = "visit-row";
    const when = document.createElement("td");
    when.appendChild(el("span", "visit-at", item.visit.visit_at));
    row.appendChild(when);

    const badge = document.createElement("td");
    badge.appendChild(blockBadge(blocks[index] as Block));
    row.appendChild(badge);

    const decision = document.createElement("td");
    if (item.treatment !== undefined) {
      decision.appendChild(el("span", "visit-decision", item.treatment.decision.kind));
      for (const alert of item.treatment.alerts) {
        decision.appendChild(el("span", `visit-alert alert-${alert.kind}`, alert.kind));
      }
    }
    row.appendChild(decision);

    const measurements = document.createElement("td");
    const hormones = item.visit.hormones;
    if (hormones?.e2 !== undefined) {
      measurements.appendChild(labeled("E2", "visit-e2", String(hormones.e2)));
    }
    if (hormones?.lh !== undefined) {
      measurements.appendChild(labeled("LH", "visit-lh", String(hormones.lh)));
    }
    row.appendChild(measurements);
    body.appendChild(row);

    if (item.visit.exam !== undefined) {
      lastExamBins = item.visit.exam.bins;
    }
  });
  table.appendChild(body);
  section.appendChild(table);

  section.appendChild(hormoneSparkline(cycle.visits));
  if (lastExamBins !== undefined) {
    section.appendChild(histogramChart(lastExamBins));
  }
  return section;
}

/** Attach inline error notes to the form's fields; returns unmatched keys. */
export function renderFieldErrors(formRoot: HTMLElement, errors: FieldErrorsLike): string[] {
  const orphans: string[] = [];
  for (const [key, message] of errors) {
    let input: HTMLElement | null;
    const follicle = /^follicle\.(\d+)\.(size|count)$/.exec(key);
    if (follicle !== null) {
      const rows = formRoot.querySelectorAll<HTMLElement>(".follicle-row");
      const row = rows[Number(follicle[1])];
      input = row?.querySelector<HTMLElement>(`input[name="${follicle[2]}"]`) ?? null;
    } else {
      input = formRoot.querySelector<HTMLElement>(`input[name="${key}"]`);
    }
    if (input === null || input === undefined) {
      orphans.push(`${key}: ${message}`);
      continue;
    }
    input.classList.add("invalid");
    const note = el("span", "field-error", message);
    note.dataset["for"] = key;
    input.insertAdjacentElement("afterend", note);
  }
  return orphans;
}

/** Remove inline error notes from a previous validation pass. */
export function clearFieldErrors(formRoot: HTMLElement): void {
  for (const note of Array.from(formRoot.querySelectorAll(".field-error"))) {
    note.remove();
  }
  for (const input of Array.from(formRoot.querySelectorAll("input.invalid"))) {
    input.classList.remove("invalid");
  }
}

export function noticeBanner(kind: string, message: string): HTMLElement {
  const banner = el("div", `banner notice notice-${kind}`);
  banner.appendChild(el("span", "notice-code", kind));
  banner.appendChild(el("span", "notice-message", message));
  return banner;
}

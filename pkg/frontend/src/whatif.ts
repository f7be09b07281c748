/** Pure comparison of a base advice against an edited dry-run advice.
 *
 * The diff is keyed on citation rule ids: a rule counts as changed when it
 * appears on only one side or when any of its fields differ. The console
 * highlights exactly the changed rules; identical advice yields none.
 */

import { AdviceOut, Alert, Prescription, RuleCitation } from "./model.js";

export interface WhatIfDiff {
  decisionChanged: boolean;
  prescriptionChanged: boolean;
  nextVisitChanged: boolean;
  changedRules: Set<string>;
  changedAlerts: Set<string>;
  identical: boolean;
}

function citationEqual(a: RuleCitation, b: RuleCitation): boolean {
  return (
    a.observed === b.observed &&
    a.threshold === b.threshold &&
    a.passed === b.passed &&
    a.detail === b.detail
  );
}

function prescriptionEqual(a?: Prescription, b?: Prescription): boolean {
  if (a === undefined || b === undefined) {
    return a === b;
  }
  const meds = (rx: Prescription): string =>
    (rx.trigger_meds ?? []).map((m) => `${m.agent}:${m.dose}`).join(",");
  return (
    a.gonadotropin_iu === b.gonadotropin_iu &&
    a.clomid_mg === b.clomid_mg &&
    a.letrozole_mg === b.letrozole_mg &&
    a.agent === b.agent &&
    meds(a) === meds(b)
  );
}

function alertKey(alert: Alert): string {
  return `${alert.kind}|${alert.rule_id}|${alert.reason}`;
}

function decisionEqual(a: AdviceOut["decision"], b: AdviceOut["decision"]): boolean {
  if (a.kind !== b.kind || a.scheme !== b.scheme) {
    return false;
  }
  const pa = a.trigger_plan;
  const pb = b.trigger_plan;
  if (pa === undefined || pb === undefined) {
    return pa === pb;
  }
  return (
    pa.triggered_at === pb.triggered_at &&
    pa.duration_hours === pb.duration_hours &&
    pa.scheduled_retrieval === pb.scheduled_retrieval &&
    pa.medications.map((m) => `${m.agent}:${m.dose}`).join(",") ===
      pb.medications.map((m) => `${m.agent}:${m.dose}`).join(",")
  );
}

export function diffAdvice(base: AdviceOut, edited: AdviceOut): WhatIfDiff {
  const changedRules = new Set<string>();
  const baseRules = new Map(base.explanation.map((c) => [c.rule_id, c]));
  const editedRules = new Map(edited.explanation.map((c) => [c.rule_id, c]));
  for (const [ruleId, citation] of baseRules) {
    const other = editedRules.get(ruleId);
    if (other === undefined || !citationEqual(citation, other)) {
      changedRules.add(ruleId);
    }
  }
  for (const ruleId of editedRules.keys()) {
    if (!baseRules.has(ruleId)) {
      changedRules.add(ruleId);
    }
  }

  const changedAlerts = new Set<string>();
  const baseAlerts = new Set(base.alerts.map(alertKey));
  const editedAlerts = new Set(edited.alerts.map(alertKey));
  for (const key of baseAlerts) {
    if (!editedAlerts.has(key)) {
      changedAlerts.add(key);
    }
  }
  for (const key of editedAlerts) {
    if (!baseAlerts.has(key)) {
      changedAlerts.add(key);
    }
  }

  const decisionChanged = !decisionEqual(base.decision, edited.decision);
  const prescriptionChanged = !prescriptionEqual(base.prescription, edited.prescription);
  const nextVisitChanged = base.next_visit_in_days !== edited.next_visit_in_days;
  return {
    decisionChanged,
    prescriptionChanged,
    nextVisitChanged,
    changedRules,
    changedAlerts,
    identical:
      !decisionChanged &&
      !prescriptionChanged &&
      !nextVisitChanged &&
      changedRules.size === 0 &&
      changedAlerts.size === 0,
  };
}

/** Apply highlight classes to an already rendered advice card. */
export function markChanges(card: HTMLElement, diff: WhatIfDiff): number {
  let marked = 0;
  for (const li of Array.from(card.querySelectorAll<HTMLElement>("li.citation"))) {
    const ruleId = li.dataset["rule"];
    if (ruleId !== undefined && diff.changedRules.has(ruleId)) {
      li.classList.add("changed");
      marked += 1;
    }
  }
  if (diff.decisionChanged) {
    const decision = card.querySelector(".decision");
    if (decision !== null) {
      decision.classList.add("changed");
      marked += 1;
    }
  }
  if (diff.prescriptionChanged) {
    const rx = card.querySelector(".prescription, .trigger-plan");
    if (rx !== null) {
      rx.classList.add("changed");
      marked += 1;
    }
  }
  return marked;
}

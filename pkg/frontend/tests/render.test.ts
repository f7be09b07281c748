import { describe, expect, it } from "vitest";

import { AdviceResponse } from "../src/model.js";
import {
  adviceCard,
  clearFieldErrors,
  cycleTimeline,
  histogramChart,
  patientHeader,
  renderFieldErrors,
} from "../src/render.js";
import {
  cycleSteps,
  historyFixture,
  parseAdvice,
  surgeFixture,
  textOf,
  textsOf,
} from "./helpers.js";

/** Every server string must land in the DOM byte-identical. */
function assertCardMatchesResponse(card: HTMLElement, response: AdviceResponse): void {
  const advice = response.advice;
  expect(textOf(card, ".decision")).toBe(advice.decision.kind);
  expect(textOf(card, ".block-badge")).toBe(response.state.block);
  expect(textOf(card, ".config-hash")).toBe(advice.config_hash);

  const items = Array.from(card.querySelectorAll("li.citation"));
  expect(items.length).toBe(advice.explanation.length);
  advice.explanation.forEach((citation, i) => {
    const li = items[i] as HTMLElement;
    expect(textOf(li, ".cite-rule")).toBe(citation.rule_id);
    expect(textOf(li, ".cite-observed")).toBe(citation.observed);
    expect(textOf(li, ".cite-threshold")).toBe(citation.threshold);
    expect(li.dataset["rule"]).toBe(citation.rule_id);
    expect(li.classList.contains(citation.passed ? "pass" : "fail")).toBe(true);
    const detail = li.querySelector(".cite-detail");
    if (citation.detail === undefined) {
      expect(detail).toBeNull();
    } else {
      expect(detail?.textContent).toBe(citation.detail);
    }
  });

  const banners = Array.from(card.querySelectorAll(".banner")).filter(
    (b) => !b.classList.contains("md-talk"),
  );
  expect(banners.length).toBe(advice.alerts.length);
  advice.alerts.forEach((alert, i) => {
    const banner = banners[i] as HTMLElement;
    expect(banner.classList.contains("blocking")).toBe(true);
    expect(textOf(banner, ".alert-kind")).toBe(alert.kind);
    expect(textOf(banner, ".alert-reason")).toBe(alert.reason);
    expect(textOf(banner, ".alert-rule")).toBe(alert.rule_id);
  });

  const scheme = card.querySelector(".scheme");
  if (advice.decision.scheme === undefined) {
    expect(scheme).toBeNull();
  } else {
    expect(scheme?.textContent).toBe(advice.decision.scheme);
  }

  const plan = advice.decision.trigger_plan;
  const planCard = card.querySelector(".trigger-plan");
  if (plan === undefined) {
    expect(planCard).toBeNull();
  } else {
    expect(textOf(planCard as HTMLElement, ".plan-triggered-at")).toBe(plan.triggered_at);
    expect(textOf(planCard as HTMLElement, ".plan-duration")).toBe(String(plan.duration_hours));
    expect(textOf(planCard as HTMLElement, ".plan-retrieval")).toBe(plan.scheduled_retrieval);
    expect(textsOf(planCard as HTMLElement, ".plan-meds .med-agent")).toEqual(
      plan.medications.map((m) => m.agent),
    );
    expect(textsOf(planCard as HTMLElement, ".plan-meds .med-dose")).toEqual(
      plan.medications.map((m) => String(m.dose)),
    );
  }

  const rx = advice.prescription;
  const rxCard = card.querySelector(".prescription");
  if (rx === undefined) {
    expect(rxCard).toBeNull();
  } else {
    expect(textOf(rxCard as HTMLElement, ".rx-gonadotropin")).toBe(String(rx.gonadotropin_iu));
    expect(textOf(rxCard as HTMLElement, ".rx-clomid")).toBe(String(rx.clomid_mg));
    expect(textOf(rxCard as HTMLElement, ".rx-letrozole")).toBe(String(rx.letrozole_mg));
    const agent = rxCard?.querySelector(".rx-agent");
    if (rx.agent === undefined) {
      expect(agent).toBeNull();
    } else {
      expect(agent?.textContent).toBe(rx.agent);
    }
    expect(textsOf(rxCard as HTMLElement, ".rx-trigger-meds .med-agent")).toEqual(
      (rx.trigger_meds ?? []).map((m) => m.agent),
    );
  }

  const next = card.querySelector(".next-visit");
  if (advice.next_visit_in_days === undefined) {
    expect(next).toBeNull();
  } else {
    expect(textOf(next as HTMLElement, ".next-days")).toBe(String(advice.next_visit_in_days));
  }
}

describe("adviceCard", () => {
  it("renders every captured response string byte-identical", () => {
    for (const step of cycleSteps()) {
      if (step.status !== 200) {
        continue;
      }
      const response = parseAdvice(step.response);
      assertCardMatchesResponse(adviceCard(response), response);
    }
  });

  it("shows the starting prescription and scheme on stimulation start", () => {
    const step = cycleSteps().find((s) => s.label === "baseline-ready")!;
    const card = adviceCard(parseAdvice(step.response));
    expect(textOf(card, ".decision")).toBe("start_stimulation");
    expect(textOf(card, ".scheme")).toBe("mini");
    expect(textOf(card, ".rx-gonadotropin")).toBe("150");
    expect(textOf(card, ".rx-agent")).toBe("follistim");
    expect(textOf(card, ".rx-clomid")).toBe("50");
    expect(textOf(card, ".rx-letrozole")).toBe("2.5");
  });

  it("computes next-visit dates from the visit timestamp", () => {
    const byLabel = new Map(cycleSteps().map((s) => [s.label, s]));
    const expected: Array<[string, string]> = [
      ["suppressed-check", "2024-03-08"],
      ["baseline-ready", "2024-03-13"],
      ["mature", "2024-03-19"],
    ];
    for (const [label, date] of expected) {
      const card = adviceCard(parseAdvice(byLabel.get(label)!.response));
      expect(textOf(card, ".next-date")).toBe(date);
    }
  });

  it("renders a surge as an urgent plan with a blocking banner", () => {
    const response = parseAdvice(surgeFixture().response);
    const card = adviceCard(response);
    assertCardMatchesResponse(card, response);
    expect(textOf(card, ".plan-duration")).toBe("24");
    expect(textOf(card, ".plan-retrieval")).toBe("2024-03-14T09:00:00");
    expect(card.querySelector(".plan-no-meds")).not.toBeNull();
    expect(card.querySelectorAll(".plan-meds .med").length).toBe(0);
    const banner = card.querySelector(".banner.alert-no_trigger");
    expect(banner).not.toBeNull();
    expect(banner?.classList.contains("blocking")).toBe(true);
  });

  it("raises a blocking banner for consultation decisions", () => {
    const base = parseAdvice(cycleSteps()[0]!.response);
    const consult: AdviceResponse = {
      ...base,
      advice: {
        decision: { kind: "md_talk" },
        explanation: base.advice.explanation,
        alerts: [],
        config_hash: base.advice.config_hash,
      },
    };
    const card = adviceCard(consult);
    expect(card.querySelector(".banner.blocking.md-talk")).not.toBeNull();
    expect(textOf(card, ".decision")).toBe("md_talk");
  });

  it("marks previews distinctly from recorded advice", () => {
    const base = parseAdvice(cycleSteps()[0]!.response);
    expect(adviceCard(base).querySelector(".dry-run")).toBeNull();
    const preview = { ...base, dry_run: true };
    expect(adviceCard(preview).querySelector(".dry-run")).not.toBeNull();
  });
});

describe("cycleTimeline", () => {
  it("renders one row per visit with verbatim decisions and walked blocks", () => {
    const cycle = historyFixture();
    const section = cycleTimeline(cycle);
    const rows = Array.from(section.querySelectorAll("tr.visit-row"));
    expect(rows.length).toBe(cycle.visits.length);
    cycle.visits.forEach((item, i) => {
      const row = rows[i] as HTMLElement;
      expect(textOf(row, ".visit-at")).toBe(item.visit.visit_at);
      if (item.treatment !== undefined) {
        expect(textOf(row, ".visit-decision")).toBe(item.treatment.decision.kind);
      }
    });
    expect(textsOf(section, ".block-badge")).toEqual([
      "preparation",
      "preparation",
      "stimulation",
      "stimulation",
      "stimulation",
      "post_trigger",
      "post_trigger",
    ]);
  });

  it("draws hormone sparklines and the latest follicle histogram", () => {
    const section = cycleTimeline(historyFixture());
    const spark = section.querySelector("svg.sparkline");
    expect(spark).not.toBeNull();
    expect(spark?.querySelector('polyline[data-series="e2"]')).not.toBeNull();
    expect(spark?.querySelector('polyline[data-series="lh"]')).not.toBeNull();
    const bars = Array.from(section.querySelectorAll(".histo-bar")) as HTMLElement[];
    expect(bars.map((b) => b.dataset["size"])).toEqual(["10", "16"]);
    expect(textsOf(section, ".histo-count")).toEqual(["3", "7"]);
  });
});

describe("histogramChart", () => {
  it("scales bars to the largest bin", () => {
    const chart = histogramChart({ "16": 7, "10": 3 });
    const fills = Array.from(chart.querySelectorAll(".histo-fill")) as HTMLElement[];
    expect(fills.map((f) => f.style.height)).toEqual(["43%", "100%"]);
  });
});

describe("patientHeader", () => {
  it("shows id and age, flagging contraindication only when set", () => {
    const header = patientHeader(historyFixture().patient);
    expect(textOf(header, ".patient-id")).toBe("p1");
    expect(textOf(header, ".patient-age")).toBe("30");
    expect(header.querySelector(".contraindicated")).toBeNull();
    const flagged = patientHeader({
      patient_id: "p9",
      age_years: 44,
      medication_contraindicated: true,
    });
    expect(flagged.querySelector(".contraindicated")).not.toBeNull();
  });
});

describe("field errors", () => {
  function formRoot(): HTMLElement {
    const root = document.createElement("form");
    const fsh = document.createElement("input");
    fsh.name = "fsh";
    root.appendChild(fsh);
    const row = document.createElement("div");
    row.className = "follicle-row";
    const size = document.createElement("input");
    size.name = "size";
    row.appendChild(size);
    root.appendChild(row);
    return root;
  }

  it("attaches notes to fields and reports unmatchable keys", () => {
    const root = formRoot();
    const orphans = renderFieldErrors(
      root,
      new Map([
        ["fsh", "must be a number"],
        ["follicle.0.size", "size is required"],
        ["form", "Extra inputs are not permitted"],
      ]),
    );
    expect(orphans).toEqual(["form: Extra inputs are not permitted"]);
    const fsh = root.querySelector('input[name="fsh"]');
    expect(fsh?.classList.contains("invalid")).toBe(true);
    expect(textOf(root, '.field-error[data-for="fsh"]')).toBe("must be a number");
    expect(textOf(root, '.field-error[data-for="follicle.0.size"]')).toBe("size is required");
  });

  it("clears previous notes completely", () => {
    const root = formRoot();
    renderFieldErrors(root, new Map([["fsh", "must be a number"]]));
    clearFieldErrors(root);
    expect(root.querySelector(".field-error")).toBeNull();
    expect(root.querySelector("input.invalid")).toBeNull();
  });
});

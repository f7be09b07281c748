import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { ConsoleApp } from "../src/app.js";
import {
  FakeFetch,
  cycleSteps,
  historyFixture,
  parseAdvice,
  patientDetail,
  errorsFixture,
  textOf,
  whatIfFixture,
} from "./helpers.js";

const BASE = "http://svc";
const ADVICE_P1 = `${BASE}/patients/p1/cycles/1/advice`;
const DRY_RUN_P2 = `${BASE}/patients/p2/cycles/1/advice?dry_run=true`;

function makeApp(ff: FakeFetch): ConsoleApp {
  const root = document.createElement("div");
  document.body.appendChild(root);
  const client = new ApiClient({ baseUrl: BASE, token: "tok", fetchImpl: ff.fetch });
  return new ConsoleApp(root, client);
}

function wireP1(ff: FakeFetch): void {
  ff.always("GET", `${BASE}/patients/p1`, 200, JSON.stringify(patientDetail()));
  ff.always("GET", `${BASE}/patients/p1/cycles/1`, 200, JSON.stringify(historyFixture()));
}

function wireP2(ff: FakeFetch): void {
  ff.always(
    "GET",
    `${BASE}/patients/p2`,
    200,
    '{"patient":{"patient_id":"p2","age_years":30},"cycles":[1]}',
  );
  ff.always(
    "GET",
    `${BASE}/patients/p2/cycles/1`,
    404,
    '{"code":"unknown_patient","message":"no visits recorded","details":[]}',
  );
}

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("a full recorded cycle", () => {
  it("round-trips every request and renders every response verbatim", async () => {
    const ff = new FakeFetch();
    wireP1(ff);
    const app = makeApp(ff);
    await app.open("p1", 1);
    expect(textOf(app.root, ".patient-id")).toBe("p1");

    let persisted = 0;
    for (const step of cycleSteps()) {
      if (step.status !== 200) {
        continue;
      }
      app.setVisit(step.request);
      ff.enqueue("POST", ADVICE_P1, 200, step.response);
      const before = ff.calls.length;
      const response = await app.submit(false);
      expect(response).not.toBeNull();
      persisted += 1;

      const posts = ff.calls.slice(before).filter((c) => c.method === "POST");
      expect(posts.length).toBe(1);
      expect(posts[0]!.url).toBe(ADVICE_P1);
      expect(JSON.parse(posts[0]!.body!)).toEqual(step.request);

      const expected = parseAdvice(step.response);
      const area = app.root.querySelector("#advice-area") as HTMLElement;
      expect(textOf(area, ".decision")).toBe(expected.advice.decision.kind);
      const rules = Array.from(area.querySelectorAll("li.citation"));
      expect(rules.length).toBe(expected.advice.explanation.length);
      expected.advice.explanation.forEach((citation, i) => {
        const li = rules[i] as HTMLElement;
        expect(textOf(li, ".cite-rule")).toBe(citation.rule_id);
        expect(textOf(li, ".cite-observed")).toBe(citation.observed);
        expect(textOf(li, ".cite-threshold")).toBe(citation.threshold);
        if (citation.detail !== undefined) {
          expect(textOf(li, ".cite-detail")).toBe(citation.detail);
        }
      });
    }

    expect(persisted).toBe(7);
    const timelineLoads = ff.callsTo("GET", `${BASE}/patients/p1/cycles/1`);
    expect(timelineLoads.length).toBe(1 + persisted);
    expect(app.root.querySelectorAll("tr.visit-row").length).toBe(historyFixture().visits.length);
  });

  it("reports a finished cycle with a terminal notice", async () => {
    const ff = new FakeFetch();
    wireP1(ff);
    const app = makeApp(ff);
    await app.open("p1", 1);

    const terminal = cycleSteps().find((s) => s.status === 410)!;
    app.setVisit(terminal.request);
    ff.enqueue("POST", ADVICE_P1, 410, terminal.response);
    const response = await app.submit(false);
    expect(response).toBeNull();
    const banner = app.root.querySelector("#notice-area .banner.terminal");
    expect(banner).not.toBeNull();
    expect(textOf(banner as HTMLElement, ".notice-message")).toBe(
      "cycle is done; no further advice can be given",
    );
    expect(textOf(banner as HTMLElement, ".notice-code")).toBe("terminal_cycle");
  });
});

describe("client-side rejection", () => {
  it("sends nothing when a hormone field is not a number", async () => {
    const ff = new FakeFetch();
    wireP1(ff);
    const app = makeApp(ff);
    await app.open("p1", 1);

    app.setVisit(cycleSteps()[0]!.request);
    const form = app.readForm();
    form.fsh = "abc";
    app.setForm(form);

    const before = ff.calls.length;
    const response = await app.submit(false);
    expect(response).toBeNull();
    expect(ff.calls.length).toBe(before);
    const input = app.root.querySelector('input[name="fsh"]');
    expect(input?.classList.contains("invalid")).toBe(true);
    expect(textOf(app.root, '.field-error[data-for="fsh"]')).toBe("must be a number");
  });

  it("sends nothing for an impossible follicle size", async () => {
    const ff = new FakeFetch();
    wireP1(ff);
    const app = makeApp(ff);
    await app.open("p1", 1);

    const form = app.readForm();
    form.visitAt = "2024-03-13T09:00:00";
    form.follicles[0] = { size: "45", count: "1" };
    app.setForm(form);

    const before = ff.calls.length;
    expect(await app.submit(false)).toBeNull();
    expect(ff.calls.length).toBe(before);
    expect(app.root.querySelector(".field-error")).not.toBeNull();
  });
});

describe("server-side validation", () => {
  it("lands detail locations on the matching inputs", async () => {
    const ff = new FakeFetch();
    wireP1(ff);
    const app = makeApp(ff);
    await app.open("p1", 1);

    app.setVisit(cycleSteps()[0]!.request);
    const bad = errorsFixture().bad_hormone;
    ff.enqueue("POST", ADVICE_P1, bad.status, bad.response);
    expect(await app.submit(false)).toBeNull();
    expect(textOf(app.root, '.field-error[data-for="fsh"]')).toBe(
      "Input should be a valid number, unable to parse string as a number",
    );
  });

  it("falls back to a banner for locations outside the form", async () => {
    const ff = new FakeFetch();
    wireP1(ff);
    const app = makeApp(ff);
    await app.open("p1", 1);

    app.setVisit(cycleSteps()[0]!.request);
    const extra = errorsFixture().extra_field;
    ff.enqueue("POST", ADVICE_P1, extra.status, extra.response);
    expect(await app.submit(false)).toBeNull();
    const notice = textOf(app.root, "#notice-area .notice-message");
    expect(notice).toContain("Extra inputs are not permitted");
  });
});

describe("what-if", () => {
  it("compares an edited dry run against the preview and highlights changes", async () => {
    const ff = new FakeFetch();
    wireP2(ff);
    const fixture = whatIfFixture();
    const app = makeApp(ff);
    await app.open("p2", 1);

    app.setVisit(fixture.base_request);
    expect(
      Array.from(app.root.querySelectorAll("#form-preview .histo-bar")).map(
        (b) => (b as HTMLElement).dataset["size"],
      ),
    ).toEqual(["10", "16"]);

    ff.enqueue("POST", DRY_RUN_P2, 200, fixture.base);
    const timelineBefore = ff.callsTo("GET", `${BASE}/patients/p2/cycles/1`).length;
    const preview = await app.submit(true);
    expect(preview?.dry_run).toBe(true);
    expect(ff.callsTo("GET", `${BASE}/patients/p2/cycles/1`).length).toBe(timelineBefore);
    expect(app.root.querySelector("#advice-area .dry-run")).not.toBeNull();
    expect(JSON.parse(ff.calls[ff.calls.length - 1]!.body!)).toEqual(fixture.base_request);

    const form = app.readForm();
    form.e2 = "4500";
    app.setForm(form);
    ff.enqueue("POST", DRY_RUN_P2, 200, fixture.edited);
    const edited = await app.whatIf();
    expect(edited).not.toBeNull();
    expect(JSON.parse(ff.calls[ff.calls.length - 1]!.body!)).toEqual(fixture.edited_request);

    const panel = app.root.querySelector(".whatif-panel") as HTMLElement;
    const baseAdvice = parseAdvice(fixture.base).advice;
    const editedAdvice = parseAdvice(fixture.edited).advice;
    expect(textOf(panel, ".whatif-base .decision")).toBe(baseAdvice.decision.kind);
    expect(textOf(panel, ".whatif-edited .decision")).toBe(editedAdvice.decision.kind);
    expect(panel.querySelectorAll(".whatif-base .changed").length).toBe(0);
    const changed = Array.from(panel.querySelectorAll(".whatif-edited li.citation.changed")).map(
      (li) => (li as HTMLElement).dataset["rule"],
    );
    expect(new Set(changed)).toEqual(new Set(["B3-MED-E2", "B3-MED-BIG", "B3-ALT"]));

    const doses = (side: string): string[] =>
      Array.from(panel.querySelectorAll(`${side} .plan-meds .med-dose`)).map(
        (n) => n.textContent ?? "",
      );
    expect(doses(".whatif-base")).toEqual(["1"]);
    expect(doses(".whatif-edited")).toEqual(["2"]);
    expect(panel.querySelector(".notice-what_if")).toBeNull();
  });

  it("shows zero highlights when nothing changes", async () => {
    const ff = new FakeFetch();
    wireP2(ff);
    const fixture = whatIfFixture();
    const app = makeApp(ff);
    await app.open("p2", 1);

    app.setVisit(fixture.base_request);
    ff.enqueue("POST", DRY_RUN_P2, 200, fixture.base);
    await app.submit(true);
    ff.enqueue("POST", DRY_RUN_P2, 200, fixture.base);
    await app.whatIf();

    const panel = app.root.querySelector(".whatif-panel") as HTMLElement;
    expect(panel.querySelectorAll(".changed").length).toBe(0);
    expect(textOf(panel, ".notice-what_if .notice-message")).toBe("no change in advice");
  });

  it("asks for a preview before comparing", async () => {
    const ff = new FakeFetch();
    wireP2(ff);
    const app = makeApp(ff);
    await app.open("p2", 1);

    const before = ff.calls.length;
    expect(await app.whatIf()).toBeNull();
    expect(ff.calls.length).toBe(before);
    expect(app.root.querySelector("#notice-area .notice-what_if")).not.toBeNull();
  });
});

/** Console application shell: form handling, submission, what-if panel.
 *
 * All rendering goes through the pure builders in render.ts; all network
 * traffic goes through an injected ApiClient so tests can drive a full
 * session against captured responses without a server.
 */

import { ApiClient, ApiError } from "./api.js";
import { AdviceResponse, VisitBody } from "./model.js";
import {
  adviceCard,
  clearFieldErrors,
  cycleTimeline,
  histogramChart,
  noticeBanner,
  patientHeader,
  renderFieldErrors,
} from "./render.js";
import {
  FollicleRowInput,
  VisitFormState,
  formToVisit,
  mapServerDetails,
  validateForm,
  visitToForm,
} from "./validate.js";
import { diffAdvice, markChanges } from "./whatif.js";

const FOLLICLE_ROWS = 4;

function input(name: string, placeholder: string): HTMLInputElement {
  const node = document.createElement("input");
  node.name = name;
  node.placeholder = placeholder;
  node.autocomplete = "off";
  return node;
}

function button(id: string, label: string): HTMLButtonElement {
  const node = document.createElement("button");
  node.type = "button";
  node.id = id;
  node.textContent = label;
  return node;
}

function fieldRow(labelText: string, control: HTMLElement): HTMLElement {
  const row = document.createElement("div");
  row.className = "form-row";
  const label = document.createElement("label");
  label.textContent = labelText;
  row.appendChild(label);
  row.appendChild(control);
  return row;
}

export class ConsoleApp {
  readonly root: HTMLElement;
  private readonly client: ApiClient;
  private patientId = "";
  private cycleNumber = 1;
  private previewBase: AdviceResponse | null = null;

  private form!: HTMLFormElement;
  private adviceArea!: HTMLElement;
  private whatIfArea!: HTMLElement;
  private timelineArea!: HTMLElement;
  private noticeArea!: HTMLElement;
  private headerArea!: HTMLElement;
  private previewChart!: HTMLElement;

  constructor(root: HTMLElement, client: ApiClient) {
    this.root = root;
    this.client = client;
    this.mount();
  }

  private mount(): void {
    this.root.textContent = "";
    this.headerArea = document.createElement("div");
    this.headerArea.id = "header-area";
    this.noticeArea = document.createElement("div");
    this.noticeArea.id = "notice-area";

    this.form = document.createElement("form");
    this.form.id = "visit-form";
    this.form.noValidate = true;
    this.form.appendChild(fieldRow("Visit at", input("visit_at", "2024-03-08T09:00:00")));
    for (const name of ["fsh", "lh", "e2", "p4"]) {
      this.form.appendChild(fieldRow(name.toUpperCase(), input(name, "")));
    }
    const follicles = document.createElement("div");
    follicles.id = "follicle-rows";
    for (let i = 0; i < FOLLICLE_ROWS; i += 1) {
      follicles.appendChild(this.makeFollicleRow());
    }
    this.form.appendChild(fieldRow("Follicles (mm / count)", follicles));

    this.previewChart = document.createElement("div");
    this.previewChart.id = "form-preview";
    this.form.appendChild(this.previewChart);
    this.form.addEventListener("input", () => this.refreshPreviewChart());

    const actions = document.createElement("div");
    actions.className = "actions";
    const submit = button("btn-submit", "Record visit");
    const preview = button("btn-preview", "Preview advice");
    const whatIf = button("btn-whatif", "What if");
    submit.addEventListener("click", () => {
      void this.submit(false);
    });
    preview.addEventListener("click", () => {
      void this.submit(true);
    });
    whatIf.addEventListener("click", () => {
      void this.whatIf();
    });
    actions.appendChild(submit);
    actions.appendChild(preview);
    actions.appendChild(whatIf);
    this.form.appendChild(actions);
    this.form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submit(false);
    });

    this.adviceArea = document.createElement("div");
    this.adviceArea.id = "advice-area";
    this.whatIfArea = document.createElement("div");
    this.whatIfArea.id = "whatif-area";
    this.timelineArea = document.createElement("div");
    this.timelineArea.id = "timeline-area";

    for (const node of [
      this.headerArea,
      this.noticeArea,
      this.form,
      this.adviceArea,
      this.whatIfArea,
      this.timelineArea,
    ]) {
      this.root.appendChild(node);
    }
  }

  private makeFollicleRow(): HTMLElement {
    const row = document.createElement("div");
    row.className = "follicle-row";
    row.appendChild(input("size", "mm"));
    row.appendChild(input("count", "n"));
    return row;
  }

  /** Point the console at one patient cycle and load its history. */
  async open(patientId: string, cycleNumber: number): Promise<void> {
    this.patientId = patientId;
    this.cycleNumber = cycleNumber;
    this.previewBase = null;
    this.noticeArea.textContent = "";
    const detail = await this.client.getPatient(patientId);
    this.headerArea.textContent = "";
    this.headerArea.appendChild(patientHeader(detail.patient));
    await this.refreshTimeline();
  }

  private async refreshTimeline(): Promise<void> {
    try {
      const cycle = await this.client.getCycle(this.patientId, this.cycleNumber);
      this.timelineArea.textContent = "";
      this.timelineArea.appendChild(cycleTimeline(cycle));
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        this.timelineArea.textContent = "";
        return;
      }
      throw error;
    }
  }

  readForm(): VisitFormState {
    const value = (name: string): string =>
      this.form.querySelector<HTMLInputElement>(`input[name="${name}"]`)?.value ?? "";
    const follicles: FollicleRowInput[] = [];
    for (const row of Array.from(this.form.querySelectorAll<HTMLElement>(".follicle-row"))) {
      follicles.push({
        size: row.querySelector<HTMLInputElement>('input[name="size"]')?.value ?? "",
        count: row.querySelector<HTMLInputElement>('input[name="count"]')?.value ?? "",
      });
    }
    return {
      visitAt: value("visit_at"),
      fsh: value("fsh"),
      lh: value("lh"),
      e2: value("e2"),
      p4: value("p4"),
      follicles,
    };
  }

  setForm(form: VisitFormState): void {
    const assign = (name: string, value: string): void => {
      const node = this.form.querySelector<HTMLInputElement>(`input[name="${name}"]`);
      if (node !== null) {
        node.value = value;
      }
    };
    assign("visit_at", form.visitAt);
    assign("fsh", form.fsh);
    assign("lh", form.lh);
    assign("e2", form.e2);
    assign("p4", form.p4);
    const container = this.form.querySelector<HTMLElement>("#follicle-rows");
    if (container !== null) {
      container.textContent = "";
      const rows = Math.max(form.follicles.length, FOLLICLE_ROWS);
      for (let i = 0; i < rows; i += 1) {
        const row = this.makeFollicleRow();
        const data = form.follicles[i];
        if (data !== undefined) {
          const size = row.querySelector<HTMLInputElement>('input[name="size"]');
          const count = row.querySelector<HTMLInputElement>('input[name="count"]');
          if (size !== null) {
            size.value = data.size;
          }
          if (count !== null) {
            count.value = data.count;
          }
        }
        container.appendChild(row);
      }
    }
    this.refreshPreviewChart();
  }

  setVisit(visit: VisitBody): void {
    this.setForm(visitToForm(visit));
  }

  private refreshPreviewChart(): void {
    this.previewChart.textContent = "";
    const bins: Record<string, number> = {};
    for (const row of this.readForm().follicles) {
      const size = Number(row.size.trim());
      const count = Number(row.count.trim());
      if (
        row.size.trim() !== "" &&
        Number.isInteger(size) &&
        Number.isInteger(count) &&
        count >= 0
      ) {
        bins[String(size)] = count;
      }
    }
    if (Object.keys(bins).length > 0) {
      this.previewChart.appendChild(histogramChart(bins));
    }
  }

  /** Validate and send the form; dryRun previews without persisting.
   *
   * Returns the response, or null when client-side validation blocked the
   * submission (in which case nothing was sent).
   */
  async submit(dryRun: boolean): Promise<AdviceResponse | null> {
    clearFieldErrors(this.form);
    this.noticeArea.textContent = "";
    const form = this.readForm();
    const errors = validateForm(form);
    if (errors.size > 0) {
      renderFieldErrors(this.form, errors);
      return null;
    }
    const visit = formToVisit(form);
    let response: AdviceResponse;
    try {
      response = await this.client.advise(this.patientId, this.cycleNumber, visit, dryRun);
    } catch (error) {
      this.handleApiError(error);
      return null;
    }
    this.adviceArea.textContent = "";
    this.adviceArea.appendChild(adviceCard(response));
    if (dryRun) {
      this.previewBase = response;
    } else {
      this.previewBase = null;
      this.whatIfArea.textContent = "";
      await this.refreshTimeline();
    }
    return response;
  }

  /** Dry-run the edited form against the last preview, side by side. */
  async whatIf(): Promise<AdviceResponse | null> {
    this.noticeArea.textContent = "";
    if (this.previewBase === null) {
      this.noticeArea.appendChild(
        noticeBanner("what_if", "preview the visit first, then edit values to compare"),
      );
      return null;
    }
    clearFieldErrors(this.form);
    const form = this.readForm();
    const errors = validateForm(form);
    if (errors.size > 0) {
      renderFieldErrors(this.form, errors);
      return null;
    }
    const visit = formToVisit(form);
    let edited: AdviceResponse;
    try {
      edited = await this.client.advise(this.patientId, this.cycleNumber, visit, true);
    } catch (error) {
      this.handleApiError(error);
      return null;
    }
    const diff = diffAdvice(this.previewBase.advice, edited.advice);
    this.whatIfArea.textContent = "";
    const panel = document.createElement("div");
    panel.className = "whatif-panel";
    const baseSide = document.createElement("div");
    baseSide.className = "whatif-base";
    baseSide.appendChild(adviceCard(this.previewBase));
    const editedSide = document.createElement("div");
    editedSide.className = "whatif-edited";
    const editedCard = adviceCard(edited);
    markChanges(editedCard, diff);
    editedSide.appendChild(editedCard);
    panel.appendChild(baseSide);
    panel.appendChild(editedSide);
    if (diff.identical) {
      panel.appendChild(noticeBanner("what_if", "no change in advice"));
    }
    this.whatIfArea.appendChild(panel);
    return edited;
  }

  private handleApiError(error: unknown): void {
    if (!(error instanceof ApiError)) {
      throw error;
    }
    if (error.status === 400 && error.details.length > 0) {
      const orphans = renderFieldErrors(this.form, mapServerDetails(error.details));
      if (orphans.length > 0) {
        this.noticeArea.appendChild(noticeBanner(error.code, orphans.join("; ")));
      }
      return;
    }
    const banner = noticeBanner(error.code, error.message);
    if (error.code === "terminal_cycle") {
      banner.classList.add("terminal");
    }
    this.noticeArea.appendChild(banner);
  }
}

/** Browser entry point: connect bar plus the console itself. */
export function bootstrap(rootId = "app"): void {
  const root = document.getElementById(rootId);
  if (root === null) {
    return;
  }
  const bar = document.createElement("div");
  bar.className = "connect-bar";
  const baseUrl = input("base_url", "http://localhost:8000");
  baseUrl.value = "http://localhost:8000";
  const token = input("token", "api token (optional)");
  const patient = input("patient_id", "patient id");
  const cycle = input("cycle_number", "cycle");
  cycle.value = "1";
  const connect = button("btn-connect", "Open cycle");
  for (const node of [baseUrl, token, patient, cycle, connect]) {
    bar.appendChild(node);
  }
  const mountPoint = document.createElement("div");
  root.appendChild(bar);
  root.appendChild(mountPoint);
  connect.addEventListener("click", () => {
    const client = new ApiClient({
      baseUrl: baseUrl.value,
      ...(token.value === "" ? {} : { token: token.value }),
    });
    const app = new ConsoleApp(mountPoint, client);
    void app.open(patient.value, Number(cycle.value));
  });
}

declare global {
  interface Window {
    advisorConsoleAutoBoot?: boolean;
  }
}

if (typeof window !== "undefined" && window.advisorConsoleAutoBoot === true) {
  bootstrap();
}

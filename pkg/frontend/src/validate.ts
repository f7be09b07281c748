/** Client-side intake checks: types and measurement ranges only.
 *
 * The console never re-implements treatment rules. A hormone value that
 * will fail a protocol threshold is still a valid form entry; only entries
 * the service would reject as malformed (non-numeric, negative, impossible
 * follicle sizes) are stopped before the network.
 */

import {
  FollicleExamBody,
  HormonePanelBody,
  MAX_FOLLICLE_MM,
  MIN_FOLLICLE_MM,
  VisitBody,
} from "./model.js";

export interface FollicleRowInput {
  size: string;
  count: string;
}

export interface VisitFormState {
  visitAt: string;
  fsh: string;
  lh: string;
  e2: string;
  p4: string;
  follicles: FollicleRowInput[];
}

export type FieldErrors = Map<string, string>;

const HORMONE_FIELDS = ["fsh", "lh", "e2", "p4"] as const;
type HormoneField = (typeof HORMONE_FIELDS)[number];

const ISO_TIMESTAMP = /^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}(:\d{2}(\.\d+)?)?$/;

function parseNumber(raw: string): number | null {
  const trimmed = raw.trim();
  if (trimmed === "") {
    return null;
  }
  const value = Number(trimmed);
  return Number.isFinite(value) ? value : NaN;
}

/** Check every field; returns an empty map when the form may be sent. */
export function validateForm(form: VisitFormState): FieldErrors {
  const errors: FieldErrors = new Map();

  if (form.visitAt.trim() === "") {
    errors.set("visit_at", "visit timestamp is required");
  } else if (!ISO_TIMESTAMP.test(form.visitAt.trim())) {
    errors.set("visit_at", "must be an ISO timestamp like 2024-03-08T09:00");
  }

  for (const field of HORMONE_FIELDS) {
    const value = parseNumber(form[field]);
    if (value === null) {
      continue;
    }
    if (Number.isNaN(value)) {
      errors.set(field, "must be a number");
    } else if (value < 0) {
      errors.set(field, "must be zero or more");
    }
  }

  form.follicles.forEach((row, index) => {
    const sizeBlank = row.size.trim() === "";
    const countBlank = row.count.trim() === "";
    if (sizeBlank && countBlank) {
      return;
    }
    const size = parseNumber(row.size);
    if (size === null) {
      errors.set(`follicle.${index}.size`, "size is required");
    } else if (Number.isNaN(size) || !Number.isInteger(size)) {
      errors.set(`follicle.${index}.size`, "must be a whole number of mm");
    } else if (size < MIN_FOLLICLE_MM || size > MAX_FOLLICLE_MM) {
      errors.set(
        `follicle.${index}.size`,
        `must be between ${MIN_FOLLICLE_MM} and ${MAX_FOLLICLE_MM} mm`,
      );
    }
    const count = parseNumber(row.count);
    if (count === null) {
      errors.set(`follicle.${index}.count`, "count is required");
    } else if (Number.isNaN(count) || !Number.isInteger(count)) {
      errors.set(`follicle.${index}.count`, "must be a whole number");
    } else if (count < 0) {
      errors.set(`follicle.${index}.count`, "must be zero or more");
    }
  });

  return errors;
}

/** Build the request body; call only after validateForm returned no errors. */
export function formToVisit(form: VisitFormState): VisitBody {
  const visitAt = form.visitAt.trim();
  const body: VisitBody = { visit_at: visitAt };

  const hormones: HormonePanelBody = {};
  let anyHormone = false;
  for (const field of HORMONE_FIELDS) {
    const value = parseNumber(form[field]);
    if (value !== null) {
      hormones[field as HormoneField] = value;
      anyHormone = true;
    }
  }
  if (anyHormone) {
    hormones.drawn_at = visitAt;
    body.hormones = hormones;
  }

  const bins: Record<string, number> = {};
  let anyBin = false;
  for (const row of form.follicles) {
    if (row.size.trim() === "" && row.count.trim() === "") {
      continue;
    }
    bins[String(Number(row.size.trim()))] = Number(row.count.trim());
    anyBin = true;
  }
  if (anyBin) {
    const exam: FollicleExamBody = { bins, measured_at: visitAt };
    body.exam = exam;
  }

  return body;
}

/** Fill a form from an existing request body; inverse of formToVisit. */
export function visitToForm(visit: VisitBody): VisitFormState {
  const form: VisitFormState = {
    visitAt: visit.visit_at,
    fsh: "",
    lh: "",
    e2: "",
    p4: "",
    follicles: [],
  };
  if (visit.hormones !== undefined) {
    for (const field of HORMONE_FIELDS) {
      const value = visit.hormones[field];
      if (value !== undefined) {
        form[field] = String(value);
      }
    }
  }
  if (visit.exam !== undefined) {
    for (const [size, count] of Object.entries(visit.exam.bins)) {
      form.follicles.push({ size, count: String(count) });
    }
    form.follicles.sort((a, b) => Number(a.size) - Number(b.size));
  }
  return form;
}

/** Map service validation details onto form field keys.
 *
 * "body.hormones.fsh" lands on the fsh input; locations the form does not
 * own fall through to the "form" key so nothing is silently dropped.
 */
export function mapServerDetails(
  details: ReadonlyArray<{ where: string; problem: string }>,
): FieldErrors {
  const errors: FieldErrors = new Map();
  for (const detail of details) {
    const parts = detail.where.split(".");
    let key: string;
    if (parts[1] === "hormones" && parts.length > 2) {
      key = parts[2] as string;
    } else if (parts[1] === "exam") {
      key = "follicle.0.size";
    } else if (parts[1] === "visit_at") {
      key = "visit_at";
    } else {
      key = "form";
    }
    const existing = errors.get(key);
    errors.set(key, existing === undefined ? detail.problem : `${existing}; ${detail.problem}`);
  }
  return errors;
}

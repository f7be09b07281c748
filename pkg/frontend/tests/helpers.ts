/** Shared test utilities: fixture loading and a recording fake fetch. */

import { readFileSync } from "node:fs";

import { FetchLike } from "../src/api.js";
import { AdviceResponse, CycleOut, PatientDetail, VisitBody } from "../src/model.js";

export interface CycleStep {
  label: string;
  request: VisitBody;
  status: number;
  response: string;
}

export interface WhatIfFixture {
  base_request: VisitBody;
  base: string;
  edited_request: VisitBody;
  edited: string;
}

export interface SurgeFixture {
  request: VisitBody;
  response: string;
}

export interface ErrorCase {
  status: number;
  response: string;
}

export type ErrorsFixture = Record<"extra_field" | "invalid_bins" | "bad_hormone", ErrorCase>;

export function loadFixture<T>(name: string): T {
  const url = new URL(`./fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf8")) as T;
}

export const cycleSteps = (): CycleStep[] => loadFixture<CycleStep[]>("cycle.json");
export const patientDetail = (): PatientDetail => loadFixture<PatientDetail>("patient.json");
export const historyFixture = (): CycleOut => loadFixture<CycleOut>("history.json");
export const whatIfFixture = (): WhatIfFixture => loadFixture<WhatIfFixture>("whatif.json");
export const surgeFixture = (): SurgeFixture => loadFixture<SurgeFixture>("surge.json");
export const errorsFixture = (): ErrorsFixture => loadFixture<ErrorsFixture>("errors.json");

export const parseAdvice = (raw: string): AdviceResponse => JSON.parse(raw) as AdviceResponse;

export interface RecordedCall {
  method: string;
  url: string;
  headers: Record<string, string>;
  body?: string;
}

interface Responder {
  status: number;
  text: string;
}

/** Routes requests to canned responses and records every call.
 *
 * Queued responses (enqueue) are consumed FIFO per method+URL; persistent
 * responses (always) answer whenever the queue is empty. An unmatched
 * request throws, so tests cannot silently hit an unexpected endpoint.
 */
export class FakeFetch {
  readonly calls: RecordedCall[] = [];
  private readonly queues = new Map<string, Responder[]>();
  private readonly fallbacks = new Map<string, Responder>();

  enqueue(method: string, url: string, status: number, text: string): void {
    const key = `${method} ${url}`;
    const queue = this.queues.get(key);
    if (queue === undefined) {
      this.queues.set(key, [{ status, text }]);
    } else {
      queue.push({ status, text });
    }
  }

  always(method: string, url: string, status: number, text: string): void {
    this.fallbacks.set(`${method} ${url}`, { status, text });
  }

  callsTo(method: string, url: string): RecordedCall[] {
    return this.calls.filter((c) => c.method === method && c.url === url);
  }

  readonly fetch: FetchLike = (url, init) => {
    const call: RecordedCall = { method: init.method, url, headers: init.headers };
    if (init.body !== undefined) {
      call.body = init.body;
    }
    this.calls.push(call);
    const key = `${init.method} ${url}`;
    const queue = this.queues.get(key);
    const responder =
      queue !== undefined && queue.length > 0 ? queue.shift() : this.fallbacks.get(key);
    if (responder === undefined) {
      return Promise.reject(new Error(`unexpected request: ${key}`));
    }
    const { status, text } = responder;
    return Promise.resolve({
      status,
      ok: status >= 200 && status < 300,
      text: () => Promise.resolve(text),
    });
  };
}

export function textOf(root: ParentNode, selector: string): string {
  const node = root.querySelector(selector);
  if (node === null) {
    throw new Error(`no element matches ${selector}`);
  }
  return node.textContent ?? "";
}

export function textsOf(root: ParentNode, selector: string): string[] {
  return Array.from(root.querySelectorAll(selector)).map((n) => n.textContent ?? "");
}

/** Replay recorded service traffic through a fetch stub.
 *
 *  Fixtures are recorded from the real service by
 *  scripts/record_fixtures.py; a test fails if the UI issues a request
 *  the recording does not contain, and also if it leaves recorded
 *  entries unconsumed, so the request sequence itself is part of the
 *  contract.
 */
import { expect } from "vitest";

export interface RecordedEntry {
  method: string;
  path: string;
  status: number;
  contentType: string;
  body: string;
}

export interface Scenario<M = Record<string, unknown>> {
  meta: M;
  entries: RecordedEntry[];
}

export interface Replay {
  remaining(): string[];
  calls: string[];
}

export function installReplay(entries: RecordedEntry[]): Replay {
  const pending = entries.map((entry) => ({ entry, used: false }));
  const calls: string[] = [];

  globalThis.fetch = (async (input: unknown, init?: RequestInit) => {
    const method = (init?.method ?? "GET").toUpperCase();
    const path = String(input);
    calls.push(`${method} ${path}`);
    const slot = pending.find((p) =>
      !p.used && p.entry.method === method && p.entry.path === path);
    if (!slot) {
      const left = pending.filter((p) => !p.used)
        .map((p) => `${p.entry.method} ${p.entry.path}`);
      throw new Error(
        `unexpected request ${method} ${path}; still recorded: ${left.join(" | ")}`);
    }
    slot.used = true;
    const { status, body, contentType } = slot.entry;
    return new Response(status === 204 ? null : body, {
      status,
      headers: contentType ? { "Content-Type": contentType } : {},
    });
  }) as typeof fetch;

  return {
    calls,
    remaining: () => pending.filter((p) => !p.used)
      .map((p) => `${p.entry.method} ${p.entry.path}`),
  };
}

/** Let queued handler chains (clicks -> awaits -> renders) finish. */
export async function flush(): Promise<void> {
  for (let i = 0; i < 25; i++) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

export function freshRoot(): HTMLElement {
  document.body.innerHTML = '<div id="root"></div>';
  return document.getElementById("root") as HTMLElement;
}

export function click(root: HTMLElement, selector: string): void {
  const node = root.querySelector(selector) as HTMLElement | null;
  expect(node, `missing element ${selector}`).not.toBeNull();
  node!.click();
}

export function textOf(root: HTMLElement, selector: string): string {
  const node = root.querySelector(selector);
  expect(node, `missing element ${selector}`).not.toBeNull();
  return node!.textContent ?? "";
}

/** 0-based character offset of a 1-based line/column position. */
export function offsetOf(text: string, line: number, col: number): number {
  const lines = text.split("\n");
  let offset = 0;
  for (let i = 0; i < Math.min(line - 1, lines.length); i++) {
    offset += lines[i].length + 1;
  }
  return offset + Math.max(0, col - 1);
}

import { describe, expect, test } from "vitest";
import { boot } from "../src/app.js";
import scenario from "./fixtures/interpret.json";
import { Scenario, click, flush, freshRoot, installReplay, textOf } from "./helpers.js";

interface InterpretMeta {
  arithWorkspace: string;
  factorialWorkspace: string;
}

const fx = scenario as unknown as Scenario<InterpretMeta>;

function listingLines(root: HTMLElement): HTMLElement[] {
  return [...root.querySelectorAll("#code-listing .listing-line")] as HTMLElement[];
}

function currentLine(root: HTMLElement): number {
  return listingLines(root).findIndex((line) => line.classList.contains("current"));
}

function traceLineCount(root: HTMLElement): number {
  const text = textOf(root, "#trace-view");
  return text === "" ? 0 : text.replace(/\n$/, "").split("\n").length;
}

describe("interpret tab", () => {
  test("steps a session, resets, and feeds input to a starved READ", async () => {
    const replay = installReplay(fx.entries);
    const root = freshRoot();
    await boot(root, { tab: "interpret" });

    // the compiled listing for the first workspace, one line per instruction
    expect(textOf(root, "#code-status")).toBe("Code: fresh");
    const lines = listingLines(root);
    expect(lines.length).toBe(5);
    expect(lines[0].textContent).toBe("0: LIT 2");
    expect(lines[4].textContent).toBe("4: HALT");

    // stepping controls stay disabled until a session exists
    for (const id of ["#step-1", "#step-n", "#run-to-end", "#reset-session"]) {
      expect((root.querySelector(id) as HTMLButtonElement).disabled).toBe(true);
    }

    click(root, "#open-session");
    await flush();
    expect((root.querySelector("#step-1") as HTMLButtonElement).disabled).toBe(false);
    expect(textOf(root, "#state-line")).toBe("pc: 0  steps: 0  halted: false  trace: 0");
    expect(textOf(root, "#stack-view")).toBe("[]");
    expect(currentLine(root)).toBe(0);

    // three steps leave 2+3 on the stack, cursor on the WRITE
    const stepCount = root.querySelector("#step-count") as HTMLInputElement;
    stepCount.value = "3";
    click(root, "#step-n");
    await flush();
    expect(textOf(root, "#stack-view")).toBe("[5]");
    expect(textOf(root, "#state-line")).toBe("pc: 3  steps: 3  halted: false  trace: 3");
    expect(currentLine(root)).toBe(3);
    expect(traceLineCount(root)).toBe(3);
    expect(textOf(root, "#trace-view")).toContain('"instr":"ADD"');

    click(root, "#run-to-end");
    await flush();
    expect(textOf(root, "#output-view")).toBe("5\n");
    expect(textOf(root, "#state-line")).toBe("pc: 4  steps: 5  halted: true  trace: 5");
    expect(currentLine(root)).toBe(4);
    expect(traceLineCount(root)).toBe(5);

    click(root, "#reset-session");
    await flush();
    expect(textOf(root, "#output-view")).toBe("");
    expect(textOf(root, "#stack-view")).toBe("[]");
    expect(traceLineCount(root)).toBe(0);
    expect(currentLine(root)).toBe(0);

    // switch to the factorial workspace; the view remounts from its artifacts
    const picker = root.querySelector("#workspace-picker") as HTMLSelectElement;
    picker.value = fx.meta.factorialWorkspace;
    picker.dispatchEvent(new Event("change"));
    await flush();
    expect(listingLines(root).length).toBe(20);
    expect(listingLines(root)[0].textContent).toBe("0: READ");

    // no input queued: the READ starves and the UI asks for input
    click(root, "#open-session");
    await flush();
    click(root, "#run-to-end");
    await flush();

    const feedPrompt = root.querySelector("#feed-prompt") as HTMLElement;
    const trapBox = root.querySelector("#trap-box") as HTMLElement;
    const banner = root.querySelector("#interpret-banner") as HTMLElement;
    expect(feedPrompt.hidden).toBe(false);
    expect(feedPrompt.textContent).toContain("waiting for input");
    expect(feedPrompt.textContent).toContain("READ at pc 0 with no pending input");
    expect(trapBox.hidden).toBe(true);
    expect(banner.hidden).toBe(true);

    // non-integer input is rejected locally, without any request
    const feedBox = root.querySelector("#feed-box") as HTMLInputElement;
    feedBox.value = "not a number";
    click(root, "#feed-button");
    await flush();
    expect(feedBox.classList.contains("invalid")).toBe(true);

    // feeding 4 clears the prompt and queues the value
    feedBox.value = "4";
    click(root, "#feed-button");
    await flush();
    expect(feedBox.classList.contains("invalid")).toBe(false);
    expect(feedBox.value).toBe("");
    expect(feedPrompt.hidden).toBe(true);
    expect(textOf(root, "#input-queue")).toBe("pending input: 4");

    // with input available the program runs to completion
    click(root, "#run-to-end");
    await flush();
    expect(textOf(root, "#output-view")).toBe("24\n");
    expect(textOf(root, "#state-line")).toBe("pc: 19  steps: 63  halted: true  trace: 63");
    expect(traceLineCount(root)).toBe(63);

    const changed = [...root.querySelectorAll("#memory-view tr.cell-changed")];
    expect(changed.length).toBe(2);
    expect(changed.map((row) => row.textContent)).toEqual(["00", "124"]);

    expect(replay.remaining()).toEqual([]);
  });
});

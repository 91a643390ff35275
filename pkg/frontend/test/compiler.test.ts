import { describe, expect, test } from "vitest";
import { boot } from "../src/app.js";
import scenario from "./fixtures/compiler.json";
import { Scenario, click, flush, freshRoot, installReplay, offsetOf, textOf } from "./helpers.js";

interface CompilerMeta {
  workspace: string;
  goodSpecs: Record<string, string>;
  brokenScanner: string;
}

const fx = scenario as unknown as Scenario<CompilerMeta>;

function editor(root: HTMLElement, slot: string): HTMLTextAreaElement {
  return root.querySelector(`textarea[data-slot="${slot}"]`) as HTMLTextAreaElement;
}

function badgeTexts(root: HTMLElement): string[] {
  return [...root.querySelectorAll(".badge")].map((b) => b.textContent ?? "");
}

describe("compiler tab", () => {
  test("loads, reports spec diagnostics with line:col links, recompiles clean", async () => {
    const replay = installReplay(fx.entries);
    const root = freshRoot();
    await boot(root, { tab: "compiler" });

    // four labeled editors, initially empty because no slot text exists yet
    for (const slot of ["scanner", "parser", "contrainer", "generator"]) {
      expect(editor(root, slot)).not.toBeNull();
      expect(editor(root, slot).value).toBe("");
    }

    // badge strip shows the recorded status map verbatim
    const bootStatus = JSON.parse(fx.entries[1].body) as Record<string, string>;
    expect(badgeTexts(root)).toEqual(
      Object.entries(bootStatus).map(([stage, state]) => `${stage}: ${state}`));

    // paste a broken scanner plus three good definitions, save and compile
    editor(root, "scanner").value = fx.meta.brokenScanner;
    editor(root, "parser").value = fx.meta.goodSpecs["parser"];
    editor(root, "contrainer").value = fx.meta.goodSpecs["contrainer"];
    editor(root, "generator").value = fx.meta.goodSpecs["generator"];
    click(root, "#compile-all");
    await flush();

    const results = root.querySelector("#compile-results") as HTMLElement;
    expect(results.textContent).toContain("compile reported problems");
    expect(results.textContent).toContain("Scanner: failed");
    expect(results.textContent).toContain("Parser: fresh");

    // the diagnostic link carries the recorded code and position
    const report = JSON.parse(fx.entries[10].body);
    const diag = report.subfases[0].diagnostics[0];
    const link = results.querySelector(".diag-link") as HTMLAnchorElement;
    expect(link.textContent).toBe(`${diag.code} ${diag.line}:${diag.col}`);
    expect(results.textContent).toContain(diag.message);

    // clicking it moves the cursor to that line and column
    link.click();
    const scannerEditor = editor(root, "scanner");
    expect(document.activeElement).toBe(scannerEditor);
    expect(scannerEditor.selectionStart).toBe(
      offsetOf(fx.meta.brokenScanner, diag.line, diag.col));

    // badges follow the service: Scanner failed, the other three fresh
    const failedStatus = JSON.parse(fx.entries[11].body) as Record<string, string>;
    expect(badgeTexts(root)).toEqual(
      Object.entries(failedStatus).map(([stage, state]) => `${stage}: ${state}`));
    expect(badgeTexts(root)).toContain("Scanner: failed");

    // fix the scanner text and compile again
    editor(root, "scanner").value = fx.meta.goodSpecs["scanner"];
    click(root, "#compile-all");
    await flush();

    expect(textOf(root, "#compile-results")).toContain("compile succeeded");
    expect(badgeTexts(root)).toContain("Scanner: fresh");
    expect(badgeTexts(root)).toContain("Generator: fresh");

    expect(replay.remaining()).toEqual([]);
  });
});

/** Compiler tab: one editor per definition slot, save/compile controls,
 *  per-stage result cards with clickable line:col diagnostics. */
import { Api, BuildReport, Diagnostic, SPEC_SLOTS, SpecSlot, StageReport } from "./api.js";
import { el, fill } from "./dom.js";
import { diagnosticList, jumpTo } from "./widgets.js";

export interface ViewContext {
  api: Api;
  wsId: string;
  refreshBadges: () => Promise<void>;
}

const SLOT_LABELS: Record<SpecSlot, string> = {
  scanner: "scanner.scan",
  parser: "grammar.grm",
  contrainer: "constrain.con",
  generator: "codegen.gen",
};

const STAGE_SLOT: Record<string, SpecSlot> = {
  Scanner: "scanner",
  Parser: "parser",
  Contrainer: "contrainer",
  Generator: "generator",
};

function summaryLines(stage: StageReport): string[] {
  const skip = new Set(["name", "status", "diagnostics"]);
  const lines: string[] = [];
  for (const [key, value] of Object.entries(stage)) {
    if (skip.has(key)) continue;
    const shown = Array.isArray(value) ? value.join(", ") : String(value);
    lines.push(`${key}: ${shown}`);
  }
  return lines;
}

export async function mountCompiler(container: HTMLElement,
                                    ctx: ViewContext): Promise<void> {
  const editors = new Map<SpecSlot, HTMLTextAreaElement>();
  const editorColumn = el("div", { "class": "editor-column" });
  for (const slot of SPEC_SLOTS) {
    const editor = el("textarea", {
      "class": "editor", rows: "10", spellcheck: "false",
      "data-slot": slot, "aria-label": slot,
    });
    editors.set(slot, editor);
    const save = el("button", { "class": "save-one", "data-slot": slot }, "Save");
    save.addEventListener("click", async () => {
      await ctx.api.putSpec(ctx.wsId, slot, editor.value);
      await ctx.refreshBadges();
    });
    editorColumn.append(
      el("section", { "class": "slot-editor" },
         el("h3", {}, `${slot} `, el("code", {}, SLOT_LABELS[slot])),
         editor, save));
  }

  const compileButton = el("button", { id: "compile-all" }, "Save all & Compile");
  const results = el("div", { id: "compile-results" });

  compileButton.addEventListener("click", async () => {
    for (const slot of SPEC_SLOTS) {
      await ctx.api.putSpec(ctx.wsId, slot, editors.get(slot)!.value);
    }
    const reply = await ctx.api.compile(ctx.wsId);
    renderReport(reply.body);
    await ctx.refreshBadges();
  });

  function renderReport(report: BuildReport): void {
    const cards = report.subfases.map((stage) => {
      const card = el("div", { "class": `stage-card stage-${stage.status}` },
                      el("h4", {}, `${stage.name}: ${stage.status}`),
                      ...summaryLines(stage).map((line) =>
                        el("div", { "class": "summary-line" }, line)));
      const diags = (stage.diagnostics ?? []) as Diagnostic[];
      if (diags.length > 0) {
        card.append(diagnosticList(diags, (diag) => {
          const slot = STAGE_SLOT[stage.name];
          if (slot) jumpTo(editors.get(slot)!, diag.line, diag.col);
        }));
      }
      return card;
    });
    fill(results,
         el("div", { "class": report.ok ? "report-ok" : "report-bad" },
            report.ok ? "compile succeeded" : "compile reported problems"),
         ...cards);
  }

  fill(container, editorColumn, compileButton, results);

  for (const slot of SPEC_SLOTS) {
    const reply = await ctx.api.getSpec(ctx.wsId, slot);
    editors.get(slot)!.value = reply.body ?? "";
  }
}

/** Run tab: source editor, optimize toggle, and one panel per build stage
 *  in pipeline order, filled verbatim from the run report. */
import { BuildReport, Diagnostic, ErrorBody, StageReport, TokenRow, isError } from "./api.js";
import { el, fill } from "./dom.js";
import { ViewContext } from "./compiler.js";
import { diagnosticList, hideBanner, jumpTo, staleBanner } from "./widgets.js";

const RUN_STAGES = ["Source", "Scanning", "Parsing", "Constrain", "GenCode"];

function tokenTable(tokens: TokenRow[]): HTMLElement {
  const table = el("table", { "class": "token-table" });
  table.append(el("tr", {},
                  el("th", {}, "kind"), el("th", {}, "lexeme"),
                  el("th", {}, "line"), el("th", {}, "col")));
  for (const token of tokens) {
    table.append(el("tr", {},
                    el("td", {}, token.kind), el("td", {}, token.lexeme),
                    el("td", {}, String(token.line)),
                    el("td", {}, String(token.col))));
  }
  return table;
}

export async function mountRun(container: HTMLElement,
                               ctx: ViewContext): Promise<void> {
  const source = el("textarea", {
    id: "source-editor", "class": "editor", rows: "12",
    spellcheck: "false", "aria-label": "source",
  });
  const optimize = el("input", { type: "checkbox", id: "optimize-toggle" });
  optimize.checked = true;
  const runButton = el("button", { id: "run-button" }, "Run");
  const banner = el("div", { "class": "banner", id: "run-banner" });
  banner.hidden = true;

  const panels = new Map<string, HTMLElement>();
  const panelColumn = el("div", { "class": "panel-column" });
  for (const stage of RUN_STAGES) {
    const body = el("div", { "class": "panel-body", "data-stage": stage });
    panels.set(stage, body);
    panelColumn.append(el("section", { "class": "stage-panel" },
                          el("h3", {}, stage), body));
  }

  function renderStage(stage: StageReport): void {
    const body = panels.get(stage.name);
    if (!body) return;
    fill(body, el("div", { "class": "stage-status" },
                  `status: ${stage.status}`));
    const payload = stage as Record<string, unknown>;
    if (stage.name === "Source" && stage.status !== "absent") {
      body.append(el("div", {}, `chars: ${payload["chars"]}`),
                  el("div", {}, `lines: ${payload["lines"]}`));
    }
    if (stage.name === "Scanning" && Array.isArray(payload["tokens"])) {
      body.append(tokenTable(payload["tokens"] as TokenRow[]));
    }
    if (stage.name === "Parsing" && typeof payload["text"] === "string") {
      body.append(el("pre", { "class": "tree-text" }, payload["text"] as string));
    }
    if (stage.name === "Constrain" && typeof payload["text"] === "string") {
      body.append(el("pre", { "class": "tree-text" }, payload["text"] as string));
    }
    if (stage.name === "GenCode" && typeof payload["listing"] === "string") {
      body.append(el("pre", { "class": "listing" }, payload["listing"] as string),
                  el("div", {}, `optimized: ${payload["optimized"]}`));
    }
    const diags = (stage.diagnostics ?? []) as Diagnostic[];
    if (diags.length > 0) {
      body.append(diagnosticList(diags, (diag) => {
        jumpTo(source, diag.line, diag.col);
      }));
    }
  }

  runButton.addEventListener("click", async () => {
    await ctx.api.putSource(ctx.wsId, source.value);
    const reply = await ctx.api.run(ctx.wsId, optimize.checked);
    if (reply.status === 409 && isError(reply.body)) {
      staleBanner(banner, (reply.body as ErrorBody).error.subfases ?? []);
      return;
    }
    hideBanner(banner);
    const report = reply.body as BuildReport;
    for (const stage of report.subfases) {
      renderStage(stage);
    }
    await ctx.refreshBadges();
  });

  fill(container,
       el("section", { "class": "run-controls" },
          el("h3", {}, "source ", el("code", {}, "source.src")),
          source,
          el("label", { "class": "optimize-label" }, optimize, " optimize"),
          runButton),
       banner, panelColumn);

  const existing = await ctx.api.getSource(ctx.wsId);
  source.value = existing.body ?? "";
}

/** Shared rendering for badges, diagnostics, and stale-upstream banners.
 *  Text content always comes verbatim from the service. */
import { Diagnostic, StatusMap } from "./api.js";
import { el, fill } from "./dom.js";

export function renderBadges(strip: HTMLElement, status: StatusMap): void {
  fill(strip, ...Object.entries(status).map(([stage, state]) =>
    el("span", { "class": `badge badge-${state}`, "data-stage": stage },
       `${stage}: ${state}`)));
}

export function diagnosticList(
  diags: Diagnostic[],
  onJump: (diag: Diagnostic) => void,
): HTMLElement {
  const list = el("ul", { "class": "diagnostics" });
  for (const diag of diags) {
    const link = el("a", { "class": "diag-link", href: "#" },
                    `${diag.code} ${diag.line}:${diag.col}`);
    link.addEventListener("click", (event) => {
      event.preventDefault();
      onJump(diag);
    });
    list.append(el("li", {}, link, ` ${diag.message}`));
  }
  return list;
}

export function staleBanner(banner: HTMLElement, subfases: string[]): void {
  banner.hidden = false;
  fill(banner, el("strong", {}, "recompile first"),
       ` – stale: ${subfases.join(", ")}`);
}

export function hideBanner(banner: HTMLElement): void {
  banner.hidden = true;
  banner.textContent = "";
}

/** Move a textarea's cursor to a 1-based line/column position. */
export function jumpTo(editor: HTMLTextAreaElement, line: number, col: number): void {
  const lines = editor.value.split("\n");
  let offset = 0;
  for (let i = 0; i < Math.min(line - 1, lines.length); i++) {
    offset += lines[i].length + 1;
  }
  offset += Math.max(0, col - 1);
  editor.focus();
  editor.setSelectionRange(offset, offset);
}
